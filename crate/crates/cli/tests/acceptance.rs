//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured values. Tolerances and runtime budgets are pinned in the
//! asserts.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use coalfrag_cli::commands;
use coalfrag_cli::config::*;
use coalfrag_core::coalescent::{self, MassVector};
use coalfrag_core::dynamics::{
    self, duality_params, edge_joint_law_coal, edge_joint_law_frag, ProcessMode, ProcessSpec,
};
use coalfrag_core::graph::{pair_count, GraphState};
use coalfrag_core::metric;
use coalfrag_core::{rng, stats};

/// lambda solving p_critical(lambda, n) = p.
fn lambda_for(n: u32, p: f64) -> f64 {
    let nf = f64::from(n);
    (p - 1.0 / nf) * nf * nf.cbrt()
}

#[test]
fn criterion_01_duality_exact_law_grid() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (gamma_plus, gamma_minus) in [(1.0, 1.0), (0.37, 2.5)] {
        for i in 1..=20u32 {
            for j in i..=20u32 {
                let p = f64::from(i) / 21.0;
                let p_prime = f64::from(j) / 21.0;
                let (t, t_prime) = duality_params(p, p_prime, gamma_plus, gamma_minus).unwrap();
                let coal = edge_joint_law_coal(p, gamma_plus, t);
                let frag = edge_joint_law_frag(p_prime, gamma_minus, t_prime);
                for (a, b) in coal.cells().iter().zip(frag.cells()) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(worst <= 1e-12, "worst entrywise gap {worst}");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!("criterion 01 PASS: duality laws agree entrywise to {worst:.2e} over the 20x20 grid in {elapsed:?}");
}

#[test]
fn criterion_02_duality_simulation() {
    let start = Instant::now();
    let replicas = 10_000u32;
    let report = dynamics::duality_experiment(50, 0.0, 1.0, replicas, 20_260_802).unwrap();
    let total = u64::from(replicas) * pair_count(50);
    let mut worst_z: f64 = 0.0;
    for (cells, law) in [
        (&report.forward_cells, report.expected_forward),
        (&report.backward_cells, report.expected_backward),
    ] {
        for (idx, &count) in cells.iter().enumerate() {
            let freq = count as f64 / total as f64;
            let expect = law.cells()[idx];
            if expect == 0.0 {
                assert_eq!(count, 0, "cell {idx} must be empty");
                continue;
            }
            let sigma = stats::binomial_freq_sigma(expect, total);
            worst_z = worst_z.max((freq - expect).abs() / sigma);
            assert!(
                (freq - expect).abs() <= 3.0 * sigma,
                "cell {idx}: {freq} vs {expect} (sigma {sigma})"
            );
        }
    }
    assert!(
        report.ks_low.1 > 0.01,
        "low-density KS p-value {}",
        report.ks_low.1
    );
    assert!(
        report.ks_high.1 > 0.01,
        "high-density KS p-value {}",
        report.ks_high.1
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "criterion 02 PASS: cells within 3 sigma (worst z = {worst_z:.2}), KS p-values {:.3}/{:.3} in {elapsed:?}",
        report.ks_low.1, report.ks_high.1
    );
}

#[test]
fn criterion_03_dynamical_percolation_stationarity() {
    let start = Instant::now();
    let n = 100u32;
    let p = 0.3;
    let replicas = 10_000u32;
    let horizon = 2.0;
    let lambda = lambda_for(n, p);
    let spec = ProcessSpec {
        mode: ProcessMode::DynamicalPercolation,
        rate: 1.0,
        p_refresh: Some(p),
        horizon,
        snapshot_times: vec![horizon],
        record_edges: false,
    };
    let edges_at_horizon: u64 = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let rep = rng::replica_seed(30_082_026, u64::from(r));
            let g = GraphState::sample_er(n, lambda, rng::derive(rep, "graph")).unwrap();
            let traj = dynamics::run(&g, &spec, rng::derive(rep, "run")).unwrap();
            traj.snapshots[0].edge_count as u64
        })
        .sum();
    let total = u64::from(replicas) * pair_count(n);
    let freq = edges_at_horizon as f64 / total as f64;
    let sigma = stats::binomial_freq_sigma(p, total);
    let elapsed = start.elapsed();
    assert!(
        (freq - p).abs() <= 3.0 * sigma,
        "stationary frequency {freq} vs {p} (sigma {sigma})"
    );
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!(
        "criterion 03 PASS: stationary edge frequency {freq:.6} vs p = {p} (|z| = {:.2}) in {elapsed:?}",
        (freq - p).abs() / sigma
    );
}

#[test]
fn criterion_04_tail_bound() {
    // exact two-block case: P(S > 3) = 1 - e^{-0.1} <= 0.6
    let x = MassVector::new(vec![1.0, 1.0]).unwrap();
    let row = coalescent::check_lemma20(&x, 0.1, 3.0, 10_000, 4).unwrap();
    assert!((row.bound - 0.6).abs() < 1e-12);
    let exact = 1.0 - (-0.1f64).exp();
    assert!(
        stats::within_k_sigma(row.statistic, exact, 10_000, 3.0),
        "estimate {} vs exact {exact}",
        row.statistic
    );
    assert!(row.pass);

    // 20 random mass vectors, each within bound + 3 sigma at 1e4 replicas
    let mut gen = rng::stream(41, "tail-bound-acceptance");
    let mut failures = 0;
    for i in 0..20u64 {
        let len = gen.gen_range(2..=10usize);
        let x = MassVector::new((0..len).map(|_| gen.gen_range(0.1..1.5)).collect()).unwrap();
        let t = gen.gen_range(0.02..0.3);
        let s = x.l2_squared() * gen.gen_range(1.5..4.0);
        let row = coalescent::check_lemma20(&x, t, s, 10_000, rng::derive(42, "inst") ^ i).unwrap();
        if !row.pass {
            failures += 1;
        }
    }
    assert_eq!(failures, 0, "{failures}/20 tail-bound instances failed");
    println!(
        "criterion 04 PASS: exact two-block tail {:.4} <= 0.6 and 20/20 random instances within bound + 3 sigma",
        exact
    );
}

#[test]
fn criterion_05_exhaustive_inequalities() {
    let start = Instant::now();
    let monotone = coalescent::check_pour_skor_l2(500, 8, 50).unwrap();
    let perturbation = coalescent::check_lemma17(500, 10, 51).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(monotone.len(), 500);
    assert_eq!(perturbation.len(), 500);
    assert!(
        monotone.iter().all(|r| r.pass),
        "monotone-difference failures"
    );
    assert!(
        perturbation.iter().all(|r| r.pass),
        "size-perturbation failures"
    );
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "criterion 05 PASS: 500/500 monotone-difference and 500/500 size-perturbation instances verified in {elapsed:?}"
    );
}

#[test]
fn criterion_06_structure_theorem() {
    let start = Instant::now();
    let n = 2000u32;
    let g = GraphState::sample_er(n, 0.0, rng::derive(60, "mass-vector")).unwrap();
    let x = MassVector::new(g.sizes_rescaled().values().to_vec()).unwrap();
    let replicas = 2000u32;
    let horizon = 1.0;
    let mut reported = Vec::new();
    for (ei, epsilon) in [0.2, 0.1].into_iter().enumerate() {
        let thresholds = coalescent::thresholds(
            &x,
            epsilon,
            horizon,
            10_000,
            rng::derive(61, "thr") ^ ei as u64,
        )
        .unwrap();
        let failures: u32 = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let seed = rng::replica_seed(rng::derive(62, "classify") ^ ei as u64, u64::from(r));
                u32::from(
                    coalescent::classify_structure(&x, horizon, &thresholds, seed)
                        .violations
                        .any(),
                )
            })
            .sum();
        let rate = f64::from(failures) / f64::from(replicas);
        let sigma = (epsilon * (1.0 - epsilon) / f64::from(replicas)).sqrt();
        assert!(
            rate <= epsilon + 3.0 * sigma,
            "eps {epsilon}: failure rate {rate}"
        );
        reported.push((epsilon, rate));
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "criterion 06 PASS: flag failure rates {:?} within the epsilon + 3 sigma budget in {elapsed:?}",
        reported
    );
}

#[test]
#[allow(clippy::needless_range_loop)]
fn criterion_07_block_multigraph_marginals() {
    let x = MassVector::new(vec![1.0, 0.8, 0.7, 0.5, 0.4, 0.3]).unwrap();
    let replicas = 10_000u32;
    let mut worst_z: f64 = 0.0;
    for (ti, t) in [0.5, 2.0].into_iter().enumerate() {
        let mut present = vec![vec![0u32; 6]; 6];
        for r in 0..replicas {
            let seed = rng::replica_seed(rng::derive(70, "marginal") ^ ti as u64, u64::from(r));
            let mg = coalescent::sample_mg(&x, t, seed);
            for i in 0..6u32 {
                for j in (i + 1)..6u32 {
                    if mg.has_pair(i, j) {
                        present[i as usize][j as usize] += 1;
                    }
                }
            }
        }
        for i in 0..6usize {
            for j in (i + 1)..6usize {
                let expect = 1.0 - (-t * x.values()[i] * x.values()[j]).exp();
                let freq = f64::from(present[i][j]) / f64::from(replicas);
                let sigma = stats::binomial_freq_sigma(expect, u64::from(replicas));
                worst_z = worst_z.max((freq - expect).abs() / sigma);
                assert!(
                    (freq - expect).abs() <= 3.0 * sigma,
                    "t={t} pair ({i},{j}): {freq} vs {expect}"
                );
            }
        }
    }
    println!(
        "criterion 07 PASS: all 15 pair frequencies within 3 sigma at t in {{0.5, 2}} (worst z = {worst_z:.2})"
    );
}

#[test]
fn criterion_08_metric_axioms() {
    #[allow(clippy::needless_range_loop)]
    fn random_space(rng: &mut impl Rng, max_points: usize) -> metric::FiniteMeasuredSpace {
        let k = rng.gen_range(1..=max_points);
        let mut dist = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in (i + 1)..k {
                let d = rng.gen_range(0.2..3.0);
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        for l in 0..k {
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        let via = dist[i][l] + dist[l][j];
                        if via < dist[i][j] {
                            dist[i][j] = via;
                            dist[j][i] = via;
                        }
                    }
                }
            }
        }
        let mass = (0..k).map(|_| rng.gen_range(0.1..2.0)).collect();
        metric::FiniteMeasuredSpace::new(dist, mass, None).unwrap()
    }

    // symmetry, identity, triangle inequality on 1000 random triples
    let mut gen = rng::stream(80, "metric-triples");
    for _ in 0..1000 {
        let a = random_space(&mut gen, 3);
        let b = random_space(&mut gen, 3);
        let c = random_space(&mut gen, 3);
        assert!(metric::dghp_exact(&a, &a).unwrap().abs() < 1e-9);
        let ab = metric::dghp_exact(&a, &b).unwrap();
        let ba = metric::dghp_exact(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-9, "symmetry: {ab} vs {ba}");
        let ac = metric::dghp_exact(&a, &c).unwrap();
        let cb = metric::dghp_exact(&c, &b).unwrap();
        assert!(ab <= ac + cb + 1e-9, "triangle: {ab} > {ac} + {cb}");
    }

    // bounds sandwich on 200 random pairs of <= 4-point spaces
    let mut gen = rng::stream(81, "metric-sandwich");
    for _ in 0..200 {
        let a = random_space(&mut gen, 4);
        let b = random_space(&mut gen, 4);
        let (lower, upper) = metric::dghp_bounds(&a, &b);
        let exact = metric::dghp_exact(&a, &b).unwrap();
        assert!(
            lower <= exact + 1e-9 && exact <= upper + 1e-9,
            "sandwich: {lower} <= {exact} <= {upper}"
        );
    }

    // one-point spaces reproduce the mass gap exactly
    for (ma, mb) in [(1.0, 3.0), (0.25, 0.125), (2.0, 2.0)] {
        let a = metric::FiniteMeasuredSpace::new(vec![vec![0.0]], vec![ma], None).unwrap();
        let b = metric::FiniteMeasuredSpace::new(vec![vec![0.0]], vec![mb], None).unwrap();
        let d = metric::dghp_exact(&a, &b).unwrap();
        assert!(
            (d - (ma - mb).abs()).abs() <= 1e-12,
            "{d} vs {}",
            (ma - mb).abs()
        );
    }
    println!(
        "criterion 08 PASS: symmetry/identity/triangle on 1000 triples, bounds sandwich on 200 pairs, one-point gaps exact"
    );
}

#[test]
fn criterion_09_conservation_and_determinism() {
    // conservation at every snapshot of every mode
    let n = 100u32;
    let expect = f64::from(n).cbrt();
    let snaps = vec![0.5, 1.0, 1.5, 2.0];
    for mode in [ModeArg::Coal, ModeArg::Frag, ModeArg::Dynperc] {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = SimulateConfig {
            n,
            lambda: 0.0,
            mode,
            rate: None,
            p_refresh: None,
            t_max: 2.0,
            snapshots: snaps.clone(),
            replicas: 5,
            seed: 90,
            out: tmp.path().to_path_buf(),
            format: FormatArg::Csv,
            full_state: false,
        };
        let out = commands::simulate(&cfg).unwrap();
        for traj in &out.trajectories {
            for snap in &traj.snapshots {
                let total = snap.total_size();
                assert!(
                    (total - expect).abs() <= 1e-12,
                    "{mode:?}: total {total} vs {expect}"
                );
                let vertices: u32 = snap.components.iter().map(|c| c.n_vertices).sum();
                assert_eq!(vertices, n);
            }
        }
    }

    // identical seeds -> byte-identical trajectory files
    let tmp = tempfile::tempdir().unwrap();
    let mk = |dir: std::path::PathBuf| SimulateConfig {
        n,
        lambda: 0.5,
        mode: ModeArg::Dynperc,
        rate: None,
        p_refresh: None,
        t_max: 1.0,
        snapshots: vec![0.5, 1.0],
        replicas: 3,
        seed: 91,
        out: dir,
        format: FormatArg::Csv,
        full_state: true,
    };
    commands::simulate(&mk(tmp.path().join("a"))).unwrap();
    commands::simulate(&mk(tmp.path().join("b"))).unwrap();
    for r in 0..3 {
        let name = format!("replica_{r:04}.jsonl");
        let a = std::fs::read(tmp.path().join("a").join(&name)).unwrap();
        let b = std::fs::read(tmp.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b, "{name} not byte-identical");
    }
    println!(
        "criterion 09 PASS: every snapshot conserves total mass to 1e-12 and reruns are byte-identical"
    );
}

#[test]
fn criterion_10_convergence_trend() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = ConvergenceConfig {
        n_list: vec![500, 2000, 8000],
        lambda: 0.0,
        replicas: 500,
        seed: 100,
        out: tmp.path().to_path_buf(),
    };
    let report = commands::convergence(&cfg).unwrap();
    let ks: Vec<f64> = report
        .rows
        .iter()
        .filter_map(|r| r.ks_to_previous)
        .collect();
    let elapsed = start.elapsed();
    assert!(
        report.ks_non_increasing,
        "KS sequence not non-increasing: {ks:?}"
    );
    assert!(elapsed.as_secs_f64() < 900.0, "took {elapsed:?}");
    println!(
        "criterion 10 PASS: consecutive KS distances {ks:?} are non-increasing in {elapsed:?}"
    );
}

#[test]
fn criterion_11_performance_dynperc_n1e4() {
    let n = 10_000u32;
    let snaps: Vec<f64> = (1..=10).map(|i| f64::from(i) * 0.2).collect();
    let g = GraphState::sample_er(n, 0.0, 110).unwrap();
    let spec = ProcessSpec::dynamical_percolation_critical(n, 0.0, 2.0, snaps);
    let start = Instant::now();
    let traj = dynamics::run(&g, &spec, 111).unwrap();
    let elapsed = start.elapsed();
    assert_eq!(traj.snapshots.len(), 10);
    assert!(
        elapsed.as_secs_f64() < 60.0,
        "single replica took {elapsed:?}"
    );
    println!(
        "criterion 11 PASS: dynamical percolation at n = 10^4, T = 2, 10 snapshots ran in {elapsed:?} ({} events)",
        traj.event_count
    );
}
