//! Experiment orchestration: replica fan-out, aggregation and report files.

use std::fs;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use coalfrag_core::coalescent::{self, LemmaCheckRow, MassVector};
use coalfrag_core::dynamics::{self, ProcessSpec, Trajectory};
use coalfrag_core::graph::{self, GraphState};
use coalfrag_core::metric::{self, Collection, FiniteMeasuredSpace, GhpMode};
use coalfrag_core::structure;
use coalfrag_core::{rng, stats};

use crate::config::*;
use crate::output::{self, num, Csv};

/// Samples the critical graph and writes one snapshot file at time zero.
pub fn sample(cfg: &SampleConfig) -> Result<()> {
    let state = GraphState::sample_er(cfg.n, cfg.lambda, cfg.seed)?;
    if let Some(parent) = cfg.out.parent() {
        fs::create_dir_all(parent)?;
    }
    graph::write_snapshot(&state, 0.0, &cfg.out)?;
    if let Some(dir) = cfg.out.parent() {
        output::write_meta(dir, "sample", cfg, cfg.seed, &[])?;
    }
    Ok(())
}

fn build_spec(cfg: &SimulateConfig) -> ProcessSpec {
    let base = match cfg.mode {
        ModeArg::Coal => ProcessSpec::coalescence_critical(cfg.n, cfg.t_max, cfg.snapshots.clone()),
        ModeArg::Frag => {
            ProcessSpec::fragmentation_critical(cfg.n, cfg.t_max, cfg.snapshots.clone())
        }
        ModeArg::Dynperc => ProcessSpec::dynamical_percolation_critical(
            cfg.n,
            cfg.lambda,
            cfg.t_max,
            cfg.snapshots.clone(),
        ),
    };
    let mut spec = ProcessSpec {
        rate: cfg.rate.unwrap_or(base.rate),
        p_refresh: match cfg.mode {
            ModeArg::Dynperc => cfg.p_refresh.or(base.p_refresh),
            _ => None,
        },
        ..base
    };
    if cfg.full_state {
        spec = spec.with_recorded_edges();
    }
    spec
}

/// Largest-component statistics of one snapshot row in the aggregate table.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub time: f64,
    pub mean_largest_size: f64,
    pub q25_largest_size: f64,
    pub median_largest_size: f64,
    pub q75_largest_size: f64,
    pub max_largest_size: f64,
    pub mean_largest_surplus: f64,
    pub max_largest_surplus: u32,
    pub mean_largest_diameter: f64,
    pub max_largest_diameter: f64,
}

pub struct SimulateOutput {
    pub trajectories: Vec<Trajectory>,
    pub aggregate: Vec<AggregateRow>,
}

/// Runs the replicas (replica `i` depends only on `(seed, i)`), writes one
/// JSONL trajectory per replica plus the aggregate summary.
pub fn simulate(cfg: &SimulateConfig) -> Result<SimulateOutput> {
    let spec = build_spec(cfg);
    spec.validate()?;
    let trajectories: Vec<Trajectory> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| -> Result<Trajectory> {
            let rep = rng::replica_seed(cfg.seed, u64::from(r));
            let g0 = GraphState::sample_er(cfg.n, cfg.lambda, rng::derive(rep, "graph"))?;
            Ok(dynamics::run(&g0, &spec, rng::derive(rep, "run"))?)
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(&cfg.out)?;
    for (r, traj) in trajectories.iter().enumerate() {
        fs::write(
            cfg.out.join(format!("replica_{r:04}.jsonl")),
            traj.to_jsonl(),
        )?;
    }

    let aggregate: Vec<AggregateRow> = cfg
        .snapshots
        .iter()
        .enumerate()
        .map(|(si, &time)| {
            let mut sizes: Vec<f64> = trajectories
                .iter()
                .map(|t| t.snapshots[si].largest().size)
                .collect();
            let surpluses: Vec<u32> = trajectories
                .iter()
                .map(|t| t.snapshots[si].largest().surplus)
                .collect();
            let diameters: Vec<f64> = trajectories
                .iter()
                .map(|t| t.snapshots[si].largest().diameter)
                .collect();
            let (mean_size, _) = stats::mean_and_se(&sizes);
            let (mean_diam, _) = stats::mean_and_se(&diameters);
            AggregateRow {
                time,
                mean_largest_size: mean_size,
                q25_largest_size: stats::quantile(&mut sizes.clone(), 0.25),
                median_largest_size: stats::quantile(&mut sizes.clone(), 0.5),
                q75_largest_size: stats::quantile(&mut sizes.clone(), 0.75),
                max_largest_size: stats::quantile(&mut sizes, 1.0),
                mean_largest_surplus: surpluses.iter().map(|&s| f64::from(s)).sum::<f64>()
                    / surpluses.len() as f64,
                max_largest_surplus: surpluses.iter().copied().max().unwrap_or(0),
                mean_largest_diameter: mean_diam,
                max_largest_diameter: diameters.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect();

    match cfg.format {
        FormatArg::Csv => {
            let mut csv = Csv::new(&[
                "time",
                "mean_largest_size",
                "q25_largest_size",
                "median_largest_size",
                "q75_largest_size",
                "max_largest_size",
                "mean_largest_surplus",
                "max_largest_surplus",
                "mean_largest_diameter",
                "max_largest_diameter",
            ]);
            for row in &aggregate {
                csv.row(&[
                    num(row.time),
                    num(row.mean_largest_size),
                    num(row.q25_largest_size),
                    num(row.median_largest_size),
                    num(row.q75_largest_size),
                    num(row.max_largest_size),
                    num(row.mean_largest_surplus),
                    row.max_largest_surplus.to_string(),
                    num(row.mean_largest_diameter),
                    num(row.max_largest_diameter),
                ]);
            }
            csv.write(&cfg.out.join("aggregate.csv"))?;
        }
        FormatArg::Jsonl => {
            let mut buf = String::new();
            for row in &aggregate {
                buf.push_str(&serde_json::to_string(row)?);
                buf.push('\n');
            }
            fs::write(cfg.out.join("aggregate.jsonl"), buf)?;
        }
    }
    output::write_meta(&cfg.out, "simulate", cfg, cfg.seed, &[])?;
    Ok(SimulateOutput {
        trajectories,
        aggregate,
    })
}

/// Per-component anatomy of one sampled graph: summary statistics, 2-core
/// size, trimming, path-length bound, and kernel exports for surplus >= 2.
pub fn structure_report(cfg: &StructureConfig) -> Result<()> {
    let state = GraphState::sample_er(cfg.n, cfg.lambda, cfg.seed)?;
    fs::create_dir_all(&cfg.out)?;
    let mut csv = Csv::new(&[
        "component",
        "n_vertices",
        "n_edges",
        "surplus",
        "size",
        "diameter",
        "height",
        "two_core_size",
        "trimmed_size",
        "suplength_bound",
        "suplength_exact",
    ]);
    for c in state.components() {
        let core = structure::two_core(&state, c.id)?;
        let trimmed = match cfg.eta {
            Some(eta) if !core.is_empty() => {
                let kept = structure::trim_hanging(&state, c.id, eta * state.length_per_edge())?;
                kept.len().to_string()
            }
            _ => String::new(),
        };
        let rep = structure::suplength_bound(&c);
        let exact = if c.surplus <= 1 {
            num(structure::suplength_exact(&state, c.id)?)
        } else {
            String::new()
        };
        if c.surplus >= 2 {
            let kernel = structure::kernel(&state, c.id)?;
            fs::write(
                cfg.out.join(format!("kernel_{}.json", c.id)),
                format!("{}\n", kernel.to_json()),
            )?;
        }
        csv.row(&[
            c.id.to_string(),
            c.n_vertices.to_string(),
            c.n_edges.to_string(),
            c.surplus.to_string(),
            num(c.size),
            num(c.diameter),
            num(c.height),
            core.len().to_string(),
            trimmed,
            num(rep.bound),
            exact,
        ]);
    }
    csv.write(&cfg.out.join("components.csv"))?;
    output::write_meta(&cfg.out, "structure", cfg, cfg.seed, &[])?;
    Ok(())
}

/// Runs the two-direction comparison and writes the cell table and the
/// marginal samples.
pub fn duality_test(cfg: &DualityConfig) -> Result<dynamics::DualityReport> {
    let report =
        dynamics::duality_experiment(cfg.n, cfg.lambda, cfg.shift, cfg.replicas, cfg.seed)?;
    fs::create_dir_all(&cfg.out)?;
    let total = u64::from(cfg.replicas) * graph::pair_count(cfg.n);
    let mut csv = Csv::new(&[
        "direction",
        "cell",
        "count",
        "frequency",
        "expected",
        "sigma",
    ]);
    let dirs = [
        ("forward", &report.forward_cells, report.expected_forward),
        ("backward", &report.backward_cells, report.expected_backward),
    ];
    for (name, cells, law) in dirs {
        for (idx, label) in ["00", "01", "10", "11"].iter().enumerate() {
            let freq = cells[idx] as f64 / total as f64;
            let expected = law.cells()[idx];
            csv.row(&[
                name.to_string(),
                (*label).to_string(),
                cells[idx].to_string(),
                num(freq),
                num(expected),
                num(stats::binomial_freq_sigma(expected, total)),
            ]);
        }
    }
    csv.write(&cfg.out.join("cells.csv"))?;
    fs::write(
        cfg.out.join("report.json"),
        format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    output::write_meta(&cfg.out, "duality-test", cfg, cfg.seed, &[])?;
    Ok(report)
}

/// Flag failure rates of the structure classifier at each grid time.
#[derive(Debug, Clone, Serialize)]
pub struct McStructureRow {
    pub time: f64,
    pub replicas: u32,
    pub failures_a: u32,
    pub failures_b: u32,
    pub failures_c: u32,
    pub failures_d: u32,
    pub failures_e: u32,
    pub failures_any: u32,
    pub failure_rate: f64,
}

pub struct McStructureOutput {
    pub thresholds: coalescent::Thresholds,
    pub rows: Vec<McStructureRow>,
}

/// Builds the mass vector from a critical graph sample, derives thresholds,
/// and classifies replicas of the block multigraph on the time grid.
pub fn mc_structure(cfg: &McStructureConfig) -> Result<McStructureOutput> {
    let state = GraphState::sample_er(cfg.n, cfg.lambda, rng::derive(cfg.seed, "mass-vector"))?;
    let x = MassVector::new(state.sizes_rescaled().values().to_vec())?;
    let thresholds = coalescent::thresholds(
        &x,
        cfg.epsilon,
        cfg.t_max,
        cfg.k_samples,
        rng::derive(cfg.seed, "thresholds"),
    )?;
    let grid: Vec<f64> = if cfg.snapshots.is_empty() {
        vec![cfg.t_max]
    } else {
        cfg.snapshots.clone()
    };
    fs::create_dir_all(&cfg.out)?;
    // full reports: replica 0 per grid time, plus every violating replica
    // (capped), one JSON object per line
    let mut report_lines: Vec<String> = Vec::new();
    let mut violation_lines: Vec<String> = Vec::new();
    let rows: Vec<McStructureRow> = grid
        .iter()
        .enumerate()
        .map(|(gi, &t)| {
            let reports: Vec<coalescent::StructureReport> = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let seed = rng::replica_seed(
                        rng::derive(cfg.seed, "classify") ^ gi as u64,
                        u64::from(r),
                    );
                    coalescent::classify_structure(&x, t, &thresholds, seed)
                })
                .collect();
            report_lines.push(serde_json::to_string(&reports[0]).expect("serializes"));
            for report in &reports {
                if report.violations.any() && violation_lines.len() < 100 {
                    violation_lines.push(serde_json::to_string(report).expect("serializes"));
                }
            }
            let count = |f: fn(&coalescent::FlagViolations) -> bool| {
                reports.iter().filter(|rep| f(&rep.violations)).count() as u32
            };
            let any = count(coalescent::FlagViolations::any);
            McStructureRow {
                time: t,
                replicas: cfg.replicas,
                failures_a: count(|v| v.a),
                failures_b: count(|v| v.b),
                failures_c: count(|v| v.c),
                failures_d: count(|v| v.d),
                failures_e: count(|v| v.e),
                failures_any: any,
                failure_rate: f64::from(any) / f64::from(cfg.replicas),
            }
        })
        .collect();
    fs::write(
        cfg.out.join("reports.jsonl"),
        format!("{}\n", report_lines.join("\n")),
    )?;
    if !violation_lines.is_empty() {
        fs::write(
            cfg.out.join("violations.jsonl"),
            format!("{}\n", violation_lines.join("\n")),
        )?;
    }
    let mut csv = Csv::new(&[
        "time",
        "replicas",
        "failures_a",
        "failures_b",
        "failures_c",
        "failures_d",
        "failures_e",
        "failures_any",
        "failure_rate",
    ]);
    for row in &rows {
        csv.row(&[
            num(row.time),
            row.replicas.to_string(),
            row.failures_a.to_string(),
            row.failures_b.to_string(),
            row.failures_c.to_string(),
            row.failures_d.to_string(),
            row.failures_e.to_string(),
            row.failures_any.to_string(),
            num(row.failure_rate),
        ]);
    }
    csv.write(&cfg.out.join("flag_rates.csv"))?;
    fs::write(
        cfg.out.join("thresholds.json"),
        format!("{}\n", serde_json::to_string_pretty(&thresholds)?),
    )?;
    output::write_meta(&cfg.out, "mc-structure", cfg, cfg.seed, &[])?;
    Ok(McStructureOutput { thresholds, rows })
}

pub struct LemmaCheckOutput {
    pub rows: Vec<(String, LemmaCheckRow)>,
    pub all_pass: bool,
}

/// Runs the selected inequality checks and writes one CSV row per instance.
/// The caller maps `all_pass == false` to exit code 3.
pub fn lemma_check(cfg: &LemmaCheckConfig) -> Result<LemmaCheckOutput> {
    let mut rows: Vec<(String, LemmaCheckRow)> = Vec::new();
    let wants = |l: LemmaArg| cfg.lemma == l || cfg.lemma == LemmaArg::All;

    if wants(LemmaArg::TailBound) {
        let mut rng = rng::stream(cfg.seed, "tail-bound-instances");
        use rand::Rng;
        for i in 0..cfg.instances.min(20) {
            let len = rng.gen_range(2..=10usize);
            let x = MassVector::new((0..len).map(|_| rng.gen_range(0.1..1.5)).collect())?;
            let t = rng.gen_range(0.02..0.3);
            let s = x.l2_squared() * rng.gen_range(1.5..4.0);
            let mut row = coalescent::check_lemma20(
                &x,
                t,
                s,
                cfg.replicas,
                rng::derive(cfg.seed, "tail-bound") ^ u64::from(i),
            )?;
            row.instance = i;
            rows.push(("tail_bound".into(), row));
        }
    }
    if wants(LemmaArg::Bipartite) {
        let mut rng = rng::stream(cfg.seed, "bipartite-instances");
        use rand::Rng;
        for i in 0..cfg.instances.min(20) {
            let len = rng.gen_range(3..=8usize);
            let z: Vec<f64> = (0..len).map(|_| rng.gen_range(0.1..1.0)).collect();
            let m = rng.gen_range(1..len);
            let t = rng.gen_range(0.1..1.0);
            let eps = rng.gen_range(0.2..1.0);
            let mut row = coalescent::check_lemma23(
                &z,
                m,
                t,
                eps,
                cfg.replicas,
                rng::derive(cfg.seed, "bipartite") ^ u64::from(i),
            )?;
            row.instance = i;
            rows.push(("bipartite".into(), row));
        }
    }
    if wants(LemmaArg::SizePerturbation) {
        for row in coalescent::check_lemma17(
            cfg.instances,
            10,
            rng::derive(cfg.seed, "size-perturbation"),
        )? {
            rows.push(("size_perturbation".into(), row));
        }
    }
    if wants(LemmaArg::MonotoneDifference) {
        for row in coalescent::check_pour_skor_l2(
            cfg.instances,
            8,
            rng::derive(cfg.seed, "monotone-difference"),
        )? {
            rows.push(("monotone_difference".into(), row));
        }
    }

    fs::create_dir_all(&cfg.out)?;
    let mut csv = Csv::new(&["check", "instance", "statistic", "bound", "pass"]);
    for (name, row) in &rows {
        csv.row(&[
            name.clone(),
            row.instance.to_string(),
            num(row.statistic),
            num(row.bound),
            row.pass.to_string(),
        ]);
    }
    csv.write(&cfg.out.join("lemma_checks.csv"))?;
    output::write_meta(&cfg.out, "lemma-check", cfg, cfg.seed, &[])?;
    let all_pass = rows.iter().all(|(_, r)| r.pass);
    Ok(LemmaCheckOutput { rows, all_pass })
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GhpReport {
    Spaces {
        mode: String,
        value: metric::GhpValue,
        surplus_value: Option<f64>,
    },
    Collections {
        l_ghp: metric::LGhp,
        rho_lp: metric::RhoLp,
        l1_ghp: f64,
        l2_ghp: f64,
    },
}

/// Distance between two space files (objects) or collection files (arrays).
pub fn ghp(cfg: &GhpConfig) -> Result<GhpReport> {
    let raw_a = fs::read_to_string(&cfg.file_a)
        .with_context(|| format!("reading {}", cfg.file_a.display()))?;
    let raw_b = fs::read_to_string(&cfg.file_b)
        .with_context(|| format!("reading {}", cfg.file_b.display()))?;
    let a_is_collection = raw_a.trim_start().starts_with('[');
    let b_is_collection = raw_b.trim_start().starts_with('[');
    if a_is_collection != b_is_collection {
        bail!("cannot compare a single space against a collection");
    }
    let report = if a_is_collection {
        let a = Collection::from_json(&raw_a)?;
        let b = Collection::from_json(&raw_b)?;
        GhpReport::Collections {
            l_ghp: metric::l_ghp(&a, &b, 1e-9),
            rho_lp: metric::rho_lp(&a, &b, None, 1e-9),
            l1_ghp: metric::lp_ghp(&a, &b, 1, 1e-9),
            l2_ghp: metric::lp_ghp(&a, &b, 2, 1e-9),
        }
    } else {
        let a = FiniteMeasuredSpace::from_json(&raw_a)?;
        let b = FiniteMeasuredSpace::from_json(&raw_b)?;
        let mode = match cfg.mode {
            GhpModeArg::Exact => GhpMode::Exact,
            GhpModeArg::Bounds => GhpMode::Bounds,
        };
        let value = metric::dghp(&a, &b, mode)?;
        let surplus_value = match (cfg.mode, a.surplus(), b.surplus()) {
            (GhpModeArg::Exact, Some(_), Some(_)) => Some(metric::dghp_surplus(&a, &b)?),
            _ => None,
        };
        GhpReport::Spaces {
            mode: format!("{:?}", cfg.mode).to_lowercase(),
            value,
            surplus_value,
        }
    };
    let rendered = format!("{}\n", serde_json::to_string_pretty(&report)?);
    match &cfg.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, &rendered)?;
            if let Some(dir) = path.parent() {
                output::write_meta(dir, "ghp", cfg, 0, &[&cfg.file_a, &cfg.file_b])?;
            }
        }
        None => print!("{rendered}"),
    }
    Ok(report)
}

/// One row of the convergence study.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceRow {
    pub n: u32,
    pub replicas: u32,
    pub mean_largest_size: f64,
    pub mean_largest_surplus: f64,
    pub mean_largest_diameter: f64,
    /// Mean of |sizes|_2^2, the same statistic the block coalescent tracks.
    pub mean_l2_squared: f64,
    /// Two-sample KS distance of the largest-size sample against the
    /// previous (smaller) n; absent on the first row.
    pub ks_to_previous: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Consecutive KS distances never increase along the n grid.
    pub ks_non_increasing: bool,
}

/// Distributional stability across the n grid: per-n samples of the largest
/// component's (size, surplus, diameter) plus successive KS distances.
pub fn convergence(cfg: &ConvergenceConfig) -> Result<ConvergenceReport> {
    if cfg.n_list.len() < 3 {
        bail!("need at least 3 values in --n-list");
    }
    if cfg.n_list.windows(2).any(|w| w[0] > w[1]) {
        bail!("--n-list must be ascending");
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(cfg.n_list.len());
    let mut previous_sizes: Option<Vec<f64>> = None;
    for (idx, &n) in cfg.n_list.iter().enumerate() {
        let samples: Vec<(f64, f64, f64, f64)> = (0..cfg.replicas)
            .into_par_iter()
            .map(|r| {
                // keyed by list position so repeated n values still draw
                // independent samples
                let slot =
                    rng::derive(cfg.seed, "convergence") ^ ((idx as u64) << 32) ^ u64::from(n);
                let seed = rng::replica_seed(slot, u64::from(r));
                let g = GraphState::sample_er(n, cfg.lambda, seed).expect("n >= 2");
                let comps = g.components();
                let largest = &comps[0];
                let l2: f64 = g.sizes_rescaled().l2_squared();
                (
                    largest.size,
                    f64::from(largest.surplus),
                    largest.diameter,
                    l2,
                )
            })
            .collect();
        let sizes: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let ks_to_previous = previous_sizes
            .as_ref()
            .map(|prev| stats::ks_statistic(prev, &sizes));
        rows.push(ConvergenceRow {
            n,
            replicas: cfg.replicas,
            mean_largest_size: stats::mean_and_se(&sizes).0,
            mean_largest_surplus: samples.iter().map(|s| s.1).sum::<f64>() / samples.len() as f64,
            mean_largest_diameter: samples.iter().map(|s| s.2).sum::<f64>() / samples.len() as f64,
            mean_l2_squared: samples.iter().map(|s| s.3).sum::<f64>() / samples.len() as f64,
            ks_to_previous,
        });
        previous_sizes = Some(sizes);
    }
    let ks_values: Vec<f64> = rows.iter().filter_map(|r| r.ks_to_previous).collect();
    let ks_non_increasing = ks_values.windows(2).all(|w| w[1] <= w[0]);

    fs::create_dir_all(&cfg.out)?;
    let mut csv = Csv::new(&[
        "n",
        "replicas",
        "mean_largest_size",
        "mean_largest_surplus",
        "mean_largest_diameter",
        "mean_l2_squared",
        "ks_to_previous",
    ]);
    for row in &rows {
        csv.row(&[
            row.n.to_string(),
            row.replicas.to_string(),
            num(row.mean_largest_size),
            num(row.mean_largest_surplus),
            num(row.mean_largest_diameter),
            num(row.mean_l2_squared),
            row.ks_to_previous.map(num).unwrap_or_default(),
        ]);
    }
    csv.write(&cfg.out.join("stability.csv"))?;
    let report = ConvergenceReport {
        rows,
        ks_non_increasing,
    };
    fs::write(
        cfg.out.join("report.json"),
        format!("{}\n", serde_json::to_string_pretty(&report)?),
    )?;
    output::write_meta(&cfg.out, "convergence", cfg, cfg.seed, &[])?;
    Ok(report)
}
