//! Continuous-time evolution of a graph under Poisson edge updates:
//! coalescence (additions only), fragmentation (deletions only) and
//! dynamical percolation (refreshes), with snapshot observers and the
//! coalescence/fragmentation time change.
//!
//! Event generation aggregates the per-pair clocks into two competing
//! exponential classes: state-changing additions ring at rate
//! `gamma_add * #absent
//! pairs` and deletions at `gamma_del * #present edges`, the affected pair
//! chosen uniformly inside its class. This is equivalent in law to per-pair
//! refresh clocks with the no-op refreshes marginalized out.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{self, kahan_sum, pair_count, ComponentSummary, GraphState};
use crate::rng;
use crate::stats;

/// Which Poisson clocks drive the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProcessMode {
    Coalescence,
    Fragmentation,
    DynamicalPercolation,
}

/// Full description of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProcessSpec {
    pub mode: ProcessMode,
    /// Clock intensity: additions for coalescence, deletions for
    /// fragmentation, refreshes for dynamical percolation.
    pub rate: f64,
    /// Refresh outcome probability; dynamical percolation only.
    pub p_refresh: Option<f64>,
    pub horizon: f64,
    /// Sorted, inside `[0, horizon]`.
    pub snapshot_times: Vec<f64>,
    /// Record the full edge list at every snapshot.
    pub record_edges: bool,
}

impl ProcessSpec {
    /// Coalescence at the critical intensity `n^(-4/3)`.
    pub fn coalescence_critical(n: u32, horizon: f64, snapshot_times: Vec<f64>) -> Self {
        let nf = f64::from(n);
        ProcessSpec {
            mode: ProcessMode::Coalescence,
            rate: 1.0 / (nf * nf.cbrt()),
            p_refresh: None,
            horizon,
            snapshot_times,
            record_edges: false,
        }
    }

    /// Fragmentation at the critical intensity `n^(-1/3)`.
    pub fn fragmentation_critical(n: u32, horizon: f64, snapshot_times: Vec<f64>) -> Self {
        ProcessSpec {
            mode: ProcessMode::Fragmentation,
            rate: 1.0 / f64::from(n).cbrt(),
            p_refresh: None,
            horizon,
            snapshot_times,
            record_edges: false,
        }
    }

    /// Dynamical percolation at intensity `n^(-1/3)` refreshing to the
    /// critical edge probability `p(lambda, n)`.
    pub fn dynamical_percolation_critical(
        n: u32,
        lambda: f64,
        horizon: f64,
        snapshot_times: Vec<f64>,
    ) -> Self {
        ProcessSpec {
            mode: ProcessMode::DynamicalPercolation,
            rate: 1.0 / f64::from(n).cbrt(),
            p_refresh: Some(graph::p_critical(lambda, u64::from(n))),
            horizon,
            snapshot_times,
            record_edges: false,
        }
    }

    pub fn with_recorded_edges(mut self) -> Self {
        self.record_edges = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate >= 0.0) {
            return Err(Error::InvalidSpec(format!("bad rate {}", self.rate)));
        }
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(Error::InvalidSpec(format!("bad horizon {}", self.horizon)));
        }
        match (self.mode, self.p_refresh) {
            (ProcessMode::DynamicalPercolation, Some(p)) if (0.0..=1.0).contains(&p) => {}
            (ProcessMode::DynamicalPercolation, other) => {
                return Err(Error::InvalidSpec(format!(
                    "dynamical percolation needs p_refresh in [0,1], got {other:?}"
                )));
            }
            (_, None) => {}
            (mode, Some(p)) => {
                return Err(Error::InvalidSpec(format!(
                    "{mode:?} does not take p_refresh (got {p})"
                )));
            }
        }
        let mut prev = 0.0;
        for &s in &self.snapshot_times {
            if s < prev || s > self.horizon {
                return Err(Error::InvalidSpec(format!(
                    "snapshot times must be sorted within [0, {}]",
                    self.horizon
                )));
            }
            prev = s;
        }
        Ok(())
    }

    /// State-changing class intensities `(per absent pair, per present edge)`.
    fn class_rates(&self) -> (f64, f64) {
        match self.mode {
            ProcessMode::Coalescence => (self.rate, 0.0),
            ProcessMode::Fragmentation => (0.0, self.rate),
            ProcessMode::DynamicalPercolation => {
                let p = self.p_refresh.expect("validated");
                (self.rate * p, self.rate * (1.0 - p))
            }
        }
    }
}

/// State recorded at one snapshot time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotRecord {
    pub time: f64,
    /// Sorted by (size desc, canonical id asc).
    pub components: Vec<ComponentSummary>,
    pub edge_count: usize,
    pub edges: Option<Vec<(u32, u32)>>,
}

impl SnapshotRecord {
    /// Compensated sum of the rescaled component sizes.
    pub fn total_size(&self) -> f64 {
        kahan_sum(self.components.iter().map(|c| c.size))
    }

    pub fn largest(&self) -> &ComponentSummary {
        &self.components[0]
    }
}

/// Ordered snapshots of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub spec: ProcessSpec,
    pub seed: u64,
    pub event_count: u64,
    pub snapshots: Vec<SnapshotRecord>,
}

#[derive(Serialize)]
struct ComponentLine {
    size: f64,
    surplus: u32,
    diameter: f64,
    n_vertices: u32,
}

#[derive(Serialize)]
struct SnapshotLine<'a> {
    t: f64,
    components: Vec<ComponentLine>,
    edge_count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<&'a [(u32, u32)]>,
}

impl Trajectory {
    /// One JSON object per snapshot, LF-terminated lines.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for snap in &self.snapshots {
            let line = SnapshotLine {
                t: snap.time,
                components: snap
                    .components
                    .iter()
                    .map(|c| ComponentLine {
                        size: c.size,
                        surplus: c.surplus,
                        diameter: c.diameter,
                        n_vertices: c.n_vertices,
                    })
                    .collect(),
                edge_count: snap.edge_count,
                edges: snap.edges.as_deref(),
            };
            out.push_str(&serde_json::to_string(&line).expect("snapshot serializes"));
            out.push('\n');
        }
        out
    }
}

/// Present-edge set with O(1) membership, uniform choice and removal.
struct EdgeSet {
    list: Vec<u64>,
    pos: HashMap<u64, usize>,
}

impl EdgeSet {
    fn new(edges: &[(u32, u32)], n: u32) -> Self {
        let list: Vec<u64> = edges
            .iter()
            .map(|&(u, v)| graph::pair_code(u, v, n))
            .collect();
        let pos = list.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        EdgeSet { list, pos }
    }

    fn len(&self) -> usize {
        self.list.len()
    }

    fn contains(&self, code: u64) -> bool {
        self.pos.contains_key(&code)
    }

    fn insert(&mut self, code: u64) {
        debug_assert!(!self.contains(code));
        self.pos.insert(code, self.list.len());
        self.list.push(code);
    }

    fn remove(&mut self, code: u64) {
        let i = self.pos.remove(&code).expect("edge present");
        let last = self.list.pop().expect("nonempty");
        if i < self.list.len() {
            self.list[i] = last;
            self.pos.insert(last, i);
        }
    }

    fn choose(&self, rng: &mut impl Rng) -> u64 {
        self.list[rng.gen_range(0..self.list.len())]
    }

    fn sorted_pairs(&self, n: u32) -> Vec<(u32, u32)> {
        let mut out: Vec<(u32, u32)> = self
            .list
            .iter()
            .map(|&c| graph::decode_pair(c, n))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Component labeling maintained incrementally: additions merge labels,
/// deletions mark the touched component dirty; dirty components are rebuilt
/// by BFS right before the next query. The interface would admit a fully
/// dynamic structure without contract change.
struct Connectivity {
    label: Vec<u32>,
    members: HashMap<u32, Vec<u32>>,
    dirty: std::collections::BTreeSet<u32>,
}

impl Connectivity {
    fn new(n: u32, adj: &[Vec<u32>]) -> Self {
        let mut label = vec![0u32; n as usize + 1];
        let mut members = HashMap::new();
        for comp in graph::component_vertex_lists(n, adj) {
            let l = comp[0];
            for &v in &comp {
                label[v as usize] = l;
            }
            members.insert(l, comp);
        }
        Connectivity {
            label,
            members,
            dirty: Default::default(),
        }
    }

    fn add_edge(&mut self, u: u32, v: u32) {
        let (lu, lv) = (self.label[u as usize], self.label[v as usize]);
        if lu == lv {
            return;
        }
        // relabel the smaller side into the larger
        let (keep, gone) = if self.members[&lu].len() >= self.members[&lv].len() {
            (lu, lv)
        } else {
            (lv, lu)
        };
        let moved = self.members.remove(&gone).expect("labeled");
        for &w in &moved {
            self.label[w as usize] = keep;
        }
        self.members.get_mut(&keep).expect("labeled").extend(moved);
        if self.dirty.remove(&gone) {
            self.dirty.insert(keep);
        }
    }

    fn remove_edge(&mut self, u: u32, v: u32) {
        debug_assert_eq!(self.label[u as usize], self.label[v as usize]);
        self.dirty.insert(self.label[u as usize]);
    }

    /// All components, rebuilding the dirty ones from the live adjacency.
    fn components(&mut self, adj: &[Vec<u32>]) -> Vec<Vec<u32>> {
        let dirty: Vec<u32> = std::mem::take(&mut self.dirty).into_iter().collect();
        for l in dirty {
            let Some(old) = self.members.remove(&l) else {
                continue;
            };
            let mut seen: HashMap<u32, bool> = old.iter().map(|&v| (v, false)).collect();
            for &start in &old {
                if seen[&start] {
                    continue;
                }
                let piece = graph::collect_component(adj, start);
                let new_label = piece[0];
                for &w in &piece {
                    seen.insert(w, true);
                    self.label[w as usize] = new_label;
                }
                self.members.insert(new_label, piece);
            }
        }
        let mut out: Vec<Vec<u32>> = self.members.values().cloned().collect();
        for comp in &mut out {
            comp.sort_unstable();
        }
        out.sort_by_key(|c| c[0]);
        out
    }
}

/// Exact event-driven simulation of the chosen process; deterministic in
/// `(state, spec, seed)`.
pub fn run(state: &GraphState, spec: &ProcessSpec, seed: u64) -> Result<Trajectory> {
    spec.validate()?;
    let n = state.n();
    let total_pairs = pair_count(n);
    let mass = state.mass_per_vertex();
    let length = state.length_per_edge();
    let (add_intensity, del_intensity) = spec.class_rates();

    let mut adj = state.adjacency();
    let mut edges = EdgeSet::new(state.edges(), n);
    let mut conn = Connectivity::new(n, &adj);
    let mut rng_time = rng::stream(seed, "event-times");
    let mut rng_pair = rng::stream(seed, "pair-select");

    let mut snapshots = Vec::with_capacity(spec.snapshot_times.len());
    let mut snap_idx = 0;
    let mut take_snapshot =
        |time: f64, edges: &EdgeSet, conn: &mut Connectivity, adj: &[Vec<u32>]| {
            let comps = conn.components(adj);
            let components = graph::summarize_component_list(&comps, adj, mass, length);
            snapshots.push(SnapshotRecord {
                time,
                components,
                edge_count: edges.len(),
                edges: spec.record_edges.then(|| edges.sorted_pairs(n)),
            });
        };

    let mut t = 0.0;
    let mut event_count = 0u64;
    loop {
        let absent = (total_pairs - edges.len() as u64) as f64;
        let add_rate = add_intensity * absent;
        let del_rate = del_intensity * edges.len() as f64;
        let total_rate = add_rate + del_rate;
        let t_next = if total_rate > 0.0 {
            t + Exp::new(total_rate)
                .expect("positive rate")
                .sample(&mut rng_time)
        } else {
            f64::INFINITY
        };
        while snap_idx < spec.snapshot_times.len() && spec.snapshot_times[snap_idx] < t_next {
            take_snapshot(spec.snapshot_times[snap_idx], &edges, &mut conn, &adj);
            snap_idx += 1;
        }
        if t_next > spec.horizon {
            break;
        }
        t = t_next;
        event_count += 1;
        let add = rng_pair.gen_range(0.0..total_rate) < add_rate;
        if add {
            let code = choose_absent(&edges, total_pairs, n, &mut rng_pair);
            let (u, v) = graph::decode_pair(code, n);
            edges.insert(code);
            insert_sorted(&mut adj[u as usize], v);
            insert_sorted(&mut adj[v as usize], u);
            conn.add_edge(u, v);
        } else {
            let code = edges.choose(&mut rng_pair);
            let (u, v) = graph::decode_pair(code, n);
            edges.remove(code);
            remove_sorted(&mut adj[u as usize], v);
            remove_sorted(&mut adj[v as usize], u);
            conn.remove_edge(u, v);
        }
    }

    Ok(Trajectory {
        spec: spec.clone(),
        seed,
        event_count,
        snapshots,
    })
}

/// Uniform absent pair: rejection against the full pair range, which is
/// near-certain to accept at criticality. Densely filled graphs fall back to
/// explicit enumeration.
fn choose_absent(edges: &EdgeSet, total_pairs: u64, n: u32, rng: &mut impl Rng) -> u64 {
    let present = edges.len() as u64;
    debug_assert!(present < total_pairs);
    if present * 10 >= total_pairs * 9 {
        let absent: Vec<u64> = (0..total_pairs).filter(|&c| !edges.contains(c)).collect();
        return absent[rng.gen_range(0..absent.len())];
    }
    let _ = n;
    loop {
        let code = rng.gen_range(0..total_pairs);
        if !edges.contains(code) {
            return code;
        }
    }
}

fn insert_sorted(list: &mut Vec<u32>, v: u32) {
    let i = list.partition_point(|&w| w < v);
    list.insert(i, v);
}

fn remove_sorted(list: &mut Vec<u32>, v: u32) {
    let i = list.partition_point(|&w| w < v);
    debug_assert!(list.get(i) == Some(&v));
    list.remove(i);
}

/// Joint law of one pair's (initial, final) states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeJointLaw {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl EdgeJointLaw {
    pub fn cells(&self) -> [f64; 4] {
        [self.p00, self.p01, self.p10, self.p11]
    }
}

/// Time changes matching coalescence from `p` up to `p'` with fragmentation
/// from `p'` down to `p`:
/// `t = ln((1-p)/(1-p')) / gamma_plus`, `t' = ln(p'/p) / gamma_minus`.
pub fn duality_params(
    p: f64,
    p_prime: f64,
    gamma_plus: f64,
    gamma_minus: f64,
) -> Result<(f64, f64)> {
    if !(0.0 < p && p <= p_prime && p_prime < 1.0) {
        return Err(Error::DomainError { p, p_prime });
    }
    if gamma_plus <= 0.0 || gamma_minus <= 0.0 {
        return Err(Error::InvalidSpec("rates must be positive".into()));
    }
    let t = ((1.0 - p) / (1.0 - p_prime)).ln() / gamma_plus;
    let t_prime = (p_prime / p).ln() / gamma_minus;
    Ok((t, t_prime))
}

/// Joint law of `(initial, final)` for one pair under coalescence of
/// intensity `gamma` run for time `t`, started at density `p`.
pub fn edge_joint_law_coal(p: f64, gamma: f64, t: f64) -> EdgeJointLaw {
    let decay = (-gamma * t).exp();
    EdgeJointLaw {
        p00: (1.0 - p) * decay,
        p01: (1.0 - p) * (1.0 - decay),
        p10: 0.0,
        p11: p,
    }
}

/// Joint law of `(final, initial)` for one pair under fragmentation of
/// intensity `mu` run for time `t_prime`, started at density `p_prime`.
pub fn edge_joint_law_frag(p_prime: f64, mu: f64, t_prime: f64) -> EdgeJointLaw {
    let decay = (-mu * t_prime).exp();
    EdgeJointLaw {
        p00: 1.0 - p_prime,
        p01: p_prime * (1.0 - decay),
        p10: 0.0,
        p11: p_prime * decay,
    }
}

/// Two-sample comparison of the coalescence-forward and
/// fragmentation-backward constructions of the same pair of densities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityReport {
    pub n: u32,
    pub lambda: f64,
    pub shift: f64,
    pub replicas: u32,
    pub seed: u64,
    pub p: f64,
    pub p_prime: f64,
    pub t_forward: f64,
    pub t_backward: f64,
    /// Pooled (initial, final) cell counts over pairs and replicas,
    /// ordered (00, 01, 10, 11).
    pub forward_cells: [u64; 4],
    pub backward_cells: [u64; 4],
    pub expected_forward: EdgeJointLaw,
    pub expected_backward: EdgeJointLaw,
    /// Largest rescaled component size per replica at the lower density
    /// (forward: the initial graph; backward: the fragmented state).
    pub forward_largest_low: Vec<f64>,
    pub backward_largest_low: Vec<f64>,
    /// Largest sizes at the higher density.
    pub forward_largest_high: Vec<f64>,
    pub backward_largest_high: Vec<f64>,
    pub ks_low: (f64, f64),
    pub ks_high: (f64, f64),
    /// The two directions draw independent randomness even for equal seeds;
    /// no coupling is attempted.
    pub independent_directions: bool,
}

/// Runs the two constructions and tabulates per-pair cells and
/// largest-component marginals. The low-density marginal compares the
/// forward initial graph against the backward fragmented state; the
/// high-density marginal compares the forward coalesced state against the
/// backward initial graph.
pub fn duality_experiment(
    n: u32,
    lambda: f64,
    shift: f64,
    replicas: u32,
    seed: u64,
) -> Result<DualityReport> {
    if replicas < 2 {
        return Err(Error::InvalidSpec("need at least 2 replicas".into()));
    }
    let p = graph::p_critical(lambda, u64::from(n));
    let p_prime = graph::p_critical(lambda + shift, u64::from(n));
    let nf = f64::from(n);
    let gamma_plus = 1.0 / (nf * nf.cbrt());
    let gamma_minus = 1.0 / nf.cbrt();
    let (t_forward, t_backward) = duality_params(p, p_prime, gamma_plus, gamma_minus)?;

    struct Direction {
        cells: [u64; 4],
        largest_low: Vec<f64>,
        largest_high: Vec<f64>,
    }

    let run_direction = |forward: bool| -> Direction {
        let results: Vec<([u64; 4], f64, f64)> = (0..replicas)
            .into_par_iter()
            .map(|r| {
                let label = if forward {
                    "dual-forward"
                } else {
                    "dual-backward"
                };
                let rep_seed = rng::derive(rng::replica_seed(seed, u64::from(r)), label);
                let (g0, spec) = if forward {
                    let g = GraphState::sample_er(n, lambda, rep_seed).expect("n >= 2");
                    let spec = ProcessSpec {
                        mode: ProcessMode::Coalescence,
                        rate: gamma_plus,
                        p_refresh: None,
                        horizon: t_forward,
                        snapshot_times: vec![t_forward],
                        record_edges: true,
                    };
                    (g, spec)
                } else {
                    let g = GraphState::sample_er(n, lambda + shift, rep_seed).expect("n >= 2");
                    let spec = ProcessSpec {
                        mode: ProcessMode::Fragmentation,
                        rate: gamma_minus,
                        p_refresh: None,
                        horizon: t_backward,
                        snapshot_times: vec![t_backward],
                        record_edges: true,
                    };
                    (g, spec)
                };
                let traj = run(&g0, &spec, rng::derive(rep_seed, "run")).expect("valid spec");
                let snap = traj.snapshots.last().expect("one snapshot");
                let final_edges = snap.edges.as_ref().expect("recorded");

                // pooled cells: initial state is g0, final state is the
                // evolved edge set; the backward pair is reported as
                // (final, initial) so that cell (0,1) always means
                // "absent at the lower density, present at the higher"
                let initial: std::collections::HashSet<(u32, u32)> =
                    g0.edges().iter().copied().collect();
                let evolved: std::collections::HashSet<(u32, u32)> =
                    final_edges.iter().copied().collect();
                let both = initial.intersection(&evolved).count() as u64;
                let initial_only = initial.len() as u64 - both;
                let evolved_only = evolved.len() as u64 - both;
                let neither = pair_count(n) - both - initial_only - evolved_only;
                let cells = if forward {
                    // (initial, final) = (low, high)
                    [neither, evolved_only, initial_only, both]
                } else {
                    // (final, initial) = (low, high)
                    [neither, initial_only, evolved_only, both]
                };

                let largest_initial = g0.components()[0].size;
                let largest_final = snap.largest().size;
                let (low, high) = if forward {
                    (largest_initial, largest_final)
                } else {
                    (largest_final, largest_initial)
                };
                (cells, low, high)
            })
            .collect();
        let mut dir = Direction {
            cells: [0; 4],
            largest_low: Vec::with_capacity(replicas as usize),
            largest_high: Vec::with_capacity(replicas as usize),
        };
        for (cells, low, high) in results {
            for (acc, c) in dir.cells.iter_mut().zip(cells) {
                *acc += c;
            }
            dir.largest_low.push(low);
            dir.largest_high.push(high);
        }
        dir
    };

    let fwd = run_direction(true);
    let bwd = run_direction(false);

    let ks = |a: &[f64], b: &[f64]| {
        let d = stats::ks_statistic(a, b);
        (d, stats::ks_p_value(d, a.len(), b.len()))
    };
    let ks_low = ks(&fwd.largest_low, &bwd.largest_low);
    let ks_high = ks(&fwd.largest_high, &bwd.largest_high);

    Ok(DualityReport {
        n,
        lambda,
        shift,
        replicas,
        seed,
        p,
        p_prime,
        t_forward,
        t_backward,
        forward_cells: fwd.cells,
        backward_cells: bwd.cells,
        expected_forward: edge_joint_law_coal(p, gamma_plus, t_forward),
        expected_backward: edge_joint_law_frag(p_prime, gamma_minus, t_backward),
        forward_largest_low: fwd.largest_low,
        backward_largest_low: bwd.largest_low,
        forward_largest_high: fwd.largest_high,
        backward_largest_high: bwd.largest_high,
        ks_low,
        ks_high,
        independent_directions: true,
    })
}
