//! Multiplicative coalescent on finite mass vectors: the Poisson multigraph
//! `MG(x, t)`, the sum-of-squares statistic `S`, structure classification of
//! significant components, and brute-force checkers for the supporting
//! inequalities.
//!
//! This module never touches the graph simulator; it is the independent
//! route the simulation results are compared against.

use std::collections::BTreeMap;

use rand::distributions::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::kahan_sum;
use crate::rng;

/// Finite non-increasing vector of positive block masses.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    /// Sorts the entries non-increasing; rejects non-positive or non-finite
    /// masses.
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidSpec(
                "mass vector entries must be finite and positive".into(),
            ));
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(MassVector(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// l1 norm (total mass).
    pub fn total(&self) -> f64 {
        kahan_sum(self.0.iter().copied())
    }

    /// `S` of the all-singletons partition, i.e. the squared l2 norm.
    pub fn l2_squared(&self) -> f64 {
        kahan_sum(self.0.iter().map(|x| x * x))
    }

    /// `S` of the sub-vector of masses `<= a` at time zero.
    pub fn tail_s(&self, a: f64) -> f64 {
        kahan_sum(self.0.iter().filter(|&&x| x <= a).map(|x| x * x))
    }
}

/// Multigraph on mass-vector blocks; loops allowed, parallel edges counted
/// by multiplicity. Block indices are `0..block_count`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalMultigraph {
    pub block_count: usize,
    /// `(i, j)` with `i <= j` mapped to its multiplicity; `i == j` is a loop.
    pub edges: BTreeMap<(u32, u32), u32>,
}

impl CoalMultigraph {
    pub fn empty(block_count: usize) -> Self {
        CoalMultigraph {
            block_count,
            edges: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, i: u32, j: u32) {
        let key = if i <= j { (i, j) } else { (j, i) };
        *self.edges.entry(key).or_insert(0) += 1;
    }

    pub fn total_multiplicity(&self) -> u64 {
        self.edges.values().map(|&m| u64::from(m)).sum()
    }

    /// Presence of the unordered pair in the simple-graph reduction.
    pub fn has_pair(&self, i: u32, j: u32) -> bool {
        let key = if i <= j { (i, j) } else { (j, i) };
        i != j && self.edges.contains_key(&key)
    }

    /// Connected components over all blocks (loops ignored), each sorted,
    /// ordered by smallest block index.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut dsu = Dsu::new(self.block_count);
        for &(i, j) in self.edges.keys() {
            if i != j {
                dsu.union(i as usize, j as usize);
            }
        }
        dsu.groups()
    }

    /// Multiset inclusion: every edge of `self` appears in `other` with at
    /// least the same multiplicity.
    pub fn is_sub_multigraph_of(&self, other: &CoalMultigraph) -> bool {
        self.edges
            .iter()
            .all(|(k, &m)| other.edges.get(k).copied().unwrap_or(0) >= m)
    }
}

/// Plain union-find with path halving.
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Returns false when the endpoints were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }

    fn groups(&mut self) -> Vec<Vec<u32>> {
        let n = self.parent.len();
        let mut map: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for v in 0..n {
            let r = self.find(v);
            map.entry(r).or_default().push(v as u32);
        }
        map.into_values().collect()
    }
}

/// One Poisson mark: an ordered dart `(i, j)` thrown at `time`.
pub type TimedDart = (u32, u32, f64);

/// Poisson darts on `[0, horizon]` realizing the coalescent clocks: the dart
/// count is `Poisson(horizon * |x|_1^2 / 2)` and both endpoints are drawn
/// independently proportionally to mass. By Poisson thinning the multigraph
/// of darts with `time <= t` has pair multiplicities `Poisson(t x_i x_j)`
/// and loop multiplicities `Poisson(t x_i^2 / 2)`, independent across pairs,
/// so restriction in time gives the monotone coupling for free.
pub fn sample_darts(x: &MassVector, horizon: f64, seed: u64) -> Vec<TimedDart> {
    assert!(horizon >= 0.0, "horizon must be nonnegative");
    let total = x.total();
    let lambda = horizon * total * total / 2.0;
    if lambda <= 0.0 {
        return Vec::new();
    }
    let mut rng = rng::stream(seed, "mg-darts");
    let m = Poisson::new(lambda).expect("lambda > 0").sample(&mut rng) as u64;
    let weighted = WeightedIndex::new(x.values()).expect("positive masses");
    let mut darts: Vec<TimedDart> = (0..m)
        .map(|_| {
            let i = weighted.sample(&mut rng) as u32;
            let j = weighted.sample(&mut rng) as u32;
            let time = rng.gen_range(0.0..=horizon);
            (i, j, time)
        })
        .collect();
    darts.sort_by(|a, b| a.2.partial_cmp(&b.2).expect("finite"));
    darts
}

/// The multigraph formed by the darts with `time <= t`.
pub fn multigraph_at(darts: &[TimedDart], t: f64, block_count: usize) -> CoalMultigraph {
    let mut mg = CoalMultigraph::empty(block_count);
    for &(i, j, time) in darts {
        if time <= t {
            mg.add(i, j);
        }
    }
    mg
}

/// Samples `MG(x, t)`: pair `{i,j}` multiplicity `Poisson(t x_i x_j)`, loop
/// at `i` multiplicity `Poisson(t x_i^2 / 2)`, independent across pairs.
pub fn sample_mg(x: &MassVector, t: f64, seed: u64) -> CoalMultigraph {
    assert!(t >= 0.0, "time must be nonnegative");
    let darts = sample_darts(x, t, seed);
    multigraph_at(&darts, t, x.len())
}

/// Per-pair Poisson sampler, quadratic in the block count. Distributionally
/// identical to [`sample_mg`]; kept as the independent oracle the
/// superposition sampler is tested against.
pub fn sample_mg_dense(x: &MassVector, t: f64, seed: u64) -> CoalMultigraph {
    assert!(t >= 0.0, "time must be nonnegative");
    let mut rng = rng::stream(seed, "mg-dense");
    let v = x.values();
    let mut mg = CoalMultigraph::empty(v.len());
    for i in 0..v.len() {
        for j in i..v.len() {
            let mean = if i == j {
                t * v[i] * v[i] / 2.0
            } else {
                t * v[i] * v[j]
            };
            if mean <= 0.0 {
                continue;
            }
            let m = Poisson::new(mean).expect("positive mean").sample(&mut rng) as u32;
            if m > 0 {
                *mg.edges.entry((i as u32, j as u32)).or_insert(0) += m;
            }
        }
    }
    mg
}

/// `S` of an explicit partition: the sum over blocks of squared block mass.
/// The partition must cover `0..x.len()` disjointly.
pub fn s_statistic(x: &MassVector, partition: &[Vec<usize>]) -> Result<f64> {
    let mut seen = vec![false; x.len()];
    for block in partition {
        for &i in block {
            if i >= x.len() {
                return Err(Error::BadPartition(format!(
                    "index {i} out of range for {} masses",
                    x.len()
                )));
            }
            if seen[i] {
                return Err(Error::BadPartition(format!("index {i} appears twice")));
            }
            seen[i] = true;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::BadPartition(format!("index {missing} not covered")));
    }
    Ok(kahan_sum(partition.iter().map(|block| {
        let m: f64 = block.iter().map(|&i| x.values()[i]).sum();
        m * m
    })))
}

/// `S(x, t)` of a sampled multigraph: squared component masses summed.
pub fn s_of_multigraph(x: &MassVector, mg: &CoalMultigraph) -> f64 {
    kahan_sum(mg.components().iter().map(|comp| {
        let m: f64 = comp.iter().map(|&i| x.values()[i as usize]).sum();
        m * m
    }))
}

/// Scale triple for the structure classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub epsilon: f64,
    pub t_horizon: f64,
    /// Monte-Carlo bound on `S(x, T)` exceeded with probability <= eps/100.
    pub k_bound: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
}

/// Derives `(K, eps1, eps2)` on dyadic grids:
///
/// * `K` — smallest power of two (at least 1) whose empirical exceedance
///   probability `P(S(x,T) >= K)` is at most `eps/100`, estimated from
///   `k_quantile_samples` Monte-Carlo draws;
/// * `eps1` — largest power of two below `eps` with
///   `S(x_{<=eps1}, 0) <= eps^2 / (100 (1 + T + K T^2))`;
/// * `eps2` — largest power of two below `eps1` with
///   `S(x_{<=eps2}, 0) <= 2 eps1^2 eps^2 / (100 (1 + T (K + 2))^2)`.
pub fn thresholds(
    x: &MassVector,
    epsilon: f64,
    t_horizon: f64,
    k_quantile_samples: u32,
    seed: u64,
) -> Result<Thresholds> {
    if !(0.0 < epsilon && epsilon < 1.0) {
        return Err(Error::InvalidSpec(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    if t_horizon < 0.0 {
        return Err(Error::InvalidSpec("negative horizon".into()));
    }
    let mut samples: Vec<f64> = (0..k_quantile_samples)
        .map(|r| {
            let mg = sample_mg(x, t_horizon, rng::replica_seed(seed, u64::from(r)));
            s_of_multigraph(x, &mg)
        })
        .collect();
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let tail_prob = |k: f64| {
        let below = samples.partition_point(|&s| s < k);
        (samples.len() - below) as f64 / samples.len() as f64
    };
    let k_bound = (0..=60)
        .map(|j| (2.0f64).powi(j))
        .find(|&k| tail_prob(k) <= epsilon / 100.0)
        .ok_or_else(|| Error::Unsatisfiable("no dyadic K <= 2^60 works".into()))?;

    let eps1_budget =
        epsilon * epsilon / (100.0 * (1.0 + t_horizon + k_bound * t_horizon * t_horizon));
    let epsilon1 = largest_dyadic_below(epsilon, |e| x.tail_s(e) <= eps1_budget)
        .ok_or_else(|| Error::Unsatisfiable("no dyadic epsilon1 works".into()))?;

    let eps2_budget = 2.0 * epsilon1 * epsilon1 * epsilon * epsilon
        / (100.0 * (1.0 + t_horizon * (k_bound + 2.0)).powi(2));
    let epsilon2 = largest_dyadic_below(epsilon1, |e| x.tail_s(e) <= eps2_budget)
        .ok_or_else(|| Error::Unsatisfiable("no dyadic epsilon2 works".into()))?;

    Ok(Thresholds {
        epsilon,
        t_horizon,
        k_bound,
        epsilon1,
        epsilon2,
    })
}

/// Largest `2^-j` strictly below `cap` satisfying `ok`; the tail statistic
/// is monotone, so the first hit while descending wins.
fn largest_dyadic_below(cap: f64, ok: impl Fn(f64) -> bool) -> Option<f64> {
    let mut e = 1.0f64;
    while e >= cap {
        e /= 2.0;
    }
    for _ in 0..4096 {
        if ok(e) {
            return Some(e);
        }
        e /= 2.0;
    }
    None
}

impl Thresholds {
    /// Post-hoc replay of the three hypotheses: the tail inequalities are
    /// exact, the `K` quantile is re-estimated with fresh samples.
    pub fn verify(&self, x: &MassVector, samples: u32, seed: u64) -> bool {
        let exceed = (0..samples)
            .filter(|&r| {
                let mg = sample_mg(x, self.t_horizon, rng::replica_seed(seed, u64::from(r)));
                s_of_multigraph(x, &mg) >= self.k_bound
            })
            .count() as f64
            / f64::from(samples);
        let sigma = (exceed * (1.0 - exceed) / f64::from(samples)).sqrt();
        let hyp1 = self.k_bound >= 1.0 && exceed <= self.epsilon / 100.0 + 3.0 * sigma;
        let t = self.t_horizon;
        let hyp2 = self.epsilon1 < self.epsilon
            && x.tail_s(self.epsilon1)
                <= self.epsilon * self.epsilon / (100.0 * (1.0 + t + self.k_bound * t * t));
        let hyp3 = self.epsilon2 < self.epsilon1
            && x.tail_s(self.epsilon2)
                <= 2.0 * self.epsilon1 * self.epsilon1 * self.epsilon * self.epsilon
                    / (100.0 * (1.0 + t * (self.k_bound + 2.0)).powi(2));
        hyp1 && hyp2 && hyp3
    }
}

/// A hanging tree of one significant component: its blocks and the number of
/// edges attaching it to the heart.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HangingTree {
    pub blocks: Vec<u32>,
    pub attachment_multiplicity: u32,
}

/// Heart/hanging decomposition of one significant component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignificantComponent {
    pub blocks: Vec<u32>,
    pub mass: f64,
    /// Blocks reachable from a Large block inside `MG(x_{>eps2}, t)`.
    pub heart_blocks: Vec<u32>,
    pub hanging_trees: Vec<HangingTree>,
    pub hanging_mass: f64,
}

/// Violation flags for the five structure conditions; `true` means violated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlagViolations {
    /// (a) a significant component with no Large block.
    pub a: bool,
    /// (b) a cycle inside `MG(x_{<=eps1}, t)`.
    pub b: bool,
    /// (c) two or more edges between a component of `MG(x_{<=eps1}, t)` and
    /// a component of `MG(x_{>eps1}, t)`.
    pub c: bool,
    /// (d) `S(x,t) - S(x_{>eps2},t) > 2 eps1^2`.
    pub d: bool,
    /// (e) a Large block whose component mass drops by more than `eps1`
    /// when Small blocks are removed.
    pub e: bool,
}

impl FlagViolations {
    pub fn any(&self) -> bool {
        self.a || self.b || self.c || self.d || self.e
    }
}

/// Classification of one `MG(x, t)` realization: hearts, hanging trees and
/// the five violation flags.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub thresholds: Thresholds,
    pub time: f64,
    pub significant: Vec<SignificantComponent>,
    pub violations: FlagViolations,
    pub s_full: f64,
    pub s_above_eps2: f64,
}

/// Samples `MG(x, t)` and classifies the realization.
///
/// When `x` is a truncation of a longer sequence, the discarded tail must be
/// negligible at the classifier's scale: `thresholds.epsilon2` has to exceed
/// the truncation level for the flags to mean what they say.
pub fn classify_structure(
    x: &MassVector,
    t: f64,
    thresholds: &Thresholds,
    seed: u64,
) -> StructureReport {
    let mg = sample_mg(x, t, seed);
    classify_realization(x, &mg, t, thresholds)
}

/// Heart/hanging decomposition and flag evaluation on a given realization.
pub fn classify_realization(
    x: &MassVector,
    mg: &CoalMultigraph,
    t: f64,
    th: &Thresholds,
) -> StructureReport {
    let v = x.values();
    let n = v.len();
    let mass_of = |blocks: &[u32]| kahan_sum(blocks.iter().map(|&b| v[b as usize]));

    let comps_full = mg.components();
    // components of MG(x_{>eps2}, t): drop every edge touching a Small block
    let comp_above_eps2 = restricted_components(mg, n, |b| v[b] > th.epsilon2);
    let comp_id_above_eps2 = component_index(&comp_above_eps2, n);

    let comp_small = restricted_components(mg, n, |b| v[b] <= th.epsilon1);
    let comp_id_small = component_index(&comp_small, n);
    let comp_large_side = restricted_components(mg, n, |b| v[b] > th.epsilon1);
    let comp_id_large = component_index(&comp_large_side, n);

    // (b): any loop, parallel edge or cycle among blocks <= eps1
    let mut violations = FlagViolations {
        b: has_cycle_restricted(mg, n, |b| v[b] <= th.epsilon1),
        ..Default::default()
    };

    // (c): total multiplicity between each small-side and large-side component
    let mut cross: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for (&(i, j), &m) in &mg.edges {
        let (iu, ju) = (i as usize, j as usize);
        if i == j {
            continue;
        }
        let (small, large) = if v[iu] <= th.epsilon1 && v[ju] > th.epsilon1 {
            (iu, ju)
        } else if v[ju] <= th.epsilon1 && v[iu] > th.epsilon1 {
            (ju, iu)
        } else {
            continue;
        };
        let key = (comp_id_small[small], comp_id_large[large]);
        let slot = cross.entry(key).or_insert(0);
        *slot += m;
        if *slot >= 2 {
            violations.c = true;
        }
    }

    // (d): l2 mass lost by dropping Small blocks; blocks <= eps2 are zeroed
    // in the thresholded vector, so only kept blocks contribute
    let s_full = s_of_multigraph(x, mg);
    let s_above_eps2 = kahan_sum(comp_above_eps2.iter().map(|comp| {
        let m = mass_of(comp);
        m * m
    }));
    violations.d = s_full - s_above_eps2 > 2.0 * th.epsilon1 * th.epsilon1;

    // (e): per Large block, mass gap between its full component and its
    // component among blocks > eps2
    let comp_id_full = component_index(&comps_full, n);
    let full_mass: Vec<f64> = comps_full.iter().map(|c| mass_of(c)).collect();
    let above_mass: Vec<f64> = comp_above_eps2.iter().map(|c| mass_of(c)).collect();
    for b in 0..n {
        if v[b] > th.epsilon1 {
            let gap =
                full_mass[comp_id_full[b] as usize] - above_mass[comp_id_above_eps2[b] as usize];
            if gap > th.epsilon1 {
                violations.e = true;
            }
        }
    }

    // significant components, hearts and hanging trees; flag (a)
    let mut significant = Vec::new();
    for comp in &comps_full {
        let mass = mass_of(comp);
        if mass <= th.epsilon {
            continue;
        }
        let large_blocks: Vec<u32> = comp
            .iter()
            .copied()
            .filter(|&b| v[b as usize] > th.epsilon1)
            .collect();
        if large_blocks.is_empty() {
            violations.a = true;
        }
        // heart: union of the >eps2 components of the Large blocks
        let mut in_heart = vec![false; n];
        for &lb in &large_blocks {
            for &b in &comp_above_eps2[comp_id_above_eps2[lb as usize] as usize] {
                in_heart[b as usize] = true;
            }
        }
        let heart_blocks: Vec<u32> = comp
            .iter()
            .copied()
            .filter(|&b| in_heart[b as usize])
            .collect();
        let rest: Vec<u32> = comp
            .iter()
            .copied()
            .filter(|&b| !in_heart[b as usize])
            .collect();
        let mut trees = Vec::new();
        if !rest.is_empty() {
            for tree_blocks in restricted_components_within(mg, n, &rest) {
                let attachment = mg
                    .edges
                    .iter()
                    .filter(|(&(i, j), _)| {
                        i != j
                            && (in_heart[i as usize] && tree_blocks.contains(&j)
                                || in_heart[j as usize] && tree_blocks.contains(&i))
                    })
                    .map(|(_, &m)| m)
                    .sum();
                trees.push(HangingTree {
                    blocks: tree_blocks,
                    attachment_multiplicity: attachment,
                });
            }
        }
        let hanging_mass = mass_of(&rest);
        significant.push(SignificantComponent {
            blocks: comp.clone(),
            mass,
            heart_blocks,
            hanging_trees: trees,
            hanging_mass,
        });
    }

    StructureReport {
        thresholds: *th,
        time: t,
        significant,
        violations,
        s_full,
        s_above_eps2,
    }
}

/// Components of the sub-multigraph induced by blocks satisfying `keep`
/// (edges with both endpoints kept); returns only kept blocks.
fn restricted_components(
    mg: &CoalMultigraph,
    n: usize,
    keep: impl Fn(usize) -> bool,
) -> Vec<Vec<u32>> {
    let mut dsu = Dsu::new(n);
    for &(i, j) in mg.edges.keys() {
        if i != j && keep(i as usize) && keep(j as usize) {
            dsu.union(i as usize, j as usize);
        }
    }
    let mut map: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for b in 0..n {
        if keep(b) {
            map.entry(dsu.find(b)).or_default().push(b as u32);
        }
    }
    map.into_values().collect()
}

/// Components of the sub-multigraph induced by an explicit block list.
fn restricted_components_within(mg: &CoalMultigraph, n: usize, blocks: &[u32]) -> Vec<Vec<u32>> {
    let mut keep = vec![false; n];
    for &b in blocks {
        keep[b as usize] = true;
    }
    restricted_components(mg, n, |b| keep[b])
}

/// block -> position of its component in `comps`.
fn component_index(comps: &[Vec<u32>], n: usize) -> Vec<u32> {
    let mut idx = vec![u32::MAX; n];
    for (c, blocks) in comps.iter().enumerate() {
        for &b in blocks {
            idx[b as usize] = c as u32;
        }
    }
    idx
}

/// Cycle detection in the sub-multigraph of kept blocks; loops and parallel
/// edges count as cycles.
fn has_cycle_restricted(mg: &CoalMultigraph, n: usize, keep: impl Fn(usize) -> bool) -> bool {
    let mut dsu = Dsu::new(n);
    for (&(i, j), &m) in &mg.edges {
        let (iu, ju) = (i as usize, j as usize);
        if !keep(iu) || !keep(ju) {
            continue;
        }
        if i == j || m >= 2 {
            return true;
        }
        if !dsu.union(iu, ju) {
            return true;
        }
    }
    false
}

/// One row of a lemma-check report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheckRow {
    pub instance: u32,
    pub statistic: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Monte-Carlo check of the tail bound
/// `P(S(x,t) > s) <= t s S0 / (s - S0)` for `s > S0 = S(x, 0)`.
pub fn check_lemma20(
    x: &MassVector,
    t: f64,
    s: f64,
    replicas: u32,
    seed: u64,
) -> Result<LemmaCheckRow> {
    let s0 = x.l2_squared();
    if s <= s0 {
        return Err(Error::InvalidSpec(format!(
            "tail level s={s} must exceed S(x,0)={s0}"
        )));
    }
    let hits = (0..replicas)
        .filter(|&r| {
            let mg = sample_mg(x, t, rng::replica_seed(seed, u64::from(r)));
            s_of_multigraph(x, &mg) > s
        })
        .count();
    let estimate = hits as f64 / f64::from(replicas);
    let bound = t * s * s0 / (s - s0);
    let sigma = (estimate * (1.0 - estimate) / f64::from(replicas)).sqrt();
    Ok(LemmaCheckRow {
        instance: 0,
        statistic: estimate,
        bound,
        pass: estimate <= bound + 3.0 * sigma,
    })
}

/// Monte-Carlo check of the bipartite bound
/// `eps P(sum Z^2 >= a1 + eps) <= (1 + t (a1 + eps))^2 a2`, where the
/// bipartite graph joins the first `m` blocks to the rest with probability
/// `1 - exp(-t z_i z_j)` per cross pair.
pub fn check_lemma23(
    z: &[f64],
    m: usize,
    t: f64,
    epsilon: f64,
    replicas: u32,
    seed: u64,
) -> Result<LemmaCheckRow> {
    if m == 0 || m >= z.len() {
        return Err(Error::InvalidSpec(format!(
            "need 1 <= m < n, got m={m}, n={}",
            z.len()
        )));
    }
    if epsilon <= 0.0 {
        return Err(Error::InvalidSpec("epsilon must be positive".into()));
    }
    let alpha1: f64 = z[..m].iter().map(|v| v * v).sum();
    let alpha2: f64 = z[m..].iter().map(|v| v * v).sum();
    let mut hits = 0u32;
    for r in 0..replicas {
        let mut rng = rng::stream(rng::replica_seed(seed, u64::from(r)), "bipartite");
        let mut dsu = Dsu::new(z.len());
        for i in 0..m {
            for j in m..z.len() {
                let p = 1.0 - (-t * z[i] * z[j]).exp();
                if rng.gen_bool(p) {
                    dsu.union(i, j);
                }
            }
        }
        let sum_sq: f64 = dsu
            .groups()
            .iter()
            .map(|g| {
                let w: f64 = g.iter().map(|&i| z[i as usize]).sum();
                w * w
            })
            .sum();
        if sum_sq >= alpha1 + epsilon {
            hits += 1;
        }
    }
    let estimate = f64::from(hits) / f64::from(replicas);
    let bound_on_prob = (1.0 + t * (alpha1 + epsilon)).powi(2) * alpha2 / epsilon;
    let sigma = (estimate * (1.0 - estimate) / f64::from(replicas)).sqrt();
    Ok(LemmaCheckRow {
        instance: 0,
        statistic: estimate,
        bound: bound_on_prob,
        pass: estimate <= bound_on_prob + 3.0 * sigma,
    })
}

/// A weighted multigraph instance for the exhaustive subgraph checks.
#[derive(Debug, Clone)]
pub struct WeightedMultigraph {
    pub weights: Vec<f64>,
    /// Edge list with repetitions allowed (multigraph).
    pub edges: Vec<(usize, usize)>,
}

impl WeightedMultigraph {
    /// `S` over the components of `(keep, edges[mask] inside keep)`.
    fn s_restricted(&self, edge_mask: u32, keep: &[bool]) -> f64 {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        let n = self.weights.len();
        let mut dsu = Dsu::new(n);
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if edge_mask & (1 << e) != 0 && keep[a] && keep[b] && a != b {
                dsu.union(a, b);
            }
        }
        for (v, &kept) in keep.iter().enumerate() {
            if kept {
                *acc.entry(dsu.find(v)).or_insert(0.0) += self.weights[v];
            }
        }
        acc.values().map(|w| w * w).sum()
    }

    fn components_under(&self, edge_mask: u32, keep: &[bool]) -> Vec<Vec<usize>> {
        let n = self.weights.len();
        let mut dsu = Dsu::new(n);
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if edge_mask & (1 << e) != 0 && keep[a] && keep[b] && a != b {
                dsu.union(a, b);
            }
        }
        let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &kept) in keep.iter().enumerate() {
            if kept {
                map.entry(dsu.find(v)).or_default().push(v);
            }
        }
        map.into_values().collect()
    }
}

/// Exhaustive check of the monotone difference inequality: for a vertex
/// subset `W` such that at most one edge joins any component of `(W, E)` to
/// any component of `(V \ W, E)`,
/// `S(V,E) - S(W,E) >= S(V,E') - S(W,E')` for every `E'` inside `E`.
///
/// Draws `instances` random multigraphs with at most `max_edges` edges and
/// enumerates every `E'`. Errors above 10 edges.
pub fn check_pour_skor_l2(
    instances: u32,
    max_edges: usize,
    seed: u64,
) -> Result<Vec<LemmaCheckRow>> {
    if max_edges > 10 {
        return Err(Error::InstanceTooLarge(format!(
            "subset enumeration capped at 10 edges, asked for {max_edges}"
        )));
    }
    let mut rows = Vec::with_capacity(instances as usize);
    let mut rng = rng::stream(seed, "pour-skor-instances");
    for instance in 0..instances {
        let (g, w_set) = loop {
            let g = random_weighted_multigraph(&mut rng, 8, max_edges);
            if let Some(w) = find_admissible_subset(&g, &mut rng) {
                break (g, w);
            }
        };
        let keep_all = vec![true; g.weights.len()];
        let full_mask = (1u32 << g.edges.len()) - 1;
        let lhs = g.s_restricted(full_mask, &keep_all) - g.s_restricted(full_mask, &w_set);
        let mut worst = f64::NEG_INFINITY;
        for mask in 0..=full_mask {
            let rhs = g.s_restricted(mask, &keep_all) - g.s_restricted(mask, &w_set);
            worst = worst.max(rhs);
        }
        rows.push(LemmaCheckRow {
            instance,
            statistic: worst,
            bound: lhs,
            pass: worst <= lhs + 1e-9,
        });
    }
    Ok(rows)
}

/// Exhaustive check of the size-sequence perturbation bound: for `G` a
/// subgraph of `G~` with vertex weights `x <= x~`,
/// `||a~ - a||_2^2 <= sum a~^2 - sum a^2`, where `a`, `a~` are the
/// decreasing component size sequences, zero-padded to equal length.
///
/// Each instance draws a weighted graph on at most `max_vertices` vertices
/// and at most 8 edges, then enumerates every edge subset combined with a
/// handful of weight reductions (the identity reduction exercises the
/// equality case).
pub fn check_lemma17(instances: u32, max_vertices: usize, seed: u64) -> Result<Vec<LemmaCheckRow>> {
    if max_vertices > 10 {
        return Err(Error::InstanceTooLarge(format!(
            "vertex count capped at 10, asked for {max_vertices}"
        )));
    }
    let mut rows = Vec::with_capacity(instances as usize);
    let mut rng = rng::stream(seed, "l17-instances");
    for instance in 0..instances {
        let g = random_weighted_multigraph(&mut rng, max_vertices, 8);
        let full_mask = (1u32 << g.edges.len()) - 1;
        let keep_all = vec![true; g.weights.len()];
        let tilde_sizes = sorted_component_sizes(&g, full_mask, &g.weights, &keep_all);
        let sum_tilde: f64 = tilde_sizes.iter().map(|s| s * s).sum();
        let mut worst = f64::NEG_INFINITY;
        for draw in 0..4 {
            let reduced: Vec<f64> = g
                .weights
                .iter()
                .map(|&w| {
                    if draw == 0 {
                        w
                    } else if rng.gen_bool(0.15) {
                        0.0
                    } else {
                        w * rng.gen_range(0.0..=1.0)
                    }
                })
                .collect();
            for mask in 0..=full_mask {
                let sizes = sorted_component_sizes(&g, mask, &reduced, &keep_all);
                let sum_sub: f64 = sizes.iter().map(|s| s * s).sum();
                let len = tilde_sizes.len().max(sizes.len());
                let mut diff_sq = 0.0;
                for i in 0..len {
                    let a = tilde_sizes.get(i).copied().unwrap_or(0.0);
                    let b = sizes.get(i).copied().unwrap_or(0.0);
                    diff_sq += (a - b) * (a - b);
                }
                worst = worst.max(diff_sq - (sum_tilde - sum_sub));
            }
        }
        rows.push(LemmaCheckRow {
            instance,
            statistic: worst,
            bound: 0.0,
            pass: worst <= 1e-9,
        });
    }
    Ok(rows)
}

fn sorted_component_sizes(
    g: &WeightedMultigraph,
    edge_mask: u32,
    weights: &[f64],
    keep: &[bool],
) -> Vec<f64> {
    let mut sizes: Vec<f64> = g
        .components_under(edge_mask, keep)
        .iter()
        .map(|comp| comp.iter().map(|&v| weights[v]).sum())
        .collect();
    sizes.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    sizes
}

fn random_weighted_multigraph(
    rng: &mut impl Rng,
    max_vertices: usize,
    max_edges: usize,
) -> WeightedMultigraph {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let m = rng.gen_range(0..=max_edges);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
    let edges: Vec<(usize, usize)> = (0..m)
        .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
        .filter(|&(a, b)| a != b)
        .collect();
    WeightedMultigraph { weights, edges }
}

/// Random vertex subset satisfying the single-cross-edge hypothesis, if one
/// is found within a bounded number of draws.
///
/// The W-side blocks are taken as traces of full-graph connectivity (two W
/// vertices joined by any path in `(V, E)` count as one block): this is the
/// reading under which a path between W blocks through the outside forces
/// two cross edges onto the same block pair, which is what the monotone
/// difference argument needs.
fn find_admissible_subset(g: &WeightedMultigraph, rng: &mut impl Rng) -> Option<Vec<bool>> {
    let n = g.weights.len();
    let full_mask = (1u32 << g.edges.len()) - 1;
    let keep_all = vec![true; n];
    'tries: for _ in 0..64 {
        let keep: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let inv: Vec<bool> = keep.iter().map(|k| !k).collect();
        let w_id = label_of(&g.components_under(full_mask, &keep_all), n);
        let c_id = label_of(&g.components_under(full_mask, &inv), n);
        let mut crossing: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for &(a, b) in &g.edges {
            let (w, c) = if keep[a] && !keep[b] {
                (a, b)
            } else if keep[b] && !keep[a] {
                (b, a)
            } else {
                continue;
            };
            let entry = crossing.entry((w_id[w], c_id[c])).or_insert(0);
            *entry += 1;
            if *entry >= 2 {
                continue 'tries;
            }
        }
        return Some(keep);
    }
    None
}

fn label_of(comps: &[Vec<usize>], n: usize) -> Vec<usize> {
    let mut id = vec![usize::MAX; n];
    for (c, blocks) in comps.iter().enumerate() {
        for &b in blocks {
            id[b] = c;
        }
    }
    id
}
