//! Distances between finite measured metric spaces and between component
//! collections: the Gromov–Hausdorff–Prokhorov distance (exact on small
//! instances, bounds elsewhere), the Lévy–Prokhorov distance over atomic
//! collections, the band weights `f_k` and the weighted sums built on them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{self, kahan_sum, GraphState};

/// Exact-mode cap on `size(A) * size(B)`: correspondence enumeration is
/// exponential in the pair grid.
pub const EXACT_PAIR_CAP: usize = 20;

/// Default cap on component size when materializing a distance matrix.
pub const COMPONENT_CAP: u32 = 4096;

/// A finite measured metric space: symmetric distance matrix with zero
/// diagonal plus a nonnegative mass per point, optionally annotated with the
/// surplus of the graph it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasuredSpace {
    size: usize,
    /// Row-major `size * size`.
    dist: Vec<f64>,
    mass: Vec<f64>,
    surplus: Option<u32>,
}

/// Validation tolerance on symmetry and the triangle inequality.
const METRIC_TOL: f64 = 1e-9;

impl FiniteMeasuredSpace {
    /// Validates and builds a space. Distinct points at distance zero are
    /// rejected; quotient the input first.
    pub fn new(dist: Vec<Vec<f64>>, mass: Vec<f64>, surplus: Option<u32>) -> Result<Self> {
        let k = dist.len();
        if k == 0 {
            return Err(Error::InvalidSpace("empty space".into()));
        }
        if mass.len() != k {
            return Err(Error::InvalidSpace(format!(
                "{} masses for {} points",
                mass.len(),
                k
            )));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidSpace("masses must be finite and >= 0".into()));
        }
        let mut flat = vec![0.0; k * k];
        for (i, row) in dist.iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidSpace("distance matrix is not square".into()));
            }
            for (j, &d) in row.iter().enumerate() {
                if !d.is_finite() || d < 0.0 {
                    return Err(Error::InvalidSpace(
                        "distances must be finite and >= 0".into(),
                    ));
                }
                flat[i * k + j] = d;
            }
        }
        for i in 0..k {
            if flat[i * k + i] != 0.0 {
                return Err(Error::InvalidSpace("nonzero diagonal".into()));
            }
            for j in (i + 1)..k {
                if (flat[i * k + j] - flat[j * k + i]).abs() > METRIC_TOL {
                    return Err(Error::InvalidSpace(format!("asymmetric at ({i},{j})")));
                }
                if flat[i * k + j] <= 0.0 {
                    return Err(Error::InvalidSpace(format!(
                        "distinct points {i},{j} at distance zero; quotient first"
                    )));
                }
            }
        }
        // full cubic triangle check only at small sizes
        if k <= 256 {
            for i in 0..k {
                for j in 0..k {
                    for l in 0..k {
                        if flat[i * k + j] > flat[i * k + l] + flat[l * k + j] + METRIC_TOL {
                            return Err(Error::InvalidSpace(format!(
                                "triangle inequality fails at ({i},{j},{l})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(FiniteMeasuredSpace {
            size: k,
            dist: flat,
            mass,
            surplus,
        })
    }

    /// Internal constructor for matrices that are metrics by construction
    /// (BFS hop distances).
    fn from_flat_unchecked(
        size: usize,
        dist: Vec<f64>,
        mass: Vec<f64>,
        surplus: Option<u32>,
    ) -> Self {
        FiniteMeasuredSpace {
            size,
            dist,
            mass,
            surplus,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.size + j]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn surplus(&self) -> Option<u32> {
        self.surplus
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.mass.iter().copied())
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Distances and masses multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        FiniteMeasuredSpace {
            size: self.size,
            dist: self.dist.iter().map(|d| d * c).collect(),
            mass: self.mass.iter().map(|m| m * c).collect(),
            surplus: self.surplus,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&SpaceFile::from(self)).expect("space serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let file: SpaceFile = serde_json::from_str(raw)?;
        FiniteMeasuredSpace::new(file.dist, file.mass, file.surplus)
    }
}

/// On-disk schema: `{"dist":[[...]],"mass":[...],"surplus":int|null}`.
#[derive(Serialize, Deserialize)]
struct SpaceFile {
    dist: Vec<Vec<f64>>,
    mass: Vec<f64>,
    surplus: Option<u32>,
}

impl From<&FiniteMeasuredSpace> for SpaceFile {
    fn from(s: &FiniteMeasuredSpace) -> Self {
        let k = s.size;
        SpaceFile {
            dist: (0..k)
                .map(|i| (0..k).map(|j| s.d(i, j)).collect())
                .collect(),
            mass: s.mass.clone(),
            surplus: s.surplus,
        }
    }
}

/// A finite collection of spaces, one per component; may be empty (the zero
/// counting measure).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Collection {
    pub spaces: Vec<FiniteMeasuredSpace>,
}

impl Collection {
    pub fn new(spaces: Vec<FiniteMeasuredSpace>) -> Self {
        Collection { spaces }
    }

    /// Every component of the graph as a measured space (components above
    /// `cap` vertices are rejected).
    pub fn from_state(state: &GraphState, cap: u32) -> Result<Self> {
        let comps = state.components();
        let spaces = comps
            .iter()
            .map(|c| from_component_capped(state, c.id, cap))
            .collect::<Result<Vec<_>>>()?;
        Ok(Collection { spaces })
    }

    /// Sorted non-increasing total masses.
    pub fn sizes(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.spaces.iter().map(|s| s.total_mass()).collect();
        out.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        out
    }

    pub fn to_json(&self) -> String {
        let files: Vec<SpaceFile> = self.spaces.iter().map(SpaceFile::from).collect();
        serde_json::to_string(&files).expect("collection serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self> {
        let files: Vec<SpaceFile> = serde_json::from_str(raw)?;
        let spaces = files
            .into_iter()
            .map(|f| FiniteMeasuredSpace::new(f.dist, f.mass, f.surplus))
            .collect::<Result<Vec<_>>>()?;
        Ok(Collection { spaces })
    }
}

/// One component of a graph as a measured space: BFS hop distances times
/// `n^(-1/3)`, vertex masses `n^(-2/3)`, surplus annotated.
pub fn from_component(state: &GraphState, component_id: u32) -> Result<FiniteMeasuredSpace> {
    from_component_capped(state, component_id, COMPONENT_CAP)
}

pub fn from_component_capped(
    state: &GraphState,
    component_id: u32,
    cap: u32,
) -> Result<FiniteMeasuredSpace> {
    let adj = state.adjacency();
    let members = state
        .component_members(component_id, &adj)
        .ok_or(Error::UnknownComponent(component_id))?;
    let k = members.len();
    if k as u32 > cap {
        return Err(Error::TooLarge {
            n_vertices: k as u32,
            cap,
        });
    }
    let scale = state.length_per_edge();
    let mut dist = vec![0.0; k * k];
    for (row, &v) in members.iter().enumerate() {
        let hops = graph::bfs_hops(&adj, v);
        for (col, &w) in members.iter().enumerate() {
            dist[row * k + col] = f64::from(hops[w as usize]) * scale;
        }
    }
    let n_edges = graph::count_edges(&adj, &members);
    let surplus = n_edges + 1 - k as u32;
    Ok(FiniteMeasuredSpace::from_flat_unchecked(
        k,
        dist,
        vec![state.mass_per_vertex(); k],
        Some(surplus),
    ))
}

/// Distortion of a relation: max over pairs of pairs of the distance
/// mismatch. Errors unless the relation covers both index sets.
pub fn distortion(
    rel: &[(usize, usize)],
    a: &FiniteMeasuredSpace,
    b: &FiniteMeasuredSpace,
) -> Result<f64> {
    let mut cov_a = vec![false; a.size()];
    let mut cov_b = vec![false; b.size()];
    for &(i, j) in rel {
        cov_a[i] = true;
        cov_b[j] = true;
    }
    if let Some(i) = cov_a.iter().position(|c| !c) {
        return Err(Error::NotACorrespondence(format!("left point {i}")));
    }
    if let Some(j) = cov_b.iter().position(|c| !c) {
        return Err(Error::NotACorrespondence(format!("right point {j}")));
    }
    Ok(distortion_unchecked(rel, a, b))
}

fn distortion_unchecked(
    rel: &[(usize, usize)],
    a: &FiniteMeasuredSpace,
    b: &FiniteMeasuredSpace,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (p, &(i, j)) in rel.iter().enumerate() {
        for &(k, l) in &rel[p..] {
            worst = worst.max((a.d(i, k) - b.d(j, l)).abs());
        }
    }
    worst
}

/// Max-flow (Edmonds–Karp) on a small network with f64 capacities.
struct FlowNetwork {
    to: Vec<usize>,
    cap: Vec<f64>,
    head: Vec<Vec<usize>>,
}

const FLOW_EPS: f64 = 1e-12;

impl FlowNetwork {
    fn new(nodes: usize) -> Self {
        FlowNetwork {
            to: Vec::new(),
            cap: Vec::new(),
            head: vec![Vec::new(); nodes],
        }
    }

    fn add_edge(&mut self, u: usize, v: usize, capacity: f64) {
        self.head[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(capacity);
        self.head[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
    }

    fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut flow = 0.0;
        loop {
            let mut pred: Vec<Option<usize>> = vec![None; self.head.len()];
            let mut queue = std::collections::VecDeque::from([s]);
            pred[s] = Some(usize::MAX);
            while let Some(u) = queue.pop_front() {
                if u == t {
                    break;
                }
                for &e in &self.head[u] {
                    let v = self.to[e];
                    if pred[v].is_none() && self.cap[e] > FLOW_EPS {
                        pred[v] = Some(e);
                        queue.push_back(v);
                    }
                }
            }
            if pred[t].is_none() {
                return flow;
            }
            let mut push = f64::INFINITY;
            let mut v = t;
            while v != s {
                let e = pred[v].expect("path");
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = pred[v].expect("path");
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            flow += push;
        }
    }
}

/// Best coupling objective for a fixed correspondence: the smallest `theta`
/// admitting a measure `pi` with `D(pi) <= theta` and `pi(R^c) <= theta`.
///
/// Off-relation mass routes through a single relay node of capacity `theta`;
/// every cut contains that edge at most once, so the parametric max-flow is
/// `min(F0 + theta, Finf)` and the optimum has a closed form from two flow
/// evaluations.
fn coupling_objective(rel_mask: &[bool], a: &FiniteMeasuredSpace, b: &FiniteMeasuredSpace) -> f64 {
    let (ka, kb) = (a.size(), b.size());
    let m = a.total_mass() + b.total_mass();
    let inf = m + 1.0;
    let flow_at = |theta: f64| -> f64 {
        // nodes: 0 = src, 1..=ka left atoms, ka+1..=ka+kb right atoms,
        // relay in/out, sink
        let relay_in = ka + kb + 1;
        let relay_out = ka + kb + 2;
        let sink = ka + kb + 3;
        let mut net = FlowNetwork::new(ka + kb + 4);
        for i in 0..ka {
            net.add_edge(0, 1 + i, a.mass()[i]);
        }
        for j in 0..kb {
            net.add_edge(1 + ka + j, sink, b.mass()[j]);
        }
        net.add_edge(relay_in, relay_out, theta);
        let mut relay_left = vec![false; ka];
        let mut relay_right = vec![false; kb];
        for i in 0..ka {
            for j in 0..kb {
                if rel_mask[i * kb + j] {
                    net.add_edge(1 + i, 1 + ka + j, inf);
                } else {
                    relay_left[i] = true;
                    relay_right[j] = true;
                }
            }
        }
        for (i, &used) in relay_left.iter().enumerate() {
            if used {
                net.add_edge(1 + i, relay_in, inf);
            }
        }
        for (j, &used) in relay_right.iter().enumerate() {
            if used {
                net.add_edge(relay_out, 1 + ka + j, inf);
            }
        }
        net.max_flow(0, sink)
    };
    let f0 = flow_at(0.0);
    let finf = flow_at(inf);
    // feasibility: m - 2 min(f0 + theta, finf) <= theta
    let theta_flat = (m - 2.0 * finf).max(finf - f0).max(0.0);
    let theta_slope = (m - 2.0 * f0) / 3.0;
    if theta_slope >= 0.0 && theta_slope <= finf - f0 {
        theta_flat.min(theta_slope)
    } else {
        theta_flat
    }
}

/// Exact Gromov–Hausdorff–Prokhorov distance by branch-and-bound over
/// correspondences; requires `size(A) * size(B) <= EXACT_PAIR_CAP`.
pub fn dghp_exact(a: &FiniteMeasuredSpace, b: &FiniteMeasuredSpace) -> Result<f64> {
    let product = a.size() * b.size();
    if product > EXACT_PAIR_CAP {
        return Err(Error::TooLargeForExact {
            product,
            cap: EXACT_PAIR_CAP,
        });
    }
    let (lower, upper) = dghp_bounds(a, b);
    // the heuristic upper value is achieved by an actual correspondence, so
    // it seeds the incumbent; the search only needs to find improvements
    let mut search = GhpSearch {
        a,
        b,
        kb: b.size(),
        mask: vec![false; product],
        chosen: Vec::new(),
        cov_a: vec![0u32; a.size()],
        cov_b: vec![0u32; b.size()],
        best: upper,
        lower,
    };
    search.descend(0, 0.0);
    Ok(search.best)
}

struct GhpSearch<'s> {
    a: &'s FiniteMeasuredSpace,
    b: &'s FiniteMeasuredSpace,
    kb: usize,
    mask: Vec<bool>,
    chosen: Vec<(usize, usize)>,
    cov_a: Vec<u32>,
    cov_b: Vec<u32>,
    best: f64,
    lower: f64,
}

impl GhpSearch<'_> {
    /// DFS over the pair grid in row-major order; `dis` carries the
    /// distortion of the chosen set, which only grows as pairs are added.
    fn descend(&mut self, pair: usize, dis: f64) {
        if dis / 2.0 >= self.best || self.best <= self.lower + 1e-15 {
            return;
        }
        let total = self.mask.len();
        if pair == total {
            if self.cov_a.contains(&0) || self.cov_b.contains(&0) {
                return;
            }
            let candidate = (dis / 2.0).max(coupling_objective(&self.mask, self.a, self.b));
            if candidate < self.best {
                self.best = candidate;
            }
            return;
        }
        let (i, j) = (pair / self.kb, pair % self.kb);

        // include (i, j)
        let mut dis_inc = dis;
        for &(k, l) in &self.chosen {
            dis_inc = dis_inc.max((self.a.d(i, k) - self.b.d(j, l)).abs());
        }
        if dis_inc / 2.0 < self.best {
            self.mask[pair] = true;
            self.chosen.push((i, j));
            self.cov_a[i] += 1;
            self.cov_b[j] += 1;
            self.descend(pair + 1, dis_inc);
            self.cov_a[i] -= 1;
            self.cov_b[j] -= 1;
            self.chosen.pop();
            self.mask[pair] = false;
        }

        // exclude (i, j): viable only if coverage can still be completed
        // (row i has later columns, column j has later rows)
        let row_can_finish = self.cov_a[i] > 0 || j + 1 < self.kb;
        let col_can_finish = self.cov_b[j] > 0 || pair + self.kb < total;
        if row_can_finish && col_can_finish {
            self.descend(pair + 1, dis);
        }
    }
}

/// `(lower, upper)` bounds on the GHP distance without enumeration.
///
/// Lower: the total-mass gap (any coupling pays it in `D`) joined with half
/// the diameter gap (any correspondence distorts at least that much).
/// Upper: the value of a greedy profile-matched correspondence or of the
/// full relation, whichever is smaller.
pub fn dghp_bounds(a: &FiniteMeasuredSpace, b: &FiniteMeasuredSpace) -> (f64, f64) {
    let lower = (a.total_mass() - b.total_mass())
        .abs()
        .max((a.diameter() - b.diameter()).abs() / 2.0);

    let (ka, kb) = (a.size(), b.size());
    let profile = |s: &FiniteMeasuredSpace, i: usize| -> Vec<f64> {
        let mut row: Vec<f64> = (0..s.size()).map(|j| s.d(i, j)).collect();
        row.sort_by(|x, y| x.partial_cmp(y).expect("finite"));
        row
    };
    let profiles_a: Vec<Vec<f64>> = (0..ka).map(|i| profile(a, i)).collect();
    let profiles_b: Vec<Vec<f64>> = (0..kb).map(|j| profile(b, j)).collect();
    let profile_gap = |i: usize, j: usize| -> f64 {
        let (pa, pb) = (&profiles_a[i], &profiles_b[j]);
        let len = pa.len().max(pb.len());
        (0..len)
            .map(|t| {
                let x = pa.get(t).copied().unwrap_or(0.0);
                let y = pb.get(t).copied().unwrap_or(0.0);
                (x - y) * (x - y)
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut rel: Vec<(usize, usize)> = (0..ka)
        .map(|i| {
            let j = (0..kb)
                .min_by(|&x, &y| {
                    profile_gap(i, x)
                        .partial_cmp(&profile_gap(i, y))
                        .expect("finite")
                })
                .expect("nonempty");
            (i, j)
        })
        .collect();
    for j in 0..kb {
        if !rel.iter().any(|&(_, jj)| jj == j) {
            let i = (0..ka)
                .min_by(|&x, &y| {
                    profile_gap(x, j)
                        .partial_cmp(&profile_gap(y, j))
                        .expect("finite")
                })
                .expect("nonempty");
            rel.push((i, j));
        }
    }
    let evaluate = |rel: &[(usize, usize)]| -> f64 {
        let mut mask = vec![false; ka * kb];
        for &(i, j) in rel {
            mask[i * kb + j] = true;
        }
        (distortion_unchecked(rel, a, b) / 2.0).max(coupling_objective(&mask, a, b))
    };
    let full: Vec<(usize, usize)> = (0..ka).flat_map(|i| (0..kb).map(move |j| (i, j))).collect();
    let upper = evaluate(&rel).min(evaluate(&full));
    (lower, upper.max(lower))
}

/// Requested computation mode for GHP values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GhpMode {
    Exact,
    Bounds,
}

/// Exact value or a `(lower, upper)` sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum GhpValue {
    Exact(f64),
    Bounds { lower: f64, upper: f64 },
}

pub fn dghp(a: &FiniteMeasuredSpace, b: &FiniteMeasuredSpace, mode: GhpMode) -> Result<GhpValue> {
    match mode {
        GhpMode::Exact => Ok(GhpValue::Exact(dghp_exact(a, b)?)),
        GhpMode::Bounds => {
            let (lower, upper) = dghp_bounds(a, b);
            Ok(GhpValue::Bounds { lower, upper })
        }
    }
}

/// Surplus-refined distance on single spaces: the GHP distance joined with
/// the surplus difference. Exact mode only; both surplus annotations must be
/// present.
pub fn dghp_surplus(a: &FiniteMeasuredSpace, b: &FiniteMeasuredSpace) -> Result<f64> {
    let (sa, sb) = match (a.surplus(), b.surplus()) {
        (Some(sa), Some(sb)) => (sa, sb),
        _ => return Err(Error::MissingSurplus),
    };
    let base = dghp_exact(a, b)?;
    Ok(base.max(f64::from(sa.abs_diff(sb))))
}

/// Band weight: 1 above `1/k`, 0 below `1/(k+1)`, linear in between.
pub fn f_k(mass: f64, k: u32) -> f64 {
    assert!(k >= 1, "band index starts at 1");
    assert!(mass >= 0.0, "mass must be nonnegative");
    let kf = f64::from(k);
    if mass >= 1.0 / kf {
        1.0
    } else if mass >= 1.0 / (kf + 1.0) {
        kf * (kf + 1.0) * (mass - 1.0 / (kf + 1.0))
    } else {
        0.0
    }
}

/// Lévy–Prokhorov value plus whether every pairwise atom distance used was
/// exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoLp {
    pub value: f64,
    pub exact: bool,
}

/// Pairwise GHP distances between the atoms of two collections; exact where
/// the pair grid is small enough, greedy upper bounds elsewhere.
struct AtomMetric {
    d: Vec<Vec<f64>>,
    exact: bool,
}

fn atom_metric(a: &Collection, b: &Collection) -> AtomMetric {
    let mut exact = true;
    let d = a
        .spaces
        .iter()
        .map(|sa| {
            b.spaces
                .iter()
                .map(|sb| {
                    if sa.size() * sb.size() <= EXACT_PAIR_CAP {
                        dghp_exact(sa, sb).expect("under cap")
                    } else {
                        exact = false;
                        dghp_bounds(sa, sb).1
                    }
                })
                .collect()
        })
        .collect();
    AtomMetric { d, exact }
}

/// Lévy–Prokhorov distance between two collections viewed as atomic
/// measures on the space of components, atoms weighted by `f_k` of their
/// mass when `weight` is set.
///
/// The subset quantifier reduces to a bipartite matching criterion: at level
/// `eps`, join atoms at GHP distance `< eps` and require
/// `max(w(A), w(B)) - maxflow <= eps`; the smallest feasible `eps` is found
/// by bisection to `tol`.
pub fn rho_lp(a: &Collection, b: &Collection, weight: Option<u32>, tol: f64) -> RhoLp {
    let metric = atom_metric(a, b);
    let weigh = |s: &FiniteMeasuredSpace| -> f64 {
        let m = s.total_mass();
        match weight {
            Some(k) => f_k(m, k),
            None => 1.0,
        }
    };
    let wa: Vec<f64> = a.spaces.iter().map(weigh).collect();
    let wb: Vec<f64> = b.spaces.iter().map(weigh).collect();
    RhoLp {
        value: rho_lp_weighted(&wa, &wb, &metric.d, tol),
        exact: metric.exact,
    }
}

fn rho_lp_weighted(wa: &[f64], wb: &[f64], d: &[Vec<f64>], tol: f64) -> f64 {
    // drop zero-weight atoms
    let ia: Vec<usize> = (0..wa.len()).filter(|&i| wa[i] > 0.0).collect();
    let ib: Vec<usize> = (0..wb.len()).filter(|&j| wb[j] > 0.0).collect();
    let total_a: f64 = ia.iter().map(|&i| wa[i]).sum();
    let total_b: f64 = ib.iter().map(|&j| wb[j]).sum();
    if ia.is_empty() && ib.is_empty() {
        return 0.0;
    }
    let need = total_a.max(total_b);
    let feasible = |eps: f64| -> bool {
        let (na, nb) = (ia.len(), ib.len());
        let mut net = FlowNetwork::new(na + nb + 2);
        let sink = na + nb + 1;
        let inf = total_a + total_b + 1.0;
        for (p, &i) in ia.iter().enumerate() {
            net.add_edge(0, 1 + p, wa[i]);
        }
        for (q, &j) in ib.iter().enumerate() {
            net.add_edge(1 + na + q, sink, wb[j]);
        }
        for (p, &i) in ia.iter().enumerate() {
            for (q, &j) in ib.iter().enumerate() {
                if d[i][j] < eps {
                    net.add_edge(1 + p, 1 + na + q, inf);
                }
            }
        }
        need - net.max_flow(0, sink) <= eps
    };
    let mut lo = 0.0;
    let mut hi = need;
    if feasible(lo) {
        return lo;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// The band-weighted sum of truncated Lévy–Prokhorov distances, with its
/// truncation certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LGhp {
    pub value: f64,
    /// The discarded tail is at most this.
    pub tail_bound: f64,
    pub terms: u32,
    pub exact_atoms: bool,
}

/// `sum_k 2^-k min(1, rho_LP(f_k nu, f_k nu'))`, truncated once the dyadic
/// tail drops below `tol`. Bands with identical weight vectors reuse the
/// cached flow computation.
pub fn l_ghp(a: &Collection, b: &Collection, tol: f64) -> LGhp {
    assert!(tol > 0.0, "tolerance must be positive");
    let metric = atom_metric(a, b);
    let terms = (1.0 / tol).log2().ceil().max(1.0) as u32;
    let mut value = 0.0;
    let mut cache: HashMap<Vec<u64>, f64> = HashMap::new();
    for k in 1..=terms {
        let wa: Vec<f64> = a.spaces.iter().map(|s| f_k(s.total_mass(), k)).collect();
        let wb: Vec<f64> = b.spaces.iter().map(|s| f_k(s.total_mass(), k)).collect();
        let key: Vec<u64> = wa.iter().chain(wb.iter()).map(|w| w.to_bits()).collect();
        let rho = *cache
            .entry(key)
            .or_insert_with(|| rho_lp_weighted(&wa, &wb, &metric.d, tol * 0.1));
        value += (2.0f64).powi(-(k as i32)) * rho.min(1.0);
    }
    LGhp {
        value,
        tail_bound: (2.0f64).powi(-(terms as i32)),
        terms,
        exact_atoms: metric.exact,
    }
}

/// `max(L_GHP, lp distance of the sorted size sequences)`; `p` is 1 or 2,
/// shorter sequences are zero-padded.
pub fn lp_ghp(a: &Collection, b: &Collection, p: u8, tol: f64) -> f64 {
    assert!(p == 1 || p == 2, "p must be 1 or 2");
    let sa = a.sizes();
    let sb = b.sizes();
    let len = sa.len().max(sb.len());
    let lp = if p == 1 {
        (0..len)
            .map(|i| (sa.get(i).copied().unwrap_or(0.0) - sb.get(i).copied().unwrap_or(0.0)).abs())
            .sum::<f64>()
    } else {
        (0..len)
            .map(|i| {
                let d = sa.get(i).copied().unwrap_or(0.0) - sb.get(i).copied().unwrap_or(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    };
    l_ghp(a, b, tol).value.max(lp)
}
