//! The discrete measured graph: critical Erdős–Rényi sampling and
//! component/distance queries.
//!
//! Vertices are `1..=n`. Each vertex carries mass `n^(-2/3)` and each edge
//! length `n^(-1/3)`; both are derived from `n` and materialized to floating
//! point only when reporting, so conservation checks can run on integer
//! vertex counts.

use std::collections::HashSet;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Clamped critical-window edge probability `1/n + lambda * n^(-4/3)`.
///
/// The raw value is clamped to `[0,1]`; use [`p_critical_strict`] to get an
/// error instead when it falls outside.
pub fn p_critical(lambda: f64, n: u64) -> f64 {
    p_critical_raw(lambda, n).clamp(0.0, 1.0)
}

/// Strict variant: errors when the raw value leaves `[0,1]`.
pub fn p_critical_strict(lambda: f64, n: u64) -> Result<f64> {
    let raw = p_critical_raw(lambda, n);
    if !(0.0..=1.0).contains(&raw) {
        return Err(Error::InvalidWindow { lambda, n, raw });
    }
    Ok(raw)
}

fn p_critical_raw(lambda: f64, n: u64) -> f64 {
    // n^(4/3) = n * cbrt(n); cbrt is exact on perfect cubes, which keeps the
    // dyadic cancellation cases exact.
    let nf = n as f64;
    1.0 / nf + lambda / (nf * nf.cbrt())
}

/// Non-increasing sequence of rescaled component masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSequence(Vec<f64>);

impl SizeSequence {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("sizes are finite"));
        SizeSequence(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Compensated (Kahan) sum of the entries.
    pub fn total(&self) -> f64 {
        kahan_sum(self.0.iter().copied())
    }

    /// Squared l2 norm of the sequence.
    pub fn l2_squared(&self) -> f64 {
        kahan_sum(self.0.iter().map(|x| x * x))
    }
}

/// Kahan-compensated summation; keeps conservation checks under 1e-12 even
/// for ten-thousand-term sums.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for v in values {
        let y = v - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Summary of one connected component.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    /// Canonical id: the minimum vertex id of the component.
    pub id: u32,
    /// Rescaled mass `n_vertices * n^(-2/3)`.
    pub size: f64,
    pub n_vertices: u32,
    pub n_edges: u32,
    /// `n_edges - n_vertices + 1`; zero exactly for trees.
    pub surplus: u32,
    /// Exact rescaled diameter (max BFS hop distance times `n^(-1/3)`).
    pub diameter: f64,
    /// Max depth-first exploration height, rescaled by `n^(-1/3)`.
    pub height: f64,
}

/// Immutable snapshot of the discrete measured graph.
///
/// All queries are pure; the state is safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    n: u32,
    lambda: f64,
    seed: u64,
    /// Sorted lexicographically, `u < v`, both in `1..=n`.
    edges: Vec<(u32, u32)>,
}

impl GraphState {
    /// Builds a state from an explicit edge list, validating and
    /// canonicalizing it (sorted, deduplicated, `u < v`).
    pub fn from_edges(n: u32, lambda: f64, seed: u64, edges: Vec<(u32, u32)>) -> Result<Self> {
        let mut canon: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if u < 1 || v > n || u == v {
                return Err(Error::InvalidSpec(format!(
                    "edge ({a},{b}) is not a pair 1 <= u < v <= {n}"
                )));
            }
            canon.push((u, v));
        }
        canon.sort_unstable();
        canon.dedup();
        Ok(GraphState {
            n,
            lambda,
            seed,
            edges: canon,
        })
    }

    /// Samples `G(n, p_critical(lambda, n))`: each of the `C(n,2)` pairs is
    /// present independently, deterministically in `(n, lambda, seed)`.
    ///
    /// Sampling draws the edge count from `Binomial(C(n,2), p)` and then a
    /// uniform set of that many distinct pairs (Floyd's algorithm), which is
    /// distributionally identical to `C(n,2)` Bernoulli trials but runs in
    /// `O(#edges)`.
    pub fn sample_er(n: u32, lambda: f64, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSpec(format!("need n >= 2, got {n}")));
        }
        let p = p_critical(lambda, u64::from(n));
        let total = pair_count(n);
        let mut rng = rng::stream(seed, "er-edge-sample");
        let count = Binomial::new(total, p)
            .expect("p in [0,1]")
            .sample(&mut rng);
        let codes = sample_distinct(total, count, &mut rng);
        let mut edges: Vec<(u32, u32)> = codes.into_iter().map(|c| decode_pair(c, n)).collect();
        edges.sort_unstable();
        Ok(GraphState {
            n,
            lambda,
            seed,
            edges,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Vertex mass `n^(-2/3)`.
    pub fn mass_per_vertex(&self) -> f64 {
        let c = f64::from(self.n).cbrt();
        1.0 / (c * c)
    }

    /// Edge length `n^(-1/3)`.
    pub fn length_per_edge(&self) -> f64 {
        1.0 / f64::from(self.n).cbrt()
    }

    /// Adjacency lists indexed by vertex id (slot 0 unused), neighbors
    /// ascending.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        adjacency_from_edges(self.n, &self.edges)
    }

    /// One summary per connected component, sorted by (size desc, id asc).
    pub fn components(&self) -> Vec<ComponentSummary> {
        let adj = self.adjacency();
        summarize_components(self.n, &adj, self.mass_per_vertex(), self.length_per_edge())
    }

    /// Rescaled component masses, non-increasing. Sums to `n^(1/3)` exactly
    /// up to float materialization.
    pub fn sizes_rescaled(&self) -> SizeSequence {
        let adj = self.adjacency();
        let mass = self.mass_per_vertex();
        let sizes = component_vertex_lists(self.n, &adj)
            .into_iter()
            .map(|m| m.len() as f64 * mass)
            .collect();
        SizeSequence::new(sizes)
    }

    /// Exact rescaled diameter of the component with canonical id
    /// `component_id`.
    pub fn component_diameter(&self, component_id: u32) -> Result<f64> {
        let adj = self.adjacency();
        let members = self
            .component_members(component_id, &adj)
            .ok_or(Error::UnknownComponent(component_id))?;
        let n_edges = count_edges(&adj, &members);
        Ok(diameter_hops(&adj, &members, n_edges) as f64 * self.length_per_edge())
    }

    /// Vertex list of the component whose minimum vertex is `component_id`,
    /// or `None` if `component_id` is not a canonical id.
    pub(crate) fn component_members(
        &self,
        component_id: u32,
        adj: &[Vec<u32>],
    ) -> Option<Vec<u32>> {
        if component_id < 1 || component_id > self.n {
            return None;
        }
        let members = collect_component(adj, component_id);
        // Canonical means: the requested vertex is the minimum of its component.
        if members[0] != component_id {
            return None;
        }
        Some(members)
    }
}

/// `C(n,2)` as u64.
pub fn pair_count(n: u32) -> u64 {
    u64::from(n) * u64::from(n - 1) / 2
}

/// Floyd's algorithm: uniform set of `count` distinct values in `0..total`.
fn sample_distinct(total: u64, count: u64, rng: &mut impl Rng) -> Vec<u64> {
    assert!(count <= total);
    let mut chosen = HashSet::with_capacity(count as usize);
    let mut out = Vec::with_capacity(count as usize);
    for j in (total - count)..total {
        let r = rng.gen_range(0..=j);
        let pick = if chosen.insert(r) { r } else { j };
        if pick != r {
            chosen.insert(pick);
        }
        out.push(pick);
    }
    out
}

/// Lexicographic rank of pair `(u, v)` with `1 <= u < v <= n`.
#[allow(dead_code)]
pub(crate) fn pair_code(u: u32, v: u32, n: u32) -> u64 {
    let (u, v, n) = (u64::from(u), u64::from(v), u64::from(n));
    // pairs with first coordinate < u, then offset within row u
    (u - 1) * n - u * (u - 1) / 2 + (v - u - 1)
}

/// Inverse of [`pair_code`].
pub(crate) fn decode_pair(code: u64, n: u32) -> (u32, u32) {
    // Binary search for the row: largest u with offset(u) <= code, where
    // offset(u) = (u-1)*n - u*(u-1)/2.
    let nn = u64::from(n);
    let offset = |u: u64| (u - 1) * nn - u * (u - 1) / 2;
    let (mut lo, mut hi) = (1u64, nn - 1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if offset(mid) <= code {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let u = lo;
    let v = u + 1 + (code - offset(u));
    debug_assert!(v <= nn);
    (u as u32, v as u32)
}

/// Builds ascending adjacency lists (index 0 unused).
pub(crate) fn adjacency_from_edges(n: u32, edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
    let mut adj = vec![Vec::new(); n as usize + 1];
    for &(u, v) in edges {
        adj[u as usize].push(v);
        adj[v as usize].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Vertices of the component containing `start`, sorted ascending.
pub(crate) fn collect_component(adj: &[Vec<u32>], start: u32) -> Vec<u32> {
    let mut members = vec![start];
    let mut seen = HashSet::from([start]);
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u as usize] {
            if seen.insert(v) {
                members.push(v);
                queue.push_back(v);
            }
        }
    }
    members.sort_unstable();
    members
}

/// All components as sorted vertex lists, ordered by canonical id.
pub(crate) fn component_vertex_lists(n: u32, adj: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut seen = vec![false; n as usize + 1];
    let mut comps = Vec::new();
    for start in 1..=n {
        if seen[start as usize] {
            continue;
        }
        let members = collect_component(adj, start);
        for &m in &members {
            seen[m as usize] = true;
        }
        comps.push(members);
    }
    comps
}

/// Number of edges with both endpoints in `members` (assumes `members` is a
/// full component, so every incident edge is internal).
pub(crate) fn count_edges(adj: &[Vec<u32>], members: &[u32]) -> u32 {
    let deg_sum: usize = members.iter().map(|&v| adj[v as usize].len()).sum();
    (deg_sum / 2) as u32
}

/// BFS hop distances from `start`; `u32::MAX` marks unreachable vertices.
pub(crate) fn bfs_hops(adj: &[Vec<u32>], start: u32) -> Vec<u32> {
    let mut dist = vec![u32::MAX; adj.len()];
    dist[start as usize] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in &adj[u as usize] {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Exact diameter in hops of one component.
///
/// Trees use the two-sweep shortcut (exact on acyclic graphs); anything with
/// a cycle falls back to all-source BFS.
pub(crate) fn diameter_hops(adj: &[Vec<u32>], members: &[u32], n_edges: u32) -> u32 {
    if members.len() == 1 {
        return 0;
    }
    let is_tree = n_edges == members.len() as u32 - 1;
    if is_tree {
        let d0 = bfs_hops(adj, members[0]);
        let far = *members
            .iter()
            .max_by_key(|&&v| d0[v as usize])
            .expect("nonempty");
        let d1 = bfs_hops(adj, far);
        members.iter().map(|&v| d1[v as usize]).max().unwrap()
    } else {
        all_source_diameter_hops(adj, members)
    }
}

/// All-source BFS maximum distance; the oracle the two-sweep shortcut is
/// checked against.
pub(crate) fn all_source_diameter_hops(adj: &[Vec<u32>], members: &[u32]) -> u32 {
    let mut best = 0;
    for &s in members {
        let d = bfs_hops(adj, s);
        for &v in members {
            best = best.max(d[v as usize]);
        }
    }
    best
}

/// Max depth-first exploration depth starting at `start` with ascending
/// neighbor order.
pub(crate) fn dfs_max_depth(adj: &[Vec<u32>], start: u32, visited: &mut [bool]) -> u32 {
    let mut max_depth = 0;
    // explicit frames: (vertex, index into its neighbor list)
    let mut frames: Vec<(u32, usize)> = vec![(start, 0)];
    visited[start as usize] = true;
    loop {
        let depth = frames.len();
        let Some(&(u, idx)) = frames.last() else {
            break;
        };
        let neighbors = &adj[u as usize];
        if idx < neighbors.len() {
            frames.last_mut().expect("nonempty").1 += 1;
            let v = neighbors[idx];
            if !visited[v as usize] {
                visited[v as usize] = true;
                frames.push((v, 0));
                max_depth = max_depth.max(depth as u32);
            }
        } else {
            frames.pop();
        }
    }
    max_depth
}

/// Component summaries over prebuilt adjacency lists; shared with the
/// dynamics engine so snapshots use the same code path.
pub(crate) fn summarize_components(
    n: u32,
    adj: &[Vec<u32>],
    mass_per_vertex: f64,
    length_per_edge: f64,
) -> Vec<ComponentSummary> {
    let comps = component_vertex_lists(n, adj);
    summarize_component_list(&comps, adj, mass_per_vertex, length_per_edge)
}

/// Summaries for explicitly listed components (each sorted ascending).
pub(crate) fn summarize_component_list(
    comps: &[Vec<u32>],
    adj: &[Vec<u32>],
    mass_per_vertex: f64,
    length_per_edge: f64,
) -> Vec<ComponentSummary> {
    let mut out = Vec::with_capacity(comps.len());
    let mut visited = vec![false; adj.len()];
    for members in comps {
        let id = members[0];
        let n_vertices = members.len() as u32;
        let n_edges = count_edges(adj, members);
        let surplus = n_edges + 1 - n_vertices;
        let diameter = diameter_hops(adj, members, n_edges) as f64 * length_per_edge;
        let height = dfs_max_depth(adj, id, &mut visited) as f64 * length_per_edge;
        out.push(ComponentSummary {
            id,
            size: f64::from(n_vertices) * mass_per_vertex,
            n_vertices,
            n_edges,
            surplus,
            diameter,
            height,
        });
    }
    out.sort_by(|a, b| b.n_vertices.cmp(&a.n_vertices).then(a.id.cmp(&b.id)));
    out
}

/// On-disk snapshot: the graph plus the simulation time it was taken at.
///
/// Bit-exact round-trip: reading a file written by [`write_snapshot`] and
/// writing it again reproduces the same bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub n: u32,
    pub lambda: f64,
    pub seed: u64,
    pub time: f64,
    pub edges: Vec<(u32, u32)>,
}

impl Snapshot {
    pub fn new(state: &GraphState, time: f64) -> Self {
        Snapshot {
            n: state.n,
            lambda: state.lambda,
            seed: state.seed,
            time,
            edges: state.edges.clone(),
        }
    }

    pub fn into_state(self) -> Result<(GraphState, f64)> {
        let time = self.time;
        let state = GraphState::from_edges(self.n, self.lambda, self.seed, self.edges)?;
        Ok((state, time))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }
}

pub fn write_snapshot(state: &GraphState, time: f64, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(Snapshot::new(state, time).to_json().as_bytes())?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(GraphState, f64)> {
    let mut raw = String::new();
    BufReader::new(std::fs::File::open(path)?).read_to_string(&mut raw)?;
    let snap: Snapshot = serde_json::from_str(raw.trim_end())?;
    snap.into_state()
}
