//! Directed feedback graphs.
//!
//! An edge `(i, j)` means "playing `i` reveals the loss of `j`". For every
//! vertex we keep both directions: `observes(i)` (out-neighbours, what the
//! signal shows) and `revealers(j)` (in-neighbours, the actions whose play
//! shows `j`). Independence is measured on the undirected support without
//! self-loops.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{run_stream, Purpose};

/// Largest vertex count for which the independence number is computed exactly.
pub const EXACT_INDEPENDENCE_LIMIT: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSpec {
    k: usize,
    observes: Vec<Vec<usize>>,
    revealers: Vec<Vec<usize>>,
}

/// Independence number, exact or a greedy lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Independence {
    pub value: usize,
    pub exact: bool,
}

impl GraphSpec {
    /// Builds a graph from 0-indexed directed edges. Duplicates are merged.
    pub fn new(k: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("graph needs at least one vertex".into()));
        }
        let mut observes = vec![Vec::new(); k];
        let mut revealers = vec![Vec::new(); k];
        for (i, j) in edges {
            if i >= k || j >= k {
                return Err(Error::InvalidInput(format!("edge ({i}, {j}) out of range for k = {k}")));
            }
            observes[i].push(j);
            revealers[j].push(i);
        }
        for list in observes.iter_mut().chain(revealers.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self {
            k,
            observes,
            revealers,
        })
    }

    /// `E = {(i, i)}`: plain bandit feedback.
    pub fn bandit(k: usize) -> Result<Self> {
        Self::new(k, (0..k).map(|i| (i, i)))
    }

    /// `E = [k] × [k]`: full information.
    pub fn full_information(k: usize) -> Result<Self> {
        Self::new(k, (0..k).flat_map(|i| (0..k).map(move |j| (i, j))))
    }

    /// Complete graph on distinct vertices, optionally with self-loops.
    pub fn complete(k: usize, self_loops: bool) -> Result<Self> {
        Self::new(
            k,
            (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).filter(|&(i, j)| self_loops || i != j),
        )
    }

    /// Undirected cycle `0 − 1 − … − (k−1) − 0`.
    pub fn cycle(k: usize, self_loops: bool) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..k {
            let j = (i + 1) % k;
            if i != j {
                edges.push((i, j));
                edges.push((j, i));
            }
            if self_loops {
                edges.push((i, i));
            }
        }
        Self::new(k, edges)
    }

    /// Erdős–Rényi digraph: each ordered pair `i ≠ j` is an edge with
    /// probability `q`; every vertex gets a self-loop when `self_loops`.
    pub fn erdos_renyi(k: usize, q: f64, self_loops: bool, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidInput(format!("edge probability must lie in [0, 1], got {q}")));
        }
        let mut rng = run_stream(seed, k as u64, Purpose::Losses);
        let mut edges = Vec::new();
        for i in 0..k {
            for j in 0..k {
                if (i == j && self_loops) || (i != j && rng.gen_bool(q)) {
                    edges.push((i, j));
                }
            }
        }
        Self::new(k, edges)
    }

    /// Random strongly observable graph: each vertex either has a self-loop
    /// (probability `loop_prob`) or is revealed by every other vertex, on top
    /// of Erdős–Rényi edges with probability `q`.
    pub fn random_strongly_observable<R: Rng + ?Sized>(
        k: usize,
        q: f64,
        loop_prob: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut edges = Vec::new();
        for j in 0..k {
            if rng.gen_bool(loop_prob) {
                edges.push((j, j));
            } else {
                edges.extend((0..k).filter(|&i| i != j).map(|i| (i, j)));
            }
            for i in 0..k {
                if i != j && rng.gen_bool(q) {
                    edges.push((i, j));
                }
            }
        }
        Self::new(k, edges)
    }

    /// Parses the edge-list format: first line `k`, then one `i j` pair per
    /// line, 1-indexed. Blank lines and `#` comments are ignored.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .enumerate()
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, detail: String| Error::Parse {
            what: format!("edge list line {}", line + 1),
            detail,
        };
        let (n, first) = lines
            .next()
            .ok_or_else(|| parse_err(0, "missing vertex count".into()))?;
        let k: usize = first.parse().map_err(|e| parse_err(n, format!("vertex count: {e}")))?;
        let mut edges = Vec::new();
        for (n, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(parse_err(n, format!("expected `i j`, got `{line}`")));
            }
            let parse = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|e| parse_err(n, format!("`{s}`: {e}")))?;
                if v == 0 || v > k {
                    return Err(parse_err(n, format!("vertex {v} outside 1..={k}")));
                }
                Ok(v - 1)
            };
            edges.push((parse(parts[0])?, parse(parts[1])?));
        }
        Self::new(k, edges)
    }

    pub fn load_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text)
    }

    /// Inverse of [`GraphSpec::parse_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.k);
        for (i, js) in self.observes.iter().enumerate() {
            for j in js {
                out.push_str(&format!("{} {}\n", i + 1, j + 1));
            }
        }
        out
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Vertices whose loss is revealed when `i` is played.
    pub fn observes(&self, i: usize) -> &[usize] {
        &self.observes[i]
    }

    /// Actions whose play reveals the loss of `j`.
    pub fn revealers(&self, j: usize) -> &[usize] {
        &self.revealers[j]
    }

    pub fn has_self_loop(&self, i: usize) -> bool {
        self.observes[i].binary_search(&i).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.observes
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
    }

    /// Every vertex observes itself or is observed by all other vertices.
    pub fn is_strongly_observable(&self) -> bool {
        (0..self.k).all(|i| self.has_self_loop(i) || self.revealers[i].iter().filter(|&&j| j != i).count() == self.k - 1)
    }

    /// Induced subgraph on `vertices` (relabelled in the given order).
    pub fn induced(&self, vertices: &[usize]) -> Result<Self> {
        let mut index = vec![usize::MAX; self.k];
        for (new, &old) in vertices.iter().enumerate() {
            if old >= self.k {
                return Err(Error::InvalidInput(format!("vertex {old} out of range")));
            }
            index[old] = new;
        }
        let edges = self
            .edges()
            .filter(|&(i, j)| index[i] != usize::MAX && index[j] != usize::MAX)
            .map(|(i, j)| (index[i], index[j]))
            .collect::<Vec<_>>();
        Self::new(vertices.len(), edges)
    }

    /// Undirected adjacency (no self-loops) as bitmasks.
    fn adjacency_masks(&self) -> Vec<u64> {
        let mut adj = vec![0u64; self.k];
        for (i, j) in self.edges() {
            if i != j {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
        adj
    }

    /// Size of the largest set of vertices with no edge (in either direction)
    /// between two distinct members. Exact for `k ≤ 24`; beyond that a greedy
    /// lower bound flagged `exact: false`.
    pub fn independence_number(&self) -> Independence {
        if self.k <= EXACT_INDEPENDENCE_LIMIT {
            let adj = self.adjacency_masks();
            let all = if self.k == 64 { u64::MAX } else { (1u64 << self.k) - 1 };
            let mut best = 0;
            branch_and_bound(&adj, all, 0, &mut best);
            Independence {
                value: best,
                exact: true,
            }
        } else {
            Independence {
                value: self.greedy_independent_set().len(),
                exact: false,
            }
        }
    }

    /// Minimum-degree greedy independent set.
    pub fn greedy_independent_set(&self) -> Vec<usize> {
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); self.k];
        for (i, j) in self.edges() {
            if i != j {
                neighbours[i].push(j);
                neighbours[j].push(i);
            }
        }
        for n in &mut neighbours {
            n.sort_unstable();
            n.dedup();
        }
        let mut alive = vec![true; self.k];
        let mut chosen = Vec::new();
        loop {
            let pick = (0..self.k)
                .filter(|&v| alive[v])
                .min_by_key(|&v| neighbours[v].iter().filter(|&&u| alive[u]).count());
            let Some(v) = pick else { break };
            chosen.push(v);
            alive[v] = false;
            for &u in &neighbours[v] {
                alive[u] = false;
            }
        }
        chosen
    }

    /// `Σ_i p_i / Σ_{j ∈ revealers(i)} p_j`.
    ///
    /// The logarithmic bound [`GraphSpec::lemma5_rhs`] is only guaranteed when
    /// every vertex reveals itself; a vertex observed only by others can make
    /// this sum arbitrarily large.
    pub fn lemma5_lhs(&self, p: &[f64]) -> Result<f64> {
        self.check_distribution(p)?;
        let mut total = 0.0;
        for i in 0..self.k {
            if self.revealers[i].is_empty() {
                return Err(Error::InvalidInput(format!("vertex {i} has no revealer")));
            }
            let denom: f64 = self.revealers[i].iter().map(|&j| p[j]).sum();
            total += p[i] / denom;
        }
        Ok(total)
    }

    /// `4 α log(4k / (α min_i p_i))` with `α` the independence number.
    pub fn lemma5_rhs(&self, p: &[f64]) -> Result<f64> {
        self.check_distribution(p)?;
        let alpha = self.independence_number().value as f64;
        let min_p = p.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(4.0 * alpha * (4.0 * self.k as f64 / (alpha * min_p)).ln())
    }

    fn check_distribution(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.k {
            return Err(Error::InvalidInput(format!("expected {} probabilities, got {}", self.k, p.len())));
        }
        if p.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("probabilities must be strictly positive".into()));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {s}")));
        }
        Ok(())
    }
}

fn branch_and_bound(adj: &[u64], candidates: u64, size: usize, best: &mut usize) {
    if candidates == 0 {
        *best = (*best).max(size);
        return;
    }
    if size + candidates.count_ones() as usize <= *best {
        return;
    }
    // branch on the candidate of highest remaining degree
    let mut pick = 0;
    let mut pick_degree = -1i64;
    let mut rest = candidates;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let degree = (adj[v] & candidates).count_ones() as i64;
        if degree > pick_degree {
            pick = v;
            pick_degree = degree;
        }
    }
    if pick_degree == 0 {
        // remaining candidates are pairwise non-adjacent
        *best = (*best).max(size + candidates.count_ones() as usize);
        return;
    }
    let bit = 1u64 << pick;
    branch_and_bound(adj, candidates & !bit & !adj[pick], size + 1, best);
    branch_and_bound(adj, candidates & !bit, size, best);
}

/// How a graph is specified in a configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSource {
    Bandit { k: usize },
    FullInformation { k: usize },
    Complete {
        k: usize,
        #[serde(default)]
        self_loops: bool,
    },
    Cycle {
        k: usize,
        #[serde(default)]
        self_loops: bool,
    },
    ErdosRenyi {
        k: usize,
        q: f64,
        #[serde(default)]
        self_loops: bool,
        seed: u64,
    },
    /// Edge-list file.
    File { path: String },
    /// Inline 1-indexed edges.
    Edges { k: usize, edges: Vec<(usize, usize)> },
}

impl GraphSource {
    pub fn build(&self) -> Result<GraphSpec> {
        match self {
            GraphSource::Bandit { k } => GraphSpec::bandit(*k),
            GraphSource::FullInformation { k } => GraphSpec::full_information(*k),
            GraphSource::Complete { k, self_loops } => GraphSpec::complete(*k, *self_loops),
            GraphSource::Cycle { k, self_loops } => GraphSpec::cycle(*k, *self_loops),
            GraphSource::ErdosRenyi {
                k,
                q,
                self_loops,
                seed,
            } => GraphSpec::erdos_renyi(*k, *q, *self_loops, *seed),
            GraphSource::File { path } => GraphSpec::load_edge_list(Path::new(path)),
            GraphSource::Edges { k, edges } => {
                if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i == 0 || j == 0 || i > *k || j > *k) {
                    return Err(Error::InvalidInput(format!("edge ({i}, {j}) outside 1..={k}")));
                }
                GraphSpec::new(*k, edges.iter().map(|&(i, j)| (i - 1, j - 1)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independence number by checking all 2^k subsets.
    fn brute_force_independence(g: &GraphSpec) -> usize {
        let k = g.k();
        let mut best = 0;
        for mask in 0u32..(1 << k) {
            let independent = g
                .edges()
                .all(|(i, j)| i == j || mask & (1 << i) == 0 || mask & (1 << j) == 0);
            if independent {
                best = best.max(mask.count_ones() as usize);
            }
        }
        best
    }

    #[test]
    fn observability_examples() {
        assert!(GraphSpec::bandit(4).unwrap().is_strongly_observable());
        assert!(!GraphSpec::new(3, []).unwrap().is_strongly_observable());
        assert!(GraphSpec::complete(5, false).unwrap().is_strongly_observable());
        assert!(GraphSpec::full_information(5).unwrap().is_strongly_observable());
        // loopless cycle on 4 vertices: vertex 0 is revealed only by 1 and 3
        assert!(!GraphSpec::cycle(4, false).unwrap().is_strongly_observable());
        // vertex 2 has no self-loop and is observed only by vertex 0: weakly observable
        let weak = GraphSpec::new(3, [(0, 0), (1, 1), (0, 2)]).unwrap();
        assert!(!weak.is_strongly_observable());
    }

    #[test]
    fn independence_examples() {
        assert_eq!(GraphSpec::complete(5, false).unwrap().independence_number().value, 1);
        assert_eq!(GraphSpec::new(7, []).unwrap().independence_number().value, 7);
        let c5 = GraphSpec::cycle(5, true).unwrap();
        assert_eq!(brute_force_independence(&c5), 2);
        assert_eq!(c5.independence_number(), Independence { value: 2, exact: true });
        assert_eq!(GraphSpec::bandit(6).unwrap().independence_number().value, 6);
    }

    #[test]
    fn branch_and_bound_matches_brute_force() {
        for seed in 0..200 {
            let k = 2 + (seed as usize % 11);
            let q = [0.1, 0.3, 0.6][seed as usize % 3];
            let g = GraphSpec::erdos_renyi(k, q, seed % 2 == 0, seed).unwrap();
            assert_eq!(g.independence_number().value, brute_force_independence(&g), "seed {seed}");
        }
    }

    #[test]
    fn large_graphs_fall_back_to_greedy() {
        let g = GraphSpec::cycle(30, true).unwrap();
        let ind = g.independence_number();
        assert!(!ind.exact);
        assert!(ind.value <= 15 && ind.value >= 10);
        let exact = GraphSpec::cycle(24, false).unwrap().independence_number();
        assert_eq!(exact, Independence { value: 12, exact: true });
    }

    #[test]
    fn subgraph_independence_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..100 {
            let g = GraphSpec::erdos_renyi(10, 0.3, true, seed).unwrap();
            let full = g.independence_number().value;
            let vertices: Vec<usize> = (0..10).filter(|_| rng.gen_bool(0.6)).collect();
            if vertices.is_empty() {
                continue;
            }
            let sub = g.induced(&vertices).unwrap();
            assert!(sub.independence_number().value <= full);
        }
    }

    #[test]
    fn independence_sum_examples() {
        let k = 5;
        let uniform = vec![1.0 / k as f64; k];
        let complete = GraphSpec::complete(k, true).unwrap();
        assert!((complete.lemma5_lhs(&uniform).unwrap() - 1.0).abs() < 1e-12);
        let bandit = GraphSpec::bandit(k).unwrap();
        assert!((bandit.lemma5_lhs(&uniform).unwrap() - 5.0).abs() < 1e-12);
        let empty = GraphSpec::new(2, [(0, 0)]).unwrap();
        assert!(empty.lemma5_lhs(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn independence_sum_bound_on_self_looped_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for trial in 0..200 {
            let k = rng.gen_range(2..=10);
            let g = GraphSpec::random_strongly_observable(k, rng.gen_range(0.0..0.5), 1.0, &mut rng).unwrap();
            for _ in 0..5 {
                let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..1.0f64).powi(3) + 1e-6).collect();
                let s: f64 = raw.iter().sum();
                let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
                let lhs = g.lemma5_lhs(&p).unwrap();
                let rhs = g.lemma5_rhs(&p).unwrap();
                assert!(lhs <= rhs, "trial {trial}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn revealers_and_observes_are_consistent() {
        let g = GraphSpec::erdos_renyi(8, 0.4, false, 9).unwrap();
        for i in 0..8 {
            for &j in g.observes(i) {
                assert!(g.revealers(j).contains(&i));
            }
            for &j in g.revealers(i) {
                assert!(g.observes(j).contains(&i));
            }
        }
    }

    #[test]
    fn edge_list_roundtrip_and_errors() {
        let text = "# small graph\n3\n1 1\n1 2\n\n3 1\n";
        let g = GraphSpec::parse_edge_list(text).unwrap();
        assert_eq!(g.k(), 3);
        assert_eq!(g.observes(0), &[0, 1]);
        assert_eq!(g.revealers(0), &[0, 2]);
        assert_eq!(GraphSpec::parse_edge_list(&g.to_edge_list()).unwrap(), g);
        assert!(GraphSpec::parse_edge_list("3\n1 4\n").is_err());
        assert!(GraphSpec::parse_edge_list("3\n1\n").is_err());
        assert!(GraphSpec::parse_edge_list("").is_err());
    }

    #[test]
    fn graph_source_from_json() {
        let src: GraphSource = serde_json::from_str(r#"{"kind":"edges","k":3,"edges":[[1,2],[2,3]]}"#).unwrap();
        let g = src.build().unwrap();
        assert_eq!(g.observes(0), &[1]);
        let bad: GraphSource = serde_json::from_str(r#"{"kind":"edges","k":3,"edges":[[0,2]]}"#).unwrap();
        assert!(bad.build().is_err());
    }
}
