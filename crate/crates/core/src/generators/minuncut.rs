use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{PointSet, ProblemSpec};

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "GraphFile", into = "GraphFile")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphFile {
    n: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphFile> for Graph {
    type Error = Error;
    fn try_from(f: GraphFile) -> Result<Self> {
        Graph::new(f.n, f.edges.into_iter().map(|[a, b]| (a, b)).collect())
    }
}

impl From<Graph> for GraphFile {
    fn from(g: Graph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges.into_iter().map(|(a, b)| [a, b]).collect(),
        }
    }
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::invalid(format!("self loop at vertex {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::invalid(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self { n, edges }
    }

    pub fn path(n: usize) -> Self {
        Self {
            n,
            edges: (1..n).map(|i| (i - 1, i)).collect(),
        }
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n >= 3 {
            g.edges.push((n - 1, 0));
        }
        g
    }
}

/// Number of edges with both endpoints on the same side; `side[i]` is the
/// side of vertex `i`.
pub fn uncut_edges(g: &Graph, side: &[bool]) -> usize {
    g.edges.iter().filter(|&&(a, b)| side[a] == side[b]).count()
}

/// Minimum number of uncut edges over all bipartitions, with an optimal
/// side assignment. Vertex 0 is fixed to side `false`.
pub fn min_uncut_exhaustive(g: &Graph) -> Result<(usize, Vec<bool>)> {
    if g.n == 0 || g.n > 24 {
        return Err(Error::TooLarge(format!(
            "exhaustive Min-Uncut needs 1 <= n <= 24, got {}",
            g.n
        )));
    }
    let mut best = (usize::MAX, vec![false; g.n]);
    for mask in 0u32..(1 << (g.n - 1)) {
        let side: Vec<bool> = (0..g.n).map(|i| i > 0 && (mask >> (i - 1)) & 1 == 1).collect();
        let t = uncut_edges(g, &side);
        if t < best.0 {
            best = (t, side);
        }
    }
    Ok(best)
}

/// The unit vector `y / sqrt(n)` with `y_i = +1` or `-1` by side.
pub fn cut_vector(side: &[bool]) -> Vec<f64> {
    let s = 1.0 / (side.len() as f64).sqrt();
    side.iter().map(|&b| if b { -s } else { s }).collect()
}

#[derive(Debug, Clone)]
pub struct MinUncutReduction {
    pub points: PointSet,
    pub spec: ProblemSpec,
    /// Penalty multiplier `N`, the smallest integer above `2^(p+4) n^2 m (m+1)^2`.
    pub penalty: u64,
    /// `yes_values[t] = (t 2^p + N n) / n^(p/2)`: the `p`-th power of the cost
    /// at a unit cut vector with `t` uncut edges.
    pub yes_values: Vec<f64>,
    /// Width `1/(p (m+1))` of the near-cube region in the soundness argument.
    /// Informational only.
    pub epsilon: f64,
    /// The soundness argument assumes `p > 2 (1 + 1/(n-1))`.
    pub exponent_caveat: bool,
}

impl MinUncutReduction {
    /// `yes_values[t]^(1/p)`, the cost itself.
    pub fn yes_cost(&self, t: usize) -> f64 {
        self.yes_values[t].powf(1.0 / self.spec.p)
    }
}

/// Rows `e_i + e_j` per edge and `N^(1/p) e_i` per vertex, `k = n - 1`.
pub fn minuncut_reduce(g: &Graph, p: f64) -> Result<MinUncutReduction> {
    if !(p.is_finite() && p > 2.0) {
        return Err(Error::UnsupportedExponent {
            p,
            reason: "the Min-Uncut reduction requires p > 2",
        });
    }
    let n = g.n;
    if n < 2 {
        return Err(Error::invalid(format!("the Min-Uncut reduction needs n >= 2, got {n}")));
    }
    let m = g.edges.len();
    let (nf, mf) = (n as f64, m as f64);
    let bound = 2f64.powf(p + 4.0) * nf * nf * mf * (mf + 1.0) * (mf + 1.0);
    if bound >= 2f64.powi(53) {
        return Err(Error::TooLarge(format!(
            "penalty bound {bound:.3e} exceeds exact integer range"
        )));
    }
    let penalty = bound.floor() as u64 + 1;
    let nf_pen = penalty as f64;

    let root = nf_pen.powf(1.0 / p);
    let mut rows = DMatrix::zeros(m + n, n);
    for (r, &(a, b)) in g.edges.iter().enumerate() {
        rows[(r, a)] = 1.0;
        rows[(r, b)] = 1.0;
    }
    for i in 0..n {
        rows[(m + i, i)] = root;
    }
    let scale = nf.powf(p / 2.0);
    let yes_values = (0..=m)
        .map(|t| (t as f64 * 2f64.powf(p) + nf_pen * nf) / scale)
        .collect();
    Ok(MinUncutReduction {
        points: PointSet::new(rows)?,
        spec: ProblemSpec::new(n, n - 1, p)?,
        penalty,
        yes_values,
        epsilon: 1.0 / (p * (mf + 1.0)),
        exponent_caveat: p > 2.0 * (1.0 + 1.0 / (nf - 1.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::subspace_cost;

    #[test]
    fn graph_validation() {
        assert!(Graph::new(2, vec![(0, 2)]).is_err());
        assert!(Graph::new(2, vec![(1, 1)]).is_err());
        assert!(Graph::new(3, vec![(0, 1), (1, 0)]).is_err());
        let g: Graph = serde_json::from_str(r#"{"n": 3, "edges": [[0, 1], [1, 2]]}"#).unwrap();
        assert_eq!(g, Graph::path(3));
        assert!(serde_json::from_str::<Graph>(r#"{"n": 2, "edges": [[0, 0]]}"#).is_err());
    }

    #[test]
    fn triangle_p3() {
        let r = minuncut_reduce(&Graph::complete(3), 3.0).unwrap();
        assert_eq!(r.penalty, 55297);
        assert_eq!(r.points.m(), 6);
        let (t, side) = min_uncut_exhaustive(&Graph::complete(3)).unwrap();
        assert_eq!(t, 1);
        let expected = (8.0 + 3.0 * 55297.0) / 27f64.sqrt();
        assert!((r.yes_values[1] / expected - 1.0).abs() < 1e-15);
        let z = DMatrix::from_column_slice(3, 1, &cut_vector(&side));
        let c = subspace_cost(&r.points, &r.spec, &z).unwrap();
        assert!((c.powi(3) / r.yes_values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_edge_is_cut() {
        let g = Graph::new(2, vec![(0, 1)]).unwrap();
        let (t, side) = min_uncut_exhaustive(&g).unwrap();
        assert_eq!(t, 0);
        assert_ne!(side[0], side[1]);
        let r = minuncut_reduce(&g, 4.0).unwrap();
        assert_eq!(r.penalty, 2u64.pow(8) * 4 * 4 + 1);
        let z = cut_vector(&side);
        assert_eq!(z[0] + z[1], 0.0);
        assert_eq!(r.yes_values[0], 4097.0 * 2.0 / 4.0);
        assert!(minuncut_reduce(&g, 2.0).is_err());
    }

    #[test]
    fn small_graph_shapes() {
        assert_eq!(Graph::cycle(4).edges().len(), 4);
        assert_eq!(Graph::complete(4).edges().len(), 6);
        assert_eq!(min_uncut_exhaustive(&Graph::cycle(4)).unwrap().0, 0);
        assert_eq!(min_uncut_exhaustive(&Graph::complete(4)).unwrap().0, 2);
        assert_eq!(min_uncut_exhaustive(&Graph::path(5)).unwrap().0, 0);
    }
}
