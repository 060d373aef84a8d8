use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{normalize_measures, PointSet, ProblemSpec};
use crate::moments::{bernoulli_moment_exact, gamma_p};

/// Largest alphabet accepted by [`ulc_reduce`]; the instance has
/// `|E| 2^(R+1)` rows.
pub const MAX_ULC_ALPHABET: usize = 12;

/// One constraint of a Unique Label Cover instance. `pi[i]` is the label of
/// `w` matching label `i` of `v`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlcEdge {
    pub v: usize,
    pub w: usize,
    pub pi: Vec<usize>,
}

/// Bipartite Unique Label Cover instance with left side `V`, right side `W`
/// and alphabet `[R]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "UlcFile", into = "UlcFile")]
pub struct UlcInstance {
    v_count: usize,
    w_count: usize,
    r: usize,
    edges: Vec<UlcEdge>,
    /// `pi_inv[e][j]`: label of `v` matched to label `j` of `w`.
    pi_inv: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UlcFile {
    #[serde(rename = "V")]
    v: usize,
    #[serde(rename = "W")]
    w: usize,
    #[serde(rename = "R")]
    r: usize,
    edges: Vec<UlcEdge>,
}

impl TryFrom<UlcFile> for UlcInstance {
    type Error = Error;
    fn try_from(f: UlcFile) -> Result<Self> {
        UlcInstance::new(f.v, f.w, f.r, f.edges)
    }
}

impl From<UlcInstance> for UlcFile {
    fn from(u: UlcInstance) -> Self {
        UlcFile {
            v: u.v_count,
            w: u.w_count,
            r: u.r,
            edges: u.edges,
        }
    }
}

impl UlcInstance {
    pub fn new(v_count: usize, w_count: usize, r: usize, edges: Vec<UlcEdge>) -> Result<Self> {
        if r == 0 {
            return Err(Error::invalid("alphabet size R must be at least 1"));
        }
        if edges.is_empty() {
            return Err(Error::invalid("ULC instance has no edges"));
        }
        let mut pi_inv = Vec::with_capacity(edges.len());
        let mut touched_v = vec![false; v_count];
        let mut touched_w = vec![false; w_count];
        for (e, edge) in edges.iter().enumerate() {
            if edge.v >= v_count || edge.w >= w_count {
                return Err(Error::invalid(format!(
                    "edge {e} = ({}, {}) out of range for V = {v_count}, W = {w_count}",
                    edge.v, edge.w
                )));
            }
            if edge.pi.len() != r {
                return Err(Error::invalid(format!(
                    "edge {e}: permutation has length {}, expected R = {r}",
                    edge.pi.len()
                )));
            }
            let mut inv = vec![usize::MAX; r];
            for (i, &j) in edge.pi.iter().enumerate() {
                if j >= r || inv[j] != usize::MAX {
                    return Err(Error::invalid(format!("edge {e}: pi is not a permutation of 0..{r}")));
                }
                inv[j] = i;
            }
            pi_inv.push(inv);
            touched_v[edge.v] = true;
            touched_w[edge.w] = true;
        }
        if let Some(v) = touched_v.iter().position(|t| !t) {
            return Err(Error::invalid(format!("left vertex {v} is isolated")));
        }
        if let Some(w) = touched_w.iter().position(|t| !t) {
            return Err(Error::invalid(format!("right vertex {w} is isolated")));
        }
        Ok(Self {
            v_count,
            w_count,
            r,
            edges,
            pi_inv,
        })
    }

    pub fn v_count(&self) -> usize {
        self.v_count
    }

    pub fn w_count(&self) -> usize {
        self.w_count
    }

    pub fn alphabet(&self) -> usize {
        self.r
    }

    pub fn edges(&self) -> &[UlcEdge] {
        &self.edges
    }

    /// Dimension `|W| R` of the reduced instance.
    pub fn dim(&self) -> usize {
        self.w_count * self.r
    }

    fn edges_at_v(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(move |&e| self.edges[e].v == v)
    }

    fn degree_w(&self) -> Vec<usize> {
        let mut d = vec![0; self.w_count];
        for e in &self.edges {
            d[e.w] += 1;
        }
        d
    }

    /// `pi_wv(b_w)` for edge `e`: the vector over labels of `v` whose entry
    /// `i` is `b_w[pi_vw(i)]`.
    fn pull_back(&self, e: usize, b_w: &[f64]) -> Vec<f64> {
        self.edges[e].pi.iter().map(|&j| b_w[j]).collect()
    }

    /// `b_v`, the average of `pi_wv(b_w)` over the edges at `v`.
    fn average_at(&self, v: usize, b: &[Vec<f64>]) -> Vec<f64> {
        let mut acc = vec![0.0; self.r];
        let mut deg = 0usize;
        for e in self.edges_at_v(v) {
            for (a, x) in acc.iter_mut().zip(self.pull_back(e, &b[self.edges[e].w])) {
                *a += x;
            }
            deg += 1;
        }
        acc.iter().map(|a| a / deg as f64).collect()
    }
}

/// Parameter schedule for the hardness argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UlcParams {
    pub p: f64,
    pub eta: f64,
    pub tau: f64,
    pub beta: f64,
    pub delta: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub epsilon: f64,
}

/// `tau = eta^2/p`, `beta = tau^2`, `delta = (eta/(p g_p^2))^(p/(p-2)) tau^2/64`,
/// `B = (40 p g_p^2/(eta tau^2))^p` and `eps = eta/(2^p B)`.
///
/// Requires `eta ln(1/eta)^(p/2) < 2^(-p/2)/50`.
pub fn ulc_parameters(eta: f64, p: f64) -> Result<UlcParams> {
    if !(p.is_finite() && p > 2.0) {
        return Err(Error::UnsupportedExponent {
            p,
            reason: "the ULC parameter schedule requires p > 2",
        });
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Precondition(format!("eta must lie in (0, 1), got {eta}")));
    }
    let lhs = eta * (1.0 / eta).ln().powf(p / 2.0);
    let rhs = 2f64.powf(-p / 2.0) / 50.0;
    if lhs >= rhs {
        return Err(Error::Precondition(format!(
            "eta * ln(1/eta)^(p/2) < 2^(-p/2)/50 fails: {lhs:.6e} >= {rhs:.6e} (eta = {eta}, p = {p})"
        )));
    }
    let g2 = gamma_p(p)?.powi(2);
    let tau = eta * eta / p;
    let beta = tau * tau;
    let delta = (eta / (p * g2)).powf(p / (p - 2.0)) * tau * tau / 64.0;
    let b = (40.0 * p * g2 / (eta * tau * tau)).powf(p);
    let epsilon = eta / (2f64.powf(p) * b);
    Ok(UlcParams {
        p,
        eta,
        tau,
        beta,
        delta,
        b,
        epsilon,
    })
}

/// The reduced instance in counting-measure form.
#[derive(Debug, Clone)]
pub struct UlcReduction {
    pub points: PointSet,
    pub spec: ProblemSpec,
    /// Column measure `nu(w, i) = deg(w)/|E|` before normalization.
    pub col_weights: Vec<f64>,
    pub penalty: f64,
}

impl UlcReduction {
    /// Maps per-`w` label vectors to the normalized variable `sqrt(nu) b`.
    pub fn embed(&self, b: &[Vec<f64>]) -> Vec<f64> {
        b.iter()
            .flatten()
            .zip(&self.col_weights)
            .map(|(x, nu)| x * nu.sqrt())
            .collect()
    }
}

/// Rows over `z = (b_{w,i})`: for every edge `(v, w)` and `x` in `{-1,1}^R`,
/// the functional `f_{b_v}(x)` with weight `1/(|E| 2^R)` and the functional
/// `f_{b_v}(x) - f_{pi_wv(b_w)}(x)` with weight `B/(|E| 2^R)`.
///
/// `x_i = -1` exactly when bit `i` of the hypercube index is set.
pub fn ulc_reduce(u: &UlcInstance, p: f64, penalty: f64) -> Result<UlcReduction> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!("p must be >= 1, got {p}")));
    }
    if !(penalty.is_finite() && penalty > 0.0) {
        return Err(Error::invalid(format!("penalty B must be positive, got {penalty}")));
    }
    if u.r > MAX_ULC_ALPHABET {
        return Err(Error::TooLarge(format!(
            "alphabet R = {} exceeds {MAX_ULC_ALPHABET}",
            u.r
        )));
    }
    let r = u.r;
    let cube = 1usize << r;
    let dim = u.dim();
    let e_count = u.edges.len();
    let rows_total = 2 * e_count * cube;
    let base_weight = 1.0 / (e_count as f64 * cube as f64);

    let mut rows = DMatrix::zeros(rows_total, dim);
    let mut weights = Vec::with_capacity(rows_total);
    let sign = |mask: usize, i: usize| if (mask >> i) & 1 == 1 { -1.0 } else { 1.0 };
    for (e, edge) in u.edges.iter().enumerate() {
        let at_v: Vec<usize> = u.edges_at_v(edge.v).collect();
        let inv_deg = 1.0 / at_v.len() as f64;
        for mask in 0..cube {
            let own = 2 * e * cube + mask;
            let diff = own + cube;
            for &e2 in &at_v {
                let w2 = u.edges[e2].w;
                for j in 0..r {
                    let c = inv_deg * sign(mask, u.pi_inv[e2][j]);
                    rows[(own, w2 * r + j)] += c;
                    rows[(diff, w2 * r + j)] += c;
                }
            }
            for j in 0..r {
                rows[(diff, edge.w * r + j)] -= sign(mask, u.pi_inv[e][j]);
            }
        }
    }
    for _ in 0..e_count {
        weights.extend(std::iter::repeat_n(base_weight, cube));
        weights.extend(std::iter::repeat_n(penalty * base_weight, cube));
    }
    let col_weights: Vec<f64> = u
        .degree_w()
        .iter()
        .flat_map(|&d| std::iter::repeat_n(d as f64 / e_count as f64, r))
        .collect();
    let spec = ProblemSpec::new(dim, dim.saturating_sub(1), p)?;
    let weighted = PointSet::with_weights(rows, Some(weights), Some(col_weights.clone()))?;
    Ok(UlcReduction {
        points: normalize_measures(&weighted, &spec)?,
        spec,
        col_weights,
        penalty,
    })
}

/// Direct evaluation of the reduction's objective for label vectors `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UlcObjective {
    /// `E_(v,w) |f_{b_v}|_p^p`.
    pub edge_term: f64,
    /// `E_(v,w) |f_{b_v} - f_{pi_wv(b_w)}|_p^p`.
    pub penalty_term: f64,
    /// `edge_term + B * penalty_term`.
    pub total: f64,
    /// `E_(v,w) |b_w|_2^2`.
    pub constraint: f64,
}

/// Evaluates the objective by exact hypercube enumeration, independently
/// of the row matrix built by [`ulc_reduce`].
pub fn ulc_objective(u: &UlcInstance, p: f64, penalty: f64, b: &[Vec<f64>]) -> Result<UlcObjective> {
    if b.len() != u.w_count || b.iter().any(|x| x.len() != u.r) {
        return Err(Error::dims(format!(
            "expected {} label vectors of length {}",
            u.w_count, u.r
        )));
    }
    let e_count = u.edges.len() as f64;
    let mut edge_term = 0.0;
    let mut penalty_term = 0.0;
    let mut constraint = 0.0;
    for (e, edge) in u.edges.iter().enumerate() {
        let bv = u.average_at(edge.v, b);
        let pulled = u.pull_back(e, &b[edge.w]);
        let diff: Vec<f64> = bv.iter().zip(&pulled).map(|(a, c)| a - c).collect();
        edge_term += bernoulli_moment_exact(&bv, p)?;
        penalty_term += bernoulli_moment_exact(&diff, p)?;
        constraint += b[edge.w].iter().map(|x| x * x).sum::<f64>();
    }
    let edge_term = edge_term / e_count;
    let penalty_term = penalty_term / e_count;
    Ok(UlcObjective {
        edge_term,
        penalty_term,
        total: edge_term + penalty * penalty_term,
        constraint: constraint / e_count,
    })
}

/// Indicator vectors `b_w = e_{L(w)}`.
pub fn dictator_solution(u: &UlcInstance, labels_w: &[usize]) -> Result<Vec<Vec<f64>>> {
    if labels_w.len() != u.w_count || labels_w.iter().any(|&l| l >= u.r) {
        return Err(Error::invalid(
            "labeling must assign a label in 0..R to every right vertex",
        ));
    }
    Ok(labels_w
        .iter()
        .map(|&l| {
            let mut b = vec![0.0; u.r];
            b[l] = 1.0;
            b
        })
        .collect())
}

/// Fraction of edges with `pi_vw(L(v)) != L(w)`.
pub fn unsatisfied_fraction(u: &UlcInstance, labels_v: &[usize], labels_w: &[usize]) -> Result<f64> {
    if labels_v.len() != u.v_count || labels_w.len() != u.w_count {
        return Err(Error::invalid("labeling sizes do not match the instance"));
    }
    let bad = u.edges.iter().filter(|e| e.pi[labels_v[e.v]] != labels_w[e.w]).count();
    Ok(bad as f64 / u.edges.len() as f64)
}
