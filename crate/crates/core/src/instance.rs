//! The Subspace(k,p) instance model and its two objectives.
//!
//! A [`PointSet`] holds `m` points of `R^n` as the rows of an `m x n`
//! matrix together with optional row measure `mu` and column measure `nu`.
//! Distances are measured through an orthonormal basis `Z` of the orthogonal
//! complement of the candidate subspace: `d(a_i, V) = |a_i^T Z|_2`.
//!
//! With non-unit measures the `p`-norm over points is taken with respect to
//! `mu` and the Euclidean geometry on `R^n` with respect to `nu`.
//! [`normalize_measures`] rewrites such an instance into counting-measure form;
//! the solver, rounding and baselines all work in those coordinates.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{EigenSpectrum, SymMatrix};

/// Tolerance for the orthonormality check in [`subspace_cost`].
pub const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    rows: DMatrix<f64>,
    row_weights: Option<Vec<f64>>,
    col_weights: Option<Vec<f64>>,
}

impl PointSet {
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        Self::with_weights(rows, None, None)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::invalid("instance must contain at least one point (m >= 1)"));
        }
        let n = rows[0].len();
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(Error::dims(format!("row {i} has length {} but n = {n}", r.len())));
        }
        Self::new(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
    }

    pub fn with_weights(
        rows: DMatrix<f64>,
        row_weights: Option<Vec<f64>>,
        col_weights: Option<Vec<f64>>,
    ) -> Result<Self> {
        let (m, n) = rows.shape();
        if m == 0 {
            return Err(Error::invalid("instance must contain at least one point (m >= 1)"));
        }
        if n == 0 {
            return Err(Error::invalid("ambient dimension must be at least 1 (n >= 1)"));
        }
        if let Some(pos) = rows.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at row {}, column {}",
                pos % m,
                pos / m
            )));
        }
        check_weights("row_weights", row_weights.as_deref(), m)?;
        check_weights("col_weights", col_weights.as_deref(), n)?;
        Ok(Self {
            rows,
            row_weights,
            col_weights,
        })
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }

    pub fn row_weights(&self) -> Option<&[f64]> {
        self.row_weights.as_deref()
    }

    pub fn col_weights(&self) -> Option<&[f64]> {
        self.col_weights.as_deref()
    }

    pub fn row_weight(&self, i: usize) -> f64 {
        self.row_weights.as_ref().map_or(1.0, |w| w[i])
    }

    pub fn col_weight(&self, j: usize) -> f64 {
        self.col_weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// True when both measures are the counting measure.
    pub fn is_unweighted(&self) -> bool {
        let ones = |w: &Option<Vec<f64>>| w.as_ref().is_none_or(|w| w.iter().all(|&x| x == 1.0));
        ones(&self.row_weights) && ones(&self.col_weights)
    }

    /// Same instance with every row multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::with_weights(&self.rows * c, self.row_weights.clone(), self.col_weights.clone())
    }

    /// `sum_i mu(i) |a_i|_2^2`.
    pub fn weighted_frobenius_sq(&self) -> f64 {
        (0..self.m())
            .map(|i| self.row_weight(i) * self.rows.row(i).norm_squared())
            .sum()
    }
}

fn check_weights(name: &str, w: Option<&[f64]>, len: usize) -> Result<()> {
    let Some(w) = w else { return Ok(()) };
    if w.len() != len {
        return Err(Error::dims(format!("{name} has length {} but expected {len}", w.len())));
    }
    if let Some((i, x)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
        return Err(Error::invalid(format!(
            "{name}[{i}] = {x} is not a positive finite weight"
        )));
    }
    Ok(())
}

/// Target dimension `k` and exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub k: usize,
    pub p: f64,
}

impl ProblemSpec {
    /// Validates `0 <= k <= n-1` and `p >= 1`.
    pub fn new(n: usize, k: usize, p: f64) -> Result<Self> {
        let spec = Self { k, p };
        spec.check(n)?;
        Ok(spec)
    }

    pub fn check(&self, n: usize) -> Result<()> {
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(Error::invalid(format!("p must be a finite real >= 1, got {}", self.p)));
        }
        if n == 0 || self.k > n - 1 {
            return Err(Error::invalid(format!(
                "k must satisfy 0 <= k <= n-1 = {}, got k = {}",
                n.saturating_sub(1),
                self.k
            )));
        }
        Ok(())
    }

    /// Number of complement directions `n - k`.
    pub fn codim(&self, n: usize) -> usize {
        n - self.k
    }
}

/// Orthonormal complement basis `Z` (`n x (n-k)`) and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceSolution {
    pub z: DMatrix<f64>,
    pub value: f64,
}

/// Output of the relaxation solver.
#[derive(Debug, Clone)]
pub struct RelaxationSolution {
    pub x: SymMatrix,
    pub value: f64,
    pub spectrum: EigenSpectrum,
    pub iterations: usize,
    pub converged: bool,
    /// Un-rooted objective `sum_i mu(i) (a_i^T X a_i)^(p/2)` of every
    /// accepted iterate, starting with the initial point.
    pub history: Vec<f64>,
}

/// `(sum_i mu(i) |a_i^T Z|_2^p)^(1/p)`.
///
/// `Z` must have `n` rows and `n-k` columns orthonormal with respect to the
/// column measure (the standard inner product for unweighted instances).
pub fn subspace_cost(ps: &PointSet, spec: &ProblemSpec, z: &DMatrix<f64>) -> Result<f64> {
    spec.check(ps.n())?;
    let n = ps.n();
    let codim = spec.codim(n);
    if z.nrows() != n || z.ncols() != codim {
        return Err(Error::dims(format!(
            "Z must be {n}x{codim}, got {}x{}",
            z.nrows(),
            z.ncols()
        )));
    }
    check_orthonormal(z, ps.col_weights(), ORTHONORMAL_TOL)?;
    Ok(subspace_cost_unchecked(ps, spec.p, z))
}

pub(crate) fn subspace_cost_unchecked(ps: &PointSet, p: f64, z: &DMatrix<f64>) -> f64 {
    let projected = ps.rows() * z;
    let total: f64 = projected
        .row_iter()
        .enumerate()
        .map(|(i, r)| ps.row_weight(i) * r.norm().powf(p))
        .sum();
    total.powf(1.0 / p)
}

/// Checks `Z^T diag(nu) Z = I` entrywise within `tol`.
pub fn check_orthonormal(z: &DMatrix<f64>, nu: Option<&[f64]>, tol: f64) -> Result<()> {
    let weighted = match nu {
        Some(w) => DMatrix::from_fn(z.nrows(), z.ncols(), |i, j| w[i] * z[(i, j)]),
        None => z.clone(),
    };
    let gram = z.transpose() * weighted;
    for a in 0..gram.nrows() {
        for b in a..gram.ncols() {
            let target = if a == b { 1.0 } else { 0.0 };
            let v = gram[(a, b)];
            if !v.is_finite() || (v - target).abs() > tol {
                return Err(Error::NotOrthonormal {
                    first: a,
                    second: b,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

/// Quadratic forms `a_i^T X a_i` for every row.
pub fn quadratic_forms(ps: &PointSet, x: &SymMatrix) -> Result<Vec<f64>> {
    if x.dim() != ps.n() {
        return Err(Error::dims(format!(
            "X is {0}x{0} but the instance has n = {1}",
            x.dim(),
            ps.n()
        )));
    }
    let ax = ps.rows() * x.as_matrix();
    Ok(ax
        .row_iter()
        .zip(ps.rows().row_iter())
        .map(|(l, r)| l.dot(&r))
        .collect())
}

/// `(sum_i mu(i) (a_i^T X a_i)^(p/2))^(1/p)`, negative forms clamped to 0.
pub fn relaxation_cost(ps: &PointSet, spec: &ProblemSpec, x: &SymMatrix) -> Result<f64> {
    let forms = quadratic_forms(ps, x)?;
    let half = spec.p / 2.0;
    let total: f64 = forms
        .iter()
        .enumerate()
        .map(|(i, &q)| ps.row_weight(i) * q.max(0.0).powf(half))
        .sum();
    Ok(total.powf(1.0 / spec.p))
}

/// Rewrites a weighted instance in counting-measure form.
///
/// Entry `(i, j)` becomes `A_ij mu(i)^(1/p) / sqrt(nu(j))`. A solution `z`
/// of the weighted instance corresponds to `z~_j = sqrt(nu(j)) z_j`.
pub fn normalize_measures(ps: &PointSet, spec: &ProblemSpec) -> Result<PointSet> {
    if !(spec.p.is_finite() && spec.p >= 1.0) {
        return Err(Error::invalid(format!("p must be >= 1, got {}", spec.p)));
    }
    if ps.is_unweighted() {
        return PointSet::new(ps.rows().clone());
    }
    let inv_p = 1.0 / spec.p;
    let rows = DMatrix::from_fn(ps.m(), ps.n(), |i, j| {
        ps.rows()[(i, j)] * ps.row_weight(i).powf(inv_p) / ps.col_weight(j).sqrt()
    });
    PointSet::new(rows)
}

/// Maps `Z` of a weighted instance to the normalized coordinates.
pub fn to_normalized_coordinates(ps: &PointSet, z: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), z.ncols(), |j, c| ps.col_weight(j).sqrt() * z[(j, c)])
}

/// Maps `Z~` in normalized coordinates back to the weighted instance.
pub fn from_normalized_coordinates(ps: &PointSet, z: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(z.nrows(), z.ncols(), |j, c| z[(j, c)] / ps.col_weight(j).sqrt())
}

/// On-disk representation of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub col_weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl InstanceFile {
    pub fn from_instance(ps: &PointSet, spec: &ProblemSpec, meta: BTreeMap<String, String>) -> Self {
        Self {
            m: ps.m(),
            n: ps.n(),
            k: spec.k,
            p: spec.p,
            rows: ps.rows().row_iter().map(|r| r.iter().copied().collect()).collect(),
            row_weights: ps.row_weights().map(<[f64]>::to_vec),
            col_weights: ps.col_weights().map(<[f64]>::to_vec),
            meta,
        }
    }

    pub fn into_instance(self) -> Result<(PointSet, ProblemSpec)> {
        if self.m == 0 || self.rows.is_empty() {
            return Err(Error::invalid("instance must contain at least one point (m >= 1)"));
        }
        if self.rows.len() != self.m {
            return Err(Error::dims(format!(
                "field \"m\" = {} but \"rows\" has {} entries",
                self.m,
                self.rows.len()
            )));
        }
        if let Some((i, r)) = self.rows.iter().enumerate().find(|(_, r)| r.len() != self.n) {
            return Err(Error::dims(format!(
                "field \"n\" = {} but rows[{i}] has {} entries",
                self.n,
                r.len()
            )));
        }
        let rows = DMatrix::from_fn(self.m, self.n, |i, j| self.rows[i][j]);
        let ps = PointSet::with_weights(rows, self.row_weights, self.col_weights)?;
        let spec = ProblemSpec::new(self.n, self.k, self.p)?;
        Ok((ps, spec))
    }
}

/// Reads an instance file, returning the point set, the problem and the
/// free-form metadata.
pub fn load_instance_with_meta(path: &Path) -> Result<(PointSet, ProblemSpec, BTreeMap<String, String>)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: InstanceFile = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let meta = file.meta.clone();
    let (ps, spec) = file.into_instance()?;
    Ok((ps, spec, meta))
}

pub fn load_instance(path: &Path) -> Result<(PointSet, ProblemSpec)> {
    load_instance_with_meta(path).map(|(ps, spec, _)| (ps, spec))
}

pub fn save_instance(ps: &PointSet, spec: &ProblemSpec, path: &Path) -> Result<()> {
    save_instance_with_meta(ps, spec, &BTreeMap::new(), path)
}

pub fn save_instance_with_meta(
    ps: &PointSet,
    spec: &ProblemSpec,
    meta: &BTreeMap<String, String>,
    path: &Path,
) -> Result<()> {
    spec.check(ps.n())?;
    let file = InstanceFile::from_instance(ps, spec, meta.clone());
    let mut text = serde_json::to_string_pretty(&file).expect("instance serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn e1e2() -> PointSet {
        PointSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn subspace_cost_examples() {
        let spec = ProblemSpec::new(2, 1, 2.0).unwrap();
        let z = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        assert_eq!(subspace_cost(&e1e2(), &spec, &z).unwrap(), 1.0);

        let single = PointSet::from_rows(&[vec![1.0, 1.0]]).unwrap();
        let spec3 = ProblemSpec::new(2, 1, 3.0).unwrap();
        assert!((subspace_cost(&single, &spec3, &z).unwrap() - 1.0).abs() < 1e-15);

        let flat = PointSet::from_rows(&[vec![1.0, 0.0, 0.0], vec![2.0, -1.0, 0.0]]).unwrap();
        let spec = ProblemSpec::new(3, 2, 4.0).unwrap();
        let z = DMatrix::from_column_slice(3, 1, &[0.0, 0.0, 1.0]);
        assert_eq!(subspace_cost(&flat, &spec, &z).unwrap(), 0.0);
    }

    #[test]
    fn subspace_cost_rejects_non_orthonormal() {
        let spec = ProblemSpec::new(3, 1, 2.0).unwrap();
        let ps = PointSet::from_rows(&[vec![1.0, 2.0, 3.0]]).unwrap();
        let z = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.6, 0.8, 0.0]);
        match subspace_cost(&ps, &spec, &z) {
            Err(Error::NotOrthonormal { first, second, .. }) => assert_eq!((first, second), (0, 1)),
            other => panic!("expected orthonormality error, got {other:?}"),
        }
        let short = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(matches!(
            subspace_cost(&ps, &spec, &short),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn relaxation_cost_examples() {
        let spec = ProblemSpec::new(2, 1, 2.0).unwrap();
        let half = SymMatrix::scaled_identity(2, 0.5);
        assert!((relaxation_cost(&e1e2(), &spec, &half).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(relaxation_cost(&e1e2(), &spec, &SymMatrix::zeros(2)).unwrap(), 0.0);
        assert!(relaxation_cost(&e1e2(), &spec, &SymMatrix::zeros(3)).is_err());
    }

    #[test]
    fn relaxation_matches_subspace_cost_on_projectors() {
        let mut r = rng::stream(11, 0);
        for trial in 0..20 {
            let n = 2 + trial % 5;
            let k = trial % n;
            let m = 3 + trial;
            let rows = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut r));
            let ps = PointSet::new(rows).unwrap();
            let spec = ProblemSpec::new(n, k, 1.0 + r.random::<f64>() * 5.0).unwrap();
            let g = DMatrix::from_fn(n, n - k, |_, _| StandardNormal.sample(&mut r));
            let z = g.qr().q();
            let a = subspace_cost(&ps, &spec, &z).unwrap();
            let b = relaxation_cost(&ps, &spec, &SymMatrix::gram_outer(&z)).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn normalize_examples() {
        let spec = ProblemSpec::new(2, 1, 3.0).unwrap();
        let rows = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let ps = PointSet::new(rows.clone()).unwrap();
        assert_eq!(normalize_measures(&ps, &spec).unwrap().rows(), &rows);

        let w = PointSet::with_weights(rows.clone(), Some(vec![8.0, 1.0]), None).unwrap();
        let nz = normalize_measures(&w, &spec).unwrap();
        assert!((nz.rows()[(0, 0)] - 2.0).abs() < 1e-14);
        assert!((nz.rows()[(0, 1)] - 4.0).abs() < 1e-14);
        assert_eq!(nz.rows()[(1, 0)], 3.0);

        let w = PointSet::with_weights(rows, None, Some(vec![4.0, 1.0])).unwrap();
        let nz = normalize_measures(&w, &spec).unwrap();
        assert_eq!(nz.rows()[(0, 0)], 0.5);
        assert_eq!(nz.rows()[(1, 0)], 1.5);
        assert_eq!(nz.rows()[(1, 1)], 4.0);
        assert!(nz.is_unweighted());
    }

    #[test]
    fn normalize_preserves_objective_under_change_of_variables() {
        let mut r = rng::stream(5, 0);
        let (m, n) = (7, 3);
        let rows = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut r));
        let mu: Vec<f64> = (0..m).map(|_| 0.1 + r.random::<f64>()).collect();
        let nu: Vec<f64> = (0..n).map(|_| 0.1 + r.random::<f64>()).collect();
        let ps = PointSet::with_weights(rows, Some(mu), Some(nu)).unwrap();
        let spec = ProblemSpec::new(n, 1, 3.0).unwrap();
        // z~ orthonormal in the normalized geometry, mapped back to nu-orthonormal z.
        let zt = DMatrix::from_fn(n, 2, |_, _| StandardNormal.sample(&mut r)).qr().q();
        let z = from_normalized_coordinates(&ps, &zt);
        let normalized = normalize_measures(&ps, &spec).unwrap();
        let a = subspace_cost(&ps, &spec, &z).unwrap();
        let b = subspace_cost(&normalized, &spec, &zt).unwrap();
        assert!((a - b).abs() < 1e-9 * a.max(1.0));
    }

    #[test]
    fn weights_and_dims_are_validated() {
        let rows = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(PointSet::with_weights(rows.clone(), Some(vec![0.0]), None).is_err());
        assert!(PointSet::with_weights(rows.clone(), None, Some(vec![1.0])).is_err());
        assert!(PointSet::new(DMatrix::zeros(0, 2)).is_err());
        assert!(ProblemSpec::new(2, 2, 2.0).is_err());
        assert!(ProblemSpec::new(2, 1, 0.5).is_err());
    }

    #[test]
    fn file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rng::stream(3, 0);
        let rows = DMatrix::from_fn(4, 3, |_, _| {
            1e-3 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut r)
        });
        let ps = PointSet::with_weights(rows, Some(vec![0.1, 0.2, 0.3, 1.0 / 3.0]), None).unwrap();
        let spec = ProblemSpec::new(3, 1, 2.5).unwrap();
        let path = dir.path().join("inst.json");
        save_instance(&ps, &spec, &path).unwrap();
        let (ps2, spec2) = load_instance(&path).unwrap();
        assert_eq!(ps, ps2);
        assert_eq!(spec, spec2);
        for (a, b) in ps.rows().iter().zip(ps2.rows().iter()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }

        let empty = dir.path().join("empty.json");
        fs::write(&empty, r#"{"m":0,"n":2,"k":1,"p":2.0,"rows":[]}"#).unwrap();
        assert!(matches!(load_instance(&empty), Err(Error::InvalidInput(_))));

        let missing = dir.path().join("missing.json");
        fs::write(&missing, r#"{"m":1,"n":2,"k":1,"rows":[[1.0,2.0]]}"#).unwrap();
        match load_instance(&missing) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("`p`"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }

        let bad_dims = dir.path().join("dims.json");
        fs::write(&bad_dims, r#"{"m":2,"n":2,"k":1,"p":2.0,"rows":[[1.0,2.0]]}"#).unwrap();
        assert!(matches!(load_instance(&bad_dims), Err(Error::DimensionMismatch(_))));
    }
}
