//! Dense symmetric kernels and the projection onto the spectral set
//! `{X : 0 <= X <= I, Tr X >= s}`.
//!
//! The feasible set of the relaxation is unitarily invariant, so the
//! Frobenius-nearest feasible point shares eigenvectors with the input and
//! only the eigenvalues move: they are projected onto the capped simplex
//! `{lambda in [0,1]^r : sum lambda >= s}`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Iteration cap handed to the QR eigen iteration.
const EIGEN_MAX_ITERS: usize = 100_000;

/// Bisection steps for the capped-simplex shift. Far more than needed for
/// a 1e-12 sum tolerance on any bracket that fits in an f64.
const BISECTION_MAX_STEPS: usize = 400;

const SUM_TOL: f64 = 1e-12;

/// A real symmetric matrix. Entries are exactly symmetric and finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Symmetrizes `m` as `(m + m^T) / 2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dims(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::invalid("symmetric matrix must have dimension >= 1"));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("symmetric matrix has non-finite entries"));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m[(i, j)] + m[(j, i)]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        SymMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(DMatrix::identity(n, n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(DMatrix::zeros(n, n))
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        SymMatrix(DMatrix::identity(n, n) * c)
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        SymMatrix(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    /// `Z Z^T` for any `n x r` matrix `Z`.
    pub fn gram_outer(z: &DMatrix<f64>) -> Self {
        Self::symmetrized(z * z.transpose())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// `a^T X a`.
    pub fn quadratic_form(&self, a: &[f64]) -> f64 {
        let n = self.dim();
        debug_assert_eq!(a.len(), n);
        let mut acc = 0.0;
        for j in 0..n {
            let col = self.0.column(j);
            let mut s = 0.0;
            for i in 0..n {
                s += col[i] * a[i];
            }
            acc += s * a[j];
        }
        acc
    }

    pub fn frobenius_distance(&self, other: &SymMatrix) -> f64 {
        (&self.0 - &other.0).norm()
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: f64, other: &SymMatrix) -> SymMatrix {
        SymMatrix(&self.0 + &other.0 * t)
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.0.dot(&other.0)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::dims("matrix rows must all have length n"));
        }
        SymMatrix::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

impl From<SymMatrix> for Vec<Vec<f64>> {
    fn from(m: SymMatrix) -> Self {
        m.0.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Eigenvalues in non-increasing order with matching orthonormal
/// eigenvectors stored as the columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, t: usize) -> nalgebra::DVectorView<'_, f64> {
        self.vectors.column(t)
    }

    /// `sum_t f(lambda_t) x_t x_t^T`.
    pub fn reassemble_with(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let d = DVector::from_iterator(self.values.len(), self.values.iter().map(|&l| f(l)));
        let scaled = &self.vectors * DMatrix::from_diagonal(&d);
        SymMatrix::symmetrized(scaled * self.vectors.transpose())
    }

    pub fn reassemble(&self) -> SymMatrix {
        self.reassemble_with(|l| l)
    }
}

/// Full symmetric eigendecomposition, eigenvalues descending.
///
/// The output is a deterministic function of the input bits. Each
/// eigenvector is signed so that its entry of largest magnitude (first one
/// on ties) is positive.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenSpectrum> {
    let n = m.dim();
    let eig =
        SymmetricEigen::try_new(m.0.clone(), f64::EPSILON, EIGEN_MAX_ITERS).ok_or(Error::EigenNonConvergence {
            iterations: EIGEN_MAX_ITERS,
        })?;

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver's order inside exactly-degenerate groups.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, dst)] = sign * col[i];
        }
    }
    Ok(EigenSpectrum { values, vectors })
}

/// Euclidean projection of `mu` onto `{lambda in [0,1]^r : sum lambda >= s}`.
///
/// The minimizer is `clamp(mu + theta, 0, 1)` for the smallest `theta >= 0`
/// that makes the sum at least `s`; `theta` is found by bisection on the
/// monotone piecewise-linear sum and then polished on the final active set.
pub fn project_capped_simplex(mu: &[f64], s: f64) -> Result<Vec<f64>> {
    if mu.iter().any(|x| x.is_nan()) || s.is_nan() {
        return Err(Error::invalid("NaN in capped-simplex projection input"));
    }
    let r = mu.len();
    if s > r as f64 {
        return Err(Error::Infeasible(format!(
            "trace target {s} exceeds the number of eigenvalues {r}"
        )));
    }

    let clamped: Vec<f64> = mu.iter().map(|&x| x.clamp(0.0, 1.0)).collect();
    if clamped.iter().sum::<f64>() >= s {
        return Ok(clamped);
    }

    let shifted_sum = |theta: f64| -> f64 { mu.iter().map(|&x| (x + theta).clamp(0.0, 1.0)).sum() };

    // At theta = 1 - min(mu) every coordinate sits at 1 and the sum is r >= s.
    let min_mu = mu.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = 0.0_f64;
    let mut hi = (1.0 - min_mu).max(0.0);
    for _ in 0..BISECTION_MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = shifted_sum(mid);
        if (g - s).abs() <= SUM_TOL {
            hi = mid;
            break;
        }
        if g < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut theta = hi;

    // On the active set at theta the sum is affine in theta; solve it exactly.
    let (mut at_one, mut free_count, mut free_sum) = (0usize, 0usize, 0.0);
    for &x in mu {
        let v = x + theta;
        if v >= 1.0 {
            at_one += 1;
        } else if v > 0.0 {
            free_count += 1;
            free_sum += x;
        }
    }
    if free_count > 0 {
        let polished = (s - at_one as f64 - free_sum) / free_count as f64;
        let candidate_err = (shifted_sum(polished) - s).abs();
        if polished >= 0.0 && candidate_err <= (shifted_sum(theta) - s).abs() {
            theta = polished;
        }
    }
    Ok(mu.iter().map(|&x| (x + theta).clamp(0.0, 1.0)).collect())
}

/// Frobenius projection of `x` onto `{0 <= X <= I, Tr X >= s}`.
pub fn project_feasible(x: &SymMatrix, s: f64) -> Result<SymMatrix> {
    let spectrum = sym_eigen(x)?;
    let projected = project_capped_simplex(&spectrum.values, s)?;
    let projected_spectrum = EigenSpectrum {
        values: projected,
        vectors: spectrum.vectors,
    };
    Ok(projected_spectrum.reassemble())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_sym(n: usize, seed: u64) -> SymMatrix {
        let mut r = rng::stream(seed, 0);
        let m = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut r));
        SymMatrix::new(m).unwrap()
    }

    fn assert_vec_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn construction_symmetrizes_and_rejects_bad_input() {
        let m = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 4.0, 3.0])).unwrap();
        assert_eq!(m.as_matrix()[(0, 1)], 3.0);
        assert_eq!(m.as_matrix()[(1, 0)], 3.0);
        assert!(SymMatrix::new(DMatrix::from_element(2, 3, 0.0)).is_err());
        assert!(SymMatrix::new(DMatrix::from_row_slice(1, 1, &[f64::NAN])).is_err());
    }

    #[test]
    fn eigen_identity() {
        let e = sym_eigen(&SymMatrix::identity(2)).unwrap();
        assert_vec_close(&e.values, &[1.0, 1.0], 1e-15);
        let gram = e.vectors.transpose() * &e.vectors;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn eigen_diagonal() {
        let e = sym_eigen(&SymMatrix::from_diagonal(&[1.0, 3.0])).unwrap();
        assert_vec_close(&e.values, &[3.0, 1.0], 1e-15);
        assert_vec_close(e.vector(0).as_slice(), &[0.0, 1.0], 1e-15);
        assert_vec_close(e.vector(1).as_slice(), &[1.0, 0.0], 1e-15);
    }

    #[test]
    fn eigen_two_by_two() {
        // Characteristic polynomial (2-l)^2 - 1 = 0 gives l = 3, 1.
        let m = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        let e = sym_eigen(&m).unwrap();
        assert_vec_close(&e.values, &[3.0, 1.0], 1e-14);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0].abs() - h).abs() < 1e-14 && (v0[0] - v0[1]).abs() < 1e-14);
        assert!((v1[0].abs() - h).abs() < 1e-14 && (v1[0] + v1[1]).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstruction_and_orthonormality() {
        for n in [1, 2, 5, 17, 50] {
            let m = random_sym(n, n as u64);
            let e = sym_eigen(&m).unwrap();
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            let gram = e.vectors.transpose() * &e.vectors;
            assert!((gram - DMatrix::<f64>::identity(n, n)).amax() < 1e-8);
            let rel = e.reassemble().frobenius_distance(&m) / m.as_matrix().norm();
            assert!(rel < 1e-7, "n={n} rel={rel}");
        }
    }

    #[test]
    fn eigen_is_deterministic() {
        let m = random_sym(12, 99);
        assert_eq!(sym_eigen(&m).unwrap(), sym_eigen(&m).unwrap());
    }

    #[test]
    fn capped_simplex_examples() {
        assert_vec_close(
            &project_capped_simplex(&[1.2, 0.5, -0.1], 1.0).unwrap(),
            &[1.0, 0.5, 0.0],
            0.0,
        );
        assert_vec_close(&project_capped_simplex(&[0.2, 0.2], 1.0).unwrap(), &[0.5, 0.5], 1e-12);
        for r in 1..6 {
            let ones = vec![1.0; r];
            assert_eq!(project_capped_simplex(&ones, r as f64).unwrap(), ones);
        }
    }

    #[test]
    fn capped_simplex_far_below_target() {
        let out = project_capped_simplex(&[-5.0, -7.0, -5.5], 2.0).unwrap();
        assert!((out.iter().sum::<f64>() - 2.0).abs() < 1e-12);
        assert!(out.iter().all(|&x| (0.0..=1.0).contains(&x)));
        // theta = 6.5 puts the first and last coordinates at the cap.
        assert_vec_close(&out, &[1.0, 0.0, 1.0], 1e-12);
    }

    #[test]
    fn capped_simplex_errors() {
        assert!(matches!(
            project_capped_simplex(&[0.0, 0.0], 3.0),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(
            project_capped_simplex(&[f64::NAN, 0.0], 1.0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn feasible_projection_examples() {
        let p = project_feasible(&SymMatrix::zeros(2), 1.0).unwrap();
        assert!(p.frobenius_distance(&SymMatrix::scaled_identity(2, 0.5)) < 1e-12);

        let p = project_feasible(&SymMatrix::scaled_identity(3, 2.0), 2.0).unwrap();
        assert!(p.frobenius_distance(&SymMatrix::identity(3)) < 1e-12);

        let x = SymMatrix::new(DMatrix::from_row_slice(2, 2, &[0.6, 0.1, 0.1, 0.5])).unwrap();
        let p = project_feasible(&x, 1.0).unwrap();
        assert!(p.frobenius_distance(&x) < 1e-12);
    }
}
