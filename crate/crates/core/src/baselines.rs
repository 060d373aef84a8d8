//! Reference solvers: the exact SVD optimum for `p = 2`, a multi-start
//! sphere descent for `k = n-1`, and a certified angular grid for `n <= 3`.
//!
//! The sphere oracle is a heuristic: it returns the best local minimum it
//! finds, which upper-bounds the true optimum. Only the grid oracle
//! certifies a lower bound, and only in dimension two or three.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{normalize_measures, PointSet, ProblemSpec};
use crate::rng;
use crate::spectral::{sym_eigen, SymMatrix};

#[derive(Debug, Clone)]
pub struct SvdBaselineResult {
    /// `sigma_1 >= ... >= sigma_n`, zero-padded when `m < n`.
    pub singular_values: Vec<f64>,
    /// `(sum_{j > k} sigma_j^2)^(1/2)`.
    pub optimal_value: f64,
    /// `n x k`, the top right singular vectors.
    pub top_k_subspace: DMatrix<f64>,
    /// `n x (n-k)`, the remaining right singular vectors.
    pub complement_z: DMatrix<f64>,
}

/// Exact optimum of Subspace(k, 2) on the measure-normalized rows.
pub fn svd_optimal(ps: &PointSet, k: usize) -> Result<SvdBaselineResult> {
    let n = ps.n();
    let spec = ProblemSpec::new(n, k, 2.0)?;
    let a = normalize_measures(ps, &spec)?.rows().clone();
    // Pad with zero rows so the thin SVD returns a full right basis.
    let padded = if a.nrows() < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(&a);
        p
    } else {
        a
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.ok_or(Error::EigenNonConvergence { iterations: 0 })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let right = DMatrix::from_fn(n, n, |r, c| v_t[(order[c], r)]);

    let tail: f64 = singular_values[k..].iter().map(|s| s * s).sum();
    Ok(SvdBaselineResult {
        optimal_value: tail.sqrt(),
        top_k_subspace: right.columns(0, k).into_owned(),
        complement_z: right.columns(k, n - k).into_owned(),
        singular_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereOracleConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Relative decrease of the `p`-th power objective below which a
    /// descent run stops.
    pub tol: f64,
}

impl Default for SphereOracleConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            seed: 0,
            max_iters: 500,
            tol: 1e-13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereOracleResult {
    pub z: Vec<f64>,
    pub value: f64,
    /// Index of the winning start: random restarts first, then the
    /// coordinate axes, then the SVD bottom direction.
    pub start_index: usize,
}

/// `min_{|z| = 1} |A z|_p` by multi-start Riemannian gradient descent.
pub fn sphere_oracle(ps: &PointSet, p: f64, restarts: usize, seed: u64) -> Result<SphereOracleResult> {
    sphere_oracle_with(
        ps,
        p,
        &SphereOracleConfig {
            restarts,
            seed,
            ..SphereOracleConfig::default()
        },
    )
}

pub fn sphere_oracle_with(ps: &PointSet, p: f64, cfg: &SphereOracleConfig) -> Result<SphereOracleResult> {
    let n = ps.n();
    let spec = ProblemSpec::new(n, n.saturating_sub(1), p)?;
    let normalized = normalize_measures(ps, &spec)?;
    let objective = SphereObjective::new(normalized.rows(), p);

    let mut starts: Vec<Vec<f64>> = (0..cfg.restarts)
        .map(|r| rng::unit_vector(&mut rng::stream(cfg.seed, r as u64), n))
        .collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        starts.push(e);
    }
    if n >= 2 {
        let svd = svd_optimal(&normalized, n - 1)?;
        starts.push(svd.complement_z.column(0).iter().copied().collect());
    }

    let results: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|z0| objective.descend(z0, cfg.max_iters, cfg.tol))
        .collect();
    let (start_index, (best, z)) = results
        .into_iter()
        .enumerate()
        .min_by(|(ia, (va, _)), (ib, (vb, _))| va.total_cmp(vb).then(ia.cmp(ib)))
        .expect("at least one start");
    Ok(SphereOracleResult {
        z,
        value: best.max(0.0).powf(1.0 / p),
        start_index,
    })
}

/// `f(z) = sum_i |a_i . z|^p` on the unit sphere.
pub struct SphereObjective<'a> {
    a: &'a DMatrix<f64>,
    p: f64,
}

impl<'a> SphereObjective<'a> {
    pub fn new(a: &'a DMatrix<f64>, p: f64) -> Self {
        Self { a, p }
    }

    pub fn value(&self, z: &DVector<f64>) -> f64 {
        (self.a * z).iter().map(|v| v.abs().powf(self.p)).sum()
    }

    fn value_and_euclidean_grad(&self, z: &DVector<f64>) -> (f64, DVector<f64>) {
        let az = self.a * z;
        let mut f = 0.0;
        let w = az.map(|v| {
            let av = v.abs();
            f += av.powf(self.p);
            if av == 0.0 {
                0.0
            } else {
                self.p * av.powf(self.p - 1.0) * v.signum()
            }
        });
        (f, self.a.tr_mul(&w))
    }

    /// Projected gradient descent with normalization retraction and Armijo
    /// backtracking. Returns the final `p`-th power value and point.
    pub fn descend(&self, z0: &[f64], max_iters: usize, tol: f64) -> (f64, Vec<f64>) {
        let mut z = DVector::from_column_slice(z0);
        z /= z.norm();
        let (mut f, mut g) = self.value_and_euclidean_grad(&z);
        let mut step = 1.0 / (f.abs() + 1e-300);
        for _ in 0..max_iters {
            if f == 0.0 {
                break;
            }
            let radial = g.dot(&z);
            let tangent = &g - &z * radial;
            let tn2 = tangent.norm_squared();
            if tn2 == 0.0 {
                break;
            }
            let mut accepted = None;
            for _ in 0..60 {
                let mut trial = &z - &tangent * step;
                trial /= trial.norm();
                let ft = self.value(&trial);
                if ft <= f - 1e-4 * step * tn2 {
                    accepted = Some((trial, ft));
                    break;
                }
                step *= 0.5;
            }
            let Some((next, fnext)) = accepted else { break };
            let decrease = f - fnext;
            z = next;
            let (fz, gz) = self.value_and_euclidean_grad(&z);
            f = fz;
            g = gz;
            step *= 2.0;
            if decrease <= tol * f.abs() {
                break;
            }
        }
        (f, z.iter().copied().collect())
    }
}

/// Certified bracket from a dense angular grid.
#[derive(Debug, Clone, Serialize)]
pub struct GridBracket {
    /// Minimum of `|A z|_p` over the grid; an upper bound on the optimum.
    pub grid_min: f64,
    /// `grid_min - L * step`, a certified lower bound on the optimum.
    pub lower_bound: f64,
    pub lipschitz: f64,
    pub step: f64,
    pub argmin: Vec<f64>,
    pub points: usize,
}

/// Dense grid over the half circle (`n = 2`) or the upper hemisphere
/// (`n = 3`) of `|A z|_p`, with a Lipschitz correction
/// `L = (sum_i |a_i|^p)^(1/p)` turning the grid minimum into a lower bound.
pub fn grid_oracle(ps: &PointSet, p: f64, step: f64) -> Result<GridBracket> {
    let n = ps.n();
    if !(n == 2 || n == 3) {
        return Err(Error::invalid(format!(
            "grid oracle supports n in {{2, 3}}, got n = {n}"
        )));
    }
    if !(step.is_finite() && step > 0.0 && step < 1.0) {
        return Err(Error::invalid(format!("grid step must lie in (0, 1), got {step}")));
    }
    let spec = ProblemSpec::new(n, n - 1, p)?;
    let normalized = normalize_measures(ps, &spec)?;
    let a = normalized.rows();
    let rows: Vec<Vec<f64>> = a.row_iter().map(|r| r.iter().copied().collect()).collect();
    let eval = |z: &[f64]| -> f64 {
        rows.iter()
            .map(|r| r.iter().zip(z).map(|(x, y)| x * y).sum::<f64>().abs().powf(p))
            .sum()
    };

    let pi = std::f64::consts::PI;
    let (best, argmin, points) = if n == 2 {
        let count = (pi / step).ceil() as usize;
        (0..count)
            .into_par_iter()
            .map(|i| {
                let t = i as f64 * step;
                let z = vec![t.cos(), t.sin()];
                (eval(&z), i, z)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(v, _, z)| (v, z, count))
            .expect("non-empty grid")
    } else {
        let polar = (0.5 * pi / step).ceil() as usize + 1;
        let azimuth = (2.0 * pi / step).ceil() as usize;
        (0..polar)
            .into_par_iter()
            .map(|i| {
                let theta = (i as f64 * step).min(0.5 * pi);
                let (st, ct) = theta.sin_cos();
                let mut local = (f64::INFINITY, usize::MAX, vec![0.0, 0.0, 1.0]);
                for j in 0..azimuth {
                    let phi = j as f64 * step;
                    let z = [st * phi.cos(), st * phi.sin(), ct];
                    let v = eval(&z);
                    if v < local.0 {
                        local = (v, i * azimuth + j, z.to_vec());
                    }
                    if i == 0 {
                        // The pole is a single point.
                        break;
                    }
                }
                local
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(v, _, z)| (v, z, polar * azimuth))
            .expect("non-empty grid")
    };

    let lipschitz = rows
        .iter()
        .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt().powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    let grid_min = best.powf(1.0 / p);
    Ok(GridBracket {
        grid_min,
        lower_bound: grid_min - lipschitz * step,
        lipschitz,
        step,
        argmin,
        points,
    })
}

/// `A^T A` of the normalized rows, exposed for diagnostics.
pub fn gram_matrix(ps: &PointSet) -> SymMatrix {
    SymMatrix::symmetrized(ps.rows().transpose() * ps.rows())
}

/// Eigenvalues of `A^T A`, descending. Used as an independent route to the
/// squared singular values.
pub fn gram_eigenvalues(ps: &PointSet) -> Result<Vec<f64>> {
    Ok(sym_eigen(&gram_matrix(ps))?.values)
}
