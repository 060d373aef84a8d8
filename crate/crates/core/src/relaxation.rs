//! Projected-gradient solver for the convex relaxation
//!
//! ```text
//! minimize   sum_i mu(i) (a_i^T X a_i)^(p/2)
//! subject to 0 <= X <= I,  Tr X >= n - k
//! ```
//!
//! The objective is convex for `p >= 2`. Every iterate is the exact
//! Frobenius projection of a gradient step back onto the feasible set, with
//! Armijo backtracking on the step length.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{normalize_measures, quadratic_forms, PointSet, ProblemSpec, RelaxationSolution};
use crate::spectral::{project_feasible, sym_eigen, SymMatrix};

/// Width of the window used by the relative-decrease stopping rule.
pub const STOP_WINDOW: usize = 10;

/// Largest step allowed relative to the gradient norm. Keeps the shifted
/// eigenvalues well inside the range where the capped-simplex projection
/// is accurate.
const MAX_STEP_SCALE: f64 = 1e6;

const MAX_BACKTRACKS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative objective decrease over [`STOP_WINDOW`] iterations below
    /// which the solver stops.
    pub tol: f64,
    pub armijo_beta: f64,
    pub armijo_sigma: f64,
    pub initial_step: f64,
    pub grad_clamp_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 2000,
            tol: 1e-9,
            armijo_beta: 0.5,
            armijo_sigma: 1e-4,
            initial_step: 1.0,
            grad_clamp_eps: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol", self.tol),
            ("armijo_beta", self.armijo_beta),
            ("armijo_sigma", self.armijo_sigma),
            ("initial_step", self.initial_step),
            ("grad_clamp_eps", self.grad_clamp_eps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("solver {name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("solver max_iters must be positive"));
        }
        if self.tol >= 1.0 || self.armijo_beta >= 1.0 || self.armijo_sigma >= 1.0 {
            return Err(Error::invalid("tol, armijo_beta and armijo_sigma must be below 1"));
        }
        Ok(())
    }
}

fn require_convex_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p >= 2.0 {
        Ok(())
    } else {
        Err(Error::UnsupportedExponent {
            p,
            reason: "the relaxation objective is only convex for p >= 2",
        })
    }
}

/// `F(X) = sum_i mu(i) (a_i^T X a_i)^(p/2)`.
pub fn relaxation_objective_raw(ps: &PointSet, p: f64, x: &SymMatrix) -> Result<f64> {
    require_convex_exponent(p)?;
    let forms = quadratic_forms(ps, x)?;
    Ok(raw_from_forms(ps, p, &forms))
}

fn raw_from_forms(ps: &PointSet, p: f64, forms: &[f64]) -> f64 {
    let half = 0.5 * p;
    forms
        .iter()
        .enumerate()
        .map(|(i, &q)| ps.row_weight(i) * q.max(0.0).powf(half))
        .sum()
}

/// `grad F(X) = (p/2) sum_i mu(i) (a_i^T X a_i)^((p-2)/2) a_i a_i^T`.
///
/// For `2 <= p < 4` the quadratic forms are clamped from below at
/// `clamp_eps` before the power, which selects a bounded subgradient where
/// the slope of `q^((p-2)/2)` blows up.
pub fn relaxation_gradient(ps: &PointSet, p: f64, x: &SymMatrix, clamp_eps: f64) -> Result<SymMatrix> {
    require_convex_exponent(p)?;
    let forms = quadratic_forms(ps, x)?;
    Ok(gradient_from_forms(ps, p, &forms, clamp_eps))
}

fn gradient_from_forms(ps: &PointSet, p: f64, forms: &[f64], clamp_eps: f64) -> SymMatrix {
    let expo = 0.5 * (p - 2.0);
    let floor = if p < 4.0 { clamp_eps } else { 0.0 };
    let coeffs: Vec<f64> = forms
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let c = if expo == 0.0 { 1.0 } else { q.max(floor).powf(expo) };
            0.5 * p * ps.row_weight(i) * c
        })
        .collect();
    // A^T diag(c) A
    let a = ps.rows();
    let weighted = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| coeffs[i] * a[(i, j)]);
    SymMatrix::symmetrized(a.transpose() * weighted)
}

/// Solves the relaxation from `X0 = ((n-k)/n) I`.
///
/// Weighted instances are first rewritten in counting-measure form; the
/// returned `X` lives in those normalized coordinates. Non-convergence is
/// reported through `converged = false` with the best iterate.
pub fn solve_relaxation(ps: &PointSet, spec: &ProblemSpec, cfg: &SolverConfig) -> Result<RelaxationSolution> {
    cfg.validate()?;
    spec.check(ps.n())?;
    require_convex_exponent(spec.p)?;
    let normalized = normalize_measures(ps, spec)?;
    let ps = &normalized;
    let n = ps.n();
    let p = spec.p;
    let target = spec.codim(n) as f64;

    let mut x = SymMatrix::scaled_identity(n, target / n as f64);
    let mut forms = quadratic_forms(ps, &x)?;
    let mut value = raw_from_forms(ps, p, &forms);
    let mut history = vec![value];
    let mut step = cfg.initial_step;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        if value == 0.0 {
            converged = true;
            break;
        }
        let grad = gradient_from_forms(ps, p, &forms, cfg.grad_clamp_eps);
        let grad_norm = grad.as_matrix().norm();
        if grad_norm == 0.0 {
            converged = true;
            break;
        }
        let step_cap = MAX_STEP_SCALE / grad_norm;
        step = step.min(step_cap);

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial = project_feasible(&x.add_scaled(-step, &grad), target)?;
            let diff = SymMatrix::symmetrized(trial.as_matrix() - x.as_matrix());
            let decrease = grad.dot(&diff);
            if diff.as_matrix().norm() == 0.0 {
                // The projected step does not move: X is stationary.
                break;
            }
            let trial_forms = quadratic_forms(ps, &trial)?;
            let trial_value = raw_from_forms(ps, p, &trial_forms);
            if trial_value <= value + cfg.armijo_sigma * decrease {
                accepted = Some((trial, trial_forms, trial_value));
                break;
            }
            step *= cfg.armijo_beta;
        }

        let Some((next, next_forms, next_value)) = accepted else {
            converged = true;
            break;
        };
        x = next;
        forms = next_forms;
        value = next_value;
        history.push(value);
        iterations += 1;
        // Let the step grow again after a successful iteration.
        step = (step / cfg.armijo_beta).min(step_cap.max(cfg.initial_step));

        if history.len() > STOP_WINDOW {
            let old = history[history.len() - 1 - STOP_WINDOW];
            if old - value <= cfg.tol * old.abs() {
                converged = true;
                break;
            }
        }
    }

    let spectrum = sym_eigen(&x)?;
    Ok(RelaxationSolution {
        value: value.max(0.0).powf(1.0 / p),
        x,
        spectrum,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::svd_optimal;
    use crate::instance::relaxation_cost;
    use crate::rng;
    use rand_distr::{Distribution, StandardNormal};

    fn e1e2() -> PointSet {
        PointSet::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap()
    }

    #[test]
    fn objective_examples() {
        assert_eq!(
            relaxation_objective_raw(&e1e2(), 3.0, &SymMatrix::zeros(2)).unwrap(),
            0.0
        );
        let half = SymMatrix::scaled_identity(2, 0.5);
        assert!((relaxation_objective_raw(&e1e2(), 2.0, &half).unwrap() - 1.0).abs() < 1e-15);
        let e1 = PointSet::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let x = SymMatrix::from_diagonal(&[0.3, 0.9]);
        assert!((relaxation_objective_raw(&e1, 4.0, &x).unwrap() - 0.09).abs() < 1e-15);
        assert!(matches!(
            relaxation_objective_raw(&e1, 1.5, &x),
            Err(Error::UnsupportedExponent { .. })
        ));
    }

    #[test]
    fn gradient_examples() {
        let mut r = rng::stream(1, 0);
        let rows = DMatrix::from_fn(6, 3, |_, _| StandardNormal.sample(&mut r));
        let ps = PointSet::new(rows.clone()).unwrap();
        let g = relaxation_gradient(&ps, 2.0, &SymMatrix::identity(3), 1e-12).unwrap();
        let ata = rows.transpose() * &rows;
        assert!((g.as_matrix() - ata).amax() < 1e-12);

        let e1 = PointSet::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let g = relaxation_gradient(&e1, 4.0, &SymMatrix::from_diagonal(&[0.7, 0.0]), 1e-12).unwrap();
        let expected = SymMatrix::from_diagonal(&[1.4, 0.0]);
        assert!(g.frobenius_distance(&expected) < 1e-14);
    }

    #[test]
    fn solves_axis_instance() {
        let spec = ProblemSpec::new(2, 1, 2.0).unwrap();
        let sol = solve_relaxation(&e1e2(), &spec, &SolverConfig::default()).unwrap();
        assert!((sol.value - 1.0).abs() < 1e-9);
        assert!(sol.x.trace() >= 1.0 - 1e-8);
    }

    #[test]
    fn single_point_fits_exactly() {
        let ps = PointSet::from_rows(&[vec![1.0, 2.0, -0.5]]).unwrap();
        for p in [2.0, 3.0, 4.0] {
            let spec = ProblemSpec::new(3, 2, p).unwrap();
            let sol = solve_relaxation(&ps, &spec, &SolverConfig::default()).unwrap();
            assert!(sol.value < 1e-5, "p={p} value={}", sol.value);
        }
    }

    #[test]
    fn matches_svd_for_p2() {
        let mut r = rng::stream(21, 0);
        for trial in 0..8 {
            let n = 3 + trial % 5;
            let m = n + 4 + trial;
            let rows = DMatrix::from_fn(m, n, |_, _| StandardNormal.sample(&mut r));
            let ps = PointSet::new(rows).unwrap();
            for k in 0..n {
                let spec = ProblemSpec::new(n, k, 2.0).unwrap();
                let sol = solve_relaxation(&ps, &spec, &SolverConfig::default()).unwrap();
                let svd = svd_optimal(&ps, k).unwrap();
                let rel = (sol.value - svd.optimal_value).abs() / svd.optimal_value;
                assert!(rel < 1e-6, "n={n} k={k} rel={rel}");
            }
        }
    }

    #[test]
    fn output_is_feasible_and_descent_is_monotone() {
        let mut r = rng::stream(8, 0);
        let rows = DMatrix::from_fn(30, 5, |_, _| StandardNormal.sample(&mut r));
        let ps = PointSet::new(rows).unwrap();
        for (k, p) in [(4, 4.0), (2, 3.0), (3, 6.0)] {
            let spec = ProblemSpec::new(5, k, p).unwrap();
            let sol = solve_relaxation(&ps, &spec, &SolverConfig::default()).unwrap();
            assert!(sol.spectrum.values.iter().all(|&l| (-1e-8..=1.0 + 1e-8).contains(&l)));
            assert!(sol.x.trace() >= (5 - k) as f64 - 1e-8);
            assert!(sol.history.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            let direct = relaxation_cost(&ps, &spec, &sol.x).unwrap();
            assert!((direct - sol.value).abs() < 1e-12 * direct.max(1.0));
        }
    }

    #[test]
    fn rejects_small_p_and_bad_config() {
        let spec = ProblemSpec::new(2, 1, 1.5).unwrap();
        assert!(solve_relaxation(&e1e2(), &spec, &SolverConfig::default()).is_err());
        let spec = ProblemSpec::new(2, 1, 2.0).unwrap();
        let cfg = SolverConfig {
            tol: 2.0,
            ..SolverConfig::default()
        };
        assert!(solve_relaxation(&e1e2(), &spec, &cfg).is_err());
    }

    #[test]
    fn reports_non_convergence_with_best_iterate() {
        let mut r = rng::stream(4, 0);
        let rows = DMatrix::from_fn(20, 4, |_, _| StandardNormal.sample(&mut r));
        let ps = PointSet::new(rows).unwrap();
        let spec = ProblemSpec::new(4, 3, 4.0).unwrap();
        let cfg = SolverConfig {
            max_iters: 1,
            ..SolverConfig::default()
        };
        let sol = solve_relaxation(&ps, &spec, &cfg).unwrap();
        assert!(!sol.converged);
        assert_eq!(sol.iterations, 1);
        assert!(sol.history[1] <= sol.history[0]);
    }
}
