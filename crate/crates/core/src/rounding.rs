//! Randomized rank reduction of a relaxation solution.
//!
//! The eigenvectors of `X` are split greedily into `n-k` bins by eigenvalue
//! mass. Each bin collapses to one unit vector `y_j = sum_t b_t sqrt(l_t) x_t`
//! with independent random signs `b_t`. Bins are disjoint sets of orthonormal
//! eigenvectors, so the `y_j` are orthonormal.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{
    from_normalized_coordinates, normalize_measures, subspace_cost_unchecked, PointSet, ProblemSpec,
    RelaxationSolution, SubspaceSolution,
};
use crate::moments::gamma_p;
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyPartition {
    /// Zero-based eigenvalue indices per bin, in insertion order.
    pub bins: Vec<Vec<usize>>,
    pub bin_sums: Vec<f64>,
}

/// Assigns `t = 0, 1, ...` in order to the bin with the smallest running sum,
/// ties to the lowest bin index.
pub fn greedy_partition(lambda: &[f64], b: usize) -> Result<GreedyPartition> {
    if b == 0 {
        return Err(Error::invalid("number of bins must be at least 1"));
    }
    if lambda.len() < b {
        return Err(Error::invalid(format!(
            "cannot fill {b} bins from {} eigenvalues",
            lambda.len()
        )));
    }
    if lambda.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("eigenvalues must be finite"));
    }
    if lambda.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("eigenvalues must be sorted non-increasing"));
    }
    Ok(assign(lambda, b))
}

fn assign(lambda: &[f64], b: usize) -> GreedyPartition {
    let mut bins = vec![Vec::new(); b];
    let mut bin_sums = vec![0.0; b];
    for (t, &l) in lambda.iter().enumerate() {
        let mut j = 0;
        for c in 1..b {
            if bin_sums[c] < bin_sums[j] {
                j = c;
            }
        }
        bins[j].push(t);
        bin_sums[j] += l;
    }
    GreedyPartition { bins, bin_sums }
}

/// Lower bound on every greedy bin sum when `sum(lambda) >= b`, `lambda` in `[0, 1]`.
pub fn greedy_bin_lower_bound(b: usize) -> f64 {
    1.0 / (2.0 - 1.0 / b as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoundingConfig {
    pub runs: usize,
    pub seed: u64,
    /// Clamped eigenvalues below this count as zero.
    pub eig_clamp: f64,
    /// Allowed violation of `0 <= X <= I` and `Tr X >= n-k`.
    pub feas_slack: f64,
}

impl Default for RoundingConfig {
    fn default() -> Self {
        Self {
            runs: 32,
            seed: 0,
            eig_clamp: 1e-10,
            feas_slack: 1e-6,
        }
    }
}

impl RoundingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::invalid("runs must be at least 1"));
        }
        if !(self.eig_clamp.is_finite() && self.eig_clamp >= 0.0) {
            return Err(Error::invalid("eig_clamp must be finite and non-negative"));
        }
        if !(self.feas_slack.is_finite() && self.feas_slack >= 0.0) {
            return Err(Error::invalid("feas_slack must be finite and non-negative"));
        }
        Ok(())
    }
}

/// Everything about a rounding that does not depend on the signs.
#[derive(Debug, Clone)]
pub struct RoundingPlan {
    /// `sqrt(l_t) x_t` for every kept eigenpair, as columns.
    scaled: DMatrix<f64>,
    partition: GreedyPartition,
    /// Unit vectors used for bins that received no eigenvector.
    pads: Vec<Option<nalgebra::DVector<f64>>>,
}

impl RoundingPlan {
    /// Builds the plan from a relaxation solution in normalized coordinates.
    pub fn new(x: &RelaxationSolution, codim: usize, cfg: &RoundingConfig) -> Result<Self> {
        cfg.validate()?;
        let spectrum = &x.spectrum;
        let n = spectrum.vectors.nrows();
        if codim == 0 || codim > n {
            return Err(Error::invalid(format!("n-k = {codim} out of range for n = {n}")));
        }
        let lo = spectrum.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = spectrum.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let trace: f64 = spectrum.values.iter().sum();
        if lo < -cfg.feas_slack || hi > 1.0 + cfg.feas_slack || trace < codim as f64 - cfg.feas_slack {
            return Err(Error::Infeasible(format!(
                "X violates 0 <= X <= I or Tr X >= {codim} beyond slack {}: eigenvalues in [{lo:.3e}, {hi:.3e}], trace {trace:.12}",
                cfg.feas_slack
            )));
        }

        let clamped: Vec<f64> = spectrum.values.iter().map(|l| l.clamp(0.0, 1.0)).collect();
        let kept: Vec<usize> = (0..clamped.len()).filter(|&t| clamped[t] >= cfg.eig_clamp).collect();
        let dropped: Vec<usize> = (0..clamped.len()).filter(|&t| clamped[t] < cfg.eig_clamp).collect();
        let kept_lambda: Vec<f64> = kept.iter().map(|&t| clamped[t]).collect();
        let partition = assign(&kept_lambda, codim);

        let scaled = DMatrix::from_fn(n, kept.len(), |i, c| {
            kept_lambda[c].sqrt() * spectrum.vectors[(i, kept[c])]
        });
        // Dropped eigenvectors are orthogonal to every kept one, so they
        // complete the basis for empty bins.
        let mut spare = dropped.into_iter();
        let mut pads = Vec::with_capacity(codim);
        for bin in &partition.bins {
            if bin.is_empty() {
                let t = spare
                    .next()
                    .ok_or_else(|| Error::Infeasible("not enough eigenvectors to fill every bin".into()))?;
                pads.push(Some(spectrum.vectors.column(t).into_owned()));
            } else {
                pads.push(None);
            }
        }
        Ok(Self {
            scaled,
            partition,
            pads,
        })
    }

    pub fn partition(&self) -> &GreedyPartition {
        &self.partition
    }

    pub fn kept(&self) -> usize {
        self.scaled.ncols()
    }

    /// The `n x (n-k)` matrix produced by sign vector `signs` (one per kept
    /// eigenvector, `true` meaning `+1`).
    pub fn assemble(&self, signs: &[bool]) -> DMatrix<f64> {
        let n = self.scaled.nrows();
        let mut z = DMatrix::zeros(n, self.partition.bins.len());
        for (j, bin) in self.partition.bins.iter().enumerate() {
            let mut col = z.column_mut(j);
            if let Some(pad) = &self.pads[j] {
                col.copy_from(pad);
                continue;
            }
            for &t in bin {
                let s = if signs[t] { 1.0 } else { -1.0 };
                col.axpy(s, &self.scaled.column(t), 1.0);
            }
            let norm = col.norm();
            col /= norm;
        }
        z
    }

    /// Rounded `Z` for run `run` under `seed`.
    pub fn draw(&self, seed: u64, run: u64) -> DMatrix<f64> {
        let mut r = rng::stream(seed, run);
        let signs: Vec<bool> = (0..self.kept()).map(|_| r.random()).collect();
        self.assemble(&signs)
    }
}

#[derive(Debug, Clone)]
pub struct RoundingOutcome {
    /// Best `Z` in the coordinates of the input instance, with its cost.
    pub solution: SubspaceSolution,
    pub best_run: usize,
    /// Cost of every run, in run order.
    pub run_values: Vec<f64>,
}

/// Best of `cfg.runs` independent roundings of `x`.
///
/// `x` must come from [`crate::relaxation::solve_relaxation`] on the same
/// instance, i.e. live in measure-normalized coordinates.
pub fn round_solution(
    ps: &PointSet,
    spec: &ProblemSpec,
    x: &RelaxationSolution,
    cfg: &RoundingConfig,
) -> Result<RoundingOutcome> {
    spec.check(ps.n())?;
    if x.x.dim() != ps.n() {
        return Err(Error::dims(format!(
            "X is {0}x{0}, instance has n = {1}",
            x.x.dim(),
            ps.n()
        )));
    }
    let normalized = normalize_measures(ps, spec)?;
    let plan = RoundingPlan::new(x, spec.codim(ps.n()), cfg)?;

    let run_values: Vec<f64> = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| subspace_cost_unchecked(&normalized, spec.p, &plan.draw(cfg.seed, run)))
        .collect();
    let best_run = argmin(&run_values);
    let z = from_normalized_coordinates(ps, &plan.draw(cfg.seed, best_run as u64));
    Ok(RoundingOutcome {
        solution: SubspaceSolution {
            z,
            value: run_values[best_run],
        },
        best_run,
        run_values,
    })
}

/// Index of the smallest value, ties to the lowest index.
pub fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if v.total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    best
}

/// `gamma_q sqrt(2 - 1/(n-k))` with `q` the smallest even integer `>= p`.
pub fn expected_ratio_bound(n: usize, k: usize, p: f64) -> Result<f64> {
    if k >= n {
        return Err(Error::invalid(format!("need k < n, got k = {k}, n = {n}")));
    }
    let q = 2.0 * (p / 2.0).ceil();
    let codim = (n - k) as f64;
    Ok(gamma_p(q)? * (2.0 - 1.0 / codim).sqrt())
}
