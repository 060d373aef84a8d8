//! Gaussian moments and exact moments of weighted Rademacher sums.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Largest `R` for which [`bernoulli_moment_exact`] enumerates `{-1,1}^R`.
pub const MAX_ENUMERATION_LEN: usize = 22;

/// Neumaier compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::invalid(format!(
            "moment exponent must be a finite real >= 1, got {p}"
        )));
    }
    Ok(())
}

/// `ln(gamma_p^p) = (p/2) ln 2 + ln Gamma((p+1)/2) - ln(pi)/2`.
fn ln_gamma_p_pow_p(p: f64) -> f64 {
    0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0)) - 0.5 * std::f64::consts::PI.ln()
}

/// `gamma_p = (E|g|^p)^(1/p)` for a standard normal `g`.
pub fn gamma_p(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok((ln_gamma_p_pow_p(p) / p).exp())
}

/// `gamma_p^p = E|g|^p`.
pub fn gamma_p_pow(p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(ln_gamma_p_pow_p(p).exp())
}

/// `E|sum_i c_i x_i|^p` over independent uniform signs, by enumeration.
pub fn bernoulli_moment_exact(c: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    let r = c.len();
    if r > MAX_ENUMERATION_LEN {
        return Err(Error::TooLarge(format!(
            "exact enumeration supports R <= {MAX_ENUMERATION_LEN} (got {r}); \
             use binomial_moment_exact for uniform coefficients or Monte Carlo otherwise"
        )));
    }
    if c.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("coefficients must be finite"));
    }
    if r == 0 {
        return Ok(0.0);
    }
    // The sum is odd under a global sign flip, so fix x_0 = +1. The rest is
    // split into two halves whose partial sums are tabulated, so each of the
    // 2^(R-1) sums is formed by a single addition.
    let rest = &c[1..];
    let (low, high) = rest.split_at(rest.len() / 2);
    let low_sums = signed_sums(low);
    let high_sums: Vec<f64> = signed_sums(high).into_iter().map(|s| s + c[0]).collect();

    let mut total = CompensatedSum::default();
    for &h in &high_sums {
        let mut inner = CompensatedSum::default();
        for &l in &low_sums {
            inner.add((h + l).abs().powf(p));
        }
        total.add(inner.value());
    }
    Ok(total.value() / (low_sums.len() * high_sums.len()) as f64)
}

/// All `2^len` values of `sum_i s_i c_i`, index bit `i` set meaning `s_i = -1`.
fn signed_sums(c: &[f64]) -> Vec<f64> {
    (0..1usize << c.len())
        .map(|mask| {
            c.iter()
                .enumerate()
                .map(|(i, &ci)| if mask >> i & 1 == 1 { -ci } else { ci })
                .sum()
        })
        .collect()
}

/// `E|S|^p` for `S = R^(-1/2) sum_{i<=R} x_i`, from the Binomial(R, 1/2) law.
///
/// Log-weights are built outward from the mode by the ratio
/// `C(R, j+1)/C(R, j) = (R-j)/(j+1)` and normalized by their own sum, so
/// the weights add up to one to rounding accuracy.
pub fn binomial_moment_exact(r: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    if r == 0 {
        return Err(Error::invalid("R must be at least 1"));
    }
    let rf = r as f64;
    let mode = r / 2;
    let mut ln_w = vec![0.0; r as usize + 1];
    for j in mode..r {
        let jf = j as f64;
        ln_w[j as usize + 1] = ln_w[j as usize] + ((rf - jf) / (jf + 1.0)).ln();
    }
    for j in (1..=mode).rev() {
        let jf = j as f64;
        ln_w[j as usize - 1] = ln_w[j as usize] + (jf / (rf - jf + 1.0)).ln();
    }
    let scale = rf.sqrt();
    let mut mass = CompensatedSum::default();
    let mut moment = CompensatedSum::default();
    for (j, lw) in ln_w.iter().enumerate() {
        let w = lw.exp();
        mass.add(w);
        let s = (rf - 2.0 * j as f64).abs() / scale;
        if s > 0.0 {
            moment.add((lw + p * s.ln()).exp());
        }
    }
    Ok(moment.value() / mass.value())
}

/// Exact moment of a Rademacher sum against the Gaussian upper bound and
/// the small-coefficient lower bound.
#[derive(Debug, Clone, Serialize)]
pub struct MomentBoundReport {
    pub exact_moment: f64,
    /// `gamma_p^p |c|^p`.
    pub upper_bound: f64,
    /// `gamma_p^p |c|^p (1 - 10 tau ln(1/tau)^(p/2))`. May be negative.
    pub lower_bound: f64,
    /// `max_i |c_i| / |c|`.
    pub tau: f64,
    pub holds_upper: bool,
    /// Whether `tau < e^-4`, the regime where the lower bound is claimed.
    pub lower_applicable: bool,
    /// `exact >= lower` when applicable, `true` otherwise.
    pub holds_lower: bool,
}

/// Relative slack allowed on the upper bound comparison.
pub const UPPER_BOUND_SLACK: f64 = 1e-12;

/// Computes the exact moment (enumeration for `R <= 22`, the binomial law
/// for larger uniform-magnitude vectors) and both bounds.
pub fn check_bounds(c: &[f64], p: f64) -> Result<MomentBoundReport> {
    check_p(p)?;
    let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("coefficient vector must be nonzero and finite"));
    }
    let max_abs = c.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let tau = max_abs / norm;

    let exact_moment = if c.len() <= MAX_ENUMERATION_LEN {
        bernoulli_moment_exact(c, p)?
    } else if c.iter().all(|x| x.abs() == max_abs) {
        binomial_moment_exact(c.len() as u64, p)? * norm.powf(p)
    } else {
        return Err(Error::TooLarge(format!(
            "R = {} exceeds the enumeration limit and the coefficients are not uniform",
            c.len()
        )));
    };
    Ok(report_from_parts(exact_moment, norm, tau, p))
}

/// Bound report for the uniform vector `c_i = R^(-1/2)` using the binomial law.
pub fn check_bounds_uniform(r: u64, p: f64) -> Result<MomentBoundReport> {
    let exact = binomial_moment_exact(r, p)?;
    Ok(report_from_parts(exact, 1.0, 1.0 / (r as f64).sqrt(), p))
}

fn report_from_parts(exact_moment: f64, norm: f64, tau: f64, p: f64) -> MomentBoundReport {
    let upper_bound = ln_gamma_p_pow_p(p).exp() * norm.powf(p);
    let lower_bound = upper_bound * lower_bound_factor(tau, p);
    let lower_applicable = tau < (-4.0_f64).exp();
    MomentBoundReport {
        exact_moment,
        upper_bound,
        lower_bound,
        tau,
        holds_upper: exact_moment <= upper_bound * (1.0 + UPPER_BOUND_SLACK),
        lower_applicable,
        holds_lower: !lower_applicable || exact_moment >= lower_bound,
    }
}

/// `1 - 10 tau ln(1/tau)^(p/2)`.
pub fn lower_bound_factor(tau: f64, p: f64) -> f64 {
    1.0 - 10.0 * tau * (1.0 / tau).ln().powf(0.5 * p)
}
