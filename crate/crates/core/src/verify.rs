//! Executable property suites behind `subspace verify`.
//!
//! Each property runs a fixed number of seeded cases and records how many
//! failed. A suite passes when every property has zero failures.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::baselines::svd_optimal;
use crate::error::{Error, Result};
use crate::instance::{PointSet, ProblemSpec};
use crate::moments::{bernoulli_moment_exact, check_bounds_uniform, gamma_p, gamma_p_pow};
use crate::relaxation::{relaxation_gradient, relaxation_objective_raw, solve_relaxation, SolverConfig};
use crate::rng::{self, StreamRng};
use crate::rounding::{greedy_bin_lower_bound, greedy_partition};
use crate::spectral::{project_capped_simplex, project_feasible, sym_eigen, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Moments,
    Greedy,
    Projection,
    Gradient,
    P2,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Moments,
        Suite::Greedy,
        Suite::Projection,
        Suite::Gradient,
        Suite::P2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Moments => "moments",
            Suite::Greedy => "greedy",
            Suite::Projection => "projection",
            Suite::Gradient => "gradient",
            Suite::P2 => "p2",
        }
    }

    /// Parses a suite name; `all` expands to every suite.
    pub fn parse(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Self::ALL.to_vec());
        }
        Self::ALL
            .iter()
            .copied()
            .find(|s| s.name() == name)
            .map(|s| vec![s])
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown suite '{name}' (expected moments, greedy, projection, gradient, p2 or all)"
                ))
            })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// First failing case, if any.
    pub detail: Option<String>,
}

impl PropertyResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub properties: Vec<PropertyResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(PropertyResult::passed)
    }
}

struct Tally {
    name: String,
    cases: usize,
    failures: usize,
    detail: Option<String>,
}

impl Tally {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            cases: 0,
            failures: 0,
            detail: None,
        }
    }

    fn check(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.detail.is_none() {
                self.detail = Some(detail());
            }
        }
    }

    fn error(&mut self, e: Error) {
        self.check(false, || e.to_string());
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            detail: self.detail,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> SuiteReport {
    let properties = match suite {
        Suite::Moments => vec![
            khintchine(seed, 500),
            p2_moment_equality(seed, 500),
            berry_esseen_lower(),
            gamma_monotone(),
        ],
        Suite::Greedy => vec![greedy_bin_bound(seed, 1000), greedy_tie_break()],
        Suite::Projection => vec![
            projection_optimality(seed, 1000),
            projection_idempotence(seed, 200),
            capped_simplex_grid(seed, 30),
            eigen_reconstruction(seed, 50),
        ],
        Suite::Gradient => vec![gradient_finite_differences(seed, 20)],
        Suite::P2 => vec![p2_solver_matches_svd(seed, 50)],
    };
    SuiteReport {
        suite: suite.name().to_string(),
        properties,
    }
}

fn gaussian_matrix(r: &mut StreamRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

fn random_orthogonal(r: &mut StreamRng, n: usize) -> DMatrix<f64> {
    gaussian_matrix(r, n, n).qr().q()
}

/// Random descending profile in `[0, 1]^len` with sum at least `target`.
pub fn random_profile(r: &mut StreamRng, len: usize, target: f64) -> Vec<f64> {
    let mut lambda: Vec<f64> = (0..len).map(|_| r.random::<f64>()).collect();
    // Raise the smallest entries to 1 until the sum clears the target.
    lambda.sort_by(|a, b| b.total_cmp(a));
    let mut idx = len;
    while lambda.iter().sum::<f64>() < target && idx > 0 {
        idx -= 1;
        lambda[idx] = 1.0;
    }
    lambda.sort_by(|a, b| b.total_cmp(a));
    lambda
}

fn khintchine(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("khintchine upper bound (R <= 12, p in {2,3,4,6})");
    let mut r = rng::stream(seed, 100);
    for case in 0..cases {
        let len = r.random_range(1..=12);
        let c: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut r)).collect();
        let p = [2.0, 3.0, 4.0, 6.0][case % 4];
        let norm2: f64 = c.iter().map(|x| x * x).sum();
        match (bernoulli_moment_exact(&c, p), gamma_p_pow(p)) {
            (Ok(exact), Ok(g)) => {
                let bound = g * norm2.powf(p / 2.0);
                t.check(exact <= bound * (1.0 + 1e-12), || {
                    format!("case {case}: {exact} > {bound}")
                });
            }
            (Err(e), _) | (_, Err(e)) => t.error(e),
        }
    }
    t.finish()
}

fn p2_moment_equality(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("p = 2 equality E|sum c_i x_i|^2 = gamma_2^2 |c|^2");
    let mut r = rng::stream(seed, 101);
    for case in 0..cases {
        let len = r.random_range(1..=12);
        let c: Vec<f64> = (0..len).map(|_| StandardNormal.sample(&mut r)).collect();
        let norm2: f64 = c.iter().map(|x| x * x).sum();
        match (bernoulli_moment_exact(&c, 2.0), gamma_p(2.0)) {
            (Ok(exact), Ok(g)) => {
                let rhs = g * g * norm2;
                t.check((exact - rhs).abs() <= 1e-12 * rhs.max(1.0), || {
                    format!("case {case}: exact {exact} vs {rhs}")
                });
            }
            (Err(e), _) | (_, Err(e)) => t.error(e),
        }
    }
    t.finish()
}

fn berry_esseen_lower() -> PropertyResult {
    let mut t = Tally::new("small-coefficient lower bound (R in {4096, 16384}, p in {3,4})");
    for r in [4096u64, 16384] {
        for p in [3.0, 4.0] {
            match check_bounds_uniform(r, p) {
                Ok(rep) => t.check(rep.lower_applicable && rep.holds_lower && rep.holds_upper, || {
                    format!("R = {r}, p = {p}: exact {} lower {}", rep.exact_moment, rep.lower_bound)
                }),
                Err(e) => t.error(e),
            }
        }
    }
    t.finish()
}

fn gamma_monotone() -> PropertyResult {
    let mut t = Tally::new("gamma_p non-decreasing on [1, 10]");
    let mut prev = 0.0;
    for i in 0..=90 {
        let p = 1.0 + 0.1 * i as f64;
        match gamma_p(p) {
            Ok(g) => {
                t.check(g >= prev, || format!("gamma_{p} = {g} < {prev}"));
                prev = g;
            }
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

fn greedy_bin_bound(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("greedy bin sums >= 1/(2 - 1/b)");
    let mut r = rng::stream(seed, 200);
    for case in 0..cases {
        let b = r.random_range(1..=16);
        let len = r.random_range(b..=64);
        let lambda = random_profile(&mut r, len, b as f64);
        match greedy_partition(&lambda, b) {
            Ok(g) => {
                let bound = greedy_bin_lower_bound(b) - 1e-9;
                t.check(g.bin_sums.iter().all(|&s| s >= bound), || {
                    format!("case {case}: b = {b}, sums {:?}", g.bin_sums)
                });
            }
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

fn greedy_tie_break() -> PropertyResult {
    let mut t = Tally::new("greedy ties go to the lowest bin index");
    type Case = (&'static [f64], usize, &'static [&'static [usize]]);
    let fixtures: [Case; 3] = [
        (&[1.0, 1.0, 1.0], 2, &[&[0, 2], &[1]]),
        (&[0.5, 0.5, 0.5, 0.5], 2, &[&[0, 2], &[1, 3]]),
        (&[1.0, 1.0, 1.0, 0.5, 0.5, 0.5], 3, &[&[0, 3], &[1, 4], &[2, 5]]),
    ];
    for (lambda, b, expected) in fixtures {
        match greedy_partition(lambda, b) {
            Ok(g) => {
                let exp: Vec<Vec<usize>> = expected.iter().map(|s| s.to_vec()).collect();
                t.check(g.bins == exp, || {
                    format!("{lambda:?}: got {:?}, expected {exp:?}", g.bins)
                });
            }
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

fn random_symmetric(r: &mut StreamRng, n: usize, scale: f64) -> SymMatrix {
    let g = gaussian_matrix(r, n, n) * scale;
    SymMatrix::new((&g + g.transpose()) * 0.5).expect("finite")
}

fn random_feasible(r: &mut StreamRng, n: usize, s: f64) -> SymMatrix {
    let q = random_orthogonal(r, n);
    let lambda = random_profile(r, n, s);
    SymMatrix::new(&q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda)) * q.transpose()).expect("finite")
}

fn projection_optimality(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("projection is no farther than any feasible point");
    let mut r = rng::stream(seed, 300);
    for case in 0..cases {
        let n = r.random_range(1..=6);
        let s = r.random_range(0..=n) as f64;
        let x = random_symmetric(&mut r, n, 1.0);
        match project_feasible(&x, s) {
            Ok(px) => {
                let d = x.frobenius_distance(&px);
                for _ in 0..5 {
                    let y = random_feasible(&mut r, n, s);
                    let dy = x.frobenius_distance(&y);
                    t.check(d <= dy + 1e-8, || format!("case {case}: |X-P(X)| = {d} > |X-Y| = {dy}"));
                }
            }
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

fn projection_idempotence(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("projection is idempotent");
    let mut r = rng::stream(seed, 301);
    for case in 0..cases {
        let n = r.random_range(1..=10);
        let s = r.random_range(0..=n) as f64;
        let x = random_symmetric(&mut r, n, 2.0);
        match project_feasible(&x, s).and_then(|p| Ok((project_feasible(&p, s)?, p))) {
            Ok((pp, p)) => {
                let d = pp.frobenius_distance(&p);
                t.check(d <= 1e-10, || format!("case {case}: |P(P(X)) - P(X)| = {d}"));
            }
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

/// Brute-force projection onto `{l in [0,1]^r : sum l >= s}`: grid over the
/// first `r - 1` coordinates, exact minimization over the last.
pub fn brute_force_capped_simplex(mu: &[f64], s: f64, step: f64) -> Vec<f64> {
    let r = mu.len();
    let ticks = (1.0 / step).round() as usize;
    let mut best = (f64::INFINITY, vec![0.0; r]);
    let free = r - 1;
    let total = (ticks + 1).pow(free as u32);
    let mut point = vec![0.0; r];
    for idx in 0..total {
        let mut rest = idx;
        let mut partial = 0.0;
        let mut dist = 0.0;
        for (i, slot) in point.iter_mut().enumerate().take(free) {
            let v = (rest % (ticks + 1)) as f64 * step;
            rest /= ticks + 1;
            *slot = v;
            partial += v;
            dist += (v - mu[i]).powi(2);
        }
        let lo = (s - partial).max(0.0);
        if lo > 1.0 {
            continue;
        }
        let last = mu[r - 1].clamp(lo, 1.0);
        dist += (last - mu[r - 1]).powi(2);
        if dist < best.0 {
            point[r - 1] = last;
            best = (dist, point.clone());
        }
    }
    best.1
}

fn capped_simplex_grid(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("capped-simplex projection matches a brute-force grid (r <= 3)");
    let mut r = rng::stream(seed, 302);
    for case in 0..cases {
        let len = 1 + case % 3;
        let mu: Vec<f64> = (0..len).map(|_| r.random_range(-1.0..2.0)).collect();
        let s = r.random_range(0.0..=len as f64);
        match project_capped_simplex(&mu, s) {
            Ok(p) => {
                let g = brute_force_capped_simplex(&mu, s, 1e-3);
                let err = p.iter().zip(&g).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
                t.check(err <= 2e-3, || format!("case {case}: mu {mu:?}, s {s}: {p:?} vs {g:?}"));
            }
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

fn eigen_reconstruction(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("eigen reconstruction within 1e-7 relative (n <= 50)");
    let mut r = rng::stream(seed, 303);
    for case in 0..cases {
        let n = 1 + case % 50;
        let m = random_symmetric(&mut r, n, 1.0);
        match sym_eigen(&m) {
            Ok(spec) => {
                let back = spec.reassemble();
                let rel = back.frobenius_distance(&m) / m.as_matrix().norm().max(1e-300);
                let sorted = spec.values.windows(2).all(|w| w[0] >= w[1]);
                let gram = spec.vectors.transpose() * &spec.vectors;
                let ortho = (gram - DMatrix::identity(n, n)).amax();
                t.check(rel <= 1e-7 && sorted && ortho <= 1e-8, || {
                    format!("n = {n}: reconstruction {rel:.2e}, orthogonality {ortho:.2e}, sorted {sorted}")
                });
            }
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

/// Central-difference check of the relaxation gradient along random
/// symmetric directions. Returns the worst relative error.
pub fn gradient_fd_error(ps: &PointSet, p: f64, x: &SymMatrix, dirs: &[SymMatrix], h: f64) -> Result<f64> {
    let g = relaxation_gradient(ps, p, x, 1e-12)?;
    let mut worst = 0.0_f64;
    for d in dirs {
        let plus = relaxation_objective_raw(ps, p, &x.add_scaled(h, d))?;
        let minus = relaxation_objective_raw(ps, p, &x.add_scaled(-h, d))?;
        let fd = (plus - minus) / (2.0 * h);
        let analytic = g.dot(d);
        let scale = analytic.abs().max(fd.abs()).max(1e-12);
        worst = worst.max((fd - analytic).abs() / scale);
    }
    Ok(worst)
}

/// Random instance and an interior point `X` for gradient checks.
pub fn gradient_case(r: &mut StreamRng, n: usize) -> (PointSet, SymMatrix, Vec<SymMatrix>) {
    let m = r.random_range(n..=3 * n);
    let ps = PointSet::new(gaussian_matrix(r, m, n)).expect("finite");
    let q = random_orthogonal(r, n);
    let lambda: Vec<f64> = (0..n).map(|_| r.random_range(0.2..0.9)).collect();
    let x = SymMatrix::new(&q * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lambda)) * q.transpose())
        .expect("finite");
    let dirs = (0..3).map(|_| random_symmetric(r, n, 1.0)).collect();
    (ps, x, dirs)
}

fn gradient_finite_differences(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("relaxation gradient matches central differences (h = 1e-5)");
    let mut r = rng::stream(seed, 400);
    for case in 0..cases {
        let p = [2.0, 3.0, 4.0, 6.0][case % 4];
        let n = r.random_range(2..=6);
        let (ps, x, dirs) = gradient_case(&mut r, n);
        match gradient_fd_error(&ps, p, &x, &dirs, 1e-5) {
            Ok(err) => t.check(err <= 1e-5, || {
                format!("case {case}: p = {p}, relative error {err:.3e}")
            }),
            Err(e) => t.error(e),
        }
    }
    t.finish()
}

/// Random instance with `m <= 100`, `n <= 20` and a random `k`.
pub fn random_p2_case(r: &mut StreamRng) -> (PointSet, ProblemSpec) {
    let n = r.random_range(2..=20);
    let m = r.random_range(1..=100);
    let k = r.random_range(0..n);
    let ps = PointSet::new(gaussian_matrix(r, m, n)).expect("finite");
    (ps, ProblemSpec::new(n, k, 2.0).expect("valid"))
}

/// `|solver - svd| / svd` for one instance; exact zeros count as agreement.
pub fn p2_relative_error(ps: &PointSet, spec: &ProblemSpec, cfg: &SolverConfig) -> Result<f64> {
    let svd = svd_optimal(ps, spec.k)?;
    let sol = solve_relaxation(ps, spec, cfg)?;
    let diff = (sol.value - svd.optimal_value).abs();
    if svd.optimal_value <= 1e-12 {
        return Ok(if diff <= 1e-9 { 0.0 } else { f64::INFINITY });
    }
    Ok(diff / svd.optimal_value)
}

fn p2_solver_matches_svd(seed: u64, cases: usize) -> PropertyResult {
    let mut t = Tally::new("p = 2 relaxation value matches the SVD optimum (1e-6 relative)");
    let mut r = rng::stream(seed, 500);
    let cfg = SolverConfig::default();
    for case in 0..cases {
        let (ps, spec) = random_p2_case(&mut r);
        match p2_relative_error(&ps, &spec, &cfg) {
            Ok(err) => t.check(err <= 1e-6, || {
                format!(
                    "case {case}: m = {}, n = {}, k = {}: relative error {err:.3e}",
                    ps.m(),
                    ps.n(),
                    spec.k
                )
            }),
            Err(e) => t.error(e),
        }
    }
    t.finish()
}
