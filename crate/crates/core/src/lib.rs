//! Convex relaxation and randomized rank-reduction rounding for the
//! `l_p` subspace approximation problem.
//!
//! Given points `a_1, ..., a_m` in `R^n`, a target dimension `k` and an
//! exponent `p >= 1`, the problem asks for a `k`-dimensional linear subspace
//! minimizing the `l_p` norm of the Euclidean distances of the points to it.
//! Solutions are parametrized by an `n x (n-k)` column-orthonormal matrix `Z`
//! spanning the orthogonal complement, with cost `(sum_i |a_i^T Z|_2^p)^(1/p)`.
//!
//! The crate provides:
//!
//! * [`spectral`]: symmetric eigensolver and the exact projection onto the
//!   relaxation's feasible set `{0 <= X <= I, Tr X >= n-k}`.
//! * [`instance`]: the point-set model, objective evaluation and JSON I/O.
//! * [`moments`]: Gaussian moments `gamma_p` and exact Rademacher-sum moments.
//! * [`relaxation`]: a projected-gradient solver for the convex relaxation.
//! * [`rounding`]: greedy eigenvalue binning with random sign combinations.
//! * [`baselines`]: SVD optimum for `p = 2`, sphere and grid oracles.
//! * [`generators`]: Gaussian gap instances and the Min-Uncut and
//!   Unique-Label-Cover reductions.
//! * [`experiment`], [`verify`]: report types and the executable property
//!   suites used by the `subspace` command-line tool.

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod instance;
pub mod moments;
pub mod relaxation;
pub mod rng;
pub mod rounding;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use instance::{PointSet, ProblemSpec, RelaxationSolution, SubspaceSolution};
pub use spectral::{EigenSpectrum, SymMatrix};
