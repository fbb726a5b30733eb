//! Fractal Chebyshev learning-rate schedules for gradient descent.
//!
//! Gradient descent on a convex quadratic with step sizes set to the
//! reciprocals of the Chebyshev nodes on a spectral interval `[m, M]`
//! converges at the accelerated rate, but the partial products of the
//! update factors are wildly sensitive to the order in which the steps
//! are taken. This crate implements the fractal (recursive interlacing)
//! ordering that keeps every partial product bounded, together with:
//!
//! * [`schedule`] — Chebyshev nodes, the fractal permutation, schedule
//!   transforms (reverse, repeat, concat, slow-step insertion, waltz) and
//!   uncertified variants.
//! * [`problems`] — quadratic fixtures (including the path-graph
//!   Laplacian instance), the one-dimensional `log cosh` objective, the
//!   non-convex combination lock, and bounded/stochastic noise models.
//! * [`optimize`] — (perturbed) gradient descent, exact line search,
//!   heavy-ball and Nesterov baselines, conjugate gradient with Ritz
//!   value extraction, and the CG-matching schedule.
//! * [`polybounds`] — grid oracles for residual-polynomial norms on an
//!   interval and the closed-form prefix/suffix/infix/series bounds they
//!   are checked against, plus the skewed-polynomial factorization tree
//!   and the tree-exchange inequality.
//! * [`experiments`] — the desk-scale experiment harness behind the CLI.
//!
//! Indexing convention: schedule positions and node indices are 1-based
//! in every public function signature (`fractal_perm`, `infix_norm_oracle`,
//! ...); serialized step arrays are plain 0-based JSON/CSV arrays.

pub mod dd;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod polybounds;
pub mod problems;
pub mod schedule;

/// Seed used by the CLI and the experiment harness when none is given.
pub const DEFAULT_SEED: u64 = 0x5EED;
