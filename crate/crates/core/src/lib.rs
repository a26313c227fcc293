//! Sharp `L^p` norms of the operators `I - λH_m` on the half-line.
//!
//! `H_m` is the weighted Hardy averaging operator
//! `(H_m f)(t) = t^(-1-m/2) ∫_0^t f(s) s^(m/2) ds`. For `m = 0` and `λ = 1`
//! the operator `I - H_0` is the radial reduction of the Beurling–Ahlfors
//! transform. The crate computes the norm of `I - λH_m` on `L^p(0, ∞)` as a
//! supremum over a two-parameter extremal family, and certifies the
//! ingredients of the matching upper bound numerically:
//!
//! * [`numerics`]: bracketed root finding, graded adaptive quadrature and a
//!   seeded multistart maximizer on the plane.
//! * [`constants`]: `γ_{p,m}`, `α_p`, the closed form for `m = 0, λ = 1`, the
//!   ratio `c_{m,p,λ}(α, β)` and the branch-detecting [`sharp_constant`].
//! * [`hardy`]: an exact piecewise-power function algebra closed under `H_m`,
//!   a sampled path for arbitrary grid data, and the extremal families.
//! * [`bellman`]: the majorant pairs `(V, U)` and grid certification of the
//!   majorization and Burkholder conditions.
//! * [`martingale`]: the explicit extremal martingale and a seeded fuzzer for
//!   the maximal inequality `‖f_n − f_n*‖_p ≤ C_p ‖f_n‖_p`.

// negated comparisons are used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bellman;
pub mod constants;
mod error;
pub mod hardy;
pub mod martingale;
pub mod numerics;
mod report;

pub use error::{Error, Result};

pub use constants::{
    alpha_star, c_ratio, conjectured_value, cp_pow, gamma, sharp_constant, Branch, ConstantResult, Gamma, Params,
};
pub use hardy::{PiecewisePowerFn, PowerPiece, PowerTerm, SampledFn};
pub use numerics::{OptConfig, OptResult, Region};
pub use report::ViolationReport;
