//! The weighted Hardy operator `(H_m f)(t) = t^(-1-m/2) ∫_0^t f(s) s^(m/2) ds`.
//!
//! Two representations are supported:
//!
//! * [`PiecewisePowerFn`], finite sums of `c·t^a` on half-open intervals.
//!   The class is closed under `H_m` and linear combinations, so images and
//!   `L^p(0, ∞)` norms are computed exactly (up to quadrature on intervals
//!   that carry several exponents).
//! * [`SampledFn`], grid data on `[0, T]`. `H_m` is applied to the piecewise
//!   linear interpolant with exact `s^(m/2)` moments per cell, and norms are
//!   taken over `[0, T]` only.

mod families;
mod piecewise;
mod sampled;

pub use families::{
    by_parts_gap, extremal_family, extremal_norms_closed, hardy_norm_witness, noninvertibility_witness, ratio_extremal,
    ByPartsGap, NonInvertibility,
};
pub use piecewise::{apply_hm_closed, lp_norm_closed, lp_norm_pow_closed, PiecewisePowerFn, PowerPiece, PowerTerm};
pub use sampled::{apply_hm_sampled, verify_complex_bound, ComplexBoundReport, SampledFn};
