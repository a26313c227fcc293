//! Numerical kernels shared by the rest of the crate.
//!
//! Everything here is a pure function of its inputs. The multistart
//! maximizer runs its starts in parallel but merges them in start order, so
//! results depend only on the configuration seed.

mod optimize;
mod quad;
mod root;

pub use optimize::{maximize_2d, maximize_golden, OptConfig, OptResult, Region};
pub use quad::{integrate_adaptive, integrate_adaptive_detailed, Quadrature, DEFAULT_QUAD_TOL};
pub use root::{find_root_bracketed, find_root_with_bracket, Bracket};
