//! Fixtures shared by the benchmarks.

use hardylab_core::hardy::extremal_family;
use hardylab_core::{Params, SampledFn};

/// The parameter point with a known interior optimum.
pub fn interior_params() -> Params {
    Params::new(1.5, 1.0, 2.0).expect("valid parameters")
}

/// `f_{α,β}` at `(0.4, 5.7)` sampled on `n` uniform nodes of `[0, t_max]`.
pub fn sampled_extremal(t_max: f64, n: usize) -> SampledFn {
    let params = interior_params();
    let f = extremal_family(&params, 0.4, 5.7).expect("feasible pair");
    SampledFn::from_fn(SampledFn::uniform_grid(t_max, n), |t| f.eval(t)).expect("finite samples")
}
