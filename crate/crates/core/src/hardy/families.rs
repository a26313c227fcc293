use serde::{Deserialize, Serialize};

use super::piecewise::{apply_hm_closed, lp_norm_pow_closed, PiecewisePowerFn, PowerPiece, PowerTerm};
use crate::numerics::{integrate_adaptive, DEFAULT_QUAD_TOL};
use crate::{Error, Params, Result};

fn check_feasible(params: &Params, alpha: f64, beta: f64) -> Result<f64> {
    params.validate()?;
    let gamma = params.gamma();
    if !(alpha < gamma && gamma < beta) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::Infeasible { alpha, beta, gamma });
    }
    Ok(gamma)
}

/// `β·t^(β−γ−1/p)` on `[0, 1)` and `α·t^(α−γ−1/p)` on `[1, ∞)`.
///
/// Its image under `H_m` is `t^(β−γ−1/p)` on `[0, 1)` and `t^(α−γ−1/p)` on
/// `[1, ∞)`.
pub fn extremal_family(params: &Params, alpha: f64, beta: f64) -> Result<PiecewisePowerFn> {
    let gamma = check_feasible(params, alpha, beta)?;
    let shift = gamma + 1.0 / params.p;
    PiecewisePowerFn::new(vec![
        PowerPiece::new(0.0, 1.0, vec![PowerTerm::real(beta, beta - shift)]),
        PowerPiece::new(1.0, f64::INFINITY, vec![PowerTerm::real(alpha, alpha - shift)]),
    ])
}

/// `(‖f − λH_m f‖_p^p, ‖f‖_p^p)` for the extremal family, from the
/// antiderivatives.
pub fn extremal_norms_closed(params: &Params, alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let gamma = check_feasible(params, alpha, beta)?;
    let p = params.p;
    let lambda = params.lambda;
    let residual =
        (beta - lambda).abs().powf(p) / (p * (beta - gamma)) - (alpha - lambda).abs().powf(p) / (p * (alpha - gamma));
    let norm = beta.abs().powf(p) / (p * (beta - gamma)) - alpha.abs().powf(p) / (p * (alpha - gamma));
    Ok((residual, norm))
}

/// `‖f − λH_m f‖_p^p / ‖f‖_p^p` on the extremal family.
pub fn ratio_extremal(params: &Params, alpha: f64, beta: f64) -> Result<f64> {
    let (residual, norm) = extremal_norms_closed(params, alpha, beta)?;
    Ok(residual / norm)
}

/// `‖H_m f‖_p / ‖f‖_p` for `f = t^(−1/p+eps)` on `[0, 1)`.
pub fn hardy_norm_witness(params: &Params, eps: f64) -> Result<f64> {
    params.validate()?;
    let gamma = params.gamma();
    if !(eps > 0.0 && eps < gamma) {
        return Err(Error::ParamDomain(format!("eps must lie in (0, {gamma}), got {eps}")));
    }
    let f = PiecewisePowerFn::single(0.0, 1.0, 1.0, -1.0 / params.p + eps)?;
    let image = apply_hm_closed(&f, params)?;
    let ratio_pow = lp_norm_pow_closed(&image, params.p)? / lp_norm_pow_closed(&f, params.p)?;
    Ok(ratio_pow.powf(1.0 / params.p))
}

/// `‖H_m 1_[n, n+1)‖_p` together with the elementary upper bound for its
/// `p`-th power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonInvertibility {
    pub n: u64,
    pub norm: f64,
    pub norm_pow_p: f64,
    pub bound_pow_p: f64,
}

pub fn noninvertibility_witness(params: &Params, n: u64) -> Result<NonInvertibility> {
    params.validate()?;
    if n == 0 {
        return Err(Error::ParamDomain("n must be at least 1".into()));
    }
    let p = params.p;
    let start = n as f64;
    let f = PiecewisePowerFn::single(start, start + 1.0, 1.0, 0.0)?;
    let image = apply_hm_closed(&f, params)?;
    let norm_pow_p = lp_norm_pow_closed(&image, p)?;
    let k = 1.0 + params.m / 2.0;
    let decay = p * k - 1.0;
    let bound_pow_p = ((start + 1.0).powf(k) - start.powf(k)).powf(p) / (k.powf(p) * decay * start.powf(decay));
    Ok(NonInvertibility {
        n,
        norm: norm_pow_p.powf(1.0 / p),
        norm_pow_p,
        bound_pow_p,
    })
}

/// Both sides of `(p(1+m/2) − 1)∫_0^1 |H_m f|^p ≤ p∫_0^1 |H_m f|^(p−2)(H_m f) f`
/// and the boundary term `|H_m f(1)|^p` that closes the identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ByPartsGap {
    pub lhs: f64,
    pub rhs: f64,
    pub boundary: f64,
}

impl ByPartsGap {
    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Evaluates both sides for a real `f` restricted to `[0, 1)`.
pub fn by_parts_gap(f: &PiecewisePowerFn, params: &Params) -> Result<ByPartsGap> {
    if !f.is_real() {
        return Err(Error::InvalidFunction(
            "integration by parts needs a real function".into(),
        ));
    }
    let p = params.p;
    let f = f.truncate(1.0);
    let image = apply_hm_closed(&f, params)?;
    let h = |t: f64| image.eval(t).re;
    let weight = p * (1.0 + params.m / 2.0) - 1.0;
    let lhs = weight * integrate_adaptive(|t| h(t).abs().powf(p), 0.0, 1.0, DEFAULT_QUAD_TOL)?;
    let rhs = p * integrate_adaptive(
        |t| {
            let ht = h(t);
            ht.signum() * ht.abs().powf(p - 1.0) * f.eval(t).re
        },
        0.0,
        1.0,
        DEFAULT_QUAD_TOL,
    )?;
    let boundary = image.eval_left(1.0).norm().powf(p);
    Ok(ByPartsGap { lhs, rhs, boundary })
}
