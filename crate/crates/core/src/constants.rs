//! The sharp constant `C_{p,m,λ}` and the quantities it is built from.
//!
//! `C^p` is the supremum of
//!
//! ```text
//! c(α, β) = [(β−γ)|α−λ|^p + (γ−α)|β−λ|^p] / [(β−γ)|α|^p + (γ−α)|β|^p]
//! ```
//!
//! over `α < γ < β`, with `γ = γ_{p,m} = m/2 + (p−1)/p`. Three parameter
//! families have closed forms (`λ ≤ 0`, `p = 2`, and `m = 0, λ = 1`); all
//! other parameters go through the multistart maximizer, and the result is
//! compared with the boundary value `max{1, |1 − λ/γ|^p}` that `c` approaches
//! on the edge of the feasible set.

use serde::{Deserialize, Serialize};

use crate::numerics::{self, maximize_2d, maximize_golden, Bracket, OptConfig, Region};
use crate::{Error, Result};

/// The triple `(p, m, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub m: f64,
    pub lambda: f64,
}

impl Params {
    pub fn new(p: f64, m: f64, lambda: f64) -> Result<Self> {
        let params = Params { p, m, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let Params { p, m, lambda } = *self;
        if !(p.is_finite() && m.is_finite() && lambda.is_finite()) {
            return Err(Error::ParamDomain("p, m and lambda must be finite".into()));
        }
        check_p(p)?;
        let m_min = m_lower_bound(p);
        if !(m > m_min) {
            return Err(Error::ParamDomain(format!(
                "m must exceed -2(p-1)/p = {m_min} for p = {p}, got {m}"
            )));
        }
        Ok(())
    }

    /// `γ_{p,m}`; assumes the parameters are valid.
    pub fn gamma(&self) -> f64 {
        self.m / 2.0 + (self.p - 1.0) / self.p
    }
}

/// Smallest admissible `m` (exclusive) for exponent `p`.
pub fn m_lower_bound(p: f64) -> f64 {
    -2.0 * (p - 1.0) / p
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::ParamDomain(format!("p must exceed 1, got {p}")));
    }
    Ok(())
}

/// `γ_{p,m} = m/2 + (p−1)/p`, the reciprocal of `‖H_m‖_{L^p}`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Gamma(f64);

impl Gamma {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub fn gamma(params: &Params) -> Result<Gamma> {
    params.validate()?;
    Ok(Gamma(params.gamma()))
}

/// The root equation `(p−1)α + 2 − p = |α|^(p−2) α`, written as `g(α) = 0`.
fn alpha_equation(p: f64, alpha: f64) -> f64 {
    (p - 1.0) * alpha + 2.0 - p - alpha.abs().powf(p - 2.0) * alpha
}

/// `α_p`: the unique negative root of `(p−1)α + 2 − p = |α|^(p−2) α` for
/// `p > 2`, and `(p−1)/p` for `1 < p ≤ 2`.
pub fn alpha_star(p: f64) -> Result<f64> {
    check_p(p)?;
    if p <= 2.0 {
        return Ok((p - 1.0) / p);
    }
    // α_p < −(p−1)^(1/(p−2)); g is positive far to the left.
    let hi = -(p - 1.0).powf(1.0 / (p - 2.0));
    let g = |a: f64| alpha_equation(p, a);
    let g_hi = g(hi);
    if g_hi == 0.0 {
        return Ok(hi);
    }
    let mut lo = 2.0 * hi;
    let mut g_lo = g(lo);
    let mut doublings = 0;
    while g_lo <= 0.0 {
        doublings += 1;
        if doublings > 200 || !g_lo.is_finite() {
            return Err(Error::NonConvergence {
                what: "alpha_p bracket search",
                best: lo,
                error_bound: f64::INFINITY,
            });
        }
        lo *= 2.0;
        g_lo = g(lo);
    }
    let bracket = Bracket::from_values(lo, hi, g_lo, g_hi)?;
    numerics::find_root_bracketed(g, bracket, 1e-15 * hi.abs())
}

/// `C_p^p`, the closed form of `C^p_{p,0,1}`:
/// `1/(p−1)^p` for `1 < p ≤ 2` and `(1+|α_p|)^(p−2)/(p−1)` for `p > 2`.
pub fn cp_pow(p: f64) -> Result<f64> {
    check_p(p)?;
    if p <= 2.0 {
        Ok((p - 1.0).powf(-p))
    } else {
        let a = alpha_star(p)?;
        Ok((1.0 + a.abs()).powf(p - 2.0) / (p - 1.0))
    }
}

/// `c_{m,p,λ}(α, β)^p`; requires `α < γ < β`.
pub fn c_ratio(params: &Params, alpha: f64, beta: f64) -> Result<f64> {
    params.validate()?;
    let gamma = params.gamma();
    if !(alpha < gamma && gamma < beta) {
        return Err(Error::Infeasible { alpha, beta, gamma });
    }
    Ok(ratio_unchecked(params.p, gamma, params.lambda, alpha, beta))
}

pub(crate) fn ratio_unchecked(p: f64, gamma: f64, lambda: f64, alpha: f64, beta: f64) -> f64 {
    let wa = beta - gamma;
    let wb = gamma - alpha;
    let num = wa * (alpha - lambda).abs().powf(p) + wb * (beta - lambda).abs().powf(p);
    let den = wa * alpha.abs().powf(p) + wb * beta.abs().powf(p);
    num / den
}

/// `max{1, |1 − λ/γ|^p}`: the largest limit of `c^p` on the edge of the
/// feasible set, and a lower bound for `C^p`.
pub fn boundary_value(params: &Params) -> f64 {
    let edge = (1.0 - params.lambda / params.gamma()).abs().powf(params.p);
    edge.max(1.0)
}

/// `λ/γ − 1`: the value conjectured for the norm when `λ = 1 + m`.
pub fn conjectured_value(params: &Params) -> Result<f64> {
    params.validate()?;
    Ok(params.lambda / params.gamma() - 1.0)
}

/// Which route produced a [`ConstantResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    #[serde(rename = "closed_form_m0_l1")]
    ClosedFormM0L1,
    LambdaNonpositive,
    PEqualsTwo,
    InteriorOptimum,
    BoundaryLimit,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::ClosedFormM0L1 => "closed_form_m0_l1",
            Branch::LambdaNonpositive => "lambda_nonpositive",
            Branch::PEqualsTwo => "p_equals_two",
            Branch::InteriorOptimum => "interior_optimum",
            Branch::BoundaryLimit => "boundary_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantResult {
    pub c_pow_p: f64,
    pub c: f64,
    pub branch: Branch,
    /// `(α*, β*)`, present only for [`Branch::InteriorOptimum`].
    pub argmax: Option<(f64, f64)>,
    /// `α_p`, recorded on the `m = 0, λ = 1` branch.
    pub alpha_p: Option<f64>,
}

impl ConstantResult {
    fn from_pow(p: f64, c_pow_p: f64, branch: Branch) -> Self {
        ConstantResult {
            c_pow_p,
            c: c_pow_p.powf(1.0 / p),
            branch,
            argmax: None,
            alpha_p: None,
        }
    }

    fn from_norm(p: f64, c: f64, branch: Branch) -> Self {
        ConstantResult {
            c_pow_p: c.powf(p),
            c,
            branch,
            argmax: None,
            alpha_p: None,
        }
    }
}

/// `C_{p,m,λ}` with the branch that produced it.
///
/// Closed forms are used for `λ ≤ 0` (`C = |λ|/γ + 1`), for `p = 2`
/// (`C = max{1, λ/γ − 1}`) and for `m = 0, λ = 1` (`C^p = C_p^p`). Everything
/// else goes through [`optimize_ratio`].
pub fn sharp_constant(params: &Params, cfg: &OptConfig) -> Result<ConstantResult> {
    params.validate()?;
    let Params { p, m, lambda } = *params;
    let gamma = params.gamma();
    if lambda <= 0.0 {
        return Ok(ConstantResult::from_norm(
            p,
            lambda.abs() / gamma + 1.0,
            Branch::LambdaNonpositive,
        ));
    }
    if p == 2.0 {
        return Ok(ConstantResult::from_norm(
            p,
            (lambda / gamma - 1.0).max(1.0),
            Branch::PEqualsTwo,
        ));
    }
    if m == 0.0 && lambda == 1.0 {
        let mut result = ConstantResult::from_pow(p, cp_pow(p)?, Branch::ClosedFormM0L1);
        result.alpha_p = Some(alpha_star(p)?);
        return Ok(result);
    }
    optimize_ratio(params, cfg)
}

/// The generic route: maximize `c^p` over `α < γ < β` and compare with the
/// boundary value.
///
/// An interior optimum is reported only if it beats the boundary value by
/// more than `cfg.f_tol`; it must then have converged, otherwise
/// [`Error::OptimizerNonConvergence`] carries the best point found.
pub fn optimize_ratio(params: &Params, cfg: &OptConfig) -> Result<ConstantResult> {
    params.validate()?;
    cfg.validate()?;
    let Params { p, lambda, .. } = *params;
    let gamma = params.gamma();
    let opt = maximize_2d(
        |a, b| ratio_unchecked(p, gamma, lambda, a, b),
        Region::Straddle { center: gamma },
        cfg,
    );
    let boundary = boundary_value(params);
    if opt.value > boundary + cfg.f_tol {
        let mut result = ConstantResult::from_pow(p, opt.value, Branch::InteriorOptimum);
        result.argmax = Some(opt.argmax);
        if !opt.converged {
            return Err(Error::OptimizerNonConvergence(Box::new(result)));
        }
        Ok(result)
    } else {
        Ok(ConstantResult::from_pow(p, boundary, Branch::BoundaryLimit))
    }
}

/// `|α−1|^p / (p(1−α) − 1 + |α|^p)`, the one-parameter ratio behind `C_p`.
/// The denominator is positive for every `α ≠ 1`.
pub fn one_parameter_ratio(alpha: f64, p: f64) -> f64 {
    (alpha - 1.0).abs().powf(p) / (p * (1.0 - alpha) - 1.0 + alpha.abs().powf(p))
}

/// `sup_{α < (p−1)/p}` of [`one_parameter_ratio`], by a grid scan in the chart
/// `α = (p−1)/p − e^u` followed by golden-section refinement.
///
/// Returns `(argmax, value)`. When the supremum is approached at the right
/// edge the argmax is the edge point itself, where the ratio is continuous.
pub fn one_parameter_sup(p: f64) -> Result<(f64, f64)> {
    check_p(p)?;
    let edge = (p - 1.0) / p;
    let h = |u: f64| one_parameter_ratio(edge - u.exp(), p);
    let (u_lo, u_hi, n) = (-40.0, 40.0, 4000);
    let step = (u_hi - u_lo) / n as f64;
    let (best_i, _) = (0..=n)
        .map(|i| (i, h(u_lo + step * i as f64)))
        .filter(|(_, v)| v.is_finite())
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
        );
    let lo = u_lo + step * (best_i.max(1) - 1) as f64;
    let hi = u_lo + step * (best_i + 1).min(n) as f64;
    let (u, value) = maximize_golden(h, lo, hi, 1e-12);
    let edge_value = one_parameter_ratio(edge, p);
    if edge_value >= value {
        Ok((edge, edge_value))
    } else {
        Ok((edge - u.exp(), value))
    }
}

/// The three expressions that coincide at `α = α_p`:
/// the tangency form `|1/α−1|^(p−2)(1/α−1)(1/((p−1)(1−α)) − 1)`, the
/// one-parameter ratio, and the closed form `C_p^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityChain {
    pub alpha: f64,
    pub tangency: f64,
    pub ratio: f64,
    pub closed: f64,
}

pub fn identity_chain(p: f64) -> Result<IdentityChain> {
    let alpha = alpha_star(p)?;
    let r = 1.0 / alpha - 1.0;
    let tangency = r.abs().powf(p - 2.0) * r * (1.0 / ((p - 1.0) * (1.0 - alpha)) - 1.0);
    Ok(IdentityChain {
        alpha,
        tangency,
        ratio: one_parameter_ratio(alpha, p),
        closed: cp_pow(p)?,
    })
}
