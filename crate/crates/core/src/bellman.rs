//! Majorant pairs `(V, U)` and their grid certification.
//!
//! `V(x, y) = |x − λy|^p − C^p|x|^p` encodes the inequality and
//! `U(x, y) = slope · |y|^(p−2) y (x − γy)` is affine in `x`. Every branch
//! shares this form; only `C^p` and the slope differ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{alpha_star, cp_pow, sharp_constant, Branch};
use crate::numerics::{find_root_bracketed, Bracket};
use crate::report::ViolationTracker;
use crate::{Error, OptConfig, Params, Result, ViolationReport};

/// Points on the branch-selection grid for the first case.
const FIRST_CASE_POINTS: usize = 100_000;
/// Tolerance for the first-case majorization test.
const FIRST_CASE_TOL: f64 = 1e-9;
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialBranch {
    /// The pair for `m = 0, λ = 1`, built from `α_p`.
    #[serde(rename = "mart_m0_l1")]
    MartM0L1,
    /// `λ > 2γ` with `C = λ/γ − 1`, tangent at `x = γ` only.
    GeneralFirstCase,
    /// Tangent at the two maximizers of the ratio.
    GeneralSecondCase,
}

impl SpecialBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            SpecialBranch::MartM0L1 => "mart_m0_l1",
            SpecialBranch::GeneralFirstCase => "general_first_case",
            SpecialBranch::GeneralSecondCase => "general_second_case",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialFnSpec {
    pub params: Params,
    pub c_pow_p: f64,
    pub branch: SpecialBranch,
    /// Signed coefficient of `|y|^(p−2) y (x − γy)` in `U`; negative.
    pub slope: f64,
    /// Tangency points of `V(·, 1)` and `U(·, 1)` when there are two.
    pub anchors: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// `|x|^(e−1) x`, finite at 0 for every `e > 0`.
fn signed_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.signum() * x.abs().powf(e)
    }
}

impl SpecialFnSpec {
    pub fn gamma(&self) -> f64 {
        self.params.gamma()
    }

    /// The positive constant `D = −slope`.
    pub fn d(&self) -> f64 {
        -self.slope
    }

    /// Same `U`, different `C^p` in `V`. Used to show that a smaller
    /// constant breaks majorization.
    pub fn with_c_pow_p(&self, c_pow_p: f64) -> Self {
        SpecialFnSpec {
            c_pow_p,
            ..self.clone()
        }
    }

    pub fn v(&self, x: f64, y: f64) -> f64 {
        let Params { p, lambda, .. } = self.params;
        (x - lambda * y).abs().powf(p) - self.c_pow_p * x.abs().powf(p)
    }

    pub fn u(&self, x: f64, y: f64) -> f64 {
        let p = self.params.p;
        self.slope * signed_pow(y, p - 1.0) * (x - self.gamma() * y)
    }

    /// `∂V/∂x`.
    pub fn v_x(&self, x: f64, y: f64) -> f64 {
        let Params { p, lambda, .. } = self.params;
        p * (signed_pow(x - lambda * y, p - 1.0) - self.c_pow_p * signed_pow(x, p - 1.0))
    }

    /// `∂U/∂x`.
    pub fn u_x(&self, y: f64) -> f64 {
        self.slope * signed_pow(y, self.params.p - 1.0)
    }

    /// Endpoints of the interval on which `V(·, 1)` is convex, for `p ≠ 2`.
    pub fn inflection_interval(&self) -> Result<(f64, f64)> {
        let Params { p, lambda, .. } = self.params;
        if p == 2.0 || lambda == 0.0 {
            return Err(Error::Structural(
                "V(., 1) has no inflection points for p = 2 or lambda = 0".into(),
            ));
        }
        let k = self.c_pow_p.powf(1.0 / (p - 2.0));
        if (k - 1.0).abs() < f64::EPSILON {
            return Err(Error::Structural(
                "C = 1 leaves V(., 1) without a bounded convex interval".into(),
            ));
        }
        let (a, b) = (lambda / (1.0 + k), lambda / (1.0 - k));
        Ok((a.min(b), a.max(b)))
    }
}

pub fn v_eval(spec: &SpecialFnSpec, x: f64, y: f64) -> f64 {
    spec.v(x, y)
}

pub fn u_eval(spec: &SpecialFnSpec, x: f64, y: f64) -> f64 {
    spec.u(x, y)
}

/// `(V − U) / max(1, |V|, |U|)`.
fn excess(spec: &SpecialFnSpec, x: f64, y: f64) -> f64 {
    let v = spec.v(x, y);
    let u = spec.u(x, y);
    (v - u) / 1f64.max(v.abs()).max(u.abs())
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl IndexedParallelIterator<Item = f64> {
    let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
    (0..n)
        .into_par_iter()
        .map(move |i| if i + 1 == n { hi } else { lo + i as f64 * step })
}

/// Max-violation reduction over a parallel iterator of `(violation, x, y)`,
/// merged in index order.
fn reduce<I>(items: I) -> ViolationTracker
where
    I: IndexedParallelIterator<Item = (f64, f64, f64)>,
{
    items
        .with_min_len(CHUNK)
        .fold(ViolationReport::tracker, |mut t, (v, x, y)| {
            t.observe(v, x, y);
            t
        })
        .reduce(ViolationReport::tracker, ViolationTracker::merge)
}

fn slice_tracker(spec: &SpecialFnSpec, lo: f64, hi: f64, n: usize, y: f64) -> ViolationTracker {
    reduce(linspace(lo, hi, n).map(|x| (excess(spec, x, y), x, y)))
}

/// Builds the majorant pair for `params`.
///
/// `m = 0, λ = 1` gives the pair built from `α_p`. Otherwise `λ > 0` and
/// `p ≠ 2` are required; the first case is chosen when `λ > 2γ` and the
/// tangent line at `γ` majorizes `V(·, 1)` on a verification grid, and the
/// second case anchors `U` at the interior maximizer of the ratio.
pub fn build_special_fn(params: &Params, cfg: &OptConfig) -> Result<SpecialFnSpec> {
    params.validate()?;
    let Params { p, m, lambda } = *params;
    let gamma = params.gamma();

    if m == 0.0 && lambda == 1.0 {
        let alpha_p = alpha_star(p)?;
        return Ok(SpecialFnSpec {
            params: *params,
            c_pow_p: cp_pow(p)?,
            branch: SpecialBranch::MartM0L1,
            slope: -p * (1.0 - alpha_p).abs().powf(p - 2.0) / (p - 1.0),
            anchors: (p > 2.0).then_some((alpha_p, 1.0)),
            warnings: Vec::new(),
        });
    }
    if lambda <= 0.0 || p == 2.0 {
        return Err(Error::ParamDomain(format!(
            "the general special function needs lambda > 0 and p != 2, got p = {p}, lambda = {lambda}"
        )));
    }

    if lambda > 2.0 * gamma {
        let candidate = SpecialFnSpec {
            params: *params,
            c_pow_p: (lambda / gamma - 1.0).powf(p),
            branch: SpecialBranch::GeneralFirstCase,
            slope: -p * (lambda - gamma).powf(p - 1.0) * lambda / gamma,
            anchors: None,
            warnings: Vec::new(),
        };
        if let Some(warnings) = first_case_holds(&candidate) {
            return Ok(SpecialFnSpec { warnings, ..candidate });
        }
    }

    let result = sharp_constant(params, cfg)?;
    let (alpha, beta) = match (result.branch, result.argmax) {
        (Branch::InteriorOptimum, Some(pair)) => pair,
        _ => {
            return Err(Error::Structural(format!(
                "no interior maximizer to anchor U (branch {})",
                result.branch.as_str()
            )))
        }
    };
    let mut spec = SpecialFnSpec {
        params: *params,
        c_pow_p: result.c_pow_p,
        branch: SpecialBranch::GeneralSecondCase,
        slope: 0.0,
        anchors: Some((alpha, beta)),
        warnings: Vec::new(),
    };
    spec.slope = (spec.v(beta, 1.0) - spec.v(alpha, 1.0)) / (beta - alpha);
    Ok(spec)
}

/// Verifies `V(x, 1) ≤ U(x, 1)` for the first-case candidate. Returns the
/// warnings on success and `None` when the inequality fails.
fn first_case_holds(spec: &SpecialFnSpec) -> Option<Vec<String>> {
    let Params { p, lambda, .. } = spec.params;
    let gamma = spec.gamma();
    let scale = lambda.max(1.0);
    // leading coefficient of V − U in |x|^p, and curvature at the tangency
    if 1.0 - spec.c_pow_p > 0.0 {
        return None;
    }
    let curvature = p * (p - 1.0) * ((lambda - gamma).abs().powf(p - 2.0) - spec.c_pow_p * gamma.powf(p - 2.0));
    if curvature > 0.0 {
        return None;
    }

    // Coarse grid far out, finer grids around γ and λ. Points within
    // `near` of γ are excluded from the ambiguity test since V − U has a
    // double zero there.
    let near = 1e-2 * scale;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut closest_away = f64::NEG_INFINITY;
    let mut closest_at = f64::NAN;
    for radius in [1e3, 1e1, 1.0] {
        let lo = gamma - radius * scale;
        let hi = lambda + radius * scale;
        let (w, (c, at)) = linspace(lo, hi, FIRST_CASE_POINTS)
            .map(|x| {
                let e = excess(spec, x, 1.0);
                let away = if (x - gamma).abs() > near { e } else { f64::NEG_INFINITY };
                (e, (away, x))
            })
            .reduce(
                || (f64::NEG_INFINITY, (f64::NEG_INFINITY, f64::NAN)),
                |a, b| (a.0.max(b.0), if b.1 .0 > a.1 .0 { b.1 } else { a.1 }),
            );
        worst_excess = worst_excess.max(w);
        if c > closest_away {
            closest_away = c;
            closest_at = at;
        }
    }
    if worst_excess > FIRST_CASE_TOL {
        return None;
    }
    let mut warnings = Vec::new();
    if closest_away >= -FIRST_CASE_TOL {
        warnings.push(format!(
            "branch ambiguity: V(x,1) - U(x,1) = {closest_away:.3e} at x = {closest_at}, away from the tangency at gamma"
        ));
    }
    Some(warnings)
}

/// Certifies `V ≤ U` on the slices `y = ±1` over `x_range` (with the anchors
/// and `γ` added to the grid), plus the sign of the leading coefficient
/// `1 − C^p` that governs `|x| → ∞` and the slice `y = 0`.
///
/// Violations are `(V − U) / max(1, |V|, |U|)`.
pub fn check_majorization(spec: &SpecialFnSpec, x_range: (f64, f64), n_points: usize, tol: f64) -> ViolationReport {
    let (lo, hi) = x_range;
    let mut tracker = slice_tracker(spec, lo, hi, n_points, 1.0).merge(slice_tracker(spec, lo, hi, n_points, -1.0));
    let gamma = spec.gamma();
    let mut extra = vec![gamma];
    if let Some((a, b)) = spec.anchors {
        extra.extend([a, b]);
    }
    for x in extra {
        tracker.observe(excess(spec, x, 1.0), x, 1.0);
        tracker.observe(excess(spec, -x, -1.0), -x, -1.0);
    }
    tracker.observe(1.0 - spec.c_pow_p, f64::INFINITY, 0.0);
    tracker.finish(tol)
}

/// Sampling for [`check_burkholder_conditions`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurkholderGrid {
    /// Coordinates are drawn from `[-radius, radius]`.
    pub radius: f64,
    /// Points per axis.
    pub n: usize,
    /// Step sizes `h` tried for the maximal and concavity conditions.
    pub steps: usize,
}

impl Default for BurkholderGrid {
    fn default() -> Self {
        BurkholderGrid {
            radius: 10.0,
            n: 401,
            steps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurkholderReport {
    pub majorization: ViolationReport,
    pub initial: ViolationReport,
    pub maximal: ViolationReport,
    pub concavity: ViolationReport,
}

impl BurkholderReport {
    pub fn passed(&self) -> bool {
        self.majorization.passed && self.initial.passed && self.maximal.passed && self.concavity.passed
    }
}

/// The four sufficient conditions for the maximal inequality, for the
/// `m = 0, λ = 1` pair: majorization for `x ≤ y`, `U(x, x) ≤ 0`, the
/// maximal condition `U(x+h, max(x+h, y)) ≤ U(x+h, y)` for `x ≤ y`, and
/// concavity of `U(·, y)`, which is checked as exact vanishing of second
/// differences.
pub fn check_burkholder_conditions(spec: &SpecialFnSpec, grid: &BurkholderGrid, tol: f64) -> Result<BurkholderReport> {
    if spec.branch != SpecialBranch::MartM0L1 {
        return Err(Error::Structural(
            "Burkholder conditions apply to the mart_m0_l1 pair only".into(),
        ));
    }
    let r = grid.radius;
    let n = grid.n;
    let coord = move |i: usize| -r + 2.0 * r * i as f64 / (n - 1) as f64;
    let steps: Vec<f64> = (1..=grid.steps).map(|k| r * 0.5f64.powi(k as i32)).collect();
    let normalized = |lhs: f64, rhs: f64| (lhs - rhs) / 1f64.max(lhs.abs()).max(rhs.abs());

    let pairs = move || (0..n * n).into_par_iter().map(move |k| (coord(k / n), coord(k % n)));

    let majorization = reduce(pairs().map(|(x, y)| {
        if x <= y {
            (excess(spec, x, y), x, y)
        } else {
            (f64::NEG_INFINITY, x, y)
        }
    }));
    let initial = reduce(linspace(-r, r, n * n).map(|x| {
        let u = spec.u(x, x);
        (u / 1f64.max(u.abs()), x, x)
    }));
    let maximal = reduce(pairs().map(|(x, y)| {
        if x > y {
            return (f64::NEG_INFINITY, x, y);
        }
        steps
            .iter()
            .flat_map(|&h| [h, -h])
            .map(|h| {
                let z = x + h;
                (normalized(spec.u(z, z.max(y)), spec.u(z, y)), x, y)
            })
            .fold((f64::NEG_INFINITY, x, y), |a, b| if b.0 > a.0 { b } else { a })
    }));
    let concavity = reduce(pairs().map(|(x, y)| {
        steps
            .iter()
            .map(|&h| {
                let (l, c, rr) = (spec.u(x - h, y), spec.u(x, y), spec.u(x + h, y));
                let second = (l - 2.0 * c + rr) / 1f64.max(l.abs()).max(c.abs()).max(rr.abs());
                (second, x, y)
            })
            .fold((f64::NEG_INFINITY, x, y), |a, b| if b.0 > a.0 { b } else { a })
    }));

    let with_tol = |t: ViolationTracker| t.finish(tol);
    Ok(BurkholderReport {
        majorization: with_tol(majorization),
        initial: with_tol(initial),
        maximal: with_tol(maximal),
        concavity: with_tol(concavity),
    })
}

/// Derivative by Richardson-extrapolated central differences.
fn derivative(f: &dyn Fn(f64) -> f64, x: f64) -> f64 {
    let h = 1e-3 * x.abs().max(1.0);
    let central = |h: f64| (f(x + h) - f(x - h)) / (2.0 * h);
    (4.0 * central(h / 2.0) - central(h)) / 3.0
}

/// Root of `g` on `(-∞, edge]` (`leftward`) or `[edge, ∞)`, found by
/// doubling a bracket away from `edge`.
fn root_beyond(g: &dyn Fn(f64) -> f64, edge: f64, leftward: bool) -> Option<f64> {
    let direction = if leftward { -1.0 } else { 1.0 };
    let g_edge = g(edge);
    let mut width = 1f64.max(edge.abs());
    for _ in 0..200 {
        let far = edge + direction * width;
        let g_far = g(far);
        if g_far.is_finite() && g_far.signum() != g_edge.signum() && g_far != 0.0 && g_edge != 0.0 {
            let (lo, hi, f_lo, f_hi) = if leftward {
                (far, edge, g_far, g_edge)
            } else {
                (edge, far, g_edge, g_far)
            };
            let bracket = Bracket::from_values(lo, hi, f_lo, f_hi).ok()?;
            return find_root_bracketed(g, bracket, 1e-14 * width.max(1.0)).ok();
        }
        width *= 2.0;
    }
    None
}

/// Verifies that the affine `u` touches `v` at one point left of the convex
/// interval `(a, b)` and one point right of it, and that `v ≤ u` in between
/// and around.
///
/// The tangency points solve `v′ = u′` on either side of `(a, b)`; failing
/// to find both is a structural error. Violations are normalized by
/// `max(1, |v|, |u|)` for values and `max(1, |u′|)` for slopes.
pub fn check_double_tangent(
    v: impl Fn(f64) -> f64,
    u: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<ViolationReport> {
    if !(a < b) {
        return Err(Error::Structural(format!("inflection interval ({a}, {b}) is empty")));
    }
    let slope = u(1.0) - u(0.0);
    let g = |x: f64| derivative(&v, x) - slope;
    let left = root_beyond(&g, a, true);
    let right = root_beyond(&g, b, false);
    let (alpha, beta) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return Err(Error::Structural(format!(
                "expected two tangency points outside ({a}, {b}), found {left:?} and {right:?}"
            )))
        }
    };

    let value_gap = |x: f64| {
        let (vx, ux) = (v(x), u(x));
        (vx - ux) / 1f64.max(vx.abs()).max(ux.abs())
    };
    let slope_scale = 1f64.max(slope.abs());
    let mut tracker = ViolationReport::tracker();
    for x in [alpha, beta] {
        tracker.observe(value_gap(x).abs(), x, f64::NAN);
        tracker.observe(g(x).abs() / slope_scale, x, f64::NAN);
    }
    let span = beta - alpha;
    let n = 20_001;
    for i in 0..n {
        let x = alpha - span + 3.0 * span * i as f64 / (n - 1) as f64;
        tracker.observe(value_gap(x), x, f64::NAN);
    }
    let mut report = tracker.finish(tol);
    report.witness_y = None;
    Ok(report)
}
