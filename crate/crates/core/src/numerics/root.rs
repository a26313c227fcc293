use crate::{Error, Result};

const MAX_ITER: usize = 200;

/// An interval on which a function changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends and checks for a strict sign change.
    pub fn new<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> Result<Self> {
        Self::from_values(lo, hi, f(lo), f(hi))
    }

    pub fn from_values(lo: f64, hi: f64, f_lo: f64, f_hi: f64) -> Result<Self> {
        let invalid = Error::BracketInvalid { lo, hi, f_lo, f_hi };
        if !(lo < hi) || !f_lo.is_finite() || !f_hi.is_finite() {
            return Err(invalid);
        }
        if f_lo.signum() == f_hi.signum() || f_lo == 0.0 || f_hi == 0.0 {
            return Err(invalid);
        }
        Ok(Bracket { lo, hi, f_lo, f_hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Root of `f` inside `bracket`, to a final bracket width of at most `tol`.
///
/// The width floor is `4ε|x|`; below that no representable point separates
/// the bracket ends.
pub fn find_root_bracketed<F: Fn(f64) -> f64>(f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    find_root_with_bracket(f, bracket, tol).map(|(x, _)| x)
}

/// Brent's method (inverse quadratic interpolation with bisection fallback).
///
/// Returns the root estimate together with the final bracket, which always
/// satisfies `f(lo)·f(hi) ≤ 0`.
pub fn find_root_with_bracket<F: Fn(f64) -> f64>(f: F, bracket: Bracket, tol: f64) -> Result<(f64, Bracket)> {
    if !(tol > 0.0) {
        return Err(Error::ParamDomain(format!(
            "root tolerance must be positive, got {tol}"
        )));
    }
    let (mut a, mut fa) = (bracket.lo, bracket.f_lo);
    let (mut b, mut fb) = (bracket.hi, bracket.f_hi);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if (fb > 0.0) == (fc > 0.0) && fb != 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = (0.5 * tol).max(2.0 * f64::EPSILON * b.abs());
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            let (lo, hi, f_lo, f_hi) = if b <= c { (b, c, fb, fc) } else { (c, b, fc, fb) };
            return Ok((b, Bracket { lo, hi, f_lo, f_hi }));
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                // inverse quadratic interpolation
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * xm * q - (tol1 * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonConvergence {
                what: "root finder",
                best: a,
                error_bound: (c - a).abs(),
            });
        }
    }
    Err(Error::NonConvergence {
        what: "root finder",
        best: b,
        error_bound: (c - b).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let f = |x: f64| x - 0.5;
        let x = find_root_bracketed(f, Bracket::new(f, 0.0, 1.0).unwrap(), 1e-12).unwrap();
        assert!((x - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn cubic_with_double_root_elsewhere() {
        // x^3 - 3x + 2 = (x - 1)^2 (x + 2)
        let f = |x: f64| x * x * x - 3.0 * x + 2.0;
        let factored = |x: f64| (x - 1.0).powi(2) * (x + 2.0);
        assert!((f(-2.0)).abs() < 1e-15 && (factored(-2.0)).abs() < 1e-15);
        let x = find_root_bracketed(f, Bracket::new(f, -3.0, -1.5).unwrap(), 1e-12).unwrap();
        assert!((x + 2.0).abs() <= 1e-12);
    }

    #[test]
    fn quadratic_root_matches_formula() {
        let f = |x: f64| x * x + 2.0 * x - 1.0;
        // (-2 - sqrt(4 + 4)) / 2
        let oracle = (-2.0 - 8f64.sqrt()) / 2.0;
        let x = find_root_bracketed(f, Bracket::new(f, -3.0, -2.0).unwrap(), 1e-13).unwrap();
        assert!((x - oracle).abs() <= 1e-12, "{x} vs {oracle}");
        assert!((oracle + 1.0 + 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bracket_without_sign_change() {
        let f = |x: f64| x * x + 1.0;
        assert!(matches!(Bracket::new(f, -1.0, 1.0), Err(Error::BracketInvalid { .. })));
        assert!(Bracket::new(|x| x, 1.0, 0.0).is_err());
    }

    #[test]
    fn final_bracket_is_tight_and_signed() {
        let f = |x: f64| x.cos() - x;
        for &tol in &[1e-3, 1e-8, 1e-12] {
            let (_, br) = find_root_with_bracket(f, Bracket::new(f, 0.0, 1.0).unwrap(), tol).unwrap();
            assert!(br.width() <= tol);
            assert!(f(br.lo) * f(br.hi) <= 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let f = |x: f64| x.exp() - 3.0;
        let br = Bracket::new(f, 0.0, 2.0).unwrap();
        let a = find_root_bracketed(f, br, 1e-10).unwrap();
        let b = find_root_bracketed(f, br, 1e-10).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
