use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{integrate_adaptive, DEFAULT_QUAD_TOL};
use crate::{Error, Params, Result};

/// Exponent differences below this are treated as equal.
const EXPONENT_EPS: f64 = 1e-14;

/// Sums this many ulps below the summands are rounding residue.
const CANCEL_ULPS: f64 = 16.0;

/// One term `coeff · t^exponent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTerm {
    pub coeff: Complex64,
    pub exponent: f64,
}

impl PowerTerm {
    pub fn real(coeff: f64, exponent: f64) -> Self {
        PowerTerm {
            coeff: Complex64::new(coeff, 0.0),
            exponent,
        }
    }

    fn eval(&self, t: f64) -> Complex64 {
        self.coeff * t.powf(self.exponent)
    }
}

/// A sum of power terms on `[lo, hi)`; `hi` may be `+∞`. An empty term list
/// is the zero function.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerPiece {
    pub lo: f64,
    pub hi: f64,
    pub terms: Vec<PowerTerm>,
}

impl PowerPiece {
    pub fn new(lo: f64, hi: f64, terms: Vec<PowerTerm>) -> Self {
        let mut piece = PowerPiece {
            lo,
            hi,
            terms: Vec::new(),
        };
        for t in terms {
            piece.push_term(t);
        }
        piece
    }

    fn push_term(&mut self, term: PowerTerm) {
        if term.coeff == Complex64::new(0.0, 0.0) {
            return;
        }
        match self
            .terms
            .iter_mut()
            .find(|t| (t.exponent - term.exponent).abs() <= EXPONENT_EPS)
        {
            Some(t) => {
                let scale = t.coeff.norm().max(term.coeff.norm());
                t.coeff += term.coeff;
                // exact cancellation up to rounding, as in the tails of the
                // extremal family
                if t.coeff.norm() <= CANCEL_ULPS * f64::EPSILON * scale {
                    t.coeff = Complex64::new(0.0, 0.0);
                }
            }
            None => self.terms.push(term),
        }
        self.terms.retain(|t| t.coeff != Complex64::new(0.0, 0.0));
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }

    /// Membership of this piece in `L^p`: exponents above `−1/p` at the
    /// origin, and `p·exponent < −1` on an unbounded piece.
    pub fn check_lp(&self, p: f64) -> Result<()> {
        for term in &self.terms {
            if self.lo == 0.0 && !(term.exponent > -1.0 / p) {
                return Err(Error::Divergent(format!(
                    "t^{} on [0, {}) is not p-integrable at 0 for p = {p}",
                    term.exponent, self.hi
                )));
            }
            if self.hi.is_infinite() && !(p * term.exponent < -1.0) {
                return Err(Error::Divergent(format!(
                    "t^{} on [{}, inf) is not p-integrable at infinity for p = {p}",
                    term.exponent, self.lo
                )));
            }
        }
        Ok(())
    }
}

/// A function on `[0, ∞)` given by contiguous [`PowerPiece`]s, zero outside
/// their union.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireFn", into = "WireFn")]
pub struct PiecewisePowerFn {
    pieces: Vec<PowerPiece>,
}

impl PiecewisePowerFn {
    /// Sorts the pieces, fills gaps between them with zero pieces and rejects
    /// overlaps or malformed intervals.
    pub fn new(mut pieces: Vec<PowerPiece>) -> Result<Self> {
        for piece in &pieces {
            if !(piece.lo >= 0.0) || !piece.lo.is_finite() || !(piece.lo < piece.hi) || piece.hi.is_nan() {
                return Err(Error::InvalidFunction(format!(
                    "interval [{}, {}) must satisfy 0 <= lo < hi",
                    piece.lo, piece.hi
                )));
            }
            if piece
                .terms
                .iter()
                .any(|t| !t.exponent.is_finite() || !t.coeff.re.is_finite() || !t.coeff.im.is_finite())
            {
                return Err(Error::InvalidFunction("non-finite coefficient or exponent".into()));
            }
        }
        pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut out: Vec<PowerPiece> = Vec::with_capacity(pieces.len());
        for piece in pieces {
            if let Some(last) = out.last() {
                if piece.lo < last.hi {
                    return Err(Error::InvalidFunction(format!(
                        "pieces [{}, {}) and [{}, {}) overlap",
                        last.lo, last.hi, piece.lo, piece.hi
                    )));
                }
                if piece.lo > last.hi {
                    out.push(PowerPiece::new(last.hi, piece.lo, Vec::new()));
                }
            }
            out.push(PowerPiece::new(piece.lo, piece.hi, piece.terms));
        }
        Ok(Self::normalized(out))
    }

    /// Drops zero pieces at either end and fuses runs of zero pieces, so
    /// that equal functions compare equal.
    fn normalized(pieces: Vec<PowerPiece>) -> Self {
        let mut out: Vec<PowerPiece> = Vec::with_capacity(pieces.len());
        for piece in pieces {
            match out.last_mut() {
                Some(last) if last.terms.is_empty() && piece.terms.is_empty() => last.hi = piece.hi,
                None if piece.terms.is_empty() => {}
                _ => out.push(piece),
            }
        }
        while out.last().is_some_and(|p| p.terms.is_empty()) {
            out.pop();
        }
        PiecewisePowerFn { pieces: out }
    }

    /// `coeff · t^exponent` on `[lo, hi)`.
    pub fn single(lo: f64, hi: f64, coeff: f64, exponent: f64) -> Result<Self> {
        Self::new(vec![PowerPiece::new(lo, hi, vec![PowerTerm::real(coeff, exponent)])])
    }

    /// `Σ coeffs[j] t^j` on `[lo, hi)`.
    pub fn polynomial(lo: f64, hi: f64, coeffs: &[f64]) -> Result<Self> {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(j, &c)| PowerTerm::real(c, j as f64))
            .collect();
        Self::new(vec![PowerPiece::new(lo, hi, terms)])
    }

    pub fn zero() -> Self {
        PiecewisePowerFn { pieces: Vec::new() }
    }

    pub fn pieces(&self) -> &[PowerPiece] {
        &self.pieces
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.pieces
            .iter()
            .find(|piece| piece.lo <= t && t < piece.hi)
            .map_or(Complex64::new(0.0, 0.0), |piece| piece.eval(t))
    }

    /// Left limit at `t`, i.e. the value of the piece whose interval is
    /// `(.., t]` when `t` is a breakpoint.
    pub fn eval_left(&self, t: f64) -> Complex64 {
        self.pieces
            .iter()
            .find(|piece| piece.lo < t && t <= piece.hi)
            .map_or(Complex64::new(0.0, 0.0), |piece| piece.eval(t))
    }

    pub fn is_real(&self) -> bool {
        self.pieces.iter().all(|p| p.terms.iter().all(|t| t.coeff.im == 0.0))
    }

    pub fn check_lp(&self, p: f64) -> Result<()> {
        self.pieces.iter().try_for_each(|piece| piece.check_lp(p))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut points: Vec<f64> = self.pieces.iter().flat_map(|p| [p.lo, p.hi]).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    /// The same function split at every point of `points` inside its support,
    /// extended by zero pieces to cover `[points.first, points.last)`.
    fn refine(&self, points: &[f64]) -> Vec<PowerPiece> {
        points
            .windows(2)
            .map(|w| {
                let (lo, hi) = (w[0], w[1]);
                let terms = self
                    .pieces
                    .iter()
                    .find(|p| p.lo <= lo && hi <= p.hi)
                    .map_or_else(Vec::new, |p| p.terms.clone());
                PowerPiece::new(lo, hi, terms)
            })
            .collect()
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: Complex64, other: &Self, b: Complex64) -> Self {
        let mut points = self.breakpoints();
        points.extend(other.breakpoints());
        points.sort_by(f64::total_cmp);
        points.dedup();
        let left = self.refine(&points);
        let right = other.refine(&points);
        let pieces = left
            .into_iter()
            .zip(right)
            .map(|(l, r)| {
                let terms = l
                    .terms
                    .iter()
                    .map(|t| PowerTerm {
                        coeff: a * t.coeff,
                        exponent: t.exponent,
                    })
                    .chain(r.terms.iter().map(|t| PowerTerm {
                        coeff: b * t.coeff,
                        exponent: t.exponent,
                    }))
                    .collect();
                PowerPiece::new(l.lo, l.hi, terms)
            })
            .collect();
        Self::normalized(pieces)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let terms = p
                    .terms
                    .iter()
                    .map(|t| PowerTerm {
                        coeff: c * t.coeff,
                        exponent: t.exponent,
                    })
                    .collect();
                PowerPiece::new(p.lo, p.hi, terms)
            })
            .collect();
        Self::normalized(pieces)
    }

    /// `self − λ·other` for real `λ`.
    pub fn sub_scaled(&self, lambda: f64, other: &Self) -> Self {
        self.linear_combination(Complex64::new(1.0, 0.0), other, Complex64::new(-lambda, 0.0))
    }

    /// Restriction to `[0, t_max)`.
    pub fn truncate(&self, t_max: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .filter(|p| p.lo < t_max)
            .map(|p| PowerPiece::new(p.lo, p.hi.min(t_max), p.terms.clone()))
            .collect();
        Self::normalized(pieces)
    }
}

/// Closed-form image `H_m f`.
///
/// A term `c·t^a` on `[l, u)` contributes, with `k = a + m/2 + 1`,
/// `(c/k)·t^a − (c·l^k/k)·t^(−1−m/2)` on `[l, u)` and the tail
/// `c·(u^k − l^k)/k · t^(−1−m/2)` on `[u, ∞)`. The logarithmic case `k = 0`
/// is rejected, as is `k < 0` on a piece touching the origin.
pub fn apply_hm_closed(f: &PiecewisePowerFn, params: &Params) -> Result<PiecewisePowerFn> {
    params.validate()?;
    let half = params.m / 2.0;
    let tail_exponent = -1.0 - half;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut pieces = Vec::with_capacity(f.pieces.len() + 1);

    for piece in &f.pieces {
        let (l, u) = (piece.lo, piece.hi);
        let mut terms = Vec::with_capacity(2 * piece.terms.len() + 1);
        if tail != Complex64::new(0.0, 0.0) {
            terms.push(PowerTerm {
                coeff: tail,
                exponent: tail_exponent,
            });
        }
        let mut piece_tail = Complex64::new(0.0, 0.0);
        for term in &piece.terms {
            let k = term.exponent + half + 1.0;
            if k.abs() <= EXPONENT_EPS {
                return Err(Error::ExponentDomain {
                    exponent: term.exponent,
                    reason: "a + m/2 = -1 gives a logarithmic image",
                });
            }
            if l == 0.0 && k < 0.0 {
                return Err(Error::ExponentDomain {
                    exponent: term.exponent,
                    reason: "a + m/2 < -1 is not integrable against s^(m/2) at 0",
                });
            }
            let c = term.coeff;
            terms.push(PowerTerm {
                coeff: c / k,
                exponent: term.exponent,
            });
            let l_pow = if l == 0.0 { 0.0 } else { l.powf(k) };
            if l > 0.0 {
                terms.push(PowerTerm {
                    coeff: -c * l_pow / k,
                    exponent: tail_exponent,
                });
            }
            if u.is_finite() {
                piece_tail += c * (u.powf(k) - l_pow) / k;
            }
        }
        pieces.push(PowerPiece::new(l, u, terms));
        tail += piece_tail;
    }
    if let Some(last) = f.pieces.last() {
        if last.hi.is_finite() && tail != Complex64::new(0.0, 0.0) {
            pieces.push(PowerPiece::new(
                last.hi,
                f64::INFINITY,
                vec![PowerTerm {
                    coeff: tail,
                    exponent: tail_exponent,
                }],
            ));
        }
    }
    PiecewisePowerFn::new(pieces)
}

/// `∫_l^u t^e dt` for `0 ≤ l < u ≤ ∞`, or an error if it diverges.
fn power_integral(l: f64, u: f64, e: f64) -> Result<f64> {
    if u.is_infinite() {
        if !(e < 0.0) || l == 0.0 {
            return Err(Error::Divergent(format!("t^{} on [{l}, inf)", e - 1.0)));
        }
        return Ok(-l.powf(e) / e);
    }
    if l == 0.0 {
        if !(e > 0.0) {
            return Err(Error::Divergent(format!("t^{} on [0, {u})", e - 1.0)));
        }
        return Ok(u.powf(e) / e);
    }
    let log_ratio = (u / l).ln();
    if e.abs() <= EXPONENT_EPS {
        return Ok(log_ratio);
    }
    Ok(l.powf(e) * (e * log_ratio).exp_m1() / e)
}

fn piece_lp_pow(piece: &PowerPiece, p: f64) -> Result<f64> {
    match piece.terms.as_slice() {
        [] => Ok(0.0),
        [term] => Ok(term.coeff.norm().powf(p) * power_integral(piece.lo, piece.hi, p * term.exponent + 1.0)?),
        _ => {
            piece.check_lp(p)?;
            let integrand = |t: f64| piece.eval(t).norm().powf(p);
            let (l, u) = (piece.lo, piece.hi);
            if u.is_finite() {
                return integrate_adaptive(integrand, l, u, DEFAULT_QUAD_TOL);
            }
            // split off [0, 1) when the piece starts at the origin, then map
            // [s, ∞) onto (0, 1] through t = s/x
            let (head, s) = if l == 0.0 {
                (integrate_adaptive(integrand, 0.0, 1.0, DEFAULT_QUAD_TOL)?, 1.0)
            } else {
                (0.0, l)
            };
            let mapped = |x: f64| integrand(s / x) * s / (x * x);
            Ok(head + integrate_adaptive(mapped, 0.0, 1.0, DEFAULT_QUAD_TOL)?)
        }
    }
}

/// `‖f‖_p^p` over `(0, ∞)`: exact on single-term pieces, adaptive quadrature
/// on pieces carrying several exponents.
pub fn lp_norm_pow_closed(f: &PiecewisePowerFn, p: f64) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::ParamDomain(format!("p must exceed 1, got {p}")));
    }
    f.pieces.iter().map(|piece| piece_lp_pow(piece, p)).sum()
}

pub fn lp_norm_closed(f: &PiecewisePowerFn, p: f64) -> Result<f64> {
    Ok(lp_norm_pow_closed(f, p)?.powf(1.0 / p))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum WireBound {
    Finite(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WirePiece {
    coeff_re: f64,
    coeff_im: f64,
    exponent: f64,
    lo: f64,
    hi: WireBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WireFn {
    pieces: Vec<WirePiece>,
}

impl From<PiecewisePowerFn> for WireFn {
    fn from(f: PiecewisePowerFn) -> Self {
        let pieces = f
            .pieces
            .iter()
            .flat_map(|piece| {
                piece.terms.iter().map(move |t| WirePiece {
                    coeff_re: t.coeff.re,
                    coeff_im: t.coeff.im,
                    exponent: t.exponent,
                    lo: piece.lo,
                    hi: if piece.hi.is_infinite() {
                        WireBound::Named("inf".into())
                    } else {
                        WireBound::Finite(piece.hi)
                    },
                })
            })
            .collect();
        WireFn { pieces }
    }
}

impl TryFrom<WireFn> for PiecewisePowerFn {
    type Error = Error;

    /// Terms sharing an interval are summed into one piece.
    fn try_from(wire: WireFn) -> Result<Self> {
        let mut pieces: Vec<PowerPiece> = Vec::new();
        for w in wire.pieces {
            let hi = match w.hi {
                WireBound::Finite(x) => x,
                WireBound::Named(ref s) if s == "inf" => f64::INFINITY,
                WireBound::Named(s) => {
                    return Err(Error::InvalidFunction(format!(
                        "hi must be a number or \"inf\", got {s:?}"
                    )))
                }
            };
            let term = PowerTerm {
                coeff: Complex64::new(w.coeff_re, w.coeff_im),
                exponent: w.exponent,
            };
            match pieces.iter_mut().find(|p| p.lo == w.lo && p.hi == hi) {
                Some(p) => p.push_term(term),
                None => pieces.push(PowerPiece::new(w.lo, hi, vec![term])),
            }
        }
        PiecewisePowerFn::new(pieces)
    }
}
