use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Params, Result};

/// Below this relative cell width the second moment is summed as a series.
const SERIES_CUTOFF: f64 = 0.05;

/// Values on a strictly increasing grid with `grid[0] ≥ 0`, read as the
/// piecewise linear interpolant on `[grid[0], grid[last]]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WireSampled", into = "WireSampled")]
pub struct SampledFn {
    grid: Vec<f64>,
    values: Vec<Complex64>,
}

impl SampledFn {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if grid.is_empty() || grid.len() != values.len() {
            return Err(Error::InvalidFunction(format!(
                "grid ({}) and values ({}) must be non-empty and of equal length",
                grid.len(),
                values.len()
            )));
        }
        if !(grid[0] >= 0.0) {
            return Err(Error::InvalidFunction(format!(
                "grid must start at t >= 0, got {}",
                grid[0]
            )));
        }
        if grid.iter().any(|t| !t.is_finite()) || values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidFunction("grid and values must be finite".into()));
        }
        if let Some(w) = grid.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidFunction(format!(
                "grid must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(SampledFn { grid, values })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect();
        Self::new(grid, values)
    }

    /// `n` equally spaced nodes on `[0, t_max]`.
    pub fn uniform_grid(t_max: f64, n: usize) -> Vec<f64> {
        let h = t_max / (n - 1) as f64;
        (0..n).map(|i| if i + 1 == n { t_max } else { i as f64 * h }).collect()
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Trapezoidal `∫ |f|^p` over the grid span.
    pub fn lp_norm_pow(&self, p: f64) -> f64 {
        let powered: Vec<f64> = self.values.iter().map(|v| v.norm().powf(p)).collect();
        self.grid
            .windows(2)
            .zip(powered.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        self.lp_norm_pow(p).powf(1.0 / p)
    }

    /// `self − λ·other` on a shared grid.
    pub fn sub_scaled(&self, lambda: f64, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidFunction("grids differ".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a - lambda * b)
            .collect();
        Ok(SampledFn {
            grid: self.grid.clone(),
            values,
        })
    }
}

/// `∫_0^r (1+x)^mu · x dx`.
fn second_moment_unit(mu: f64, r: f64) -> f64 {
    if r < SERIES_CUTOFF {
        // Σ_k binom(mu, k) r^(k+2)/(k+2)
        let mut binom = 1.0;
        let mut r_pow = r * r;
        let mut sum = 0.0;
        for k in 0..60 {
            let term = binom * r_pow / (k as f64 + 2.0);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            binom *= (mu - k as f64) / (k as f64 + 1.0);
            r_pow *= r;
        }
        sum
    } else {
        let log1p = r.ln_1p();
        ((mu + 2.0) * log1p).exp_m1() / (mu + 2.0) - ((mu + 1.0) * log1p).exp_m1() / (mu + 1.0)
    }
}

/// `(∫_a^b s^mu ds, ∫_a^b s^mu (s − a) ds)` for `mu > −1`.
fn cell_moments(a: f64, b: f64, mu: f64) -> (f64, f64) {
    if a == 0.0 {
        return (b.powf(mu + 1.0) / (mu + 1.0), b.powf(mu + 2.0) / (mu + 2.0));
    }
    let r = (b - a) / a;
    let zeroth = a.powf(mu + 1.0) * ((mu + 1.0) * r.ln_1p()).exp_m1() / (mu + 1.0);
    let first = a.powf(mu + 2.0) * second_moment_unit(mu, r);
    (zeroth, first)
}

/// `H_m` of the piecewise linear interpolant, sampled on the same grid.
///
/// The interpolant is taken to vanish on `[0, grid[0])`. At `t = 0` the
/// limit `f(0)/(1 + m/2)` is returned.
pub fn apply_hm_sampled(f: &SampledFn, params: &Params) -> Result<SampledFn> {
    params.validate()?;
    let mu = params.m / 2.0;
    let mut running = Complex64::new(0.0, 0.0);
    let mut out = Vec::with_capacity(f.values.len());
    for (i, &t) in f.grid.iter().enumerate() {
        if i > 0 {
            let (a, b) = (f.grid[i - 1], t);
            let (va, vb) = (f.values[i - 1], f.values[i]);
            let (m0, m1) = cell_moments(a, b, mu);
            running += va * m0 + (vb - va) / (b - a) * m1;
        }
        out.push(if t == 0.0 {
            f.values[0] / (1.0 + mu)
        } else {
            running / t.powf(1.0 + mu)
        });
    }
    SampledFn::new(f.grid.clone(), out)
}

/// Outcome of testing `‖f − λH_m f‖ ≤ C‖f‖` on the grid span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
}

/// Checks the operator bound for one sampled function; `holds` allows a
/// relative slack of `tol`.
pub fn verify_complex_bound(f: &SampledFn, params: &Params, c: f64, tol: f64) -> Result<ComplexBoundReport> {
    let image = apply_hm_sampled(f, params)?;
    let residual = f.sub_scaled(params.lambda, &image)?;
    let lhs = residual.lp_norm(params.p);
    let norm = f.lp_norm(params.p);
    let rhs = c * norm;
    let ratio = if norm > 0.0 { lhs / norm } else { 0.0 };
    Ok(ComplexBoundReport {
        lhs,
        rhs,
        ratio,
        holds: lhs <= rhs * (1.0 + tol),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WireSampled {
    grid: Vec<f64>,
    values_re: Vec<f64>,
    #[serde(default)]
    values_im: Option<Vec<f64>>,
}

impl From<SampledFn> for WireSampled {
    fn from(f: SampledFn) -> Self {
        WireSampled {
            values_re: f.values.iter().map(|v| v.re).collect(),
            values_im: Some(f.values.iter().map(|v| v.im).collect()),
            grid: f.grid,
        }
    }
}

impl TryFrom<WireSampled> for SampledFn {
    type Error = Error;

    fn try_from(wire: WireSampled) -> Result<Self> {
        let im = wire.values_im.unwrap_or_else(|| vec![0.0; wire.values_re.len()]);
        if im.len() != wire.values_re.len() {
            return Err(Error::InvalidFunction(
                "values_re and values_im differ in length".into(),
            ));
        }
        let values = wire
            .values_re
            .iter()
            .zip(&im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        SampledFn::new(wire.grid, values)
    }
}
