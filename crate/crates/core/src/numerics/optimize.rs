use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Multistart configuration for [`maximize_2d`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub starts: usize,
    /// Simplex iterations per local run.
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub seed: u64,
}

impl Default for OptConfig {
    fn default() -> Self {
        OptConfig {
            starts: 25,
            max_iter: 4000,
            x_tol: 1e-9,
            f_tol: 1e-12,
            seed: 0,
        }
    }
}

impl OptConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.starts == 0 || self.max_iter == 0 {
            return Err(crate::Error::ParamDomain(
                "optimizer needs at least one start and one iteration".into(),
            ));
        }
        if !(self.x_tol > 0.0 && self.f_tol > 0.0) {
            return Err(crate::Error::ParamDomain(
                "optimizer tolerances must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub argmax: (f64, f64),
    pub value: f64,
    pub converged: bool,
    pub evals: usize,
}

/// Feasible region of the maximizer, given through an unconstrained chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// The whole plane; the chart is the identity.
    Plane,
    /// The open set `α < center < β`, charted by
    /// `α = center − e^u`, `β = center + e^v`.
    Straddle { center: f64 },
}

impl Region {
    pub fn to_point(&self, u: f64, v: f64) -> (f64, f64) {
        match *self {
            Region::Plane => (u, v),
            Region::Straddle { center } => (center - u.exp(), center + v.exp()),
        }
    }

    pub fn contains(&self, x: (f64, f64)) -> bool {
        match *self {
            Region::Plane => x.0.is_finite() && x.1.is_finite(),
            Region::Straddle { center } => x.0 < center && center < x.1,
        }
    }
}

const GRID: [f64; 5] = [-4.0, -2.0, 0.0, 2.0, 4.0];

/// Starting points in chart coordinates: the 5×5 grid, each jittered by a
/// seeded uniform offset; starts beyond the grid wrap around it with a wider
/// jitter.
fn start_points(cfg: &OptConfig) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    (0..cfg.starts)
        .map(|i| {
            let cell = i % 25;
            let spread = if i < 25 { 0.5 } else { 2.0 };
            [
                GRID[cell / 5] + rng.gen_range(-spread..spread),
                GRID[cell % 5] + rng.gen_range(-spread..spread),
            ]
        })
        .collect()
}

struct LocalRun {
    x: [f64; 2],
    value: f64,
    converged: bool,
    evals: usize,
}

/// Nelder–Mead on `−f`, restarted once from its own optimum.
fn local_search<F: Fn([f64; 2]) -> f64>(f: &F, x0: [f64; 2], cfg: &OptConfig) -> LocalRun {
    let first = nelder_mead(f, x0, 0.5, cfg);
    let second = nelder_mead(f, first.x, 0.05, cfg);
    let (x, value) = if second.value >= first.value {
        (second.x, second.value)
    } else {
        (first.x, first.value)
    };
    LocalRun {
        x,
        value,
        converged: second.converged,
        evals: first.evals + second.evals,
    }
}

fn nelder_mead<F: Fn([f64; 2]) -> f64>(f: &F, x0: [f64; 2], step: f64, cfg: &OptConfig) -> LocalRun {
    // minimize g = -f; non-finite values rank as worst
    let g = |x: [f64; 2]| {
        let v = f(x);
        if v.is_finite() {
            -v
        } else {
            f64::INFINITY
        }
    };
    let mut evals = 0usize;
    let mut eval = |x: [f64; 2]| {
        evals += 1;
        g(x)
    };
    let mut simplex = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut values = [eval(simplex[0]), eval(simplex[1]), eval(simplex[2])];
    let mut converged = false;

    for _ in 0..cfg.max_iter {
        // stable sort keeps the earlier vertex first on ties
        let mut order = [0usize, 1, 2];
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = [simplex[order[0]], simplex[order[1]], simplex[order[2]]];
        values = [values[order[0]], values[order[1]], values[order[2]]];

        let diameter = simplex[1..]
            .iter()
            .map(|p| (p[0] - simplex[0][0]).abs().max((p[1] - simplex[0][1]).abs()))
            .fold(0.0, f64::max);
        let spread = values[2] - values[0];
        if diameter <= cfg.x_tol && (spread <= cfg.f_tol || (values[0].is_infinite() && values[2].is_infinite())) {
            converged = values[0].is_finite();
            break;
        }

        let centroid = [
            0.5 * (simplex[0][0] + simplex[1][0]),
            0.5 * (simplex[0][1] + simplex[1][1]),
        ];
        let along = |t: f64| {
            [
                centroid[0] + t * (simplex[2][0] - centroid[0]),
                centroid[1] + t * (simplex[2][1] - centroid[1]),
            ]
        };
        let xr = along(-1.0);
        let fr = eval(xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = eval(xe);
            if fe < fr {
                simplex[2] = xe;
                values[2] = fe;
            } else {
                simplex[2] = xr;
                values[2] = fr;
            }
        } else if fr < values[1] {
            simplex[2] = xr;
            values[2] = fr;
        } else {
            let accepted = if fr < values[2] {
                let xc = along(-0.5);
                let fc = eval(xc);
                (fc <= fr).then_some((xc, fc))
            } else {
                let xc = along(0.5);
                let fc = eval(xc);
                (fc < values[2]).then_some((xc, fc))
            };
            if let Some((xc, fc)) = accepted {
                simplex[2] = xc;
                values[2] = fc;
            } else {
                for k in 1..3 {
                    simplex[k] = [
                        simplex[0][0] + 0.5 * (simplex[k][0] - simplex[0][0]),
                        simplex[0][1] + 0.5 * (simplex[k][1] - simplex[0][1]),
                    ];
                    values[k] = eval(simplex[k]);
                }
            }
        }
    }

    let best = (0..3).fold(0, |b, k| if values[k] < values[b] { k } else { b });
    LocalRun {
        x: simplex[best],
        value: -values[best],
        converged,
        evals,
    }
}

fn lexicographic_less(a: (f64, f64), b: (f64, f64)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Seeded multistart maximization of `f` over `region`.
///
/// Each start is refined by a derivative-free simplex search in the chart
/// coordinates of `region`. The best run wins; equal values are broken by
/// the lexicographically smaller argmax. If every evaluation is non-finite
/// the result carries `value = −∞` and `converged = false`.
pub fn maximize_2d<F>(f: F, region: Region, cfg: &OptConfig) -> OptResult
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let chart = |x: [f64; 2]| {
        let (a, b) = region.to_point(x[0], x[1]);
        if !region.contains((a, b)) {
            return f64::NAN;
        }
        f(a, b)
    };
    let runs: Vec<LocalRun> = start_points(cfg)
        .into_par_iter()
        .map(|x0| local_search(&chart, x0, cfg))
        .collect();

    let evals = runs.iter().map(|r| r.evals).sum();
    let mut best: Option<(f64, (f64, f64), bool)> = None;
    for run in &runs {
        if !run.value.is_finite() {
            continue;
        }
        let point = region.to_point(run.x[0], run.x[1]);
        let better = match best {
            None => true,
            Some((v, p, _)) => run.value > v || (run.value == v && lexicographic_less(point, p)),
        };
        if better {
            best = Some((run.value, point, run.converged));
        }
    }
    match best {
        Some((value, argmax, converged)) => OptResult {
            argmax,
            value,
            converged,
            evals,
        },
        None => OptResult {
            argmax: (f64::NAN, f64::NAN),
            value: f64::NEG_INFINITY,
            converged: false,
            evals,
        },
    }
}

/// Golden-section maximization of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, value)`; the endpoints are compared as well, so a
/// monotone `f` yields the better endpoint.
pub fn maximize_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, x_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > x_tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    for x in [lo, hi] {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}
