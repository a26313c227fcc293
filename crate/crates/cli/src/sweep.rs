//! Parameter sweeps over a `(p, m, λ)` grid.

use std::time::Instant;

use hardylab_core::constants::boundary_value;
use hardylab_core::{sharp_constant, Branch, Error, OptConfig, Params};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{round12, CliError, CliResult};

/// Values for one axis: an explicit list or `steps` evenly spaced points
/// from `lo` to `hi` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisRange {
    List(Vec<f64>),
    Span { lo: f64, hi: f64, steps: usize },
}

impl AxisRange {
    pub fn values(&self, name: &str) -> CliResult<Vec<f64>> {
        let values = match *self {
            AxisRange::List(ref v) => v.clone(),
            AxisRange::Span { lo, hi, steps } => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    return Err(CliError::Usage(format!(
                        "{name}: need finite lo <= hi, got [{lo}, {hi}]"
                    )));
                }
                match steps {
                    0 => Vec::new(),
                    1 => vec![lo],
                    _ => (0..steps)
                        .map(|i| {
                            if i + 1 == steps {
                                hi
                            } else {
                                lo + (hi - lo) * i as f64 / (steps - 1) as f64
                            }
                        })
                        .collect(),
                }
            }
        };
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Usage(format!("{name}: non-finite value {bad}")));
        }
        Ok(values)
    }
}

/// Optimizer settings that replace the command-line ones for every cell.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptOverrides {
    pub starts: Option<usize>,
    pub max_iter: Option<usize>,
    pub x_tol: Option<f64>,
    pub f_tol: Option<f64>,
    pub seed: Option<u64>,
}

impl OptOverrides {
    pub fn apply(&self, base: &OptConfig) -> OptConfig {
        OptConfig {
            starts: self.starts.unwrap_or(base.starts),
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            x_tol: self.x_tol.unwrap_or(base.x_tol),
            f_tol: self.f_tol.unwrap_or(base.f_tol),
            seed: self.seed.unwrap_or(base.seed),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub p: AxisRange,
    pub m: AxisRange,
    pub lambda: AxisRange,
    #[serde(default)]
    pub opt: OptOverrides,
    #[serde(default)]
    pub format: OutputFormat,
}

impl SweepSpec {
    /// Grid cells in lexicographic `(p, m, λ)` order.
    pub fn cells(&self) -> CliResult<Vec<(f64, f64, f64)>> {
        let sorted = |mut v: Vec<f64>| {
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let ps = sorted(self.p.values("p")?);
        let ms = sorted(self.m.values("m")?);
        let lambdas = sorted(self.lambda.values("lambda")?);
        let mut cells = Vec::with_capacity(ps.len() * ms.len() * lambdas.len());
        for &p in &ps {
            for &m in &ms {
                for &lambda in &lambdas {
                    cells.push((p, m, lambda));
                }
            }
        }
        Ok(cells)
    }
}

pub const COLUMNS: [&str; 14] = [
    "p",
    "m",
    "lambda",
    "gamma",
    "C_pow_p",
    "C",
    "branch",
    "alpha_star",
    "beta_star",
    "conjectured",
    "boundary_value",
    "wall_ms",
    "skipped_reason",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub m: f64,
    pub lambda: f64,
    pub gamma: Option<f64>,
    #[serde(rename = "C_pow_p")]
    pub c_pow_p: Option<f64>,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    pub branch: Option<Branch>,
    pub alpha_star: Option<f64>,
    pub beta_star: Option<f64>,
    pub conjectured: Option<f64>,
    pub boundary_value: Option<f64>,
    pub wall_ms: f64,
    pub skipped_reason: Option<String>,
    pub seed: u64,
}

fn run_cell(index: usize, (p, m, lambda): (f64, f64, f64), base: &OptConfig) -> SweepRow {
    let seed = base.seed.wrapping_add(index as u64);
    let cfg = OptConfig { seed, ..*base };
    let mut row = SweepRow {
        p,
        m,
        lambda,
        gamma: None,
        c_pow_p: None,
        c: None,
        branch: None,
        alpha_star: None,
        beta_star: None,
        conjectured: None,
        boundary_value: None,
        wall_ms: 0.0,
        skipped_reason: None,
        seed,
    };
    let params = match Params::new(p, m, lambda) {
        Ok(params) => params,
        Err(e) => {
            row.skipped_reason = Some(e.to_string());
            return row;
        }
    };
    row.gamma = Some(round12(params.gamma()));
    row.conjectured = Some(round12(lambda / params.gamma() - 1.0));
    row.boundary_value = Some(round12(boundary_value(&params)));
    let start = Instant::now();
    let result = sharp_constant(&params, &cfg);
    row.wall_ms = round12(start.elapsed().as_secs_f64() * 1e3);
    match result {
        Ok(r) => {
            row.c_pow_p = Some(round12(r.c_pow_p));
            row.c = Some(round12(r.c));
            row.branch = Some(r.branch);
            row.alpha_star = r.argmax.map(|a| round12(a.0));
            row.beta_star = r.argmax.map(|a| round12(a.1));
        }
        Err(Error::OptimizerNonConvergence(best)) => {
            row.c_pow_p = Some(round12(best.c_pow_p));
            row.c = Some(round12(best.c));
            row.skipped_reason = Some("optimizer did not converge".into());
        }
        Err(e) => row.skipped_reason = Some(e.to_string()),
    }
    row
}

/// Runs every cell in parallel. Cell `i` uses seed `base.seed + i`; rows come
/// back in grid order.
pub fn run_sweep(spec: &SweepSpec, base: &OptConfig) -> CliResult<Vec<SweepRow>> {
    let cfg = spec.opt.apply(base);
    cfg.validate()?;
    let cells = spec.cells()?;
    Ok(cells
        .par_iter()
        .enumerate()
        .map(|(i, &cell)| run_cell(i, cell, &cfg))
        .collect())
}

/// Renders rows as CSV (header always present) or as a JSON array.
pub fn render_rows(rows: &[SweepRow], format: OutputFormat) -> CliResult<String> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for row in rows {
                w.serialize(row)?;
            }
            let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
        }
        OutputFormat::Json => Ok(serde_json::to_string_pretty(rows)? + "\n"),
    }
}

/// Reads rows back from either format.
pub fn read_rows(text: &str, format: OutputFormat) -> CliResult<Vec<SweepRow>> {
    match format {
        OutputFormat::Csv => {
            let mut r = csv::Reader::from_reader(text.as_bytes());
            Ok(r.deserialize().collect::<Result<_, _>>()?)
        }
        OutputFormat::Json => Ok(serde_json::from_str(text)?),
    }
}
