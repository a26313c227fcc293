use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hardylab_cli::records::{
    ApplyOp, ApplyRecord, ConstantRecord, FunctionData, FuzzSummary, MajorizeRecord, MartingaleRecord, RatioRecord,
    SharpnessRecord,
};
use hardylab_cli::sweep::{render_rows, run_sweep, SweepRow, SweepSpec};
use hardylab_cli::{read_file, round12, write_file, CliError, CliResult};
use hardylab_core::bellman::{
    build_special_fn, check_burkholder_conditions, check_majorization, BurkholderGrid, SpecialBranch,
};
use hardylab_core::hardy::{apply_hm_closed, apply_hm_sampled, lp_norm_closed, ratio_extremal};
use hardylab_core::martingale::{
    extremal_ratio_exact, fuzz_maximal, limit_ratio, ExtremalMartingale, MaximalVariant, TreeShape,
};
use hardylab_core::{c_ratio, cp_pow, sharp_constant, Branch, OptConfig, Params};
use serde::Serialize;

/// Sharp constants for I − λH_m on weighted L^p, with the Bellman and
/// martingale checks behind them.
#[derive(Parser, Debug)]
#[command(name = "hardylab", version)]
struct Cli {
    /// Optimizer function tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Number of optimizer starts.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Simplex iterations per optimizer start.
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct ParamArgs {
    #[arg(long, allow_hyphen_values = true)]
    p: f64,
    #[arg(long, allow_hyphen_values = true)]
    m: f64,
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
}

impl ParamArgs {
    fn params(self) -> CliResult<Params> {
        Ok(Params::new(self.p, self.m, self.lambda)?)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sharp constant C_{p,m,λ}.
    Constant(ParamArgs),
    /// c^p and the extremal-family ratio at one (α, β).
    Ratio {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, allow_hyphen_values = true)]
        beta: f64,
    },
    /// Compares the constant with the extremal family at its witness point.
    Sharpness(ParamArgs),
    /// Certifies the special function on a grid.
    Majorize {
        #[command(flatten)]
        params: ParamArgs,
        /// Use this C instead of the sharp one.
        #[arg(long)]
        force_c: Option<f64>,
        /// Grid points per slice.
        #[arg(long, default_value_t = 1_000_000)]
        points: usize,
        /// Half-width of the x range.
        #[arg(long, default_value_t = 100.0)]
        range: f64,
        #[arg(long, default_value_t = 1e-9)]
        check_tol: f64,
    },
    /// Extremal martingale ratio and, optionally, a random-tree fuzz run.
    Martingale {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        /// Number of random trees to check.
        #[arg(long)]
        fuzz: Option<u64>,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        max_branch: usize,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
        /// Constant to test (default: the sharp one).
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_enum, default_value_t = Variant::Martingale)]
        variant: Variant,
        #[arg(long, default_value_t = 1e-12)]
        fuzz_tol: f64,
        /// Write per-tree rows here.
        #[arg(long)]
        fuzz_csv: Option<PathBuf>,
    },
    /// Runs a parameter grid from a JSON spec file.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Applies H_m or I − λH_m to a serialized function.
    Apply {
        #[arg(long)]
        input: PathBuf,
        /// Image file; without it the image is embedded in the record.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ApplyOp::Hm)]
        op: ApplyOp,
        #[arg(long)]
        p: f64,
        #[arg(long, allow_hyphen_values = true)]
        m: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
        lambda: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Variant {
    Martingale,
    AbsSubmartingale,
}

impl From<Variant> for MaximalVariant {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Martingale => MaximalVariant::Martingale,
            Variant::AbsSubmartingale => MaximalVariant::AbsSubmartingale,
        }
    }
}

fn print<T: Serialize>(record: &T) -> CliResult<()> {
    println!("{}", serde_json::to_string_pretty(record)?);
    Ok(())
}

fn opt_config(cli: &Cli) -> OptConfig {
    let mut cfg = OptConfig {
        seed: cli.seed,
        ..OptConfig::default()
    };
    if let Some(tol) = cli.tol {
        cfg.f_tol = tol;
    }
    if let Some(starts) = cli.starts {
        cfg.starts = starts;
    }
    if let Some(max_iter) = cli.max_iter {
        cfg.max_iter = max_iter;
    }
    cfg
}

fn cmd_constant(args: ParamArgs, cfg: &OptConfig) -> CliResult<()> {
    let params = args.params()?;
    let result = sharp_constant(&params, cfg)?;
    print(&ConstantRecord::new(&params, &result))
}

fn cmd_ratio(args: ParamArgs, alpha: f64, beta: f64) -> CliResult<()> {
    let params = args.params()?;
    print(&RatioRecord {
        p: params.p,
        m: params.m,
        lambda: params.lambda,
        gamma: round12(params.gamma()),
        alpha,
        beta,
        c_ratio: round12(c_ratio(&params, alpha, beta)?),
        ratio_extremal: round12(ratio_extremal(&params, alpha, beta)?),
    })
}

const SHARPNESS_GAP: f64 = 1e-6;
const NEIGHBOUR_STEP: f64 = 1e-3;

fn cmd_sharpness(args: ParamArgs, cfg: &OptConfig) -> CliResult<()> {
    let params = args.params()?;
    let result = sharp_constant(&params, cfg)?;
    let gamma = params.gamma();
    let (witness, source) = match (result.argmax, result.alpha_p) {
        (Some(w), _) => (w, "argmax"),
        (None, Some(alpha_p)) if alpha_p < gamma => ((alpha_p, 1.0), "alpha_p"),
        _ => ((gamma - 1.0, gamma + 1.0), "probe"),
    };
    let at_witness = ratio_extremal(&params, witness.0, witness.1)?;
    let mut near_max = f64::NEG_INFINITY;
    for da in [-1.0, 0.0, 1.0] {
        for db in [-1.0, 0.0, 1.0] {
            let (a, b) = (witness.0 + da * NEIGHBOUR_STEP, witness.1 + db * NEIGHBOUR_STEP);
            if (da, db) == (0.0, 0.0) || !(a < gamma && gamma < b) {
                continue;
            }
            near_max = near_max.max(ratio_extremal(&params, a, b)?);
        }
    }
    let gap = (result.c_pow_p - at_witness).abs();
    let gap_checked = result.branch == Branch::InteriorOptimum;
    print(&SharpnessRecord {
        p: params.p,
        m: params.m,
        lambda: params.lambda,
        c_pow_p: round12(result.c_pow_p),
        branch: result.branch,
        witness: [round12(witness.0), round12(witness.1)],
        witness_source: source.into(),
        ratio_at_witness: round12(at_witness),
        gap: round12(gap),
        near_max: round12(near_max),
        gap_checked,
    })?;
    if gap_checked && gap > SHARPNESS_GAP {
        return Err(CliError::CheckFailed(format!("gap {gap:e} exceeds {SHARPNESS_GAP:e}")));
    }
    Ok(())
}

fn cmd_majorize(
    args: ParamArgs,
    cfg: &OptConfig,
    force_c: Option<f64>,
    points: usize,
    range: f64,
    check_tol: f64,
) -> CliResult<()> {
    let params = args.params()?;
    if !(range > 0.0 && range.is_finite()) || points < 2 {
        return Err(CliError::Usage("need --range > 0 and --points >= 2".into()));
    }
    let mut spec = build_special_fn(&params, cfg)?;
    if let Some(c) = force_c {
        if !(c > 0.0 && c.is_finite()) {
            return Err(CliError::Usage(format!("--force-c must be positive, got {c}")));
        }
        spec = spec.with_c_pow_p(c.powf(params.p));
    }
    let majorization = check_majorization(&spec, (-range, range), points, check_tol);
    let burkholder = match spec.branch {
        SpecialBranch::MartM0L1 => Some(check_burkholder_conditions(
            &spec,
            &BurkholderGrid::default(),
            check_tol,
        )?),
        _ => None,
    };
    let record = MajorizeRecord::new(&spec, force_c.is_some(), &majorization, burkholder.as_ref());
    print(&record)?;
    if !record.passed {
        return Err(CliError::CheckFailed(
            match (majorization.witness_x, majorization.witness_y) {
                (Some(x), Some(y)) if !majorization.passed => format!("U < V at (x, y) = ({x}, {y})"),
                _ => "Burkholder conditions violated".into(),
            },
        ));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_martingale(
    alpha: f64,
    s: f64,
    n: u64,
    p: f64,
    fuzz: Option<u64>,
    shape: TreeShape,
    c: Option<f64>,
    variant: Variant,
    fuzz_tol: f64,
    fuzz_csv: Option<PathBuf>,
    seed: u64,
) -> CliResult<()> {
    let em = ExtremalMartingale::new(alpha, s, n)?;
    let exact = extremal_ratio_exact(&em, p)?;
    let limit = limit_ratio(alpha, p)?;
    let mut record = MartingaleRecord {
        alpha,
        s,
        n,
        p,
        beta: round12(em.beta),
        growth_condition: em.growth_condition(p),
        exact_ratio: round12(exact),
        limit_ratio: round12(limit),
        gap: round12((exact - limit).abs()),
        fuzz: None,
    };
    if let Some(trees) = fuzz {
        let c = match c {
            Some(c) => c,
            None => cp_pow(p)?.powf(1.0 / p),
        };
        let rows = fuzz_maximal(seed..seed.saturating_add(trees), &shape, p, c, variant.into(), fuzz_tol)?;
        if let Some(path) = fuzz_csv {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row)?;
            }
            let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
            write_file(&path, &String::from_utf8_lossy(&bytes))?;
        }
        record.fuzz = Some(FuzzSummary {
            trees,
            violations: rows.iter().filter(|r| !r.passed).count() as u64,
            max_ratio: round12(rows.iter().map(|r| r.ratio).fold(0.0, f64::max)),
            constant: round12(c),
            depth: shape.depth,
            max_branch: shape.max_branch,
            value_scale: shape.value_scale,
            first_failure: rows.iter().find(|r| !r.passed).map(|r| r.seed),
        });
    }
    print(&record)?;
    if let Some(FuzzSummary {
        violations,
        first_failure: Some(seed),
        ..
    }) = record.fuzz
    {
        return Err(CliError::CheckFailed(format!(
            "{violations} trees violate the bound, first at seed {seed}"
        )));
    }
    Ok(())
}

fn cmd_sweep(spec_path: &Path, out: &Path, cfg: &OptConfig) -> CliResult<()> {
    let spec: SweepSpec = serde_json::from_str(&read_file(spec_path)?)?;
    let rows: Vec<SweepRow> = run_sweep(&spec, cfg)?;
    write_file(out, &render_rows(&rows, spec.format)?)?;
    let skipped = rows.iter().filter(|r| r.skipped_reason.is_some()).count();
    eprintln!("{} cells, {skipped} skipped", rows.len());
    Ok(())
}

fn norm_or_error(norm: hardylab_core::Result<f64>, errors: &mut Vec<String>) -> Option<f64> {
    match norm {
        Ok(v) => Some(round12(v)),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    }
}

fn cmd_apply(input: &Path, output: Option<&Path>, op: ApplyOp, params: ParamArgs) -> CliResult<()> {
    let params = params.params()?;
    let data: FunctionData = serde_json::from_str(&read_file(input)?)?;
    let mut errors = Vec::new();
    let (image, domain, input_norm, image_norm) = match data {
        FunctionData::Piecewise(f) => {
            let hm = apply_hm_closed(&f, &params)?;
            let image = match op {
                ApplyOp::Hm => hm,
                ApplyOp::Residual => f.sub_scaled(params.lambda, &hm),
            };
            let input_norm = norm_or_error(lp_norm_closed(&f, params.p), &mut errors);
            let image_norm = norm_or_error(lp_norm_closed(&image, params.p), &mut errors);
            (
                FunctionData::Piecewise(image),
                "(0,inf)".to_string(),
                input_norm,
                image_norm,
            )
        }
        FunctionData::Sampled(f) => {
            let hm = apply_hm_sampled(&f, &params)?;
            let image = match op {
                ApplyOp::Hm => hm,
                ApplyOp::Residual => f.sub_scaled(params.lambda, &hm)?,
            };
            let t_max = *f.grid().last().expect("sampled functions are non-empty");
            let (a, b) = (f.lp_norm(params.p), image.lp_norm(params.p));
            (
                FunctionData::Sampled(image),
                format!("[0,{t_max}]"),
                Some(round12(a)),
                Some(round12(b)),
            )
        }
    };
    let embedded = match output {
        Some(path) => {
            write_file(path, &serde_json::to_string(&image)?)?;
            None
        }
        None => Some(image),
    };
    print(&ApplyRecord {
        op,
        p: params.p,
        m: params.m,
        lambda: params.lambda,
        domain,
        input_norm,
        image_norm,
        norm_error: (!errors.is_empty()).then(|| errors.join("; ")),
        image: embedded,
    })
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let cfg = opt_config(&cli);
    cfg.validate()?;
    match cli.command {
        Command::Constant(args) => cmd_constant(args, &cfg),
        Command::Ratio { params, alpha, beta } => cmd_ratio(params, alpha, beta),
        Command::Sharpness(args) => cmd_sharpness(args, &cfg),
        Command::Majorize {
            params,
            force_c,
            points,
            range,
            check_tol,
        } => cmd_majorize(params, &cfg, force_c, points, range, check_tol),
        Command::Martingale {
            alpha,
            s,
            n,
            p,
            fuzz,
            depth,
            max_branch,
            scale,
            c,
            variant,
            fuzz_tol,
            fuzz_csv,
        } => {
            let shape = TreeShape {
                depth,
                max_branch,
                value_scale: scale,
            };
            cmd_martingale(alpha, s, n, p, fuzz, shape, c, variant, fuzz_tol, fuzz_csv, cli.seed)
        }
        Command::Sweep { spec, out } => cmd_sweep(&spec, &out, &cfg),
        Command::Apply {
            input,
            output,
            op,
            p,
            m,
            lambda,
        } => cmd_apply(&input, output.as_deref(), op, ParamArgs { p, m, lambda }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
