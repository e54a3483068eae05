use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sk_tap::diagnostics::{classify, Criteria};
use sk_tap::disorder::{uniform_start, Disorder, ModelParams, OnsagerMode, StartShape};
use sk_tap::dynamics::{run, Scheme, SchemeConfig, TwoStepInit, DEFAULT_MAE_TARGET, DEFAULT_MAX_ITERS};
use sk_tap::harness::{
    builtin_presets, fmt_f64, preset, run_experiment, summarize, to_json_string, AcceptanceRule, Axis, ExperimentSpec,
    Grid, OutputKind, Realizations, RunOptions, SchemeDefaults, Starts, Summary, SummaryKind,
};
use sk_tap::order::{at_line_lhs, rs_free_energy, solve_q};
use sk_tap::quadrature::{QuadratureRule, DEFAULT_NODES};
use sk_tap::registry::DEFAULT_DEDUP_THRESHOLD;
use sk_tap::spectral::{
    build_jacobian, esd_vs_semicircle, repulsion_fraction, semicircle_edge, spectrum, SpectrumReport,
};
use sk_tap::Error;

/// Default parent directory for experiment output.
const OUT_DIR_ENV: &str = "SK_TAP_OUT_DIR";

// stdout writes that surface a closed pipe as an error instead of a panic.
macro_rules! out {
    ($($t:tt)*) => { write!(std::io::stdout(), $($t)*)? };
}
macro_rules! outln {
    ($($t:tt)*) => { writeln!(std::io::stdout(), $($t)*)? };
}

#[derive(Parser)]
#[command(name = "sk-tap", version, about = "TAP fixed points of the SK spin glass")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve q = E tanh²(h + β√q Z) and report the AT functional and RS free energy.
    OrderParams(OrderArgs),
    /// Run one trajectory on one disorder sample.
    Iterate(IterateArgs),
    /// Iterate, then compute the Jacobian spectrum at the final state.
    Spectrum(SpectrumArgs),
    /// Run a built-in preset or a TOML experiment file.
    Experiment(ExperimentArgs),
    /// List built-in experiments, or print one as TOML.
    Presets(PresetsArgs),
    /// Count distinct accepted solutions per realization over an ε mesh.
    Census(CensusArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Banach,
    TwoStep,
    EpsilonBanach,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Banach => Scheme::Banach,
            SchemeArg::TwoStep => Scheme::TwoStep,
            SchemeArg::EpsilonBanach => Scheme::EpsilonBanach,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OnsagerArg {
    LimitingQ,
    EmpiricalQn,
}

impl From<OnsagerArg> for OnsagerMode {
    fn from(o: OnsagerArg) -> Self {
        match o {
            OnsagerArg::LimitingQ => OnsagerMode::LimitingQ,
            OnsagerArg::EmpiricalQn => OnsagerMode::EmpiricalQN,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    FullCube,
    Corners,
}

impl From<ShapeArg> for StartShape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::FullCube => StartShape::FullCube,
            ShapeArg::Corners => StartShape::Corners,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum InitArg {
    SqrtQ,
    FromStart,
}

impl From<InitArg> for TwoStepInit {
    fn from(i: InitArg) -> Self {
        match i {
            InitArg::SqrtQ => TwoStepInit::SqrtQ,
            InitArg::FromStart => TwoStepInit::FromStart,
        }
    }
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    h: f64,
    /// Gauss–Hermite nodes.
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = 1e-13)]
    tol: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "banach")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    h: f64,
    /// Disorder seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start-value seed; defaults to the disorder seed plus one.
    #[arg(long)]
    start_seed: Option<u64>,
    #[arg(long, value_enum, default_value = "full-cube")]
    shape: ShapeArg,
    /// Blend weight for epsilon-banach, in (-1, 1).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_MAE_TARGET)]
    mae_target: f64,
    #[arg(long, value_enum, default_value = "limiting-q")]
    onsager: OnsagerArg,
    #[arg(long, value_enum, default_value = "sqrt-q")]
    two_step_init: InitArg,
}

#[derive(Args)]
struct IterateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Record every k-th step in the trace.
    #[arg(long, default_value_t = 1)]
    trace_every: usize,
    /// Write the trace as CSV (k, mse, mae, inside_cube).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Write the eigenvalues as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScaleArgs {
    /// Override the number of disorder realizations.
    #[arg(long)]
    realizations: Option<u64>,
    /// Override the number of start values.
    #[arg(long)]
    starts: Option<u64>,
    /// Keep every k-th ε value.
    #[arg(long)]
    epsilon_stride: Option<usize>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory [default: $SK_TAP_OUT_DIR/<name> or ./sk-tap-runs/<name>].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Name of a built-in preset.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved experiment as TOML and exit.
    #[arg(long)]
    dry_run: bool,
    #[command(flatten)]
    scale: ScaleArgs,
}

#[derive(Args)]
struct PresetsArgs {
    /// Print this preset as TOML.
    #[arg(long)]
    show: Option<String>,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long, default_value_t = 25)]
    n: usize,
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    #[arg(long, default_value_t = 0.5)]
    h: f64,
    #[arg(long, default_value_t = -0.505, allow_negative_numbers = true)]
    eps_start: f64,
    #[arg(long, default_value_t = 0.001, allow_negative_numbers = true)]
    eps_step: f64,
    #[arg(long, default_value_t = 251)]
    eps_count: usize,
    #[arg(long, value_enum, default_value = "corners")]
    shape: ShapeArg,
    /// Sup-norm radius below which two solutions are the same.
    #[arg(long, default_value_t = DEFAULT_DEDUP_THRESHOLD)]
    dedup: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    #[command(flatten)]
    scale: ScaleArgs,
}

fn out_dir(explicit: &Option<PathBuf>, name: &str) -> PathBuf {
    if let Some(p) = explicit {
        return p.clone();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(base) => Path::new(&base).join(name),
        None => Path::new("sk-tap-runs").join(name),
    }
}

fn sample(args: &RunArgs) -> Result<(ModelParams, Disorder, SchemeConfig, sk_tap::Magnetization), Error> {
    let params = ModelParams::new(args.n, args.beta, args.h, args.onsager.into())?;
    let d = Disorder::sample(args.n, args.seed)?;
    let config = SchemeConfig {
        scheme: args.scheme.into(),
        epsilon: args.epsilon,
        max_iters: args.max_iters,
        mae_target: args.mae_target,
        two_step_init: args.two_step_init.into(),
    };
    config.validate()?;
    let start = uniform_start(args.n, args.start_seed.unwrap_or(args.seed.wrapping_add(1)), args.shape.into())?;
    Ok((params, d, config, start))
}

fn order_params(a: &OrderArgs) -> Result<(), Error> {
    let quad = QuadratureRule::gauss_hermite(a.nodes)?;
    let op = solve_q(a.beta, a.h, a.tol, &quad)?;
    let line = json!({
        "beta": a.beta,
        "h": a.h,
        "q": op.q,
        "residual": op.residual,
        "at_lhs": at_line_lhs(a.beta, a.h, op.q, &quad),
        "rs_free_energy": rs_free_energy(a.beta, a.h, op.q, &quad),
    });
    outln!("{}", to_json_string(&line)?);
    Ok(())
}

fn iterate(a: &IterateArgs) -> Result<(), Error> {
    let (params, d, config, start) = sample(&a.run)?;
    let outcome = run(&params, &d, &config, start, a.trace_every)?;
    let m = &outcome.state.m_curr;
    let criteria = Criteria::new(sk_tap::Acceptance::low_temperature());
    let (_, diag) = classify(&params, &d, m, outcome.final_mae(), outcome.final_mse(), &criteria);
    outln!(
        "converged={} status={} iterations={} mse={} mae={} plefka={} tap_fe={} inside_cube={}",
        outcome.converged,
        outcome.status.as_str(),
        outcome.state.k,
        fmt_f64(outcome.final_mse()),
        fmt_f64(outcome.final_mae()),
        fmt_f64(diag.plefka),
        diag.tap_fe.map(fmt_f64).unwrap_or_else(|| "NA".into()),
        diag.inside_cube,
    );
    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["k", "mse", "mae", "inside_cube"])?;
        for t in &outcome.trace {
            w.write_record([t.k.to_string(), fmt_f64(t.mse), fmt_f64(t.mae), t.inside_cube.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn spectrum_cmd(a: &SpectrumArgs) -> Result<(), Error> {
    let (params, d, config, start) = sample(&a.run)?;
    let outcome = run(&params, &d, &config, start, 0)?;
    let m = &outcome.state.m_curr;
    let q_star = params.onsager_q(m.values());
    let pieces = build_jacobian(&params, &d, m, q_star)?;
    let report = spectrum(&pieces)?;
    let j_hat = SpectrumReport::from_eigenvalues(pieces.j_hat.eigenvalues()?);
    let line = json!({
        "n": params.n,
        "beta": params.beta,
        "h": params.h,
        "q": params.q,
        "onsager_q": q_star,
        "iterations": outcome.state.k,
        "lambda_min": report.lambda_min(),
        "lambda_max": report.lambda_max(),
        "predicted_edge": semicircle_edge(params.beta, q_star),
        "repulsion_fraction": repulsion_fraction(&report),
        "ks_j_hat": esd_vs_semicircle(&j_hat, params.beta, q_star),
    });
    outln!("{}", to_json_string(&line)?);
    if let Some(path) = &a.out {
        std::fs::write(path, to_json_string(&json!({ "eigenvalues": report.eigenvalues() }))?)?;
    }
    Ok(())
}

fn execute(spec: ExperimentSpec, scale: &ScaleArgs) -> Result<(), Error> {
    let spec = spec.scaled(scale.realizations, scale.starts, scale.epsilon_stride);
    spec.validate()?;
    let dir = out_dir(&scale.out, &spec.name);
    let result = run_experiment(&spec, &RunOptions { jobs: scale.jobs, out_dir: Some(dir.clone()) })?;
    let good = result.rows.iter().filter(|r| r.good).count();
    let converged = result.rows.iter().filter(|r| r.converged).count();
    outln!(
        "experiment={} cells={} converged={} good={} out={}",
        spec.name,
        result.rows.len(),
        converged,
        good,
        dir.display()
    );
    if spec.wants(OutputKind::Census) {
        if let Summary::PerRealization { multi_fraction, .. } = summarize(&result, SummaryKind::PerRealization) {
            let solved = result.census.iter().filter(|c| c.distinct > 0).count();
            outln!(
                "realizations={} with_solution={} multi_fraction={}",
                result.census.len(),
                solved,
                multi_fraction.map(fmt_f64).unwrap_or_else(|| "NA".into())
            );
        }
    }
    Ok(())
}

fn experiment(a: &ExperimentArgs) -> Result<(), Error> {
    let spec = match (&a.preset, &a.config) {
        (Some(name), _) => preset(name)?,
        (None, Some(path)) => ExperimentSpec::from_toml(&std::fs::read_to_string(path)?)?,
        (None, None) => unreachable!("clap requires one of --preset/--config"),
    };
    if a.dry_run {
        let spec = spec.scaled(a.scale.realizations, a.scale.starts, a.scale.epsilon_stride);
        spec.validate()?;
        out!("{}", spec.to_toml()?);
        return Ok(());
    }
    execute(spec, &a.scale)
}

fn presets(a: &PresetsArgs) -> Result<(), Error> {
    match &a.show {
        Some(name) => out!("{}", preset(name)?.to_toml()?),
        None => {
            for p in builtin_presets() {
                outln!("{}\t{}", p.name, p.cell_count());
            }
        }
    }
    Ok(())
}

fn census(a: &CensusArgs) -> Result<(), Error> {
    let spec = ExperimentSpec {
        name: "census".into(),
        description: "distinct epsilon-Banach solutions per realization".into(),
        onsager_mode: OnsagerMode::EmpiricalQN,
        plefka_max: sk_tap::diagnostics::PLEFKA_MAX,
        dedup_threshold: a.dedup,
        outputs: vec![OutputKind::Diagnostics, OutputKind::Census],
        trace_every: 1,
        reference_fe: None,
        budget: sk_tap::harness::spec::DEFAULT_BUDGET,
        grid: Grid {
            n: vec![a.n],
            beta: Axis::List(vec![a.beta]),
            h: Axis::List(vec![a.h]),
            epsilon: Axis::Range { start: a.eps_start, step: a.eps_step, count: a.eps_count },
            scheme: vec![Scheme::EpsilonBanach],
        },
        realizations: Realizations { count: 100, base_seed: a.seed },
        starts: Starts { count: 100, base_seed: a.seed.wrapping_add(1), shape: a.shape.into() },
        scheme_config: SchemeDefaults { max_iters: a.max_iters, ..SchemeDefaults::default() },
        acceptance: AcceptanceRule::low_temperature(),
    };
    execute(spec, &a.scale)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::OrderParams(a) => order_params(a),
        Command::Iterate(a) => iterate(a),
        Command::Spectrum(a) => spectrum_cmd(a),
        Command::Experiment(a) => experiment(a),
        Command::Presets(a) => presets(a),
        Command::Census(a) => census(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sk-tap: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
