//! Command-line surface: seven subcommands wrapping the library one-to-one.
//!
//! ```text
//! run-smc        particle run with ESS-triggered resampling
//! run-sis        importance sampling only (no resampling)
//! run-mh         block-structured MH baseline
//! run-exact      brute-force target enumeration
//! compare        score emitted runs against an enumerated oracle
//! cost-report    Monte Carlo reconciliation of the analytic cost model
//! temp-mismatch  per-token tempering vs. the true power target
//! ```
//!
//! Every option can come from a `--config` JSON file, with command-line
//! flags taking precedence. All randomness flows from the single `--seed`
//! value through named streams — there is no wall-clock entropy, so
//! identical invocations produce byte-identical files. Exit codes: 0
//! success, 1 input error, 2 capacity (enumeration budget), 3 numerical.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::Deserialize;

use crate::cost::{self, CostLedger, Regime};
use crate::engine::{
    estimate_normalizer, run_power_smc, run_sis, EngineConfig, Ensemble, RampSchedule,
};
use crate::error::{Error, Result};
use crate::lm::ToyModel;
use crate::mh::{run_mh_power, MhConfig};
use crate::presets;
use crate::report::{
    self, format_sequence, CompareReport, CompareRow, EngineSummary, MhSummary, MismatchReport,
};
use crate::resample::Resampler;
use crate::rng::{stream_rng, STREAM_OUTPUT};
use crate::target::{enumerate_target, temperature_joint, tv_between, tv_distance};
use crate::TokenId;

/// Entry point for the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let is_help = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if is_help { 0 } else { 1 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "power-smc", version, about = "Particle sampling from power distributions of token models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the particle engine with ESS-triggered resampling
    RunSmc(EngineArgs),
    /// Run sequential importance sampling (resampling disabled)
    RunSis(EngineArgs),
    /// Run the block-structured MH baseline
    RunMh(MhArgs),
    /// Enumerate the exact power target of a small model
    RunExact(ExactArgs),
    /// Compare emitted run outputs against an enumerated oracle
    Compare(CompareArgs),
    /// Reconcile empirical MH cost against the closed-form model
    CostReport(CostArgs),
    /// Demonstrate that per-token tempering misses the power target
    TempMismatch(MismatchArgs),
}

/// Options shared by every model-consuming subcommand.
#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON run configuration; flags override file values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Model spec file (JSON)
    #[arg(long)]
    model: Option<PathBuf>,
    /// Built-in model: two-sequence | oracle-3x4 | mismatch-2x2 |
    /// bigram-demo | cost-synthetic | resample-heavy
    #[arg(long)]
    preset: Option<String>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Root seed; mandatory for every randomized command
    #[arg(long)]
    seed: Option<u64>,
    /// Target exponent
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args, Debug)]
struct EngineArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of particles
    #[arg(long)]
    particles: Option<usize>,
    /// ESS threshold fraction kappa in (0, 1)
    #[arg(long)]
    ess_threshold: Option<f64>,
    /// Ramp the exponent linearly over this many leading tokens
    #[arg(long)]
    ramp_tokens: Option<usize>,
    /// systematic | multinomial | stratified | residual
    #[arg(long)]
    resampler: Option<String>,
    /// Number of decode steps
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Args, Debug)]
struct MhArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Block length B (must divide the horizon)
    #[arg(long)]
    block: Option<usize>,
    /// MH moves per block
    #[arg(long)]
    moves: Option<usize>,
    /// global | last-block
    #[arg(long)]
    regime: Option<String>,
    /// Proposal temperature for regenerated suffixes
    #[arg(long)]
    tau_prop: Option<f64>,
    /// Total horizon T
    #[arg(long)]
    horizon: Option<usize>,
    /// Last-block moves to discard from the occupation measure
    #[arg(long)]
    burn_in: Option<usize>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct CompareArgs {
    /// Oracle target CSV (its .json sidecar must sit next to it)
    #[arg(long)]
    oracle: PathBuf,
    /// Samples CSV of one run; repeatable, first run is the ratio baseline
    #[arg(long = "run", required = true)]
    runs: Vec<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CostArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// global | last-block
    #[arg(long)]
    regime: Option<String>,
    /// Total horizon T
    #[arg(long)]
    horizon: Option<usize>,
    /// Block length B
    #[arg(long)]
    block: Option<usize>,
    /// MH moves per block
    #[arg(long)]
    moves: Option<usize>,
    /// Number of Monte Carlo runs
    #[arg(long)]
    runs: Option<usize>,
    /// Pass/fail tolerance on the relative error
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Args, Debug)]
struct MismatchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of particles for the engine side
    #[arg(long)]
    particles: Option<usize>,
    /// Number of decode steps
    #[arg(long)]
    horizon: Option<usize>,
}

/// File-backed configuration; any field may be omitted and overridden by
/// the corresponding flag. Unknown keys are rejected.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub model: Option<PathBuf>,
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub alpha: Option<f64>,
    pub particles: Option<usize>,
    pub ess_threshold: Option<f64>,
    pub ramp_tokens: Option<usize>,
    pub resampler: Option<String>,
    pub horizon: Option<usize>,
    pub block: Option<usize>,
    pub moves: Option<usize>,
    pub regime: Option<String>,
    pub tau_prop: Option<f64>,
    pub runs: Option<usize>,
    pub burn_in: Option<usize>,
    pub tolerance: Option<f64>,
}

/// Loads the optional config file and enforces its `command` pin.
fn load_config(path: Option<&Path>, invoked: &str) -> Result<RunConfig> {
    let config: RunConfig = match path {
        Some(p) => report::read_json(p)?,
        None => RunConfig::default(),
    };
    if let Some(pinned) = &config.command {
        if pinned != invoked {
            return Err(Error::Input(format!(
                "config file pins command {pinned:?} but {invoked:?} was invoked"
            )));
        }
    }
    Ok(config)
}

/// Resolves a built-in model by name.
pub fn preset_by_name(name: &str) -> Result<ToyModel> {
    match name {
        "two-sequence" => Ok(presets::two_sequence()),
        "oracle-3x4" => Ok(presets::oracle_3x4()),
        "mismatch-2x2" => Ok(presets::mismatch_2x2()),
        "bigram-demo" => Ok(presets::bigram_demo()),
        "cost-synthetic" => Ok(presets::cost_synthetic(0, 4096)),
        "resample-heavy" => Ok(presets::resample_heavy()),
        other => Err(Error::Input(format!(
            "unknown preset {other:?}; available: two-sequence, oracle-3x4, mismatch-2x2, \
             bigram-demo, cost-synthetic, resample-heavy"
        ))),
    }
}

fn load_model(common: &CommonArgs, config: &RunConfig) -> Result<ToyModel> {
    let path = common.model.clone().or_else(|| config.model.clone());
    let preset = common.preset.clone().or_else(|| config.preset.clone());
    match (path, preset) {
        (Some(_), Some(_)) => Err(Error::Input(
            "give either --model or --preset, not both".into(),
        )),
        (Some(p), None) => ToyModel::from_spec_file(&p),
        (None, Some(name)) => preset_by_name(&name),
        (None, None) => Err(Error::Input(
            "a model is required: pass --model <spec.json> or --preset <name>".into(),
        )),
    }
}

fn require_seed(flag: Option<u64>, config: &RunConfig) -> Result<u64> {
    flag.or(config.seed).ok_or_else(|| {
        Error::Input("a seed is mandatory (flag --seed or config field \"seed\")".into())
    })
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RunSmc(args) => cmd_run_engine(args, true),
        Command::RunSis(args) => cmd_run_engine(args, false),
        Command::RunMh(args) => cmd_run_mh(args),
        Command::RunExact(args) => cmd_run_exact(args),
        Command::Compare(args) => cmd_compare(args),
        Command::CostReport(args) => cmd_cost_report(args),
        Command::TempMismatch(args) => cmd_temp_mismatch(args),
    }
}

fn build_engine_config(
    args: &EngineArgs,
    config: &RunConfig,
    model: &ToyModel,
) -> Result<EngineConfig> {
    let seed = require_seed(args.common.seed, config)?;
    let horizon = args
        .horizon
        .or(config.horizon)
        .unwrap_or(model.t_cap() + 1);
    let mut engine = EngineConfig::new(horizon, seed);
    engine.alpha = args.common.alpha.or(config.alpha).unwrap_or(4.0);
    engine.n_particles = args.particles.or(config.particles).unwrap_or(64);
    engine.kappa = args.ess_threshold.or(config.ess_threshold).unwrap_or(0.5);
    if let Some(name) = args.resampler.clone().or_else(|| config.resampler.clone()) {
        engine.resampler = Resampler::parse(&name)?;
    }
    if let Some(t_ramp) = args.ramp_tokens.or(config.ramp_tokens) {
        engine.ramp = Some(RampSchedule::linear(engine.alpha, t_ramp)?);
    }
    engine.validate()?;
    Ok(engine)
}

/// The final categorical draw shared by both engine commands.
fn draw_output_sample(
    ensemble: &Ensemble,
    model: &ToyModel,
    seed: u64,
) -> Result<(Vec<TokenId>, bool)> {
    let weights = ensemble.normalized_weights()?;
    let u = stream_rng(seed, &[STREAM_OUTPUT]).random::<f64>();
    let chosen = crate::numeric::categorical_from_weights(&weights, u);
    let particle = &ensemble.particles[chosen];
    Ok((particle.sequence(model.vocab().eos_id()), particle.done))
}

fn cmd_run_engine(args: EngineArgs, resampling: bool) -> Result<()> {
    let command = if resampling { "run-smc" } else { "run-sis" };
    let config = load_config(args.common.config.as_deref(), command)?;
    let model = load_model(&args.common, &config)?;
    let engine = build_engine_config(&args, &config, &model)?;

    let (ensemble, trace, ledger, log_z) = if resampling {
        let run = run_power_smc(&model, &engine)?;
        let log_z = estimate_normalizer(&run.trace)?;
        (run.ensemble, run.trace, run.ledger, log_z)
    } else {
        let run = run_sis(&model, &engine)?;
        (run.ensemble, run.trace, run.ledger, run.log_z_estimate)
    };
    let (sample, sample_terminated) = draw_output_sample(&ensemble, &model, engine.seed)?;

    let out = &args.common.out;
    report::write_samples_csv(&out.join("samples.csv"), &ensemble.weighted_samples(&model)?)?;
    report::write_trace_csv(&out.join("trace.csv"), &trace)?;
    report::write_json(
        &out.join("summary.json"),
        &EngineSummary {
            command: command.to_string(),
            alpha: engine.alpha,
            n_particles: engine.n_particles,
            t_max: engine.t_max,
            kappa: engine.kappa,
            resampler: engine.resampler.name().to_string(),
            seed: engine.seed,
            log_z_estimate: log_z,
            token_evals: ledger.token_evals(),
            num_resamples: trace.num_resamples(),
            sample: format_sequence(&sample),
            sample_terminated,
        },
    )
}

fn cmd_run_mh(args: MhArgs) -> Result<()> {
    let config = load_config(args.common.config.as_deref(), "run-mh")?;
    let model = load_model(&args.common, &config)?;
    let seed = require_seed(args.common.seed, &config)?;
    let horizon = args
        .horizon
        .or(config.horizon)
        .unwrap_or(model.t_cap() + 1);
    let block = args.block.or(config.block).unwrap_or(horizon);
    let moves = args.moves.or(config.moves).unwrap_or(10);
    let mut mh = MhConfig::new(horizon, block, moves, seed);
    mh.alpha = args.common.alpha.or(config.alpha).unwrap_or(4.0);
    if let Some(name) = args.regime.clone().or_else(|| config.regime.clone()) {
        mh.regime = Regime::parse(&name)?;
    }
    mh.tau_prop = args.tau_prop.or(config.tau_prop).unwrap_or(1.0);
    mh.validate()?;

    let run = run_mh_power(&model, &mh)?;
    let burn_in = args
        .burn_in
        .or(config.burn_in)
        .unwrap_or(mh.moves_per_block / 10);
    let masses = run.last_block_masses(burn_in);
    let mut samples = Vec::with_capacity(masses.len());
    for (sequence, weight) in masses {
        let log_p = model.sequence_logprob(&sequence)?;
        let terminated = sequence.last() == Some(&model.vocab().eos_id());
        samples.push(crate::engine::WeightedSample { sequence, log_p, weight, terminated });
    }

    let out = &args.common.out;
    report::write_samples_csv(&out.join("samples.csv"), &samples)?;
    report::write_moves_csv(&out.join("moves.csv"), &run.chain.records)?;
    report::write_json(
        &out.join("summary.json"),
        &MhSummary {
            command: "run-mh".to_string(),
            alpha: mh.alpha,
            horizon: mh.horizon,
            block: mh.block,
            moves_per_block: mh.moves_per_block,
            regime: mh.regime.name().to_string(),
            tau_prop: mh.tau_prop,
            seed: mh.seed,
            acceptance_rate: run.acceptance_rate(),
            token_evals: run.ledger.token_evals(),
            suffix_tokens: run.ledger.total_suffix_tokens(),
            final_sequence: format_sequence(&run.final_sequence),
            terminated: run.terminated,
        },
    )
}

fn cmd_run_exact(args: ExactArgs) -> Result<()> {
    let config = load_config(args.common.config.as_deref(), "run-exact")?;
    let model = load_model(&args.common, &config)?;
    let alpha = args.common.alpha.or(config.alpha).unwrap_or(4.0);
    let target = enumerate_target(&model, alpha)?;
    let out = &args.common.out;
    report::write_target_csv(&out.join("target.csv"), &target)?;
    report::write_target_sidecar(&out.join("target.json"), &target)
}

/// Pulls optional summary fields from the `summary.json` sitting next to a
/// samples CSV, if one exists.
fn sibling_summary(samples_path: &Path) -> (Option<f64>, Option<u64>) {
    let summary_path = samples_path.with_file_name("summary.json");
    let value: serde_json::Value = match report::read_json(&summary_path) {
        Ok(v) => v,
        Err(_) => return (None, None),
    };
    (
        value.get("log_z_estimate").and_then(|v| v.as_f64()),
        value.get("token_evals").and_then(|v| v.as_u64()),
    )
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let sidecar = args.oracle.with_extension("json");
    let target = report::read_target(&args.oracle, &sidecar)?;

    let mut rows = Vec::new();
    let mut baseline_evals: Option<u64> = None;
    for run_path in &args.runs {
        let samples = report::read_samples_csv(run_path)?;
        let masses: Vec<(Vec<TokenId>, f64)> =
            samples.into_iter().map(|(seq, _, w)| (seq, w)).collect();
        let tv = tv_distance(&masses, &target)?;
        let (log_z_estimate, token_evals) = sibling_summary(run_path);
        let normalizer_error =
            log_z_estimate.map(|est| ((est - target.log_z_alpha()).exp() - 1.0).abs());
        if baseline_evals.is_none() {
            baseline_evals = token_evals;
        }
        let ledger_ratio = match (token_evals, baseline_evals) {
            (Some(e), Some(b)) if b > 0 => Some(e as f64 / b as f64),
            _ => None,
        };
        let name = run_path
            .parent()
            .and_then(|p| p.file_name())
            .or_else(|| run_path.file_stem())
            .and_then(|n| n.to_str())
            .unwrap_or("run")
            .to_string();
        rows.push(CompareRow { name, tv, log_z_estimate, normalizer_error, token_evals, ledger_ratio });
    }

    let compare = CompareReport {
        alpha: target.alpha(),
        log_z_alpha: target.log_z_alpha(),
        runs: rows,
    };
    report::write_json(&args.out.join("compare.json"), &compare)?;
    report::write_compare_csv(&args.out.join("compare.csv"), &compare)
}

fn cmd_cost_report(args: CostArgs) -> Result<()> {
    let config = load_config(args.common.config.as_deref(), "cost-report")?;
    let seed = require_seed(args.common.seed, &config)?;
    let horizon = args.horizon.or(config.horizon).unwrap_or(256);
    let block = args.block.or(config.block).unwrap_or(32);
    let moves = args.moves.or(config.moves).unwrap_or(10);
    let runs = args.runs.or(config.runs).unwrap_or(50);
    let tolerance = args.tolerance.or(config.tolerance).unwrap_or(0.05);
    if runs == 0 {
        return Err(Error::Input("need at least one run to reconcile".into()));
    }
    let regime = match args.regime.clone().or_else(|| config.regime.clone()) {
        Some(name) => Regime::parse(&name)?,
        None => Regime::Global,
    };
    let model = if args.common.model.is_some()
        || args.common.preset.is_some()
        || config.model.is_some()
        || config.preset.is_some()
    {
        load_model(&args.common, &config)?
    } else {
        presets::cost_synthetic(seed, 2 * horizon)
    };

    let mut ledgers: Vec<CostLedger> = Vec::with_capacity(runs);
    for i in 0..runs {
        let mut mh = MhConfig::new(horizon, block, moves, seed.wrapping_add(i as u64));
        mh.regime = regime;
        let run = run_mh_power(&model, &mh)?;
        ledgers.push(run.ledger);
    }
    let empirical = cost::mean_token_evals(&ledgers)?;
    let analytic = match regime {
        Regime::Global => cost::mh_cost_global(horizon as u64, block as u64, moves as u64)?,
        Regime::LastBlock => cost::mh_cost_lastblock(horizon as u64, moves as u64),
    };
    let cost_report = cost::reconcile(regime.name(), empirical, analytic, tolerance);
    report::write_json(&args.common.out.join("cost_report.json"), &cost_report)?;
    report::write_ledgers_csv(&args.common.out.join("ledgers.csv"), &ledgers)
}

fn cmd_temp_mismatch(args: MismatchArgs) -> Result<()> {
    let config = load_config(args.common.config.as_deref(), "temp-mismatch")?;
    let model = if args.common.model.is_none()
        && args.common.preset.is_none()
        && config.model.is_none()
        && config.preset.is_none()
    {
        presets::mismatch_2x2()
    } else {
        load_model(&args.common, &config)?
    };
    let seed = require_seed(args.common.seed, &config)?;
    let alpha = args.common.alpha.or(config.alpha).unwrap_or(4.0);
    let tau = 1.0 / alpha;

    let target = enumerate_target(&model, alpha)?;
    let tempered = temperature_joint(&model, tau)?;
    let tv_temperature = tv_between(&tempered, &target);

    let horizon = args
        .horizon
        .or(config.horizon)
        .unwrap_or(model.t_cap() + 1);
    let mut engine = EngineConfig::new(horizon, seed);
    engine.alpha = alpha;
    engine.n_particles = args.particles.or(config.particles).unwrap_or(4096);
    engine.validate()?;
    let run = run_power_smc(&model, &engine)?;
    let masses = run.ensemble.empirical_masses(&model)?;
    let tv_smc = tv_distance(&masses, &target)?;

    let out = &args.common.out;
    let mut body = String::from("sequence,log_p,log_pi_alpha,log_temp\n");
    for entry in target.entries() {
        let log_temp = tempered
            .lookup(&entry.sequence)
            .map(|e| e.log_pi)
            .unwrap_or(f64::NEG_INFINITY);
        body.push_str(&format!(
            "{},{},{},{}\n",
            format_sequence(&entry.sequence),
            entry.log_p,
            entry.log_pi,
            log_temp
        ));
    }
    report::write_atomic(&out.join("distributions.csv"), &body)?;
    report::write_json(
        &out.join("mismatch.json"),
        &MismatchReport {
            alpha,
            tau,
            tv_temperature,
            tv_smc,
            n_particles: engine.n_particles,
            seed,
        },
    )
}
