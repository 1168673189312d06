//! Batch front-end: reproducible sampling, network construction, plots,
//! distinguisher experiments, bound verification, and parameter reports.
//!
//! Every run is fully determined by its resolved parameters plus seed; the
//! resolved configuration and the artifact version are echoed into every
//! output file. Exit codes: 0 success, 1 verification/run failure, 2 usage or
//! configuration error, 3 numerical-tolerance escalation.

mod config;
mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use clwe_lab::{
    admissible_beta, build_triangle_net, derive_parameter_chain, evaluate_edge, lift,
    required_test_samples, run_bound_checks, run_trials, small_noise_regime, triangle_wave,
    verdict_rate, BoundCheckConfig, ClweParams, ClweSampler, LearnerSpec, NetSampler, NullSampler,
    PeriodicNeuronSampler, RandomStream, ReductionConfig, Sampler, SgdLearner, SgdSettings,
    TrialOutcome, Verdict, ARTIFACT_VERSION,
};

use config::{FileConfig, UsageError};

#[derive(Parser)]
#[command(
    name = "clwe-lab",
    version,
    about = "Numerical laboratory for planted mod-1 label distributions and one-hidden-layer ReLU networks"
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for trial-level parallelism. Outputs are byte-identical
    /// at any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "CLWE_LAB_OUT")]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw samples from a named distribution and write them as CSV.
    Sample(SampleArgs),
    /// Build the exact truncated-wave network and write its model file.
    BuildNn(BuildNnArgs),
    /// Plot the triangle wave against the network over [-R-2, R+2].
    PlotFig1(PlotArgs),
    /// Run seeded distinguisher trials on planted vs null data.
    Distinguish(DistinguishArgs),
    /// Train the SGD baseline on sampled data and record its curve.
    Train(TrainArgs),
    /// Verify the total-variation bounds numerically.
    Verify(VerifyArgs),
    /// Derive the lattice parameter chain and its constraint report.
    Params(ParamsArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// One of: clwe, null, pphi, pnn.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Truncation radius for the network distribution.
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the planted direction to this separate secret file.
    #[arg(long)]
    emit_secret: Option<PathBuf>,
}

#[derive(Args)]
struct BuildNnArgs {
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    r: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DistinguishArgs {
    /// One of: oracle, oracle-nn, constant, sgd.
    #[arg(long)]
    learner: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    m1: Option<usize>,
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sgd: SgdArgs,
}

#[derive(Args)]
struct SgdArgs {
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    init_scale: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    eval_m: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    sgd: SgdArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    mc_projections: Option<usize>,
    #[arg(long)]
    mc_tail: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Self-test hook: corrupt every bound so the harness must report failure.
    #[arg(long, hide = true)]
    corrupt_bounds: bool,
}

#[derive(Args)]
struct ParamsArgs {
    /// Super-polynomially-small-noise regime exponent in (0, 1/2).
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    d: Option<u64>,
    #[arg(long)]
    n: Option<u64>,
    /// log2 of the label noise level (negative).
    #[arg(long, allow_negative_numbers = true)]
    sigma_log2: Option<f64>,
    #[arg(long)]
    slack: Option<f64>,
    #[arg(long)]
    c_const: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Determinism does not depend on this; it only sizes the pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            classify(&e)
        }
    }
}

fn classify(e: &anyhow::Error) -> ExitCode {
    if e.downcast_ref::<UsageError>().is_some() {
        return ExitCode::from(2);
    }
    if let Some(lab) = e.downcast_ref::<clwe_lab::Error>() {
        return match lab {
            clwe_lab::Error::ToleranceEscalation { .. } => ExitCode::from(3),
            clwe_lab::Error::ConfigViolation(_)
            | clwe_lab::Error::InvalidParameter { .. }
            | clwe_lab::Error::DimensionMismatch { .. } => ExitCode::from(2),
            _ => ExitCode::from(1),
        };
    }
    ExitCode::from(1)
}

fn run(cli: Cli) -> Result<ExitCode> {
    let file_cfg = FileConfig::load(cli.config.as_deref())?;
    let out_dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    match cli.cmd {
        Cmd::Sample(args) => cmd_sample(args, &file_cfg, &out_dir),
        Cmd::BuildNn(args) => cmd_build_nn(args, &file_cfg, &out_dir),
        Cmd::PlotFig1(args) => cmd_plot_fig1(args, &file_cfg, &out_dir),
        Cmd::Distinguish(args) => cmd_distinguish(args, &file_cfg, &out_dir),
        Cmd::Train(args) => cmd_train(args, &file_cfg, &out_dir),
        Cmd::Verify(args) => cmd_verify(args, &file_cfg, &out_dir),
        Cmd::Params(args) => cmd_params(args, &file_cfg, &out_dir),
    }
}

fn resolve_out(out_dir: &Path, out: PathBuf) -> Result<PathBuf> {
    let path = if out.is_absolute() {
        out
    } else {
        out_dir.join(out)
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    Ok(path)
}

/// The resolved semantic configuration echoed into artifacts. Execution
/// details (thread count, output paths) are deliberately excluded so reruns
/// produce byte-identical files.
#[derive(Debug, Default, Serialize)]
struct Echo(BTreeMap<String, String>);

impl Echo {
    fn new(command: &str) -> Self {
        let mut map = BTreeMap::new();
        map.insert("command".into(), command.to_string());
        map.insert("version".into(), ARTIFACT_VERSION.to_string());
        Echo(map)
    }

    fn put(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.0.insert(key.into(), value.to_string());
        self
    }

    fn comment_lines(&self) -> Vec<String> {
        self.0.iter().map(|(k, v)| format!("{k} = {v}")).collect()
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

// ---------------------------------------------------------------------------
// sample

fn cmd_sample(args: SampleArgs, cfg: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let dist: String = cfg.require("dist", &args.dist)?;
    let d: usize = cfg.require("d", &args.d)?;
    let m: usize = cfg.require("m", &args.m)?;
    let seed: u64 = cfg.resolve("seed", &args.seed, 0)?;
    let out = resolve_out(out_dir, cfg.resolve("out", &args.out, PathBuf::from("samples.csv"))?)?;

    let stream = RandomStream::new(seed);
    let direction_stream = stream.derive(0);
    let sample_stream = stream.derive(1);

    let mut echo = Echo::new("sample");
    echo.put("dist", &dist).put("d", d).put("m", m).put("seed", seed);

    let mut secret_direction: Option<Vec<f64>> = None;
    let mut gamma_for_secret = None;
    let set = match dist.as_str() {
        "clwe" => {
            let gamma: f64 = cfg.require("gamma", &args.gamma)?;
            let beta: f64 = cfg.resolve("beta", &args.beta, 0.0)?;
            echo.put("gamma", gamma).put("beta", beta);
            let w: Vec<f64> = clwe_lab::random_unit_vector(d, direction_stream)?;
            secret_direction = Some(w.clone());
            gamma_for_secret = Some(gamma);
            ClweSampler::new(ClweParams::new(d, gamma, beta)?, w)?.sample(m, sample_stream)?
        }
        "null" => NullSampler::new(d)?.sample(m, sample_stream)?,
        "pphi" => {
            let gamma: f64 = cfg.require("gamma", &args.gamma)?;
            let sigma: f64 = cfg.resolve("sigma", &args.sigma, 0.0)?;
            echo.put("gamma", gamma).put("sigma", sigma);
            let w: Vec<f64> = clwe_lab::random_unit_vector(d, direction_stream)?;
            secret_direction = Some(w.clone());
            gamma_for_secret = Some(gamma);
            PeriodicNeuronSampler::new(d, gamma, w, sigma)?.sample(m, sample_stream)?
        }
        "pnn" => {
            let gamma: f64 = cfg.require("gamma", &args.gamma)?;
            let sigma: f64 = cfg.resolve("sigma", &args.sigma, 0.0)?;
            let r: u32 = cfg.require("r", &args.r)?;
            echo.put("gamma", gamma).put("sigma", sigma).put("r", r);
            let w: Vec<f64> = clwe_lab::random_unit_vector(d, direction_stream)?;
            secret_direction = Some(w.clone());
            gamma_for_secret = Some(gamma);
            let net = lift(&build_triangle_net::<f64>(r)?, gamma, &w)?;
            NetSampler::new(net, sigma)?.sample(m, sample_stream)?
        }
        other => return Err(usage(format!("unknown distribution `{other}`"))),
    };

    let mut buf = Vec::new();
    set.write_csv(&mut buf, &echo.comment_lines())?;
    std::fs::write(&out, buf).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {} samples ({} columns) to {}", set.len(), set.dim() + 1, out.display());

    if let Some(secret_path) = args.emit_secret {
        let secret_path = resolve_out(out_dir, secret_path)?;
        #[derive(Serialize)]
        struct Secret<'a> {
            version: &'a str,
            seed: u64,
            gamma: Option<f64>,
            direction: Option<&'a [f64]>,
        }
        write_json(
            &secret_path,
            &Secret {
                version: ARTIFACT_VERSION,
                seed,
                gamma: gamma_for_secret,
                direction: secret_direction.as_deref(),
            },
        )?;
        println!("wrote planted secret to {}", secret_path.display());
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// build-nn

fn quarter_grid_max_deviation(net: &clwe_lab::RealScalarNet, r: u32) -> f64 {
    let rf = r as f64;
    let lo = (-(rf + 2.0) * 4.0) as i64;
    let hi = ((rf + 2.0) * 4.0) as i64;
    let mut worst: f64 = 0.0;
    for q in lo..=hi {
        let x = q as f64 / 4.0;
        let want = if x.abs() <= rf {
            triangle_wave(x).unwrap()
        } else {
            0.0
        };
        worst = worst.max((net.eval(x) - want).abs());
    }
    worst
}

fn cmd_build_nn(args: BuildNnArgs, cfg: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let r: u32 = cfg.require("r", &args.r)?;
    let out = resolve_out(out_dir, cfg.resolve("out", &args.out, PathBuf::from("net.json"))?)?;
    let net = build_triangle_net::<f64>(r)?;
    let deviation = quarter_grid_max_deviation(&net, r);

    write_json(&out, net.inner())?;

    let mut echo = Echo::new("build-nn");
    echo.put("r", r);
    #[derive(Serialize)]
    struct Summary {
        config: BTreeMap<String, String>,
        width: usize,
        max_quarter_grid_deviation: f64,
    }
    let summary_path = out.with_extension("summary.json");
    write_json(
        &summary_path,
        &Summary {
            config: echo.0.clone(),
            width: net.width(),
            max_quarter_grid_deviation: deviation,
        },
    )?;

    println!("width = {} (4R+2 with R = {r})", net.width());
    println!("max |net - truncated wave| on the quarter grid = {deviation:e}");
    println!("model written to {}", out.display());
    if deviation > 1e-12 {
        bail!(clwe_lab::Error::ToleranceEscalation {
            context: "build-nn verification grid",
            disagreement: deviation,
            cap: 1e-12,
        });
    }
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// plot-fig1

fn cmd_plot_fig1(args: PlotArgs, cfg: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let r: u32 = cfg.require("r", &args.r)?;
    let out = resolve_out(out_dir, cfg.resolve("out", &args.out, PathBuf::from("fig1.svg"))?)?;
    let net = build_triangle_net::<f64>(r)?;
    let rf = r as f64;

    // Eighth-integer grid: both curves are piecewise linear with kinks on the
    // quarter grid, so this renders them exactly.
    let steps = (16.0 * (rf + 2.0)) as i64;
    let xs: Vec<f64> = (-steps..=steps).map(|i| i as f64 / 8.0).collect();
    let wave: Vec<(f64, f64)> = xs.iter().map(|&x| (x, triangle_wave(x).unwrap())).collect();
    let net_pts: Vec<(f64, f64)> = xs.iter().map(|&x| (x, net.eval(x))).collect();

    let mut echo = Echo::new("plot-fig1");
    echo.put("r", r);

    let plot = svg::Plot {
        title: format!("Triangle wave vs width-{} ReLU network (R = {r})", net.width()),
        comment_lines: echo.comment_lines(),
        x_range: (-(rf + 2.0), rf + 2.0),
        y_range: (-0.35, 0.35),
        band: Some((-rf, rf, format!("exact overlap on [-{r}, {r}]"))),
        curves: vec![
            svg::Curve {
                label: "triangle wave".into(),
                color: "#1f77b4",
                dash: None,
                points: wave,
            },
            svg::Curve {
                label: "ReLU network".into(),
                color: "#d62728",
                dash: Some("7,5"),
                points: net_pts,
            },
        ],
        annotation: format!(
            "the network equals the wave on [-{r}, {r}] and vanishes outside (0 at x = \u{00b1}{})",
            r + 1
        ),
    };
    std::fs::write(&out, plot.render()).with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// distinguish

fn sgd_settings(args: &SgdArgs, cfg: &FileConfig) -> Result<SgdSettings> {
    Ok(SgdSettings {
        width: cfg.resolve("width", &args.width, 64)?,
        init_scale: cfg.resolve("init_scale", &args.init_scale, 1.0)?,
        learning_rate: cfg.resolve("learning_rate", &args.learning_rate, 0.05)?,
        epochs: cfg.resolve("epochs", &args.epochs, 40)?,
        batch_size: cfg.resolve("batch", &args.batch, 32)?,
    })
}

fn cmd_distinguish(args: DistinguishArgs, cfg: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let learner_name: String = cfg.resolve("learner", &args.learner, "oracle".into())?;
    let trials: u64 = cfg.resolve("trials", &args.trials, 100)?;
    let d: usize = cfg.require("d", &args.d)?;
    let default_gamma = 2.0 * (d as f64 * (d.max(2) as f64).ln()).sqrt();
    let gamma: f64 = cfg.resolve("gamma", &args.gamma, default_gamma)?;
    let sigma: f64 = cfg.resolve("sigma", &args.sigma, 1e-2)?;
    let epsilon: f64 = cfg.resolve("epsilon", &args.epsilon, 0.05)?;
    let m1: usize = cfg.resolve("m1", &args.m1, 256)?;
    let m2: usize = cfg.resolve("m2", &args.m2, required_test_samples(epsilon, 0.04)?)?;
    let beta: f64 = cfg.resolve("beta", &args.beta, admissible_beta(sigma, m1, epsilon))?;
    let seed: u64 = cfg.resolve("seed", &args.seed, 0)?;
    let out = resolve_out(out_dir, cfg.resolve("out", &args.out, PathBuf::from("distinguish.json"))?)?;

    let spec = match learner_name.as_str() {
        "oracle" => LearnerSpec::OracleWave,
        "oracle-nn" => LearnerSpec::OracleNet,
        "constant" => LearnerSpec::Constant,
        "sgd" => LearnerSpec::Sgd(sgd_settings(&args.sgd, cfg)?),
        other => return Err(usage(format!("unknown learner `{other}`"))),
    };
    let clamp = spec.default_clamp();
    let reduction = ReductionConfig {
        d,
        gamma,
        sigma,
        epsilon,
        m1,
        m2,
        beta,
        clamp,
        delta: 1.0 / 3.0,
    };
    reduction.validate()?;

    let planted = run_trials(&reduction, &spec, true, trials, seed)?;
    let null = run_trials(&reduction, &spec, false, trials, seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let completeness = verdict_rate(&planted, Verdict::ClwePlanted);
    let soundness = verdict_rate(&null, Verdict::Null);

    let mut echo = Echo::new("distinguish");
    echo.put("learner", &learner_name)
        .put("trials", trials)
        .put("seed", seed);

    #[derive(Serialize)]
    struct Report {
        config: BTreeMap<String, String>,
        reduction: ReductionConfig,
        completeness: f64,
        soundness: f64,
        planted_trials: Vec<TrialOutcome>,
        null_trials: Vec<TrialOutcome>,
    }
    write_json(
        &out,
        &Report {
            config: echo.0.clone(),
            reduction,
            completeness,
            soundness,
            planted_trials: planted,
            null_trials: null,
        },
    )?;
    println!(
        "learner {learner_name}: completeness {completeness:.3}, soundness {soundness:.3} over {trials} trials each"
    );
    println!("report written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// train

fn cmd_train(args: TrainArgs, cfg: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let d: usize = cfg.require("d", &args.d)?;
    let gamma: f64 = cfg.require("gamma", &args.gamma)?;
    let sigma: f64 = cfg.resolve("sigma", &args.sigma, 1e-2)?;
    let m: usize = cfg.resolve("m", &args.m, 4096)?;
    let eval_m: usize = cfg.resolve("eval_m", &args.eval_m, 20_000)?;
    let seed: u64 = cfg.resolve("seed", &args.seed, 0)?;
    let settings = sgd_settings(&args.sgd, cfg)?;
    let out = resolve_out(out_dir, cfg.resolve("out", &args.out, PathBuf::from("train.csv"))?)?;

    let stream = RandomStream::new(seed);
    let w: Vec<f64> = clwe_lab::random_unit_vector(d, stream.derive(0))?;
    let sampler = PeriodicNeuronSampler::new(d, gamma, w, sigma)?;
    let train_set = sampler.sample(m, stream.derive(1))?;

    let learner = SgdLearner::new(settings)?;
    let (net, curve) = match learner.fit_with_diagnostics(&train_set, stream.derive(2)) {
        Ok(result) => result,
        Err(e @ clwe_lab::Error::TrainingDiverged { .. }) => {
            println!("training outcome: {e}");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e.into()),
    };

    let mut echo = Echo::new("train");
    echo.put("d", d)
        .put("gamma", gamma)
        .put("sigma", sigma)
        .put("m", m)
        .put("eval_m", eval_m)
        .put("seed", seed)
        .put("width", settings.width)
        .put("learning_rate", settings.learning_rate)
        .put("epochs", settings.epochs)
        .put("batch", settings.batch_size)
        .put("init_scale", settings.init_scale);

    let mut text = String::new();
    for line in echo.comment_lines() {
        let _ = writeln!(text, "# {line}");
    }
    let _ = writeln!(text, "epoch,empirical_loss,edge_estimate");
    for stat in &curve {
        let _ = writeln!(
            text,
            "{},{:.16e},{:.16e}",
            stat.epoch, stat.empirical_loss, stat.edge_estimate
        );
    }
    std::fs::write(&out, text).with_context(|| format!("writing {}", out.display()))?;

    let h = clwe_lab::Hypothesis::new(move |x: &[f64]| net.eval(x).unwrap_or(f64::NAN), (-1.0, 1.0))?;
    let edge = evaluate_edge(&h, &sampler, eval_m, stream.derive(3))?;
    println!("final fresh-sample edge = {edge:.6}");
    println!("training curve written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// verify

fn cmd_verify(args: VerifyArgs, cfg: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let mc_projections: usize = cfg.resolve("mc_projections", &args.mc_projections, 200)?;
    let mc_tail: usize = cfg.resolve("mc_tail", &args.mc_tail, 100_000)?;
    let seed: u64 = cfg.resolve("seed", &args.seed, 2024)?;
    let out = resolve_out(out_dir, cfg.resolve("out", &args.out, PathBuf::from("verify.json"))?)?;

    let mut checks = run_bound_checks(BoundCheckConfig {
        mc_projections,
        mc_tail,
        seed,
    })?;
    if args.corrupt_bounds {
        for c in &mut checks {
            c.bound = -1.0;
            c.pass = false;
        }
    }

    let mut echo = Echo::new("verify");
    echo.put("mc_projections", mc_projections)
        .put("mc_tail", mc_tail)
        .put("seed", seed)
        .put("corrupt_bounds", args.corrupt_bounds);

    #[derive(Serialize)]
    struct Report {
        config: BTreeMap<String, String>,
        checks: Vec<clwe_lab::BoundCheck>,
    }
    write_json(
        &out,
        &Report {
            config: echo.0.clone(),
            checks: checks.clone(),
        },
    )?;

    let mut all_pass = true;
    for c in &checks {
        println!(
            "{:<4} {:<46} computed {:>13.6e}  bound {:>13.6e}  tol {:>9.3e}",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.computed,
            c.bound,
            c.tolerance
        );
        all_pass &= c.pass;
    }
    println!("report written to {}", out.display());
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

// ---------------------------------------------------------------------------
// params

fn cmd_params(args: ParamsArgs, cfg: &FileConfig, out_dir: &Path) -> Result<ExitCode> {
    let out = resolve_out(out_dir, cfg.resolve("out", &args.out, PathBuf::from("params.json"))?)?;
    let eta: Option<f64> = cfg.optional("eta", &args.eta)?;

    let report = if let Some(eta) = eta {
        let d: u64 = cfg.require("d", &args.d)?;
        small_noise_regime(eta, d)?
    } else {
        let n: u64 = cfg
            .require("n", &args.n)
            .map_err(|e| usage(format!("params needs --eta or --n/--d/--sigma-log2: {e}")))?;
        let d: u64 = cfg.require("d", &args.d)?;
        let sigma_log2: f64 = cfg.require("sigma_log2", &args.sigma_log2)?;
        let slack: f64 = cfg.resolve("slack", &args.slack, 1.0)?;
        let c_const: f64 = cfg.resolve("c_const", &args.c_const, 1.0)?;
        derive_parameter_chain(n, d, sigma_log2 * std::f64::consts::LN_2, slack, c_const)?
    };

    let mut echo = Echo::new("params");
    if let Some(eta) = eta {
        echo.put("eta", eta);
    }
    echo.put("n", report.n).put("d", report.d);

    #[derive(Serialize)]
    struct Artifact<'a> {
        config: BTreeMap<String, String>,
        report: &'a clwe_lab::ParamReport,
    }
    write_json(
        &out,
        &Artifact {
            config: echo.0.clone(),
            report: &report,
        },
    )?;

    println!(
        "n = {}, d = {}, ln(sigma) = {:.6}, ln(beta) = {:.6}, gamma = {:.3}",
        report.n, report.d, report.ln_sigma, report.ln_beta, report.gamma
    );
    println!(
        "ln(q) = {:.6}, ln(alpha) = {:.6}, sigma' = {:.6}, ln(gapsvp factor) = {:.6}",
        report.ln_q, report.ln_alpha, report.sigma_prime, report.log_gapsvp_factor
    );
    if let Some(eta) = &report.eta {
        println!(
            "eta = {}, delta = {}, r witness = {:.3}, log2(factor)/n^delta = {:.4}",
            eta.eta, eta.delta_exponent, eta.r_witness, eta.exponent_ratio
        );
    }
    println!("{:<4} {:<36} {:>16} {:>16}", "", "constraint", "lhs", "rhs");
    for c in &report.constraints {
        println!(
            "{:<4} {:<36} {:>16.6e} {:>16.6e}",
            if c.satisfied { "ok" } else { "FAIL" },
            c.name,
            c.lhs,
            c.rhs
        );
    }
    println!("note: {}", report.sigma_prime_note);
    println!("report written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}
