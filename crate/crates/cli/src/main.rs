//! Command-line front end: loop responses, discrete simulations, training
//! runs, and controller sweeps.
//!
//! Exit codes: 0 success, 1 runtime failure (including divergence), 2 usage.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ctrloptim::config::ConfigFile;
use ctrloptim::report;
use ctrloptim::{idx, Error};
use ctrloptim_core::controllers::{controller_tf, ControllerConfig, ControllerKind, IirFilter};
use ctrloptim_core::data::{synthetic, Dataset, SyntheticKind};
use ctrloptim_core::lti::{
    closed_loop_system, ffnn_closed_loop_system, simulate, to_state_space, Source, TimeSeries,
};
use ctrloptim_core::metrics::{compare_response_to_curve, step_metrics, ResponseCurvePair};
use ctrloptim_core::nn::{
    build_discriminator, build_generator, train_backprop, train_forward_forward, train_gan,
    Activation, GanConfig, Mlp, TrainConfig, TrainCurve,
};
use ctrloptim_core::rng::Rng;
use ctrloptim_core::simloop::{
    cyclegan_loop, ffnn_node, gan_loop, one_node, LoopConfig, LoopKind, LoopSource,
};

#[derive(Parser)]
#[command(
    name = "ctrloptim",
    version,
    about = "Controller-style optimizers and their closed loops"
)]
struct Cli {
    /// Key=value config file; command-line flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (created if absent).
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// PRNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Step/sine responses of the continuous closed loops, as CSV + SVG.
    Respond(RespondArgs),
    /// Discrete scalar loop simulations (one-node, ffnn, gan, cyclegan).
    Simloop(SimloopArgs),
    /// Train a dense network with a chosen controller.
    #[command(subcommand)]
    Train(TrainCmd),
    /// Controllers x settings matrix with a consistency report.
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct GainArgs {
    /// Learning rate r.
    #[arg(long)]
    lr: Option<f64>,
    /// Momentum / smoothing factor.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    kp: Option<f64>,
    #[arg(long)]
    ki: Option<f64>,
    #[arg(long)]
    kd: Option<f64>,
    #[arg(long)]
    beta1: Option<f64>,
    #[arg(long)]
    beta2: Option<f64>,
    /// Frozen Adam adaption factor for transfer-function analysis.
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Fuzzy universe half-range.
    #[arg(long)]
    phi: Option<f64>,
    /// Fuzzy adjustment strength.
    #[arg(long)]
    kappa: Option<f64>,
    /// Swap the table filter for a standard half-band Butterworth.
    #[arg(long)]
    filter_normalize: bool,
}

impl GainArgs {
    fn apply(&self, kind: ControllerKind, config: &ConfigFile) -> Result<ControllerConfig, Error> {
        let mut cfg = ControllerConfig::new(kind);
        let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>, Error> {
            if flag.is_some() {
                return Ok(flag);
            }
            config.get_f64(key).map_err(Error::Format)
        };
        if let Some(v) = pick(self.lr, "lr")? {
            cfg.lr = v;
        }
        if let Some(v) = pick(self.alpha, "alpha")? {
            cfg.momentum = v;
        }
        if let Some(v) = pick(self.kp, "kp")? {
            cfg.kp = v;
        }
        if let Some(v) = pick(self.ki, "ki")? {
            cfg.ki = v;
        }
        if let Some(v) = pick(self.kd, "kd")? {
            cfg.kd = v;
        }
        if let Some(v) = pick(self.beta1, "beta1")? {
            cfg.beta1 = v;
        }
        if let Some(v) = pick(self.beta2, "beta2")? {
            cfg.beta2 = v;
        }
        if let Some(v) = pick(self.m, "m")? {
            cfg.adam_m = v;
        }
        if let Some(v) = pick(self.epsilon, "epsilon")? {
            cfg.epsilon = v;
        }
        if let Some(v) = pick(self.phi, "phi")? {
            cfg.phi = v;
        }
        if let Some(v) = pick(self.kappa, "kappa")? {
            cfg.kappa = v;
        }
        if self.filter_normalize {
            cfg.filter = match kind {
                ControllerKind::HpfSgd => IirFilter::butterworth_high_pass(),
                _ => IirFilter::butterworth_low_pass(),
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    Step,
    Sine,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RespondLoop {
    /// Unity-feedback loop around the controller.
    Cnn,
    /// Forward-forward loop: the controller sits in the feedback path and
    /// the source constant is `(2*lambda - 1)*theta_star + th`.
    Ffnn,
}

#[derive(Args)]
struct RespondArgs {
    /// Controller name, or `all` for the seven-optimizer comparison set.
    #[arg(long, default_value = "all")]
    controller: String,
    /// Include the residual-connection rule in `all`.
    #[arg(long)]
    with_rs: bool,
    /// Which closed loop to respond.
    #[arg(long = "loop", value_enum, default_value_t = RespondLoop::Cnn)]
    loop_kind: RespondLoop,
    /// Forward-forward positive portion.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    /// Forward-forward threshold.
    #[arg(long, default_value_t = 1.0)]
    th: f64,
    #[command(flatten)]
    gains: GainArgs,
    #[arg(long, value_enum, default_value_t = SourceKind::Step)]
    source: SourceKind,
    /// Source amplitude (step height or sine amplitude).
    #[arg(long)]
    amplitude: Option<f64>,
    /// Sine angular frequency.
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Target used as the step amplitude.
    #[arg(long, default_value_t = 1.0)]
    theta_star: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LoopKindArg {
    OneNode,
    Ffnn,
    Gan,
    Cyclegan,
}

impl LoopKindArg {
    fn kind(self) -> LoopKind {
        match self {
            LoopKindArg::OneNode => LoopKind::OneNode,
            LoopKindArg::Ffnn => LoopKind::Ffnn,
            LoopKindArg::Gan => LoopKind::Gan,
            LoopKindArg::Cyclegan => LoopKind::CycleGan,
        }
    }
}

#[derive(Args)]
struct SimloopArgs {
    #[arg(long, value_enum)]
    kind: LoopKindArg,
    #[arg(long, default_value = "sgd")]
    controller: String,
    #[command(flatten)]
    gains: GainArgs,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    theta_star: f64,
    /// Forward-forward positive portion.
    #[arg(long)]
    lambda: Option<f64>,
    /// Forward-forward threshold.
    #[arg(long)]
    th: Option<f64>,
    #[arg(long, value_enum)]
    source: Option<SourceKind>,
    #[arg(long)]
    amplitude: Option<f64>,
    /// Sine period in iterations.
    #[arg(long)]
    period: Option<usize>,
}

#[derive(Subcommand)]
enum TrainCmd {
    /// Backprop classifier (softmax head, label-smoothed cross-entropy).
    Backprop(TrainArgs),
    /// Forward-forward ReLU stack trained layer-locally.
    Ffnn(TrainArgs),
    /// Minimal GAN on the chosen dataset.
    Gan(GanArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DataKind {
    Mnist,
    Blobs,
    Xor,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "adam")]
    controller: String,
    #[command(flatten)]
    gains: GainArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = DataKind::Mnist)]
    data: DataKind,
    /// Dataset root (defaults to $CTRLOPTIM_DATA_DIR, then ./data).
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Cap on training rows (0 = all).
    #[arg(long, default_value_t = 0)]
    train_limit: usize,
    /// Label smoothing for the cross-entropy head.
    #[arg(long)]
    label_smoothing: Option<f64>,
    /// Forward-forward positive portion.
    #[arg(long)]
    lambda: Option<f64>,
    /// Forward-forward threshold.
    #[arg(long)]
    th: Option<f64>,
    /// Forward-forward hidden width.
    #[arg(long, default_value_t = 500)]
    width: usize,
    /// Restore the full-scale forward-forward width (2000).
    #[arg(long)]
    paper_scale: bool,
    /// Train on each of K folds instead of the plain train/test split.
    #[arg(long)]
    kfold: Option<usize>,
}

#[derive(Args)]
struct GanArgs {
    #[arg(long, default_value = "adam")]
    controller: String,
    #[command(flatten)]
    gains: GainArgs,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, value_enum, default_value_t = DataKind::Mnist)]
    data: DataKind,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    train_limit: usize,
    #[arg(long, default_value_t = 64)]
    noise_dim: usize,
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    #[arg(long, default_value_t = 4)]
    depth: usize,
    /// Write 8x8 PGM sample grids at epochs 1, 50, 100, 200.
    #[arg(long)]
    dump_samples: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated controller names (default: the comparison set).
    #[arg(long, default_value = "sgd,sgdm,adam,pid,lpf-sgd,hpf-sgd,fuzzypid")]
    controllers: String,
    #[command(flatten)]
    gains: GainArgs,
    /// One-node loop length per cell.
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    /// Also run a small training job per cell and correlate orderings.
    #[arg(long)]
    train: bool,
    #[arg(long, value_enum, default_value_t = DataKind::Blobs)]
    data: DataKind,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 2000)]
    train_limit: usize,
    /// Worker threads for sweep cells.
    #[arg(long, default_value_t = 4)]
    jobs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let seed = match cli.seed {
        Some(s) => s,
        None => config.get_u64("seed").map_err(Error::Format)?.unwrap_or(42),
    };
    report::ensure_dir(&cli.out)?;
    match &cli.cmd {
        Cmd::Respond(args) => cmd_respond(args, &config, &cli.out),
        Cmd::Simloop(args) => cmd_simloop(args, &config, &cli.out),
        Cmd::Train(which) => cmd_train(which, &config, &cli.out, seed),
        Cmd::Sweep(args) => cmd_sweep(args, &config, &cli.out, seed),
    }
}

fn parse_controllers(list: &str, with_rs: bool) -> Result<Vec<ControllerKind>, Error> {
    let mut kinds = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if token.eq_ignore_ascii_case("all") {
            kinds.extend(ControllerKind::COMPARISON_SET);
            if with_rs {
                kinds.push(ControllerKind::RsSgd);
            }
        } else {
            kinds.push(
                ControllerKind::parse(token)
                    .ok_or_else(|| Error::Format(format!("unknown controller `{token}`")))?,
            );
        }
    }
    if kinds.is_empty() {
        return Err(Error::Format("no controller selected".into()));
    }
    Ok(kinds)
}

fn cmd_respond(args: &RespondArgs, config: &ConfigFile, out: &Path) -> Result<(), Error> {
    let kinds = parse_controllers(&args.controller, args.with_rs)?;
    let dt = args
        .dt
        .or(config.get_f64("dt").map_err(Error::Format)?)
        .unwrap_or(1e-3);
    let horizon = args
        .horizon
        .or(config.get_f64("horizon").map_err(Error::Format)?)
        .unwrap_or(20.0);
    // The forward-forward loop folds its hyperparameters into the source.
    let default_amplitude = match args.loop_kind {
        RespondLoop::Cnn => args.theta_star,
        RespondLoop::Ffnn => (2.0 * args.lambda - 1.0) * args.theta_star + args.th,
    };
    let amplitude = args.amplitude.unwrap_or(default_amplitude);
    let source = match args.source {
        SourceKind::Step => Source::Step(amplitude),
        SourceKind::Sine => Source::Sine {
            amplitude,
            omega: args.omega,
        },
    };
    let source_name = match args.source {
        SourceKind::Step => "step",
        SourceKind::Sine => "sine",
    };

    let mut traces = Vec::new();
    for kind in &kinds {
        let cfg = args.gains.apply(*kind, config)?;
        let ctf = controller_tf(&cfg)?;
        if ctf.linearized_fuzzy {
            println!(
                "note: fuzzy gains vary at runtime; response uses the base-gain linearization"
            );
        }
        let sys = match args.loop_kind {
            RespondLoop::Cnn => closed_loop_system(&ctf.tf)?,
            RespondLoop::Ffnn => ffnn_closed_loop_system(&ctf.tf)?,
        };
        let ss = to_state_space(&sys)?;
        let mut trace = simulate(&ss, source, dt, horizon)?;
        trace.label = kind.name().to_string();
        let m = step_metrics(&trace, args.theta_star)?;
        println!(
            "{:9} rise={:.4} overshoot={:.2}% settling={:.4} final={:.6} sse={:.6}{}",
            kind.name(),
            m.rise_time,
            m.overshoot_pct,
            m.settling_time,
            m.final_value,
            m.steady_state_error,
            if m.settled { "" } else { " (unsettled)" },
        );
        let csv_name = if kinds.len() == 1 {
            format!("{source_name}.csv")
        } else {
            format!("{source_name}_{}.csv", kind.name())
        };
        report::write_timeseries_csv(&out.join(csv_name), &trace)?;
        traces.push(trace);
    }
    report::write_traces_svg(&out.join(format!("{source_name}.svg")), &traces)?;
    Ok(())
}

fn loop_config(args: &SimloopArgs, config: &ConfigFile) -> Result<LoopConfig, Error> {
    let kind = ControllerKind::parse(&args.controller)
        .ok_or_else(|| Error::Format(format!("unknown controller `{}`", args.controller)))?;
    let ctrl = args.gains.apply(kind, config)?;
    let mut cfg = LoopConfig::new(ctrl);
    cfg.theta_star = args.theta_star;
    if let Some(it) = args.iterations.or(config
        .get_u64("iterations")
        .map_err(Error::Format)?
        .map(|v| v as usize))
    {
        cfg.iterations = it;
    }
    if let Some(l) = args
        .lambda
        .or(config.get_f64("lambda").map_err(Error::Format)?)
    {
        cfg.lambda = l;
    }
    if let Some(t) = args.th.or(config.get_f64("th").map_err(Error::Format)?) {
        cfg.th = t;
    }
    let amplitude = args.amplitude.unwrap_or(1.0);
    let period = args.period.unwrap_or(200);
    cfg.source = match args.source {
        Some(SourceKind::Step) => LoopSource::Step { amplitude },
        Some(SourceKind::Sine) => LoopSource::Sine { amplitude, period },
        None => match args.kind.kind() {
            // Classification-style loops default to a step, generation to a sine.
            LoopKind::OneNode | LoopKind::Ffnn => LoopSource::Step { amplitude },
            LoopKind::Gan | LoopKind::CycleGan => LoopSource::Sine { amplitude, period },
        },
    };
    Ok(cfg)
}

fn cmd_simloop(args: &SimloopArgs, config: &ConfigFile, out: &Path) -> Result<(), Error> {
    let cfg = loop_config(args, config)?;
    let kind = args.kind.kind();
    let traces: Vec<TimeSeries> = match kind {
        LoopKind::OneNode => vec![one_node(&cfg)?],
        LoopKind::Ffnn => vec![ffnn_node(&cfg)?],
        LoopKind::Gan => {
            let (g, d) = gan_loop(&cfg)?;
            vec![g, d]
        }
        LoopKind::CycleGan => cyclegan_loop(&cfg)?.into(),
    };
    let kind_name = match kind {
        LoopKind::OneNode => "one-node",
        LoopKind::Ffnn => "ffnn",
        LoopKind::Gan => "gan",
        LoopKind::CycleGan => "cyclegan",
    };
    for trace in &traces {
        let m = step_metrics(trace, cfg.theta_star)?;
        println!(
            "{:16} rise={:.1} overshoot={:.2}% settling={:.1} final={:.6}{}",
            trace.label,
            m.rise_time,
            m.overshoot_pct,
            m.settling_time,
            m.final_value,
            if m.settled { "" } else { " (unsettled)" },
        );
        report::write_timeseries_csv(&out.join(format!("{kind_name}_{}.csv", trace.label)), trace)?;
    }
    report::write_traces_svg(&out.join(format!("{kind_name}.svg")), &traces)?;
    Ok(())
}

fn load_data(
    kind: DataKind,
    data_dir: Option<&Path>,
    train_limit: usize,
    seed: u64,
) -> Result<(Dataset, Dataset), Error> {
    let (train, test) = match kind {
        DataKind::Mnist => idx::load_mnist(&idx::data_dir(data_dir))?,
        DataKind::Blobs => (
            synthetic(SyntheticKind::blobs(), 2000, seed)?,
            synthetic(SyntheticKind::blobs(), 500, seed ^ 1)?,
        ),
        DataKind::Xor => (
            synthetic(SyntheticKind::Xor { noise: 0.05 }, 2000, seed)?,
            synthetic(SyntheticKind::Xor { noise: 0.05 }, 500, seed ^ 1)?,
        ),
    };
    let train = if train_limit > 0 && train_limit < train.len() {
        train.head(train_limit, train.name.clone())
    } else {
        train
    };
    Ok((train, test))
}

fn backprop_net(width: usize, seed: u64) -> Result<Mlp, Error> {
    let mut rng = Rng::new(seed);
    Ok(Mlp::new(
        &[width, 256, 128, 10],
        &[Activation::Relu, Activation::Relu, Activation::Softmax],
        &mut rng,
    )?)
}

fn train_config(
    args: &TrainArgs,
    config: &ConfigFile,
    seed: u64,
    default_epochs: usize,
) -> Result<TrainConfig, Error> {
    let kind = ControllerKind::parse(&args.controller)
        .ok_or_else(|| Error::Format(format!("unknown controller `{}`", args.controller)))?;
    let mut cfg = TrainConfig::new(args.gains.apply(kind, config)?);
    cfg.seed = seed;
    cfg.epochs = args
        .epochs
        .or(config
            .get_u64("epochs")
            .map_err(Error::Format)?
            .map(|v| v as usize))
        .unwrap_or(default_epochs);
    cfg.batch_size = args
        .batch_size
        .or(config
            .get_u64("batch_size")
            .map_err(Error::Format)?
            .map(|v| v as usize))
        .unwrap_or(100);
    if let Some(ls) = args
        .label_smoothing
        .or(config.get_f64("label_smoothing").map_err(Error::Format)?)
    {
        cfg.label_smoothing = ls;
    }
    if let Some(l) = args
        .lambda
        .or(config.get_f64("lambda").map_err(Error::Format)?)
    {
        cfg.lambda = l;
    }
    if let Some(t) = args.th.or(config.get_f64("th").map_err(Error::Format)?) {
        cfg.th = t;
    }
    Ok(cfg)
}

fn summarize(label: &str, curve: &TrainCurve) {
    let last = curve.epochs().saturating_sub(1);
    println!(
        "{label}: epochs={} train_loss={:.4} train_acc={:.2}% test_acc={:.2}% test_err={:.2}%",
        curve.epochs(),
        curve.train_loss[last],
        curve.train_acc[last] * 100.0,
        curve.test_acc[last] * 100.0,
        (1.0 - curve.test_acc[last]) * 100.0,
    );
}

fn cmd_train(which: &TrainCmd, config: &ConfigFile, out: &Path, seed: u64) -> Result<(), Error> {
    match which {
        TrainCmd::Backprop(args) => {
            let cfg = train_config(args, config, seed, 40)?;
            let (train, test) =
                load_data(args.data, args.data_dir.as_deref(), args.train_limit, seed)?;
            let runs: Vec<(Dataset, Dataset, String)> = match args.kfold {
                None => vec![(train, test, "curve".to_string())],
                Some(k) => {
                    let folds = ctrloptim_core::data::kfold(&train, k, seed)?;
                    folds
                        .into_iter()
                        .enumerate()
                        .map(|(i, (tr, te))| {
                            (
                                train.subset(&tr, format!("fold{i}-train")),
                                train.subset(&te, format!("fold{i}-test")),
                                format!("curve_fold{i}"),
                            )
                        })
                        .collect()
                }
            };
            for (train, test, name) in runs {
                let mut mlp = backprop_net(train.width(), cfg.seed)?;
                let curve = train_backprop(&mut mlp, &train, &test, &cfg)?;
                summarize(&format!("backprop/{}", cfg.controller.kind.name()), &curve);
                report::write_train_curve_csv(&out.join(format!("{name}.csv")), &curve)?;
            }
            Ok(())
        }
        TrainCmd::Ffnn(args) => {
            let cfg = train_config(args, config, seed, 60)?;
            let width = if args.paper_scale { 2000 } else { args.width };
            let (train, test) =
                load_data(args.data, args.data_dir.as_deref(), args.train_limit, seed)?;
            let mut rng = Rng::new(cfg.seed);
            let sizes = [train.width(), width, width, width, width];
            let acts = [Activation::Relu; 4];
            let mut mlp = Mlp::new(&sizes, &acts, &mut rng)?;
            let curve = train_forward_forward(&mut mlp, &train, &test, &cfg)?;
            summarize(&format!("ffnn/{}", cfg.controller.kind.name()), &curve);
            report::write_train_curve_csv(&out.join("curve.csv"), &curve)?;
            Ok(())
        }
        TrainCmd::Gan(args) => {
            let kind = ControllerKind::parse(&args.controller).ok_or_else(|| {
                Error::Format(format!("unknown controller `{}`", args.controller))
            })?;
            // The generation-task default rate is 2e-4 unless overridden.
            let mut cfg = GanConfig::new(args.gains.apply(kind, config)?);
            if let Some(lr) = args
                .gains
                .lr
                .or(config.get_f64("lr").map_err(Error::Format)?)
            {
                cfg.controller.lr = lr;
            }
            cfg.seed = seed;
            if let Some(e) = args.epochs.or(config
                .get_u64("epochs")
                .map_err(Error::Format)?
                .map(|v| v as usize))
            {
                cfg.epochs = e;
            }
            if let Some(b) = args.batch_size.or(config
                .get_u64("batch_size")
                .map_err(Error::Format)?
                .map(|v| v as usize))
            {
                cfg.batch_size = b;
            }
            cfg.noise_dim = args.noise_dim;
            cfg.hidden = args.hidden;
            cfg.depth = args.depth;
            let (train, _) =
                load_data(args.data, args.data_dir.as_deref(), args.train_limit, seed)?;
            let mut rng = Rng::new(cfg.seed);
            let mut generator = build_generator(&cfg, train.width(), &mut rng)?;
            let mut discriminator = build_discriminator(&cfg, train.width(), &mut rng)?;
            let outcome = train_gan(&mut generator, &mut discriminator, &train, &cfg)?;
            let last = outcome.g_loss.len() - 1;
            println!(
                "gan/{}: epochs={} g_loss={:.4} d_loss={:.4} d_on_fake={:.3}",
                kind.name(),
                outcome.g_loss.len(),
                outcome.g_loss[last],
                outcome.d_loss[last],
                outcome.d_on_fake[last],
            );
            let mut csv = String::from("epoch,g_loss,d_loss,d_on_fake\n");
            for i in 0..outcome.g_loss.len() {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    i + 1,
                    ctrloptim_core::fmt::fmt_g(outcome.g_loss[i], 9),
                    ctrloptim_core::fmt::fmt_g(outcome.d_loss[i], 9),
                    ctrloptim_core::fmt::fmt_g(outcome.d_on_fake[i], 9),
                ));
            }
            std::fs::write(out.join("gan_curve.csv"), csv)?;
            if args.dump_samples {
                for dump in &outcome.dumps {
                    report::write_pgm_grid(
                        &out.join(format!("samples_epoch{:03}.pgm", dump.epoch)),
                        dump,
                    )?;
                }
            }
            Ok(())
        }
    }
}

fn fnv1a(text: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for b in text.bytes() {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

struct SweepCell {
    index: usize,
    kind: ControllerKind,
    cfg: ControllerConfig,
    dir: PathBuf,
}

struct SweepResult {
    kind: ControllerKind,
    rise: f64,
    overshoot: f64,
    settling: f64,
    final_value: f64,
    response: TimeSeries,
    curve: Option<TrainCurve>,
    error: Option<String>,
}

fn cmd_sweep(args: &SweepArgs, config: &ConfigFile, out: &Path, seed: u64) -> Result<(), Error> {
    let kinds = parse_controllers(&args.controllers, false)?;
    let jobs = args.jobs.max(1);

    let mut queue = VecDeque::new();
    for (index, kind) in kinds.iter().enumerate() {
        let cfg = args.gains.apply(*kind, config)?;
        let tag = format!(
            "lr={};alpha={};kp={};ki={};kd={};b1={};b2={};it={}",
            cfg.lr, cfg.momentum, cfg.kp, cfg.ki, cfg.kd, cfg.beta1, cfg.beta2, args.iterations
        );
        let dir = out.join(format!("{}_{:08x}", kind.name(), fnv1a(&tag) as u32));
        report::ensure_dir(&dir)?;
        queue.push_back(SweepCell {
            index,
            kind: *kind,
            cfg,
            dir,
        });
    }

    let train_sets = if args.train {
        Some(load_data(
            args.data,
            args.data_dir.as_deref(),
            args.train_limit,
            seed,
        )?)
    } else {
        None
    };

    let queue = Mutex::new(queue);
    let results: Vec<Mutex<Option<SweepResult>>> = kinds.iter().map(|_| Mutex::new(None)).collect();

    std::thread::scope(|scope| {
        for _ in 0..jobs.min(kinds.len()) {
            scope.spawn(|| loop {
                let cell = match queue.lock().unwrap().pop_front() {
                    Some(c) => c,
                    None => break,
                };
                let result = run_sweep_cell(&cell, args, train_sets.as_ref(), seed);
                *results[cell.index].lock().unwrap() = Some(result);
            });
        }
    });

    let mut csv = String::from(
        "controller,rise_time,overshoot_pct,settling_time,final_value,final_test_acc,epochs_to_90pct,error\n",
    );
    let mut pairs = Vec::new();
    for slot in &results {
        let r = slot.lock().unwrap().take().expect("every cell ran");
        let (acc, epochs_to) = match &r.curve {
            Some(curve) => {
                let acc = *curve.test_acc.last().unwrap_or(&f64::NAN);
                (format!("{acc:.4}"), {
                    let e = ctrloptim_core::metrics::epochs_to_fraction(curve, 0.9);
                    format!("{e}")
                })
            }
            None => (String::new(), String::new()),
        };
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.kind.name(),
            ctrloptim_core::fmt::fmt_g(r.rise, 9),
            ctrloptim_core::fmt::fmt_g(r.overshoot, 9),
            ctrloptim_core::fmt::fmt_g(r.settling, 9),
            ctrloptim_core::fmt::fmt_g(r.final_value, 9),
            acc,
            epochs_to,
            r.error.as_deref().unwrap_or(""),
        ));
        if let Some(curve) = r.curve {
            pairs.push(ResponseCurvePair {
                label: r.kind.name().to_string(),
                response: r.response,
                curve,
            });
        }
    }
    std::fs::write(out.join("sweep.csv"), &csv)?;
    print!("{csv}");

    if pairs.len() >= 2 {
        let report = compare_response_to_curve(&pairs)?;
        let mut text = String::from("controller,rise_time,epochs_to_90pct\n");
        for e in &report.entries {
            text.push_str(&format!(
                "{},{},{}\n",
                e.label, e.rise_time, e.epochs_to_target
            ));
        }
        text.push_str(&format!("kendall_tau,{:.4}\n", report.tau));
        std::fs::write(out.join("consistency.csv"), &text)?;
        println!("kendall tau (sim rise vs epochs-to-90%): {:.4}", report.tau);
    }
    Ok(())
}

fn run_sweep_cell(
    cell: &SweepCell,
    args: &SweepArgs,
    train_sets: Option<&(Dataset, Dataset)>,
    seed: u64,
) -> SweepResult {
    let mut loop_cfg = LoopConfig::new(cell.cfg.clone());
    loop_cfg.iterations = args.iterations;
    loop_cfg.source = LoopSource::Step { amplitude: 1.0 };

    let mut result = SweepResult {
        kind: cell.kind,
        rise: f64::NAN,
        overshoot: f64::NAN,
        settling: f64::NAN,
        final_value: f64::NAN,
        response: TimeSeries::new(1.0, vec![0.0, 0.0], cell.kind.name()).expect("static"),
        curve: None,
        error: None,
    };

    match one_node(&loop_cfg) {
        Ok(trace) => {
            if let Ok(m) = step_metrics(&trace, 1.0) {
                result.rise = m.rise_time;
                result.overshoot = m.overshoot_pct;
                result.settling = m.settling_time;
                result.final_value = m.final_value;
            }
            let _ = report::write_timeseries_csv(&cell.dir.join("one-node.csv"), &trace);
            result.response = trace;
        }
        Err(e) => {
            result.error = Some(e.to_string());
            return result;
        }
    }

    if let Some((train, test)) = train_sets {
        let mut cfg = TrainConfig::new(cell.cfg.clone());
        cfg.seed = seed;
        cfg.epochs = args.epochs;
        match backprop_net(train.width(), seed)
            .and_then(|mut mlp| Ok(train_backprop(&mut mlp, train, test, &cfg)?))
        {
            Ok(curve) => {
                let _ = report::write_train_curve_csv(&cell.dir.join("curve.csv"), &curve);
                result.curve = Some(curve);
            }
            Err(e) => result.error = Some(e.to_string()),
        }
    }
    result
}
