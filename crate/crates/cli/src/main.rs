use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use renewal_core::detection::MIN_CONVERGED_EVENTS;
use renewal_core::synth::{
    BaseProcess, ClusterParams, GeneratorSpec, InjectAmount, PeriodicOverlay,
};
use renewal_core::{
    analyze, detect_periodic, downsample, inter_arrivals, parse_stream, EventStream, GroupSize,
    InterArrivals, ZoneThresholds,
};

mod config;

use config::{FileConfig, FlagConfig, RunConfig, SEED_ENV};

#[derive(Parser, Debug)]
#[command(name = "renewal", version, about = "Renewal-density analysis of event timestamp logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Both renewal-density estimates, their difference and a summary
    Analyze(InputArgs),
    /// Periodic-event test; exits with 2 when an anomaly is detected
    Detect(InputArgs),
    /// Correlation summary (maximum of the cumulative difference and zone)
    Characterize(InputArgs),
    /// Write a synthetic stream and its label sidecar
    Simulate(SimulateArgs),
    /// Group consecutive inter-arrivals at random and write the shorter log
    Downsample(InputArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Maximum partial-sum order (default min(1000, m/10))
    #[arg(long)]
    k: Option<usize>,
    /// Bin width in seconds (default: cost-minimizing width)
    #[arg(long)]
    delta: Option<f64>,
    /// Number of sub-densities
    #[arg(long = "n-sub")]
    n_sub: Option<usize>,
    /// Smoothing half-window in bins (default N_bins/2)
    #[arg(long = "half-window")]
    half_window: Option<usize>,
    /// Trimmed-mean fraction removed from each end
    #[arg(long)]
    trim: Option<f64>,
    /// Probability of false alarm
    #[arg(long = "p-fa")]
    p_fa: Option<f64>,
    /// RNG seed (falls back to RS_SEED, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Zone thresholds as LOW,HIGH
    #[arg(long)]
    thresholds: Option<ZoneThresholds>,
    /// Drop bin 0 before detection
    #[arg(long = "exclude-origin-bin")]
    exclude_origin_bin: bool,
    /// Downsample inter-arrivals in random groups of MIN:MAX
    #[arg(long)]
    downsample: Option<GroupSize>,
    /// Directory for output files
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    /// TOML file with default settings; flags take precedence
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let flags = FlagConfig {
            k: self.k,
            delta: self.delta,
            n_sub: self.n_sub,
            half_window: self.half_window,
            trim: self.trim,
            p_fa: self.p_fa,
            seed: self.seed,
            thresholds: self.thresholds,
            exclude_origin_bin: self.exclude_origin_bin,
            downsample: self.downsample,
        };
        RunConfig::resolve(&flags, &file, std::env::var(SEED_ENV).ok())
    }
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Event log, one timestamp per line ("-" for stdin)
    input: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Kind {
    Poisson,
    Cluster,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// JSON generator spec; replaces the generator flags below
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "poisson")]
    kind: Kind,
    /// Number of background events
    #[arg(long, default_value_t = 100_000)]
    m: usize,
    /// Mean gap of the Poisson process, seconds
    #[arg(long = "mean-gap", default_value_t = 2.0)]
    mean_gap: f64,
    /// Mean time between cluster triggers, seconds
    #[arg(long = "trigger-mean", default_value_t = ClusterParams::default().trigger_mean)]
    trigger_mean: f64,
    /// Mean events per cluster burst
    #[arg(long = "burst-size", default_value_t = ClusterParams::default().mean_burst_size)]
    burst_size: f64,
    /// Mean gap inside a burst, seconds
    #[arg(long = "intra-gap", default_value_t = ClusterParams::default().intra_gap_mean)]
    intra_gap: f64,
    /// Overlay a periodic train with this period, seconds
    #[arg(long)]
    period: Option<f64>,
    /// Uniform jitter of periodic events, ± seconds
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Share of the merged stream that is periodic
    #[arg(long, conflicts_with = "count")]
    fraction: Option<f64>,
    /// Number of periodic events
    #[arg(long)]
    count: Option<usize>,
    /// Event log to write (labels go to <out>.labels.csv)
    #[arg(long, conflicts_with = "out_dir")]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).context("reading stdin")?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn load(args: &InputArgs, cfg: &RunConfig) -> Result<(EventStream, InterArrivals)> {
    let stream = parse_stream(&read_input(&args.input)?)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let mut gaps = inter_arrivals(&stream)?;
    if let Some(groups) = cfg.downsample {
        gaps = downsample(&gaps, groups, cfg.seed)?;
    }
    Ok((stream, gaps))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn out_dir(common: &Common) -> Result<PathBuf> {
    let dir = common.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn emit(text: &str) -> Result<()> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e).context("writing stdout"),
        _ => Ok(()),
    }
}

fn cmd_analyze(args: &InputArgs) -> Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let (stream, gaps) = load(args, &cfg)?;
    let analysis = analyze(&gaps, &cfg.estimation, cfg.thresholds)?;
    let dir = out_dir(&args.common)?;
    write_file(&dir, "rd_empirical.csv", &analysis.pair.empirical.to_csv())?;
    write_file(&dir, "rd_convolution.csv", &analysis.pair.convolution.to_csv())?;
    write_file(&dir, "e.csv", &analysis.curves.to_csv())?;
    let summary = to_json(&analysis.summary(stream.len()));
    write_file(&dir, "summary.json", &summary)?;
    emit(&summary)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect(args: &InputArgs) -> Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let (stream, gaps) = load(args, &cfg)?;
    if stream.len() < MIN_CONVERGED_EVENTS {
        eprintln!(
            "warning: {} events is below {MIN_CONVERGED_EVENTS}; histograms may not have converged",
            stream.len()
        );
    }
    let (_, report) = detect_periodic(&gaps, &cfg.estimation, &cfg.detection)?;
    let json = to_json(&report);
    if args.common.out_dir.is_some() {
        write_file(&out_dir(&args.common)?, "detection.json", &json)?;
    }
    emit(&json)?;
    Ok(if report.detected {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_characterize(args: &InputArgs) -> Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let (_, gaps) = load(args, &cfg)?;
    let analysis = analyze(&gaps, &cfg.estimation, cfg.thresholds)?;
    let json = to_json(&analysis.result);
    if args.common.out_dir.is_some() {
        let dir = out_dir(&args.common)?;
        write_file(&dir, "e.csv", &analysis.curves.to_csv())?;
        write_file(&dir, "characterization.json", &json)?;
    }
    emit(&json)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_downsample(args: &InputArgs) -> Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let groups = cfg
        .downsample
        .context("downsample needs --downsample MIN:MAX (or a config entry)")?;
    let stream = parse_stream(&read_input(&args.input)?)
        .with_context(|| format!("parsing {}", args.input.display()))?;
    let gaps = downsample(&inter_arrivals(&stream)?, groups, cfg.seed)?;
    let mut t = stream.times()[0];
    let mut times = vec![t];
    for &g in gaps.values() {
        t += g as i64;
        times.push(t);
    }
    let log = EventStream::from_times(times)?.to_log_string();
    match &args.common.out_dir {
        Some(_) => write_file(&out_dir(&args.common)?, "downsampled.log", &log)?,
        None => emit(&log)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate_spec(args: &SimulateArgs, seed: u64) -> Result<GeneratorSpec> {
    if let Some(path) = &args.spec {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()));
    }
    let base = match args.kind {
        Kind::Poisson => BaseProcess::Poisson {
            mean_gap: args.mean_gap,
        },
        Kind::Cluster => BaseProcess::Cluster(ClusterParams {
            trigger_mean: args.trigger_mean,
            mean_burst_size: args.burst_size,
            intra_gap_mean: args.intra_gap,
        }),
    };
    let overlay = match args.period {
        Some(period) => {
            let amount = match (args.fraction, args.count) {
                (Some(f), _) => InjectAmount::Fraction(f),
                (None, Some(n)) => InjectAmount::Count(n),
                (None, None) => anyhow::bail!("--period needs --fraction or --count"),
            };
            Some(PeriodicOverlay {
                period,
                jitter: args.jitter,
                amount,
            })
        }
        None => None,
    };
    Ok(GeneratorSpec {
        base,
        m: args.m,
        seed,
        overlay,
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let cfg = args.common.resolve()?;
    let spec = simulate_spec(args, cfg.seed)?;
    let labeled = spec.generate()?;
    let log = labeled.stream()?.to_log_string();
    let (log_path, labels_path) = match &args.out {
        Some(path) => {
            let mut labels = path.clone().into_os_string();
            labels.push(".labels.csv");
            (path.clone(), PathBuf::from(labels))
        }
        None => {
            let dir = out_dir(&args.common)?;
            (dir.join("events.log"), dir.join("labels.csv"))
        }
    };
    std::fs::write(&log_path, log).with_context(|| format!("writing {}", log_path.display()))?;
    std::fs::write(&labels_path, labeled.labels_csv())
        .with_context(|| format!("writing {}", labels_path.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Detect(a) => cmd_detect(a),
        Command::Characterize(a) => cmd_characterize(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Downsample(a) => cmd_downsample(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            eprintln!("{first}");
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
