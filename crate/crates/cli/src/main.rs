use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use seisfuse::analysis::{fmt_f64, write_accuracy_csv, write_anomaly_csv, KnnDivisor};
use seisfuse::features::{sonogram, spectrogram, stft};
use seisfuse::pipeline::*;
use seisfuse::signal::{align_trigger, truncate_around_onset, Channel};
use seisfuse::{Error, Result};

#[derive(Parser)]
#[command(
    name = "seisfuse",
    version,
    about = "Multi-view diffusion maps for three-component seismic events"
)]
struct Cli {
    /// JSON run configuration; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset.
    Synth(SynthArgs),
    /// Align, extract sonovectors and write the embedding CSV.
    Embed(EmbedArgs),
    /// Leave-one-out accuracy curves over a range of K.
    Classify(ClassifyArgs),
    /// Pearson correlation of DM and PCA coordinates with event location.
    LocateEval(LocateArgs),
    /// K-NN anomaly screening.
    Anomaly(AnomalyArgs),
    /// Dump the sonogram of one event channel.
    Inspect(InspectArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    Alignment,
    Discrimination,
    Quarry,
    Location,
    Anomaly,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    scenario: Scenario,
    /// Output dataset directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of events; for discrimination the earthquake count (explosions
    /// are three times as many), for quarry the count per cluster, for
    /// anomaly the in-profile count.
    #[arg(long)]
    count: Option<usize>,
    /// Injected outliers (anomaly scenario).
    #[arg(long, default_value_t = 3)]
    outliers: usize,
}

/// Flags that override fields of the run configuration.
#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    t: Option<u32>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    bandwidth_factor: Option<f64>,
    #[arg(long)]
    n_before: Option<usize>,
    #[arg(long)]
    n_after: Option<usize>,
    #[arg(long)]
    align_channel: Option<Channel>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Io {
    /// Dataset directory holding `catalog.json`.
    #[arg(long)]
    data: PathBuf,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    io: Io,
    #[command(flatten)]
    over: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    /// Earthquake vs explosion, with class-balanced resampling trials.
    Type,
    /// Catalog cluster labels, single leave-one-out pass.
    Cluster,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long, value_enum, default_value = "type")]
    task: Task,
    /// Inclusive range `a:b`.
    #[arg(long)]
    k_range: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    resample_multiple: Option<usize>,
    /// Comma-separated methods; all seven when omitted.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    #[command(flatten)]
    over: Overrides,
}

#[derive(Args)]
struct LocateArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long)]
    channel: Option<Channel>,
    #[command(flatten)]
    over: Overrides,
}

#[derive(Args)]
struct AnomalyArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    threshold_multiple: Option<f64>,
    #[arg(long, value_enum)]
    divisor: Option<Divisor>,
    /// Method of the anomaly embedding.
    #[arg(long)]
    anomaly_method: Option<Method>,
    /// Dimension of the anomaly embedding.
    #[arg(long)]
    anomaly_d: Option<usize>,
    #[command(flatten)]
    over: Overrides,
}

#[derive(Clone, Copy, ValueEnum)]
enum Divisor {
    K,
    KMinusOne,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    io: Io,
    #[arg(long)]
    event: String,
    #[arg(long, default_value = "Z")]
    channel: Channel,
    /// Use the whole recording instead of the aligned, truncated window.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    over: Overrides,
}

fn load_config(path: Option<&Path>, over: &Overrides) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(v) = over.method {
        cfg.method = v;
    }
    if let Some(v) = over.d {
        cfg.d = v;
    }
    if let Some(v) = over.t {
        cfg.t = v;
    }
    if let Some(v) = over.gamma {
        cfg.gamma = v;
    }
    if let Some(v) = over.bandwidth_factor {
        cfg.bandwidth_factor = v;
    }
    if let Some(v) = over.n_before {
        cfg.n_before = v;
    }
    if let Some(v) = over.n_after {
        cfg.n_after = v;
    }
    if let Some(v) = over.align_channel {
        cfg.align_channel = v;
    }
    if let Some(v) = over.seed {
        cfg.seed = v;
    }
    Ok(cfg)
}

fn parse_k_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::Config(format!("K range must look like 1:15, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let (a, b): (usize, usize) = (
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    );
    if a == 0 || a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Error::Run(format!("creating {}: {e}", p.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn load_events(dir: &Path) -> Result<Vec<EventRecord>> {
    let rep = ingest(dir)?;
    for (id, e) in &rep.rejected {
        log::warn!("{id}: {e}");
    }
    log::info!(
        "loaded {} events ({} rejected, {} without waveforms)",
        rep.events.len(),
        rep.rejected.len(),
        rep.orphans.len()
    );
    Ok(rep.events)
}

fn features(dir: &Path, cfg: &RunConfig) -> Result<(Vec<EventRecord>, FeatureSet)> {
    let events = load_events(dir)?;
    let fs = prepare_features(&events, cfg)?;
    log::info!("{} events usable, {} excluded", fs.len(), fs.excluded.len());
    Ok((events, fs))
}

fn synth(a: &SynthArgs, cfg: &RunConfig) -> Result<()> {
    let spec = match a.scenario {
        Scenario::Alignment => SyntheticSpec::alignment(a.count.unwrap_or(100), a.seed),
        Scenario::Discrimination => {
            let eq = a.count.unwrap_or(150);
            SyntheticSpec::discrimination(eq, 3 * eq, a.seed)
        }
        Scenario::Quarry => SyntheticSpec::quarry(a.count.unwrap_or(60), a.seed),
        Scenario::Location => SyntheticSpec::location_drift(a.count.unwrap_or(150), a.seed),
        Scenario::Anomaly => SyntheticSpec::anomaly(a.count.unwrap_or(97), a.outliers, a.seed),
    };
    let events = synthesize(&spec, &cfg.band_table)?;
    write_dataset(&a.out, &events)?;
    log::info!("wrote {} events to {}", events.len(), a.out.display());
    Ok(())
}

fn embed(a: &EmbedArgs, cfg: &RunConfig) -> Result<()> {
    let events = load_events(&a.io.data)?;
    let (fs, mapping) = run_mapping(&events, cfg)?;
    log::info!("{} events embedded, {} excluded", fs.len(), fs.excluded.len());
    write_embedding_csv(output(a.io.out.as_deref())?, &mapping)
}

fn classify(a: &ClassifyArgs, cfg: &mut RunConfig) -> Result<()> {
    if let Some(r) = &a.k_range {
        cfg.classify.k_values = parse_k_range(r)?;
    }
    if let Some(v) = a.trials {
        cfg.classify.trials = v;
    }
    if let Some(v) = a.resample_multiple {
        cfg.classify.resample_multiple = v;
    }
    cfg.validate()?;
    let methods = if a.methods.is_empty() {
        Method::ALL.to_vec()
    } else {
        a.methods.clone()
    };
    let (events, fs) = features(&a.io.data, cfg)?;
    let points = match a.task {
        Task::Type => {
            let labels: Vec<EventType> = fs.source_index.iter().map(|&i| events[i].entry.event_type).collect();
            classification_curves(&fs, &labels, &methods, cfg)?
        }
        Task::Cluster => {
            let labels = fs
                .source_index
                .iter()
                .map(|&i| {
                    events[i]
                        .entry
                        .cluster
                        .clone()
                        .ok_or_else(|| Error::Run(format!("event {} has no cluster label", events[i].id())))
                })
                .collect::<Result<Vec<String>>>()?;
            loo_curves(&fs, &labels, &methods, cfg)?
        }
    };
    write_accuracy_csv(output(a.io.out.as_deref())?, &points)
}

fn locate(a: &LocateArgs, cfg: &RunConfig) -> Result<()> {
    let (events, fs) = features(&a.io.data, cfg)?;
    let lat: Vec<f64> = fs.source_index.iter().map(|&i| events[i].entry.lat).collect();
    let lon: Vec<f64> = fs.source_index.iter().map(|&i| events[i].entry.lon).collect();
    let (dm, pca) = location_study(&fs, &lat, &lon, a.channel.unwrap_or(cfg.location_channel), cfg)?;
    let mut out = output(a.io.out.as_deref())?;
    let write = |out: &mut dyn Write| -> io::Result<()> {
        writeln!(out, "method,pearson_lat,pearson_lon,mean,swapped")?;
        for e in [&dm, &pca] {
            writeln!(
                out,
                "{},{},{},{},{}",
                e.method,
                fmt_f64(e.pearson_lat),
                fmt_f64(e.pearson_lon),
                fmt_f64(e.mean()),
                e.swapped
            )?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::Run(format!("writing location CSV: {e}")))
}

fn anomaly(a: &AnomalyArgs, cfg: &mut RunConfig) -> Result<()> {
    if let Some(v) = a.k {
        cfg.anomaly.k = v;
    }
    if let Some(v) = a.threshold_multiple {
        cfg.anomaly.threshold_multiple = v;
    }
    if let Some(v) = a.divisor {
        cfg.anomaly.divisor = match v {
            Divisor::K => KnnDivisor::K,
            Divisor::KMinusOne => KnnDivisor::KMinusOne,
        };
    }
    if let Some(v) = a.anomaly_method {
        cfg.anomaly.method = v;
    }
    if let Some(v) = a.anomaly_d {
        cfg.anomaly.d = v;
    }
    cfg.validate()?;
    let (_, fs) = features(&a.io.data, cfg)?;
    let (_, report) = anomaly_study(&fs, cfg)?;
    log::info!(
        "{} of {} events flagged (threshold {:e})",
        report.flagged.len(),
        fs.len(),
        report.threshold
    );
    write_anomaly_csv(output(a.io.out.as_deref())?, &report, &fs.event_ids)
}

fn inspect(a: &InspectArgs, cfg: &RunConfig) -> Result<()> {
    let events = load_events(&a.io.data)?;
    let ev = events
        .iter()
        .find(|e| e.id() == a.event)
        .ok_or_else(|| Error::Run(format!("event '{}' not found or not loadable", a.event)))?;
    cfg.validate_for_rate(ev.entry.fs)?;
    let w = if a.raw {
        ev.channel(a.channel).clone()
    } else {
        let onset = align_trigger(ev.channel(cfg.align_channel), &cfg.sta_lta, &cfg.trigger_bands)?.onset_index;
        truncate_around_onset(ev.channel(a.channel), onset, cfg.n_before, cfg.n_after)?
    };
    let s = sonogram(&spectrogram(&stft(&w, &cfg.stft)?), &cfg.band_table)?;
    write_sonogram_csv(output(a.io.out.as_deref())?, &s)
}

fn run(cli: Cli) -> Result<()> {
    let path = cli.config.as_deref();
    match cli.command {
        Command::Synth(a) => synth(&a, &load_config(path, &Overrides::default())?),
        Command::Embed(a) => {
            let cfg = load_config(path, &a.over)?;
            cfg.validate()?;
            embed(&a, &cfg)
        }
        Command::Classify(a) => classify(&a, &mut load_config(path, &a.over)?),
        Command::LocateEval(a) => {
            let cfg = load_config(path, &a.over)?;
            cfg.validate()?;
            locate(&a, &cfg)
        }
        Command::Anomaly(a) => anomaly(&a, &mut load_config(path, &a.over)?),
        Command::Inspect(a) => {
            let cfg = load_config(path, &a.over)?;
            cfg.validate()?;
            inspect(&a, &cfg)
        }
    }
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_line("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
