//! matterlens: command-line pipelines over the core library.
//!
//! Every subcommand reads and writes plain files, so stages can be chained,
//! inspected, and re-run in isolation. Outputs of a failed invocation are
//! removed. Exit codes: 0 success, 2 usage error, 3 data error.

mod repro;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use matterlens_core::eval::{
    evaluate_devices, evaluate_labels, reports_csv, robustness_sweep, summarize_sweep,
    sweep_csv, PerturbKind, Subset,
};
use matterlens_core::fingerprint::{classify_trace, DevicePrediction, FingerprintDb};
use matterlens_core::ingest::{
    apply_len_offset, dedup_retransmissions, detect_link_type, parse_capture, read_trace,
    write_trace, LinkType,
};
use matterlens_core::label::{label_trace, read_labeled_trace, write_labeled_trace, RuleSet};
use matterlens_core::model::{suggest_controller, DeviceType, RoleMap};
use matterlens_core::perturb::{self, ComposeOrder, PadStrategy, PerturbationSpec};
use matterlens_core::synth::{builtin_scenario, generate_merged, ScenarioConfig, TruthData};
use matterlens_core::DEFAULT_WINDOW_SECS;

const SEED_ENV: &str = "MATTERLENS_SEED";

#[derive(Parser)]
#[command(name = "matterlens", version, about = "Traffic-metadata analysis for Matter smart-home networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a PCAP/PCAPNG capture into a JSONL trace.
    Ingest(IngestArgs),
    /// Assign an interaction label to every packet of a trace.
    Label(LabelArgs),
    /// Classify device types per device-day from a labeled trace.
    Fingerprint(FingerprintArgs),
    /// Generate a synthetic trace with ground truth.
    Synth(SynthArgs),
    /// Inject loss, delay, or padding into a trace.
    Perturb(PerturbArgs),
    /// Score predictions against ground truth.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Run a loss or delay robustness sweep on a scenario.
    Sweep(SweepArgs),
    /// One-shot reproduction of the full experiment set.
    Repro(repro::ReproArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum LinkTypeArg {
    Auto,
    Ethernet,
    RawIpv6,
}

#[derive(Args)]
struct IngestArgs {
    /// Capture file (PCAP or PCAPNG).
    #[arg(long)]
    input: PathBuf,
    /// Output trace (line-delimited JSON).
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    link_type: LinkTypeArg,
    /// Keep retransmitted packets instead of deduplicating them.
    #[arg(long)]
    no_dedup: bool,
    /// Do not store raw payload octets in the trace.
    #[arg(long)]
    drop_payload: bool,
    /// Shift every payload length by this many bytes (recalibration knob).
    #[arg(long, default_value_t = 0)]
    len_offset: i64,
    /// Print a role-map suggestion (most-connected endpoint) to stderr.
    #[arg(long)]
    suggest_roles: bool,
}

#[derive(Args)]
struct LabelArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    roles: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Rule thresholds file; defaults are built in.
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECS)]
    window_secs: f64,
}

#[derive(Args)]
struct FingerprintArgs {
    /// Labeled trace.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    roles: PathBuf,
    /// Output predictions (JSON array of device-day classifications).
    #[arg(long)]
    output: PathBuf,
    /// Fingerprint database file; the built-in database is the default.
    #[arg(long)]
    fingerprints: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECS)]
    window_secs: f64,
    #[arg(long, default_value_t = 0)]
    tz_offset_secs: i64,
}

#[derive(Args)]
struct SynthArgs {
    /// Built-in scenario name: exp1, exp2, d3, or mixed.
    #[arg(long, conflicts_with = "config")]
    scenario: Option<String>,
    /// Scenario config file (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory receiving trace.jsonl, truth.json, and roles.json.
    #[arg(long)]
    out_dir: PathBuf,
    /// Seed; falls back to MATTERLENS_SEED, then 42.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated days (built-in scenarios only).
    #[arg(long, default_value_t = 500)]
    days: u32,
}

#[derive(Args)]
struct PerturbArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Fraction of packets removed.
    #[arg(long, default_value_t = 0.0)]
    loss: f64,
    /// Fraction of packets delayed.
    #[arg(long, default_value_t = 0.0)]
    delay_frac: f64,
    /// Delay applied to selected packets, seconds.
    #[arg(long, default_value_t = perturb::DEFAULT_DELAY_SECS)]
    delay_secs: f64,
    /// Padding: "none", "uniform:<max extra bytes>", or "bucket:<size>".
    #[arg(long, default_value = "none")]
    pad: String,
    #[arg(long)]
    seed: Option<u64>,
    /// Composition order when both loss and delay are requested.
    #[arg(long, value_enum, default_value = "loss-delay")]
    order: OrderArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    LossDelay,
    DelayLoss,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Compare a labeled trace against per-packet ground truth.
    Labels(EvalLabelsArgs),
    /// Compare device-day predictions against ground truth.
    Devices(EvalDevicesArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SubsetArg {
    All,
    Unusual,
    Both,
}

#[derive(Args)]
struct EvalLabelsArgs {
    /// Labeled trace with predictions.
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth file produced by synth.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, value_enum, default_value = "both")]
    subset: SubsetArg,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Full reports with confusion matrices.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct EvalDevicesArgs {
    /// Predictions file produced by fingerprint.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Loss,
    Delay,
}

#[derive(Args)]
struct SweepArgs {
    /// Built-in scenario name (exp1, exp2, d3, mixed) or config file path.
    #[arg(long, default_value = "mixed")]
    scenario: String,
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Comma-separated perturbation levels as fractions.
    #[arg(long, default_value = "0.05,0.1,0.25,0.5", value_delimiter = ',')]
    levels: Vec<f64>,
    /// Comma-separated seeds, one generated trace per seed.
    #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    rules: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_WINDOW_SECS)]
    window_secs: f64,
    #[arg(long, default_value_t = 500)]
    days: u32,
}

/// Tracks files created by the running command so a failure leaves nothing
/// half-written behind.
#[derive(Default)]
pub struct OutputGuard {
    paths: Vec<PathBuf>,
    disarmed: bool,
}

impl OutputGuard {
    pub fn track(&mut self, path: &Path) {
        self.paths.push(path.to_path_buf());
    }

    pub fn disarm(&mut self) {
        self.disarmed = true;
    }
}

impl Drop for OutputGuard {
    fn drop(&mut self) {
        if !self.disarmed {
            for path in &self.paths {
                let _ = std::fs::remove_file(path);
            }
        }
    }
}

pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV) {
        Ok(text) => text
            .parse::<u64>()
            .with_context(|| format!("{SEED_ENV} must be an unsigned integer, got {text:?}")),
        Err(_) => Ok(42),
    }
}

fn load_rules(path: &Option<PathBuf>) -> Result<RuleSet> {
    match path {
        Some(p) => Ok(RuleSet::from_file(p)?),
        None => Ok(RuleSet::default()),
    }
}

fn parse_pad(text: &str) -> Result<PadStrategy> {
    if text == "none" {
        return Ok(PadStrategy::None);
    }
    let (kind, value) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("pad must be none, uniform:<n>, or bucket:<n>, got {text:?}"))?;
    let n: u32 = value
        .parse()
        .with_context(|| format!("bad pad parameter {value:?}"))?;
    match kind {
        "uniform" => Ok(PadStrategy::UniformRandom { max_extra: n }),
        "bucket" => Ok(PadStrategy::FixedBucket { bucket: n }),
        _ => bail!("unknown pad strategy {kind:?}"),
    }
}

fn load_scenarios(name_or_path: &str, seed: u64, days: u32) -> Result<Vec<ScenarioConfig>> {
    if let Some(configs) = builtin_scenario(name_or_path, seed, days) {
        return Ok(configs);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        let mut config = ScenarioConfig::from_file(path)?;
        config.seed = seed;
        return Ok(vec![config]);
    }
    bail!("unknown scenario {name_or_path:?}: expected exp1, exp2, d3, mixed, or a config file path")
}

fn device_truth_map(truth: &TruthData) -> BTreeMap<(String, i64), DeviceType> {
    truth.device_day_map()
}

fn run_ingest(args: &IngestArgs, guard: &mut OutputGuard) -> Result<()> {
    let link = match args.link_type {
        LinkTypeArg::Ethernet => LinkType::Ethernet,
        LinkTypeArg::RawIpv6 => LinkType::RawIpv6,
        LinkTypeArg::Auto => detect_link_type(&args.input)?.ok_or_else(|| {
            anyhow!("capture declares an unsupported link type; pass --link-type explicitly")
        })?,
    };
    let parsed = parse_capture(&args.input, link)?;
    let mut records = if args.no_dedup {
        parsed.records
    } else {
        dedup_retransmissions(parsed.records)
    };
    if args.drop_payload {
        for r in &mut records {
            r.payload = None;
        }
    }
    apply_len_offset(&mut records, args.len_offset);
    if args.suggest_roles {
        match suggest_controller(&records) {
            Some((id, peers)) => eprintln!(
                "role suggestion: {id} talks to {peers} distinct peers and is the likeliest controller"
            ),
            None => eprintln!("role suggestion: trace is empty"),
        }
    }
    guard.track(&args.output);
    write_trace(&records, &args.output)?;
    eprintln!(
        "ingested {} records ({} frames skipped) -> {}",
        records.len(),
        parsed.skipped,
        args.output.display()
    );
    Ok(())
}

fn run_label(args: &LabelArgs, guard: &mut OutputGuard) -> Result<()> {
    let records = read_trace(&args.input)?;
    let roles = RoleMap::from_file(&args.roles)?;
    let rules = load_rules(&args.rules)?;
    let labeled = label_trace(&records, &roles, &rules, args.window_secs);
    guard.track(&args.output);
    write_labeled_trace(&labeled, &args.output)?;
    eprintln!("labeled {} packets -> {}", labeled.len(), args.output.display());
    Ok(())
}

fn run_fingerprint(args: &FingerprintArgs, guard: &mut OutputGuard) -> Result<()> {
    let labeled = read_labeled_trace(&args.input)?;
    let roles = RoleMap::from_file(&args.roles)?;
    let db = match &args.fingerprints {
        Some(path) => FingerprintDb::from_file(path)?,
        None => FingerprintDb::builtin(),
    };
    let predictions = classify_trace(&labeled, &roles, &db, args.window_secs, args.tz_offset_secs);
    guard.track(&args.output);
    std::fs::write(
        &args.output,
        serde_json::to_string_pretty(&predictions).expect("predictions serialize"),
    )?;
    eprintln!(
        "classified {} device-days -> {}",
        predictions.len(),
        args.output.display()
    );
    Ok(())
}

fn run_synth(args: &SynthArgs, guard: &mut OutputGuard) -> Result<()> {
    let seed = resolve_seed(args.seed)?;
    let configs = match (&args.scenario, &args.config) {
        (Some(name), None) => builtin_scenario(name, seed, args.days)
            .ok_or_else(|| anyhow!("unknown scenario {name:?}"))?,
        (None, Some(path)) => {
            let mut config = ScenarioConfig::from_file(path)?;
            if args.seed.is_some() || std::env::var(SEED_ENV).is_ok() {
                config.seed = seed;
            }
            vec![config]
        }
        _ => bail!("pass exactly one of --scenario or --config"),
    };
    let data = generate_merged(&configs)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let trace_path = args.out_dir.join("trace.jsonl");
    let truth_path = args.out_dir.join("truth.json");
    let roles_path = args.out_dir.join("roles.json");
    guard.track(&trace_path);
    guard.track(&truth_path);
    guard.track(&roles_path);
    write_trace(&data.records, &trace_path)?;
    data.truth.to_file(&truth_path)?;
    data.roles.to_file(&roles_path)?;
    eprintln!(
        "generated {} packets over {} device-days -> {}",
        data.records.len(),
        data.truth.device_days.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run_perturb(args: &PerturbArgs, guard: &mut OutputGuard) -> Result<()> {
    let records = read_trace(&args.input)?;
    let spec = PerturbationSpec {
        loss_fraction: args.loss,
        delay_fraction: args.delay_frac,
        delay_delta: args.delay_secs,
        pad_strategy: parse_pad(&args.pad)?,
        order: match args.order {
            OrderArg::LossDelay => ComposeOrder::LossThenDelay,
            OrderArg::DelayLoss => ComposeOrder::DelayThenLoss,
        },
        seed: resolve_seed(args.seed)?,
    };
    let out = perturb::apply(&records, &spec)?;
    guard.track(&args.output);
    write_trace(&out, &args.output)?;
    eprintln!(
        "perturbed {} -> {} packets (order {:?}) -> {}",
        records.len(),
        out.len(),
        spec.order,
        args.output.display()
    );
    Ok(())
}

fn run_eval_labels(args: &EvalLabelsArgs, guard: &mut OutputGuard) -> Result<()> {
    let pred = read_labeled_trace(&args.pred)?;
    let truth = TruthData::from_file(&args.truth)?;
    let subsets: Vec<Subset> = match args.subset {
        SubsetArg::All => vec![Subset::All],
        SubsetArg::Unusual => vec![Subset::UnusualOnly],
        SubsetArg::Both => vec![Subset::All, Subset::UnusualOnly],
    };
    let mut reports = Vec::new();
    for subset in subsets {
        reports.push(evaluate_labels(&pred, &truth.labels, subset)?);
    }
    for report in &reports {
        println!(
            "{}: accuracy {:.2} recall {:.2} precision {:.2} f1 {:.2} ({} samples, {} averaging)",
            report.subset.as_str(),
            report.accuracy,
            report.recall,
            report.precision,
            report.f1,
            report.samples,
            report.averaging
        );
    }
    if let Some(path) = &args.csv {
        guard.track(path);
        std::fs::write(path, reports_csv(&reports))?;
    }
    if let Some(path) = &args.json {
        guard.track(path);
        std::fs::write(path, serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(())
}

fn run_eval_devices(args: &EvalDevicesArgs, guard: &mut OutputGuard) -> Result<()> {
    let text = std::fs::read_to_string(&args.pred)
        .with_context(|| format!("reading {}", args.pred.display()))?;
    let predictions: Vec<DevicePrediction> = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.pred.display()))?;
    let pred_map: BTreeMap<(String, i64), DeviceType> = predictions
        .iter()
        .map(|p| ((p.device_id.clone(), p.day), p.predicted))
        .collect();
    let truth = TruthData::from_file(&args.truth)?;
    let report = evaluate_devices(&pred_map, &device_truth_map(&truth))?;
    println!(
        "devices: accuracy {:.2} recall {:.2} precision {:.2} f1 {:.2} ({} device-days)",
        report.accuracy, report.recall, report.precision, report.f1, report.samples
    );
    if let Some(path) = &args.csv {
        guard.track(path);
        let mut csv = String::from("experiment,accuracy,recall,precision,f1\n");
        csv.push_str(&format!(
            "devices,{:.2},{:.2},{:.2},{:.2}\n",
            report.accuracy, report.recall, report.precision, report.f1
        ));
        std::fs::write(path, csv)?;
    }
    if let Some(path) = &args.json {
        guard.track(path);
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn run_sweep(args: &SweepArgs, guard: &mut OutputGuard) -> Result<()> {
    let configs = load_scenarios(&args.scenario, args.seeds.first().copied().unwrap_or(42), args.days)?;
    if configs.len() != 1 {
        bail!("sweeps run on single-device scenarios");
    }
    let rules = load_rules(&args.rules)?;
    let kind = match args.kind {
        KindArg::Loss => PerturbKind::Loss,
        KindArg::Delay => PerturbKind::Delay,
    };
    let reports = robustness_sweep(
        &configs[0],
        &args.levels,
        kind,
        &args.seeds,
        &rules,
        args.window_secs,
    )?;
    let rows = summarize_sweep(&reports);
    print!("{}", sweep_csv(&rows));
    if let Some(path) = &args.csv {
        guard.track(path);
        std::fs::write(path, sweep_csv(&rows))?;
    }
    if let Some(path) = &args.json {
        guard.track(path);
        std::fs::write(path, serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut guard = OutputGuard::default();
    let result = match &cli.command {
        Command::Ingest(args) => run_ingest(args, &mut guard),
        Command::Label(args) => run_label(args, &mut guard),
        Command::Fingerprint(args) => run_fingerprint(args, &mut guard),
        Command::Synth(args) => run_synth(args, &mut guard),
        Command::Perturb(args) => run_perturb(args, &mut guard),
        Command::Eval(EvalCommand::Labels(args)) => run_eval_labels(args, &mut guard),
        Command::Eval(EvalCommand::Devices(args)) => run_eval_devices(args, &mut guard),
        Command::Sweep(args) => run_sweep(args, &mut guard),
        Command::Repro(args) => repro::run(args, &mut guard),
    };
    if result.is_ok() {
        guard.disarm();
    }
    result
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        let detail = err
            .chain()
            .map(|c| c.to_string())
            .collect::<Vec<_>>()
            .join(": ");
        eprintln!("{}", serde_json::json!({ "error": detail, "kind": "data" }));
        std::process::exit(3);
    }
}
