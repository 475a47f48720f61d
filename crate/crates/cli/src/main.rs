use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use scmap::harness::{self, ExperimentConfig, JobKind, JobOutput, ResultRecord};

/// Threshold analysis, bit-mapper optimization and BER simulation of
/// spatially coupled codes.
#[derive(Parser)]
#[command(name = "scmap", version)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Decoding thresholds of the configured mappers.
    Threshold(Common),
    /// Optimize the mapper and write it out with its trace.
    Optimize(Common),
    /// Optimization gain over the T list.
    GainSweep(Common),
    /// Gap between threshold and the capacity benchmark.
    CapacityGap(Common),
    /// Monte Carlo BER over an SNR grid or a span grid.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = ChannelArg::Awgn)]
        channel: ChannelArg,
    },
    /// Print rates and graph audits.
    Inspect(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelArg {
    Awgn,
    Fiber,
}

#[derive(Args)]
struct Common {
    /// TOML experiment file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set optimizer.generations=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    t_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    modes: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    mappers: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    snr: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    spans: Option<Vec<usize>>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    name: Option<String>,
    /// Print the resolved config and exit.
    #[arg(long)]
    dry_run: bool,
}

fn parse_value(raw: &str) -> toml::Value {
    // anything that is not valid TOML is taken as a bare string
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().filter(|k| !k.is_empty()).with_context(|| format!("empty key in `{key}`"))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().with_context(|| format!("`{p}` in `{key}` is not a section"))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn resolve(common: &Common, job: JobKind) -> Result<ExperimentConfig> {
    let mut table = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => toml::Table::new(),
    };
    table.insert("job".into(), toml::Value::try_from(job)?);
    let list = |v: &[String]| toml::Value::Array(v.iter().map(|s| toml::Value::String(s.clone())).collect());
    if let Some(v) = &common.t_list {
        table.insert("t_list".into(), toml::Value::try_from(v)?);
    }
    if let Some(v) = &common.modes {
        table.insert("modes".into(), list(v));
    }
    if let Some(v) = &common.mappers {
        table.insert("mappers".into(), list(v));
    }
    if let Some(v) = &common.snr {
        table.insert("snr_db".into(), toml::Value::try_from(v)?);
    }
    if let Some(v) = &common.spans {
        table.insert("spans".into(), toml::Value::try_from(v)?);
    }
    if let Some(v) = &common.output {
        table.insert("output".into(), v.clone().into());
    }
    if let Some(v) = &common.name {
        table.insert("name".into(), v.clone().into());
    }
    for s in &common.sets {
        let (k, v) = s.split_once('=').with_context(|| format!("`--set {s}` is not KEY=VALUE"))?;
        set_path(&mut table, k.trim(), parse_value(v.trim()))?;
    }
    let cfg: ExperimentConfig = toml::Value::Table(table).try_into().context("invalid experiment config")?;
    Ok(cfg)
}

fn append(path: &Path, header: Option<&str>, lines: &[String]) -> Result<()> {
    let fresh = !path.exists();
    let mut f = OpenOptions::new().create(true).append(true).open(path).with_context(|| format!("opening {}", path.display()))?;
    if let (true, Some(h)) = (fresh, header) {
        writeln!(f, "{h}")?;
    }
    for l in lines {
        writeln!(f, "{l}")?;
    }
    Ok(())
}

fn write_outputs(cfg: &ExperimentConfig, out: &JobOutput) -> Result<PathBuf> {
    let dir = PathBuf::from(&cfg.output);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("resolved-config.toml"), toml::to_string(cfg)?)?;
    let jsonl: Vec<String> = out.records.iter().map(serde_json::to_string).collect::<Result<_, _>>()?;
    append(&dir.join("records.jsonl"), None, &jsonl)?;
    let mut by_metric: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for r in &out.records {
        by_metric.entry(&r.metric).or_default().push(r.csv_row());
    }
    for (metric, rows) in by_metric {
        append(&dir.join(format!("{metric}.csv")), Some(ResultRecord::CSV_HEADER), &rows)?;
    }
    for m in &out.mappers {
        fs::write(dir.join(format!("mapper-{}.txt", m.label)), m.mapper.to_text(Some(cfg.optimizer.seed)))?;
        if let Some(trace) = &m.trace {
            fs::write(dir.join(format!("trace-{}.txt", m.label)), trace)?;
        }
    }
    Ok(dir)
}

fn summary(r: &ResultRecord) -> String {
    let mut s = format!("{:<18} {:<11} T={:<4} {:<10} x={:<8} y={:.6}", r.metric, r.mode, r.t_len, r.mapper, r.x, r.y);
    if let Some([e, b, f]) = r.counts {
        s += &format!("  ({e} errors / {b} bits, {f} frames{})", if r.upper_bound { ", upper bound" } else { "" });
    }
    if r.status != "ok" {
        s += &format!("  [{}]", r.status);
    }
    s
}

fn init_workers() -> Result<()> {
    if let Ok(v) = std::env::var("SCMAP_WORKERS") {
        let n: usize = v.parse().with_context(|| format!("SCMAP_WORKERS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_workers()?;
    let (common, job) = match &cli.verb {
        Verb::Threshold(c) | Verb::Inspect(c) => (c, JobKind::Threshold),
        Verb::Optimize(c) => (c, JobKind::Optimize),
        Verb::GainSweep(c) => (c, JobKind::GainSweep),
        Verb::CapacityGap(c) => (c, JobKind::CapacityGap),
        Verb::Simulate { common, channel: ChannelArg::Awgn } => (common, JobKind::SimulateAwgn),
        Verb::Simulate { common, channel: ChannelArg::Fiber } => (common, JobKind::SimulateFiber),
    };
    let cfg = resolve(common, job)?;
    if common.dry_run {
        print!("{}", toml::to_string(&cfg)?);
        return Ok(());
    }
    if let Verb::Inspect(_) = cli.verb {
        for v in harness::inspect(&cfg)? {
            println!("{v}");
        }
        return Ok(());
    }
    match job {
        JobKind::SimulateAwgn if cfg.snr_db.is_empty() => bail!("simulate needs an SNR grid (--snr or snr_db)"),
        JobKind::SimulateFiber if cfg.spans.is_empty() => bail!("fiber simulation needs a span grid (--spans or spans)"),
        _ => {}
    }
    log::info!("job {} ({:?}), config hash {}", cfg.name, cfg.job, cfg.hash());
    let out = harness::run(&cfg)?;
    let dir = write_outputs(&cfg, &out)?;
    for r in &out.records {
        println!("{}", summary(r));
    }
    println!("wrote {} records to {}", out.records.len(), dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let record = serde_json::json!({ "status": "error", "error": format!("{e:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
