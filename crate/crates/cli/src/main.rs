//! `mdmd`: run seeded NLS ensembles and compare DMD against multiscale DMD.

use std::fs;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::Deserialize;

use mdmd_core::ensemble::{self, ExperimentConfig, ModeSelection};
use mdmd_core::wavelet::FilterTable;
use mdmd_core::Execution;

#[derive(Debug, Parser)]
#[command(name = "mdmd", version, about = "Seeded DMD / multiscale DMD ensembles on the focusing NLS equation")]
struct Args {
    /// TOML file with default settings; flags take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Noise amplitude of the initial condition.
    #[arg(long)]
    epsilon: Option<f64>,

    /// Spectral-error weight in [0, 2].
    #[arg(long)]
    weight: Option<f64>,

    /// Observable set: dmd, mdmd or both.
    #[arg(long)]
    mode: Option<ModeSelection>,

    /// Ensemble size.
    #[arg(long)]
    members: Option<usize>,

    /// Base seed; member i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,

    /// Half-width of the periodic domain.
    #[arg(long = "L", value_name = "L")]
    half_length: Option<f64>,

    /// Grid points (power of two).
    #[arg(long)]
    grid_points: Option<usize>,

    /// Sampling interval.
    #[arg(long)]
    dt: Option<f64>,

    /// Final time.
    #[arg(long)]
    tf: Option<f64>,

    /// Position of the secondary bump.
    #[arg(long)]
    xs: Option<f64>,

    /// Truncation tolerance range, e.g. 2:10.
    #[arg(long, value_name = "LO:HI")]
    tl_range: Option<String>,

    /// Wavelet depth range, e.g. 1:7.
    #[arg(long, value_name = "LO:HI")]
    nlvl_range: Option<String>,

    /// Wavelet family name (haar, d4, d6, d8 or one from --filters).
    #[arg(long)]
    wavelet: Option<String>,

    /// Extra filter table: one family per line, name then lowpass taps.
    #[arg(long, value_name = "FILE")]
    filters: Option<PathBuf>,

    /// Per-member CSV; written to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out_csv: Option<PathBuf>,

    /// Summary statistics as JSON.
    #[arg(long, value_name = "FILE")]
    out_json: Option<PathBuf>,

    /// Directory for per-member snapshot files.
    #[arg(long, value_name = "DIR")]
    save_snapshots: Option<PathBuf>,

    /// Run members one after another.
    #[arg(long)]
    sequential: bool,
}

/// Settings accepted in the configuration file. Keys mirror the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct FileConfig {
    epsilon: Option<f64>,
    weight: Option<f64>,
    mode: Option<String>,
    members: Option<usize>,
    seed: Option<u64>,
    #[serde(rename = "L")]
    half_length: Option<f64>,
    grid_points: Option<usize>,
    dt: Option<f64>,
    tf: Option<f64>,
    xs: Option<f64>,
    tl_range: Option<String>,
    nlvl_range: Option<String>,
    wavelet: Option<String>,
    filters: Option<PathBuf>,
    out_csv: Option<PathBuf>,
    out_json: Option<PathBuf>,
    save_snapshots: Option<PathBuf>,
    sequential: Option<bool>,
}

fn parse_range<T>(text: &str) -> Result<RangeInclusive<T>>
where
    T: FromStr + PartialOrd + Copy,
{
    let bad = || anyhow!("bad range '{text}', expected LO:HI or a single value");
    let (lo, hi) = match text.split_once(':') {
        Some((lo, hi)) => (lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?),
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if lo > hi {
        bail!("empty range '{text}'");
    }
    Ok(lo..=hi)
}

struct Plan {
    experiment: ExperimentConfig,
    out_csv: Option<PathBuf>,
    out_json: Option<PathBuf>,
}

fn build_plan(args: Args) -> Result<Plan> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let mut cfg = ExperimentConfig::default();
    let or = |flag: Option<f64>, file: Option<f64>, dflt: f64| flag.or(file).unwrap_or(dflt);
    cfg.epsilon = or(args.epsilon, file.epsilon, cfg.epsilon);
    cfg.weight = or(args.weight, file.weight, cfg.weight);
    cfg.half_length = or(args.half_length, file.half_length, cfg.half_length);
    cfg.dt = or(args.dt, file.dt, cfg.dt);
    cfg.t_final = or(args.tf, file.tf, cfg.t_final);
    cfg.x_s = or(args.xs, file.xs, cfg.x_s);
    cfg.members = args.members.or(file.members).unwrap_or(cfg.members);
    cfg.base_seed = args.seed.or(file.seed).unwrap_or(cfg.base_seed);
    cfg.points = args.grid_points.or(file.grid_points).unwrap_or(cfg.points);
    cfg.mode = match (args.mode, file.mode) {
        (Some(m), _) => m,
        (None, Some(m)) => m.parse()?,
        (None, None) => cfg.mode,
    };
    if let Some(r) = args.tl_range.or(file.tl_range) {
        cfg.tolerances = parse_range(&r).context("--tl-range")?;
    }
    if let Some(r) = args.nlvl_range.or(file.nlvl_range) {
        cfg.levels = Some(parse_range(&r).context("--nlvl-range")?);
    }
    let mut filters = FilterTable::builtin();
    if let Some(path) = args.filters.or(file.filters) {
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        filters.extend(FilterTable::parse(&text).with_context(|| format!("parsing {}", path.display()))?);
    }
    if let Some(name) = args.wavelet.or(file.wavelet) {
        cfg.family = filters.get(&name).cloned().ok_or_else(|| {
            anyhow!("unknown wavelet '{name}' (known: {})", filters.names().collect::<Vec<_>>().join(", "))
        })?;
    }
    if args.sequential || file.sequential.unwrap_or(false) {
        cfg.execution = Execution::Sequential;
    }
    cfg.snapshot_dir = args.save_snapshots.or(file.save_snapshots);
    cfg.validate()?;
    Ok(Plan { experiment: cfg, out_csv: args.out_csv.or(file.out_csv), out_json: args.out_json.or(file.out_json) })
}

fn run(plan: &Plan) -> Result<bool> {
    let cfg = &plan.experiment;
    log::info!(
        "{} members, mode {}, epsilon {}, weight {}, seed {}",
        cfg.members,
        cfg.mode,
        cfg.epsilon,
        cfg.weight,
        cfg.base_seed
    );
    let records = ensemble::run_experiment(cfg)?;
    match &plan.out_csv {
        Some(path) => ensemble::emit_csv(&records, path).with_context(|| format!("writing {}", path.display()))?,
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            ensemble::write_csv(&records, &mut lock)?;
            lock.flush()?;
        }
    }
    if let Some(path) = &plan.out_json {
        ensemble::emit_summary(&records, path).with_context(|| format!("writing {}", path.display()))?;
    }
    for r in records.iter().filter(|r| !r.succeeded()) {
        log::warn!("member {} ({}) failed: {}", r.member, r.mode, r.status);
    }
    Ok(ensemble::every_mode_succeeded(&records, &cfg.mode.modes()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let plan = match build_plan(Args::parse()) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    match run(&plan) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: at least one mode had no successful member");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
