//! Seeded ensembles: simulate each member, sweep each requested observable
//! mode, and collect the optimum per `(member, mode)`.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{config, Error, Result};
use crate::exec::Execution;
use crate::io::save_snapshots;
use crate::metrics::check_weight;
use crate::observables::{default_besov_specs, Mode};
use crate::solver::{simulate, GridConfig, InitialCondition, TimeGrid};
use crate::sweep::{sweep, SweepGrid, SweepSpec};
use crate::wavelet::{max_levels, WaveletFamily};

/// First header token of every ensemble CSV. Bump when columns change.
pub const CSV_SCHEMA: &str = "mdmd-ensemble-v1";

const CSV_COLUMNS: [&str; 10] =
    ["member", "mode", "seed", "E_rc", "E_sp", "E", "best_T_l", "best_N_lvl", "rank", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeSelection {
    Dmd,
    Mdmd,
    #[default]
    Both,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Dmd => vec![Mode::Dmd],
            ModeSelection::Mdmd => vec![Mode::Mdmd],
            ModeSelection::Both => vec![Mode::Dmd, Mode::Mdmd],
        }
    }
}

impl FromStr for ModeSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dmd" => Ok(ModeSelection::Dmd),
            "mdmd" => Ok(ModeSelection::Mdmd),
            "both" => Ok(ModeSelection::Both),
            other => Err(Error::Parse(format!("unknown mode '{other}' (expected dmd, mdmd or both)"))),
        }
    }
}

impl fmt::Display for ModeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeSelection::Dmd => "dmd",
            ModeSelection::Mdmd => "mdmd",
            ModeSelection::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub epsilon: f64,
    pub weight: f64,
    pub mode: ModeSelection,
    pub members: usize,
    pub base_seed: u64,
    pub half_length: f64,
    pub points: usize,
    pub dt: f64,
    pub t_final: f64,
    pub x_s: f64,
    pub tolerances: RangeInclusive<u32>,
    /// `None` means `1..=log2(K_T) - 1`.
    pub levels: Option<RangeInclusive<usize>>,
    pub family: WaveletFamily,
    pub execution: Execution,
    /// Directory for per-member snapshot files, if wanted.
    pub snapshot_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.05,
            weight: 0.01,
            mode: ModeSelection::Both,
            members: 16,
            base_seed: 0,
            half_length: 32.0,
            points: 256,
            dt: 0.1,
            t_final: 30.0,
            x_s: 5.0,
            tolerances: SweepGrid::DEFAULT_TOLERANCES,
            levels: None,
            family: WaveletFamily::default(),
            execution: Execution::default(),
            snapshot_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn grid(&self) -> Result<GridConfig> {
        GridConfig::new(self.half_length, self.points)
    }

    pub fn sweep_grid(&self) -> SweepGrid {
        SweepGrid {
            tolerances: self.tolerances.clone(),
            levels: self.levels.clone().unwrap_or(1..=max_levels(self.points)),
        }
    }

    pub fn seed(&self, member: usize) -> u64 {
        self.base_seed.wrapping_add(member as u64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.members == 0 {
            return config("ensemble needs at least one member");
        }
        check_weight(self.weight)?;
        let grid = self.grid()?;
        TimeGrid::new(self.dt, self.t_final)?;
        InitialCondition::new(self.epsilon, self.x_s, 0).validate(&grid)?;
        if self.mode != ModeSelection::Dmd {
            self.sweep_grid().validate(self.points)?;
        } else if self.tolerances.is_empty() {
            return config("empty tolerance range");
        }
        Ok(())
    }
}

/// Sweep optimum of one member in one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub reconstruction: f64,
    pub spectral: f64,
    pub combined: f64,
    pub tolerance: u32,
    /// `None` for canonical-only DMD.
    pub levels: Option<usize>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleRecord {
    pub member: usize,
    pub mode: Mode,
    pub seed: u64,
    /// `None` when simulation or every fit failed; `status` says why.
    pub optimum: Option<Optimum>,
    pub status: String,
}

impl EnsembleRecord {
    pub const OK: &'static str = "ok";

    pub fn succeeded(&self) -> bool {
        self.optimum.is_some()
    }
}

fn run_member(cfg: &ExperimentConfig, grid: &GridConfig, time: &TimeGrid, member: usize) -> Vec<EnsembleRecord> {
    let seed = cfg.seed(member);
    let modes = cfg.mode.modes();
    let failed = |status: String| -> Vec<EnsembleRecord> {
        modes
            .iter()
            .map(|&mode| EnsembleRecord { member, mode, seed, optimum: None, status: status.clone() })
            .collect()
    };
    let series = match simulate(&InitialCondition::new(cfg.epsilon, cfg.x_s, seed), grid, time) {
        Ok(s) => s,
        Err(e) => {
            log::warn!("member {member}: {e}");
            return failed(e.to_string());
        }
    };
    if let Some(dir) = &cfg.snapshot_dir {
        let path = dir.join(format!("member_{member:03}.csv"));
        if let Err(e) = save_snapshots(&series, &path) {
            log::warn!("member {member}: could not save {}: {e}", path.display());
        }
    }
    modes
        .iter()
        .map(|&mode| {
            let spec = SweepSpec {
                mode,
                grid: cfg.sweep_grid(),
                weight: cfg.weight,
                family: cfg.family.clone(),
                besov: default_besov_specs(),
                execution: cfg.execution,
            };
            match sweep(&series, &spec) {
                Ok(res) => {
                    let b = res.best;
                    EnsembleRecord {
                        member,
                        mode,
                        seed,
                        optimum: Some(Optimum {
                            reconstruction: b.reconstruction,
                            spectral: b.spectral,
                            combined: b.combined,
                            tolerance: b.tolerance,
                            levels: b.levels,
                            rank: b.rank,
                        }),
                        status: EnsembleRecord::OK.to_string(),
                    }
                }
                Err(e) => {
                    log::warn!("member {member} {mode}: {e}");
                    EnsembleRecord { member, mode, seed, optimum: None, status: e.to_string() }
                }
            }
        })
        .collect()
}

/// Run every member and return records sorted by `(member, mode)`.
///
/// Members share nothing, so they run concurrently under
/// [`Execution::Parallel`]. Per-member failures become records with a
/// status instead of aborting the ensemble.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<EnsembleRecord>> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    let time = TimeGrid::new(cfg.dt, cfg.t_final)?;
    if let Some(dir) = &cfg.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }
    let members: Vec<usize> = (0..cfg.members).collect();
    let mut records: Vec<EnsembleRecord> = cfg
        .execution
        .map(members, |m| run_member(cfg, &grid, &time, m))
        .into_iter()
        .flatten()
        .collect();
    records.sort_by(|a, b| a.member.cmp(&b.member).then(a.mode.cmp(&b.mode)));
    Ok(records)
}

/// True when every mode present in `records` has at least one success.
pub fn every_mode_succeeded(records: &[EnsembleRecord], modes: &[Mode]) -> bool {
    modes
        .iter()
        .all(|&m| records.iter().any(|r| r.mode == m && r.succeeded()))
}

pub fn write_csv<W: Write>(records: &[EnsembleRecord], out: W) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Structure("no ensemble records to write".into()));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![CSV_SCHEMA];
    header.extend(CSV_COLUMNS);
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![CSV_SCHEMA.to_string(), r.member.to_string(), r.mode.to_string(), r.seed.to_string()];
        match &r.optimum {
            Some(o) => row.extend([
                o.reconstruction.to_string(),
                o.spectral.to_string(),
                o.combined.to_string(),
                o.tolerance.to_string(),
                // 0 stands for "no wavelet depth"
                o.levels.unwrap_or(0).to_string(),
                o.rank.to_string(),
            ]),
            None => row.extend(std::iter::repeat_n(String::new(), 6)),
        }
        row.push(r.status.clone());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(records: &[EnsembleRecord], path: impl AsRef<Path>) -> Result<()> {
    if records.is_empty() {
        return Err(Error::Structure("no ensemble records to write".into()));
    }
    write_csv(records, BufWriter::new(File::create(path)?))
}

fn field<T: FromStr>(rec: &csv::StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::Parse(format!("column {} has bad value {raw:?}", i)))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<EnsembleRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some(CSV_SCHEMA) || header.iter().skip(1).ne(CSV_COLUMNS) {
        return Err(Error::Parse(format!("unsupported ensemble CSV header {header:?}")));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            if rec.get(0) != Some(CSV_SCHEMA) {
                return Err(Error::Parse("row schema tag mismatch".into()));
            }
            let mode: Mode = field(&rec, 2)?;
            let optimum = if rec.get(4).is_some_and(|s| !s.is_empty()) {
                let levels: usize = field(&rec, 8)?;
                Some(Optimum {
                    reconstruction: field(&rec, 4)?,
                    spectral: field(&rec, 5)?,
                    combined: field(&rec, 6)?,
                    tolerance: field(&rec, 7)?,
                    levels: (mode == Mode::Mdmd).then_some(levels),
                    rank: field(&rec, 9)?,
                })
            } else {
                None
            };
            Ok(EnsembleRecord {
                member: field(&rec, 1)?,
                mode,
                seed: field(&rec, 3)?,
                optimum,
                status: rec.get(10).unwrap_or("").to_string(),
            })
        })
        .collect()
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Vec<EnsembleRecord>> {
    read_csv(BufReader::new(File::open(path)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Some(Self { median, min: v[0], max: v[n - 1] })
    }

    /// `max / min`, the spread used to compare ensemble uniformity.
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: Mode,
    pub members: usize,
    pub succeeded: usize,
    pub reconstruction: Option<Stats>,
    pub spectral: Option<Stats>,
    pub tolerance: Option<Stats>,
    pub levels: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub modes: Vec<ModeSummary>,
    /// Fraction of paired members with MDMD `E_rc <= ` DMD `E_rc`; absent
    /// unless both modes are present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub win_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
}

/// Per-mode statistics and the paired MDMD-vs-DMD win rate.
///
/// A member counts toward the win rate when at least one mode succeeded; a
/// failed fit loses to any successful one.
pub fn summarize(records: &[EnsembleRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Structure("no ensemble records to summarize".into()));
    }
    let mut present: Vec<Mode> = records.iter().map(|r| r.mode).collect();
    present.sort();
    present.dedup();
    let modes = present
        .iter()
        .map(|&mode| {
            let of_mode: Vec<&EnsembleRecord> = records.iter().filter(|r| r.mode == mode).collect();
            let ok: Vec<&Optimum> = of_mode.iter().filter_map(|r| r.optimum.as_ref()).collect();
            let col = |f: &dyn Fn(&Optimum) -> f64| Stats::of(&ok.iter().map(|o| f(o)).collect::<Vec<_>>());
            ModeSummary {
                mode,
                members: of_mode.len(),
                succeeded: ok.len(),
                reconstruction: col(&|o| o.reconstruction),
                spectral: col(&|o| o.spectral),
                tolerance: col(&|o| o.tolerance as f64),
                levels: if mode == Mode::Mdmd { col(&|o| o.levels.unwrap_or(0) as f64) } else { None },
            }
        })
        .collect();
    let (win_rate, pairs) = if present.len() == 2 {
        let lookup = |m: usize, mode: Mode| {
            records.iter().find(|r| r.member == m && r.mode == mode).and_then(|r| r.optimum)
        };
        let mut members: Vec<usize> = records.iter().map(|r| r.member).collect();
        members.dedup();
        let (mut wins, mut pairs) = (0usize, 0usize);
        for m in members {
            match (lookup(m, Mode::Dmd), lookup(m, Mode::Mdmd)) {
                (None, None) => continue,
                (Some(d), Some(w)) => wins += usize::from(w.reconstruction <= d.reconstruction),
                (None, Some(_)) => wins += 1,
                (Some(_), None) => {}
            }
            pairs += 1;
        }
        ((pairs > 0).then(|| wins as f64 / pairs as f64), Some(pairs))
    } else {
        (None, None)
    };
    Ok(Summary { schema: CSV_SCHEMA.to_string(), modes, win_rate, pairs })
}

pub fn emit_summary(records: &[EnsembleRecord], path: impl AsRef<Path>) -> Result<Summary> {
    let summary = summarize(records)?;
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, &summary)?;
    writeln!(w)?;
    w.flush()?;
    Ok(summary)
}
