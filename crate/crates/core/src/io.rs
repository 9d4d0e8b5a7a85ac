//! Plain-text columnar formats for snapshot series, observable matrices and
//! fitted decompositions.
//!
//! All three are comma-separated and write floats with Rust's shortest
//! round-trip formatting, so reading a file back reproduces the values bit
//! for bit.
//!
//! Snapshot series:
//!
//! ```text
//! L,K_T,dt,N_T,epsilon,x_s,seed
//! 32,256,0.1,300,0.05,5,7          (epsilon, x_s, seed empty if unknown)
//! t_0,re u_0,im u_0,re u_1,im u_1,...   (N_T + 1 rows)
//! ```
//!
//! Observable matrix (one row per snapshot column):
//!
//! ```text
//! blocks,canonical:0:256,g2:256:257,...
//! re g_0,im g_0,re g_1,im g_1,...
//! ```
//!
//! Decomposition:
//!
//! ```text
//! rank,dt,observables
//! r,dt,M
//! mode,re_mu,im_mu,abs_mu,re_lambda,im_lambda,abs_b,re_b,im_b   (r rows;
//!                                  lambda is empty for zero eigenvalues)
//! modes
//! re phi_0,im phi_0,...            (one row per mode, M entries each)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::dmd::DmdResult;
use crate::error::{Error, Result};
use crate::observables::{ObservableMatrix, RowBlock};
use crate::solver::{FieldState, GridConfig, InitialCondition, SnapshotSeries};
use crate::C64;

const SNAPSHOT_HEADER: [&str; 7] = ["L", "K_T", "dt", "N_T", "epsilon", "x_s", "seed"];
const DMD_HEADER: [&str; 3] = ["rank", "dt", "observables"];
const MODE_HEADER: [&str; 9] =
    ["mode", "re_mu", "im_mu", "abs_mu", "re_lambda", "im_lambda", "abs_b", "re_b", "im_b"];

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().flexible(true).has_headers(false).from_writer(out)
}

fn records<R: Read>(input: R) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).has_headers(false).from_reader(input);
    rdr.records().map(|r| r.map_err(Error::from)).collect()
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse(format!("bad {what}: {field:?}")))
}

fn interleave(values: impl Iterator<Item = C64>) -> Vec<String> {
    values.flat_map(|z| [z.re.to_string(), z.im.to_string()]).collect()
}

fn deinterleave<'a>(fields: impl Iterator<Item = &'a str>) -> Result<Vec<C64>> {
    let flat: Vec<f64> = fields.map(|f| parse(f, "float")).collect::<Result<_>>()?;
    if !flat.len().is_multiple_of(2) {
        return Err(Error::Parse("odd number of real/imaginary fields".into()));
    }
    Ok(flat.chunks(2).map(|c| C64::new(c[0], c[1])).collect())
}

fn expect_header(rec: Option<&csv::StringRecord>, header: &[&str]) -> Result<()> {
    match rec {
        Some(r) if r.iter().eq(header.iter().copied()) => Ok(()),
        Some(r) => Err(Error::Parse(format!("expected header {header:?}, found {r:?}"))),
        None => Err(Error::Parse("unexpected end of input".into())),
    }
}

pub fn write_snapshots<W: Write>(series: &SnapshotSeries, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(SNAPSHOT_HEADER)?;
    let (eps, xs, seed) = match &series.origin {
        Some(ic) => (ic.epsilon.to_string(), ic.x_s.to_string(), ic.seed.to_string()),
        None => Default::default(),
    };
    w.write_record([
        series.grid.half_length().to_string(),
        series.grid.points().to_string(),
        series.dt.to_string(),
        series.steps().to_string(),
        eps,
        xs,
        seed,
    ])?;
    for state in &series.states {
        let mut row = vec![state.time.to_string()];
        row.extend(interleave(state.values.iter().copied()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshots<R: Read>(input: R) -> Result<SnapshotSeries> {
    let recs = records(input)?;
    expect_header(recs.first(), &SNAPSHOT_HEADER)?;
    let meta = recs.get(1).ok_or_else(|| Error::Parse("missing snapshot metadata".into()))?;
    if meta.len() != SNAPSHOT_HEADER.len() {
        return Err(Error::Parse(format!("metadata has {} fields", meta.len())));
    }
    let grid = GridConfig::new(parse(&meta[0], "L")?, parse(&meta[1], "K_T")?)?;
    let dt: f64 = parse(&meta[2], "dt")?;
    let steps: usize = parse(&meta[3], "N_T")?;
    let origin = if meta[4].is_empty() {
        None
    } else {
        Some(InitialCondition::new(parse(&meta[4], "epsilon")?, parse(&meta[5], "x_s")?, parse(&meta[6], "seed")?))
    };
    let rows = &recs[2..];
    if rows.len() != steps + 1 {
        return Err(Error::Parse(format!("expected {} snapshot rows, found {}", steps + 1, rows.len())));
    }
    let states = rows
        .iter()
        .map(|r| {
            let time = parse(r.get(0).unwrap_or(""), "time")?;
            let values = deinterleave(r.iter().skip(1))?;
            if values.len() != grid.points() {
                return Err(Error::Parse(format!("snapshot at t = {time} has {} points", values.len())));
            }
            Ok(FieldState::new(values, time))
        })
        .collect::<Result<_>>()?;
    Ok(SnapshotSeries { grid, dt, origin, states })
}

pub fn save_snapshots(series: &SnapshotSeries, path: impl AsRef<Path>) -> Result<()> {
    write_snapshots(series, BufWriter::new(File::create(path)?))
}

pub fn load_snapshots(path: impl AsRef<Path>) -> Result<SnapshotSeries> {
    read_snapshots(BufReader::new(File::open(path)?))
}

pub fn write_observables<W: Write>(matrix: &ObservableMatrix, out: W) -> Result<()> {
    let mut w = writer(out);
    let mut head = vec!["blocks".to_string()];
    head.extend(matrix.blocks.iter().map(|b| format!("{}:{}:{}", b.label, b.rows.start, b.rows.end)));
    w.write_record(&head)?;
    for col in matrix.values.column_iter() {
        w.write_record(interleave(col.iter().copied()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_observables<R: Read>(input: R) -> Result<ObservableMatrix> {
    let recs = records(input)?;
    let head = recs.first().ok_or_else(|| Error::Parse("empty observable file".into()))?;
    if head.get(0) != Some("blocks") {
        return Err(Error::Parse("observable file must start with a blocks row".into()));
    }
    let blocks = head
        .iter()
        .skip(1)
        .map(|f| {
            let mut parts = f.rsplitn(3, ':');
            let (end, start, label) = (parts.next(), parts.next(), parts.next());
            match (label, start, end) {
                (Some(label), Some(start), Some(end)) => Ok(RowBlock {
                    label: label.to_string(),
                    rows: parse(start, "block start")?..parse(end, "block end")?,
                }),
                _ => Err(Error::Parse(format!("bad block descriptor {f:?}"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = blocks.last().map_or(0, |b| b.rows.end);
    let columns = recs[1..]
        .iter()
        .map(|r| {
            let col = deinterleave(r.iter())?;
            if col.len() != rows {
                return Err(Error::Parse(format!("column has {} entries, blocks cover {rows}", col.len())));
            }
            Ok(col)
        })
        .collect::<Result<Vec<_>>>()?;
    let values = DMatrix::from_fn(rows, columns.len(), |i, j| columns[j][i]);
    ObservableMatrix::new(values, blocks)
}

pub fn write_dmd_result<W: Write>(result: &DmdResult, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(DMD_HEADER)?;
    w.write_record([result.rank.to_string(), result.dt.to_string(), result.observables().to_string()])?;
    w.write_record(MODE_HEADER)?;
    let lambdas = result.continuous_eigenvalues();
    for (j, (mu, lambda)) in result.eigenvalues.iter().zip(&lambdas).enumerate() {
        let b = result.amplitudes[j];
        let (lr, li) = lambda.map_or((String::new(), String::new()), |l| (l.re.to_string(), l.im.to_string()));
        w.write_record([
            j.to_string(),
            mu.re.to_string(),
            mu.im.to_string(),
            mu.norm().to_string(),
            lr,
            li,
            b.norm().to_string(),
            b.re.to_string(),
            b.im.to_string(),
        ])?;
    }
    w.write_record(["modes"])?;
    for col in result.modes.column_iter() {
        w.write_record(interleave(col.iter().copied()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dmd_result<R: Read>(input: R) -> Result<DmdResult> {
    let recs = records(input)?;
    expect_header(recs.first(), &DMD_HEADER)?;
    let meta = recs.get(1).ok_or_else(|| Error::Parse("missing decomposition metadata".into()))?;
    let rank: usize = parse(meta.get(0).unwrap_or(""), "rank")?;
    let dt: f64 = parse(meta.get(1).unwrap_or(""), "dt")?;
    let observables: usize = parse(meta.get(2).unwrap_or(""), "observables")?;
    expect_header(recs.get(2), &MODE_HEADER)?;
    if recs.len() != 4 + 2 * rank || recs[3 + rank].iter().ne(["modes"]) {
        return Err(Error::Parse(format!("layout does not match rank {rank}")));
    }
    let mut eigenvalues = Vec::with_capacity(rank);
    let mut amplitudes = Vec::with_capacity(rank);
    for r in &recs[3..3 + rank] {
        if r.len() != MODE_HEADER.len() {
            return Err(Error::Parse(format!("mode line has {} fields", r.len())));
        }
        eigenvalues.push(C64::new(parse(&r[1], "re_mu")?, parse(&r[2], "im_mu")?));
        amplitudes.push(C64::new(parse(&r[7], "re_b")?, parse(&r[8], "im_b")?));
    }
    let columns = recs[4 + rank..]
        .iter()
        .map(|r| deinterleave(r.iter()))
        .collect::<Result<Vec<_>>>()?;
    if columns.iter().any(|c| c.len() != observables) {
        return Err(Error::Parse(format!("mode length differs from {observables}")));
    }
    let modes = DMatrix::from_fn(observables, rank, |i, j| columns[j][i]);
    Ok(DmdResult { eigenvalues, modes, amplitudes, rank, dt })
}
