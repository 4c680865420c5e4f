//! CSV output. Floats are written with 17 significant digits so that every
//! value reads back bit-for-bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::evolution::{SweepRow, TimeSeriesRecord};
use crate::trajectories::{EnsemblePoint, TrajectoryRecord};

/// A row type with a fixed CSV header.
pub trait CsvRecord: Sized {
    const HEADER: &'static str;

    fn write_row<W: Write>(&self, w: &mut W) -> std::io::Result<()>;

    fn parse_row(fields: &[&str]) -> Option<Self>;
}

/// 17 significant digits, i.e. `d.dddddddddddddddde±x`.
pub struct Exact(pub f64);

impl std::fmt::Display for Exact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.16e}", self.0)
    }
}

fn floats<const N: usize>(fields: &[&str]) -> Option<[f64; N]> {
    let mut out = [0.0; N];
    for (o, s) in out.iter_mut().zip(fields) {
        *o = s.trim().parse().ok()?;
    }
    Some(out)
}

fn flag(s: &str) -> Option<u8> {
    match s.trim() {
        "0" => Some(0),
        "1" => Some(1),
        _ => None,
    }
}

impl CsvRecord for TimeSeriesRecord {
    const HEADER: &'static str = "t,p1,p2,r,negativity";

    fn write_row<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{}",
            Exact(self.t),
            Exact(self.p1),
            Exact(self.p2),
            Exact(self.r),
            Exact(self.negativity)
        )
    }

    fn parse_row(fields: &[&str]) -> Option<Self> {
        if fields.len() != 5 {
            return None;
        }
        let [t, p1, p2, r, negativity] = floats::<5>(fields)?;
        Some(Self { t, p1, p2, r, negativity })
    }
}

impl CsvRecord for TrajectoryRecord {
    const HEADER: &'static str = "t,p1,p2,r,negativity,s_c,meas";

    fn write_row<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            Exact(self.t),
            Exact(self.p1),
            Exact(self.p2),
            Exact(self.r),
            Exact(self.negativity),
            self.s_c,
            self.measured as u8
        )
    }

    fn parse_row(fields: &[&str]) -> Option<Self> {
        if fields.len() != 7 {
            return None;
        }
        let [t, p1, p2, r, negativity] = floats::<5>(fields)?;
        Some(Self { t, p1, p2, r, negativity, s_c: flag(fields[5])?, measured: flag(fields[6])? == 1 })
    }
}

impl CsvRecord for EnsemblePoint {
    const HEADER: &'static str = "t,mean_p1,mean_p2,mean_r,stderr_p1";

    fn write_row<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(
            w,
            "{},{},{},{},{}",
            Exact(self.t),
            Exact(self.mean_p1),
            Exact(self.mean_p2),
            Exact(self.mean_r),
            Exact(self.stderr_p1)
        )
    }

    fn parse_row(fields: &[&str]) -> Option<Self> {
        if fields.len() != 5 {
            return None;
        }
        let [t, mean_p1, mean_p2, mean_r, stderr_p1] = floats::<5>(fields)?;
        Some(Self { t, mean_p1, mean_p2, mean_r, stderr_p1 })
    }
}

impl CsvRecord for SweepRow {
    const HEADER: &'static str = "tau,omega,r_min,r_min_over_r0";

    fn write_row<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{},{},{},{}", Exact(self.tau), Exact(self.omega), Exact(self.r_min), Exact(self.ratio))
    }

    fn parse_row(fields: &[&str]) -> Option<Self> {
        if fields.len() != 4 {
            return None;
        }
        let [tau, omega, r_min, ratio] = floats::<4>(fields)?;
        Some(Self { tau, omega, r_min, ratio })
    }
}

/// `(t, r)` samples of the spike-driven synapse.
impl CsvRecord for (f64, f64) {
    const HEADER: &'static str = "t,r";

    fn write_row<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "{},{}", Exact(self.0), Exact(self.1))
    }

    fn parse_row(fields: &[&str]) -> Option<Self> {
        if fields.len() != 2 {
            return None;
        }
        let [t, r] = floats::<2>(fields)?;
        Some((t, r))
    }
}

pub fn write_series_to<T: CsvRecord, W: Write>(records: &[T], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "{}", T::HEADER)?;
    for rec in records {
        rec.write_row(w)?;
    }
    w.flush()
}

/// Writes the CSV next to `path` and renames it into place, so a failed run
/// never leaves a truncated file behind.
pub fn write_series<T: CsvRecord>(records: &[T], path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.partial"));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        write_series_to(records, &mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.map_err(|e| Error::io(path, e))
}

pub fn read_series<T: CsvRecord>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let bad = |line: usize, msg: &str| {
        Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {line}: {msg}")))
    };
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == T::HEADER => {}
        Some(Err(e)) => return Err(Error::io(path, e)),
        _ => return Err(bad(1, &format!("expected header `{}`", T::HEADER))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        out.push(T::parse_row(&fields).ok_or_else(|| bad(i + 2, "malformed row"))?);
    }
    Ok(out)
}
