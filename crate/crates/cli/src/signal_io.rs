//! Reading and writing signal files by extension.
//!
//! `.csv` holds `index,re,im` rows (time domain on input); anything else is
//! read and written as an SFR container.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use stockframe_core::container::{self, Domain, GridRecord, SignalRecord};
use stockframe_core::Complex;

use crate::Failure;

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::Io(format!("cannot read {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), Failure> {
    w.flush().map_err(|e| Failure::Io(format!("cannot write {}: {e}", path.display())))
}

pub fn read_signal(path: &Path) -> Result<SignalRecord, Failure> {
    let mut r = open(path)?;
    if is_csv(path) {
        let values = container::read_csv(r).map_err(|e| Failure::from_core(e, path))?;
        return Ok(SignalRecord { domain: Domain::Time, values });
    }
    container::read_sfr1(&mut r)
        .map_err(|e| Failure::from_core(e, path))?
        .ok_or_else(|| Failure::Io(format!("{}: empty SFR1 file", path.display())))
}

pub fn write_signal(path: &Path, record: &SignalRecord) -> Result<(), Failure> {
    let mut w = create(path)?;
    let written = if is_csv(path) {
        container::write_csv(&mut w, &record.values)
    } else {
        container::write_sfr1(&mut w, record)
    };
    written.map_err(|e| Failure::from_core(e, path))?;
    finish(w, path)
}

/// Several SFR1 records back to back.
pub fn write_records(path: &Path, records: &[SignalRecord]) -> Result<(), Failure> {
    let mut w = create(path)?;
    for r in records {
        container::write_sfr1(&mut w, r).map_err(|e| Failure::from_core(e, path))?;
    }
    finish(w, path)
}

pub fn read_grid(path: &Path) -> Result<GridRecord, Failure> {
    let mut r = open(path)?;
    container::read_sfr2(&mut r).map_err(|e| Failure::from_core(e, path))
}

pub fn write_grid(path: &Path, record: &GridRecord) -> Result<(), Failure> {
    let mut w = create(path)?;
    container::write_sfr2(&mut w, record).map_err(|e| Failure::from_core(e, path))?;
    finish(w, path)
}

/// Plot export: CSV `t,re,im` for time samples on `[0, 1)`, or an SFR1
/// time record.
pub fn write_time_profile(path: &Path, values: &[Complex<f64>]) -> Result<(), Failure> {
    if !is_csv(path) {
        return write_signal(path, &SignalRecord { domain: Domain::Time, values: values.to_vec() });
    }
    let n = values.len() as f64;
    let mut w = create(path)?;
    let io = |e: std::io::Error| Failure::Io(format!("cannot write {}: {e}", path.display()));
    writeln!(w, "t,re,im").map_err(io)?;
    for (m, v) in values.iter().enumerate() {
        writeln!(w, "{:.15e},{:.15e},{:.15e}", m as f64 / n, v.re, v.im).map_err(io)?;
    }
    finish(w, path)
}

/// Plot export: CSV `omega,re,im,abs` over grid frequencies from `first`
/// upward, or an SFR1 frequency record.
pub fn write_freq_profile(path: &Path, first: i64, values: &[Complex<f64>]) -> Result<(), Failure> {
    if !is_csv(path) {
        return write_signal(path, &SignalRecord { domain: Domain::Frequency, values: values.to_vec() });
    }
    let mut w = create(path)?;
    let io = |e: std::io::Error| Failure::Io(format!("cannot write {}: {e}", path.display()));
    writeln!(w, "omega,re,im,abs").map_err(io)?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{},{:.15e},{:.15e},{:.15e}", first + i as i64, v.re, v.im, v.norm()).map_err(io)?;
    }
    finish(w, path)
}
