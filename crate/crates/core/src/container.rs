//! Signal containers.
//!
//! `SFR1`: magic `b"SFR1"`, `u32` LE sample count `N`, `u8` domain flag
//! (0 = time, 1 = frequency), then `2N` LE `f64` as interleaved (re, im).
//!
//! `SFR2`: magic `b"SFR2"`, `u32` LE dimension `d`, `d` × `u32` LE per-axis
//! sizes, `u8` domain flag, then interleaved LE `f64` in row-major order.
//!
//! Frequency-domain payloads are ordered from the lowest grid frequency
//! upward, matching [`SpectralSignal`](crate::spectral::SpectralSignal) storage.

use std::io::{BufRead, Read, Write};

use rustfft::num_complex::Complex;

use crate::error::{Error, Result};

pub const SFR1_MAGIC: &[u8; 4] = b"SFR1";
pub const SFR2_MAGIC: &[u8; 4] = b"SFR2";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Time,
    Frequency,
}

impl Domain {
    fn flag(self) -> u8 {
        match self {
            Domain::Time => 0,
            Domain::Frequency => 1,
        }
    }

    fn from_flag(flag: u8) -> Result<Self> {
        match flag {
            0 => Ok(Domain::Time),
            1 => Ok(Domain::Frequency),
            other => Err(Error::Format(format!("unknown domain flag {other}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SignalRecord {
    pub domain: Domain,
    pub values: Vec<Complex<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridRecord {
    pub domain: Domain,
    pub dims: Vec<usize>,
    pub values: Vec<Complex<f64>>,
}

fn write_values<W: Write>(w: &mut W, values: &[Complex<f64>]) -> Result<()> {
    for v in values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_or_format<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R, what: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact_or_format(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_values<R: Read>(r: &mut R, count: usize) -> Result<Vec<Complex<f64>>> {
    let mut bytes = vec![0u8; count * 16];
    read_exact_or_format(r, &mut bytes, "payload")?;
    Ok(bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex::new(re, im)
        })
        .collect())
}

pub fn write_sfr1<W: Write>(w: &mut W, record: &SignalRecord) -> Result<()> {
    let n = u32::try_from(record.values.len())
        .map_err(|_| Error::Format("signal too long for SFR1".into()))?;
    w.write_all(SFR1_MAGIC)?;
    w.write_all(&n.to_le_bytes())?;
    w.write_all(&[record.domain.flag()])?;
    write_values(w, &record.values)
}

/// Reads one SFR1 record. Returns `Ok(None)` on a clean end of stream so
/// concatenated records can be read in a loop.
pub fn read_sfr1<R: Read>(r: &mut R) -> Result<Option<SignalRecord>> {
    let mut magic = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        let k = r.read(&mut magic[got..])?;
        if k == 0 {
            break;
        }
        got += k;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < 4 || &magic != SFR1_MAGIC {
        return Err(Error::Format("bad SFR1 magic".into()));
    }
    let n = read_u32(r, "header")? as usize;
    let mut flag = [0u8; 1];
    read_exact_or_format(r, &mut flag, "header")?;
    let domain = Domain::from_flag(flag[0])?;
    let values = read_values(r, n)?;
    Ok(Some(SignalRecord { domain, values }))
}

pub fn write_sfr2<W: Write>(w: &mut W, record: &GridRecord) -> Result<()> {
    let total: usize = record.dims.iter().product();
    if total != record.values.len() {
        return Err(Error::LengthMismatch { expected: total, found: record.values.len() });
    }
    w.write_all(SFR2_MAGIC)?;
    let d = u32::try_from(record.dims.len()).map_err(|_| Error::Format("too many axes".into()))?;
    w.write_all(&d.to_le_bytes())?;
    for &n in &record.dims {
        let n = u32::try_from(n).map_err(|_| Error::Format("axis too long".into()))?;
        w.write_all(&n.to_le_bytes())?;
    }
    w.write_all(&[record.domain.flag()])?;
    write_values(w, &record.values)
}

pub fn read_sfr2<R: Read>(r: &mut R) -> Result<GridRecord> {
    let mut magic = [0u8; 4];
    read_exact_or_format(r, &mut magic, "magic")?;
    if &magic != SFR2_MAGIC {
        return Err(Error::Format("bad SFR2 magic".into()));
    }
    let d = read_u32(r, "header")? as usize;
    if d == 0 || d > 8 {
        return Err(Error::Format(format!("unsupported dimension {d}")));
    }
    let dims = (0..d).map(|_| read_u32(r, "header").map(|n| n as usize)).collect::<Result<Vec<_>>>()?;
    let mut flag = [0u8; 1];
    read_exact_or_format(r, &mut flag, "header")?;
    let domain = Domain::from_flag(flag[0])?;
    let total = dims
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Format("grid size overflow".into()))?;
    let values = read_values(r, total)?;
    Ok(GridRecord { domain, dims, values })
}

/// Writes `index,re,im` rows with a header line.
pub fn write_csv<W: Write>(w: &mut W, values: &[Complex<f64>]) -> Result<()> {
    writeln!(w, "index,re,im")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(w, "{i},{:.17e},{:.17e}", v.re, v.im)?;
    }
    Ok(())
}

/// Reads `index,re,im` rows; the header line is optional and rows may come
/// in any order, but indices must cover `0..len` exactly once.
pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<Complex<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("index")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!("line {}: expected 3 fields", lineno + 1)));
        }
        let parse_err = |_| Error::Format(format!("line {}: bad number", lineno + 1));
        let idx: usize = fields[0].parse().map_err(|_| Error::Format(format!("line {}: bad index", lineno + 1)))?;
        let re: f64 = fields[1].parse().map_err(parse_err)?;
        let im: f64 = fields[2].parse().map_err(parse_err)?;
        rows.push((idx, Complex::new(re, im)));
    }
    let mut out = vec![None; rows.len()];
    for (idx, v) in rows {
        match out.get_mut(idx) {
            Some(slot @ None) => *slot = Some(v),
            _ => return Err(Error::Format(format!("index {idx} duplicated or out of range"))),
        }
    }
    Ok(out.into_iter().map(|v| v.unwrap()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sfr1_layout_is_bit_exact() {
        let rec = SignalRecord { domain: Domain::Frequency, values: vec![Complex::new(1.5, -2.0)] };
        let mut buf = Vec::new();
        write_sfr1(&mut buf, &rec).unwrap();
        let mut expect = b"SFR1".to_vec();
        expect.extend_from_slice(&1u32.to_le_bytes());
        expect.push(1);
        expect.extend_from_slice(&1.5f64.to_le_bytes());
        expect.extend_from_slice(&(-2.0f64).to_le_bytes());
        assert_eq!(buf, expect);
    }

    #[test]
    fn sfr2_layout_is_bit_exact() {
        let rec = GridRecord { domain: Domain::Time, dims: vec![2, 1], values: vec![Complex::new(0.0, 1.0), Complex::new(3.0, 0.0)] };
        let mut buf = Vec::new();
        write_sfr2(&mut buf, &rec).unwrap();
        assert_eq!(&buf[..4], b"SFR2");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..16], &1u32.to_le_bytes());
        assert_eq!(buf[16], 0);
        assert_eq!(buf.len(), 17 + 32);
        assert_eq!(read_sfr2(&mut buf.as_slice()).unwrap(), rec);
    }

    #[test]
    fn concatenated_records() {
        let a = SignalRecord { domain: Domain::Time, values: vec![Complex::new(1.0, 0.0); 4] };
        let b = SignalRecord { domain: Domain::Frequency, values: vec![Complex::new(0.0, 2.0); 4] };
        let mut buf = Vec::new();
        write_sfr1(&mut buf, &a).unwrap();
        write_sfr1(&mut buf, &b).unwrap();
        let mut r = buf.as_slice();
        assert_eq!(read_sfr1(&mut r).unwrap(), Some(a));
        assert_eq!(read_sfr1(&mut r).unwrap(), Some(b));
        assert_eq!(read_sfr1(&mut r).unwrap(), None);
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(read_sfr1(&mut &b"SFRX\0\0\0\0\0"[..]), Err(Error::Format(_))));
        let mut trunc = b"SFR1".to_vec();
        trunc.extend_from_slice(&4u32.to_le_bytes());
        trunc.push(0);
        trunc.extend_from_slice(&[0u8; 10]);
        assert!(matches!(read_sfr1(&mut trunc.as_slice()), Err(Error::Format(_))));
        let mut bad_flag = b"SFR1".to_vec();
        bad_flag.extend_from_slice(&0u32.to_le_bytes());
        bad_flag.push(7);
        assert!(matches!(read_sfr1(&mut bad_flag.as_slice()), Err(Error::Format(_))));
        assert!(read_csv("index,re,im\n0,1,2\n0,1,2\n".as_bytes()).is_err());
        assert!(read_csv("0,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn sfr1_and_csv_round_trip(vals in prop::collection::vec((-1e6f64..1e6, -1e6f64..1e6), 0..64), freq in any::<bool>()) {
            let values: Vec<_> = vals.iter().map(|&(a, b)| Complex::new(a, b)).collect();
            let rec = SignalRecord { domain: if freq { Domain::Frequency } else { Domain::Time }, values: values.clone() };
            let mut buf = Vec::new();
            write_sfr1(&mut buf, &rec).unwrap();
            prop_assert_eq!(read_sfr1(&mut buf.as_slice()).unwrap(), Some(rec));

            let mut csv = Vec::new();
            write_csv(&mut csv, &values).unwrap();
            prop_assert_eq!(read_csv(csv.as_slice()).unwrap(), values);
        }
    }
}
