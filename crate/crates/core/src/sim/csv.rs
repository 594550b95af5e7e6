//! Curve records and their CSV form.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "snr_db,trials,bit_errors,symbol_errors,ber,ser,redrawn";

/// Error counts at one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub snr_db: f64,
    pub trials: u64,
    pub bit_errors: u64,
    pub symbol_errors: u64,
    pub ber: f64,
    pub ser: f64,
    /// Trials redrawn because the equivalent channel was singular.
    pub redrawn: u64,
}

impl CurveRecord {
    /// Derives the rates from counts over blocks of `l` symbols of `bits` bits each.
    pub fn from_counts(snr_db: f64, trials: u64, bit_errors: u64, symbol_errors: u64, redrawn: u64, l: usize, bits: usize) -> Self {
        let symbols = trials as f64 * l as f64;
        Self {
            snr_db,
            trials,
            bit_errors,
            symbol_errors,
            ber: bit_errors as f64 / (symbols * bits as f64),
            ser: symbol_errors as f64 / symbols,
            redrawn,
        }
    }
}

/// Seventeen significant digits, enough to recover any `f64`.
fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv<W: Write>(records: &[CurveRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            sig17(r.snr_db),
            r.trials,
            r.bit_errors,
            r.symbol_errors,
            sig17(r.ber),
            sig17(r.ser),
            r.redrawn
        )?;
    }
    Ok(())
}

pub fn csv_string(records: &[CurveRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

/// Writes `records` to `path`, creating parent directories.
pub fn emit_csv(records: &[CurveRecord], path: &Path) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, csv_string(records)).map_err(io)
}

pub fn parse_csv(text: &str) -> Result<Vec<CurveRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(Error::arg(format!("bad CSV header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 7 {
                return Err(Error::arg(format!("row {}: expected 7 cells, got {}", i + 1, cells.len())));
            }
            let bad = |c: &str| Error::arg(format!("row {}: cannot parse `{c}`", i + 1));
            let f = |c: &str| c.parse::<f64>().map_err(|_| bad(c));
            let u = |c: &str| c.parse::<u64>().map_err(|_| bad(c));
            Ok(CurveRecord {
                snr_db: f(cells[0])?,
                trials: u(cells[1])?,
                bit_errors: u(cells[2])?,
                symbol_errors: u(cells[3])?,
                ber: f(cells[4])?,
                ser: f(cells[5])?,
                redrawn: u(cells[6])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list_is_header_only() {
        assert_eq!(csv_string(&[]), format!("{CSV_HEADER}\n"));
        assert!(parse_csv(&csv_string(&[])).unwrap().is_empty());
    }

    #[test]
    fn half_survives_a_round_trip() {
        let r = CurveRecord::from_counts(7.25, 10, 40, 30, 1, 2, 4);
        assert_eq!(r.ber, 0.5);
        assert_eq!(r.ser, 1.5);
        let text = csv_string(std::slice::from_ref(&r));
        assert!(text.contains("5.0000000000000000e-1"));
        assert_eq!(parse_csv(&text).unwrap(), vec![r]);
    }

    #[test]
    fn awkward_values_round_trip() {
        let records: Vec<CurveRecord> = [0.1, 1.0 / 3.0, 2e-300, f64::MIN_POSITIVE, 123456.789]
            .iter()
            .map(|&x| CurveRecord { snr_db: -x, trials: 3, bit_errors: 2, symbol_errors: 1, ber: x, ser: x / 7.0, redrawn: 0 })
            .collect();
        assert_eq!(parse_csv(&csv_string(&records)).unwrap(), records);
    }

    #[test]
    fn emit_creates_directories_and_reports_paths() {
        let dir = std::env::temp_dir().join(format!("tstbc-csv-{}", std::process::id()));
        let path = dir.join("nested/curve.csv");
        let r = CurveRecord::from_counts(0.0, 1, 0, 0, 0, 1, 1);
        emit_csv(&[r.clone()], &path).unwrap();
        assert_eq!(parse_csv(&fs::read_to_string(&path).unwrap()).unwrap(), vec![r]);
        let blocked = path.join("below-a-file.csv");
        match emit_csv(&[], &blocked) {
            Err(Error::Io { path, .. }) => assert!(path.ends_with("below-a-file.csv")),
            other => panic!("expected an I/O error, got {other:?}"),
        }
        fs::remove_dir_all(dir).unwrap();
    }
}
