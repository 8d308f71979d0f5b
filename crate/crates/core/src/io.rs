//! CSV and JSON import/export of traces, snapshots and signal series.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::{SimTrace, Snapshot};
use crate::error::{CarlError, Result};

pub const TRACE_HEADER: [&str; 8] = ["t", "re_alpha_plus", "im_alpha_plus", "re_alpha_minus", "im_alpha_minus", "b", "v_mean", "p_beat"];

#[derive(Debug, Serialize, Deserialize)]
struct TraceRow {
    t: f64,
    re_alpha_plus: f64,
    im_alpha_plus: f64,
    re_alpha_minus: f64,
    im_alpha_minus: f64,
    b: f64,
    v_mean: f64,
    p_beat: f64,
}

/// Writes the sampled trace columns. Floats use the shortest round-trip
/// representation, so reading back is lossless.
pub fn write_trace_csv<W: Write>(trace: &SimTrace, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..trace.len() {
        w.serialize(TraceRow {
            t: trace.times[i],
            re_alpha_plus: trace.alpha_plus[i].re,
            im_alpha_plus: trace.alpha_plus[i].im,
            re_alpha_minus: trace.alpha_minus[i].re,
            im_alpha_minus: trace.alpha_minus[i].im,
            b: trace.bunching[i],
            v_mean: trace.mean_velocity[i],
            p_beat: trace.beat_power[i],
        })?;
    }
    if trace.is_empty() {
        w.write_record(TRACE_HEADER)?;
    }
    w.flush().map_err(|e| CarlError::io("<trace>", e))?;
    Ok(())
}

/// Reads the columns written by [`write_trace_csv`]. Momentum and photon
/// bookkeeping are not part of the CSV and come back empty.
pub fn read_trace_csv<R: Read>(input: R) -> Result<SimTrace> {
    let mut r = csv::Reader::from_reader(input);
    let mut t = SimTrace::default();
    for row in r.deserialize() {
        let row: TraceRow = row?;
        t.times.push(row.t);
        t.alpha_plus.push(Complex64::new(row.re_alpha_plus, row.im_alpha_plus));
        t.alpha_minus.push(Complex64::new(row.re_alpha_minus, row.im_alpha_minus));
        t.bunching.push(row.b);
        t.mean_velocity.push(row.v_mean);
        t.beat_power.push(row.p_beat);
    }
    Ok(t)
}

/// One row per particle per snapshot: `t, index, x, p`.
pub fn write_snapshots_csv<W: Write>(snapshots: &[Snapshot], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "index", "x", "p"])?;
    for s in snapshots {
        for (i, (x, p)) in s.positions.iter().zip(&s.momenta).enumerate() {
            w.write_record([s.time.to_string(), i.to_string(), x.to_string(), p.to_string()])?;
        }
    }
    w.flush().map_err(|e| CarlError::io("<snapshots>", e))?;
    Ok(())
}

/// Writes equal-length columns under the given header.
pub fn write_columns_csv<W: Write>(header: &[&str], columns: &[&[f64]], out: W) -> Result<()> {
    if header.len() != columns.len() {
        return Err(CarlError::invalid("columns", "header and column count differ"));
    }
    let n = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != n) {
        return Err(CarlError::invalid("columns", "columns differ in length"));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for i in 0..n {
        w.write_record(columns.iter().map(|c| c[i].to_string()))?;
    }
    w.flush().map_err(|e| CarlError::io("<columns>", e))?;
    Ok(())
}

/// Reads a headed CSV of numeric columns; returns the header and the columns.
pub fn read_columns_csv<R: Read>(input: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (j, field) in rec.iter().enumerate().take(header.len()) {
            let v: f64 = field.trim().parse().map_err(|_| {
                CarlError::InvalidConfig(format!("row {}: `{field}` in column `{}` is not a number", line + 2, header[j]))
            })?;
            cols[j].push(v);
        }
    }
    Ok((header, cols))
}

/// Two-column `(x, value)` series.
pub fn write_series_csv<W: Write>(names: [&str; 2], x: &[f64], y: &[f64], out: W) -> Result<()> {
    write_columns_csv(&names, &[x, y], out)
}

pub fn read_series_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let (header, mut cols) = read_columns_csv(input)?;
    if cols.len() < 2 {
        return Err(CarlError::InvalidConfig(format!("expected two columns, found {}", header.len())));
    }
    let y = cols.swap_remove(1);
    let x = cols.swap_remove(0);
    Ok((x, y))
}

/// `(Δ, A, φ)` demodulation triples.
pub fn write_profile_csv<W: Write>(detuning: &[f64], amplitude: &[f64], phase: &[f64], out: W) -> Result<()> {
    write_columns_csv(&["detuning", "amplitude", "phase"], &[detuning, amplitude, phase], out)
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| CarlError::io(path, e))
}

pub fn open_file(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CarlError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = open_file(path)?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| CarlError::from(e).context(path.display().to_string()))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut f = create_file(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    f.write_all(b"\n").and_then(|_| f.flush()).map_err(|e| CarlError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_round_trip_is_lossless() {
        let mut t = SimTrace::default();
        for i in 0..5 {
            let x = i as f64 * 0.1234567891234;
            t.times.push(x);
            t.alpha_plus.push(Complex64::new(1.0 / 3.0 + x, -x));
            t.alpha_minus.push(Complex64::new(x.sin(), 1e-300));
            t.bunching.push(0.5 * x);
            t.mean_velocity.push(-x);
            t.beat_power.push(x.exp());
        }
        let mut buf = Vec::new();
        write_trace_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&TRACE_HEADER.join(",")));
        let back = read_trace_csv(buf.as_slice()).unwrap();
        assert_eq!(back.times, t.times);
        assert_eq!(back.alpha_plus, t.alpha_plus);
        assert_eq!(back.alpha_minus, t.alpha_minus);
        assert_eq!(back.beat_power, t.beat_power);
    }

    #[test]
    fn series_round_trip() {
        let x = [0.0, 1.5, 3.0];
        let y = [2.0, -1.0, 1e-12];
        let mut buf = Vec::new();
        write_series_csv(["t", "value"], &x, &y, &mut buf).unwrap();
        let (xb, yb) = read_series_csv(buf.as_slice()).unwrap();
        assert_eq!(xb, x);
        assert_eq!(yb, y);
    }

    #[test]
    fn bad_number_names_row_and_column() {
        let err = read_columns_csv("a,b\n1,2\n3,x\n".as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 3") && msg.contains("`b`"), "{msg}");
    }

    #[test]
    fn column_lengths_are_checked() {
        let mut buf = Vec::new();
        assert!(write_columns_csv(&["a", "b"], &[&[1.0], &[1.0, 2.0]], &mut buf).is_err());
    }
}
