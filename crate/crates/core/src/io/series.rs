//! Diagnostics series as CSV.
//!
//! Columns: `t, mass_u, mass_v`, then `lp_u_<p>, lp_v_<p>` per requested `p`,
//! `phi, h`, then `kdist_u_<p>, kdist_v_<p>` per `p`, `moment_u` and
//! `boundary_tail`. Values are written with 17 significant digits; absent
//! values are `nan`. Lines starting with `#` are comments; a run that fails
//! leaves a final `# TRUNCATED: ...` line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::analysis::diagnostics::{ComponentPair, DiagnosticsRecord, DiagnosticsSink};
use crate::error::{Error, Result};
use crate::norms::LpExponent;

pub const TRUNCATION_MARKER: &str = "# TRUNCATED";

pub fn header(p_list: &[LpExponent]) -> Vec<String> {
    let mut cols: Vec<String> = vec!["t".into(), "mass_u".into(), "mass_v".into()];
    for p in p_list {
        cols.push(format!("lp_u_{p}"));
        cols.push(format!("lp_v_{p}"));
    }
    cols.push("phi".into());
    cols.push("h".into());
    for p in p_list {
        cols.push(format!("kdist_u_{p}"));
        cols.push(format!("kdist_v_{p}"));
    }
    cols.push("moment_u".into());
    cols.push("boundary_tail".into());
    cols
}

fn fmt(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_row(rec: &DiagnosticsRecord, p_list: &[LpExponent]) -> String {
    let mut vals = vec![rec.t, rec.mass_u, rec.mass_v];
    for p in p_list {
        let e = rec.lp_norms.iter().find(|e| e.p == *p);
        vals.push(e.map_or(f64::NAN, |e| e.u));
        vals.push(e.map_or(f64::NAN, |e| e.v));
    }
    vals.push(rec.phi);
    vals.push(rec.h);
    for p in p_list {
        let e = rec.kernel_dist.iter().flatten().find(|e| e.p == *p);
        vals.push(e.map_or(f64::NAN, |e| e.u));
        vals.push(e.map_or(f64::NAN, |e| e.v));
    }
    vals.push(rec.moment_u.unwrap_or(f64::NAN));
    vals.push(rec.boundary_tail);
    vals.into_iter().map(fmt).collect::<Vec<_>>().join(",")
}

/// Streams records to a CSV file as they are produced.
pub struct CsvSink<W: Write> {
    out: W,
    p_list: Vec<LpExponent>,
}

impl CsvSink<BufWriter<File>> {
    pub fn create(path: &Path, p_list: &[LpExponent], reproducible: bool) -> Result<Self> {
        Self::new(BufWriter::new(File::create(path)?), p_list, reproducible)
    }
}

impl<W: Write> CsvSink<W> {
    /// Writes the header. Unless `reproducible`, a comment line with the
    /// creation time precedes it.
    pub fn new(mut out: W, p_list: &[LpExponent], reproducible: bool) -> Result<Self> {
        if !reproducible {
            let secs = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            writeln!(out, "# created unix={secs}")?;
        }
        writeln!(out, "{}", header(p_list).join(","))?;
        Ok(CsvSink {
            out,
            p_list: p_list.to_vec(),
        })
    }

    /// Appends the truncation marker naming why the run stopped.
    pub fn mark_truncated(&mut self, reason: &str) -> Result<()> {
        writeln!(self.out, "{TRUNCATION_MARKER}: {}", reason.replace('\n', " "))?;
        self.out.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> DiagnosticsSink for CsvSink<W> {
    fn record(&mut self, rec: &DiagnosticsRecord) -> Result<()> {
        writeln!(self.out, "{}", format_row(rec, &self.p_list))?;
        Ok(())
    }
}

/// A series read back from CSV.
#[derive(Clone, Debug)]
pub struct SeriesFile {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub truncated: bool,
}

impl SeriesFile {
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownQuantity(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Exponents named by the `lp_u_<p>` columns.
    pub fn p_list(&self) -> Result<Vec<LpExponent>> {
        self.columns
            .iter()
            .filter_map(|c| c.strip_prefix("lp_u_"))
            .map(str::parse)
            .collect()
    }

    pub fn records(&self) -> Result<Vec<DiagnosticsRecord>> {
        let p_list = self.p_list()?;
        let get = |row: &[f64], name: &str| -> Result<f64> {
            let idx = self
                .columns
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::UnknownQuantity(name.to_string()))?;
            Ok(row[idx])
        };
        self.rows
            .iter()
            .map(|row| {
                let mut lp_norms = Vec::new();
                let mut kernel_dist = Vec::new();
                for &p in &p_list {
                    lp_norms.push(ComponentPair {
                        p,
                        u: get(row, &format!("lp_u_{p}"))?,
                        v: get(row, &format!("lp_v_{p}"))?,
                    });
                    let (ku, kv) = (get(row, &format!("kdist_u_{p}"))?, get(row, &format!("kdist_v_{p}"))?);
                    kernel_dist.push(if ku.is_nan() && kv.is_nan() {
                        None
                    } else {
                        Some(ComponentPair { p, u: ku, v: kv })
                    });
                }
                let moment = get(row, "moment_u")?;
                Ok(DiagnosticsRecord {
                    t: get(row, "t")?,
                    mass_u: get(row, "mass_u")?,
                    mass_v: get(row, "mass_v")?,
                    lp_norms,
                    phi: get(row, "phi")?,
                    h: get(row, "h")?,
                    kernel_dist,
                    moment_u: if moment.is_nan() { None } else { Some(moment) },
                    boundary_tail: get(row, "boundary_tail")?,
                })
            })
            .collect()
    }
}

pub fn parse_series(text: &str) -> Result<SeriesFile> {
    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut truncated = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            truncated |= line.starts_with(TRUNCATION_MARKER);
            continue;
        }
        match &columns {
            None => columns = Some(line.split(',').map(|s| s.trim().to_string()).collect()),
            Some(cols) => {
                let row: Vec<f64> = line
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::InvalidArgument(format!("line {}: bad number `{s}`", i + 1)))
                    })
                    .collect::<Result<_>>()?;
                if row.len() != cols.len() {
                    return Err(Error::InvalidArgument(format!(
                        "line {}: {} values for {} columns",
                        i + 1,
                        row.len(),
                        cols.len()
                    )));
                }
                rows.push(row);
            }
        }
    }
    let columns = columns.ok_or_else(|| Error::InvalidArgument("series has no header".into()))?;
    Ok(SeriesFile {
        columns,
        rows,
        truncated,
    })
}

pub fn read_series(path: &Path) -> Result<SeriesFile> {
    let mut text = String::new();
    for line in BufReader::new(File::open(path)?).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    parse_series(&text)
}
