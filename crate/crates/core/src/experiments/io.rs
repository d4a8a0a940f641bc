//! CSV in and out. Numbers are written with 17 significant digits so that
//! every `f64` survives a write/read cycle unchanged.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{invalid, Error, Result};
use crate::process::Trajectory;

/// Which columns hold the time index and the observations. Without a time
/// column the row order is the time index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub time: Option<String>,
    pub value: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            time: Some("t".into()),
            value: "x".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub path: Option<PathBuf>,
    pub mapping: ColumnMapping,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Observations per natural cycle (12 for monthly data), when known.
    pub frequency: Option<usize>,
    pub rows_read: usize,
    /// Line numbers of rows skipped because the value was missing or not finite.
    pub dropped_lines: Vec<u64>,
}

impl SeriesFile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_frequency(mut self, frequency: usize) -> Self {
        self.frequency = Some(frequency);
        self
    }
}

/// Formats a double with 17 significant digits.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn is_gap(field: &str) -> bool {
    matches!(
        field.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null" | "inf" | "-inf"
    )
}

pub fn ingest_reader<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<SeriesFile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let value_col = column(&mapping.value)?;
    let time_col = mapping.time.as_deref().map(column).transpose()?;

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut dropped_lines = Vec::new();
    let mut rows_read = 0;
    let mut last_time: Option<f64> = None;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        rows_read += 1;
        let field = |col: usize| {
            record.get(col).ok_or_else(|| Error::Parse {
                line,
                message: "short row".into(),
            })
        };
        let time = match time_col {
            Some(col) => {
                let raw = field(col)?;
                raw.parse::<f64>()
                    .ok()
                    .filter(|t| t.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("malformed time `{raw}`"),
                    })?
            }
            None => rows_read as f64,
        };
        if let Some(prev) = last_time {
            if time == prev {
                return Err(Error::DuplicateTimestamp { line, time });
            }
            if time < prev {
                return Err(Error::Parse {
                    line,
                    message: format!("time {time} is not increasing"),
                });
            }
        }
        last_time = Some(time);
        let raw = field(value_col)?;
        if is_gap(raw) {
            dropped_lines.push(line);
            continue;
        }
        let value: f64 = raw.parse().map_err(|_| Error::Parse {
            line,
            message: format!("malformed value `{raw}`"),
        })?;
        if !value.is_finite() {
            dropped_lines.push(line);
            continue;
        }
        times.push(time);
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    if values.len() < 2 {
        return Err(invalid("series needs at least 2 observations"));
    }
    Ok(SeriesFile {
        path: None,
        mapping: mapping.clone(),
        times,
        values,
        frequency: None,
        rows_read,
        dropped_lines,
    })
}

pub fn ingest_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<SeriesFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut series = ingest_reader(file, mapping)?;
    series.path = Some(path.to_path_buf());
    Ok(series)
}

/// `t,x` rows for `t = 1..=nT`.
pub fn write_trajectory_csv<W: Write>(mut out: W, traj: &Trajectory) -> Result<()> {
    let mut buf = String::with_capacity(28 * traj.len() + 4);
    buf.push_str("t,x\n");
    for (t, x) in traj.values().iter().enumerate() {
        buf.push_str(&(t + 1).to_string());
        buf.push(',');
        buf.push_str(&format_f64(*x));
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{simulate, CoefficientFamily, NoiseModel};

    fn parse(text: &str) -> Result<SeriesFile> {
        ingest_reader(text.as_bytes(), &ColumnMapping::default())
    }

    #[test]
    fn two_rows() {
        let s = parse("t,x\n1,0.5\n2,-0.3\n").unwrap();
        assert_eq!(s.values, vec![0.5, -0.3]);
        assert_eq!(s.rows_read, 2);
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(parse("t,x\n"), Err(Error::EmptySeries)));
    }

    #[test]
    fn malformed_value_reports_line() {
        match parse("t,x\n1,0.5\n2,abc\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_and_decreasing_times() {
        assert!(matches!(
            parse("t,x\n1,1\n1,2\n"),
            Err(Error::DuplicateTimestamp { line: 3, .. })
        ));
        assert!(matches!(parse("t,x\n2,1\n1,2\n"), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn gaps_are_dropped_and_reported() {
        let s = parse("t,x\n1,1\n2,NA\n3,\n4,2\n").unwrap();
        assert_eq!(s.values, vec![1.0, 2.0]);
        assert_eq!(s.dropped_lines, vec![3, 4]);
        assert_eq!(s.rows_read, 4);
    }

    #[test]
    fn custom_mapping_without_time() {
        let mapping = ColumnMapping {
            time: None,
            value: "temp".into(),
        };
        let s = ingest_reader("year,temp\n1659,3.0\n1659,4.5\n".as_bytes(), &mapping).unwrap();
        assert_eq!(s.values, vec![3.0, 4.5]);
        assert!(ingest_reader("a,b\n1,2\n".as_bytes(), &mapping).is_err());
    }

    #[test]
    fn round_trip_is_bitwise() {
        let c = CoefficientFamily::constant(&[0.7, -0.2]).unwrap();
        let traj = simulate(&c, &NoiseModel::student_t(3.0).unwrap(), 500, 21).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        assert!(buf.starts_with(b"t,x\n1,"));
        assert!(!buf.contains(&b'\r'));
        let back = ingest_reader(buf.as_slice(), &ColumnMapping::default()).unwrap();
        assert_eq!(back.values, traj.values());
    }
}
