//! iq-csv capture files: header `n,i,q`, one sample per row, `n` counting
//! up from 0. Floats are written with 17 significant digits so a write/read
//! cycle is exact.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frft::{FrftOrder, SampleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaptureFormat {
    IqCsv,
}

impl FromStr for CaptureFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "iq-csv" => Ok(Self::IqCsv),
            other => Err(Error::InvalidArgument(format!(
                "unknown capture format `{other}`"
            ))),
        }
    }
}

pub fn ingest_capture(
    path: impl AsRef<Path>,
    format: CaptureFormat,
    theta: FrftOrder,
    period: f64,
) -> Result<SampleSet> {
    match format {
        CaptureFormat::IqCsv => read_iq_csv(File::open(path)?, theta, period),
    }
}

pub fn read_iq_csv<R: Read>(reader: R, theta: FrftOrder, period: f64) -> Result<SampleSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file, expected header `n,i,q`".into(),
            })
        }
        Some(r) => r.map_err(|e| csv_error(e, 1))?,
    };
    let names: Vec<&str> = header.iter().collect();
    if names != ["n", "i", "q"] {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `n,i,q`, got `{}`", names.join(",")),
        });
    }

    let mut values = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        if record.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 fields, got {}", record.len()),
            });
        }
        let n: i64 = record[0].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("sample index `{}` is not an integer", &record[0]),
        })?;
        let field = |idx: usize, name: &str| -> Result<f64> {
            let v: f64 = record[idx].parse().map_err(|_| Error::Parse {
                line,
                msg: format!("{name} value `{}` is not a number", &record[idx]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    msg: format!("{name} value is not finite"),
                });
            }
            Ok(v)
        };
        let (i, q) = (field(1, "i")?, field(2, "q")?);
        let expected = values.len() as i64;
        if n != expected {
            return Err(Error::Format {
                line,
                msg: format!("sample index {n} out of sequence, expected {expected}"),
            });
        }
        values.push(Complex64::new(i, q));
    }
    if values.is_empty() {
        return Err(Error::Parse {
            line: 2,
            msg: "no samples after header".into(),
        });
    }
    SampleSet::new(values, period, theta)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(fallback_line);
    Error::Parse {
        line,
        msg: e.to_string(),
    }
}

/// `{:.16e}`: 17 significant digits, locale independent.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_iq_csv<W: Write>(samples: &SampleSet, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "n,i,q")?;
    for (n, v) in samples.values().iter().enumerate() {
        writeln!(w, "{n},{},{}", format_f64(v.re), format_f64(v.im))?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_capture(samples: &SampleSet, path: impl AsRef<Path>) -> Result<()> {
    write_iq_csv(samples, File::create(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn order() -> FrftOrder {
        FrftOrder::new(0.785).unwrap()
    }

    fn parse(text: &str) -> Result<SampleSet> {
        read_iq_csv(text.as_bytes(), order(), 0.062)
    }

    #[test]
    fn reads_well_formed_file() {
        let s = parse("n,i,q\n0,1.5,-2\n1, 0.25 ,1e-3\n").unwrap();
        assert_eq!(
            s.values(),
            &[Complex64::new(1.5, -2.0), Complex64::new(0.25, 1e-3)]
        );
        assert_eq!(s.period(), 0.062);
        assert_eq!(s.theta(), order());
    }

    #[test]
    fn empty_and_header_only_are_parse_errors() {
        assert!(matches!(parse(""), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("n,i,q\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn wrong_header() {
        assert!(matches!(
            parse("idx,re,im\n0,1,2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn malformed_row_reports_line() {
        let err = parse("n,i,q\n0,1,2\n1,abc,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse("n,i,q\n0,1,2\n1,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
        let err = parse("n,i,q\n0.5,1,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn non_monotone_index_is_format_error() {
        let err = parse("n,i,q\n0,1,2\n2,1,2\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err:?}");
        let err = parse("n,i,q\n1,1,2\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err:?}");
        let err = parse("n,i,q\n0,1,2\n1,1,2\n1,0,0\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 4, .. }), "{err:?}");
    }

    #[test]
    fn format_is_unknown() {
        assert!("iq-csv".parse::<CaptureFormat>().is_ok());
        assert!("wav".parse::<CaptureFormat>().is_err());
    }

    proptest! {
        #[test]
        fn write_then_read_is_exact(data in proptest::collection::vec((-1e6f64..1e6, -1e-6f64..1e-6), 1..40)) {
            let vals: Vec<_> = data.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
            let s = SampleSet::new(vals, 0.062, order()).unwrap();
            let mut buf = Vec::new();
            write_iq_csv(&s, &mut buf).unwrap();
            let back = read_iq_csv(buf.as_slice(), order(), 0.062).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
