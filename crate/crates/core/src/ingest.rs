//! Measured coincidence counts and visibility calibrations.
//!
//! Counts files are UTF-8 CSV with the header `phase_rad,c0,c1,c2,c3` and an
//! optional trailing `acquisition_id` column. Phases are kept exactly as
//! written.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, LineError, Result};
use crate::model::{OutcomeTally, SETTING_COUNT};

const PHASE_COLUMN: &str = "phase_rad";
const COUNT_COLUMNS: [&str; SETTING_COUNT] = ["c0", "c1", "c2", "c3"];
const ID_COLUMN: &str = "acquisition_id";

/// One measured phase point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountsRecord {
    /// Nominal phase set on the wave plate, in radians.
    pub phase_label: f64,
    pub counts: [u64; SETTING_COUNT],
    pub acquisition_id: Option<String>,
}

impl CountsRecord {
    pub fn to_tally(&self) -> OutcomeTally {
        OutcomeTally::new(self.counts)
    }
}

/// Tally of a record; M is the sum of its four counts.
pub fn to_tally(record: &CountsRecord) -> OutcomeTally {
    record.to_tally()
}

/// A visibility measurement with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub visibility: f64,
    pub uncertainty: f64,
    pub sequence: u64,
}

impl CalibrationRecord {
    pub fn new(visibility: f64, uncertainty: f64, sequence: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&visibility) {
            return Err(Error::Visibility(visibility));
        }
        if !(uncertainty >= 0.0) || !uncertainty.is_finite() {
            return Err(Error::Domain(format!("uncertainty {uncertainty} must be >= 0")));
        }
        Ok(Self {
            visibility,
            uncertainty,
            sequence,
        })
    }
}

fn check_header(header: &csv::StringRecord) -> std::result::Result<bool, String> {
    let fields: Vec<&str> = header.iter().collect();
    let mut expected = vec![PHASE_COLUMN];
    expected.extend(COUNT_COLUMNS);
    let has_id = match fields.len() {
        5 => false,
        6 => true,
        n => return Err(format!("header has {n} columns, expected 5 or 6")),
    };
    if fields[..5] != expected[..] || (has_id && fields[5] != ID_COLUMN) {
        return Err(format!(
            "header must be `phase_rad,c0,c1,c2,c3[,acquisition_id]`, got `{}`",
            fields.join(",")
        ));
    }
    Ok(has_id)
}

fn parse_count(cell: &str, column: &str) -> std::result::Result<u64, String> {
    let cell = cell.trim();
    match cell.parse::<u64>() {
        Ok(n) => Ok(n),
        Err(_) if cell.parse::<i64>().is_ok() => {
            Err(format!("negative count `{cell}` in column {column}"))
        }
        Err(_) => Err(format!("non-numeric count `{cell}` in column {column}")),
    }
}

fn parse_row(row: &csv::StringRecord, has_id: bool) -> std::result::Result<CountsRecord, String> {
    let width = if has_id { 6 } else { 5 };
    if row.len() < 5 {
        return Err(format!("expected {width} columns, found {}", row.len()));
    }
    if row.len() > width {
        return Err(format!("expected {width} columns, found {}", row.len()));
    }
    let phase_cell = row[0].trim();
    let phase_label: f64 = phase_cell
        .parse()
        .map_err(|_| format!("non-numeric phase `{phase_cell}`"))?;
    if !phase_label.is_finite() {
        return Err(format!("phase `{phase_cell}` is not finite"));
    }
    let mut counts = [0u64; SETTING_COUNT];
    for (k, column) in COUNT_COLUMNS.iter().enumerate() {
        counts[k] = parse_count(&row[k + 1], column)?;
    }
    let acquisition_id = row
        .get(5)
        .map(str::trim)
        .filter(|id| !id.is_empty())
        .map(str::to_owned);
    Ok(CountsRecord {
        phase_label,
        counts,
        acquisition_id,
    })
}

/// Parses a counts file, reporting every bad line rather than the first.
pub fn parse_counts<R: Read>(input: R) -> Result<Vec<CountsRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = reader.headers().map_err(|e| {
        Error::Parse(vec![LineError {
            line: 1,
            message: e.to_string(),
        }])
    })?;
    if header.is_empty() {
        // an empty stream has no header and no rows
        return Ok(Vec::new());
    }
    let has_id = check_header(header).map_err(|message| Error::Parse(vec![LineError { line: 1, message }]))?;

    let mut records = Vec::new();
    let mut errors = Vec::new();
    for row in reader.records() {
        match row {
            Ok(row) => {
                let line = row.position().map_or(0, |p| p.line());
                match parse_row(&row, has_id) {
                    Ok(record) => records.push(record),
                    Err(message) => errors.push(LineError { line, message }),
                }
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                errors.push(LineError {
                    line,
                    message: e.to_string(),
                });
            }
        }
    }
    if errors.is_empty() {
        Ok(records)
    } else {
        Err(Error::Parse(errors))
    }
}

/// Writes records in the format [`parse_counts`] reads. The id column is
/// emitted only when some record carries an id.
pub fn write_counts<W: Write>(records: &[CountsRecord], output: W) -> Result<()> {
    let with_id = records.iter().any(|r| r.acquisition_id.is_some());
    let mut writer = csv::Writer::from_writer(output);
    let mut header = vec![PHASE_COLUMN];
    header.extend(COUNT_COLUMNS);
    if with_id {
        header.push(ID_COLUMN);
    }
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    writer.write_record(&header).map_err(csv_err)?;
    for r in records {
        let mut row = vec![r.phase_label.to_string()];
        row.extend(r.counts.iter().map(u64::to_string));
        if with_id {
            row.push(r.acquisition_id.clone().unwrap_or_default());
        }
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<CountsRecord>> {
        parse_counts(text.as_bytes())
    }

    #[test]
    fn header_only() {
        assert_eq!(parse("phase_rad,c0,c1,c2,c3\n").unwrap(), vec![]);
        assert_eq!(parse("").unwrap(), vec![]);
    }

    #[test]
    fn simple_row() {
        let records = parse("phase_rad,c0,c1,c2,c3\n0.0,500,250,0,250\n").unwrap();
        assert_eq!(
            records,
            vec![CountsRecord {
                phase_label: 0.0,
                counts: [500, 250, 0, 250],
                acquisition_id: None,
            }]
        );
        assert_eq!(records[0].to_tally().total(), 1000);
    }

    #[test]
    fn acquisition_ids_and_order() {
        let text = "phase_rad,c0,c1,c2,c3,acquisition_id\n2.8,1,2,3,4,run-7\n0.1,0,0,0,0,\n";
        let records = parse(text).unwrap();
        assert_eq!(records[0].phase_label, 2.8);
        assert_eq!(records[0].acquisition_id.as_deref(), Some("run-7"));
        assert_eq!(records[1].acquisition_id, None);
        assert_eq!(to_tally(&records[1]).total(), 0);
    }

    #[test]
    fn negative_count_names_line() {
        let err = parse("phase_rad,c0,c1,c2,c3\n0.1,1,1,1,1\n0.2,1,-3,1,1\n").unwrap_err();
        match err {
            Error::Parse(lines) => {
                assert_eq!(lines.len(), 1);
                assert_eq!(lines[0].line, 3);
                assert!(lines[0].message.contains("negative"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reports_every_bad_line() {
        let text = "phase_rad,c0,c1,c2,c3\n\
                    0.1,1,1,1\n\
                    0.2,1,1,1,1\n\
                    abc,1,1,1,1\n\
                    0.4,1,x,1,1\n\
                    0.5,1,1,1,1,extra\n";
        match parse(text).unwrap_err() {
            Error::Parse(lines) => {
                let numbers: Vec<u64> = lines.iter().map(|l| l.line).collect();
                assert_eq!(numbers, vec![2, 4, 5, 6]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_header() {
        assert!(matches!(parse("phase,c0,c1,c2,c3\n"), Err(Error::Parse(_))));
        assert!(matches!(parse("phase_rad,c0,c1,c2\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn large_count_row() {
        let records = parse("phase_rad,c0,c1,c2,c3\n1.3,2600,2400,2500,2500\n").unwrap();
        assert_eq!(records[0].to_tally().total(), 10_000);
    }

    #[test]
    fn calibration_validation() {
        assert!(CalibrationRecord::new(0.985, 0.003, 0).is_ok());
        assert!(CalibrationRecord::new(1.001, 0.003, 0).is_err());
        assert!(CalibrationRecord::new(0.95, -0.1, 0).is_err());
        // uncertainty may straddle the physical range
        assert!(CalibrationRecord::new(0.999, 0.004, 1).is_ok());
    }
}
