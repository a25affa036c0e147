//! Plain-dialect CSV reading and writing.
//!
//! The dialect is deliberately narrow: comma separators, `.` decimal
//! points, no quoting, one optional header row detected by its first field
//! failing to parse as a number. That covers both our own artifacts and
//! typical numeric exports, without pulling in a full CSV parser.

use std::fmt::Write as _;
use std::path::Path;

use npmix::jsonfmt::format_f64;
use npmix::synthetic::LabeledSample;
use npmix::Dataset;

/// A parsed CSV: optional header and rectangular numeric rows.
pub struct Table {
    /// Column names when the file had a header row.
    pub header: Option<Vec<String>>,
    /// Numeric rows, all of equal length.
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    /// Converts the table to a dataset, dropping the named columns first.
    /// Drops match header names when a header exists, otherwise 0-based
    /// column indices.
    pub fn to_dataset(&self, drop: &[String]) -> Result<Dataset, String> {
        let width = self.rows.first().map_or(0, Vec::len);
        let mut keep = vec![true; width];
        for spec in drop {
            let idx = match &self.header {
                Some(names) => names
                    .iter()
                    .position(|n| n == spec)
                    .ok_or_else(|| format!("no column named '{spec}' in the header"))?,
                None => spec
                    .parse::<usize>()
                    .map_err(|_| format!("'{spec}': without a header, drop columns by index"))?,
            };
            if idx >= width {
                return Err(format!("drop column {idx} out of range (width {width})"));
            }
            keep[idx] = false;
        }
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&keep)
                    .filter(|(_, &k)| k)
                    .map(|(v, _)| *v)
                    .collect()
            })
            .collect();
        Dataset::from_rows(&rows).map_err(|e| e.to_string())
    }
}

/// Reads and parses a CSV file.
pub fn read_table(path: &Path) -> Result<Table, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    parse_table(&text)
}

/// Parses CSV text: header auto-detection, rectangular check, numeric
/// fields everywhere.
pub fn parse_table(text: &str) -> Result<Table, String> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines.next().ok_or("empty file")?;
    let first_fields: Vec<&str> = first.split(',').map(str::trim).collect();
    let width = first_fields.len();

    let mut header = None;
    let mut rows = Vec::new();
    match parse_row(&first_fields) {
        Some(row) => rows.push(row),
        None => header = Some(first_fields.iter().map(|s| s.to_string()).collect()),
    }
    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != width {
            return Err(format!(
                "line {}: {} fields, expected {width}",
                line_no + 1,
                fields.len()
            ));
        }
        let row = parse_row(&fields)
            .ok_or_else(|| format!("line {}: non-numeric field", line_no + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err("no data rows".into());
    }
    Ok(Table { header, rows })
}

fn parse_row(fields: &[&str]) -> Option<Vec<f64>> {
    fields
        .iter()
        .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

/// Renders a labeled synthetic sample: `x1..xJ` columns, then a `label`
/// column with the 1-based generating component.
pub fn labeled_sample_csv(sample: &LabeledSample) -> String {
    let j = sample.data.j();
    let mut out = String::new();
    for jj in 1..=j {
        let _ = write!(out, "x{jj},");
    }
    out.push_str("label\n");
    for i in 0..sample.data.n() {
        for jj in 0..j {
            let _ = write!(out, "{},", format_f64(sample.data.x(i, jj)));
        }
        let _ = writeln!(out, "{}", sample.labels[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_headerless_numeric_csv() {
        let t = parse_table("1.0,2.0\n3.0,4.0\n").unwrap();
        assert!(t.header.is_none());
        assert_eq!(t.rows, vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
    }

    #[test]
    fn detects_header_and_drops_by_name() {
        let t = parse_table("x1,x2,label\n0.5,1.5,1\n0.25,2.5,2\n").unwrap();
        assert_eq!(
            t.header.as_deref(),
            Some(&["x1".to_string(), "x2".into(), "label".into()][..])
        );
        let d = t.to_dataset(&["label".into()]).unwrap();
        assert_eq!((d.n(), d.j()), (2, 2));
        assert_eq!(d.row(1), &[0.25, 2.5]);
        assert!(t.to_dataset(&["bogus".into()]).is_err());
    }

    #[test]
    fn drop_by_index_without_header() {
        let t = parse_table("1,2,9\n3,4,9\n").unwrap();
        let d = t.to_dataset(&["2".into()]).unwrap();
        assert_eq!((d.n(), d.j()), (2, 2));
        assert_eq!(d.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(parse_table("").is_err());
        assert!(parse_table("x1,x2\n").is_err(), "header but no rows");
        assert!(parse_table("1,2\n3\n").is_err(), "ragged rows");
        assert!(parse_table("1,2\n3,oops\n").is_err(), "non-numeric field");
        assert!(parse_table("1,inf\n").is_err(), "non-finite field");
    }

    #[test]
    fn sample_csv_round_trips_through_the_parser() {
        use npmix::{sample, Family, SyntheticSpec};
        let spec = SyntheticSpec::new(Family::StudentT3, 2).unwrap();
        let labeled = sample(&spec, 5, 3).unwrap();
        let text = labeled_sample_csv(&labeled);
        let t = parse_table(&text).unwrap();
        let d = t.to_dataset(&["label".into()]).unwrap();
        assert_eq!(d, labeled.data, "17-digit CSV floats must round-trip");
    }
}
