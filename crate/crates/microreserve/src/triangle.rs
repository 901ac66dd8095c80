//! Run-off triangles of claim counts.
//!
//! Rows are accident years, columns development (reporting-delay) years.
//! At evaluation only the upper-left trapezoid is observed: for accident
//! year `i` (0-based) the cells `j <= I - 1 - i` are known.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunoffTriangle {
    /// Calendar year of the first accident row.
    pub first_accident_year: i32,
    /// Number of accident years I (rows).
    pub accident_years: usize,
    /// Number of development years J (columns), J <= I.
    pub development_years: usize,
    /// `cells[i]` holds the observed counts for accident year `i` and has
    /// length `min(J, I - i)`.
    pub cells: Vec<Vec<u64>>,
}

impl RunoffTriangle {
    pub fn new(first_accident_year: i32, cells: Vec<Vec<u64>>, development_years: usize) -> Result<Self> {
        let accident_years = cells.len();
        if accident_years == 0 {
            return Err(Error::Validation("triangle has no accident years".to_string()));
        }
        if development_years == 0 || development_years > accident_years {
            return Err(Error::Validation(format!(
                "development years must lie in 1..={accident_years}"
            )));
        }
        for (i, row) in cells.iter().enumerate() {
            let expected = development_years.min(accident_years - i);
            if row.len() != expected {
                return Err(Error::Validation(format!(
                    "accident row {i} has {} cells, expected {expected}",
                    row.len()
                )));
            }
        }
        Ok(RunoffTriangle { first_accident_year, accident_years, development_years, cells })
    }

    /// Observed count for `(accident row, development year)`, if the cell
    /// lies in the observed trapezoid.
    pub fn get(&self, i: usize, j: usize) -> Option<u64> {
        self.cells.get(i).and_then(|row| row.get(j).copied())
    }

    /// Number of observed development cells for accident row `i`.
    pub fn observed_devs(&self, i: usize) -> usize {
        self.cells[i].len()
    }

    /// Observed claims per accident row (`N_i^obs`).
    pub fn observed_row_totals(&self) -> Vec<u64> {
        self.cells.iter().map(|row| row.iter().sum()).collect()
    }

    /// Cumulative counts along each row.
    pub fn cumulative(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|row| {
                row.iter()
                    .scan(0u64, |acc, &v| {
                        *acc += v;
                        Some(*acc as f64)
                    })
                    .collect()
            })
            .collect()
    }

    /// Serializes to delimiter-separated text: header `accident_year`,
    /// `dev_0..dev_{J-1}`; unobserved cells are blank.
    pub fn to_csv_string(&self, delimiter: char) -> String {
        let mut out = String::new();
        out.push_str("accident_year");
        for j in 0..self.development_years {
            let _ = write!(out, "{delimiter}dev_{j}");
        }
        out.push('\n');
        for (i, row) in self.cells.iter().enumerate() {
            let _ = write!(out, "{}", self.first_accident_year + i as i32);
            for j in 0..self.development_years {
                out.push(delimiter);
                if let Some(v) = row.get(j) {
                    let _ = write!(out, "{v}");
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(text: &str, delimiter: char) -> Result<RunoffTriangle> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Validation("empty triangle file".to_string()))?;
        let dev_cols = header.split(delimiter).count().saturating_sub(1);
        if dev_cols == 0 {
            return Err(Error::Validation("triangle header has no development columns".to_string()));
        }
        let mut first_year: Option<i32> = None;
        let mut cells: Vec<Vec<u64>> = Vec::new();
        for (line_no, line) in lines {
            let mut parts = line.split(delimiter);
            let year: i32 = parts
                .next()
                .unwrap()
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no + 1, "bad accident year"))?;
            if first_year.is_none() {
                first_year = Some(year);
            }
            let mut row = Vec::new();
            for cell in parts {
                let cell = cell.trim();
                if cell.is_empty() {
                    break;
                }
                row.push(
                    cell.parse::<u64>()
                        .map_err(|_| Error::parse(line_no + 1, format!("bad count {cell:?}")))?,
                );
            }
            cells.push(row);
        }
        let first_accident_year =
            first_year.ok_or_else(|| Error::Validation("triangle has no rows".to_string()))?;
        RunoffTriangle::new(first_accident_year, cells, dev_cols)
    }
}
