//! Two-dimensional result grids with masked cells, and their CSV/JSON forms.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
    /// Optional display names, one per value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            values,
            labels: None,
        }
    }

    pub fn labelled(name: impl Into<String>, values: Vec<f64>, labels: Vec<String>) -> Self {
        Self {
            name: name.into(),
            values,
            labels: Some(labels),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => format_float(self.values[i]),
        }
    }

    /// `count` evenly spaced values from `start` to `end` inclusive.
    pub fn linspace(name: impl Into<String>, start: f64, end: f64, count: usize) -> Self {
        let values = match count {
            0 => Vec::new(),
            1 => vec![start],
            _ => (0..count)
                .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
                .collect(),
        };
        Self::new(name, values)
    }
}

/// Why a cell carries no value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskReason {
    /// Parameters violate the sweep's ordering constraint.
    OutOfOrder,
    /// No positive work is extractable.
    NonPositiveWork,
    /// A functional is undefined for this cell.
    Degenerate,
    /// No admissible value exists (e.g. no feasible rate or work fraction).
    Infeasible,
    /// The computation failed (overflow guard, convergence, ...).
    Failed,
    /// The run was interrupted before this cell was computed.
    Cancelled,
}

impl MaskReason {
    /// Masks that follow from the sweep geometry rather than from a failure.
    pub fn is_structural(self) -> bool {
        matches!(self, Self::OutOfOrder | Self::NonPositiveWork)
    }
}

impl fmt::Display for MaskReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::OutOfOrder => "out-of-order",
            Self::NonPositiveWork => "non-positive-work",
            Self::Degenerate => "degenerate",
            Self::Infeasible => "infeasible",
            Self::Failed => "failed",
            Self::Cancelled => "cancelled",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Value(f64),
    Masked(MaskReason),
}

impl Cell {
    pub fn value(self) -> Option<f64> {
        match self {
            Cell::Value(v) => Some(v),
            Cell::Masked(_) => None,
        }
    }
}

/// Row-major grid of values over two axes.
///
/// Each cell has either a finite value or a mask reason, never both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub title: String,
    /// What the values are (e.g. `infidelity`).
    pub quantity: String,
    pub rows: Axis,
    pub cols: Axis,
    pub values: Vec<Option<f64>>,
    pub mask: Vec<Option<MaskReason>>,
    /// Polyline in axis coordinates drawn over the grid, if any.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overlay: Vec<(f64, f64)>,
}

impl SweepGrid {
    pub fn from_cells(
        title: impl Into<String>,
        quantity: impl Into<String>,
        rows: Axis,
        cols: Axis,
        cells: Vec<Cell>,
    ) -> Result<Self> {
        if cells.len() != rows.len() * cols.len() {
            return Err(Error::InvalidParameter(format!(
                "{} cells for a {}x{} grid",
                cells.len(),
                rows.len(),
                cols.len()
            )));
        }
        let mut values = Vec::with_capacity(cells.len());
        let mut mask = Vec::with_capacity(cells.len());
        for c in cells {
            match c {
                Cell::Value(v) if v.is_finite() => {
                    values.push(Some(v));
                    mask.push(None);
                }
                Cell::Value(_) => {
                    values.push(None);
                    mask.push(Some(MaskReason::Failed));
                }
                Cell::Masked(r) => {
                    values.push(None);
                    mask.push(Some(r));
                }
            }
        }
        Ok(Self {
            title: title.into(),
            quantity: quantity.into(),
            rows,
            cols,
            values,
            mask,
            overlay: Vec::new(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.values[row * self.cols.len() + col]
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        let i = row * self.cols.len() + col;
        match (self.values[i], self.mask[i]) {
            (Some(v), _) => Cell::Value(v),
            (None, Some(r)) => Cell::Masked(r),
            (None, None) => Cell::Masked(MaskReason::Failed),
        }
    }

    pub fn row(&self, row: usize) -> &[Option<f64>] {
        let w = self.cols.len();
        &self.values[row * w..(row + 1) * w]
    }

    /// Fraction of cells masked for a non-structural reason.
    pub fn failure_fraction(&self) -> f64 {
        if self.mask.is_empty() {
            return 0.0;
        }
        let failed = self
            .mask
            .iter()
            .filter(|m| m.is_some_and(|r| !r.is_structural()))
            .count();
        failed as f64 / self.mask.len() as f64
    }

    /// Header line `rows\cols,c1,c2,...`, then one line per row; masked cells are `NA`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "{}\\{}",
            csv_field(&self.rows.name),
            csv_field(&self.cols.name)
        );
        for j in 0..self.cols.len() {
            let _ = write!(out, ",{}", csv_field(&self.cols.label(j)));
        }
        out.push('\n');
        for i in 0..self.rows.len() {
            out.push_str(&csv_field(&self.rows.label(i)));
            for v in self.row(i) {
                match v {
                    Some(v) => {
                        out.push(',');
                        out.push_str(&format_float(*v));
                    }
                    None => out.push_str(",NA"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let grid: Self = serde_json::from_str(s)?;
        let n = grid.rows.len() * grid.cols.len();
        if grid.values.len() != n || grid.mask.len() != n {
            return Err(Error::InvalidParameter(
                "grid size does not match its axes".into(),
            ));
        }
        Ok(grid)
    }
}

/// Shortest text that parses back to exactly `v`; scientific notation outside
/// `[1e-4, 1e15)`.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepGrid {
        SweepGrid::from_cells(
            "t",
            "infidelity",
            Axis::new("n", vec![5.0, 10.0]),
            Axis::new("lambda", vec![0.0, 0.5, 1.0]),
            vec![
                Cell::Value(0.1),
                Cell::Value(1e-300),
                Cell::Masked(MaskReason::Failed),
                Cell::Value(0.30000000000000004),
                Cell::Masked(MaskReason::OutOfOrder),
                Cell::Value(f64::NAN),
            ],
        )
        .unwrap()
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n\\lambda,0,0.5,1");
        assert_eq!(lines[1], "5,0.1,1e-300,NA");
        assert_eq!(lines[2], "10,0.30000000000000004,NA,NA");
    }

    #[test]
    fn floats_round_trip_through_text() {
        for v in [0.1, 1e-300, 2.5e-17, 123456.789, 1e20, -3e-5, 0.0] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(1e-300), "1e-300");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = sample();
        let back = SweepGrid::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn nan_becomes_mask() {
        let g = sample();
        assert_eq!(g.cell(1, 2), Cell::Masked(MaskReason::Failed));
        assert!((g.failure_fraction() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(SweepGrid::from_cells(
            "t",
            "q",
            Axis::new("a", vec![1.0]),
            Axis::new("b", vec![1.0, 2.0]),
            vec![Cell::Value(1.0)]
        )
        .is_err());
    }
}
