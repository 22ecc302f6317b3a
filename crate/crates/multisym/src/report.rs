//! Residual bookkeeping: per-node rows, per-equation norms, and JSON / CSV
//! serialization.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};

/// One residual sample: base point, equation id, value.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub x: Vec<f64>,
    pub equation: String,
    pub value: f64,
}

/// Aggregated norms for one equation id.
#[derive(Debug, Clone, Serialize)]
pub struct EquationNorms {
    pub equation: String,
    pub l_inf: f64,
    pub l_2: f64,
    pub samples: usize,
}

/// A collection of residual samples with derived norms and a config echo.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub title: String,
    pub config: BTreeMap<String, String>,
    pub equations: Vec<EquationNorms>,
    pub nodes: usize,
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            config: BTreeMap::new(),
            equations: Vec::new(),
            nodes: 0,
            rows: Vec::new(),
        }
    }

    pub fn set_config(&mut self, key: impl Into<String>, value: impl ToString) {
        self.config.insert(key.into(), value.to_string());
    }

    pub fn record(&mut self, x: &[f64], equation: &str, value: f64) {
        self.rows.push(ResidualRow {
            x: x.to_vec(),
            equation: equation.to_string(),
            value,
        });
    }

    /// Recompute the per-equation L∞ and L² norms and the node count.
    pub fn finish(&mut self) {
        let mut acc: BTreeMap<String, (f64, f64, usize)> = BTreeMap::new();
        let mut points: Vec<&[f64]> = Vec::new();
        for row in &self.rows {
            let e = acc.entry(row.equation.clone()).or_insert((0.0, 0.0, 0));
            e.0 = e.0.max(row.value.abs());
            e.1 += row.value * row.value;
            e.2 += 1;
            if !points.contains(&row.x.as_slice()) {
                points.push(&row.x);
            }
        }
        self.nodes = points.len();
        self.equations = acc
            .into_iter()
            .map(|(equation, (l_inf, sq, samples))| EquationNorms {
                equation,
                l_inf,
                l_2: sq.sqrt(),
                samples,
            })
            .collect();
    }

    /// Largest L∞ norm over all equations.
    pub fn max_l_inf(&self) -> f64 {
        self.equations.iter().map(|e| e.l_inf).fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_l_inf() <= tol
    }

    pub fn norms(&self, equation: &str) -> Option<&EquationNorms> {
        self.equations.iter().find(|e| e.equation == equation)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))
    }

    /// CSV rows: `x1,...,xn,equation,value`, one per sample.
    pub fn to_csv(&self) -> String {
        let n = self.rows.first().map_or(0, |r| r.x.len());
        let mut out = String::new();
        for axis in 0..n {
            let _ = write!(out, "x{},", axis + 1);
        }
        out.push_str("equation,value\n");
        for row in &self.rows {
            for v in &row.x {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{},{}", row.equation, row.value);
        }
        out
    }
}
