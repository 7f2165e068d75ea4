use serde::{Deserialize, Serialize};

use num_complex::Complex64;

/// Smallest scale used when forming relative residuals.
pub const SCALE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub label: String,
    pub residual: f64,
    pub scale: f64,
    pub relative: f64,
    pub pass: bool,
}

/// Residuals of one named identity at a set of sample points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub tolerance: f64,
    pub entries: Vec<ResidualEntry>,
    pub errors: Vec<String>,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        ResidualReport { name: name.into(), tolerance, entries: Vec::new(), errors: Vec::new(), pass: true }
    }

    /// Records `|lhs - rhs| / max(|lhs|, |rhs|, SCALE_FLOOR)`.
    pub fn compare(&mut self, label: impl Into<String>, lhs: Complex64, rhs: Complex64) {
        let scale = lhs.norm().max(rhs.norm()).max(SCALE_FLOOR);
        self.record(label, (lhs - rhs).norm(), scale);
    }

    /// Records `residual / scale`.
    pub fn record(&mut self, label: impl Into<String>, residual: f64, scale: f64) {
        let relative = residual / scale;
        let pass = relative <= self.tolerance && relative.is_finite();
        self.pass &= pass;
        self.entries.push(ResidualEntry { label: label.into(), residual, scale, relative, pass });
    }

    pub fn error(&mut self, label: impl Into<String>, err: impl std::fmt::Display) {
        self.pass = false;
        self.errors.push(format!("{}: {err}", label.into()));
    }

    pub fn max_relative(&self) -> f64 {
        self.entries.iter().map(|e| e.relative).fold(0.0, f64::max)
    }

    /// Re-judges every entry against a new tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        for e in &mut self.entries {
            e.pass = e.relative <= tolerance && e.relative.is_finite();
        }
        self.pass = self.errors.is_empty() && self.entries.iter().all(|e| e.pass);
        self
    }

    pub fn extend(&mut self, other: ResidualReport) {
        self.pass &= other.pass;
        self.entries.extend(other.entries);
        self.errors.extend(other.errors);
    }
}
