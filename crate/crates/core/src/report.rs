//! Pass/fail ledger for the structural invariants checked at runtime.

use std::fmt;

/// One verified property: its worst-case residual against a threshold.
///
/// The sign convention is residual <= threshold passes, so monotonicity
/// checks report the largest violation (positive when violated) and limit
/// checks report |measured - expected| in the stated metric.
#[derive(Debug, Clone)]
pub struct DiagnosticEntry {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub threshold: f64,
    pub detail: String,
}

/// Collection of diagnostics with an overall verdict.
#[derive(Debug, Clone, Default)]
pub struct DiagnosticsReport {
    pub entries: Vec<DiagnosticEntry>,
}

impl DiagnosticsReport {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a check that passes iff `worst <= threshold`.
    pub fn check(&mut self, name: &str, worst: f64, threshold: f64, detail: String) -> bool {
        let passed = worst <= threshold;
        self.entries.push(DiagnosticEntry {
            name: name.to_string(),
            passed,
            worst,
            threshold,
            detail,
        });
        passed
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &DiagnosticEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    pub fn entry(&self, name: &str) -> Option<&DiagnosticEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

impl fmt::Display for DiagnosticsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "{} {:<34} worst={:<13.6e} threshold={:<10.3e} {}",
                if e.passed { "PASS" } else { "FAIL" },
                e.name,
                e.worst,
                e.threshold,
                e.detail
            )?;
        }
        Ok(())
    }
}
