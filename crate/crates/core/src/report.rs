//! Violation reports shared by the axiom-verification harnesses.

use serde::Serialize;
use std::fmt;

/// One failed check.
#[derive(Debug, Clone, Serialize)]
pub struct AxiomViolation {
    /// Short rule tag, e.g. "double-negation" or "additivity".
    pub rule: &'static str,
    /// Indices of the samples involved.
    pub items: Vec<usize>,
    /// How badly the check failed (norm of the residual, etc.).
    pub magnitude: f64,
    pub detail: String,
}

/// Outcome of an axiom sweep; empty `violations` means every check passed.
#[derive(Debug, Clone, Default, Serialize)]
pub struct AxiomReport {
    pub checks: usize,
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub(crate) fn check(&mut self) {
        self.checks += 1;
    }

    pub(crate) fn violation(
        &mut self,
        rule: &'static str,
        items: &[usize],
        magnitude: f64,
        detail: impl Into<String>,
    ) {
        self.violations.push(AxiomViolation {
            rule,
            items: items.to_vec(),
            magnitude,
            detail: detail.into(),
        });
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.passed() {
            write!(f, "{} checks, no violations", self.checks)
        } else {
            writeln!(
                f,
                "{} checks, {} violation(s):",
                self.checks,
                self.violations.len()
            )?;
            for v in &self.violations {
                writeln!(
                    f,
                    "  [{}] items {:?}: {} (magnitude {:.3e})",
                    v.rule, v.items, v.detail, v.magnitude
                )?;
            }
            Ok(())
        }
    }
}
