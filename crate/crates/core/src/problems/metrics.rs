//! Aggregate evaluation metrics: optimality gap and feasibility rate.

use super::ViolationReport;
use crate::error::ProblemError;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// Relative gap of `value` against a reference optimum.
pub fn optimality_gap(value: f64, reference: f64, sense: Sense) -> Result<f64, ProblemError> {
    if reference == 0.0 {
        if value == 0.0 {
            return Ok(0.0);
        }
        return Err(ProblemError::ZeroReference);
    }
    let gap = match sense {
        Sense::Min => (value - reference) / reference.abs(),
        Sense::Max => (reference - value) / reference.abs(),
    };
    Ok(gap)
}

/// Percentage of feasible reports in a batch.
pub fn feasibility_rate(reports: &[ViolationReport]) -> Result<f64, ProblemError> {
    if reports.is_empty() {
        return Err(ProblemError::EmptyBatch);
    }
    let feasible = reports.iter().filter(|r| r.feasible).count();
    Ok(100.0 * feasible as f64 / reports.len() as f64)
}
