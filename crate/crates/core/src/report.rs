use serde::{Deserialize, Serialize};

use crate::error::{Error, Pair, Result};
use crate::synthesis::{SynthesisParams, TrackedStep};

/// Outcome of a synthesized transfer or permutation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// `|⟨target_i, Υ source_i⟩|` per prescribed image.
    pub fidelities: Vec<f64>,
    /// `‖u‖_{L¹}` of the returned control.
    pub l1_realized: f64,
    pub l1_upper: f64,
    /// Lower bound at `ε = 0`.
    pub l1_lower: f64,
    /// Lower bound at the achieved `ε = 1 - min fidelity`.
    pub l1_lower_eps: f64,
    pub eps: f64,
    /// `l1_realized / l1_upper`.
    pub slack: f64,
    /// Duration of the returned control.
    pub total_time: f64,
    pub edges: Vec<Pair>,
    pub steps: Vec<TrackedStep>,
    pub params: SynthesisParams,
}

impl TransferReport {
    pub fn check_invariants(&self) -> Result<()> {
        if let Some(f) = self.fidelities.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::InvariantViolation(format!("fidelity {f} outside [0, 1]")));
        }
        if self.l1_lower > self.l1_realized * (1.0 + 1e-12) {
            return Err(Error::InvariantViolation(format!(
                "lower bound {} exceeds realized L1 {}",
                self.l1_lower, self.l1_realized
            )));
        }
        Ok(())
    }

    pub fn min_fidelity(&self) -> f64 {
        self.fidelities.iter().cloned().fold(1.0, f64::min)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
