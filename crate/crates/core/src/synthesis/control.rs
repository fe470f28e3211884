use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub value: f64,
    pub duration: f64,
}

/// Piecewise-constant control: `value` held for `duration`, in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstantControl {
    pub steps: Vec<Step>,
}

impl PiecewiseConstantControl {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        let control = PiecewiseConstantControl { steps };
        control.validate()?;
        Ok(control)
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(value, duration)| Step { value, duration }).collect())
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, s) in self.steps.iter().enumerate() {
            if !s.value.is_finite() {
                return Err(Error::InvalidInput(format!("step {i} has non-finite value")));
            }
            if !(s.duration > 0.0) || !s.duration.is_finite() {
                return Err(Error::InvalidInput(format!("step {i} has non-positive duration {}", s.duration)));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    /// `∫|u| dt`.
    pub fn l1_norm(&self) -> f64 {
        self.steps.iter().map(|s| s.value.abs() * s.duration).sum()
    }

    /// `(u_j, τ_j) ↦ (1/u_j, u_j τ_j)`: controls of `ψ' = (A + uB)ψ` and of
    /// `ψ' = (uA + B)ψ` with the same propagator.
    pub fn reparam(&self) -> Result<Self> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for (index, s) in self.steps.iter().enumerate() {
            if s.value == 0.0 {
                return Err(Error::ZeroValueStep { index });
            }
            steps.push(Step { value: 1.0 / s.value, duration: s.value * s.duration });
        }
        Ok(PiecewiseConstantControl { steps })
    }

    /// `u(T - t)`.
    pub fn time_reversed(&self) -> Self {
        PiecewiseConstantControl { steps: self.steps.iter().rev().copied().collect() }
    }

    pub fn concat(&mut self, other: &PiecewiseConstantControl) {
        self.steps.extend_from_slice(&other.steps);
    }

    pub fn values_within(&self, lo_exclusive: f64, hi_inclusive: f64) -> bool {
        self.steps.iter().all(|s| s.value > lo_exclusive && s.value <= hi_inclusive)
    }

    pub fn min_value(&self) -> Option<f64> {
        self.steps.iter().map(|s| s.value).reduce(f64::min)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.steps.iter().map(|s| s.value).reduce(f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reparam_single_step() {
        let u = PiecewiseConstantControl::from_pairs(&[(2.0, 1.5)]).unwrap();
        assert_eq!(u.reparam().unwrap(), PiecewiseConstantControl::from_pairs(&[(0.5, 3.0)]).unwrap());
    }

    #[test]
    fn reparam_involution_exact_on_dyadics() {
        let u = PiecewiseConstantControl::from_pairs(&[(0.25, 4.0), (5.0, 0.2)]).unwrap();
        let back = u.reparam().unwrap().reparam().unwrap();
        for (a, b) in u.steps.iter().zip(&back.steps) {
            assert_eq!(a.value, b.value);
            assert!((a.duration - b.duration).abs() <= 1e-15 * a.duration);
        }
        assert_eq!(u.reparam().unwrap().l1_norm(), 4.0 + 0.2);
    }

    #[test]
    fn reparam_rejects_zero() {
        let u = PiecewiseConstantControl::from_pairs(&[(1.0, 1.0), (0.0, 2.0)]).unwrap();
        assert_eq!(u.reparam(), Err(Error::ZeroValueStep { index: 1 }));
    }

    #[test]
    fn invalid_durations() {
        assert!(PiecewiseConstantControl::from_pairs(&[(1.0, 0.0)]).is_err());
        assert!(PiecewiseConstantControl::from_pairs(&[(1.0, -1.0)]).is_err());
        assert!(PiecewiseConstantControl::from_pairs(&[(f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let u = PiecewiseConstantControl::from_pairs(&[(0.1, 0.7), (3.0, 1.0 / 3.0)]).unwrap();
        let text = serde_json::to_string(&u).unwrap();
        assert_eq!(serde_json::from_str::<PiecewiseConstantControl>(&text).unwrap(), u);
    }
}
