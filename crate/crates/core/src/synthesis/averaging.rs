use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_R_MARGIN: u64 = 1;
const MODULUS_TOL: f64 = 1e-9;

/// `2^{n-1}` increasing times whose mean of `e^{iγt}` vanishes on the gaps
/// `γ_2..γ_n` (integers) and stays at least `∏ cos(π γ_1 / 2|γ_k|)` in modulus
/// on `γ_1`. Gaps sharing a modulus are merged first.
pub fn averaging_times(gaps: &[f64], spacing: f64, t0: f64) -> Result<Vec<f64>> {
    averaging_times_with(gaps, spacing, t0, DEFAULT_R_MARGIN)
}

pub fn averaging_times_with(gaps: &[f64], spacing: f64, t0: f64, r_margin: u64) -> Result<Vec<f64>> {
    let (&first, rest) =
        gaps.split_first().ok_or_else(|| Error::InvalidInput("averaging needs at least one gap".into()))?;
    if first == 0.0 || !first.is_finite() || !(spacing >= 0.0) {
        return Err(Error::InvalidInput("gaps must be finite and nonzero, spacing nonnegative".into()));
    }
    let lead = first.abs();
    let mut moduli: Vec<f64> = Vec::new();
    for &g in rest {
        let m = g.abs();
        if m == 0.0 || !m.is_finite() {
            return Err(Error::InvalidInput("gaps must be finite and nonzero".into()));
        }
        if (m - lead).abs() <= MODULUS_TOL * lead.max(1.0) {
            return Err(Error::DegenerateGaps { modulus: m });
        }
        if !moduli.iter().any(|&x| (x - m).abs() <= MODULUS_TOL * m.max(1.0)) {
            moduli.push(m);
        }
    }
    let base = doubling_offsets(&moduli);
    let span = base.iter().cloned().fold(0.0, f64::max);
    let r = ((spacing + span) / (2.0 * PI)).ceil() + r_margin as f64;
    Ok(base.iter().enumerate().map(|(j, &tb)| t0 + tb + 2.0 * PI * r * j as f64).collect())
}

/// `t̄_1 = 0`, `t̄_{2^{k-1}+j} = t̄_j + π/|γ_{k+1}|`.
pub fn doubling_offsets(moduli: &[f64]) -> Vec<f64> {
    let mut tb = vec![0.0];
    for &m in moduli {
        let shift = PI / m;
        let shifted: Vec<f64> = tb.iter().map(|t| t + shift).collect();
        tb.extend(shifted);
    }
    tb
}

/// `(1/n) Σ e^{iγ t_j}`.
pub fn mean_phase(times: &[f64], gamma: f64) -> Complex64 {
    if times.is_empty() {
        return Complex64::new(0.0, 0.0);
    }
    let s: Complex64 = times.iter().map(|&t| Complex64::from_polar(1.0, gamma * t)).sum();
    s / times.len() as f64
}

/// Lower bound `∏_k cos(π|γ_1| / 2|γ_k|)` on the leading mean modulus.
pub fn leading_mean_bound(gaps: &[f64]) -> f64 {
    let lead = gaps[0].abs();
    gaps[1..].iter().map(|g| (PI * lead / (2.0 * g.abs())).cos()).product()
}

/// Best rational approximation `p/q` with `q ≤ max_den` by continued fractions,
/// accepted only when `|x - p/q| ≤ tol·max(1, |x|)`.
pub fn rational_approx(x: f64, max_den: u64, tol: f64) -> Option<(u64, u64)> {
    if !(x >= 0.0) || !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut y = x;
    for _ in 0..64 {
        let a = y.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1)?.checked_add(p0)?;
        let q2 = a.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = y - a as f64;
        if (x - p1 as f64 / q1 as f64).abs() <= tol * x.max(1.0) || frac <= 0.0 {
            break;
        }
        y = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    let err = (x - p1 as f64 / q1 as f64).abs();
    (err <= tol * x.max(1.0)).then_some((p1, q1))
}
