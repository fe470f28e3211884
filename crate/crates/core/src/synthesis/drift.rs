use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Free-drift time `t ≤ t_max` with `|e^{itλ_j} e^{iθ_j} - e^{iθ̃_j}| ≤ tol` for
/// every `j`. One level is solved in closed form; several levels are searched
/// on a uniform grid of pitch `tol / (2 max|λ|)`, returning the first hit.
pub fn phase_tune_drift(lams: &[f64], current: &[f64], target: &[f64], tol: f64, t_max: f64) -> Result<f64> {
    if lams.len() != current.len() || lams.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: lams.len(), found: current.len().min(target.len()) });
    }
    if !(tol > 0.0) || !t_max.is_finite() || !(t_max >= 0.0) {
        return Err(Error::InvalidInput("tol must be positive and t_max finite".into()));
    }
    if lams.iter().chain(current).chain(target).any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("phases and eigenvalues must be finite".into()));
    }
    let miss = |t: f64| -> f64 {
        lams.iter()
            .zip(current)
            .zip(target)
            .map(|((&l, &a), &b)| (Complex64::from_polar(1.0, t * l + a) - Complex64::from_polar(1.0, b)).norm())
            .fold(0.0, f64::max)
    };
    let lmax = lams.iter().map(|l| l.abs()).fold(0.0, f64::max);
    if lmax == 0.0 {
        return if miss(0.0) <= tol { Ok(0.0) } else { Err(Error::NotFoundWithin { t_max }) };
    }
    if lams.len() == 1 {
        let l = lams[0];
        let t = ((target[0] - current[0]) / l).rem_euclid(TAU / l.abs());
        return if t <= t_max { Ok(t) } else { Err(Error::NotFoundWithin { t_max }) };
    }
    let pitch = tol / (2.0 * lmax);
    let count = (t_max / pitch).floor() as u64;
    for i in 0..=count {
        let t = i as f64 * pitch;
        if miss(t) <= tol {
            return Ok(t);
        }
    }
    Err(Error::NotFoundWithin { t_max })
}
