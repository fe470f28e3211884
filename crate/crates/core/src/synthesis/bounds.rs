use std::f64::consts::PI;

use crate::error::{Error, Pair, Result};
use crate::spectra::{Chain, SystemSpec};

/// `5π / (4|b_jk|)`: L¹ cost bound for moving `φ_j` onto `φ_k` along one edge.
pub fn edge_bound(spec: &SystemSpec, edge: Pair) -> Result<f64> {
    let b = spec.coupling(edge.0, edge.1).norm();
    if b <= spec.zero_tol {
        return Err(Error::DecoupledEdge { edge });
    }
    Ok(5.0 * PI / (4.0 * b))
}

/// `5π(2^{m-1} - 1) / (4 min |b_jk|)` over chain edges inside `1..=m`.
pub fn l1_upper_bound(spec: &SystemSpec, chain: &Chain, m: usize) -> Result<f64> {
    if m == 0 || m > spec.dim() {
        return Err(Error::TruncationTooLarge { requested: m, available: spec.dim() });
    }
    if m == 1 {
        return Ok(0.0);
    }
    for k in 2..=m {
        if !chain.is_m_connected(k) {
            return Err(Error::NotMConnected { m: k });
        }
    }
    let min_b = chain.restricted(m).iter().map(|&(j, k)| spec.coupling(j, k).norm()).fold(f64::INFINITY, f64::min);
    let swaps = (1u64 << (m - 1)) - 1;
    Ok(5.0 * PI * swaps as f64 / (4.0 * min_b))
}
