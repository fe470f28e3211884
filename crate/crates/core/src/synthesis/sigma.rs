use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Pair, Result};
use crate::linalg::{c, expm_skew, identity, CMat, CVec};
use crate::spectra::{Chain, SystemSpec};

use super::nu::nu_limit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaStep {
    pub edge: Pair,
    pub theta: f64,
    pub duration: f64,
}

/// Control of the auxiliary driftless system: on each step the generator is
/// `ν|b_jk| (e^{iθ} e_jk - e^{-iθ} e_kj)`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SigmaSchedule {
    pub steps: Vec<SigmaStep>,
}

impl SigmaSchedule {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn total_duration(&self) -> f64 {
        self.steps.iter().map(|s| s.duration).sum()
    }

    pub fn extend(&mut self, other: SigmaSchedule) {
        self.steps.extend(other.steps);
    }
}

/// Generator of one auxiliary step at rate `rate·|b_jk|` on `n` levels.
pub fn sigma_generator(spec: &SystemSpec, n: usize, edge: Pair, theta: f64, rate: f64) -> CMat {
    let (j, k) = (edge.0 - 1, edge.1 - 1);
    let amp = rate * spec.coupling(edge.0, edge.1).norm();
    let mut g = CMat::zeros(n, n);
    g[(j, k)] = Complex64::from_polar(amp, theta);
    g[(k, j)] = -Complex64::from_polar(amp, -theta);
    g
}

/// Propagator of the auxiliary system over the leading `n` levels.
pub fn schedule_unitary(spec: &SystemSpec, schedule: &SigmaSchedule, n: usize) -> CMat {
    schedule_unitary_at_rate(spec, schedule, n, nu_limit())
}

pub fn schedule_unitary_at_rate(spec: &SystemSpec, schedule: &SigmaSchedule, n: usize, rate: f64) -> CMat {
    let mut u = identity(n);
    for s in &schedule.steps {
        let g = sigma_generator(spec, n, s.edge, s.theta, rate) * c(s.duration, 0.0);
        u = expm_skew(&g) * u;
    }
    u
}

fn swap_duration(spec: &SystemSpec, edge: Pair) -> Result<f64> {
    let b = spec.coupling(edge.0, edge.1).norm();
    if b <= spec.zero_tol {
        return Err(Error::DecoupledEdge { edge });
    }
    Ok(PI / (2.0 * nu_limit() * b))
}

/// Half-turn on `edge = (j, k)`: `φ_j ↦ -φ_k`, `φ_k ↦ φ_j`.
pub fn sigma_swap(spec: &SystemSpec, chain: &Chain, edge: Pair) -> Result<SigmaSchedule> {
    if !chain.contains(edge.0, edge.1) {
        return Err(Error::EdgeNotInChain { edge });
    }
    let duration = swap_duration(spec, edge)?;
    Ok(SigmaSchedule { steps: vec![SigmaStep { edge, theta: 0.0, duration }] })
}

/// Swaps along a chain path from `from` to `to`; moves `φ_from` to `±φ_to`.
pub fn path_schedule(spec: &SystemSpec, chain: &Chain, from: usize, to: usize) -> Result<SigmaSchedule> {
    let path = chain.path(from, to).ok_or(Error::ChainNotConnected)?;
    let mut out = SigmaSchedule::default();
    for w in path.windows(2) {
        out.extend(sigma_swap(spec, chain, (w[0], w[1]))?);
    }
    Ok(out)
}

/// Transpositions along chain edges whose product, first applied first, is
/// `sigma` (`sigma[i-1] = σ(i)`). Uses at most `2^{m-1} - 1` transpositions.
pub fn decompose_permutation(chain: &Chain, sigma: &[usize]) -> Result<Vec<Pair>> {
    let m = sigma.len();
    crate::spectra::check_permutation(sigma, m)?;
    for k in 2..=m {
        if !chain.is_m_connected(k) {
            return Err(Error::NotMConnected { m: k });
        }
    }
    let mut out = Vec::new();
    decompose_into(chain, sigma.to_vec(), &mut out);
    Ok(out)
}

fn decompose_into(chain: &Chain, sigma: Vec<usize>, out: &mut Vec<Pair>) {
    let n1 = sigma.len();
    if n1 <= 1 {
        return;
    }
    let s = sigma[n1 - 1];
    if s == n1 {
        decompose_into(chain, sigma[..n1 - 1].to_vec(), out);
        return;
    }
    let k = (1..n1).find(|&k| chain.contains(k, n1)).expect("m-connected chain");
    let ks = |x: usize| {
        if x == k {
            s
        } else if x == s {
            k
        } else {
            x
        }
    };
    let kn = |x: usize| {
        if x == k {
            n1
        } else if x == n1 {
            k
        } else {
            x
        }
    };
    let reduced: Vec<usize> = sigma[..n1 - 1].iter().map(|&x| kn(ks(x))).collect();
    decompose_into(chain, reduced, out);
    out.push((k, n1));
    let tail: Vec<usize> = (1..n1).map(ks).collect();
    decompose_into(chain, tail, out);
}

pub fn permutation_to_schedule(spec: &SystemSpec, chain: &Chain, sigma: &[usize]) -> Result<SigmaSchedule> {
    let swaps = decompose_permutation(chain, sigma)?;
    let mut out = SigmaSchedule::default();
    for edge in swaps {
        out.extend(sigma_swap(spec, chain, edge)?);
    }
    Ok(out)
}

/// Rotations along a breadth-first tree of the chain that carry `x` onto
/// `|x|·e^{iφ} φ_1`, deepest levels first.
pub fn steer_to_first(spec: &SystemSpec, chain: &Chain, x: &CVec, amp_tol: f64) -> Result<SigmaSchedule> {
    let n = x.len();
    let nu = nu_limit();
    let mut depth_order: Vec<(usize, usize, usize)> = Vec::new();
    for v in 2..=n {
        let path = chain.path(1, v).ok_or(Error::ChainNotConnected)?;
        depth_order.push((path.len(), v, path[path.len() - 2]));
    }
    depth_order.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
    let mut y = x.clone();
    let mut out = SigmaSchedule::default();
    for (_, v, p) in depth_order {
        let (xv, xp) = (y[v - 1], y[p - 1]);
        if xv.norm() <= amp_tol {
            continue;
        }
        let theta = (xp.arg() - xv.arg()).rem_euclid(TAU);
        let phi = xv.norm().atan2(xp.norm());
        let b = spec.coupling(p, v).norm();
        if b <= spec.zero_tol {
            return Err(Error::DecoupledEdge { edge: (p, v) });
        }
        let step = SigmaStep { edge: (p, v), theta, duration: phi / (nu * b) };
        let g = sigma_generator(spec, n, step.edge, theta, nu) * c(step.duration, 0.0);
        y = expm_skew(&g) * y;
        out.steps.push(step);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, max_abs};
    use crate::models::{example_4x4, infinite_well, WellParams};
    use crate::spectra::find_chain;

    fn path_chain(m: usize) -> (SystemSpec, Chain) {
        let mut b = CMat::zeros(m, m);
        for k in 0..m - 1 {
            b[(k, k + 1)] = c(1.0, 0.0);
            b[(k + 1, k)] = c(-1.0, 0.0);
        }
        let lambda = (0..m).map(|k| (k * k) as f64 + 0.5 * k as f64).collect();
        let spec = SystemSpec::new(lambda, b, 1.0).unwrap();
        let chain = find_chain(&spec).unwrap();
        (spec, chain)
    }

    #[test]
    fn well_swap_duration() {
        let spec = infinite_well(&WellParams::new(4)).unwrap();
        let chain = find_chain(&spec).unwrap();
        let s = sigma_swap(&spec, &chain, (1, 2)).unwrap();
        let expected = 9.0 * PI.powi(3) / (32.0 * nu_limit());
        assert!((s.steps[0].duration - expected).abs() < 1e-9 * expected);
        assert_eq!(s.steps[0].theta, 0.0);
    }

    #[test]
    fn swap_action_and_half_turn() {
        let spec = example_4x4();
        let chain = find_chain(&spec).unwrap();
        let s = sigma_swap(&spec, &chain, (1, 2)).unwrap();
        let u = schedule_unitary(&spec, &s, 4);
        let phi1 = &u * basis_vector(4, 0);
        let phi2 = &u * basis_vector(4, 1);
        assert!((phi1 + basis_vector(4, 1)).norm() < 1e-12);
        assert!((phi2 - basis_vector(4, 0)).norm() < 1e-12);
        let u2 = &u * &u;
        let mut expected = identity(4);
        expected[(0, 0)] = c(-1.0, 0.0);
        expected[(1, 1)] = c(-1.0, 0.0);
        assert!(max_abs(&(u2 - expected)) < 1e-12);
        assert_eq!(sigma_swap(&spec, &chain, (3, 4)), Err(Error::EdgeNotInChain { edge: (3, 4) }));
    }

    #[test]
    fn unit_normalized_duration() {
        let nu = nu_limit();
        let g = PI / (2.0 * nu);
        let mut b = CMat::zeros(2, 2);
        b[(0, 1)] = c(g, 0.0);
        b[(1, 0)] = c(-g, 0.0);
        let spec = SystemSpec::new(vec![0.0, 1.0], b, 1.0).unwrap();
        let chain = find_chain(&spec).unwrap();
        assert!((sigma_swap(&spec, &chain, (1, 2)).unwrap().steps[0].duration - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_cycle_on_path() {
        let (_, chain) = path_chain(3);
        assert_eq!(decompose_permutation(&chain, &[3, 2, 1]).unwrap(), vec![(1, 2), (2, 3), (1, 2)]);
        assert!(decompose_permutation(&chain, &[1, 2, 3]).unwrap().is_empty());
    }

    #[test]
    fn not_m_connected() {
        let mut b = CMat::zeros(3, 3);
        for (j, k) in [(0, 2), (1, 2)] {
            b[(j, k)] = c(1.0, 0.0);
            b[(k, j)] = c(-1.0, 0.0);
        }
        let spec = SystemSpec::new(vec![0.0, 1.0, 3.0], b, 1.0).unwrap();
        let chain = find_chain(&spec).unwrap();
        assert_eq!(decompose_permutation(&chain, &[2, 1, 3]), Err(Error::NotMConnected { m: 2 }));
    }

    #[test]
    fn steer_moves_vector_to_first_level() {
        let spec = example_4x4();
        let chain = find_chain(&spec).unwrap();
        let x = CVec::from_vec(vec![c(0.1, 0.2), c(-0.3, 0.5), c(0.4, -0.1), c(0.2, 0.6)]);
        let x = x.unscale(x.norm());
        let s = steer_to_first(&spec, &chain, &x, 1e-15).unwrap();
        let y = schedule_unitary(&spec, &s, 4) * x;
        assert!((y[0].norm() - 1.0).abs() < 1e-12);
    }
}
