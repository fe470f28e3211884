//! Exact piecewise propagation of Galerkin truncations and of density matrices.
//! The interaction-picture system is integrated separately.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::liealg::SkewPair;
use crate::linalg::{c, expm_skew, identity, reorthonormalize, unitarity_defect, CMat, CVec};
use crate::spectra::SystemSpec;
use crate::synthesis::PiecewiseConstantControl;

pub const UNITARITY_TOL: f64 = 1e-9;
pub const RENORM_TRIGGER: f64 = 1e-10;
const RENORM_EVERY: usize = 64;
pub const DEFAULT_RENORM_BUDGET: usize = 100_000;
pub const RK4_MAX_STEP: f64 = 1e-2;
pub const RK4_STEP_FLOOR: f64 = 1e-9;

/// Leading `n × n` blocks `A^(n) = diag(iλ)` and `B^(n) = (b_jk)`.
pub fn galerkin(spec: &SystemSpec, n: usize) -> Result<SkewPair> {
    Ok(SkewPair::from_spec(&spec.truncate(n)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    pub m: CMat,
}

impl Unitary {
    pub fn new(m: CMat) -> Result<Self> {
        let defect = unitarity_defect(&m);
        if !(defect <= UNITARITY_TOL) {
            return Err(Error::UnitarityBreach { defect, renormalizations: 0 });
        }
        Ok(Unitary { m })
    }

    pub fn identity(n: usize) -> Self {
        Unitary { m: identity(n) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn defect(&self) -> f64 {
        unitarity_defect(&self.m)
    }

    pub fn apply(&self, psi: &CVec) -> CVec {
        &self.m * psi
    }

    /// `self` followed by `other`.
    pub fn then(&self, other: &Unitary) -> Unitary {
        Unitary { m: &other.m * &self.m }
    }
}

/// `e^{t(A + uB)}`.
pub fn step(pair: &SkewPair, u: f64, t: f64) -> Unitary {
    Unitary { m: expm_skew(&((&pair.a + &pair.bmat * c(u, 0.0)) * c(t, 0.0))) }
}

/// `e^{s(wA + B)}`, one step of the reparametrized system.
pub fn step_reparam(pair: &SkewPair, w: f64, s: f64) -> Unitary {
    Unitary { m: expm_skew(&((&pair.a * c(w, 0.0) + &pair.bmat) * c(s, 0.0))) }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `ψ' = (A + uB)ψ`.
    Main,
    /// `ψ' = (uA + B)ψ`.
    Reparam,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CVec>,
    /// Control value on the segment ending at the matching time; `None` for the initial point.
    pub controls: Vec<Option<f64>>,
}

struct Renormalizer {
    count: usize,
    budget: usize,
    since: usize,
}

impl Renormalizer {
    fn new(budget: usize) -> Self {
        Renormalizer { count: 0, budget, since: 0 }
    }

    fn check(&mut self, u: &mut CMat, force: bool) -> Result<()> {
        self.since += 1;
        if !force && self.since < RENORM_EVERY {
            return Ok(());
        }
        self.since = 0;
        let defect = unitarity_defect(u);
        if defect > RENORM_TRIGGER {
            *u = reorthonormalize(u);
            self.count += 1;
            let after = unitarity_defect(u);
            if after > UNITARITY_TOL || self.count > self.budget {
                return Err(Error::UnitarityBreach { defect: after.max(defect), renormalizations: self.count });
            }
        }
        Ok(())
    }
}

/// Propagator of a piecewise-constant control on the pair.
pub fn propagate_pair(control: &PiecewiseConstantControl, pair: &SkewPair, form: Form) -> Result<Unitary> {
    let mut u = identity(pair.dim());
    let mut renorm = Renormalizer::new(DEFAULT_RENORM_BUDGET);
    let last = control.steps.len().saturating_sub(1);
    for (i, s) in control.steps.iter().enumerate() {
        let e = match form {
            Form::Main => step(pair, s.value, s.duration),
            Form::Reparam => step_reparam(pair, s.value, s.duration),
        };
        u = e.m * u;
        renorm.check(&mut u, i == last)?;
    }
    Ok(Unitary { m: u })
}

/// Trajectory from `psi0` under `ψ' = (A + uB)ψ` on the `n`-level truncation,
/// with the final propagator.
pub fn propagate(
    control: &PiecewiseConstantControl,
    spec: &SystemSpec,
    n: usize,
    psi0: &CVec,
) -> Result<(Trajectory, Unitary)> {
    propagate_form(control, spec, n, psi0, Form::Main)
}

pub fn propagate_form(
    control: &PiecewiseConstantControl,
    spec: &SystemSpec,
    n: usize,
    psi0: &CVec,
    form: Form,
) -> Result<(Trajectory, Unitary)> {
    let pair = galerkin(spec, n)?;
    if psi0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi0.len() });
    }
    let norm = psi0.norm();
    if (norm - 1.0).abs() > UNITARITY_TOL {
        return Err(Error::InvalidInput(format!("initial state has norm {norm}")));
    }
    control.validate()?;
    let mut traj = Trajectory { times: vec![0.0], states: vec![psi0.clone()], controls: vec![None] };
    let mut u = identity(n);
    let mut renorm = Renormalizer::new(DEFAULT_RENORM_BUDGET);
    let mut t = 0.0;
    let last = control.steps.len().saturating_sub(1);
    for (i, s) in control.steps.iter().enumerate() {
        let e = match form {
            Form::Main => step(&pair, s.value, s.duration),
            Form::Reparam => step_reparam(&pair, s.value, s.duration),
        };
        u = e.m * u;
        renorm.check(&mut u, i == last)?;
        t += s.duration;
        traj.times.push(t);
        traj.states.push(&u * psi0);
        traj.controls.push(Some(s.value));
    }
    Ok((traj, Unitary { m: u }))
}

/// Piecewise-constant multi-input control: `values[i]` multiplies `B_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiStep {
    pub values: Vec<f64>,
    pub duration: f64,
}

/// Propagator of `ψ' = (A + Σ u_i B_i)ψ`.
pub fn propagate_multi(a: &CMat, bs: &[CMat], steps: &[MultiStep]) -> Result<Unitary> {
    let n = a.nrows();
    let mut u = identity(n);
    let mut renorm = Renormalizer::new(DEFAULT_RENORM_BUDGET);
    let last = steps.len().saturating_sub(1);
    for (i, s) in steps.iter().enumerate() {
        if s.values.len() != bs.len() {
            return Err(Error::DimensionMismatch { expected: bs.len(), found: s.values.len() });
        }
        let mut g = a.clone();
        for (b, &v) in bs.iter().zip(&s.values) {
            g += b * c(v, 0.0);
        }
        u = expm_skew(&(g * c(s.duration, 0.0))) * u;
        renorm.check(&mut u, i == last)?;
    }
    Ok(Unitary { m: u })
}

/// Linear piece `v(t) = v0 + slope·(t - t_start)` of the primitive `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VSegment {
    pub v0: f64,
    pub slope: f64,
    pub duration: f64,
}

/// Primitive `v(t) = v_start + ∫ w` of a reparametrized control `w`.
pub fn primitive_segments(control: &PiecewiseConstantControl, v_start: f64) -> Vec<VSegment> {
    let mut v = v_start;
    control
        .steps
        .iter()
        .map(|s| {
            let seg = VSegment { v0: v, slope: s.value, duration: s.duration };
            v += s.value * s.duration;
            seg
        })
        .collect()
}

/// Piecewise-constant `v`: each step's value held for its duration.
pub fn constant_segments(v: &PiecewiseConstantControl) -> Vec<VSegment> {
    v.steps.iter().map(|s| VSegment { v0: s.value, slope: 0.0, duration: s.duration }).collect()
}

/// Right-hand side `ϑ_N(t, v)`: entries `b_jk e^{iv(λ_k - λ_j)} e^{t(b_kk - b_jj)}`, zero diagonal.
pub fn interaction_generator(spec: &SystemSpec, n: usize, t: f64, v: f64) -> CMat {
    let mut g = CMat::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let b = spec.b[(j, k)];
            if b == Complex64::new(0.0, 0.0) {
                continue;
            }
            let phase = v * (spec.lambda[k] - spec.lambda[j]);
            let damp = (spec.b[(k, k)] - spec.b[(j, j)]) * t;
            g[(j, k)] = b * (c(0.0, phase) + damp).exp();
        }
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Options {
    pub max_step: f64,
    pub step_floor: f64,
}

impl Default for Rk4Options {
    fn default() -> Self {
        Rk4Options { max_step: RK4_MAX_STEP, step_floor: RK4_STEP_FLOOR }
    }
}

/// Propagator of `q' = ϑ_N(t, v(t)) q` by fixed-step RK4 with per-step
/// re-orthonormalization. Step `min(max_step, 0.1/rate)` where `rate` is the
/// fastest phase rotation `|γ·v'| + |b_kk - b_jj|` among coupled pairs.
pub fn interaction_propagate(segments: &[VSegment], spec: &SystemSpec, n: usize) -> Result<Unitary> {
    interaction_propagate_with(segments, spec, n, Rk4Options::default())
}

pub fn interaction_propagate_with(
    segments: &[VSegment],
    spec: &SystemSpec,
    n: usize,
    opts: Rk4Options,
) -> Result<Unitary> {
    let spec = spec.truncate(n)?;
    let mut coupled = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if j != k && spec.b[(j, k)].norm() > 0.0 {
                coupled.push((j, k));
            }
        }
    }
    let mut u = identity(n);
    let mut t = 0.0;
    for seg in segments {
        if !(seg.duration > 0.0) {
            return Err(Error::InvalidInput("segment durations must be positive".into()));
        }
        let rate = coupled
            .iter()
            .map(|&(j, k)| {
                ((spec.lambda[k] - spec.lambda[j]) * seg.slope).abs() + (spec.b[(k, k)] - spec.b[(j, j)]).norm()
            })
            .fold(0.0, f64::max);
        let h_target = if rate > 0.0 { opts.max_step.min(0.1 / rate) } else { opts.max_step };
        if h_target < opts.step_floor {
            return Err(Error::StepSizeFloor { step: h_target, floor: opts.step_floor });
        }
        let steps = (seg.duration / h_target).ceil().max(1.0) as usize;
        let h = seg.duration / steps as f64;
        for i in 0..steps {
            let tau = i as f64 * h;
            let f = |dt: f64| interaction_generator(&spec, n, t + tau + dt, seg.v0 + seg.slope * (tau + dt));
            let (g1, g2, g3) = (f(0.0), f(0.5 * h), f(h));
            let hc = c(h, 0.0);
            let k1 = &g1 * &u;
            let k2 = &g2 * (&u + &k1 * (hc * 0.5));
            let k3 = &g2 * (&u + &k2 * (hc * 0.5));
            let k4 = &g3 * (&u + &k3 * hc);
            u += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (hc / 6.0);
            u = reorthonormalize(&u);
        }
        t += seg.duration;
    }
    Ok(Unitary { m: u })
}

/// `e^{-vA - t·d(B)} U`: the interaction-picture image of a propagator of the
/// reparametrized system after time `t` with `v(t) = v`.
pub fn to_interaction_frame(u: &Unitary, spec: &SystemSpec, v: f64, t: f64) -> Unitary {
    let n = u.dim();
    let mut m = u.m.clone();
    for j in 0..n {
        let phase = (c(0.0, -v * spec.lambda[j]) - spec.b[(j, j)] * t).exp();
        for k in 0..n {
            m[(j, k)] *= phase;
        }
    }
    Unitary { m }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub rho: CMat,
}

impl DensityMatrix {
    pub fn new(rho: CMat) -> Result<Self> {
        if rho.nrows() != rho.ncols() {
            return Err(Error::DimensionMismatch { expected: rho.nrows(), found: rho.ncols() });
        }
        let herm = crate::linalg::hermitian_defect(&rho);
        if herm > 1e-12 {
            return Err(Error::InvalidInput(format!("density matrix is not Hermitian (defect {herm:e})")));
        }
        let tr = rho.trace();
        if (tr - c(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::InvalidInput(format!("density matrix trace is {tr}")));
        }
        let min = crate::linalg::hermitian_eigenvalues(&rho).first().copied().unwrap_or(0.0);
        if min < -1e-10 {
            return Err(Error::InvalidInput(format!("density matrix has eigenvalue {min}")));
        }
        Ok(DensityMatrix { rho })
    }

    pub fn pure(psi: &CVec) -> Self {
        DensityMatrix { rho: psi * psi.adjoint() }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        DensityMatrix { rho: identity(n) * c(1.0 / n as f64, 0.0) }
    }

    /// `Σ p_k φ_k φ_k*`.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let n = weights.len();
        DensityMatrix::new(CMat::from_fn(n, n, |r, k| if r == k { c(weights[r], 0.0) } else { c(0.0, 0.0) }))
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        crate::linalg::hermitian_eigenvalues(&self.rho)
    }

    pub fn conjugated(&self, u: &Unitary) -> DensityMatrix {
        DensityMatrix { rho: &u.m * &self.rho * u.m.adjoint() }
    }
}

/// `Υ ρ Υ*` for the propagator `Υ` of `control`.
pub fn density_evolve(
    rho0: &DensityMatrix,
    control: &PiecewiseConstantControl,
    spec: &SystemSpec,
    n: usize,
) -> Result<DensityMatrix> {
    if rho0.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: rho0.dim() });
    }
    let u = propagate_pair(control, &galerkin(spec, n)?, Form::Main)?;
    Ok(rho0.conjugated(&u))
}

/// `|⟨ψ, φ⟩|`, clamped to `[0, 1]`.
pub fn fidelity(psi: &CVec, phi: &CVec) -> f64 {
    psi.dotc(phi).norm().min(1.0)
}

/// `√(Σ_{j>n} |ψ_j|²)`.
pub fn tail_norm(psi: &CVec, n: usize) -> f64 {
    psi.iter().skip(n).map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `sup_{k,j} (| |⟨φ_j, φ_k⟩| - |⟨φ_j, Υφ_k⟩| | - ε) / ‖Bφ_j‖` over the columns of
/// an `m × m` target, `m ≤ N`.
pub fn l1_lower_bound(spec: &SystemSpec, target: &CMat, eps: f64) -> Result<f64> {
    let m = target.nrows();
    if target.ncols() != m || m > spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: m });
    }
    let columns: Vec<(usize, CVec)> = (0..m).map(|k| (k + 1, target.column(k).into_owned())).collect();
    Ok(lower_bound_columns(spec, &columns, eps))
}

/// Same bound for a single prescribed image `φ_source ↦ image`.
pub fn l1_lower_bound_transfer(spec: &SystemSpec, source: usize, image: &CVec, eps: f64) -> f64 {
    lower_bound_columns(spec, &[(source, image.clone())], eps)
}

fn lower_bound_columns(spec: &SystemSpec, columns: &[(usize, CVec)], eps: f64) -> f64 {
    let mut best: f64 = 0.0;
    for (k, col) in columns {
        for j in 1..=col.len() {
            let before = if j == *k { 1.0 } else { 0.0 };
            let num = (before - col[j - 1].norm()).abs() - eps;
            if num <= 0.0 {
                continue;
            }
            let norm = spec.coupling_norm(j);
            best = best.max(if norm > 0.0 { num / norm } else { f64::INFINITY });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{basis_vector, max_abs};
    use crate::models::{example_4x4, infinite_well, WellParams};
    use std::f64::consts::PI;

    fn two_level() -> SystemSpec {
        let mut b = CMat::zeros(2, 2);
        b[(0, 1)] = c(1.0, 0.0);
        b[(1, 0)] = c(-1.0, 0.0);
        SystemSpec::new(vec![0.0, 0.0], b, 1.0).unwrap()
    }

    #[test]
    fn galerkin_ex4_verbatim() {
        let p = galerkin(&example_4x4(), 4).unwrap();
        assert_eq!(p.a, crate::linalg::drift_matrix(&[1.0, 2.0, 4.0, 4.0]));
        assert_eq!(p.bmat[(0, 1)], c(1.0, 0.0));
        assert_eq!(p.bmat[(1, 0)], c(-1.0, 0.0));
        let one = galerkin(&example_4x4(), 1).unwrap();
        assert_eq!((one.a[(0, 0)], one.bmat[(0, 0)]), (c(0.0, 1.0), c(0.0, 0.0)));
        assert!(matches!(galerkin(&example_4x4(), 5), Err(Error::TruncationTooLarge { .. })));
    }

    #[test]
    fn step_cases() {
        let p = galerkin(&example_4x4(), 4).unwrap();
        assert!(max_abs(&(step(&p, 0.7, 0.0).m - identity(4))) < 1e-14);
        let d = step(&p, 0.0, 0.3);
        for k in 0..4 {
            assert!((d.m[(k, k)] - c(0.0, 0.3 * p.a[(k, k)].im).exp()).norm() < 1e-14);
        }
        let r = step(&galerkin(&two_level(), 2).unwrap(), 1.0, PI / 2.0);
        assert!((r.m[(0, 1)] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((r.m[(1, 0)] - c(-1.0, 0.0)).norm() < 1e-14);
        assert!(r.defect() < 1e-10);
    }

    #[test]
    fn propagate_trivial_and_single_step() {
        let spec = example_4x4();
        let psi0 = basis_vector(4, 1);
        let (traj, u) = propagate(&PiecewiseConstantControl::empty(), &spec, 4, &psi0).unwrap();
        assert_eq!(traj.states.last().unwrap(), &psi0);
        assert_eq!(u.m, identity(4));
        let ctl = PiecewiseConstantControl::from_pairs(&[(0.4, 1.3)]).unwrap();
        let (_, u) = propagate(&ctl, &spec, 4, &psi0).unwrap();
        let direct = step(&galerkin(&spec, 4).unwrap(), 0.4, 1.3);
        assert!(max_abs(&(u.m - direct.m)) < 1e-14);
    }

    #[test]
    fn norm_conserved_long_run() {
        let spec = infinite_well(&WellParams::new(6)).unwrap();
        let pairs: Vec<(f64, f64)> =
            (0..20_000).map(|i| (((i * 37) % 11) as f64 * 0.4, 0.01 + (i % 7) as f64 * 0.003)).collect();
        let ctl = PiecewiseConstantControl::from_pairs(&pairs).unwrap();
        let (traj, u) = propagate(&ctl, &spec, 6, &basis_vector(6, 0)).unwrap();
        assert!(u.defect() < 1e-9);
        assert!(traj.states.iter().all(|s| (s.norm() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn interaction_identity_when_uncoupled() {
        let spec = SystemSpec::new(vec![1.0, 2.0, 3.0], CMat::zeros(3, 3), 1.0).unwrap();
        let segs = [VSegment { v0: 0.0, slope: 2.0, duration: 1.5 }];
        let u = interaction_propagate(&segs, &spec, 3).unwrap();
        assert!(max_abs(&(u.m - identity(3))) < 1e-14);
    }

    #[test]
    fn interaction_rabi() {
        let mut b = CMat::zeros(2, 2);
        b[(0, 1)] = c(0.6, 0.0);
        b[(1, 0)] = c(-0.6, 0.0);
        let spec = SystemSpec::new(vec![0.0, 1.0], b, 1.0).unwrap();
        let t = 2.0;
        let u = interaction_propagate(&[VSegment { v0: 0.0, slope: 0.0, duration: t }], &spec, 2).unwrap();
        assert!((u.m[(0, 0)].re - (0.6 * t).cos()).abs() < 1e-9);
        assert!((u.m[(1, 0)].re + (0.6 * t).sin()).abs() < 1e-9);
    }

    #[test]
    fn interaction_matches_exact_frame() {
        let spec = example_4x4();
        let w = PiecewiseConstantControl::from_pairs(&[(1.5, 0.4), (3.0, 0.3), (2.2, 0.5)]).unwrap();
        let pair = galerkin(&spec, 4).unwrap();
        let u = propagate_pair(&w, &pair, Form::Reparam).unwrap();
        let v_end: f64 = w.steps.iter().map(|s| s.value * s.duration).sum();
        let y = to_interaction_frame(&u, &spec, v_end, w.total_duration());
        let q = interaction_propagate(&primitive_segments(&w, 0.0), &spec, 4).unwrap();
        assert!(max_abs(&(y.m - q.m)) < 1e-6);
    }

    #[test]
    fn step_floor() {
        let spec = example_4x4();
        let segs = [VSegment { v0: 0.0, slope: 1e12, duration: 1e-3 }];
        assert!(matches!(interaction_propagate(&segs, &spec, 4), Err(Error::StepSizeFloor { .. })));
    }

    #[test]
    fn density_cases() {
        let spec = example_4x4();
        let ctl = PiecewiseConstantControl::from_pairs(&[(0.5, 1.0), (0.2, 2.0)]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(4);
        let out = density_evolve(&mixed, &ctl, &spec, 4).unwrap();
        assert!(max_abs(&(out.rho - &mixed.rho)) < 1e-14);
        let psi = basis_vector(4, 0);
        let out = density_evolve(&DensityMatrix::pure(&psi), &ctl, &spec, 4).unwrap();
        let (_, u) = propagate(&ctl, &spec, 4, &psi).unwrap();
        let phi = u.apply(&psi);
        assert!(max_abs(&(out.rho - &phi * phi.adjoint())) < 1e-13);
        let rho = DensityMatrix::diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let ev = density_evolve(&rho, &ctl, &spec, 4).unwrap().eigenvalues();
        for (a, b) in ev.iter().zip([0.1, 0.2, 0.3, 0.4]) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn metrics() {
        let a = basis_vector(3, 0);
        let b = basis_vector(3, 2);
        assert_eq!(fidelity(&a, &a), 1.0);
        assert_eq!(fidelity(&a, &b), 0.0);
        assert_eq!(tail_norm(&b, 2), 1.0);
    }

    #[test]
    fn lower_bound_identity_is_zero() {
        let spec = example_4x4();
        assert_eq!(l1_lower_bound(&spec, &identity(4), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn lower_bound_well_swap() {
        let spec = infinite_well(&WellParams::new(6)).unwrap();
        let mut swap = CMat::zeros(2, 2);
        swap[(1, 0)] = c(1.0, 0.0);
        swap[(0, 1)] = c(1.0, 0.0);
        let lb = l1_lower_bound(&spec, &swap, 0.0).unwrap();
        let expected = 2.0 * 3f64.sqrt() * PI / (PI * PI - 6.0).sqrt();
        assert!((lb - expected).abs() < 1e-12);
        assert!((lb - 5.5323).abs() < 1e-3);
    }
}
