use std::f64::consts::TAU;

use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Pair, Result};
use crate::spectra::{coupled_pairs, SystemSpec, DEFAULT_GAP_TOL};

use super::averaging::{doubling_offsets, mean_phase, rational_approx, DEFAULT_R_MARGIN};
use super::control::{PiecewiseConstantControl, Step};
use super::nu::nu_limit;
use super::sigma::SigmaSchedule;

pub const DEFAULT_SLOPE_CAP: f64 = 1e12;
pub const DEFAULT_MAX_DENOMINATOR: u64 = 64;
pub const DELTA_BAR_FACTOR: f64 = 1.25;
const REALNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisParams {
    /// Averaging fineness: at least `1/eta` pulses per schedule step.
    pub eta: f64,
    /// Truncation used for the gap harvest and for simulation.
    pub n_trunc: usize,
    /// Slope floor of `v̌`; must exceed `1/δ`.
    pub delta_bar: f64,
    pub r_margin: u64,
    pub gap_tol: f64,
    pub slope_cap: f64,
    /// Largest denominator accepted when classifying gap ratios as rationals.
    pub max_denominator: u64,
}

impl SynthesisParams {
    /// Defaults for `spec`: `δ̄ = 1.25/δ`.
    pub fn for_spec(spec: &SystemSpec, eta: f64, n_trunc: usize) -> Self {
        SynthesisParams {
            eta,
            n_trunc,
            delta_bar: DELTA_BAR_FACTOR / spec.delta,
            r_margin: DEFAULT_R_MARGIN,
            gap_tol: DEFAULT_GAP_TOL,
            slope_cap: DEFAULT_SLOPE_CAP,
            max_denominator: DEFAULT_MAX_DENOMINATOR,
        }
    }

    pub fn validate(&self, spec: &SystemSpec, n_levels: usize) -> Result<()> {
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::InvalidInput(format!("eta must be positive, got {}", self.eta)));
        }
        if self.n_trunc < n_levels {
            return Err(Error::InvalidInput(format!(
                "truncation {} is below the {} levels the schedule touches",
                self.n_trunc, n_levels
            )));
        }
        if self.n_trunc > spec.dim() {
            return Err(Error::TruncationTooLarge { requested: self.n_trunc, available: spec.dim() });
        }
        if !(self.delta_bar * spec.delta > 1.0) || !self.delta_bar.is_finite() {
            return Err(Error::InvalidInput(format!(
                "delta_bar {} must exceed 1/delta = {}",
                self.delta_bar,
                1.0 / spec.delta
            )));
        }
        if !(self.gap_tol >= 0.0) || !(self.slope_cap > self.delta_bar) || self.max_denominator == 0 {
            return Err(Error::InvalidInput("gap_tol, slope_cap or max_denominator out of range".into()));
        }
        Ok(())
    }

    /// `h`: at least `ceil(1/η)` (and 2), rounded up to a whole number of blocks.
    pub fn pulses(&self, block: usize) -> usize {
        let min = (1.0 / self.eta).ceil().max(2.0) as usize;
        min.div_ceil(block) * block
    }
}

/// Per-step summary of the tracking construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedStep {
    pub edge: Pair,
    /// Modulus of the averaged phase on the edge gap; the effective rotation rate factor.
    pub rho: f64,
    /// Reparametrized duration of the step.
    pub duration: f64,
    pub pulses: usize,
    pub block: usize,
    /// Number of replicas cancelling non-integer gap ratios.
    pub replicas: u64,
    pub kappa: f64,
    /// Coupled pairs whose gap ratio to the edge gap is not rational within tolerance.
    pub unclassified: Vec<Pair>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackedControl {
    /// Slopes of `v̌`, a control of `ψ' = (uA + B)ψ`.
    pub reparam: PiecewiseConstantControl,
    pub steps: Vec<TrackedStep>,
    /// `v̌` at the final time.
    pub v_end: f64,
}

impl TrackedControl {
    /// Reparametrized duration, equal to the L¹ norm of [`Self::main_control`].
    pub fn total_time(&self) -> f64 {
        self.reparam.total_duration()
    }

    /// Control of `ψ' = (A + uB)ψ` with values in `(0, 1/δ̄]`.
    pub fn main_control(&self) -> Result<PiecewiseConstantControl> {
        self.reparam.reparam()
    }
}

struct StepPlan {
    edge: Pair,
    gamma: f64,
    kappa: f64,
    /// Averaging offsets of one block, before the period shift.
    offsets: Vec<f64>,
    replicas: u64,
    phase: f64,
    rho: f64,
    duration: f64,
    unclassified: Vec<Pair>,
}

fn plan_step(
    spec: &SystemSpec,
    pairs: &[Pair],
    edge: Pair,
    theta: f64,
    sigma_duration: f64,
    params: &SynthesisParams,
    nu: f64,
) -> Result<StepPlan> {
    let (j, k) = edge;
    let b = spec.coupling(j, k);
    if b.norm() <= spec.zero_tol {
        return Err(Error::DecoupledEdge { edge });
    }
    let gamma = spec.lambda[k - 1] - spec.lambda[j - 1];
    if gamma.abs() <= params.gap_tol {
        return Err(Error::PhaseCorrectionUndefined { edge });
    }
    let kappa_c = Complex64::new(0.0, 1.0) * (spec.coupling(j, j) - spec.coupling(k, k)) / (-gamma);
    if kappa_c.im.abs() > REALNESS_TOL * (1.0 + kappa_c.re.abs()) {
        return Err(Error::PhaseCorrectionNotReal { edge, imag: kappa_c.im });
    }
    let lead = gamma.abs();
    let mut integers: Vec<u64> = Vec::new();
    let mut replicas: u64 = 1;
    let mut unclassified = Vec::new();
    for &(l, m) in pairs {
        if l > m || (l, m) == (j.min(k), j.max(k)) {
            continue;
        }
        let g = spec.gap(l, m);
        if (g - lead).abs() <= params.gap_tol {
            return Err(Error::ResonantTruncation { edge, partner: (l, m) });
        }
        if g <= params.gap_tol {
            continue;
        }
        match rational_approx(g / lead, params.max_denominator, params.gap_tol / lead) {
            Some((p, 1)) => {
                if !integers.contains(&p) {
                    integers.push(p);
                }
            }
            Some((_, q)) => replicas = replicas.lcm(&q),
            None => unclassified.push((l, m)),
        }
    }
    integers.sort_unstable();
    let moduli: Vec<f64> = integers.iter().map(|&p| p as f64 * lead).collect();
    let offsets = doubling_offsets(&moduli);
    let c0 = mean_phase(&offsets, gamma);
    let rho = c0.norm();
    let period = TAU / lead;
    let phase = ((theta - b.arg() - c0.arg()) / gamma).rem_euclid(period);
    Ok(StepPlan {
        edge,
        gamma,
        kappa: kappa_c.re,
        offsets,
        replicas,
        phase,
        rho,
        duration: sigma_duration * nu / rho,
        unclassified,
    })
}

/// Piecewise-linear `v̌` tracking an auxiliary-system schedule in the
/// interaction picture; returns its slopes as a reparametrized control.
///
/// Each schedule step becomes `h` pulses. Pulse `α` jumps `v̌` within a time
/// `Δ/h` to `w_α + κ t_mid - δ̄Δ/2` and then rises at slope `δ̄` for `Δ`, where
/// the `w_α` are averaging times cancelling every other coupled gap. Blocks of
/// averaging times alternate with their mirror images, so `h` is a multiple of
/// twice the block.
pub fn track_schedule(schedule: &SigmaSchedule, spec: &SystemSpec, params: &SynthesisParams) -> Result<TrackedControl> {
    let levels = schedule.steps.iter().map(|s| s.edge.0.max(s.edge.1)).max().unwrap_or(0);
    params.validate(spec, levels)?;
    if schedule.is_empty() {
        return Ok(TrackedControl { reparam: PiecewiseConstantControl::empty(), steps: Vec::new(), v_end: 0.0 });
    }
    let spec_n = spec.truncate(params.n_trunc)?;
    let pairs = coupled_pairs(&spec_n);
    let nu = nu_limit();
    let plans = schedule
        .steps
        .iter()
        .map(|s| plan_step(&spec_n, &pairs, s.edge, s.theta, s.duration, params, nu))
        .collect::<Result<Vec<_>>>()?;

    let total: f64 = plans.iter().map(|p| p.duration).sum();
    let kappa_max = plans.iter().map(|p| p.kappa.abs()).fold(0.0, f64::max);
    let spacing = (2.0 * kappa_max + params.delta_bar) * total;
    let delta_bar = params.delta_bar;

    let mut steps = Vec::new();
    let mut info = Vec::new();
    let mut v = 0.0;
    let mut t = 0.0;
    for plan in &plans {
        let block_len = plan.offsets.len();
        let block = block_len * plan.replicas as usize;
        let h = params.pulses(2 * block);
        let period = TAU / plan.gamma.abs();
        let span = plan.offsets.iter().cloned().fold(0.0, f64::max);
        let stride_periods = ((spacing + span) / (plan.replicas as f64 * period)).ceil() + 1.0 + params.r_margin as f64;
        let stride = stride_periods * plan.replicas as f64 * period;
        let start = v + spacing + period;
        let first = plan.phase;
        let shift = if first < start { ((start - first) / period).ceil() * period } else { 0.0 };
        let flat = plan.duration / h as f64;
        let jump = flat / h as f64;
        let pulse = flat + jump;
        for i in 0..h {
            let slot = i % (2 * block);
            let slot = if slot < block { slot } else { 2 * block - 1 - slot };
            let offset = plan.offsets[slot % block_len];
            let replica = (slot / block_len) as f64;
            let w = first + shift + offset + period * replica + stride * i as f64;
            let t_mid = t + jump + 0.5 * flat;
            let target = w + plan.kappa * t_mid - 0.5 * delta_bar * flat;
            let slope = (target - v) / jump;
            if slope > params.slope_cap || !slope.is_finite() {
                return Err(Error::SlopeCap { slope, cap: params.slope_cap });
            }
            if slope < delta_bar {
                return Err(Error::SlopeFloor { slope, floor: delta_bar });
            }
            steps.push(Step { value: slope, duration: jump });
            steps.push(Step { value: delta_bar, duration: flat });
            v = target + delta_bar * flat;
            t += pulse;
        }
        info.push(TrackedStep {
            edge: plan.edge,
            rho: plan.rho,
            duration: plan.duration,
            pulses: h,
            block,
            replicas: plan.replicas,
            kappa: plan.kappa,
            unclassified: plan.unclassified.clone(),
        });
    }
    Ok(TrackedControl { reparam: PiecewiseConstantControl { steps }, steps: info, v_end: v })
}
