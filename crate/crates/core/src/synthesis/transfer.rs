use crate::error::{Error, Result};
use crate::linalg::{basis_vector, c, CMat};
use crate::propagate::{galerkin, l1_lower_bound, l1_lower_bound_transfer, propagate_pair, Form};
use crate::report::TransferReport;
use crate::spectra::{check_permutation, Chain, SystemSpec};

use super::bounds::{edge_bound, l1_upper_bound};
use super::control::PiecewiseConstantControl;
use super::sigma::{path_schedule, permutation_to_schedule, SigmaSchedule};
use super::tracking::{track_schedule, SynthesisParams, TrackedControl};

fn empty_report(params: &SynthesisParams, count: usize) -> TransferReport {
    TransferReport {
        fidelities: vec![1.0; count],
        l1_realized: 0.0,
        l1_upper: 0.0,
        l1_lower: 0.0,
        l1_lower_eps: 0.0,
        eps: 0.0,
        slack: 0.0,
        total_time: 0.0,
        edges: Vec::new(),
        steps: Vec::new(),
        params: *params,
    }
}

fn finish(
    tracked: TrackedControl,
    schedule: &SigmaSchedule,
    fidelities: Vec<f64>,
    upper: f64,
    lower: impl Fn(f64) -> Result<f64>,
    main: PiecewiseConstantControl,
    params: &SynthesisParams,
) -> Result<(PiecewiseConstantControl, TransferReport)> {
    let l1_realized = main.l1_norm();
    let eps = 1.0 - fidelities.iter().cloned().fold(1.0, f64::min);
    let report = TransferReport {
        l1_realized,
        l1_upper: upper,
        l1_lower: lower(0.0)?,
        l1_lower_eps: lower(eps)?,
        eps,
        slack: if upper > 0.0 { l1_realized / upper } else { 0.0 },
        total_time: main.total_duration(),
        edges: schedule.steps.iter().map(|s| s.edge).collect(),
        steps: tracked.steps,
        params: *params,
        fidelities,
    };
    report.check_invariants()?;
    Ok((main, report))
}

/// Control of `ψ' = (A + uB)ψ` with values in `(0, δ]` moving `φ_source` close
/// to `φ_target` through swaps along a chain path, with its report.
pub fn synth_transfer(
    spec: &SystemSpec,
    chain: &Chain,
    source: usize,
    target: usize,
    params: &SynthesisParams,
) -> Result<(PiecewiseConstantControl, TransferReport)> {
    let n = spec.dim();
    if source == 0 || target == 0 || source > n || target > n {
        return Err(Error::InvalidInput(format!("levels {source} -> {target} out of range 1..={n}")));
    }
    if !chain.certified_connected {
        return Err(Error::ChainNotConnected);
    }
    if source == target {
        return Ok((PiecewiseConstantControl::empty(), empty_report(params, 1)));
    }
    let schedule = path_schedule(spec, chain, source, target)?;
    let tracked = track_schedule(&schedule, spec, params)?;
    let main = tracked.main_control()?;
    let nt = params.n_trunc;
    let u = propagate_pair(&main, &galerkin(spec, nt)?, Form::Main)?;
    let fid = u.m[(target - 1, source - 1)].norm().min(1.0);
    let upper = schedule.steps.iter().map(|s| edge_bound(spec, s.edge)).sum::<Result<f64>>()?;
    let image = basis_vector(nt, target - 1);
    let lower = |eps: f64| Ok(l1_lower_bound_transfer(spec, source, &image, eps));
    finish(tracked, &schedule, vec![fid], upper, lower, main, params)
}

/// Control realizing `φ_i ↦ ±φ_{σ(i)}` for a permutation of the leading
/// `m = sigma.len()` levels; the chain must be connected on every `1..=k`.
pub fn synth_permutation(
    spec: &SystemSpec,
    chain: &Chain,
    sigma: &[usize],
    params: &SynthesisParams,
) -> Result<(PiecewiseConstantControl, TransferReport)> {
    let m = sigma.len();
    if m == 0 || m > spec.dim() {
        return Err(Error::TruncationTooLarge { requested: m, available: spec.dim() });
    }
    check_permutation(sigma, m)?;
    let schedule = permutation_to_schedule(spec, chain, sigma)?;
    if schedule.is_empty() {
        return Ok((PiecewiseConstantControl::empty(), empty_report(params, m)));
    }
    let tracked = track_schedule(&schedule, spec, params)?;
    let main = tracked.main_control()?;
    let u = propagate_pair(&main, &galerkin(spec, params.n_trunc)?, Form::Main)?;
    let fidelities = (0..m).map(|i| u.m[(sigma[i] - 1, i)].norm().min(1.0)).collect();
    let mut perm = CMat::zeros(m, m);
    for i in 0..m {
        perm[(sigma[i] - 1, i)] = c(1.0, 0.0);
    }
    let upper = l1_upper_bound(spec, chain, m)?;
    let lower = |eps: f64| l1_lower_bound(spec, &perm, eps);
    finish(tracked, &schedule, fidelities, upper, lower, main, params)
}
