use anyhow::anyhow;
use rayon::prelude::*;
use serde::Serialize;

use qctrl_core::error::Pair;
use qctrl_core::liealg::lie_rank_capped;
use qctrl_core::linalg::{c, op_norm, CMat};
use qctrl_core::models::{example_4x4, infinite_well, planar_molecule, MoleculeParams, Parity, WellParams};
use qctrl_core::propagate::{density_evolve, fidelity, l1_lower_bound, propagate};
use qctrl_core::spectra::{
    check_degenerate_decoupling, check_nonresonant, components, coupled_pairs, find_chain, reorder_basis, Chain,
    Violation,
};
use qctrl_core::synthesis::{edge_bound, l1_upper_bound, synth_permutation, synth_transfer};
use qctrl_core::{Error, SkewPair, SynthesisParams, SystemSpec, TransferReport};

use crate::args::*;
use crate::io::*;
use crate::{CliError, CliResult, EXIT_HYPOTHESIS, EXIT_OK, EXIT_SYNTHESIS};

/// Exit code and the JSON or CSV printed on stdout.
#[derive(Debug)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome { code: EXIT_OK, stdout }
    }
}

pub fn run(cli: Cli) -> CliResult<Outcome> {
    match cli.command {
        Command::Check(a) => cmd_check(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Bounds(a) => cmd_bounds(&a),
        Command::LieRank(a) => cmd_lie_rank(&a),
        Command::Model(a) => cmd_model(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn truncated(spec: SystemSpec, n: Option<usize>) -> CliResult<SystemSpec> {
    match n {
        Some(n) => Ok(spec.truncate(n)?),
        None => Ok(spec),
    }
}

fn resolve_chain(spec: &SystemSpec, args: &ChainArgs) -> CliResult<Chain> {
    match &args.edges {
        Some(text) => Ok(Chain::from_edges(spec, &parse_edges(text)?)?),
        None => Ok(find_chain(spec)?),
    }
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub levels: usize,
    pub gap_tol: f64,
    /// Coupled pairs of equal eigenvalues.
    pub degenerate_couplings: Vec<Pair>,
    pub components: Vec<Vec<usize>>,
    pub chain: Vec<Pair>,
    /// `|λ_k - λ_j|` for each chain edge.
    pub gaps: Vec<f64>,
    pub connected: bool,
    pub nonresonant: bool,
    pub violations: Vec<Violation>,
    pub basis_order: Option<Vec<usize>>,
    pub certified: bool,
}

pub fn check_spec(spec: &SystemSpec, chain_args: &ChainArgs, gap_tol: f64) -> CliResult<(CheckReport, Option<Chain>)> {
    let degenerate = check_degenerate_decoupling(spec);
    let comps = components(spec.dim(), &coupled_pairs(spec));
    let chain = match resolve_chain(spec, chain_args) {
        Ok(chain) => Some(check_nonresonant(spec, &chain, gap_tol)),
        Err(e) if e.code == EXIT_HYPOTHESIS => None,
        Err(e) => return Err(e),
    };
    let report = match &chain {
        Some(ch) => {
            let edges = ch.undirected();
            let order = reorder_basis(spec, ch).ok();
            CheckReport {
                levels: spec.dim(),
                gap_tol,
                gaps: edges.iter().map(|&(j, k)| spec.gap(j, k)).collect(),
                chain: edges,
                connected: ch.certified_connected,
                nonresonant: ch.certified_nonresonant,
                violations: ch.violations.clone(),
                certified: degenerate.is_empty() && ch.certified_connected && ch.certified_nonresonant,
                basis_order: order,
                degenerate_couplings: degenerate,
                components: comps,
            }
        }
        None => CheckReport {
            levels: spec.dim(),
            gap_tol,
            degenerate_couplings: degenerate,
            components: comps,
            chain: Vec::new(),
            gaps: Vec::new(),
            connected: false,
            nonresonant: false,
            violations: Vec::new(),
            basis_order: None,
            certified: false,
        },
    };
    Ok((report, chain))
}

pub fn cmd_check(a: &CheckArgs) -> CliResult<Outcome> {
    let spec = truncated(read_spec(&a.spec)?, a.n)?;
    let (report, _) = check_spec(&spec, &a.chain, gap_tol()?)?;
    let code = if report.certified { EXIT_OK } else { EXIT_HYPOTHESIS };
    Ok(Outcome { code, stdout: to_json(&report) })
}

/// Chain certified for synthesis, or a hypothesis failure naming what broke.
fn certified_chain(spec: &SystemSpec, chain_args: &ChainArgs, gap_tol: f64) -> CliResult<Chain> {
    let (report, chain) = check_spec(spec, chain_args, gap_tol)?;
    match chain {
        Some(chain) if report.certified => Ok(chain),
        _ => Err(CliError::hypothesis(anyhow!(
            "hypotheses not certified: degenerate couplings {:?}, connected {}, violations {:?}",
            report.degenerate_couplings,
            report.connected,
            report.violations
        ))),
    }
}

fn synth_params(spec: &SystemSpec, eta: f64, n: usize, delta_bar: Option<f64>) -> CliResult<SynthesisParams> {
    let mut p = SynthesisParams::for_spec(spec, eta, n);
    p.gap_tol = gap_tol()?;
    if let Some(d) = delta_bar {
        p.delta_bar = d;
    }
    Ok(p)
}

pub fn cmd_synth(a: &SynthArgs) -> CliResult<Outcome> {
    let spec = read_spec(&a.spec)?;
    let n = a.n.unwrap_or(spec.dim());
    let params = synth_params(&spec, a.eta, n, a.delta_bar)?;
    let chain = certified_chain(&spec, &a.chain, params.gap_tol)?;
    let (control, report) = match (&a.perm, a.from, a.to) {
        (Some(perm), _, _) => synth_permutation(&spec, &chain, &parse_list(perm)?, &params)?,
        (None, Some(from), Some(to)) => synth_transfer(&spec, &chain, from, to, &params)?,
        _ => return Err(CliError::io(anyhow!("give either --from/--to or --perm"))),
    };
    if let Some(path) = &a.control {
        write_control(path, &control)?;
    }
    let json = to_json(&report);
    if let Some(path) = &a.report {
        write_text(path, &json)?;
    }
    Ok(Outcome::ok(json))
}

#[derive(Debug, Serialize)]
pub struct SimulationReport {
    pub levels: usize,
    pub total_time: f64,
    pub l1_norm: f64,
    /// `|⟨φ_j, ψ(T)⟩|`.
    pub final_moduli: Vec<f64>,
    pub fidelity: Option<f64>,
    pub norm_defect: f64,
}

#[derive(Debug, Serialize)]
pub struct DensityReport {
    pub levels: usize,
    pub total_time: f64,
    pub l1_norm: f64,
    pub rho: DensityFile,
    pub eigenvalues: Vec<f64>,
    /// Operator norm of the difference with `--density-target`.
    pub error: Option<f64>,
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<Outcome> {
    let spec = read_spec(&a.spec)?;
    let n = a.n.unwrap_or(spec.dim());
    let control = read_control(&a.control)?;
    if let Some(path) = &a.density {
        let rho0 = read_density(path)?;
        let rho = density_evolve(&rho0, &control, &spec, n)?;
        let error = match &a.density_target {
            Some(t) => {
                let target = read_density(t)?;
                if target.dim() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: target.dim() }.into());
                }
                Some(op_norm(&(&rho.rho - &target.rho)))
            }
            None => None,
        };
        let report = DensityReport {
            levels: n,
            total_time: control.total_duration(),
            l1_norm: control.l1_norm(),
            eigenvalues: rho.eigenvalues(),
            rho: DensityFile::from_matrix(&rho.rho),
            error,
        };
        let json = to_json(&report);
        if let Some(path) = &a.report {
            write_text(path, &json)?;
        }
        return Ok(Outcome::ok(json));
    }
    let psi0 = parse_state(&a.psi0, n)?;
    let (traj, _) = propagate(&control, &spec, n, &psi0)?;
    let last = traj.states.last().expect("trajectory has the initial state");
    let fid = match a.target {
        Some(k) if k == 0 || k > n => return Err(CliError::io(anyhow!("target level {k} outside 1..={n}"))),
        Some(k) => Some(fidelity(&qctrl_core::linalg::basis_vector(n, k - 1), last)),
        None => None,
    };
    let report = SimulationReport {
        levels: n,
        total_time: control.total_duration(),
        l1_norm: control.l1_norm(),
        final_moduli: last.iter().map(|z| z.norm()).collect(),
        fidelity: fid,
        norm_defect: (last.norm() - 1.0).abs(),
    };
    if let Some(path) = &a.trajectory {
        write_text(path, &trajectory_csv(&traj))?;
    }
    let json = to_json(&report);
    if let Some(path) = &a.report {
        write_text(path, &json)?;
    }
    Ok(Outcome::ok(json))
}

#[derive(Debug, Serialize)]
pub struct EdgeBound {
    pub edge: Pair,
    pub bound: f64,
}

#[derive(Debug, Serialize)]
pub struct BoundsReport {
    pub m: usize,
    pub l1_upper: f64,
    pub edge_bounds: Vec<EdgeBound>,
    pub perm: Vec<usize>,
    pub eps: f64,
    pub l1_lower: f64,
}

pub fn cmd_bounds(a: &BoundsArgs) -> CliResult<Outcome> {
    let spec = read_spec(&a.spec)?;
    let chain = resolve_chain(&spec, &a.chain)?;
    let perm: Vec<usize> = match &a.perm {
        Some(text) => parse_list(text)?,
        None => (1..=a.m).rev().collect(),
    };
    if perm.len() != a.m {
        return Err(CliError::io(anyhow!("permutation has {} entries, expected {}", perm.len(), a.m)));
    }
    qctrl_core::spectra::check_permutation(&perm, a.m)?;
    let mut target = CMat::zeros(a.m, a.m);
    for (i, &s) in perm.iter().enumerate() {
        target[(s - 1, i)] = c(1.0, 0.0);
    }
    let edge_bounds = chain
        .restricted(a.m)
        .into_iter()
        .filter(|&(j, k)| j < k)
        .map(|edge| Ok(EdgeBound { edge, bound: edge_bound(&spec, edge)? }))
        .collect::<CliResult<Vec<_>>>()?;
    let report = BoundsReport {
        m: a.m,
        l1_upper: l1_upper_bound(&spec, &chain, a.m)?,
        edge_bounds,
        l1_lower: l1_lower_bound(&spec, &target, a.eps)?,
        perm,
        eps: a.eps,
    };
    Ok(Outcome::ok(to_json(&report)))
}

#[derive(Debug, Serialize)]
pub struct LieRankReport {
    pub dimension: usize,
    pub verdict: String,
    pub generators_found: usize,
}

pub fn cmd_lie_rank(a: &LieRankArgs) -> CliResult<Outcome> {
    let spec = truncated(read_spec(&a.spec)?, a.n)?;
    if !a.skip_decoupling_check {
        let bad = check_degenerate_decoupling(&spec);
        if !bad.is_empty() {
            return Err(CliError::hypothesis(anyhow!("degenerate levels are coupled: {bad:?}")));
        }
    }
    let rank = lie_rank_capped(&SkewPair::from_spec(&spec), a.max_dim)?;
    let report = LieRankReport {
        dimension: rank.dimension,
        verdict: rank.verdict.to_string(),
        generators_found: rank.basis.len(),
    };
    Ok(Outcome::ok(to_json(&report)))
}

pub fn cmd_model(a: &ModelArgs) -> CliResult<Outcome> {
    let spec = match &a.model {
        Model::Well { n, eta, exact } => {
            let p = WellParams::new(*n).with_eta(*eta).exact(*exact);
            if p.eta_warning() {
                eprintln!("warning: |eta| = {} is outside the range where the expansion is trusted", eta.abs());
            }
            infinite_well(&p)?
        }
        Model::Molecule { n, alpha, parity } => {
            let parity = match parity {
                ParityArg::Even => Parity::Even,
                ParityArg::Odd => Parity::Odd,
            };
            planar_molecule(&MoleculeParams::new(*n, *alpha, parity))?
        }
        Model::Ex4 => example_4x4(),
    };
    let json = spec.to_json();
    match &a.out {
        Some(path) => {
            write_text(path, &json)?;
            Ok(Outcome::ok(String::new()))
        }
        None => Ok(Outcome::ok(json)),
    }
}

#[derive(Debug, Serialize)]
struct SweepRow {
    eta: f64,
    #[serde(rename = "N")]
    n: usize,
    fidelity: Option<f64>,
    l1_realized: Option<f64>,
    l1_upper: Option<f64>,
    l1_lower: Option<f64>,
    total_time: Option<f64>,
    pulses: Option<usize>,
    error: Option<String>,
}

impl SweepRow {
    fn from_result(eta: f64, n: usize, r: Result<TransferReport, String>) -> Self {
        match r {
            Ok(rep) => SweepRow {
                eta,
                n,
                fidelity: Some(rep.min_fidelity()),
                l1_realized: Some(rep.l1_realized),
                l1_upper: Some(rep.l1_upper),
                l1_lower: Some(rep.l1_lower),
                total_time: Some(rep.total_time),
                pulses: Some(rep.steps.iter().map(|s| s.pulses).sum()),
                error: None,
            },
            Err(e) => SweepRow {
                eta,
                n,
                fidelity: None,
                l1_realized: None,
                l1_upper: None,
                l1_lower: None,
                total_time: None,
                pulses: None,
                error: Some(e),
            },
        }
    }
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<Outcome> {
    let spec = read_spec(&a.spec)?;
    let etas: Vec<f64> = parse_list(&a.eta)?;
    let ns: Vec<usize> = match &a.n {
        Some(text) => parse_list(text)?,
        None => vec![spec.dim()],
    };
    let tol = gap_tol()?;
    let chain = certified_chain(&spec, &a.chain, tol)?;
    let points: Vec<(f64, usize)> = ns.iter().flat_map(|&n| etas.iter().map(move |&e| (e, n))).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()
        .map_err(|e| CliError::synthesis(anyhow!(e)))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(eta, n)| {
                let result = synth_params(&spec, eta, n, None)
                    .map_err(|e| e.to_string())
                    .and_then(|p| synth_transfer(&spec, &chain, a.from, a.to, &p).map_err(|e| e.to_string()))
                    .map(|(_, rep)| rep);
                SweepRow::from_result(eta, n, result)
            })
            .collect()
    });
    let failed = rows.iter().any(|r| r.error.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &rows {
        w.serialize(row).expect("in-memory write");
    }
    let text = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv");
    if let Some(path) = &a.out {
        write_text(path, &text)?;
    }
    Ok(Outcome { code: if failed { EXIT_SYNTHESIS } else { EXIT_OK }, stdout: text })
}
