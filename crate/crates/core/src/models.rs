//! Built-in systems. The infinite well is driven by a dipole field; the planar
//! rotor feels a field of fixed direction. A four-level example with a
//! degenerate pair is included, along with the parity-based steering of the
//! rotor to its ground state.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c, drift_matrix, CMat, CVec};
use crate::propagate::{propagate_multi, MultiStep};
use crate::spectra::{find_chain, SystemSpec};
use crate::synthesis::{steer_to_first, track_schedule, PiecewiseConstantControl, SynthesisParams};

pub const WELL_DELTA: f64 = 5.0;
pub const MOLECULE_DELTA: f64 = 5.0;
/// Above this `|η|` the second-order expansion of the well spectrum is unreliable.
pub const WELL_ETA_WARNING: f64 = 1.0;
pub const ALPHA_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellParams {
    pub n: usize,
    pub eta: f64,
    /// Diagonalize the truncated `A + ηB` instead of using the expansion.
    pub exact: bool,
    pub delta: f64,
}

impl WellParams {
    pub fn new(n: usize) -> Self {
        WellParams { n, eta: 0.0, exact: false, delta: WELL_DELTA }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn exact(mut self, exact: bool) -> Self {
        self.exact = exact;
        self
    }

    /// True when `|η|` exceeds the range where the expansion is trusted.
    pub fn eta_warning(&self) -> bool {
        self.eta.abs() > WELL_ETA_WARNING
    }
}

/// `⟨φ_j, x φ_k⟩` for `φ_k = √2 cos(kπx)` (odd `k`), `√2 sin(kπx)` (even `k`) on `(-1/2, 1/2)`.
pub fn well_dipole(j: usize, k: usize) -> f64 {
    if (j + k).is_multiple_of(2) {
        return 0.0;
    }
    let (jf, kf) = (j as f64, k as f64);
    let mag = 8.0 * jf * kf / (PI * PI * (jf * jf - kf * kf).powi(2));
    let exponent = j.min(k) - 1 + (j.abs_diff(k) - 1) / 2;
    if exponent.is_multiple_of(2) {
        mag
    } else {
        -mag
    }
}

/// `‖x φ_k‖` in the full space: `√(1/12 - 1/(2k²π²))`.
pub fn well_dipole_norm(k: usize) -> f64 {
    let kf = k as f64;
    (1.0 / 12.0 - 1.0 / (2.0 * kf * kf * PI * PI)).sqrt()
}

/// `λ_k(η) = -k²π²/2 - (1/(24π²k²) - 5/(8π⁴k⁴)) η²`.
pub fn well_eigenvalue(k: usize, eta: f64) -> f64 {
    let kf = k as f64;
    let pi2 = PI * PI;
    -kf * kf * pi2 / 2.0 - (1.0 / (24.0 * pi2 * kf * kf) - 5.0 / (8.0 * pi2 * pi2 * kf.powi(4))) * eta * eta
}

/// Infinite well with coupling `B = ix`.
pub fn infinite_well(p: &WellParams) -> Result<SystemSpec> {
    if p.n < 2 {
        return Err(Error::InvalidSpec("the well needs at least two levels".into()));
    }
    let n = p.n;
    let b = CMat::from_fn(n, n, |r, k| c(0.0, well_dipole(r + 1, k + 1)));
    if p.exact && p.eta != 0.0 {
        let h = CMat::from_fn(n, n, |r, k| {
            let diag = if r == k { -((r + 1) as f64).powi(2) * PI * PI / 2.0 } else { 0.0 };
            c(diag + p.eta * well_dipole(r + 1, k + 1), 0.0)
        });
        let eig = h.symmetric_eigen();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let mut v = CMat::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            let mut vec = eig.eigenvectors.column(src).into_owned();
            let pivot = vec[col];
            if pivot.norm() > 0.0 {
                vec *= pivot.conj() / pivot.norm();
            }
            v.set_column(col, &vec);
        }
        let lambda = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let bv = v.adjoint() * &b * &v;
        let bv = (&bv - bv.adjoint()) * c(0.5, 0.0);
        return SystemSpec::new(lambda, bv, p.delta);
    }
    let lambda = (1..=n).map(|k| well_eigenvalue(k, p.eta)).collect();
    SystemSpec::new(lambda, b, p.delta)?.with_b_norms((1..=n).map(well_dipole_norm).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoleculeParams {
    /// Highest harmonic.
    pub n: usize,
    /// Field direction in `[0, π/2]`.
    pub alpha: f64,
    pub parity: Parity,
    pub delta: f64,
}

impl MoleculeParams {
    pub fn new(n: usize, alpha: f64, parity: Parity) -> Self {
        MoleculeParams { n, alpha, parity, delta: MOLECULE_DELTA }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidSpec("the rotor needs at least one harmonic".into()));
        }
        if !(0.0..=PI / 2.0).contains(&self.alpha) {
            return Err(Error::InvalidSpec(format!("alpha {} outside [0, pi/2]", self.alpha)));
        }
        Ok(())
    }
}

/// Rotor restricted to the functions even (`1/√2π`, `cos(k(θ-α))/√π`, `k = 0..N`)
/// or odd (`sin(k(θ-α))/√π`, `k = 1..N`) about `α`, with `λ_k = -k²` and
/// coupling `-i cos(θ - α)`.
pub fn planar_molecule(p: &MoleculeParams) -> Result<SystemSpec> {
    p.validate()?;
    let (ks, first): (Vec<usize>, f64) = match p.parity {
        Parity::Even => ((0..=p.n).collect(), FRAC_1_SQRT_2),
        Parity::Odd => ((1..=p.n).collect(), 0.5),
    };
    let m = ks.len();
    let mut b = CMat::zeros(m, m);
    for r in 0..m.saturating_sub(1) {
        let x = if ks[r] == 0 { first } else { 0.5 };
        b[(r, r + 1)] = c(0.0, -x);
        b[(r + 1, r)] = c(0.0, -x);
    }
    let lambda = ks.iter().map(|&k| -((k * k) as f64)).collect();
    let norms = ks
        .iter()
        .map(|&k| match (p.parity, k) {
            (Parity::Even, 1) => 0.75f64.sqrt(),
            (Parity::Odd, 1) => 0.5,
            _ => FRAC_1_SQRT_2,
        })
        .collect();
    SystemSpec::new(lambda, b, p.delta)?.with_b_norms(norms)
}

/// The four-level example: `A = diag(i, 2i, 4i, 4i)`, `b_12 = b_13 = b_24 = 1`.
pub fn example_4x4() -> SystemSpec {
    let mut b = CMat::zeros(4, 4);
    for (j, k) in [(0, 1), (0, 2), (1, 3)] {
        b[(j, k)] = c(1.0, 0.0);
        b[(k, j)] = c(-1.0, 0.0);
    }
    SystemSpec::new(vec![1.0, 2.0, 4.0, 4.0], b, 1.0).expect("example is valid")
}

/// Quadrature nodes on the circle, exact for trigonometric polynomials of degree below `m`.
fn circle_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|i| TAU * i as f64 / m as f64).collect()
}

fn circle_inner(f: impl Fn(f64) -> f64, m: usize) -> f64 {
    circle_nodes(m).iter().map(|&t| f(t)).sum::<f64>() * TAU / m as f64
}

fn even_fn(k: usize, alpha: f64) -> impl Fn(f64) -> f64 {
    move |t| if k == 0 { 1.0 / TAU.sqrt() } else { (k as f64 * (t - alpha)).cos() / PI.sqrt() }
}

fn odd_fn(k: usize, alpha: f64) -> impl Fn(f64) -> f64 {
    move |t| (k as f64 * (t - alpha)).sin() / PI.sqrt()
}

/// Largest `|⟨even_j, cos(θ-α) odd_k⟩|` over the truncation, by exact quadrature.
pub fn parity_couplings_zero(p: &MoleculeParams) -> f64 {
    let m = 4 * p.n + 8;
    let mut worst: f64 = 0.0;
    for j in 0..=p.n {
        for k in 1..=p.n {
            let (e, o) = (even_fn(j, p.alpha), odd_fn(k, p.alpha));
            let a = p.alpha;
            worst = worst.max(circle_inner(|t| e(t) * (t - a).cos() * o(t), m).abs());
        }
    }
    worst
}

/// Largest `|⟨f_j, sin(θ-α) f_k⟩|` with `f_j, f_k` of the same parity about `α`.
pub fn same_parity_sin_couplings(p: &MoleculeParams) -> f64 {
    let m = 4 * p.n + 8;
    let a = p.alpha;
    let mut worst: f64 = 0.0;
    for j in 0..=p.n {
        for k in 0..=p.n {
            let (e1, e2) = (even_fn(j, a), even_fn(k, a));
            worst = worst.max(circle_inner(|t| e1(t) * (t - a).sin() * e2(t), m).abs());
            if j >= 1 && k >= 1 {
                let (o1, o2) = (odd_fn(j, a), odd_fn(k, a));
                worst = worst.max(circle_inner(|t| o1(t) * (t - a).sin() * o2(t), m).abs());
            }
        }
    }
    worst
}

/// Full rotor on the basis `1/√2π, cos θ/√π, sin θ/√π, …, cos Nθ/√π, sin Nθ/√π`.
#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSystem {
    pub n: usize,
    pub lambda: Vec<f64>,
    /// `-i cos θ`.
    pub b_cos: CMat,
    /// `-i sin θ`.
    pub b_sin: CMat,
}

fn trig_fn(index: usize) -> impl Fn(f64) -> f64 {
    move |t| {
        if index == 0 {
            return 1.0 / TAU.sqrt();
        }
        let k = index.div_ceil(2) as f64;
        if index % 2 == 1 {
            (k * t).cos() / PI.sqrt()
        } else {
            (k * t).sin() / PI.sqrt()
        }
    }
}

pub fn molecule_full_system(n: usize) -> MoleculeSystem {
    let dim = 2 * n + 1;
    let m = 4 * n + 8;
    let mut b_cos = CMat::zeros(dim, dim);
    let mut b_sin = CMat::zeros(dim, dim);
    for r in 0..dim {
        for k in 0..dim {
            let (f, g) = (trig_fn(r), trig_fn(k));
            b_cos[(r, k)] = c(0.0, -circle_inner(|t| f(t) * t.cos() * g(t), m));
            let (f, g) = (trig_fn(r), trig_fn(k));
            b_sin[(r, k)] = c(0.0, -circle_inner(|t| f(t) * t.sin() * g(t), m));
        }
    }
    let lambda = (0..dim).map(|i| -((i.div_ceil(2) * i.div_ceil(2)) as f64)).collect();
    MoleculeSystem { n, lambda, b_cos, b_sin }
}

impl MoleculeSystem {
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    pub fn drift(&self) -> CMat {
        drift_matrix(&self.lambda)
    }

    /// Coefficients on the even basis about `α` (`k = 0..N`).
    pub fn even_part(&self, psi: &CVec, alpha: f64) -> CVec {
        CVec::from_fn(self.n + 1, |k, _| {
            if k == 0 {
                return psi[0];
            }
            let (s, co) = (k as f64 * alpha).sin_cos();
            psi[2 * k - 1] * co + psi[2 * k] * s
        })
    }

    /// Coefficients on the odd basis about `α` (`k = 1..N`).
    pub fn odd_part(&self, psi: &CVec, alpha: f64) -> CVec {
        CVec::from_fn(self.n, |i, _| {
            let k = i + 1;
            let (s, co) = (k as f64 * alpha).sin_cos();
            psi[2 * k] * co - psi[2 * k - 1] * s
        })
    }

    /// Full coefficients from even and odd coefficients about `α`.
    pub fn compose(&self, even: &CVec, odd: &CVec, alpha: f64) -> CVec {
        let mut psi = CVec::zeros(self.dim());
        psi[0] = even[0];
        for k in 1..=self.n {
            let (s, co) = (k as f64 * alpha).sin_cos();
            let (e, o) = (even[k], odd[k - 1]);
            psi[2 * k - 1] = e * co - o * s;
            psi[2 * k] = e * s + o * co;
        }
        psi
    }

    /// `τ_β`: squared norm of the even part about `β` of `ψ`'s odd part about `α`.
    pub fn tau_beta(&self, psi: &CVec, alpha: f64, beta: f64) -> f64 {
        let odd = self.odd_part(psi, alpha);
        let remainder = self.compose(&CVec::zeros(self.n + 1), &odd, alpha);
        self.even_part(&remainder, beta).norm_squared()
    }

    /// Field of strength `v_t` along `α` for each step of `control`.
    pub fn directed_steps(control: &PiecewiseConstantControl, alpha: f64) -> Vec<MultiStep> {
        let (s, co) = alpha.sin_cos();
        control
            .steps
            .iter()
            .map(|st| MultiStep { values: vec![st.value * co, st.value * s], duration: st.duration })
            .collect()
    }
}

/// Candidate field directions `i·π/128`, `i = 0..64`, covering `[0, π/2)`.
pub fn alpha_grid() -> Vec<f64> {
    (0..ALPHA_GRID).map(|i| i as f64 * PI / (2.0 * ALPHA_GRID as f64)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringRound {
    pub alpha: f64,
    /// Control along direction `alpha`, values in `(0, δ]`.
    pub control: PiecewiseConstantControl,
    /// Weight moved into the even subspace by re-angling (`τ_β`); the whole even norm on the first round.
    pub tau: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringOutcome {
    pub rounds: Vec<SteeringRound>,
    pub fidelity: f64,
    pub state: CVec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringOptions {
    pub eta: f64,
    pub delta: f64,
}

impl Default for SteeringOptions {
    fn default() -> Self {
        SteeringOptions { eta: 0.05, delta: MOLECULE_DELTA }
    }
}

pub fn molecule_steer_to_ground(psi0: &CVec, eps: f64, max_rounds: usize) -> Result<SteeringOutcome> {
    molecule_steer_to_ground_with(psi0, eps, max_rounds, SteeringOptions::default())
}

/// Steers `psi0` (coefficients on the `2N+1` trigonometric basis) toward the
/// constant function. Each round picks the grid direction with the largest
/// even part and moves it onto the constant through the single-input even
/// subsystem; the resulting control is simulated on the full two-input rotor.
pub fn molecule_steer_to_ground_with(
    psi0: &CVec,
    eps: f64,
    max_rounds: usize,
    opts: SteeringOptions,
) -> Result<SteeringOutcome> {
    let dim = psi0.len();
    if dim < 3 || dim.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!("state length {dim} is not 2N+1 with N >= 1")));
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("initial state must have unit norm".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let n = (dim - 1) / 2;
    let system = molecule_full_system(n);
    let a = system.drift();
    let bs = [system.b_cos.clone(), system.b_sin.clone()];
    let mut psi = psi0.clone();
    let mut rounds = Vec::new();
    let mut fid = psi[0].norm();
    let mut previous: Option<f64> = None;
    while fid < 1.0 - eps {
        if rounds.len() >= max_rounds {
            return Err(Error::RoundLimit { rounds: rounds.len(), achieved: fid });
        }
        let (alpha, even_norm) = alpha_grid()
            .into_iter()
            .map(|al| (al, system.even_part(&psi, al).norm_squared()))
            .fold((0.0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        let tau = match previous {
            Some(prev) => system.tau_beta(&psi, prev, alpha),
            None => even_norm,
        };
        let mut mp = MoleculeParams::new(n, alpha, Parity::Even);
        mp.delta = opts.delta;
        let spec = planar_molecule(&mp)?;
        let chain = find_chain(&spec)?;
        let even = system.even_part(&psi, alpha);
        let schedule = steer_to_first(&spec, &chain, &even, 1e-14)?;
        let params = SynthesisParams::for_spec(&spec, opts.eta, spec.dim());
        let control = track_schedule(&schedule, &spec, &params)?.main_control()?;
        let u = propagate_multi(&a, &bs, &MoleculeSystem::directed_steps(&control, alpha))?;
        psi = u.apply(&psi);
        fid = psi[0].norm();
        rounds.push(SteeringRound { alpha, control, tau, fidelity: fid });
        previous = Some(alpha);
    }
    Ok(SteeringOutcome { rounds, fidelity: fid, state: psi })
}

/// `(cos θ + sin θ)/√(2π)`, normalized.
pub fn molecule_mixed_state(n: usize) -> CVec {
    let mut psi = CVec::zeros(2 * n + 1);
    psi[1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    psi[2] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    psi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{check_nonresonant, Chain, DEFAULT_GAP_TOL};

    #[test]
    fn well_values() {
        assert!((well_dipole(1, 2).abs() - 16.0 / (9.0 * PI * PI)).abs() < 1e-15);
        assert!((well_dipole(1, 2).abs() - 0.18014).abs() < 1e-4);
        assert!((well_eigenvalue(1, 0.0) + PI * PI / 2.0).abs() < 1e-15);
        let spec = infinite_well(&WellParams::new(3)).unwrap();
        assert_eq!(spec.delta, 5.0);
        assert!((spec.lambda[2] + 9.0 * PI * PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn well_two_jet_against_exact() {
        let eta = 0.1;
        let exact = infinite_well(&WellParams::new(12).with_eta(eta).exact(true)).unwrap();
        let shift = exact.lambda[0] - well_eigenvalue(1, 0.0);
        let jet = well_eigenvalue(1, eta) - well_eigenvalue(1, 0.0);
        assert!((shift - jet).abs() < 1e-3 * jet.abs(), "{shift} {jet}");
        assert!(exact.validate().is_ok());
    }

    #[test]
    fn example_matrices() {
        let spec = example_4x4();
        assert_eq!(spec.lambda, vec![1.0, 2.0, 4.0, 4.0]);
        assert_eq!(spec.coupling(3, 4), c(0.0, 0.0));
    }

    #[test]
    fn molecule_couplings() {
        let even = planar_molecule(&MoleculeParams::new(4, 0.3, Parity::Even)).unwrap();
        assert!((even.coupling(1, 2).norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((even.coupling(2, 3).norm() - 0.5).abs() < 1e-15);
        let odd = planar_molecule(&MoleculeParams::new(4, 0.3, Parity::Odd)).unwrap();
        assert_eq!(odd.dim(), 4);
        assert!((odd.coupling(1, 2).norm() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn molecule_chain_nonresonant() {
        let spec = planar_molecule(&MoleculeParams::new(10, 0.0, Parity::Even)).unwrap();
        let edges: Vec<_> = (1..spec.dim()).map(|k| (k, k + 1)).collect();
        let chain = check_nonresonant(&spec, &Chain::from_edges(&spec, &edges).unwrap(), DEFAULT_GAP_TOL);
        assert!(chain.certified_nonresonant);
    }

    #[test]
    fn restricted_spec_matches_full_system() {
        let n = 4;
        let alpha = 0.6;
        let sys = molecule_full_system(n);
        let spec = planar_molecule(&MoleculeParams::new(n, alpha, Parity::Even)).unwrap();
        let (s, co) = alpha.sin_cos();
        let b_alpha = &sys.b_cos * c(co, 0.0) + &sys.b_sin * c(s, 0.0);
        let basis: Vec<CVec> = (0..=n)
            .map(|k| {
                let mut e = CVec::zeros(n + 1);
                e[k] = c(1.0, 0.0);
                sys.compose(&e, &CVec::zeros(n), alpha)
            })
            .collect();
        for j in 0..=n {
            for k in 0..=n {
                let val = basis[j].dotc(&(&b_alpha * &basis[k]));
                assert!((val - spec.b[(j, k)]).norm() < 1e-12, "({j},{k})");
            }
        }
    }

    #[test]
    fn parity_zero() {
        for alpha in [0.0, 0.7, 1.5] {
            let p = MoleculeParams::new(5, alpha, Parity::Even);
            assert!(parity_couplings_zero(&p) <= 1e-12);
            assert!(same_parity_sin_couplings(&p) <= 1e-12);
        }
    }

    #[test]
    fn tau_identity() {
        let sys = molecule_full_system(3);
        let psi = CVec::from_fn(7, |i, _| c(0.1 * i as f64 + 0.05, 0.02 * (i * i) as f64));
        let psi = psi.unscale(psi.norm());
        let (alpha, beta) = (0.4, 1.1);
        let odd = sys.odd_part(&psi, alpha);
        let formula: f64 = (1..=3).map(|k| (odd[k - 1] * (k as f64 * (beta - alpha)).sin()).norm_sqr()).sum();
        assert!((sys.tau_beta(&psi, alpha, beta) - formula).abs() < 1e-12);
    }

    #[test]
    fn steer_constant_is_empty() {
        let mut psi = CVec::zeros(11);
        psi[0] = c(1.0, 0.0);
        let out = molecule_steer_to_ground(&psi, 0.2, 3).unwrap();
        assert!(out.rounds.is_empty());
    }

    #[test]
    fn steer_cosine_single_round_at_zero() {
        let mut psi = CVec::zeros(11);
        psi[1] = c(1.0, 0.0);
        let out = molecule_steer_to_ground(&psi, 0.2, 3).unwrap();
        assert_eq!(out.rounds.len(), 1);
        assert_eq!(out.rounds[0].alpha, 0.0);
        assert!(out.fidelity >= 0.8);
    }
}
