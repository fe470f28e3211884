use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qctrl_core::models::{well_dipole, well_dipole_norm, well_eigenvalue};
use qctrl_core::spectra::{find_chain, Chain};
use qctrl_core::synthesis::{decompose_permutation, period_tau, permutation_to_schedule, schedule_unitary, Ratio};
use qctrl_core::{infinite_well, WellParams};

fn phi(k: usize, x: f64) -> f64 {
    let arg = k as f64 * PI * x;
    if k % 2 == 1 {
        2f64.sqrt() * arg.cos()
    } else {
        2f64.sqrt() * arg.sin()
    }
}

// Composite Simpson on (-1/2, 1/2).
fn simpson(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let h = 1.0 / panels as f64;
    let mut acc = f(-0.5) + f(0.5);
    for i in 1..panels {
        let x = -0.5 + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 * f(x) } else { 2.0 * f(x) };
    }
    acc * h / 3.0
}

#[test]
fn well_couplings_match_quadrature() {
    for j in 1..=12 {
        for k in 1..=12 {
            let q = simpson(|x| phi(j, x) * x * phi(k, x), 20_000);
            let closed = if j == k { 0.0 } else { well_dipole(j, k) };
            assert!((q - closed).abs() < 1e-10, "({j},{k}): {q} vs {closed}");
        }
    }
}

#[test]
fn well_dipole_norms_match_quadrature() {
    for k in 1..=12 {
        let q = simpson(|x| (x * phi(k, x)).powi(2), 20_000).sqrt();
        assert!((q - well_dipole_norm(k)).abs() < 1e-10, "{k}");
    }
}

#[test]
fn well_spec_coupling_is_i_times_dipole() {
    let spec = infinite_well(&WellParams::new(8)).unwrap();
    for j in 1..=8 {
        for k in 1..=8 {
            let expect = if j == k { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, well_dipole(j, k)) };
            assert!((spec.coupling(j, k) - expect).norm() < 1e-15);
        }
    }
    assert!((spec.coupling(1, 2).norm() - 16.0 / (9.0 * PI * PI)).abs() < 1e-14);
}

#[test]
fn well_expansion_matches_exact_diagonalization() {
    let eta = 0.1;
    let exact = infinite_well(&WellParams::new(40).with_eta(eta).exact(true)).unwrap();
    for k in 1..=3 {
        let shift = exact.lambda[k - 1] - well_eigenvalue(k, 0.0);
        let jet = well_eigenvalue(k, eta) - well_eigenvalue(k, 0.0);
        assert!((shift - jet).abs() < 1e-3 * jet.abs(), "{k}: {shift} vs {jet}");
    }
}

fn path_chain(m: usize) -> (qctrl_core::SystemSpec, Chain) {
    let spec = infinite_well(&WellParams::new(m.max(2))).unwrap();
    let edges: Vec<_> = (1..m).map(|k| (k, k + 1)).collect();
    let chain = Chain::from_edges(&spec, &edges).unwrap();
    (spec, chain)
}

fn permutations(m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(m - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, m);
            out.push(q);
        }
    }
    out
}

#[test]
fn every_permutation_decomposes_within_bound() {
    for m in 1..=6 {
        let (spec, chain) = path_chain(m);
        let bound = (1usize << (m - 1)) - 1;
        for sigma in permutations(m) {
            let swaps = decompose_permutation(&chain, &sigma).unwrap();
            assert!(swaps.len() <= bound, "{sigma:?}: {} swaps", swaps.len());
            // Apply the transpositions, first one first, to where each level sits.
            let mut image: Vec<usize> = (1..=m).collect();
            for &(a, b) in &swaps {
                assert!(chain.contains(a, b));
                for x in image.iter_mut() {
                    if *x == a {
                        *x = b;
                    } else if *x == b {
                        *x = a;
                    }
                }
            }
            assert_eq!(image, sigma);
            let u = schedule_unitary(&spec, &permutation_to_schedule(&spec, &chain, &sigma).unwrap(), m);
            for i in 0..m {
                for j in 0..m {
                    let expect = if j + 1 == sigma[i] { 1.0 } else { 0.0 };
                    assert!((u[(j, i)].norm() - expect).abs() < 1e-9, "{sigma:?} ({j},{i})");
                }
            }
        }
    }
}

#[test]
fn non_path_chain_decomposes() {
    let spec = qctrl_core::example_4x4();
    let chain = find_chain(&spec).unwrap();
    let swaps = decompose_permutation(&chain, &[4, 1, 2, 3]).unwrap();
    assert!(swaps.len() <= 7);
}

fn brute_period(lams: &[(u64, u64)]) -> (u64, u64) {
    // Smallest x/y with x·a/(y·b) integral for every (a, b).
    let mut best: Option<(u64, u64)> = None;
    let x_max: u64 = lams.iter().map(|&(_, b)| b).product::<u64>() * 20;
    for y in 1..=20u64 {
        let hit = (1..=x_max).find(|&x| lams.iter().all(|&(a, b)| (x * a) % (y * b) == 0));
        if let Some(x) = hit {
            best = match best {
                Some((bx, by)) if bx * y <= x * by => Some((bx, by)),
                _ => Some((x, y)),
            };
        }
    }
    let (x, y) = best.unwrap();
    let g = num_integer::Integer::gcd(&x, &y);
    (x / g, y / g)
}

#[test]
fn period_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let len = rng.gen_range(1..=3);
        let lams: Vec<(u64, u64)> = (0..len)
            .map(|_| {
                let r = Ratio::reduced(rng.gen_range(1..=20), rng.gen_range(1..=20));
                (r.num, r.den)
            })
            .collect();
        let ratios: Vec<Ratio> = lams.iter().map(|&(a, b)| Ratio::new(a, b)).collect();
        let tau = period_tau(&ratios).unwrap();
        assert_eq!((tau.num, tau.den), brute_period(&lams), "{lams:?}");
    }
}
