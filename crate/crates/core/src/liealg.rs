//! Lie-rank certification for finite-dimensional pairs `(A, B)` of
//! skew-Hermitian matrices, built on iterated commutators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Pair, Result};
use crate::linalg::{c, commutator, drift_matrix, frobenius, real_inner, skew_defect, CMat};
use crate::spectra::{SystemSpec, DEFAULT_GAP_TOL, DEFAULT_ZERO_TOL};

pub const DEFAULT_MAX_ORDER: usize = 64;
pub const DEFAULT_MAX_DIM: usize = 12;
pub const RANK_TOL: f64 = 1e-10;
const ENTRY_LIMIT: f64 = 1e300;
const SKEW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SkewPair {
    pub a: CMat,
    pub bmat: CMat,
}

impl SkewPair {
    pub fn new(a: CMat, bmat: CMat) -> Result<Self> {
        if a.nrows() != a.ncols() || bmat.nrows() != bmat.ncols() || a.nrows() != bmat.nrows() {
            return Err(Error::DimensionMismatch { expected: a.nrows(), found: bmat.nrows() });
        }
        let scale = 1.0 + frobenius(&a).max(frobenius(&bmat));
        if skew_defect(&a) > SKEW_TOL * scale || skew_defect(&bmat) > SKEW_TOL * scale {
            return Err(Error::InvalidInput("matrices must be skew-Hermitian".into()));
        }
        Ok(SkewPair { a, bmat })
    }

    pub fn from_spec(spec: &SystemSpec) -> Self {
        SkewPair { a: drift_matrix(&spec.lambda), bmat: spec.b.clone() }
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn diagonal_drift(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        for r in 0..n {
            for k in 0..n {
                if r != k && self.a[(r, k)].norm() > SKEW_TOL {
                    return None;
                }
            }
        }
        Some((0..n).map(|k| self.a[(k, k)].im).collect())
    }
}

/// `ad_A^order(B)` with the default order cap.
pub fn ad_power(p: &SkewPair, order: usize) -> Result<CMat> {
    ad_power_capped(p, order, DEFAULT_MAX_ORDER)
}

pub fn ad_power_capped(p: &SkewPair, order: usize, max_order: usize) -> Result<CMat> {
    if order > max_order {
        return Err(Error::SizeGuard { size: order, max: max_order });
    }
    let mut x = p.bmat.clone();
    for step in 1..=order {
        x = commutator(&p.a, &x);
        if x.iter().any(|z| !(z.norm() <= ENTRY_LIMIT)) {
            return Err(Error::Overflow { order: step });
        }
    }
    Ok(x)
}

/// Recovers `e_jk - e_kj` and `i(e_jk + e_kj)` from `A` and `B` by applying a
/// Lagrange polynomial in `ad_A²` that keeps only the `(j, k)` gap.
pub fn extract_elementary(p: &SkewPair, edge: Pair) -> Result<(CMat, CMat)> {
    extract_elementary_with(p, edge, DEFAULT_ZERO_TOL, DEFAULT_GAP_TOL)
}

pub fn extract_elementary_with(p: &SkewPair, edge: Pair, zero_tol: f64, gap_tol: f64) -> Result<(CMat, CMat)> {
    let n = p.dim();
    let (j, k) = edge;
    if j == 0 || k == 0 || j > n || k > n || j == k {
        return Err(Error::InvalidInput(format!("edge ({j}, {k}) is out of range")));
    }
    let lambda =
        p.diagonal_drift().ok_or_else(|| Error::InvalidInput("elementary extraction needs a diagonal drift".into()))?;
    let (j0, k0) = (j - 1, k - 1);
    let b = p.bmat[(j0, k0)];
    if b.norm() <= zero_tol {
        return Err(Error::DecoupledEdge { edge });
    }
    let gap = lambda[j0] - lambda[k0];
    if gap.abs() <= gap_tol {
        return Err(Error::PhaseCorrectionUndefined { edge });
    }
    let target = gap * gap;
    let mut nodes: Vec<f64> = Vec::new();
    for l in 0..n {
        for m in 0..n {
            if p.bmat[(l, m)].norm() <= zero_tol || (l, m) == (j0, k0) || (l, m) == (k0, j0) {
                continue;
            }
            let s = (lambda[l] - lambda[m]).powi(2);
            if (s - target).abs() <= gap_tol * (1.0 + target) {
                return Err(Error::ResonantGap { edge, partner: (l.min(m) + 1, l.max(m) + 1) });
            }
            if !nodes.iter().any(|&x| (x - s).abs() <= gap_tol * (1.0 + s)) {
                nodes.push(s);
            }
        }
    }
    // ad_A² acts on e_lm by -(λ_l - λ_m)².
    let mut x = p.bmat.clone();
    for &s in &nodes {
        let ad2 = commutator(&p.a, &commutator(&p.a, &x));
        x = (ad2 + &x * c(s, 0.0)) * c(1.0 / (s - target), 0.0);
    }
    let x1 = x;
    let x2 = commutator(&p.a, &x1) * c(1.0 / gap, 0.0);
    let (re, im, nb) = (b.re, b.im, b.norm_sqr());
    let e1 = (&x1 * c(re, 0.0) - &x2 * c(im, 0.0)) * c(1.0 / nb, 0.0);
    let e2 = (&x1 * c(im, 0.0) + &x2 * c(re, 0.0)) * c(1.0 / nb, 0.0);
    for m in [&e1, &e2] {
        if skew_defect(m) > 1e-8 {
            return Err(Error::InvariantViolation("extracted generator is not skew-Hermitian".into()));
        }
    }
    Ok((e1, e2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Su,
    U,
    Insufficient,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Su => "SU",
            Verdict::U => "U",
            Verdict::Insufficient => "INSUFFICIENT",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LieRank {
    pub dimension: usize,
    pub verdict: Verdict,
    /// Orthonormal real basis of the generated algebra.
    pub basis: Vec<CMat>,
}

pub fn lie_rank(p: &SkewPair) -> Result<LieRank> {
    lie_rank_capped(p, DEFAULT_MAX_DIM)
}

/// Real dimension of `Lie(A, B)` by closure under `ad_A` and `ad_B`.
pub fn lie_rank_capped(p: &SkewPair, max_dim: usize) -> Result<LieRank> {
    let n = p.dim();
    if n > max_dim {
        return Err(Error::SizeGuard { size: n, max: max_dim });
    }
    let full = n * n;
    let mut basis: Vec<CMat> = Vec::new();
    let mut queue: Vec<usize> = Vec::new();
    for g in [&p.a, &p.bmat] {
        if let Some(x) = orthogonalize(&basis, g) {
            basis.push(x);
            queue.push(basis.len() - 1);
        }
    }
    let mut head = 0;
    while head < queue.len() && basis.len() < full {
        let x = basis[queue[head]].clone();
        head += 1;
        for g in [&p.a, &p.bmat] {
            if basis.len() >= full {
                break;
            }
            if let Some(y) = orthogonalize(&basis, &commutator(g, &x)) {
                basis.push(y);
                queue.push(basis.len() - 1);
            }
        }
    }
    let dimension = basis.len();
    let traceless = |m: &CMat| m.trace().norm() <= RANK_TOL * (1.0 + frobenius(m));
    let verdict = if dimension >= full.saturating_sub(1) && traceless(&p.a) && traceless(&p.bmat) {
        Verdict::Su
    } else if dimension == full {
        Verdict::U
    } else {
        Verdict::Insufficient
    };
    Ok(LieRank { dimension, verdict, basis })
}

fn orthogonalize(basis: &[CMat], x: &CMat) -> Option<CMat> {
    let norm = frobenius(x);
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    let mut y = x * c(1.0 / norm, 0.0);
    for _ in 0..2 {
        for e in basis {
            let proj = real_inner(e, &y);
            y -= e * c(proj, 0.0);
        }
    }
    let rest = frobenius(&y);
    if rest <= RANK_TOL {
        return None;
    }
    let y = y * c(1.0 / rest, 0.0);
    let y = (&y - y.adjoint()) * c(0.5, 0.0);
    Some(y)
}
