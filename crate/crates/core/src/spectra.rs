//! Truncated system descriptions and the hypothesis checks the synthesis
//! pipeline relies on: degenerate-level decoupling, connectedness chains,
//! non-resonance of chain gaps and the basis reordering that makes a chain
//! `m`-connected for every `m`.
//!
//! Level indices are 1-based everywhere in the public surface.

use std::collections::{BTreeSet, VecDeque};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Pair, Result};
use crate::linalg::CMat;

pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
pub const DEFAULT_GAP_TOL: f64 = 1e-9;
/// Two eigenvalues closer than this are treated as one level.
pub const DEGENERACY_TOL: f64 = 1e-12;
const SKEW_TOL: f64 = 1e-12;

/// Truncated bilinear system: drift `diag(iλ)`, coupling `b`, control set `[0, δ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub lambda: Vec<f64>,
    pub b: CMat,
    pub delta: f64,
    pub zero_tol: f64,
    /// Full-space norms `‖Bφ_j‖` when known in closed form. Falls back to the
    /// truncated column norms of `b`.
    pub b_norms: Option<Vec<f64>>,
}

/// On-disk JSON layout of a [`SystemSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecFile {
    pub lambda: Vec<f64>,
    pub b_re: Vec<Vec<f64>>,
    pub b_im: Vec<Vec<f64>>,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_norms: Option<Vec<f64>>,
}

impl SystemSpec {
    pub fn new(lambda: Vec<f64>, b: CMat, delta: f64) -> Result<Self> {
        let spec = SystemSpec { lambda, b, delta, zero_tol: DEFAULT_ZERO_TOL, b_norms: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_zero_tol(mut self, zero_tol: f64) -> Result<Self> {
        self.zero_tol = zero_tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_b_norms(mut self, norms: Vec<f64>) -> Result<Self> {
        self.b_norms = Some(norms);
        self.validate()?;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lambda.len();
        if n == 0 {
            return Err(Error::InvalidSpec("empty spectrum".into()));
        }
        if self.b.nrows() != n || self.b.ncols() != n {
            return Err(Error::InvalidSpec(format!(
                "coupling matrix is {}x{}, spectrum has {} levels",
                self.b.nrows(),
                self.b.ncols(),
                n
            )));
        }
        if let Some(k) = self.lambda.iter().position(|l| !l.is_finite()) {
            return Err(Error::InvalidSpec(format!("lambda[{}] is not finite", k + 1)));
        }
        if self.b.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidSpec("coupling matrix has non-finite entries".into()));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidSpec(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.zero_tol >= 0.0) {
            return Err(Error::InvalidSpec("zero_tol must be nonnegative".into()));
        }
        for j in 0..n {
            for k in 0..n {
                let defect = (self.b[(j, k)] + self.b[(k, j)].conj()).norm();
                if defect > SKEW_TOL {
                    return Err(Error::InvalidSpec(format!(
                        "coupling is not skew-adjoint at ({}, {}): defect {defect:e}",
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
        if let Some(norms) = &self.b_norms {
            if norms.len() != n || norms.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidSpec("b_norms must hold one nonnegative value per level".into()));
            }
        }
        Ok(())
    }

    /// Coupling `b_jk` for 1-based levels.
    pub fn coupling(&self, j: usize, k: usize) -> Complex64 {
        self.b[(j - 1, k - 1)]
    }

    pub fn is_coupled(&self, j: usize, k: usize) -> bool {
        j != k && self.coupling(j, k).norm() > self.zero_tol
    }

    /// `|λ_j - λ_k|` for 1-based levels.
    pub fn gap(&self, j: usize, k: usize) -> f64 {
        (self.lambda[j - 1] - self.lambda[k - 1]).abs()
    }

    /// Leading `n`-level truncation.
    pub fn truncate(&self, n: usize) -> Result<SystemSpec> {
        if n == 0 || n > self.dim() {
            return Err(Error::TruncationTooLarge { requested: n, available: self.dim() });
        }
        Ok(SystemSpec {
            lambda: self.lambda[..n].to_vec(),
            b: self.b.view((0, 0), (n, n)).into_owned(),
            delta: self.delta,
            zero_tol: self.zero_tol,
            b_norms: self.b_norms.as_ref().map(|v| v[..n].to_vec()),
        })
    }

    /// Relabels levels: new level `m` is old level `perm[m-1]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<SystemSpec> {
        check_permutation(perm, self.dim())?;
        let n = self.dim();
        let b = CMat::from_fn(n, n, |r, k| self.b[(perm[r] - 1, perm[k] - 1)]);
        Ok(SystemSpec {
            lambda: perm.iter().map(|&p| self.lambda[p - 1]).collect(),
            b,
            delta: self.delta,
            zero_tol: self.zero_tol,
            b_norms: self.b_norms.as_ref().map(|v| perm.iter().map(|&p| v[p - 1]).collect()),
        })
    }

    /// `‖Bφ_j‖`, from `b_norms` when present, else the truncated column norm.
    pub fn coupling_norm(&self, j: usize) -> f64 {
        match &self.b_norms {
            Some(v) => v[j - 1],
            None => self.b.column(j - 1).norm(),
        }
    }

    pub fn to_file(&self) -> SpecFile {
        let n = self.dim();
        SpecFile {
            lambda: self.lambda.clone(),
            b_re: (0..n).map(|r| (0..n).map(|k| self.b[(r, k)].re).collect()).collect(),
            b_im: (0..n).map(|r| (0..n).map(|k| self.b[(r, k)].im).collect()).collect(),
            delta: self.delta,
            zero_tol: Some(self.zero_tol),
            b_norms: self.b_norms.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<SystemSpec> {
        let file: SpecFile = serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        SystemSpec::try_from(file)
    }
}

impl TryFrom<SpecFile> for SystemSpec {
    type Error = Error;

    fn try_from(f: SpecFile) -> Result<Self> {
        let n = f.lambda.len();
        let rows_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
        if !rows_ok(&f.b_re) || !rows_ok(&f.b_im) {
            return Err(Error::InvalidSpec(format!("b_re/b_im must be {n}x{n}")));
        }
        let b = CMat::from_fn(n, n, |r, k| Complex64::new(f.b_re[r][k], f.b_im[r][k]));
        let spec = SystemSpec {
            lambda: f.lambda,
            b,
            delta: f.delta,
            zero_tol: f.zero_tol.unwrap_or(DEFAULT_ZERO_TOL),
            b_norms: f.b_norms,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// A gap collision: chain edge `edge` shares `|λ|`-gap with coupled pair `partner`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub edge: Pair,
    pub partner: Pair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    /// Ordered pairs, both orientations present.
    pub edges: Vec<Pair>,
    pub certified_connected: bool,
    pub certified_nonresonant: bool,
    pub violations: Vec<Violation>,
}

impl Chain {
    /// Builds a chain from user edges, adding reversals and certifying connectivity.
    pub fn from_edges(spec: &SystemSpec, edges: &[Pair]) -> Result<Chain> {
        let n = spec.dim();
        let mut set = BTreeSet::new();
        for &(j, k) in edges {
            if j == 0 || k == 0 || j > n || k > n || j == k {
                return Err(Error::InvalidInput(format!("edge ({j}, {k}) is out of range")));
            }
            if !spec.is_coupled(j, k) {
                return Err(Error::DecoupledEdge { edge: (j, k) });
            }
            if spec.gap(j, k) <= DEGENERACY_TOL {
                return Err(Error::PhaseCorrectionUndefined { edge: (j, k) });
            }
            set.insert((j, k));
            set.insert((k, j));
        }
        let edges: Vec<Pair> = set.into_iter().collect();
        let certified_connected = components(n, &edges).len() == 1;
        Ok(Chain { edges, certified_connected, certified_nonresonant: false, violations: Vec::new() })
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.edges.binary_search(&(j, k)).is_ok()
    }

    /// Unordered edges `(j, k)` with `j < k`.
    pub fn undirected(&self) -> Vec<Pair> {
        self.edges.iter().copied().filter(|(j, k)| j < k).collect()
    }

    /// Edges with both endpoints in `1..=m`.
    pub fn restricted(&self, m: usize) -> Vec<Pair> {
        self.edges.iter().copied().filter(|&(j, k)| j <= m && k <= m).collect()
    }

    /// True when the edges inside `1..=m` connect every level of `1..=m`.
    pub fn is_m_connected(&self, m: usize) -> bool {
        m <= 1 || components(m, &self.restricted(m)).len() == 1
    }

    /// Relabels the chain after [`reorder_basis`]: old level `perm[m-1]` becomes `m`.
    pub fn relabeled(&self, perm: &[usize]) -> Chain {
        let inv = inverse_permutation(perm);
        let mut edges: Vec<Pair> = self.edges.iter().map(|&(j, k)| (inv[j - 1], inv[k - 1])).collect();
        edges.sort_unstable();
        let violations = self
            .violations
            .iter()
            .map(|v| Violation {
                edge: (inv[v.edge.0 - 1], inv[v.edge.1 - 1]),
                partner: (inv[v.partner.0 - 1], inv[v.partner.1 - 1]),
            })
            .collect();
        Chain { edges, violations, ..self.clone() }
    }

    /// Breadth-first path of chain edges from `from` to `to` (1-based levels).
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<usize>> {
        let n = self.edges.iter().map(|&(j, k)| j.max(k)).max().unwrap_or(0).max(from).max(to);
        let adj = adjacency(n, &self.edges);
        let mut prev = vec![usize::MAX; n + 1];
        let mut queue = VecDeque::from([from]);
        prev[from] = from;
        while let Some(x) = queue.pop_front() {
            if x == to {
                let mut path = vec![to];
                let mut cur = to;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &y in &adj[x] {
                if prev[y] == usize::MAX {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        None
    }
}

fn adjacency(n: usize, edges: &[Pair]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n + 1];
    for &(j, k) in edges {
        if j <= n && k <= n {
            adj[j].push(k);
            adj[k].push(j);
        }
    }
    for list in adj.iter_mut() {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// Connected components of the graph on `1..=n`, each sorted, ordered by least vertex.
pub fn components(n: usize, edges: &[Pair]) -> Vec<Vec<usize>> {
    let adj = adjacency(n, edges);
    let mut seen = vec![false; n + 1];
    let mut out = Vec::new();
    for start in 1..=n {
        if seen[start] {
            continue;
        }
        let mut comp = vec![];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(x) = queue.pop_front() {
            comp.push(x);
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// All ordered pairs `(j, k)`, `j ≠ k`, with `|b_jk| > zero_tol`.
pub fn coupled_pairs(spec: &SystemSpec) -> Vec<Pair> {
    let n = spec.dim();
    let mut out = Vec::new();
    for j in 1..=n {
        for k in 1..=n {
            if spec.is_coupled(j, k) {
                out.push((j, k));
            }
        }
    }
    out
}

/// Pairs `(j, k)`, `j < k`, of equal eigenvalues that are nevertheless coupled.
pub fn check_degenerate_decoupling(spec: &SystemSpec) -> Vec<Pair> {
    let n = spec.dim();
    let mut out = Vec::new();
    for j in 1..=n {
        for k in j + 1..=n {
            if spec.gap(j, k) <= DEGENERACY_TOL && spec.is_coupled(j, k) {
                out.push((j, k));
            }
        }
    }
    out
}

/// Spanning tree of the coupling graph by lowest-index-first breadth-first search
/// from level 1, stored with both orientations.
pub fn find_chain(spec: &SystemSpec) -> Result<Chain> {
    let n = spec.dim();
    if n < 2 {
        return Err(Error::InvalidInput("a chain needs at least two levels".into()));
    }
    let pairs: Vec<Pair> = coupled_pairs(spec).into_iter().filter(|&(j, k)| spec.gap(j, k) > DEGENERACY_TOL).collect();
    let comps = components(n, &pairs);
    if comps.len() > 1 {
        return Err(Error::NotConnected { components: comps });
    }
    let adj = adjacency(n, &pairs);
    let mut seen = vec![false; n + 1];
    let mut queue = VecDeque::from([1usize]);
    seen[1] = true;
    let mut tree = Vec::new();
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if !seen[y] {
                seen[y] = true;
                tree.push((x, y));
                queue.push_back(y);
            }
        }
    }
    Chain::from_edges(spec, &tree)
}

/// Certifies that every chain gap differs from the gap of every other coupled pair.
pub fn check_nonresonant(spec: &SystemSpec, chain: &Chain, gap_tol: f64) -> Chain {
    let pairs = coupled_pairs(spec);
    let mut found = BTreeSet::new();
    for &(s1, s2) in &chain.edges {
        let g = spec.gap(s1, s2);
        for &(t1, t2) in &pairs {
            if (t1, t2) == (s1, s2) || (t1, t2) == (s2, s1) {
                continue;
            }
            if (g - spec.gap(t1, t2)).abs() <= gap_tol {
                found.insert(Violation { edge: (s1.min(s2), s1.max(s2)), partner: (t1.min(t2), t1.max(t2)) });
            }
        }
    }
    let violations: Vec<Violation> = found.into_iter().collect();
    Chain { certified_nonresonant: violations.is_empty(), violations, ..chain.clone() }
}

/// `σ(1) = 1`, `σ(n+1) = min α({σ(1..=n)})` where `α(J)` are the levels outside
/// `J` joined to `J` by a chain edge. Returns `σ` as a 1-based list.
pub fn reorder_basis(spec: &SystemSpec, chain: &Chain) -> Result<Vec<usize>> {
    let n = spec.dim();
    if !chain.certified_connected {
        return Err(Error::ChainNotConnected);
    }
    let adj = adjacency(n, &chain.edges);
    let mut placed = vec![false; n + 1];
    let mut sigma = vec![1usize];
    placed[1] = true;
    while sigma.len() < n {
        let next = sigma
            .iter()
            .flat_map(|&j| adj[j].iter().copied())
            .filter(|&k| !placed[k])
            .min()
            .ok_or(Error::ChainNotConnected)?;
        placed[next] = true;
        sigma.push(next);
    }
    Ok(sigma)
}

pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: perm.len() });
    }
    let mut seen = vec![false; n + 1];
    for &p in perm {
        if p == 0 || p > n || seen[p] {
            return Err(Error::InvalidInput(format!("{perm:?} is not a permutation of 1..={n}")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// `inv[p-1] = m` whenever `perm[m-1] = p`.
pub fn inverse_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (m, &p) in perm.iter().enumerate() {
        inv[p - 1] = m + 1;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::models::{example_4x4, infinite_well, planar_molecule, MoleculeParams, Parity, WellParams};

    fn undirected(pairs: &[Pair]) -> BTreeSet<Pair> {
        pairs.iter().filter(|(j, k)| j < k).copied().collect()
    }

    fn real_coupling(n: usize, edges: &[Pair]) -> CMat {
        let mut b = CMat::zeros(n, n);
        for &(j, k) in edges {
            b[(j - 1, k - 1)] = c(1.0, 0.0);
            b[(k - 1, j - 1)] = c(-1.0, 0.0);
        }
        b
    }

    #[test]
    fn ex4_coupled_pairs() {
        let pairs = coupled_pairs(&example_4x4());
        assert_eq!(undirected(&pairs), BTreeSet::from([(1, 2), (1, 3), (2, 4)]));
        assert_eq!(pairs.len(), 6);
    }

    #[test]
    fn zero_coupling_has_no_pairs() {
        let spec = SystemSpec::new(vec![1.0, 2.0, 3.0], CMat::zeros(3, 3), 1.0).unwrap();
        assert!(coupled_pairs(&spec).is_empty());
    }

    #[test]
    fn well_pairs_have_odd_index_sum() {
        let spec = infinite_well(&WellParams::new(6)).unwrap();
        for j in 1..=6 {
            for k in 1..=6 {
                assert_eq!(spec.is_coupled(j, k), (j + k) % 2 == 1, "({j},{k})");
            }
        }
    }

    #[test]
    fn degenerate_decoupling() {
        assert!(check_degenerate_decoupling(&example_4x4()).is_empty());
        let bad = SystemSpec::new(vec![1.0, 1.0], real_coupling(2, &[(1, 2)]), 1.0).unwrap();
        assert_eq!(check_degenerate_decoupling(&bad), vec![(1, 2)]);
        let well = infinite_well(&WellParams::new(6)).unwrap();
        assert!(check_degenerate_decoupling(&well).is_empty());
    }

    #[test]
    fn ex4_chain_matches_remark() {
        let chain = find_chain(&example_4x4()).unwrap();
        assert_eq!(chain.edges, vec![(1, 2), (1, 3), (2, 1), (2, 4), (3, 1), (4, 2)]);
        assert!(chain.certified_connected);
        let chain = check_nonresonant(&example_4x4(), &chain, DEFAULT_GAP_TOL);
        assert!(chain.certified_nonresonant);
        let spec = example_4x4();
        let mut gaps: Vec<f64> = chain.undirected().iter().map(|&(j, k)| spec.gap(j, k)).collect();
        gaps.sort_by(f64::total_cmp);
        assert_eq!(gaps, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn molecule_even_chain_is_nearest_neighbour() {
        let spec = planar_molecule(&MoleculeParams::new(4, 0.3, Parity::Even)).unwrap();
        assert_eq!(spec.dim(), 5);
        let chain = find_chain(&spec).unwrap();
        assert_eq!(chain.undirected(), vec![(1, 2), (2, 3), (3, 4), (4, 5)]);
    }

    #[test]
    fn block_diagonal_is_not_connected() {
        let spec = SystemSpec::new(vec![1.0, 2.0, 4.0, 8.0], real_coupling(4, &[(1, 2), (3, 4)]), 1.0).unwrap();
        match find_chain(&spec) {
            Err(Error::NotConnected { components }) => {
                assert_eq!(components, vec![vec![1, 2], vec![3, 4]]);
            }
            other => panic!("expected NotConnected, got {other:?}"),
        }
    }

    #[test]
    fn well_collision_seven_eight_with_one_four() {
        let spec = infinite_well(&WellParams::new(8)).unwrap();
        let edges: Vec<Pair> = (1..8).map(|k| (k, k + 1)).collect();
        let chain = check_nonresonant(&spec, &Chain::from_edges(&spec, &edges).unwrap(), DEFAULT_GAP_TOL);
        assert!(!chain.certified_nonresonant);
        assert_eq!(chain.violations, vec![Violation { edge: (7, 8), partner: (1, 4) }]);

        let edges: Vec<Pair> = (1..=5).map(|k| (k, k + 1)).collect();
        let chain = check_nonresonant(&spec, &Chain::from_edges(&spec, &edges).unwrap(), DEFAULT_GAP_TOL);
        assert!(chain.certified_nonresonant);
    }

    #[test]
    fn reorder_examples() {
        let spec = example_4x4();
        let chain = find_chain(&spec).unwrap();
        assert_eq!(reorder_basis(&spec, &chain).unwrap(), vec![1, 2, 3, 4]);

        let path = SystemSpec::new(vec![1.0, 3.0, 7.0], real_coupling(3, &[(1, 2), (2, 3)]), 1.0).unwrap();
        let chain = find_chain(&path).unwrap();
        assert_eq!(reorder_basis(&path, &chain).unwrap(), vec![1, 2, 3]);

        let star = SystemSpec::new(vec![1.0, 3.0, 7.0], real_coupling(3, &[(3, 1), (3, 2)]), 1.0).unwrap();
        let chain = find_chain(&star).unwrap();
        let sigma = reorder_basis(&star, &chain).unwrap();
        let relabeled = chain.relabeled(&sigma);
        for m in 1..=3 {
            assert!(relabeled.is_m_connected(m));
        }
        // The original labeling is not 2-connected.
        assert!(!chain.is_m_connected(2));
    }

    #[test]
    fn disconnected_chain_cannot_be_reordered() {
        let spec = SystemSpec::new(vec![1.0, 2.0, 4.0, 8.0], real_coupling(4, &[(1, 2), (3, 4)]), 1.0).unwrap();
        let chain = Chain::from_edges(&spec, &[(1, 2), (3, 4)]).unwrap();
        assert_eq!(reorder_basis(&spec, &chain), Err(Error::ChainNotConnected));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut b = CMat::zeros(2, 2);
        b[(0, 1)] = c(1.0, 0.0);
        b[(1, 0)] = c(1.0, 0.0);
        assert!(SystemSpec::new(vec![1.0, 2.0], b, 1.0).is_err());
        assert!(SystemSpec::new(vec![1.0, f64::NAN], CMat::zeros(2, 2), 1.0).is_err());
        assert!(SystemSpec::new(vec![1.0, 2.0], CMat::zeros(2, 2), 0.0).is_err());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let spec = infinite_well(&WellParams::new(5)).unwrap();
        let text = spec.to_json();
        let back = SystemSpec::from_json(&text).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn path_search() {
        let spec = example_4x4();
        let chain = find_chain(&spec).unwrap();
        assert_eq!(chain.path(1, 4), Some(vec![1, 2, 4]));
        assert_eq!(chain.path(3, 4), Some(vec![3, 1, 2, 4]));
        assert_eq!(chain.path(2, 2), Some(vec![2]));
    }
}
