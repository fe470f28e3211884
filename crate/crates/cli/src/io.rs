use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qctrl_core::error::Pair;
use qctrl_core::linalg::{basis_vector, CMat, CVec};
use qctrl_core::spectra::DEFAULT_GAP_TOL;
use qctrl_core::synthesis::Step;
use qctrl_core::{DensityMatrix, PiecewiseConstantControl, SystemSpec, Trajectory};

use crate::{CliError, CliResult, GAP_TOL_ENV};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(CliError::io)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display())).map_err(CliError::io)
}

pub fn read_spec(path: &Path) -> CliResult<SystemSpec> {
    SystemSpec::from_json(&read_text(path)?).map_err(|e| CliError::io(anyhow!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes")
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[derive(Debug, Serialize, Deserialize)]
struct ControlRow {
    value: f64,
    duration: f64,
}

pub fn control_csv(control: &PiecewiseConstantControl) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in &control.steps {
        w.serialize(ControlRow { value: s.value, duration: s.duration }).expect("in-memory write");
    }
    // An empty control still gets its header row.
    if control.is_empty() {
        w.write_record(["value", "duration"]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn write_control(path: &Path, control: &PiecewiseConstantControl) -> CliResult<()> {
    let text = if is_json(path) { to_json(control) } else { control_csv(control) };
    write_text(path, &text)
}

pub fn read_control(path: &Path) -> CliResult<PiecewiseConstantControl> {
    let text = read_text(path)?;
    let bad = |e: anyhow::Error| CliError::io(e.context(format!("parsing control {}", path.display())));
    let control = if is_json(path) {
        serde_json::from_str(&text).map_err(|e| bad(e.into()))?
    } else {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let steps = r
            .deserialize::<ControlRow>()
            .map(|row| row.map(|c| Step { value: c.value, duration: c.duration }))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| bad(e.into()))?;
        PiecewiseConstantControl { steps }
    };
    control.validate()?;
    Ok(control)
}

/// `1-2,2-3` into pairs.
pub fn parse_edges(text: &str) -> CliResult<Vec<Pair>> {
    text.split(',')
        .map(|tok| {
            let (a, b) = tok.trim().split_once('-').ok_or_else(|| anyhow!("edge {tok:?} is not of the form j-k"))?;
            Ok((a.trim().parse()?, b.trim().parse()?))
        })
        .collect::<anyhow::Result<Vec<Pair>>>()
        .map_err(CliError::io)
}

pub fn parse_list<T>(text: &str) -> CliResult<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    text.split(',')
        .map(|tok| tok.trim().parse::<T>().with_context(|| format!("bad list entry {tok:?}")))
        .collect::<anyhow::Result<Vec<T>>>()
        .map_err(CliError::io)
}

/// A level index `k` (giving `φ_k`) or a list of amplitudes `re` / `re:im`.
pub fn parse_state(text: &str, n: usize) -> CliResult<CVec> {
    let text = text.trim();
    if !text.contains(',') && !text.contains(':') && !text.contains('.') {
        let k: usize = text.parse().map_err(|e| CliError::io(anyhow!("bad level {text:?}: {e}")))?;
        if k == 0 || k > n {
            return Err(CliError::io(anyhow!("level {k} outside 1..={n}")));
        }
        return Ok(basis_vector(n, k - 1));
    }
    let entries = text
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            let (re, im) = tok.split_once(':').unwrap_or((tok, "0"));
            Ok(Complex64::new(re.trim().parse()?, im.trim().parse()?))
        })
        .collect::<anyhow::Result<Vec<_>>>()
        .map_err(CliError::io)?;
    if entries.len() != n {
        return Err(CliError::io(anyhow!("state has {} amplitudes, expected {n}", entries.len())));
    }
    let psi = CVec::from_vec(entries);
    if (psi.norm() - 1.0).abs() > 1e-9 {
        return Err(CliError::io(anyhow!("state norm {} is not 1", psi.norm())));
    }
    Ok(psi)
}

/// Density matrix file: `{"diagonal": [...]}` or `{"re": [[...]], "im": [[...]]}`.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensityFile {
    Diagonal { diagonal: Vec<f64> },
    Full { re: Vec<Vec<f64>>, im: Option<Vec<Vec<f64>>> },
}

impl DensityFile {
    pub fn from_matrix(rho: &CMat) -> Self {
        let n = rho.nrows();
        DensityFile::Full {
            re: (0..n).map(|r| (0..n).map(|k| rho[(r, k)].re).collect()).collect(),
            im: Some((0..n).map(|r| (0..n).map(|k| rho[(r, k)].im).collect()).collect()),
        }
    }
}

pub fn read_density(path: &Path) -> CliResult<DensityMatrix> {
    let file: DensityFile = serde_json::from_str(&read_text(path)?)
        .with_context(|| format!("parsing density {}", path.display()))
        .map_err(CliError::io)?;
    let rho = match file {
        DensityFile::Diagonal { diagonal } => return Ok(DensityMatrix::diagonal(&diagonal)?),
        DensityFile::Full { re, im } => {
            let n = re.len();
            let shape_ok = |m: &Vec<Vec<f64>>| m.len() == n && m.iter().all(|r| r.len() == n);
            if !shape_ok(&re) || im.as_ref().is_some_and(|m| !shape_ok(m)) {
                return Err(CliError::io(anyhow!("density in {} is not square", path.display())));
            }
            CMat::from_fn(n, n, |r, k| Complex64::new(re[r][k], im.as_ref().map_or(0.0, |m| m[r][k])))
        }
    };
    Ok(DensityMatrix::new(rho)?)
}

/// Columns `t, re_j, im_j` for every level, then `abs_j = |⟨φ_j, ψ(t)⟩|`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let n = traj.states.first().map_or(0, |s| s.len());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string()];
    for j in 1..=n {
        header.push(format!("re_{j}"));
        header.push(format!("im_{j}"));
    }
    header.extend((1..=n).map(|j| format!("abs_{j}")));
    w.write_record(&header).expect("in-memory write");
    for (t, psi) in traj.times.iter().zip(&traj.states) {
        let mut row = vec![t.to_string()];
        for z in psi.iter() {
            row.push(z.re.to_string());
            row.push(z.im.to_string());
        }
        row.extend(psi.iter().map(|z| z.norm().to_string()));
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// `QCTRL_GAP_TOL` if set, else the library default.
pub fn gap_tol() -> CliResult<f64> {
    match std::env::var(GAP_TOL_ENV) {
        Ok(v) => {
            let tol: f64 = v.trim().parse().map_err(|e| CliError::io(anyhow!("{GAP_TOL_ENV}={v:?}: {e}")))?;
            if tol.is_nan() || tol < 0.0 || tol.is_infinite() {
                return Err(CliError::io(anyhow!("{GAP_TOL_ENV} must be a nonnegative number")));
            }
            Ok(tol)
        }
        Err(_) => Ok(DEFAULT_GAP_TOL),
    }
}
