use std::fmt;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{conditional_expectation, GeneratorMatrix, StatePartition};
use crate::error::{Error, Result};

pub const COUPLING_TOL: f64 = 1e-9;
pub const DEGENERACY_RTOL: f64 = 1e-9;
/// Squared relative size of rounding residue in spectral coefficients.
const ROUNDOFF_FLOOR: f64 = 1e-26;

/// Spectral gap value; the infimum over an empty set is `Infinite`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapValue {
    Finite(f64),
    Infinite,
}

impl GapValue {
    pub fn value(self) -> f64 {
        match self {
            GapValue::Finite(v) => v,
            GapValue::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, GapValue::Finite(_))
    }
}

impl fmt::Display for GapValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GapValue::Finite(v) => write!(f, "{v}"),
            GapValue::Infinite => f.write_str("inf"),
        }
    }
}

/// One cluster of (numerically) equal eigenvalues.
#[derive(Clone, Debug)]
pub struct EigenGroup {
    pub lambda: f64,
    /// Indices into the eigenvalue list.
    pub members: Vec<usize>,
    /// Largest mu-norm of `E[g | partition]` over unit `g` in the eigenspace.
    pub coupling: f64,
    pub coupled: bool,
    pub is_zero: bool,
}

#[derive(Clone, Debug)]
pub struct SubsystemGap {
    pub lambda_pi: GapValue,
    pub groups: Vec<EigenGroup>,
    pub tol: f64,
}

impl SubsystemGap {
    /// One row per eigenvalue: `lambda,coupling_norm,in_subsystem`.
    pub fn write_csv<W: Write>(&self, values: &[f64], mut w: W) -> std::io::Result<()> {
        writeln!(w, "lambda,coupling_norm,in_subsystem")?;
        for g in &self.groups {
            for &k in &g.members {
                writeln!(w, "{:.16e},{:.6e},{}", values[k], g.coupling, g.coupled)?;
            }
        }
        Ok(())
    }

    pub fn coupling_of(&self, index: usize) -> Option<&EigenGroup> {
        self.groups.iter().find(|g| g.members.contains(&index))
    }
}

/// Eigen-decomposition of `-Q` in `L^2(mu)`.
#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    /// mu-orthonormal eigenvectors, one per eigenvalue.
    pub eigenvectors: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub gap: GapValue,
    pub subsystem: Option<SubsystemGap>,
}

pub fn spectrum(gen: &GeneratorMatrix) -> Result<SpectralReport> {
    gen.check_reversible()?;
    let n = gen.n();
    let mu = gen.mu();
    let sq: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();
    let q = gen.q();
    // -D^{1/2} Q D^{-1/2}, symmetrized to kill rounding asymmetry
    let mut s = DMatrix::from_fn(n, n, |i, j| -q[(i, j)] * sq[i] / sq[j]);
    let st = s.transpose();
    s = (s + st) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &k in &order {
        values.push(eig.eigenvalues[k]);
        let mut phi: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, k)] / sq[i]).collect();
        fix_sign(&mut phi);
        vectors.push(phi);
    }
    let zero = zero_threshold(&values);
    // the constant function is exact; the solver only finds it to rounding
    if values[0].abs() <= zero {
        values[0] = 0.0;
        if vectors[0][0] < 0.0 {
            vectors[0].iter_mut().for_each(|v| *v = -*v);
        }
    }
    let gap = values.iter().copied().find(|&l| l > zero).map_or(GapValue::Infinite, GapValue::Finite);
    Ok(SpectralReport { eigenvalues: values, eigenvectors: vectors, mu: mu.to_vec(), gap, subsystem: None })
}

fn fix_sign(phi: &mut [f64]) {
    let mut best = 0;
    for (i, v) in phi.iter().enumerate() {
        if v.abs() > phi[best].abs() * (1.0 + 1e-9) {
            best = i;
        }
    }
    if phi[best] < 0.0 {
        phi.iter_mut().for_each(|v| *v = -*v);
    }
}

fn zero_threshold(values: &[f64]) -> f64 {
    1e-10 * values.iter().fold(1.0f64, |a, v| a.max(v.abs()))
}

/// Subsystem spectral gap from (possibly partial) ascending eigenpairs.
///
/// Eigenvalues within `DEGENERACY_RTOL` are grouped and each eigenspace is
/// tested as a whole: its coupling is the operator norm of the conditional
/// expectation restricted to it.
pub fn subsystem_gap_from_pairs(
    values: &[f64],
    vectors: &[Vec<f64>],
    mu: &[f64],
    part: &StatePartition,
    tol: f64,
) -> SubsystemGap {
    let zero = zero_threshold(values);
    let mut groups: Vec<EigenGroup> = Vec::new();
    let mut start = 0;
    while start < values.len() {
        let l0 = values[start];
        let mut end = start + 1;
        while end < values.len() && (values[end] - l0).abs() <= DEGENERACY_RTOL * l0.abs().max(1.0) {
            end += 1;
        }
        let members: Vec<usize> = (start..end).collect();
        let projected: Vec<Vec<f64>> =
            members.iter().map(|&k| conditional_expectation(&vectors[k], part, mu)).collect();
        let coupling = max_gram_norm(&projected, mu);
        let lambda = members.iter().map(|&k| values[k]).sum::<f64>() / members.len() as f64;
        groups.push(EigenGroup { lambda, members, coupling, coupled: coupling > tol, is_zero: l0.abs() <= zero });
        start = end;
    }
    let lambda_pi = groups
        .iter()
        .find(|g| !g.is_zero && g.lambda > 0.0 && g.coupled)
        .map_or(GapValue::Infinite, |g| GapValue::Finite(g.lambda));
    SubsystemGap { lambda_pi, groups, tol }
}

fn max_gram_norm(c: &[Vec<f64>], mu: &[f64]) -> f64 {
    let k = c.len();
    let g = DMatrix::from_fn(k, k, |a, b| c[a].iter().zip(&c[b]).zip(mu).map(|((x, y), m)| m * x * y).sum::<f64>());
    if k == 1 {
        return g[(0, 0)].max(0.0).sqrt();
    }
    SymmetricEigen::new(g).eigenvalues.iter().fold(0.0f64, |a, &v| a.max(v)).sqrt()
}

impl SpectralReport {
    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn with_subsystem(mut self, part: &StatePartition, tol: f64) -> Result<Self> {
        if part.n() != self.n() {
            return Err(Error::Config(format!("partition has {} states, chain has {}", part.n(), self.n())));
        }
        if !(tol > 0.0) {
            return Err(Error::Config("coupling tolerance must be positive".into()));
        }
        self.subsystem = Some(subsystem_gap_from_pairs(&self.eigenvalues, &self.eigenvectors, &self.mu, part, tol));
        Ok(self)
    }

    pub fn lambda_pi(&self) -> Option<GapValue> {
        self.subsystem.as_ref().map(|s| s.lambda_pi)
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.mu).map(|((a, b), m)| m * a * b).sum()
    }

    /// `P_t f = e^{tQ} f` by spectral decomposition.
    pub fn semigroup_apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("semigroup time must be nonnegative, got {t}")));
        }
        if f.len() != self.n() {
            return Err(Error::Config("vector length does not match the chain".into()));
        }
        if t == 0.0 {
            return Ok(f.to_vec());
        }
        let mut out = vec![0.0; self.n()];
        for (l, phi) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let c = self.inner(phi, f) * (-l * t).exp();
            out.iter_mut().zip(phi).for_each(|(o, p)| *o += c * p);
        }
        Ok(out)
    }

    /// `sum_k lambda_k phi_k phi_k^T D`, which should equal `-Q`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for (l, phi) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] += l * phi[i] * phi[j] * self.mu[j];
                }
            }
        }
        m
    }
}

pub fn subsystem_spectral_gap(gen: &GeneratorMatrix, part: &StatePartition, tol: f64) -> Result<SpectralReport> {
    spectrum(gen)?.with_subsystem(part, tol)
}

pub fn semigroup_apply(gen: &GeneratorMatrix, t: f64, f: &[f64]) -> Result<Vec<f64>> {
    spectrum(gen)?.semigroup_apply(t, f)
}

#[derive(Clone, Debug)]
pub struct DecayRow {
    pub t: f64,
    /// `<(P_t f)^2>`
    pub lhs: f64,
    /// `exp(-2 lambda_pi t) <f^2>`
    pub rhs: f64,
    /// Measured rate `-ln(lhs / <f^2>) / 2t`; NaN at `t = 0`.
    pub exponent: f64,
    pub holds: bool,
}

#[derive(Clone, Debug)]
pub struct DecayReport {
    pub lambda_pi: GapValue,
    pub rows: Vec<DecayRow>,
}

impl DecayReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Checks `<(P_t f)^2> <= exp(-2 lambda_pi t) <f^2>` for a partition-measurable,
/// mean-zero `f`.
pub fn verify_decay(gen: &GeneratorMatrix, part: &StatePartition, f: &[f64], times: &[f64]) -> Result<DecayReport> {
    let report = subsystem_spectral_gap(gen, part, COUPLING_TOL)?;
    verify_decay_with(&report, part, f, times)
}

pub fn verify_decay_with(
    report: &SpectralReport,
    part: &StatePartition,
    f: &[f64],
    times: &[f64],
) -> Result<DecayReport> {
    let lambda_pi = report
        .lambda_pi()
        .ok_or_else(|| Error::Precondition("subsystem gap not computed".into()))?;
    if f.len() != report.n() {
        return Err(Error::Precondition("vector length does not match the chain".into()));
    }
    let scale = f.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let ce = conditional_expectation(f, part, &report.mu);
    if ce.iter().zip(f).any(|(a, b)| (a - b).abs() > 1e-12 * scale) {
        return Err(Error::Precondition("f is not measurable with respect to the partition".into()));
    }
    let mean: f64 = f.iter().zip(&report.mu).map(|(a, m)| a * m).sum();
    if mean.abs() > 1e-12 * scale {
        return Err(Error::Precondition(format!("f has nonzero mean {mean:e}")));
    }
    let f2 = report.inner(f, f);
    // The mean and the components along decoupled modes vanish only to
    // rounding; they decay slowly or not at all and would eventually
    // dominate the bound.
    let noise = ROUNDOFF_FLOOR * f2;
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let p = report.semigroup_apply(t, f)?;
        let lhs = report.inner(&p, &p);
        let rhs = if t == 0.0 { f2 } else { (-2.0 * lambda_pi.value() * t).exp() * f2 };
        let exponent = if t > 0.0 && f2 > 0.0 { -(lhs / f2).ln() / (2.0 * t) } else { f64::NAN };
        rows.push(DecayRow { t, lhs, rhs, exponent, holds: lhs <= rhs * (1.0 + 1e-10) + noise });
    }
    Ok(DecayReport { lambda_pi, rows })
}
