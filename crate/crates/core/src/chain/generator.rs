use nalgebra::DMatrix;
use rand::Rng;

use super::StatePartition;
use crate::error::{Error, Result};

/// Finite-state rate matrix `Q` together with its invariant law `mu`.
///
/// Construction checks the generator structure and `mu`; detailed balance
/// is checked by [`GeneratorMatrix::check_reversible`], which every spectral
/// routine calls first.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix {
    q: DMatrix<f64>,
    mu: Vec<f64>,
}

pub const BALANCE_TOL: f64 = 1e-12;

impl GeneratorMatrix {
    pub fn new(q: DMatrix<f64>, mu: Vec<f64>) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || q.ncols() != n || mu.len() != n {
            return Err(Error::Generator(format!(
                "need a square Q and matching mu, got {}x{} and {}",
                q.nrows(),
                q.ncols(),
                mu.len()
            )));
        }
        let scale = q.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        for i in 0..n {
            for j in 0..n {
                if i != j && q[(i, j)] < 0.0 {
                    return Err(Error::Generator(format!("negative rate Q[{i}][{j}] = {}", q[(i, j)])));
                }
            }
            let s: f64 = q.row(i).sum();
            if s.abs() > BALANCE_TOL * scale {
                return Err(Error::Generator(format!("row {i} sums to {s:e}")));
            }
        }
        if mu.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Generator("mu must be strictly positive".into()));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > BALANCE_TOL {
            return Err(Error::Generator(format!("mu sums to {total}")));
        }
        Ok(Self { q, mu })
    }

    /// Generator with `mu_i Q_ij = c_ij` for symmetric nonnegative conductances `c`.
    pub fn from_conductances(c: &DMatrix<f64>, mu: Vec<f64>) -> Result<Self> {
        let n = c.nrows();
        let mut q = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    q[(i, j)] = c[(i, j)] / mu[i];
                }
            }
            let s: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -s;
        }
        Self::new(q, mu)
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn check_reversible(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            for j in i + 1..n {
                let v = (self.mu[i] * self.q[(i, j)] - self.mu[j] * self.q[(j, i)]).abs();
                if v > BALANCE_TOL {
                    return Err(Error::Reversibility { i, j, violation: v });
                }
            }
        }
        Ok(())
    }

    /// Relabels states: new state `k` is old state `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let q = DMatrix::from_fn(n, n, |a, b| self.q[(perm[a], perm[b])]);
        let mu = perm.iter().map(|&p| self.mu[p]).collect();
        Self::new(q, mu)
    }

    /// The four-state chain with two fast pairs `{1,2}`, `{3,4}` coupled by
    /// slow rates, observed through the labelling `{1,4} | {2,3}`.
    pub fn example_one() -> (Self, StatePartition) {
        let q = DMatrix::from_row_slice(
            4,
            4,
            &[
                -0.9, 0.8, 0.0, 0.1, //
                0.8, -0.9, 0.1, 0.0, //
                0.0, 0.1, -1.0, 0.9, //
                0.1, 0.0, 0.9, -1.0,
            ],
        );
        let gen = Self::new(q, vec![0.25; 4]).expect("valid example");
        let part = StatePartition::new(vec![0, 1, 1, 0]).expect("valid labels");
        (gen, part)
    }

    /// Random reversible generator: positive random `mu`, symmetric
    /// conductances present with probability `density`, plus a ring so the
    /// chain is irreducible.
    pub fn random_reversible<R: Rng>(n: usize, density: f64, rng: &mut R) -> Self {
        let mut mu: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= total);
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let ring = j == i + 1 || (i == 0 && j == n - 1);
                if ring || rng.random::<f64>() < density {
                    let v = 0.05 + rng.random::<f64>();
                    c[(i, j)] = v;
                    c[(j, i)] = v;
                }
            }
        }
        // renormalize mu so it sums to one to the last bit
        let s: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= s);
        Self::from_conductances(&c, mu).expect("valid random chain")
    }

    /// Parses the plain-text chain format: `n`, then `n` rows of `Q`, the
    /// `mu` row and the label row. Entries are separated by whitespace or
    /// commas, may be written as fractions `p/q`, and `#` starts a comment.
    pub fn parse(text: &str) -> Result<(Self, StatePartition)> {
        let mut rows: Vec<(usize, Vec<&str>)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("");
            let toks: Vec<&str> = body.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
            if !toks.is_empty() {
                rows.push((i + 1, toks));
            }
        }
        let mut it = rows.into_iter();
        let (l0, first) = it.next().ok_or(Error::Parse { line: 1, msg: "empty chain file".into() })?;
        if first.len() != 1 {
            return Err(Error::Parse { line: l0, msg: "first line must hold the state count".into() });
        }
        let n: usize = first[0].parse().map_err(|_| Error::Parse { line: l0, msg: "bad state count".into() })?;
        let mut q = DMatrix::zeros(n, n);
        for r in 0..n {
            let (ln, toks) = it.next().ok_or(Error::Parse { line: l0, msg: format!("missing row {} of Q", r + 1) })?;
            if toks.len() != n {
                return Err(Error::Parse { line: ln, msg: format!("expected {n} entries") });
            }
            for (c, t) in toks.iter().enumerate() {
                q[(r, c)] = parse_number(t).ok_or(Error::Parse { line: ln, msg: format!("bad number {t:?}") })?;
            }
        }
        let (ln, toks) = it.next().ok_or(Error::Parse { line: l0, msg: "missing mu row".into() })?;
        if toks.len() != n {
            return Err(Error::Parse { line: ln, msg: format!("expected {n} entries in mu") });
        }
        let mu = toks
            .iter()
            .map(|t| parse_number(t).ok_or(Error::Parse { line: ln, msg: format!("bad number {t:?}") }))
            .collect::<Result<Vec<f64>>>()?;
        let (ln, toks) = it.next().ok_or(Error::Parse { line: l0, msg: "missing label row".into() })?;
        if toks.len() != n {
            return Err(Error::Parse { line: ln, msg: format!("expected {n} labels") });
        }
        let labels = toks
            .iter()
            .map(|t| t.parse::<i64>().map_err(|_| Error::Parse { line: ln, msg: format!("bad label {t:?}") }))
            .collect::<Result<Vec<i64>>>()?;
        if let Some((ln, _)) = it.next() {
            return Err(Error::Parse { line: ln, msg: "trailing content".into() });
        }
        Ok((Self::new(q, mu)?, StatePartition::from_labels(&labels)?))
    }
}

fn parse_number(t: &str) -> Option<f64> {
    match t.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => t.parse().ok(),
    }
}
