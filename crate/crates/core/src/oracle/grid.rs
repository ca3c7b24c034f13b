use crate::dynamics::{CoarseMap, Perturbation, Potential, SubsystemFn};
use crate::error::{Error, Result};
use crate::numerics::quadrature::gauss_legendre;
use crate::numerics::CsrMatrix;

pub const MAX_GRID_POINTS: usize = 200_000;
pub const DEFAULT_TAIL_TOL: f64 = 1e-6;
const CELL_QUADRATURE: usize = 4;

/// Tensor grid of cells on a box in one or two dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub n: Vec<usize>,
    /// Largest equilibrium mass allowed outside the box.
    pub tail_tol: f64,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, n: Vec<usize>) -> Result<Self> {
        let s = Self { lo, hi, n, tail_tol: DEFAULT_TAIL_TOL };
        s.validate()?;
        Ok(s)
    }

    pub fn uniform_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(vec![lo], vec![hi], vec![n])
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.lo.len();
        if !(d == 1 || d == 2) || self.hi.len() != d || self.n.len() != d {
            return Err(Error::Config("grid needs 1 or 2 axes with matching lo/hi/n".into()));
        }
        for a in 0..d {
            if !(self.hi[a] > self.lo[a]) {
                return Err(Error::Config(format!("grid axis {a}: hi must exceed lo")));
            }
            if self.n[a] < 16 {
                return Err(Error::Config(format!("grid axis {a}: need at least 16 points")));
            }
        }
        if self.total() > MAX_GRID_POINTS {
            return Err(Error::Config(format!("grid has {} points, limit {MAX_GRID_POINTS}", self.total())));
        }
        if !(self.tail_tol > 0.0) {
            return Err(Error::Config("tail tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.n.len()
    }

    pub fn total(&self) -> usize {
        self.n.iter().product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.n[axis] as f64
    }

    /// Cell centres along `axis`.
    pub fn centres(&self, axis: usize) -> Vec<f64> {
        let h = self.spacing(axis);
        (0..self.n[axis]).map(|i| self.lo[axis] + (i as f64 + 0.5) * h).collect()
    }

    /// Same grid with every axis resolution doubled.
    pub fn refined(&self) -> Self {
        Self { n: self.n.iter().map(|n| 2 * n).collect(), ..self.clone() }
    }
}

/// Reversible finite-volume discretization of the unforced generator and of
/// the perturbation direction `grad V . grad`.
///
/// Nearest-neighbour rates `Q_ij = sqrt(mu_j / mu_i) / h^2` with no flux
/// through the boundary. `B` is the discrete carré du champ
/// `(B g)_i = 1/2 sum_j Q_ij (V_j - V_i)(g_j - g_i)`, which keeps the
/// integration-by-parts identities exact on the grid. Nodes are numbered
/// `i0 + n0 * i1`.
#[derive(Clone, Debug)]
pub struct GridOperator {
    spec: GridSpec,
    centres: Vec<Vec<f64>>,
    coarse: CoarseMap,
    mu: Vec<f64>,
    sqrt_mu: Vec<f64>,
    l0: CsrMatrix,
    b: CsrMatrix,
    s0: CsrMatrix,
    sb: CsrMatrix,
    v: Vec<f64>,
    lv: Vec<f64>,
    tail_mass: f64,
}

/// Equilibrium cell masses `int_cell exp(-U)` by tensor Gauss–Legendre,
/// for cells of width `h` starting at `lo` (unnormalized, shifted by `u0`).
fn cell_masses(pot: &Potential, lo: &[f64], h: &[f64], n: &[usize], u0: f64) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(CELL_QUADRATURE);
    let d = n.len();
    let total: usize = n.iter().product();
    let mut out = vec![0.0; total];
    let mut x = vec![0.0; d];
    for (idx, m) in out.iter_mut().enumerate() {
        let i0 = idx % n[0];
        let i1 = if d == 2 { idx / n[0] } else { 0 };
        let c0 = lo[0] + (i0 as f64 + 0.5) * h[0];
        let mut acc = 0.0;
        if d == 1 {
            for (p, w) in gx.iter().zip(&gw) {
                x[0] = c0 + 0.5 * h[0] * p;
                acc += w * (u0 - pot.energy(&x)).exp();
            }
            *m = acc * 0.5 * h[0];
        } else {
            let c1 = lo[1] + (i1 as f64 + 0.5) * h[1];
            for (p, wp) in gx.iter().zip(&gw) {
                x[0] = c0 + 0.5 * h[0] * p;
                for (q, wq) in gx.iter().zip(&gw) {
                    x[1] = c1 + 0.5 * h[1] * q;
                    acc += wp * wq * (u0 - pot.energy(&x)).exp();
                }
            }
            *m = acc * 0.25 * h[0] * h[1];
        }
    }
    out
}

/// Fraction of the equilibrium mass of the box doubled about its centre
/// that lies outside the box.
fn tail_mass(pot: &Potential, spec: &GridSpec, u0: f64) -> f64 {
    let d = spec.dims();
    let h: Vec<f64> = (0..d).map(|a| spec.spacing(a)).collect();
    let ext: Vec<usize> = spec.n.iter().map(|n| n / 2).collect();
    let n: Vec<usize> = spec.n.iter().zip(&ext).map(|(n, e)| n + 2 * e).collect();
    let lo: Vec<f64> = (0..d).map(|a| spec.lo[a] - ext[a] as f64 * h[a]).collect();
    let m = cell_masses(pot, &lo, &h, &n, u0);
    let mut inside = 0.0;
    let mut total = 0.0;
    for (idx, w) in m.iter().enumerate() {
        total += w;
        let i0 = idx % n[0];
        let in0 = i0 >= ext[0] && i0 < ext[0] + spec.n[0];
        let in1 = d == 1 || {
            let i1 = idx / n[0];
            i1 >= ext[1] && i1 < ext[1] + spec.n[1]
        };
        if in0 && in1 {
            inside += w;
        }
    }
    (1.0 - inside / total).max(0.0)
}

pub fn discretize(
    potential: &Potential,
    perturbation: &Perturbation,
    coarse: &CoarseMap,
    spec: &GridSpec,
) -> Result<GridOperator> {
    spec.validate()?;
    let d = spec.dims();
    if potential.dim() != d || coarse.full_dim() != d {
        return Err(Error::Config(format!(
            "grid has {d} axes, potential {} and projection {}",
            potential.dim(),
            coarse.full_dim()
        )));
    }
    if let Some(c) = perturbation.v.max_coord() {
        if c >= coarse.sub_dim() {
            return Err(Error::Config("perturbation reads a coordinate outside the subsystem".into()));
        }
    }
    let centres: Vec<Vec<f64>> = (0..d).map(|a| spec.centres(a)).collect();
    let h: Vec<f64> = (0..d).map(|a| spec.spacing(a)).collect();
    let total = spec.total();

    let mut x = vec![0.0; d];
    let mut u0 = f64::INFINITY;
    for idx in 0..total {
        point_into(&centres, spec.n[0], idx, &mut x);
        u0 = u0.min(potential.energy(&x));
    }
    let tail = tail_mass(potential, spec, u0);
    if !(tail <= spec.tail_tol) {
        return Err(Error::DomainTooSmall { tail_mass: tail, limit: spec.tail_tol });
    }
    let mut mu = cell_masses(potential, &spec.lo, &h, &spec.n, u0);
    let z: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= z);
    if mu.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Numerical("equilibrium weight underflows on the grid; shrink the box".into()));
    }
    let sqrt_mu: Vec<f64> = mu.iter().map(|m| m.sqrt()).collect();

    let mut y = vec![0.0; coarse.sub_dim()];
    let v: Vec<f64> = (0..total)
        .map(|idx| {
            point_into(&centres, spec.n[0], idx, &mut x);
            coarse.project_into(&x, &mut y);
            perturbation.v.value(&y)
        })
        .collect();

    let strides = [1, spec.n[0]];
    let mut rows_q = Vec::with_capacity(total);
    let mut rows_b = Vec::with_capacity(total);
    for idx in 0..total {
        let coords = [idx % spec.n[0], if d == 2 { idx / spec.n[0] } else { 0 }];
        let mut rq = vec![(idx, 0.0)];
        let mut rb = vec![(idx, 0.0)];
        for a in 0..d {
            let inv_h2 = 1.0 / (h[a] * h[a]);
            let mut nb = Vec::with_capacity(2);
            if coords[a] > 0 {
                nb.push(idx - strides[a]);
            }
            if coords[a] + 1 < spec.n[a] {
                nb.push(idx + strides[a]);
            }
            for j in nb {
                let q = inv_h2 * (mu[j] / mu[idx]).sqrt();
                let bq = 0.5 * q * (v[j] - v[idx]);
                rq.push((j, q));
                rb.push((j, bq));
                rq[0].1 -= q;
                rb[0].1 -= bq;
            }
        }
        rows_q.push(rq);
        rows_b.push(rb);
    }
    let l0 = CsrMatrix::from_rows(rows_q);
    let b = CsrMatrix::from_rows(rows_b);
    let s0 = l0.similarity(&sqrt_mu);
    let sb = b.similarity(&sqrt_mu);
    let lv = l0.apply(&v);
    Ok(GridOperator {
        spec: spec.clone(),
        centres,
        coarse: coarse.clone(),
        mu,
        sqrt_mu,
        l0,
        b,
        s0,
        sb,
        v,
        lv,
        tail_mass: tail,
    })
}

fn point_into(centres: &[Vec<f64>], n0: usize, idx: usize, x: &mut [f64]) {
    x[0] = centres[0][idx % n0];
    if centres.len() == 2 {
        x[1] = centres[1][idx / n0];
    }
}

impl GridOperator {
    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn coarse(&self) -> &CoarseMap {
        &self.coarse
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.spec.dims()];
        point_into(&self.centres, self.spec.n[0], idx, &mut x);
        x
    }

    /// Per-axis cell index of node `idx`.
    pub fn axis_index(&self, idx: usize, axis: usize) -> usize {
        match axis {
            0 => idx % self.spec.n[0],
            _ => idx / self.spec.n[0],
        }
    }

    /// Cell masses of the equilibrium law; they sum to one.
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sqrt_mu(&self) -> &[f64] {
        &self.sqrt_mu
    }

    /// Unforced generator acting on grid functions.
    pub fn l0(&self) -> &CsrMatrix {
        &self.l0
    }

    /// Perturbation direction `grad V . grad`.
    pub fn b(&self) -> &CsrMatrix {
        &self.b
    }

    /// `D^{1/2} L0 D^{-1/2}`, symmetric.
    pub fn s0(&self) -> &CsrMatrix {
        &self.s0
    }

    /// `D^{1/2} B D^{-1/2}`.
    pub fn sb(&self) -> &CsrMatrix {
        &self.sb
    }

    /// Forced generator `L0 + eps B` in symmetrized coordinates.
    pub fn sym_generator(&self, epsilon: f64) -> CsrMatrix {
        if epsilon == 0.0 {
            self.s0.clone()
        } else {
            self.s0.add_scaled(epsilon, &self.sb)
        }
    }

    /// `V = v o pi` on the nodes.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// `L0 V` on the nodes.
    pub fn lv(&self) -> &[f64] {
        &self.lv
    }

    /// Lifts a subsystem function to the nodes.
    pub fn lift(&self, f: &SubsystemFn) -> Vec<f64> {
        let mut x = vec![0.0; self.spec.dims()];
        let mut y = vec![0.0; self.coarse.sub_dim()];
        (0..self.len())
            .map(|idx| {
                point_into(&self.centres, self.spec.n[0], idx, &mut x);
                self.coarse.project_into(&x, &mut y);
                f.value(&y)
            })
            .collect()
    }

    pub fn to_sym(&self, g: &[f64]) -> Vec<f64> {
        g.iter().zip(&self.sqrt_mu).map(|(a, s)| a * s).collect()
    }

    pub fn from_sym(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.sqrt_mu).map(|(a, s)| a / s).collect()
    }

    pub fn mean(&self, g: &[f64]) -> f64 {
        g.iter().zip(&self.mu).map(|(a, m)| a * m).sum()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.mu).map(|((a, b), m)| a * b * m).sum()
    }

    pub fn norm(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    pub fn lp_norm(&self, f: &[f64], p: f64) -> f64 {
        f.iter().zip(&self.mu).map(|(a, m)| m * a.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }

    pub fn sup_norm(&self, f: &[f64]) -> f64 {
        f.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}
