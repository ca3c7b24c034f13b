use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PotentialKind {
    Quadratic,
    Multiwell,
    GaussianSum,
}

/// `amplitude * exp(-sum_j rates[j] * (x_j - center[j])^2)`
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub rates: Vec<f64>,
}

impl GaussianTerm {
    fn exponent(&self, x: &[f64]) -> f64 {
        self.rates
            .iter()
            .zip(&self.center)
            .zip(x)
            .map(|((r, c), xi)| r * (xi - c) * (xi - c))
            .sum()
    }
}

/// Parameters of the four-well landscape.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiwellParams {
    pub sigma: f64,
    pub sigma_m: f64,
    pub sigma_1: f64,
    pub sigma_2: f64,
    pub confinement: f64,
}

impl Default for MultiwellParams {
    fn default() -> Self {
        Self { sigma: 0.5, sigma_m: 1.0 / 3.0, sigma_1: 0.1, sigma_2: 0.1, confinement: 0.1 }
    }
}

#[derive(Clone, Debug)]
enum Form {
    /// `U = x^T a x / 2`, `a` symmetric row-major.
    Quadratic { a: Vec<f64> },
    /// `U = sum of Gaussian terms + confinement * |x|^2`
    Gaussians { terms: Vec<GaussianTerm>, confinement: f64 },
}

/// Energy `U` on `R^d` in units of `k_B T`.
#[derive(Clone, Debug)]
pub struct Potential {
    dim: usize,
    kind: PotentialKind,
    form: Form,
}

impl Potential {
    /// `U(x) = x^T a x / 2` for a symmetric `d x d` matrix given row-major.
    pub fn quadratic(dim: usize, a: Vec<f64>) -> Result<Self> {
        if dim == 0 || a.len() != dim * dim {
            return Err(Error::Config(format!("quadratic form needs {dim}x{dim} entries")));
        }
        for i in 0..dim {
            for j in 0..i {
                if (a[i * dim + j] - a[j * dim + i]).abs() > 1e-14 * (1.0 + a[i * dim + j].abs()) {
                    return Err(Error::Config("quadratic form is not symmetric".into()));
                }
            }
        }
        Ok(Self { dim, kind: PotentialKind::Quadratic, form: Form::Quadratic { a } })
    }

    /// One-dimensional `U = x^2 / 2`.
    pub fn harmonic_1d() -> Self {
        Self::quadratic(1, vec![1.0]).expect("valid form")
    }

    /// Two-timescale form with `a = ((2, -r), (-r, 2r))`.
    pub fn two_timescale(r: f64) -> Self {
        Self::quadratic(2, vec![2.0, -r, -r, 2.0 * r]).expect("valid form")
    }

    pub fn gaussian_sum(dim: usize, terms: Vec<GaussianTerm>, confinement: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("dimension must be positive".into()));
        }
        if terms.iter().any(|t| t.center.len() != dim || t.rates.len() != dim) {
            return Err(Error::Config("Gaussian term dimension mismatch".into()));
        }
        if terms.iter().any(|t| t.rates.iter().any(|r| *r < 0.0)) {
            return Err(Error::Config("Gaussian rates must be nonnegative".into()));
        }
        Ok(Self { dim, kind: PotentialKind::GaussianSum, form: Form::Gaussians { terms, confinement } })
    }

    /// Two troughs along `y = +-1`, four wells at `(+-1, +-1)` and a weak
    /// quadratic confinement.
    pub fn multiwell(p: &MultiwellParams) -> Self {
        let root = (2.0 * std::f64::consts::PI).sqrt();
        let well = |x: f64, y: f64, s: f64| GaussianTerm {
            amplitude: -1.0 / (2.0 * s),
            center: vec![x, y],
            rates: vec![1.0, 1.0],
        };
        let terms = vec![
            GaussianTerm { amplitude: -root / p.sigma, center: vec![0.0, 1.0], rates: vec![0.0, 1.0 / (2.0 * p.sigma)] },
            GaussianTerm {
                amplitude: -root / p.sigma_m,
                center: vec![0.0, -1.0],
                rates: vec![0.0, 1.0 / (2.0 * p.sigma_m)],
            },
            well(1.0, 1.0, p.sigma_1),
            well(-1.0, 1.0, p.sigma_1),
            well(-1.0, -1.0, p.sigma_2),
            well(1.0, -1.0, p.sigma_2),
        ];
        let mut pot = Self::gaussian_sum(2, terms, p.confinement).expect("valid landscape");
        pot.kind = PotentialKind::Multiwell;
        pot
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> PotentialKind {
        self.kind
    }

    /// The matrix of a quadratic form, row-major.
    pub fn quadratic_matrix(&self) -> Option<&[f64]> {
        match &self.form {
            Form::Quadratic { a } => Some(a),
            Form::Gaussians { .. } => None,
        }
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        match &self.form {
            Form::Quadratic { a } => {
                let d = self.dim;
                let mut e = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        e += x[i] * a[i * d + j] * x[j];
                    }
                }
                0.5 * e
            }
            Form::Gaussians { terms, confinement } => {
                let mut e = confinement * x.iter().map(|v| v * v).sum::<f64>();
                for t in terms {
                    e += t.amplitude * (-t.exponent(x)).exp();
                }
                e
            }
        }
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        match &self.form {
            Form::Quadratic { a } => {
                let d = self.dim;
                for i in 0..d {
                    out[i] = (0..d).map(|j| a[i * d + j] * x[j]).sum();
                }
            }
            Form::Gaussians { terms, confinement } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = 2.0 * confinement * xi;
                }
                for t in terms {
                    let g = t.amplitude * (-t.exponent(x)).exp();
                    for j in 0..self.dim {
                        out[j] -= 2.0 * g * t.rates[j] * (x[j] - t.center[j]);
                    }
                }
            }
        }
    }

    /// Largest relative deviation between `gradient` and central differences
    /// of `energy` (step `h`) over `probes` random points of scale `scale`.
    pub fn gradient_check<R: Rng>(&self, rng: &mut R, probes: usize, scale: f64, h: f64) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        let mut g = vec![0.0; d];
        for _ in 0..probes {
            let x: Vec<f64> = (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            self.gradient(&x, &mut g);
            for j in 0..d {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (self.energy(&xp) - self.energy(&xm)) / (2.0 * h);
                let rel = (fd - g[j]).abs() / g[j].abs().max(1.0);
                worst = worst.max(rel);
            }
        }
        worst
    }

    /// `U(R u) > U(0)` along every given unit direction.
    pub fn is_confining(&self, directions: &[Vec<f64>], radius: f64) -> bool {
        let e0 = self.energy(&vec![0.0; self.dim]);
        directions.iter().all(|u| {
            let x: Vec<f64> = u.iter().map(|c| radius * c).collect();
            self.energy(&x) > e0
        })
    }
}
