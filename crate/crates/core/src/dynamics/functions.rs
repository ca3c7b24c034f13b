/// Scalar functions of subsystem coordinates `y in R^m`, used both as
/// perturbing potentials `v` and as observables `kappa`.
#[derive(Clone, Debug, PartialEq)]
pub enum SubsystemFn {
    Zero,
    Constant(f64),
    /// `y[i]`
    Coordinate(usize),
    /// `c . y`
    Linear(Vec<f64>),
    /// `y[coord]^power`
    Monomial { coord: usize, power: i32 },
    /// `amplitude * cos(y[coord] - shift)`
    Cosine { coord: usize, amplitude: f64, shift: f64 },
    /// `amplitude * exp(-(y[coord] - center)^2 / scale)`
    GaussianBump { coord: usize, amplitude: f64, center: f64, scale: f64 },
}

impl SubsystemFn {
    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(c) => *c,
            Self::Coordinate(i) => y[*i],
            Self::Linear(c) => c.iter().zip(y).map(|(a, b)| a * b).sum(),
            Self::Monomial { coord, power } => y[*coord].powi(*power),
            Self::Cosine { coord, amplitude, shift } => amplitude * (y[*coord] - shift).cos(),
            Self::GaussianBump { coord, amplitude, center, scale } => {
                let d = y[*coord] - center;
                amplitude * (-d * d / scale).exp()
            }
        }
    }

    /// Writes the gradient into `out` (length `m`).
    pub fn gradient(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Self::Zero | Self::Constant(_) => {}
            Self::Coordinate(i) => out[*i] = 1.0,
            Self::Linear(c) => out.copy_from_slice(c),
            Self::Monomial { coord, power } => {
                out[*coord] = if *power == 0 { 0.0 } else { *power as f64 * y[*coord].powi(power - 1) }
            }
            Self::Cosine { coord, amplitude, shift } => out[*coord] = -amplitude * (y[*coord] - shift).sin(),
            Self::GaussianBump { coord, amplitude, center, scale } => {
                let d = y[*coord] - center;
                out[*coord] = -2.0 * d / scale * amplitude * (-d * d / scale).exp();
            }
        }
    }

    /// True when the function is identically zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero) || matches!(self, Self::Constant(c) if *c == 0.0)
    }

    /// Highest coordinate index read, if any.
    pub fn max_coord(&self) -> Option<usize> {
        match self {
            Self::Zero | Self::Constant(_) => None,
            Self::Coordinate(i) => Some(*i),
            Self::Linear(c) => c.len().checked_sub(1),
            Self::Monomial { coord, .. } | Self::Cosine { coord, .. } | Self::GaussianBump { coord, .. } => {
                Some(*coord)
            }
        }
    }
}

/// Perturbing potential `V = v o pi`; the forced drift is `-grad U + eps grad V`.
#[derive(Clone, Debug, PartialEq)]
pub struct Perturbation {
    pub v: SubsystemFn,
}

impl Perturbation {
    pub fn new(v: SubsystemFn) -> Self {
        Self { v }
    }

    pub fn zero() -> Self {
        Self { v: SubsystemFn::Zero }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradients_match_finite_differences() {
        let fns = [
            SubsystemFn::Coordinate(1),
            SubsystemFn::Linear(vec![0.5, -2.0]),
            SubsystemFn::Monomial { coord: 0, power: 3 },
            SubsystemFn::Cosine { coord: 0, amplitude: -1.0, shift: std::f64::consts::FRAC_PI_4 },
            SubsystemFn::GaussianBump { coord: 1, amplitude: 1.0, center: 1.0, scale: 4.0 },
        ];
        let y = [0.7, -0.3];
        let h = 1e-5;
        let mut g = [0.0; 2];
        for f in &fns {
            f.gradient(&y, &mut g);
            for j in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[j] += h;
                ym[j] -= h;
                let fd = (f.value(&yp) - f.value(&ym)) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * g[j].abs().max(1.0), "{f:?}");
            }
        }
    }

    #[test]
    fn zero_detection() {
        assert!(SubsystemFn::Zero.is_zero());
        assert!(SubsystemFn::Constant(0.0).is_zero());
        assert!(!SubsystemFn::Constant(1.0).is_zero());
    }
}
