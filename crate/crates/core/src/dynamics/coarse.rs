use crate::error::{Error, Result};

/// Coordinate projection `pi: R^d -> R^m`, `pi(x) = (x[i_1], .., x[i_m])`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoarseMap {
    d: usize,
    indices: Vec<usize>,
}

impl CoarseMap {
    pub fn projection(d: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() || indices.len() > d {
            return Err(Error::Config(format!("projection needs 1..={d} indices")));
        }
        let mut seen = vec![false; d];
        for &i in &indices {
            if i >= d {
                return Err(Error::Config(format!("projection index {i} out of range for d = {d}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Config(format!("duplicate projection index {i}")));
            }
        }
        Ok(Self { d, indices })
    }

    pub fn identity(d: usize) -> Self {
        Self { d, indices: (0..d).collect() }
    }

    pub fn full_dim(&self) -> usize {
        self.d
    }

    pub fn sub_dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn project_into(&self, x: &[f64], y: &mut [f64]) {
        for (yi, &i) in y.iter_mut().zip(&self.indices) {
            *yi = x[i];
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| x[i]).collect()
    }

    /// Scatters `g` (length `m`) into the projected coordinates of `out`, zero elsewhere.
    pub fn lift_into(&self, g: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (gi, &i) in g.iter().zip(&self.indices) {
            out[i] = *gi;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(CoarseMap::projection(2, vec![0, 0]).is_err());
        assert!(CoarseMap::projection(2, vec![2]).is_err());
        assert!(CoarseMap::projection(2, vec![]).is_err());
        assert!(CoarseMap::projection(2, vec![1, 0]).is_ok());
    }

    #[test]
    fn project_and_lift() {
        let c = CoarseMap::projection(3, vec![2, 0]).unwrap();
        assert_eq!(c.project(&[1.0, 2.0, 3.0]), vec![3.0, 1.0]);
        let mut out = [9.0; 3];
        c.lift_into(&[5.0, 6.0], &mut out);
        assert_eq!(out, [6.0, 0.0, 5.0]);
    }
}
