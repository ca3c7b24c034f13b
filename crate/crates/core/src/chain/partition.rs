use crate::error::{Error, Result};

/// Assignment of each state to a subsystem class. Labels are compressed to
/// `0..n_classes` in order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StatePartition {
    class: Vec<usize>,
    n_classes: usize,
}

impl StatePartition {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let l: Vec<i64> = labels.iter().map(|&v| v as i64).collect();
        Self::from_labels(&l)
    }

    pub fn from_labels(labels: &[i64]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Config("partition needs at least one state".into()));
        }
        let mut seen: Vec<i64> = Vec::new();
        let class = labels
            .iter()
            .map(|l| match seen.iter().position(|s| s == l) {
                Some(k) => k,
                None => {
                    seen.push(*l);
                    seen.len() - 1
                }
            })
            .collect();
        Ok(Self { class, n_classes: seen.len() })
    }

    /// Every state in its own class.
    pub fn identity(n: usize) -> Self {
        Self { class: (0..n).collect(), n_classes: n }
    }

    /// All states in one class.
    pub fn single(n: usize) -> Self {
        Self { class: vec![0; n], n_classes: 1 }
    }

    pub fn n(&self) -> usize {
        self.class.len()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class[i]
    }

    pub fn classes(&self) -> &[usize] {
        &self.class
    }

    pub fn is_measurable(&self, f: &[f64], tol: f64) -> bool {
        let mut rep: Vec<Option<f64>> = vec![None; self.n_classes];
        for (i, &c) in self.class.iter().enumerate() {
            match rep[c] {
                None => rep[c] = Some(f[i]),
                Some(v) if (v - f[i]).abs() > tol => return false,
                _ => {}
            }
        }
        true
    }
}

/// `E_mu[f | partition]`: the mu-weighted class average on every class.
pub fn conditional_expectation(f: &[f64], part: &StatePartition, mu: &[f64]) -> Vec<f64> {
    assert_eq!(f.len(), part.n(), "f length must match the partition");
    assert_eq!(mu.len(), part.n(), "mu length must match the partition");
    let mut num = vec![0.0; part.n_classes()];
    let mut den = vec![0.0; part.n_classes()];
    for (i, &c) in part.classes().iter().enumerate() {
        num[c] += mu[i] * f[i];
        den[c] += mu[i];
    }
    part.classes().iter().map(|&c| num[c] / den[c]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compresses_labels() {
        let p = StatePartition::from_labels(&[7, -2, -2, 7]).unwrap();
        assert_eq!(p.classes(), &[0, 1, 1, 0]);
        assert!(StatePartition::from_labels(&[]).is_err());
    }

    #[test]
    fn class_averages() {
        let p = StatePartition::new(vec![0, 0, 1, 1]).unwrap();
        let e = conditional_expectation(&[1.0, 0.0, 0.0, 0.0], &p, &[0.25; 4]);
        assert_eq!(e, vec![0.5, 0.5, 0.0, 0.0]);
        let g = [3.0, 3.0, -1.0, -1.0];
        assert_eq!(conditional_expectation(&g, &p, &[0.1, 0.2, 0.3, 0.4]), g.to_vec());
    }

    #[test]
    fn orthogonal_mode_projects_to_zero() {
        let p = StatePartition::new(vec![0, 1, 1, 0]).unwrap();
        let e = conditional_expectation(&[-1.0, -1.0, 1.0, 1.0], &p, &[0.25; 4]);
        assert!(e.iter().all(|v| v.abs() < 1e-15));
    }
}
