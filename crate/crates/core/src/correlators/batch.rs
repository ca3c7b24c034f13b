/// Point estimate with a batch-means standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n_pairs: u64,
    pub n_batches: u64,
    pub reliable: bool,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Self { mean, se: 0.0, n_pairs: 0, n_batches: 0, reliable: true }
    }
}

/// Fewer batches than this and the se is flagged as unreliable.
pub const MIN_RELIABLE_BATCHES: u64 = 4;

/// Batch length giving about `ceil(sqrt(n))` batches over `n` values.
pub fn batch_len(n: usize) -> usize {
    if n == 0 {
        return 1;
    }
    let k = (n as f64).sqrt().ceil() as usize;
    n.div_ceil(k.max(1))
}

/// Mergeable summary of a set of (possibly unequal) batches.
///
/// Holds `W = sum n_b`, `sum s_b`, `sum s_b^2`, `sum n_b s_b` and
/// `sum n_b^2`, enough for the weighted batch-means variance
/// `sum (s_b - n_b m)^2 / W^2 * B/(B-1)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchMeans {
    weight: u64,
    batches: u64,
    sum: f64,
    sum_sq: f64,
    sum_ns: f64,
    sum_nn: f64,
}

impl BatchMeans {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_batch(&mut self, n: usize, s: f64) {
        if n == 0 {
            return;
        }
        let nf = n as f64;
        self.weight += n as u64;
        self.batches += 1;
        self.sum += s;
        self.sum_sq += s * s;
        self.sum_ns += nf * s;
        self.sum_nn += nf * nf;
    }

    /// Splits `values` into consecutive batches of `len` (the last may be short).
    pub fn add_series<I: IntoIterator<Item = f64>>(&mut self, values: I, len: usize) {
        let mut n = 0;
        let mut s = 0.0;
        for v in values {
            s += v;
            n += 1;
            if n == len {
                self.add_batch(n, s);
                n = 0;
                s = 0.0;
            }
        }
        self.add_batch(n, s);
    }

    pub fn merge(&mut self, other: &BatchMeans) {
        self.weight += other.weight;
        self.batches += other.batches;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self.sum_ns += other.sum_ns;
        self.sum_nn += other.sum_nn;
    }

    pub fn count(&self) -> u64 {
        self.weight
    }

    pub fn estimate(&self) -> Estimate {
        let w = self.weight as f64;
        let mean = if self.weight > 0 { self.sum / w } else { f64::NAN };
        let se = if self.batches >= 2 {
            let ss = (self.sum_sq - 2.0 * mean * self.sum_ns + mean * mean * self.sum_nn).max(0.0);
            let b = self.batches as f64;
            (ss / (w * w) * b / (b - 1.0)).sqrt()
        } else {
            f64::NAN
        };
        Estimate {
            mean,
            se,
            n_pairs: self.weight,
            n_batches: self.batches,
            reliable: self.batches >= MIN_RELIABLE_BATCHES,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_lengths() {
        assert_eq!(batch_len(16), 4);
        assert_eq!(batch_len(17), 4);
        assert_eq!(batch_len(1), 1);
        assert_eq!(batch_len(10_000), 100);
    }

    #[test]
    fn equal_batches_match_textbook_formula() {
        let x: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64).collect();
        let mut b = BatchMeans::new();
        b.add_series(x.iter().copied(), 10);
        let e = b.estimate();
        let means: Vec<f64> = x.chunks(10).map(|c| c.iter().sum::<f64>() / 10.0).collect();
        let m = means.iter().sum::<f64>() / 10.0;
        let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 9.0;
        assert!((e.mean - m).abs() < 1e-12);
        assert!((e.se - (var / 10.0).sqrt()).abs() < 1e-12);
        assert_eq!(e.n_batches, 10);
    }

    #[test]
    fn merge_is_concatenation() {
        let mut a = BatchMeans::new();
        a.add_series([1.0, 2.0, 3.0, 4.0, 5.0], 2);
        let mut b = BatchMeans::new();
        b.add_series([6.0, 7.0], 2);
        let mut ab = a.clone();
        ab.merge(&b);
        let mut all = BatchMeans::new();
        all.add_series([1.0, 2.0, 3.0, 4.0, 5.0], 2);
        all.add_series([6.0, 7.0], 2);
        assert_eq!(ab, all);
        assert_eq!(ab.estimate().mean, 4.0);
    }

    #[test]
    fn constant_has_zero_se() {
        let mut a = BatchMeans::new();
        a.add_series(std::iter::repeat_n(1.0, 103), 10);
        let e = a.estimate();
        assert_eq!(e.mean, 1.0);
        assert_eq!(e.se, 0.0);
    }
}
