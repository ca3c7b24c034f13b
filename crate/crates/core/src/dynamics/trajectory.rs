use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Equally spaced samples `y_i = pi(x_{i dt})` of a subsystem path.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsystemTrajectory {
    dt: f64,
    m: usize,
    samples: Vec<f64>,
    epsilon: f64,
    seed: u64,
}

impl SubsystemTrajectory {
    /// `samples` is the row-major concatenation of the `m`-vectors.
    pub fn new(dt: f64, m: usize, samples: Vec<f64>, epsilon: f64, seed: u64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::Config(format!("trajectory dt must be positive, got {dt}")));
        }
        if m == 0 || samples.is_empty() || !samples.len().is_multiple_of(m) {
            return Err(Error::Config("trajectory needs a non-empty whole number of samples".into()));
        }
        Ok(Self { dt, m, samples, epsilon, seed })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.samples.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Time covered, `(len - 1) dt`.
    pub fn span(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.samples[i * self.m..(i + 1) * self.m]
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.chunks_exact(self.m)
    }

    /// Header `t,y1,..,ym`, 17 significant digits, LF line endings.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.m).map(|j| format!("y{j}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (i, y) in self.iter().enumerate() {
            write!(w, "{:.16e}", i as f64 * self.dt)?;
            for v in y {
                write!(w, ",{v:.16e}")?;
            }
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Reads the CSV layout written by [`Self::write_csv`]; `dt` is taken
    /// from the first two time stamps.
    pub fn read_csv<R: BufRead>(r: R, epsilon: f64, seed: u64) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
        let header = header?;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(Error::Parse { line: 1, msg: "expected header t,y1,..".into() });
        }
        let m = cols.len() - 1;
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            if vals.len() != m + 1 {
                return Err(Error::Parse { line: i + 1, msg: format!("expected {} columns", m + 1) });
            }
            times.push(vals[0]);
            samples.extend_from_slice(&vals[1..]);
        }
        let dt = match times.as_slice() {
            [t0, t1, ..] => t1 - t0,
            _ => return Err(Error::InsufficientData { got: times.len(), need: 2 }),
        };
        Self::new(dt, m, samples, epsilon, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = SubsystemTrajectory::new(0.5, 2, vec![1.0, 2.0, 0.1, -3.0], 0.0, 1).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let mut lines = s.lines();
        assert_eq!(lines.next(), Some("t,y1,y2"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,1.0000000000000000e0,2.0000000000000000e0"));
        assert!(!s.contains('\r'));
        let back = SubsystemTrajectory::read_csv(s.as_bytes(), 0.0, 1).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SubsystemTrajectory::new(0.0, 1, vec![1.0], 0.0, 0).is_err());
        assert!(SubsystemTrajectory::new(0.1, 2, vec![1.0], 0.0, 0).is_err());
        assert!(SubsystemTrajectory::new(0.1, 1, vec![], 0.0, 0).is_err());
        assert!(SubsystemTrajectory::read_csv("t,y1\n0,1,2\n".as_bytes(), 0.0, 0).is_err());
    }
}
