/// Composite Simpson weights for `intervals + 1` equispaced nodes with spacing `h`.
///
/// `intervals` must be even and positive.
pub fn simpson_weights(intervals: usize, h: f64) -> Vec<f64> {
    assert!(intervals > 0 && intervals.is_multiple_of(2), "Simpson needs an even interval count");
    let mut w = vec![0.0; intervals + 1];
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
    }
    w
}

/// Composite Simpson rule over equispaced samples `f` with spacing `h`.
pub fn simpson(f: &[f64], h: f64) -> f64 {
    let w = simpson_weights(f.len() - 1, h);
    f.iter().zip(&w).map(|(a, b)| a * b).sum()
}

/// Quadrature weights on the nodes `0, h, .., k h` for an integral over `[0, k h]`.
///
/// Simpson for even `k`, Simpson plus a trailing 3/8 panel for odd `k >= 3`,
/// trapezoid for `k = 1`. Used for nested integrals whose inner upper limit
/// walks the outer grid.
pub fn prefix_weights(k: usize, h: f64) -> Vec<f64> {
    match k {
        0 => vec![0.0],
        1 => vec![0.5 * h, 0.5 * h],
        _ if k.is_multiple_of(2) => simpson_weights(k, h),
        _ => {
            let mut w = if k > 3 { simpson_weights(k - 3, h) } else { vec![0.0] };
            w.resize(k + 1, 0.0);
            let c = 3.0 * h / 8.0;
            w[k - 3] += c;
            w[k - 2] += 3.0 * c;
            w[k - 1] += 3.0 * c;
            w[k] += c;
            w
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pn1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}
