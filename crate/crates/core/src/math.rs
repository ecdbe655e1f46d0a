//! Small numeric utilities: compensated summation, Gauss-Legendre rules,
//! torus wrapping, and log-log least squares.

/// Kahan-Babuska compensated sum; keeps long reductions near machine precision.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Representative of `z` in (-1/2, 1/2] on the unit torus.
pub fn wrap_torus(z: f64) -> f64 {
    let mut w = z - z.round();
    if w <= -0.5 {
        w += 1.0;
    }
    w
}

/// Gauss-Legendre nodes and weights on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; accurate to machine
/// precision for the small orders used here (n <= 64).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && n <= 64, "gauss_legendre order out of range");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Tricomi-style initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_deriv(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Scale a [-1,1] rule to [a,b]: returns (nodes, weights).
pub fn gauss_legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let (xs, ws) = gauss_legendre(n);
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    (
        xs.iter().map(|x| mid + half * x).collect(),
        ws.iter().map(|w| w * half).collect(),
    )
}

/// Ordinary least squares of log(error) against log(scale).
/// Returns (slope, intercept, rms residual).
pub fn loglog_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(s, _)| s.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, e)| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    (slope, intercept, (rss / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_handles_many_small_terms() {
        let n = 100_000;
        let s = kahan_sum((0..n).map(|_| 0.1));
        assert!((s - n as f64 * 0.1).abs() < 1e-9);
    }

    #[test]
    fn wrap_torus_convention() {
        assert_eq!(wrap_torus(0.95), 0.95 - 1.0);
        assert_eq!(wrap_torus(-0.5), 0.5);
        assert_eq!(wrap_torus(0.5), 0.5);
        assert_eq!(wrap_torus(0.25), 0.25);
        assert_eq!(wrap_torus(3.25), 0.25);
    }

    #[test]
    fn gauss_legendre_matches_reference_nodes() {
        // 5-point rule, Abramowitz & Stegun 25.4.30.
        let (x, w) = gauss_legendre(5);
        let xr = [
            -0.906179845938664,
            -0.538469310105683,
            0.0,
            0.538469310105683,
            0.906179845938664,
        ];
        let wr = [
            0.236926885056189,
            0.478628670499366,
            0.568888888888889,
            0.478628670499366,
            0.236926885056189,
        ];
        for i in 0..5 {
            assert!((x[i] - xr[i]).abs() < 1e-14, "node {i}");
            assert!((w[i] - wr[i]).abs() < 1e-14, "weight {i}");
        }
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        // n-point rule integrates degree 2n-1 exactly.
        let (x, w) = gauss_legendre_on(0.0, 1.0, 8);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(15)).sum();
        assert!((integral - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn loglog_fit_recovers_exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
            .iter()
            .map(|&e| (e, 3.0 * e * e))
            .collect();
        let (slope, _, resid) = loglog_fit(&pts);
        assert!((slope - 2.0).abs() < 1e-12);
        assert!(resid < 1e-12);
    }
}
