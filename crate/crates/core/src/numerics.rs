//! Interpolation and quadrature on real grids.

use crate::error::{BomcaError, Result};
use num_complex::Complex64;

/// Not-a-knot cubic spline through complex samples at strictly increasing real abscissae.
///
/// Not-a-knot end conditions reproduce cubic polynomials exactly, which matters
/// for the free Gaussian whose action is quadratic in `x`.
#[derive(Debug, Clone)]
pub struct ComplexSpline {
    knots: Vec<f64>,
    values: Vec<Complex64>,
    second: Vec<Complex64>,
}

impl ComplexSpline {
    pub fn new(knots: &[f64], values: &[Complex64]) -> Result<Self> {
        let n = knots.len();
        if n != values.len() {
            return Err(BomcaError::InvalidParameter("spline knots and values differ in length".into()));
        }
        if n < 4 {
            return Err(BomcaError::InsufficientCoverage(format!(
                "a not-a-knot spline needs at least 4 samples (got {n})"
            )));
        }
        if let Some(w) = knots.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(BomcaError::NonMonotonicArrivals { at: w[0] });
        }
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let slope: Vec<Complex64> = (0..n - 1).map(|i| (values[i + 1] - values[i]) / h[i]).collect();

        // tridiagonal system for M_1..M_{n-2}; M_0 and M_{n-1} eliminated via not-a-knot
        let m = n - 2;
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![Complex64::new(0.0, 0.0); m];
        for r in 0..m {
            let i = r + 1;
            sub[r] = h[i - 1];
            diag[r] = 2.0 * (h[i - 1] + h[i]);
            sup[r] = h[i];
            rhs[r] = 6.0 * (slope[i] - slope[i - 1]);
        }
        let (h0, h1) = (h[0], h[1]);
        diag[0] += h0 * (h0 + h1) / h1;
        sup[0] -= h0 * h0 / h1;
        let (ha, hb) = (h[n - 3], h[n - 2]);
        diag[m - 1] += hb * (ha + hb) / ha;
        sub[m - 1] -= hb * hb / ha;

        // Thomas sweep
        for r in 1..m {
            let w = sub[r] / diag[r - 1];
            diag[r] -= w * sup[r - 1];
            let prev = rhs[r - 1];
            rhs[r] -= w * prev;
        }
        let mut inner = vec![Complex64::new(0.0, 0.0); m];
        inner[m - 1] = rhs[m - 1] / diag[m - 1];
        for r in (0..m - 1).rev() {
            inner[r] = (rhs[r] - sup[r] * inner[r + 1]) / diag[r];
        }

        let mut second = Vec::with_capacity(n);
        // n ≥ 4, so m ≥ 2
        second.push(((h0 + h1) * inner[0] - h0 * inner[1]) / h1);
        second.extend_from_slice(&inner);
        second.push(((ha + hb) * inner[m - 1] - hb * inner[m - 2]) / ha);

        Ok(ComplexSpline {
            knots: knots.to_vec(),
            values: values.to_vec(),
            second,
        })
    }

    pub fn span(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Evaluate at `x`; outside the knot span the end cubics are extrapolated.
    pub fn eval(&self, x: f64) -> Complex64 {
        let n = self.knots.len();
        let i = self.knots.partition_point(|&k| k <= x).clamp(1, n - 1) - 1;
        let (xl, xr) = (self.knots[i], self.knots[i + 1]);
        let h = xr - xl;
        let (a, b) = (xr - x, x - xl);
        let (ml, mr) = (self.second[i], self.second[i + 1]);
        ml * (a * a * a / (6.0 * h))
            + mr * (b * b * b / (6.0 * h))
            + (self.values[i] / h - ml * (h / 6.0)) * a
            + (self.values[i + 1] / h - mr * (h / 6.0)) * b
    }
}

/// `n` equally spaced points from `a` to `b` inclusive.
pub fn uniform_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let dx = (b - a) / (n - 1) as f64;
            (0..n).map(|i| a + dx * i as f64).collect()
        }
    }
}

/// Composite Simpson quadrature of uniformly spaced samples; an odd number of
/// intervals closes with the 3/8 rule on the last three.
pub fn simpson(f: &[f64], dx: f64) -> f64 {
    let n = f.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * dx * (f[0] + f[1]),
        3 => dx / 3.0 * (f[0] + 4.0 * f[1] + f[2]),
        _ => {
            let intervals = n - 1;
            let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
            let mut acc = 0.0;
            let mut i = 0;
            while i + 2 <= simpson_end {
                acc += f[i] + 4.0 * f[i + 1] + f[i + 2];
                i += 2;
            }
            let mut total = acc * dx / 3.0;
            if intervals % 2 == 1 {
                let j = n - 4;
                total += 3.0 * dx / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn spline_reproduces_cubics_on_uneven_knots() {
        let knots = [0.0, 0.3, 0.5, 1.1, 1.2, 2.0, 2.7];
        let f = |x: f64| c(1.0 - 2.0 * x + 0.5 * x * x * x, x * x - 0.25 * x * x * x);
        let values: Vec<_> = knots.iter().map(|&x| f(x)).collect();
        let s = ComplexSpline::new(&knots, &values).unwrap();
        for i in 0..=100 {
            let x = 2.7 * i as f64 / 100.0;
            assert!((s.eval(x) - f(x)).norm() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn spline_four_points_minimum() {
        let knots = [0.0, 1.0, 2.0, 3.0];
        let values = [c(2.0, 1.0); 4];
        let s = ComplexSpline::new(&knots, &values).unwrap();
        assert!((s.eval(1.7) - c(2.0, 1.0)).norm() < 1e-14);
        assert!(ComplexSpline::new(&knots[..3], &values[..3]).is_err());
    }

    #[test]
    fn spline_rejects_unsorted_knots() {
        let err = ComplexSpline::new(&[0.0, 1.0, 1.0, 2.0], &[c(0.0, 0.0); 4]).unwrap_err();
        assert!(matches!(err, BomcaError::NonMonotonicArrivals { .. }));
    }

    #[test]
    fn spline_converges_fourth_order() {
        let err = |n: usize| {
            let knots = uniform_grid(0.0, 3.0, n);
            let values: Vec<_> = knots.iter().map(|&x| c(x.sin(), x.cos())).collect();
            let s = ComplexSpline::new(&knots, &values).unwrap();
            (0..=300)
                .map(|i| {
                    let x = 3.0 * i as f64 / 300.0;
                    (s.eval(x) - c(x.sin(), x.cos())).norm()
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        for n in [3usize, 4, 5, 8, 11] {
            let x = uniform_grid(0.0, 2.0, n);
            let f: Vec<f64> = x.iter().map(|&x| x * x * x - x + 1.0).collect();
            let got = simpson(&f, x[1] - x[0]);
            assert!((got - 4.0).abs() < 1e-13, "n = {n}: {got}");
        }
    }
}
