//! Truncated Taylor series over complex scalars.
//!
//! A [`Jet`] of order `K` stores the normalized coefficients `c_k = f^(k)(x0) / k!`
//! of a function expanded around a base point, for `k = 0..=K`. Products,
//! reciprocals and powers act on the coefficient vectors directly, so any
//! analytic expression built from these primitives yields all of its
//! derivatives at once without per-order formulas.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<Complex64>,
}

impl Jet {
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least the value coefficient");
        Jet { coeffs }
    }

    pub fn constant(value: Complex64, order: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The identity function `x ↦ x` expanded around `x0`.
    pub fn variable(x0: Complex64, order: usize) -> Self {
        let mut jet = Jet::constant(x0, order);
        if order >= 1 {
            jet.coeffs[1] = Complex64::new(1.0, 0.0);
        }
        jet
    }

    /// Build a jet from derivative values `f, f', f'', …`.
    pub fn from_derivatives(derivs: &[Complex64]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                if k > 0 {
                    fact *= k as f64;
                }
                d / fact
            })
            .collect();
        Jet::from_coeffs(coeffs)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn value(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Derivative values `f^(k)(x0) = k! c_k`.
    pub fn derivatives(&self) -> Vec<Complex64> {
        let mut fact = 1.0;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k > 0 {
                    fact *= k as f64;
                }
                c * fact
            })
            .collect()
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        Jet::from_coeffs(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Cauchy product truncated to the shorter order.
    pub fn mul_jet(&self, other: &Jet) -> Jet {
        let order = self.order().min(other.order());
        let coeffs = (0..=order)
            .map(|k| (0..=k).map(|j| self.coeffs[j] * other.coeffs[k - j]).sum())
            .collect();
        Jet::from_coeffs(coeffs)
    }

    pub fn square(&self) -> Jet {
        self.mul_jet(self)
    }

    /// `1/f`, by the standard recurrence `r_k = -(Σ_{j=1..k} c_j r_{k-j}) / c_0`.
    /// Returns `None` when the value coefficient is zero.
    pub fn recip(&self) -> Option<Jet> {
        let c0 = self.coeffs[0];
        if c0 == Complex64::new(0.0, 0.0) {
            return None;
        }
        let mut r = Vec::with_capacity(self.coeffs.len());
        r.push(c0.inv());
        for k in 1..self.coeffs.len() {
            let acc: Complex64 = (1..=k).map(|j| self.coeffs[j] * r[k - j]).sum();
            r.push(-acc / c0);
        }
        Some(Jet::from_coeffs(r))
    }

    /// `exp(f)` via `g' = f' g`, i.e. `k g_k = Σ_{j=1..k} j f_j g_{k-j}`.
    pub fn exp(&self) -> Jet {
        let mut g = Vec::with_capacity(self.coeffs.len());
        g.push(self.coeffs[0].exp());
        for k in 1..self.coeffs.len() {
            let acc: Complex64 = (1..=k)
                .map(|j| self.coeffs[j] * g[k - j] * j as f64)
                .sum();
            g.push(acc / k as f64);
        }
        Jet::from_coeffs(g)
    }

    /// Simultaneous `(cosh f, sinh f)` via `c' = f' s`, `s' = f' c`.
    pub fn cosh_sinh(&self) -> (Jet, Jet) {
        let n = self.coeffs.len();
        let mut c = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        c.push(self.coeffs[0].cosh());
        s.push(self.coeffs[0].sinh());
        for k in 1..n {
            let mut ck = Complex64::new(0.0, 0.0);
            let mut sk = Complex64::new(0.0, 0.0);
            for j in 1..=k {
                let w = self.coeffs[j] * j as f64;
                ck += w * s[k - j];
                sk += w * c[k - j];
            }
            c.push(ck / k as f64);
            s.push(sk / k as f64);
        }
        (Jet::from_coeffs(c), Jet::from_coeffs(s))
    }

    /// Evaluate the truncated series at displacement `h` from the base point.
    pub fn eval(&self, h: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * h + c)
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        let order = self.order().min(rhs.order());
        Jet::from_coeffs((0..=order).map(|k| self.coeffs[k] + rhs.coeffs[k]).collect())
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        let order = self.order().min(rhs.order());
        Jet::from_coeffs((0..=order).map(|k| self.coeffs[k] - rhs.coeffs[k]).collect())
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.mul_jet(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet::from_coeffs(self.coeffs.iter().map(|&c| -c).collect())
    }
}
