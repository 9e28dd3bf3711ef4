//! Truncated Taylor series ("jets") for exact derivatives of closed-form
//! shear profiles and of their inverses.
//!
//! A `Jet` stores `c[j] = f^(j)(x0) / j!` for `j = 0..=order`.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    c: Vec<f64>,
}

impl Jet {
    pub fn constant(v: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = v;
        Self { c }
    }

    /// The independent variable expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut c = vec![0.0; order + 1];
        c[0] = x0;
        if order >= 1 {
            c[1] = 1.0;
        }
        Self { c }
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        assert!(!c.is_empty());
        Self { c }
    }

    pub fn order(&self) -> usize {
        self.c.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// `j`-th derivative at the expansion point.
    pub fn derivative(&self, j: usize) -> f64 {
        if j > self.order() {
            return 0.0;
        }
        self.c[j] * factorial(j)
    }

    /// Series of `f'` (one order shorter).
    pub fn differentiate(&self) -> Self {
        if self.order() == 0 {
            return Self::constant(0.0, 0);
        }
        Self {
            c: (1..self.c.len()).map(|j| j as f64 * self.c[j]).collect(),
        }
    }

    fn integrate_from(&self, c0: f64) -> Self {
        let mut c = Vec::with_capacity(self.c.len() + 1);
        c.push(c0);
        for (j, v) in self.c.iter().enumerate() {
            c.push(v / (j + 1) as f64);
        }
        Self { c }
    }

    fn truncate(mut self, order: usize) -> Self {
        self.c.resize(order + 1, 0.0);
        self
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            c: self.c.iter().map(|v| a * v).collect(),
        }
    }

    pub fn exp(&self) -> Self {
        let n = self.c.len();
        let mut b = vec![0.0; n];
        b[0] = self.c[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * b[k - j]).sum();
            b[k] = s / k as f64;
        }
        Self { c: b }
    }

    pub fn ln(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        let mut b = vec![0.0; n];
        b[0] = a0.ln();
        for k in 1..n {
            let s: f64 = (1..k).map(|j| j as f64 * b[j] * self.c[k - j]).sum();
            b[k] = (self.c[k] - s / k as f64) / a0;
        }
        Self { c: b }
    }

    /// `(sin, cos)` of the series.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.c[0].sin();
        c[0] = self.c[0].cos();
        for k in 1..n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * self.c[j] * c[k - j];
                cc += j as f64 * self.c[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = -cc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    pub fn sinh_cosh(&self) -> (Self, Self) {
        let n = self.c.len();
        let mut s = vec![0.0; n];
        let mut c = vec![0.0; n];
        s[0] = self.c[0].sinh();
        c[0] = self.c[0].cosh();
        for k in 1..n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * self.c[j] * c[k - j];
                cc += j as f64 * self.c[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Self { c: s }, Self { c })
    }

    /// `self^p` for a constant exponent; requires a positive constant term
    /// unless `p` is a non-negative integer.
    pub fn powf(&self, p: f64) -> Self {
        if p.fract() == 0.0 && (0.0..=16.0).contains(&p) {
            let mut out = Self::constant(1.0, self.order());
            for _ in 0..p as usize {
                out = &out * self;
            }
            return out;
        }
        let n = self.c.len();
        let a0 = self.c[0];
        let mut b = vec![0.0; n];
        b[0] = a0.powf(p);
        for k in 1..n {
            let s: f64 = (1..=k)
                .map(|j| (p * j as f64 - (k - j) as f64) * self.c[j] * b[k - j])
                .sum();
            b[k] = s / (k as f64 * a0);
        }
        Self { c: b }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn atan(&self) -> Self {
        if self.order() == 0 {
            return Self::constant(self.c[0].atan(), 0);
        }
        let one = Self::constant(1.0, self.order());
        let d = &self.differentiate() / &(&one + &(self * self)).truncate(self.order() - 1);
        d.integrate_from(self.c[0].atan())
    }

    pub fn tanh(&self) -> Self {
        let (s, c) = self.sinh_cosh();
        &s / &c
    }

    /// `outer(self)` where `outer` is given as a series in its own
    /// expansion variable and `self` has zero constant term.
    pub fn compose_into(&self, outer: &Jet) -> Jet {
        let order = self.order().min(outer.order());
        let inner = Jet {
            c: {
                let mut c = self.c.clone();
                c[0] = 0.0;
                c
            },
        }
        .truncate(order);
        let mut acc = Jet::constant(outer.c[order], order);
        for j in (0..order).rev() {
            acc = &acc * &inner;
            acc.c[0] += outer.c[j];
        }
        acc
    }

    /// Inverse series: given `self(x0 + e) = y0 + a1 e + ...` with `a1 != 0`,
    /// returns `e(d)` such that `self(x0 + e(d)) = y0 + d`, expanded in `d`.
    pub fn reverted(&self) -> Jet {
        let order = self.order();
        let a1 = self.c[1];
        let mut e = Jet::constant(0.0, order);
        if order >= 1 {
            e.c[1] = 1.0 / a1;
        }
        // each sweep fixes one more coefficient
        for _ in 1..order {
            // higher part of self composed with e
            let mut higher = self.clone();
            higher.c[0] = 0.0;
            higher.c[1] = 0.0;
            let h = e.compose_into(&higher);
            let mut next = h.scale(-1.0 / a1);
            next.c[1] += 1.0 / a1;
            next.c[0] = 0.0;
            e = next;
        }
        e
    }
}

fn factorial(j: usize) -> f64 {
    (1..=j).map(|v| v as f64).product()
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet {
            c: (0..n).map(|j| self.c[j] + o.c[j]).collect(),
        }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet {
            c: (0..n).map(|j| self.c[j] - o.c[j]).collect(),
        }
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        Jet {
            c: (0..n)
                .map(|k| (0..=k).map(|j| self.c[j] * o.c[k - j]).sum())
                .collect(),
        }
    }
}

impl Div for &Jet {
    type Output = Jet;
    fn div(self, o: &Jet) -> Jet {
        let n = self.c.len().min(o.c.len());
        let mut q = vec![0.0; n];
        for k in 0..n {
            let s: f64 = (1..=k).map(|j| o.c[j] * q[k - j]).sum();
            q[k] = (self.c[k] - s) / o.c[0];
        }
        Jet { c: q }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}
