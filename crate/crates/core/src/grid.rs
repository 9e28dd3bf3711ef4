//! Uniform grids, complex grid functions and the finite-difference and
//! quadrature primitives shared by every solver.

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Uniform node set on `[y_start, y_end]`, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n_points: usize,
    y_start: f64,
    y_end: f64,
}

impl Grid {
    pub fn new(n_points: usize, y_start: f64, y_end: f64) -> Result<Self> {
        if n_points < 16 || !(y_end > y_start) || !y_start.is_finite() || !y_end.is_finite() {
            return Err(Error::InvalidGrid {
                n_points,
                start: y_start,
                end: y_end,
            });
        }
        Ok(Self {
            n_points,
            y_start,
            y_end,
        })
    }

    /// `[0, 1]` with `n_points` nodes.
    pub fn unit(n_points: usize) -> Result<Self> {
        Self::new(n_points, 0.0, 1.0)
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn y_start(&self) -> f64 {
        self.y_start
    }

    pub fn y_end(&self) -> f64 {
        self.y_end
    }

    pub fn length(&self) -> f64 {
        self.y_end - self.y_start
    }

    pub fn spacing(&self) -> f64 {
        self.length() / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.y_end
        } else {
            self.y_start + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.node(i))
    }

    /// Grid with twice the resolution (`2n - 1` nodes) on the same interval.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points - 1,
            ..*self
        }
    }

    /// Trapezoid rule on the node values.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n_points);
        let n = values.len();
        let inner: f64 = values[1..n - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[n - 1]))
    }

    pub fn trapezoid_c(&self, values: &[C64]) -> C64 {
        debug_assert_eq!(values.len(), self.n_points);
        let n = values.len();
        let inner: C64 = values[1..n - 1].iter().sum();
        (inner + 0.5 * (values[0] + values[n - 1])) * self.spacing()
    }
}

/// A complex grid function.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    values: Vec<C64>,
    grid: Grid,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { values, grid })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            values: vec![C64::new(0.0, 0.0); grid.n_points()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Self {
        Self {
            values: grid.nodes().map(f).collect(),
            grid,
        }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |y| C64::new(f(y), 0.0))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn first(&self) -> C64 {
        self.values[0]
    }

    pub fn last(&self) -> C64 {
        self.values[self.values.len() - 1]
    }

    pub fn check_same_grid(&self, other: &ComplexField) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn map(&self, f: impl Fn(usize, C64) -> C64) -> Self {
        Self {
            values: self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect(),
            grid: self.grid,
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        self.map(|_, v| a * v)
    }

    pub fn conj(&self) -> Self {
        self.map(|_, v| v.conj())
    }

    /// `self + a * other`
    pub fn axpy(&self, a: C64, other: &ComplexField) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| x + a * y)
                .collect(),
            grid: self.grid,
        }
    }

    pub fn sub(&self, other: &ComplexField) -> Self {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `<self, other> = ∫ self · conj(other)` by the trapezoid rule.
    pub fn inner(&self, other: &ComplexField) -> C64 {
        debug_assert_eq!(self.grid, other.grid);
        let prod: Vec<C64> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .collect();
        self.grid.trapezoid_c(&prod)
    }

    pub fn l2_norm(&self) -> f64 {
        self.weighted_l2_norm(|_| 1.0)
    }

    /// `sqrt(∫ w(i) |f|²)` with a per-node weight.
    pub fn weighted_l2_norm(&self, w: impl Fn(usize) -> f64) -> f64 {
        let sq: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| w(i) * v.norm_sqr())
            .collect();
        self.grid.trapezoid(&sq).max(0.0).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// First derivative: centered in the interior, second-order one-sided at the ends.
    pub fn d1(&self) -> Self {
        Self {
            values: d1(&self.values, self.grid.spacing()),
            grid: self.grid,
        }
    }

    /// Second derivative: centered in the interior, second-order one-sided at the ends.
    pub fn d2(&self) -> Self {
        Self {
            values: d2(&self.values, self.grid.spacing()),
            grid: self.grid,
        }
    }
}

pub fn d1(v: &[C64], h: f64) -> Vec<C64> {
    let n = v.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let inv = 1.0 / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) * inv;
    }
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv;
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv;
    out
}

pub fn d2(v: &[C64], h: f64) -> Vec<C64> {
    let n = v.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    let inv = 1.0 / (h * h);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) * inv;
    }
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) * inv;
    out[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) * inv;
    out
}

/// Real-valued centered differences with the same end treatment as [`d1`].
pub fn d1_real(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = vec![0.0; n];
    let inv = 1.0 / (2.0 * h);
    for i in 1..n - 1 {
        out[i] = (v[i + 1] - v[i - 1]) * inv;
    }
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) * inv;
    out[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) * inv;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::unit(15).is_err());
        assert!(Grid::new(32, 1.0, 1.0).is_err());
        let g = Grid::unit(16).unwrap();
        assert!((g.spacing() - 1.0 / 15.0).abs() < 1e-15);
        assert_eq!(g.node(15), 1.0);
    }

    #[test]
    fn trapezoid_integrates_sin_squared() {
        let g = Grid::unit(1025).unwrap();
        let f = ComplexField::from_real_fn(g, |y| (std::f64::consts::PI * y).sin());
        assert!((f.l2_norm().powi(2) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn derivatives_are_second_order_at_the_ends() {
        let errs: Vec<f64> = [65usize, 129]
            .iter()
            .map(|&n| {
                let g = Grid::unit(n).unwrap();
                let f = ComplexField::from_real_fn(g, |y| (2.0 * y).exp());
                let d = f.d2();
                let e0 = (d.first().re - 4.0).abs();
                let e1 = (d.last().re - 4.0 * 2f64.exp()).abs();
                e0.max(e1)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }
}
