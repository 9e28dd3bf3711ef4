//! Shifted elliptic problems for the per-mode stream functions.
//!
//! Variable coefficients: `(-1 + (g(∂/k - it))²) Φ = W`; the constant
//! coefficient version (`g ≡ 1`) defines `Ψ`. Both are discretized with the
//! expanded stencil
//!
//! ```text
//! (g²/k²) φ'' + (g g'/k² - 2it g²/k) φ' + (-1 - it g g'/k - t² g²) φ
//! ```

pub mod solvers;

pub use solvers::{solver_registry, FdDirichlet, PeriodicSpectral, StreamSolver};

use crate::error::{Error, Result};
use crate::grid::{self, ComplexField, Grid, C64, I};
use crate::profiles::{ChannelGeometry, ShearProfile};
use crate::tridiag;

/// Per-node stencil coefficients `a2 φ'' + a1 φ' + a0 φ`.
struct Stencil {
    a2: Vec<f64>,
    a1: Vec<C64>,
    a0: Vec<C64>,
}

impl Stencil {
    fn new(g: &[f64], gp: &[f64], k: f64, t: f64) -> Self {
        let n = g.len();
        let mut a2 = Vec::with_capacity(n);
        let mut a1 = Vec::with_capacity(n);
        let mut a0 = Vec::with_capacity(n);
        for i in 0..n {
            let (g, gp) = (g[i], gp[i]);
            a2.push(g * g / (k * k));
            a1.push(C64::new(g * gp / (k * k), -2.0 * t * g * g / k));
            a0.push(C64::new(-1.0 - t * t * g * g, -t * g * gp / k));
        }
        Self { a2, a1, a0 }
    }
}

fn check_k(k: f64) -> Result<()> {
    if k == 0.0 || !k.is_finite() {
        Err(Error::ZeroWavenumber)
    } else {
        Ok(())
    }
}

/// `(-1 + (g(∂/k - it))²) φ` with one-sided stencils at the two end nodes.
pub fn apply_operator(phi: &ComplexField, k: f64, t: f64, profile: &ShearProfile) -> Result<ComplexField> {
    if phi.grid() != profile.grid() {
        return Err(Error::GridMismatch);
    }
    check_k(k)?;
    let s = Stencil::new(profile.g_values(), profile.g_prime_values(), k, t);
    let h = phi.grid().spacing();
    let d1 = grid::d1(phi.values(), h);
    let d2 = grid::d2(phi.values(), h);
    Ok(phi.map(|i, v| s.a2[i] * d2[i] + s.a1[i] * d1[i] + s.a0[i] * v))
}

fn solve_dirichlet(w: &ComplexField, k: f64, t: f64, g: &[f64], gp: &[f64]) -> Result<ComplexField> {
    check_k(k)?;
    let n = w.len();
    let h = w.grid().spacing();
    let s = Stencil::new(g, gp, k, t);
    let zero = C64::new(0.0, 0.0);
    // unknowns are the interior nodes; the wall values are exactly zero
    let m = n - 2;
    let mut lower = vec![zero; m];
    let mut diag = vec![zero; m];
    let mut upper = vec![zero; m];
    let mut rhs = w.values()[1..n - 1].to_vec();
    let (ih2, i2h) = (1.0 / (h * h), 1.0 / (2.0 * h));
    for j in 0..m {
        let i = j + 1;
        lower[j] = s.a2[i] * ih2 - s.a1[i] * i2h;
        diag[j] = -2.0 * s.a2[i] * ih2 + s.a0[i];
        upper[j] = s.a2[i] * ih2 + s.a1[i] * i2h;
    }
    tridiag::solve(&lower, &diag, &upper, &mut rhs)?;
    let mut values = Vec::with_capacity(n);
    values.push(zero);
    values.extend(rhs);
    values.push(zero);
    ComplexField::new(*w.grid(), values)
}

/// Solves for `Φ` with zero Dirichlet data at both ends of the z-domain.
///
/// The geometry selects the z-domain; `w` and `profile` must live on the
/// matching grid (`[0, 1]` or the truncation `[-Y, Y]`).
pub fn solve_phi(
    w: &ComplexField,
    k: f64,
    t: f64,
    profile: &ShearProfile,
    geometry: &ChannelGeometry,
) -> Result<ComplexField> {
    check_geometry(w.grid(), geometry)?;
    if w.grid() != profile.grid() {
        return Err(Error::GridMismatch);
    }
    solve_dirichlet(w, k, t, profile.g_values(), profile.g_prime_values())
}

/// Constant-coefficient stream function `Ψ` (the `g ≡ 1` problem).
pub fn solve_psi(w: &ComplexField, k: f64, t: f64, geometry: &ChannelGeometry) -> Result<ComplexField> {
    check_geometry(w.grid(), geometry)?;
    let n = w.len();
    solve_dirichlet(w, k, t, &vec![1.0; n], &vec![0.0; n])
}

fn check_geometry(grid: &Grid, geometry: &ChannelGeometry) -> Result<()> {
    let expected = geometry.grid(grid.n_points())?;
    if (grid.y_start() - expected.y_start()).abs() > 1e-12 || (grid.y_end() - expected.y_end()).abs() > 1e-12 {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Homogeneous solutions with `u1 = 1, u2 = 0` at the lower wall and
/// `u1 = 0, u2 = 1` at the upper wall.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousPair {
    pub u1: ComplexField,
    pub u2: ComplexField,
    /// `G(z) = ∫ 1/g` from the lower wall.
    pub g_antiderivative: Vec<f64>,
    pub k: f64,
    pub t: f64,
}

/// Builds `u1, u2` from `e^{±kG + ikt z}`.
///
/// Written as `e^{ikt(z-a)} sinh(|k|(G1-G))/sinh(|k|G1)` and its mirror, which
/// never forms the growing exponential. The `t`-dependence is a pure phase.
pub fn homogeneous_pair(k: f64, t: f64, profile: &ShearProfile) -> Result<HomogeneousPair> {
    check_k(k)?;
    let grid = *profile.grid();
    let g = profile.g_values();
    let h = grid.spacing();
    let mut big_g = Vec::with_capacity(g.len());
    big_g.push(0.0);
    for i in 1..g.len() {
        let prev = big_g[i - 1];
        big_g.push(prev + 0.5 * h * (1.0 / g[i - 1] + 1.0 / g[i]));
    }
    let g1 = *big_g.last().unwrap();
    let kk = k.abs();
    let det = -(-2.0 * kk * g1).exp_m1();
    if det.abs() < 1e-14 {
        return Err(Error::IllConditionedBoundarySystem { det: det.abs() });
    }
    let (a, b) = (grid.y_start(), grid.y_end());
    let n = grid.n_points();
    let mut u1 = Vec::with_capacity(n);
    let mut u2 = Vec::with_capacity(n);
    for (i, z) in grid.nodes().enumerate() {
        let gz = big_g[i];
        // sinh(|k|(G1-G))/sinh(|k|G1) = e^{-|k|G}(1 - e^{-2|k|(G1-G)})/(1 - e^{-2|k|G1})
        let r1 = (-kk * gz).exp() * -(-2.0 * kk * (g1 - gz)).exp_m1() / det;
        let r2 = (-kk * (g1 - gz)).exp() * -(-2.0 * kk * gz).exp_m1() / det;
        u1.push(r1 * (I * k * t * (z - a)).exp());
        u2.push(r2 * (I * k * t * (z - b)).exp());
    }
    Ok(HomogeneousPair {
        u1: ComplexField::new(grid, u1)?,
        u2: ComplexField::new(grid, u2)?,
        g_antiderivative: big_g,
        k,
        t,
    })
}

/// Wall values `(∂Φ(a), ∂Φ(b))` of the solution of the Dirichlet problem with
/// right side `w`, from Green's identity against the homogeneous pair:
///
/// ```text
/// ∂Φ(a) = -(k²/g(a)) <w, u1/g>,   ∂Φ(b) = (k²/g(b)) <w, u2/g>
/// ```
pub fn boundary_dy_phi(
    w: &ComplexField,
    k: f64,
    profile: &ShearProfile,
    pair: &HomogeneousPair,
) -> Result<(C64, C64)> {
    w.check_same_grid(&pair.u1)?;
    if w.grid() != profile.grid() {
        return Err(Error::GridMismatch);
    }
    let g = profile.g_values();
    let n = g.len();
    let v1 = pair.u1.map(|i, v| v / g[i]);
    let v2 = pair.u2.map(|i, v| v / g[i]);
    let k2 = k * k;
    Ok((-(k2 / g[0]) * w.inner(&v1), (k2 / g[n - 1]) * w.inner(&v2)))
}

/// Wall values of `∂²Φ` from the equation itself, given `w` and the wall
/// values of `∂Φ` (where `Φ = 0`).
pub fn boundary_d2y_phi(
    w: &ComplexField,
    k: f64,
    t: f64,
    profile: &ShearProfile,
    dy: (C64, C64),
) -> (C64, C64) {
    let g = profile.g_values();
    let gp = profile.g_prime_values();
    let n = g.len();
    let at = |i: usize, wv: C64, d: C64| {
        let a1 = C64::new(g[i] * gp[i] / (k * k), -2.0 * t * g[i] * g[i] / k);
        (k * k / (g[i] * g[i])) * (wv - a1 * d)
    };
    (at(0, w.first(), dy.0), at(n - 1, w.last(), dy.1))
}

/// `b0·u1 + b1·u2`: the homogeneous correction restoring the wall values of
/// `∂^level Φ` (level 1 or 2).
pub fn h_correction(level: u8, boundary_values: (C64, C64), pair: &HomogeneousPair) -> ComplexField {
    debug_assert!(level == 1 || level == 2);
    pair.u1
        .scale(boundary_values.0)
        .axpy(boundary_values.1, &pair.u2)
}

/// The two sides of the energy identity obtained by testing the equation
/// with `Φ/g`:
///
/// ```text
/// Re<-w, Φ/g> = ∫ |Φ|²/g + g |(∂/k - it)Φ|²
/// ```
///
/// The gradient term uses cell-midpoint differences, the natural pairing of
/// the three-point stencil.
pub fn energy_identity_sides(
    w: &ComplexField,
    phi: &ComplexField,
    k: f64,
    t: f64,
    profile: &ShearProfile,
) -> (f64, f64) {
    let g = profile.g_values();
    let h = phi.grid().spacing();
    let lhs = -w.inner(&phi.map(|i, v| v / g[i])).re;
    let p = phi.values();
    let gradient: f64 = (0..p.len() - 1)
        .map(|i| {
            let d = (p[i + 1] - p[i]) / h;
            let mid = 0.5 * (p[i + 1] + p[i]);
            0.5 * (g[i] + g[i + 1]) * (d / k - I * t * mid).norm_sqr()
        })
        .sum::<f64>()
        * h;
    let rhs = phi.weighted_l2_norm(|i| 1.0 / g[i]).powi(2) + gradient;
    (lhs, rhs)
}

/// `sqrt(∫ |φ|² + |φ'/k - itφ|²)`.
pub fn tilde_h1_norm(phi: &ComplexField, k: f64, t: f64) -> f64 {
    let d = phi.d1();
    let shifted = d.map(|i, v| v / k - I * t * phi.values()[i]);
    (phi.l2_norm().powi(2) + shifted.l2_norm().powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{build_profile, flows::SinePerturbed};
    use std::f64::consts::PI;

    fn couette(n: usize) -> ShearProfile {
        ShearProfile::constant(Grid::unit(n).unwrap(), 0.0, 1.0).unwrap()
    }

    fn sine_profile(n: usize) -> ShearProfile {
        build_profile(&SinePerturbed { amplitude: 0.05 }, Grid::unit(n).unwrap()).unwrap()
    }

    fn max_interior(f: &ComplexField) -> f64 {
        let v = f.values();
        v[1..v.len() - 1].iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn operator_eigenvalue_on_exponentials() {
        let p = couette(1025);
        let (n, k, t) = (2.0 * PI, 1.5, 0.7);
        let phi = ComplexField::from_fn(*p.grid(), |y| (I * n * y).exp());
        let out = apply_operator(&phi, k, t, &p).unwrap();
        let lambda = -(1.0 + (n / k - t).powi(2));
        let err = out.sub(&phi.scale(C64::new(lambda, 0.0)));
        assert!(max_interior(&err) < 1e-4, "{}", max_interior(&err));
        let zero = apply_operator(&ComplexField::zeros(*p.grid()), k, t, &p).unwrap();
        assert_eq!(zero.sup_norm(), 0.0);
    }

    #[test]
    fn exact_homogeneous_solution_is_annihilated() {
        let errs: Vec<f64> = [257usize, 513]
            .iter()
            .map(|&n| {
                let p = sine_profile(n);
                let (k, t) = (2.0, 1.3);
                let pair = homogeneous_pair(k, t, &p).unwrap();
                let phi = ComplexField::from_fn(*p.grid(), |_| C64::new(0.0, 0.0))
                    .map(|i, _| (k * pair.g_antiderivative[i] + I * k * t * p.grid().node(i)).exp());
                max_interior(&apply_operator(&phi, k, t, &p).unwrap())
            })
            .collect();
        assert!(errs[0] / errs[1] > 3.5, "{errs:?}");
    }

    #[test]
    fn couette_closed_forms() {
        let p = couette(1025);
        let geo = ChannelGeometry::finite();
        let w = ComplexField::from_real_fn(*p.grid(), |y| (PI * y).sin());
        let phi = solve_phi(&w, 1.0, 0.0, &p, &geo).unwrap();
        assert!((phi.values()[512].re + 1.0 / (1.0 + PI * PI)).abs() < 1e-6);
        let one = ComplexField::from_real_fn(*p.grid(), |_| 1.0);
        let phi = solve_phi(&one, 1.0, 0.0, &p, &geo).unwrap();
        assert!((phi.values()[512].re + (1.0 - 1.0 / 0.5f64.cosh())).abs() < 1e-6);
        assert_eq!(phi.first(), C64::new(0.0, 0.0));
        assert_eq!(phi.last(), C64::new(0.0, 0.0));
        let psi = solve_psi(&one, 1.0, 0.0, &geo).unwrap();
        assert!(psi.sub(&phi).sup_norm() < 1e-14);
        let z = solve_phi(&ComplexField::zeros(*p.grid()), 1.0, 3.0, &p, &geo).unwrap();
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn solve_and_apply_are_inverse_on_interior() {
        let p = sine_profile(1024);
        let geo = ChannelGeometry::finite();
        let w = ComplexField::from_fn(*p.grid(), |y| C64::new(y * (1.0 - y), (3.0 * y).cos()));
        let phi = solve_phi(&w, 2.0 * PI, 4.0, &p, &geo).unwrap();
        let back = apply_operator(&phi, 2.0 * PI, 4.0, &p).unwrap();
        let mut err = back.sub(&w);
        let n = err.len();
        err.values_mut()[0] = C64::new(0.0, 0.0);
        err.values_mut()[n - 1] = C64::new(0.0, 0.0);
        assert!(err.sup_norm() <= 1e-10 * w.sup_norm(), "{}", err.sup_norm());
    }

    #[test]
    fn energy_identity_holds() {
        let p = sine_profile(1024);
        let geo = ChannelGeometry::finite();
        let w = ComplexField::from_real_fn(*p.grid(), |y| (PI * y).sin() + 0.3 * (3.0 * PI * y).sin());
        for (k, t) in [(1.0, 1.0), (2.0 * PI, 0.5), (4.0 * PI, 0.0)] {
            let phi = solve_phi(&w, k, t, &p, &geo).unwrap();
            let (lhs, rhs) = energy_identity_sides(&w, &phi, k, t, &p);
            assert!((lhs - rhs).abs() <= 1e-6 * rhs, "k={k} t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn homogeneous_pair_boundary_values_and_phase() {
        let p = sine_profile(257);
        for (k, t) in [(1.0, 0.0), (-3.0, 2.5), (0.2, 40.0)] {
            let pair = homogeneous_pair(k, t, &p).unwrap();
            assert!((pair.u1.first() - 1.0).norm() < 1e-12);
            assert!(pair.u1.last().norm() < 1e-12);
            assert!(pair.u2.first().norm() < 1e-12);
            assert!((pair.u2.last() - 1.0).norm() < 1e-12);
            let rest = homogeneous_pair(k, 0.0, &p).unwrap();
            let phased = rest.u1.map(|i, v| v * (I * k * t * p.grid().node(i)).exp());
            assert!(phased.sub(&pair.u1).sup_norm() < 1e-13);
        }
        let c = couette(1025);
        let pair = homogeneous_pair(1.0, 0.0, &c).unwrap();
        let expected = (0.5f64).sinh() / 1f64.sinh();
        assert!((pair.u1.values()[512].re - expected).abs() < 1e-12);
        assert!((expected - 0.44341).abs() < 1e-5);
        let hc = h_correction(1, (C64::new(1.0, 0.0), C64::new(0.0, 0.0)), &pair);
        assert_eq!(hc, pair.u1);
    }

    #[test]
    fn boundary_traces_match_the_closed_form() {
        let p = couette(1024);
        let w = ComplexField::from_real_fn(*p.grid(), |y| (PI * y).sin());
        let pair = homogeneous_pair(1.0, 0.0, &p).unwrap();
        let (d0, d1) = boundary_dy_phi(&w, 1.0, &p, &pair).unwrap();
        let exact = -PI / (1.0 + PI * PI);
        assert!((d0.re - exact).abs() < 1e-6, "{d0}");
        assert!((d1.re + exact).abs() < 1e-6, "{d1}");
        let z = boundary_dy_phi(&ComplexField::zeros(*p.grid()), 1.0, &p, &pair).unwrap();
        assert_eq!(z, (C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
    }

    #[test]
    fn boundary_traces_match_solver_slopes() {
        // variable g, t ≠ 0: difference slope of the solve vs Green's identity
        let geo = ChannelGeometry::finite();
        let errs: Vec<f64> = [257usize, 513]
            .iter()
            .map(|&n| {
                let p = sine_profile(n);
                let (k, t) = (2.0 * PI, 1.7);
                let w = ComplexField::from_fn(*p.grid(), |y| C64::new((2.0 * y).cos(), y));
                let phi = solve_phi(&w, k, t, &p, &geo).unwrap();
                let pair = homogeneous_pair(k, t, &p).unwrap();
                let (d0, d1) = boundary_dy_phi(&w, k, &p, &pair).unwrap();
                let slope = phi.d1();
                (slope.first() - d0).norm().max((slope.last() - d1).norm())
            })
            .collect();
        assert!(errs[1] < 1e-3 && errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn tilde_norm_examples() {
        let g = Grid::unit(2049).unwrap();
        let s = ComplexField::from_real_fn(g, |y| (PI * y).sin());
        assert!((tilde_h1_norm(&s, 1.0, 0.0) - (0.5 + PI * PI / 2.0).sqrt()).abs() < 1e-5);
        let phase = ComplexField::from_fn(g, |y| (I * 3.0 * 2.0 * y).exp());
        assert!((tilde_h1_norm(&phase, 3.0, 2.0) - 1.0).abs() < 1e-5);
        assert_eq!(tilde_h1_norm(&ComplexField::zeros(g), 1.0, 0.0), 0.0);
    }

    #[test]
    fn zero_wavenumber_is_rejected() {
        let p = couette(32);
        let w = ComplexField::zeros(*p.grid());
        assert!(matches!(
            solve_phi(&w, 0.0, 0.0, &p, &ChannelGeometry::finite()),
            Err(Error::ZeroWavenumber)
        ));
    }
}
