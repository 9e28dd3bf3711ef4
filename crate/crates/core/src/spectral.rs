//! Basis expansions on a channel interval and the stream-function
//! coefficients `<Ψ[b_n], b_m>` of the exponential and sine families.
//!
//! `Ψ[R]` here solves `(-k² + (∂ - ikt)²) Ψ = R` with zero Dirichlet data on
//! `[0, 1]`, which is `1/k²` times the solution of the scaled problem handled
//! by [`crate::elliptic::solve_psi`].

use std::cell::RefCell;

use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::elliptic::solve_psi;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, Grid, C64, I};
use crate::profiles::ChannelGeometry;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    /// `e^{in(y-a)}/√ℓ`, `n ∈ (2π/ℓ)ℤ`.
    Exp,
    /// `sin(n(y-a))`, `n ∈ (π/ℓ)ℕ`, coefficients normalized by `∫ sin² = ℓ/2`.
    Sin,
}

impl Basis {
    pub fn name(&self) -> &'static str {
        match self {
            Basis::Exp => "exp",
            Basis::Sin => "sin",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisCoefficients {
    pub basis: Basis,
    pub truncation: usize,
    /// Interval start and length.
    pub origin: f64,
    pub length: f64,
    /// Frequencies `n`, aligned with `coeffs`.
    pub indices: Vec<f64>,
    pub coeffs: Vec<C64>,
    /// `|‖f‖² - coefficient norm²| / ‖f‖²` (0 for the zero field).
    pub parseval_gap: f64,
}

impl BasisCoefficients {
    /// `Σ |c|²` in the normalization where it approximates `‖f‖²`.
    pub fn norm_sqr(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        match self.basis {
            Basis::Exp => s,
            Basis::Sin => 0.5 * self.length * s,
        }
    }

    /// Evaluates the truncated expansion on `grid`.
    pub fn synthesize(&self, grid: Grid) -> ComplexField {
        let (a, l) = (self.origin, self.length);
        ComplexField::from_fn(grid, |y| {
            self.indices
                .iter()
                .zip(&self.coeffs)
                .map(|(&n, &c)| match self.basis {
                    Basis::Exp => c * (I * n * (y - a)).exp() / l.sqrt(),
                    Basis::Sin => c * (n * (y - a)).sin(),
                })
                .sum()
        })
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Coefficients by trapezoid quadrature against the conjugated basis.
///
/// Exponential coefficients use `|n| ≤ N·2π/ℓ` (clamped below the grid
/// Nyquist limit) and are computed with one FFT: the trapezoid rule on a
/// periodic integrand is a DFT with the two end samples averaged. Sine
/// coefficients use `n = jπ/ℓ`, `j = 1..=N`.
pub fn to_basis(field: &ComplexField, basis: Basis, truncation: usize) -> BasisCoefficients {
    let grid = *field.grid();
    let (a, l, h) = (grid.y_start(), grid.length(), grid.spacing());
    let m = grid.n_points() - 1;
    let vals = field.values();
    let (indices, coeffs, truncation) = match basis {
        Basis::Exp => {
            let n_max = truncation.min((m - 1) / 2);
            let mut buf: Vec<C64> = vals[..m].to_vec();
            buf[0] = 0.5 * (vals[0] + vals[m]);
            PLANNER.with(|p| p.borrow_mut().plan_fft_forward(m).process(&mut buf));
            let scale = h / l.sqrt();
            let mut idx = Vec::with_capacity(2 * n_max + 1);
            let mut cs = Vec::with_capacity(2 * n_max + 1);
            for j in -(n_max as i64)..=(n_max as i64) {
                let slot = if j >= 0 { j as usize } else { (m as i64 + j) as usize };
                idx.push(2.0 * std::f64::consts::PI * j as f64 / l);
                cs.push(buf[slot] * scale);
            }
            (idx, cs, n_max)
        }
        Basis::Sin => {
            let mut idx = Vec::with_capacity(truncation);
            let mut cs = Vec::with_capacity(truncation);
            let ys: Vec<f64> = grid.nodes().collect();
            for j in 1..=truncation {
                let n = std::f64::consts::PI * j as f64 / l;
                let prod: Vec<C64> = vals
                    .iter()
                    .zip(&ys)
                    .map(|(v, &y)| v * (n * (y - a)).sin())
                    .collect();
                idx.push(n);
                cs.push(grid.trapezoid_c(&prod) * (2.0 / l));
            }
            (idx, cs, truncation)
        }
    };
    let mut out = BasisCoefficients {
        basis,
        truncation,
        origin: a,
        length: l,
        indices,
        coeffs,
        parseval_gap: 0.0,
    };
    let norm = field.l2_norm().powi(2);
    if norm > 0.0 {
        out.parseval_gap = (norm - out.norm_sqr()).abs() / norm;
    }
    out
}

/// `∫₀¹ e^{zy} dy = (e^z - 1)/z`, with a series near 0.
fn exp_integral(z: C64) -> C64 {
    if z.norm() < 0.1 {
        // 1 + z/2 + z²/6 + ... up to z^9/10!
        let mut term = C64::new(1.0, 0.0);
        let mut sum = term;
        for j in 2..=11 {
            term = term * z / j as f64;
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

/// `∫₀¹ e^{zy} sin(my) dy`.
fn exp_sin_integral(z: C64, m: f64) -> C64 {
    (exp_integral(z + I * m) - exp_integral(z - I * m)) / (2.0 * I)
}

fn d_denom(k: f64, x: f64) -> f64 {
    k * k + x * x
}

/// Solves `α + β = p0`, `α e^{k+ikt} + β e^{-k+ikt} = p1` without forming
/// the growing exponential.
fn homogeneous_weights(k: f64, t: f64, p0: C64, p1: C64) -> Result<(C64, C64)> {
    // multiply the second row by e^{-k-ikt}
    let e2 = (-2.0 * k.abs()).exp();
    let ph = (-I * k * t).exp();
    let det = 1.0 - e2;
    if det.abs() < 1e-14 {
        return Err(Error::IllConditionedBoundarySystem { det: det.abs() });
    }
    let (kk, sign) = (k.abs(), k.signum());
    // with κ = |k|: rows (1, 1) and (e^{κ}, e^{-κ})·e^{ikt}; for k < 0 the roles of α, β swap
    let ek = (-kk).exp();
    let q = p1 * ph * ek; // p1 e^{-κ - ikt}
    // α_κ (coefficient of e^{κ y}) and β_κ
    let a_k = (q - p0 * e2) / det;
    let b_k = (p0 - q) / det;
    Ok(if sign > 0.0 { (a_k, b_k) } else { (b_k, a_k) })
}

/// Provenance-tagged value of `<Ψ[b_n], b_m>`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRecord {
    pub basis: Basis,
    pub n: f64,
    pub m: f64,
    pub k: f64,
    pub t: f64,
    /// Exact construction (particular + homogeneous, closed-form integrals).
    pub analytic: C64,
    /// The printed display formula, evaluated as written.
    pub printed: C64,
    /// Quadrature against the finite-difference solution (Richardson-extrapolated).
    pub numeric: C64,
    pub disc_an_num: f64,
    pub disc_an_printed: f64,
    /// `n = m` in the sine family: the printed `(n² - m²)` term is dropped.
    pub degenerate: bool,
}

impl CoefficientRecord {
    /// Maximum pairwise relative difference among the three values.
    pub fn discrepancy(&self) -> f64 {
        let scale = self.diagonal_scale();
        relative(self.analytic, self.numeric, scale)
            .max(relative(self.analytic, self.printed, scale))
            .max(relative(self.printed, self.numeric, scale))
    }

    /// Magnitude of the diagonal multiplier at `n`; the reference scale for
    /// structural zeros.
    pub fn diagonal_scale(&self) -> f64 {
        diagonal_scale(self.basis, self.n, self.k, self.t)
    }
}

/// Magnitude of the diagonal multiplier at `n`.
fn diagonal_scale(basis: Basis, n: f64, k: f64, t: f64) -> f64 {
    match basis {
        Basis::Exp => 1.0 / d_denom(k, n - k * t),
        Basis::Sin => 1.0 / d_denom(k, n - k * t).min(d_denom(k, n + k * t)),
    }
}

/// Values below this fraction of the diagonal scale count as structural
/// zeros: the finite-difference oracle resolves about 1e-10 of that scale.
pub const STRUCTURAL_ZERO: f64 = 1e-9;

/// `|a - b| / max(|a|, |b|)`; when both are structural zeros relative to
/// `scale`, the difference is measured against `scale` instead.
pub fn relative(a: C64, b: C64, scale: f64) -> f64 {
    let m = a.norm().max(b.norm());
    let floor = STRUCTURAL_ZERO * scale;
    if m <= floor {
        (a - b).norm() / scale
    } else {
        (a - b).norm() / m
    }
}

fn parity(x: f64) -> f64 {
    if (x / std::f64::consts::PI).round() as i64 % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn same_index(n: f64, m: f64) -> bool {
    (n - m).abs() < 1e-9 * (1.0 + n.abs())
}

/// Exact `<Ψ[e^{iny}], e^{imy}>` on `[0, 1]` for `n, m ∈ 2πℤ`.
pub fn exp_analytic(n: f64, m: f64, k: f64, t: f64) -> Result<C64> {
    let dn = d_denom(k, n - k * t);
    // Ψ = -e^{iny}/D_n + α e^{(k+ikt)y} + β e^{(-k+ikt)y}, zero at both walls
    let p = C64::new(1.0 / dn, 0.0);
    let (alpha, beta) = homogeneous_weights(k, t, p, p)?;
    let mut v = alpha * exp_integral(C64::new(k, k * t - m)) + beta * exp_integral(C64::new(-k, k * t - m));
    if same_index(n, m) {
        v -= 1.0 / dn;
    } else {
        v -= exp_integral(I * (n - m)) / dn;
    }
    Ok(v)
}

/// The exponential-basis display `δ/D_n + k(a-b)/(D_m D_n)` with
/// `(a, b)` solving `[[e^{k+ikt}, e^{-k+ikt}], [1, 1]] (a, b) = -(1, 1)`.
pub fn exp_printed(n: f64, m: f64, k: f64, t: f64) -> Result<C64> {
    let dn = d_denom(k, n - k * t);
    let dm = d_denom(k, m - k * t);
    let minus_one = C64::new(-1.0, 0.0);
    let (a, b) = homogeneous_weights(k, t, minus_one, minus_one)?;
    let delta = if same_index(n, m) { 1.0 } else { 0.0 };
    Ok(delta / dn + k * (a - b) / (dm * dn))
}

/// Exact `2 <Ψ[sin(ny)], sin(my)>` on `[0, 1]` for `n, m ∈ πℕ`.
pub fn sin_analytic(n: f64, m: f64, k: f64, t: f64) -> Result<C64> {
    let dp = d_denom(k, n - k * t);
    let dm = d_denom(k, n + k * t);
    // particular: -(1/2i)[e^{iny}/D₊ - e^{-iny}/D₋]
    let pre = -1.0 / (2.0 * I);
    let part = |y: f64| pre * ((I * n * y).exp() / dp - (-I * n * y).exp() / dm);
    let (alpha, beta) = homogeneous_weights(k, t, -part(0.0), -part(1.0))?;
    let v = pre * (exp_sin_integral(I * n, m) / dp - exp_sin_integral(-I * n, m) / dm)
        + alpha * exp_sin_integral(C64::new(k, k * t), m)
        + beta * exp_sin_integral(C64::new(-k, k * t), m);
    Ok(2.0 * v)
}

/// The `d` coefficient of the sine-basis display.
pub fn sin_printed_d(n: f64, m: f64, k: f64, t: f64) -> C64 {
    let (pn, pm) = (parity(n), parity(m));
    let s = pn * pm;
    let sh = k.exp() - (-k).exp();
    let c = -(s - 1.0) + 2.0 * (s * (-k).exp() + k.exp()) / sh;
    C64::new(c, 0.0) + 2.0 * (pm * (I * k * t).exp() - pn * (-I * k * t).exp()) / sh
}

/// The sine-basis display, evaluated as written. Returns the value and whether
/// the `1/(n² - m²)` term had to be dropped (`n = m`, where its prefactor
/// `(-1)^{n+m} - 1` vanishes).
pub fn sin_printed(n: f64, m: f64, k: f64, t: f64) -> (C64, bool) {
    let kt = k * t;
    let inv = |x: f64| 1.0 / d_denom(k, x);
    let s = parity(n) * parity(m);
    let degenerate = same_index(n, m);
    let mut v = C64::new(0.0, 0.0);
    if degenerate {
        v += inv(n - kt) + inv(n + kt);
    }
    v += sin_printed_d(n, m, k, t) * k * (inv(kt + n) - inv(kt - n)) * (inv(kt + m) - inv(kt - m));
    if !degenerate {
        let (k2, k4, t2) = (k * k, k.powi(4), t * t);
        let nm2 = m * m + n * n;
        let num = k4 * t2 * t2 + 2.0 * k4 * t2 + 2.0 * k4 - 2.0 * k2 * t2 * nm2 + 2.0 * k2 * nm2 + 2.0 * m * m * n * n;
        let den = d_denom(k, kt + m) * d_denom(k, kt - m) * d_denom(k, kt + n) * d_denom(k, kt - n) * (n * n - m * m);
        v += I * (s - 1.0) * n * m * kt * num / den;
    }
    (v, degenerate)
}

/// Finite-difference responses `Ψ[b_n]` on a grid and its refinement.
struct NumericResponse {
    coarse: ComplexField,
    fine: ComplexField,
}

impl NumericResponse {
    fn new(basis: Basis, n: f64, k: f64, t: f64, n_points: usize) -> Result<Self> {
        let geo = ChannelGeometry::finite();
        let solve = |grid: Grid| -> Result<ComplexField> {
            let rhs = match basis {
                Basis::Exp => ComplexField::from_fn(grid, |y| (I * n * y).exp()),
                Basis::Sin => ComplexField::from_real_fn(grid, |y| (n * y).sin()),
            };
            Ok(solve_psi(&rhs, k, t, &geo)?.scale(C64::new(1.0 / (k * k), 0.0)))
        };
        let grid = Grid::unit(n_points)?;
        Ok(Self {
            coarse: solve(grid)?,
            fine: solve(grid.refined())?,
        })
    }

    fn project(&self, basis: Basis, m: f64) -> C64 {
        let one = |psi: &ComplexField| {
            let grid = psi.grid();
            let prod: Vec<C64> = psi
                .values()
                .iter()
                .zip(grid.nodes())
                .map(|(v, y)| match basis {
                    Basis::Exp => v * (-I * m * y).exp(),
                    Basis::Sin => v * (2.0 * (m * y).sin()),
                })
                .collect();
            grid.trapezoid_c(&prod)
        };
        // both the stencil and the quadrature have h² expansions
        (4.0 * one(&self.fine) - one(&self.coarse)) / 3.0
    }
}

/// Verifies closed-form coefficients against the finite-difference oracle.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientVerifier {
    pub n_points: usize,
}

impl CoefficientVerifier {
    pub fn new(n_points: usize) -> Self {
        Self { n_points }
    }

    pub fn exp_coeff(&self, n: f64, m: f64, k: f64, t: f64) -> Result<CoefficientRecord> {
        let resp = NumericResponse::new(Basis::Exp, n, k, t, self.n_points)?;
        self.record(Basis::Exp, &resp, n, m, k, t)
    }

    pub fn sin_coeff(&self, n: f64, m: f64, k: f64, t: f64) -> Result<CoefficientRecord> {
        let resp = NumericResponse::new(Basis::Sin, n, k, t, self.n_points)?;
        self.record(Basis::Sin, &resp, n, m, k, t)
    }

    fn record(&self, basis: Basis, resp: &NumericResponse, n: f64, m: f64, k: f64, t: f64) -> Result<CoefficientRecord> {
        if k == 0.0 {
            return Err(Error::ZeroWavenumber);
        }
        let (analytic, printed, degenerate) = match basis {
            Basis::Exp => (exp_analytic(n, m, k, t)?, exp_printed(n, m, k, t)?, false),
            Basis::Sin => {
                let (p, d) = sin_printed(n, m, k, t);
                (sin_analytic(n, m, k, t)?, p, d)
            }
        };
        let numeric = resp.project(basis, m);
        let scale = diagonal_scale(basis, n, k, t);
        Ok(CoefficientRecord {
            basis,
            n,
            m,
            k,
            t,
            analytic,
            printed,
            numeric,
            disc_an_num: relative(analytic, numeric, scale),
            disc_an_printed: relative(analytic, printed, scale),
            degenerate,
        })
    }

    /// All `(n, m)` pairs for the basis indices `j ∈ index_range` (`n = 2πj`
    /// or `πj`), over every `k` and `t`. One finite-difference solve pair per
    /// `(n, k, t)`, shared by all `m`.
    pub fn coefficient_sweep(
        &self,
        basis: Basis,
        k_values: &[f64],
        t_grid: &[f64],
        index_range: &[i64],
    ) -> Result<(Vec<CoefficientRecord>, SweepSummary)> {
        let step = match basis {
            Basis::Exp => 2.0 * std::f64::consts::PI,
            Basis::Sin => std::f64::consts::PI,
        };
        let mut jobs = Vec::new();
        for &k in k_values {
            for &t in t_grid {
                for &j in index_range {
                    jobs.push((k, t, j));
                }
            }
        }
        let blocks: Vec<Result<Vec<CoefficientRecord>>> = jobs
            .par_iter()
            .map(|&(k, t, j)| {
                let n = step * j as f64;
                let resp = NumericResponse::new(basis, n, k, t, self.n_points)?;
                index_range
                    .iter()
                    .map(|&i| self.record(basis, &resp, n, step * i as f64, k, t))
                    .collect()
            })
            .collect();
        let mut records = Vec::new();
        for b in blocks {
            records.extend(b?);
        }
        let summary = SweepSummary::of(&records);
        Ok((records, summary))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepSummary {
    pub count: usize,
    pub max_an_num: f64,
    pub max_an_printed: f64,
    pub degenerate: usize,
}

impl SweepSummary {
    pub fn of(records: &[CoefficientRecord]) -> Self {
        Self {
            count: records.len(),
            max_an_num: records.iter().map(|r| r.disc_an_num).fold(0.0, f64::max),
            max_an_printed: records.iter().map(|r| r.disc_an_printed).fold(0.0, f64::max),
            degenerate: records.iter().filter(|r| r.degenerate).count(),
        }
    }
}
