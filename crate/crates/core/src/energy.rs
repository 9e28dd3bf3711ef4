//! Time-dependent Fourier weights and the weighted ("ghost") energies built
//! from them.

use serde::{Deserialize, Serialize};

use crate::diagnostics::velocity_mode;
use crate::elliptic::StreamSolver;
use crate::error::{Error, Result};
use crate::evolution::ModeState;
use crate::grid::ComplexField;
use crate::profiles::{ChannelGeometry, ShearProfile};
use crate::registry::Registry;
use crate::spectral::{to_basis, Basis, BasisCoefficients};

/// `⟨x⟩ = sqrt(1 + x²)`.
pub fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightSpec {
    /// `l2` or `h1h2`.
    pub variant: String,
    #[serde(rename = "C")]
    pub c: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for WeightSpec {
    fn default() -> Self {
        Self {
            variant: "l2".into(),
            c: 1.0,
            beta: 0.3,
            gamma: 0.3,
        }
    }
}

impl WeightSpec {
    pub fn l2(c: f64) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }

    pub fn h1h2(beta: f64, gamma: f64) -> Self {
        Self {
            variant: "h1h2".into(),
            beta,
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::Validation(format!("weights.C must be positive, got {}", self.c)));
        }
        if !(self.beta > 0.0 && self.beta < 0.5) {
            return Err(Error::Validation(format!("beta out of (0,1/2): {}", self.beta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 0.5) {
            return Err(Error::Validation(format!("gamma out of (0,1/2): {}", self.gamma)));
        }
        if !(2.0 * self.beta + 2.0 * self.gamma > 1.0) {
            return Err(Error::Validation(format!(
                "need 2 beta + 2 gamma > 1, got {}",
                2.0 * self.beta + 2.0 * self.gamma
            )));
        }
        weight_registry().create(&self.variant, self).map(|_| ())
    }

    pub fn model(&self) -> Result<Box<dyn WeightModel>> {
        weight_registry().create(&self.variant, self)
    }
}

/// A diagonal Fourier weight `A_n(t)`.
pub trait WeightModel: Send + Sync {
    fn name(&self) -> &'static str;

    fn value(&self, n: f64, k: f64, t: f64) -> f64;

    /// Upper bound of `|log A|` over all arguments.
    fn log_bound(&self) -> f64;

    /// Incremental evaluator for a fixed index set, valid for increasing `t`.
    fn table(&self, indices: &[f64], k: f64) -> Box<dyn WeightTable + '_> {
        Box::new(DirectTable {
            model: self,
            indices: indices.to_vec(),
            k,
        })
    }
}

pub trait WeightTable: Send {
    /// Weights at `t` for the table's indices.
    fn values_at(&mut self, t: f64) -> Vec<f64>;
}

struct DirectTable<'a, M: WeightModel + ?Sized> {
    model: &'a M,
    indices: Vec<f64>,
    k: f64,
}

impl<M: WeightModel + ?Sized> WeightTable for DirectTable<'_, M> {
    fn values_at(&mut self, t: f64) -> Vec<f64> {
        self.indices.iter().map(|&n| self.model.value(n, self.k, t)).collect()
    }
}

pub fn weight_registry() -> Registry<dyn WeightModel, WeightSpec> {
    Registry::new("weight variant")
        .register("l2", |s: &WeightSpec| -> Result<Box<dyn WeightModel>> {
            Ok(Box::new(ArctanWeight { c: s.c }))
        })
        .register("h1h2", |s: &WeightSpec| -> Result<Box<dyn WeightModel>> {
            Ok(Box::new(IntegralWeight {
                beta: s.beta,
                gamma: s.gamma,
            }))
        })
}

/// `exp(C arctan(n/k - t))`.
pub struct ArctanWeight {
    pub c: f64,
}

impl WeightModel for ArctanWeight {
    fn name(&self) -> &'static str {
        "l2"
    }

    fn value(&self, n: f64, k: f64, t: f64) -> f64 {
        (self.c * (n / k - t).atan()).exp()
    }

    fn log_bound(&self) -> f64 {
        self.c * std::f64::consts::FRAC_PI_2
    }
}

/// `exp(-[arctan(n/k) - arctan(n/k - t)] - Q)` with
/// `Q = ∫₀ᵗ ⟨τ⟩^{-2γ} ⟨n/k - τ⟩^{-2β} dτ`.
pub struct IntegralWeight {
    pub beta: f64,
    pub gamma: f64,
}

/// Absolute tolerance of the `Q` quadrature.
pub const Q_TOL: f64 = 1e-10;

impl IntegralWeight {
    fn integrand(&self, s: f64) -> impl Fn(f64) -> f64 + '_ {
        move |tau: f64| bracket(tau).powf(-2.0 * self.gamma) * bracket(s - tau).powf(-2.0 * self.beta)
    }

    pub fn q(&self, n: f64, k: f64, t: f64) -> f64 {
        self.q_between(n / k, 0.0, t)
    }

    fn q_between(&self, s: f64, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        adaptive_simpson(&self.integrand(s), a, b, Q_TOL)
    }
}

impl WeightModel for IntegralWeight {
    fn name(&self) -> &'static str {
        "h1h2"
    }

    fn value(&self, n: f64, k: f64, t: f64) -> f64 {
        let s = n / k;
        (-(s.atan() - (s - t).atan()) - self.q(n, k, t)).exp()
    }

    fn log_bound(&self) -> f64 {
        // the arctan part is bounded by π; Q grows at most like t^{1-2γ-2β}·const, finite since 2β+2γ>1
        f64::INFINITY
    }

    fn table(&self, indices: &[f64], k: f64) -> Box<dyn WeightTable + '_> {
        Box::new(IntegralTable {
            model: self,
            s: indices.iter().map(|&n| n / k).collect(),
            t: 0.0,
            q: vec![0.0; indices.len()],
        })
    }
}

/// Accumulates `Q` over successive intervals.
struct IntegralTable<'a> {
    model: &'a IntegralWeight,
    s: Vec<f64>,
    t: f64,
    q: Vec<f64>,
}

impl WeightTable for IntegralTable<'_> {
    fn values_at(&mut self, t: f64) -> Vec<f64> {
        if t < self.t {
            self.t = 0.0;
            self.q.iter_mut().for_each(|q| *q = 0.0);
        }
        for (q, &s) in self.q.iter_mut().zip(&self.s) {
            *q += self.model.q_between(s, self.t, t);
        }
        self.t = t;
        self.s
            .iter()
            .zip(&self.q)
            .map(|(&s, &q)| (-(s.atan() - (s - t).atan()) - q).exp())
            .collect()
    }
}

/// Adaptive Simpson quadrature to an absolute tolerance.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // split long ranges so the first estimate cannot miss narrow features
    let pieces = ((b - a) / 2.0).ceil().max(1.0) as usize;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let xm = 0.5 * (x0 + x1);
            let (f0, fm, f1) = (f(x0), f(xm), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            rec(f, x0, x1, f0, fm, f1, whole, tol / pieces as f64, 48)
        })
        .sum()
}

pub fn weight_value(spec: &WeightSpec, n: f64, k: f64, t: f64) -> Result<f64> {
    Ok(spec.model()?.value(n, k, t))
}

/// `Σ_n A_n(t) |c_n|²` for exponential-basis coefficients.
pub fn ghost_energy(coeffs: &BasisCoefficients, model: &dyn WeightModel, k: f64, t: f64) -> f64 {
    coeffs
        .indices
        .iter()
        .zip(&coeffs.coeffs)
        .map(|(&n, c)| model.value(n, k, t) * c.norm_sqr())
        .sum()
}

fn weighted_sum(coeffs: &BasisCoefficients, weights: &[f64]) -> f64 {
    coeffs.coeffs.iter().zip(weights).map(|(c, w)| w * c.norm_sqr()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergySnapshot {
    pub t: f64,
    pub i0: f64,
    pub i1: f64,
    pub i2: f64,
    pub e2: f64,
    pub l2: f64,
    pub h1: f64,
    pub h2: f64,
    pub v_norm: f64,
    pub v2_norm: f64,
    /// `|∂_y W| = g |∂_z W|` at the lower and upper wall.
    pub dyw_bounds: (f64, f64),
}

/// Computes the weighted and unweighted energies of one mode.
pub struct EnergyMeter<'a> {
    truncation: usize,
    table: Box<dyn WeightTable + 'a>,
}

impl<'a> EnergyMeter<'a> {
    /// Exponential-basis truncation `N = n_points/4`.
    pub fn new(model: &'a dyn WeightModel, grid: &crate::grid::Grid, k: f64) -> Self {
        let truncation = grid.n_points() / 4;
        let probe = to_basis(&ComplexField::zeros(*grid), Basis::Exp, truncation);
        Self {
            truncation: probe.truncation,
            table: model.table(&probe.indices, k),
        }
    }

    pub fn measure(
        &mut self,
        state: &ModeState,
        profile: &ShearProfile,
        geometry: &ChannelGeometry,
        solver: &dyn StreamSolver,
    ) -> Result<EnergySnapshot> {
        let w = &state.w;
        let d1 = w.d1();
        let d2 = w.d2();
        let weights = self.table.values_at(state.t);
        let c0 = to_basis(w, Basis::Exp, self.truncation);
        let c1 = to_basis(&d1, Basis::Exp, self.truncation);
        let c2 = to_basis(&d2, Basis::Exp, self.truncation);
        let (i0, i1, i2) = (weighted_sum(&c0, &weights), weighted_sum(&c1, &weights), weighted_sum(&c2, &weights));
        let (n0, n1, n2) = (w.l2_norm().powi(2), d1.l2_norm().powi(2), d2.l2_norm().powi(2));
        let (v1, v2) = velocity_mode(state, profile, geometry, solver)?;
        let g = profile.g_values();
        let jac = |i: usize| 1.0 / g[i];
        let v2n = v2.weighted_l2_norm(jac);
        let v1n = v1.weighted_l2_norm(jac);
        Ok(EnergySnapshot {
            t: state.t,
            i0,
            i1,
            i2,
            e2: i0 + i1 + i2,
            l2: n0.sqrt(),
            h1: (n0 + n1).sqrt(),
            h2: (n0 + n1 + n2).sqrt(),
            v_norm: (v1n * v1n + v2n * v2n).sqrt(),
            v2_norm: v2n,
            dyw_bounds: (g[0] * d1.first().norm(), g[g.len() - 1] * d1.last().norm()),
        })
    }
}

/// One-shot energy evaluation.
pub fn energy_suite(
    state: &ModeState,
    profile: &ShearProfile,
    geometry: &ChannelGeometry,
    spec: &WeightSpec,
    solver: &dyn StreamSolver,
) -> Result<EnergySnapshot> {
    let model = spec.model()?;
    let mut meter = EnergyMeter::new(model.as_ref(), state.w.grid(), state.k);
    meter.measure(state, profile, geometry, solver)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::FdDirichlet;
    use crate::grid::{Grid, C64};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn arctan_weight_examples() {
        let spec = WeightSpec::l2(1.0);
        assert_eq!(weight_value(&spec, 3.0, 1.5, 2.0).unwrap(), 1.0);
        let far = weight_value(&spec, 0.0, 1.0, 1e12).unwrap();
        assert!((far - (-PI / 2.0).exp()).abs() < 1e-10);
    }

    #[test]
    fn integral_weight_example() {
        let w = IntegralWeight { beta: 0.3, gamma: 0.3 };
        let q = w.q(0.0, 1.0, 1.0);
        // independent composite Gauss-Legendre oracle for ∫₀¹ (1+τ²)^{-0.6}
        let nodes = [(-0.906179845938664, 0.236926885056189), (-0.538469310105683, 0.478628670499366), (0.0, 0.568888888888889), (0.538469310105683, 0.478628670499366), (0.906179845938664, 0.236926885056189)];
        let cells = 200;
        let mut oracle = 0.0;
        for c in 0..cells {
            let (a, b) = (c as f64 / cells as f64, (c + 1) as f64 / cells as f64);
            for (x, wt) in nodes {
                let tau = 0.5 * (a + b) + 0.5 * (b - a) * x;
                oracle += 0.5 * (b - a) * wt * (1.0 + tau * tau).powf(-0.6);
            }
        }
        assert!((q - oracle).abs() < 1e-10, "{q} vs {oracle}");
        assert!((q - 0.860544915290629).abs() < 1e-10);
        let v = w.value(0.0, 1.0, 1.0);
        assert!((v - (-(0.0f64.atan() - (-1.0f64).atan()) - q).exp()).abs() < 1e-15);
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let w = IntegralWeight { beta: 0.3, gamma: 0.3 };
        let idx = [-6.0 * PI, 0.0, 2.0 * PI, 10.0];
        let mut table = w.table(&idx, 2.0);
        for t in [0.0, 0.5, 3.0, 7.25, 20.0] {
            let got = table.values_at(t);
            for (g, &n) in got.iter().zip(&idx) {
                assert!((g - w.value(n, 2.0, t)).abs() < 1e-9, "t={t} n={n}");
            }
        }
    }

    #[test]
    fn integral_weight_is_nonincreasing_on_a_lattice() {
        let w = IntegralWeight { beta: 0.3, gamma: 0.3 };
        for j in -5..=5 {
            let n = 2.0 * PI * j as f64;
            let mut prev = f64::INFINITY;
            for i in 0..=40 {
                let v = w.value(n, 1.0, 0.5 * i as f64);
                assert!(v <= prev + 1e-14);
                prev = v;
            }
        }
    }

    #[test]
    fn ghost_energy_examples() {
        let g = Grid::unit(65).unwrap();
        let model = ArctanWeight { c: 1.0 };
        let zero = to_basis(&ComplexField::zeros(g), Basis::Exp, 16);
        assert_eq!(ghost_energy(&zero, &model, 1.0, 0.0), 0.0);
        let one = to_basis(&ComplexField::from_real_fn(g, |_| 1.0), Basis::Exp, 16);
        assert!((ghost_energy(&one, &model, 1.0, 0.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn validation_messages() {
        let s = WeightSpec {
            beta: 0.6,
            ..WeightSpec::default()
        };
        assert!(s.validate().unwrap_err().to_string().contains("beta out of (0,1/2)"));
        let s = WeightSpec::h1h2(0.2, 0.2);
        assert!(s.validate().is_err());
        assert!(WeightSpec::default().validate().is_ok());
    }

    #[test]
    fn snapshot_for_couette_sine() {
        let g = Grid::unit(1025).unwrap();
        let p = ShearProfile::constant(g, 0.0, 1.0).unwrap();
        let geo = ChannelGeometry::finite();
        let state = ModeState::new(1.0, 0.0, ComplexField::from_real_fn(g, |y| (PI * y).sin())).unwrap();
        let snap = energy_suite(&state, &p, &geo, &WeightSpec::default(), &FdDirichlet).unwrap();
        assert!((snap.v2_norm - (0.5f64).sqrt() / (1.0 + PI * PI)).abs() < 1e-5);
        // derivative norm ratio in physical space
        assert!(((snap.h1 * snap.h1 - snap.l2 * snap.l2) / (snap.l2 * snap.l2) - PI * PI).abs() < 1e-4);
        let zero = ModeState::new(1.0, 0.0, ComplexField::zeros(g)).unwrap();
        let z = energy_suite(&zero, &p, &geo, &WeightSpec::default(), &FdDirichlet).unwrap();
        assert_eq!(z, EnergySnapshot::default());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn comparability_on_random_fields(seed in proptest::collection::vec(-1.0f64..1.0, 24), t in 0.0f64..30.0) {
            let g = Grid::unit(129).unwrap();
            let f = ComplexField::from_fn(g, |y| {
                (0..12).map(|j| C64::new(seed[2 * j], seed[2 * j + 1]) * (C64::new(0.0, 2.0 * PI * (j as f64 - 6.0) * y)).exp()).sum()
            });
            let c = to_basis(&f, Basis::Exp, 32);
            let e = ghost_energy(&c, &ArctanWeight { c: 1.0 }, 1.0, t);
            let norm = f.l2_norm().powi(2);
            prop_assume!(norm > 1e-6);
            prop_assert!(e / norm >= (-PI).exp() && e / norm <= PI.exp());
        }

        #[test]
        fn ghost_energy_is_quadratic(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = Grid::unit(65).unwrap();
            let f = ComplexField::from_fn(g, |y| C64::new(y.sin(), (3.0 * y).cos()));
            let s = C64::new(a, b);
            let model = ArctanWeight { c: 1.0 };
            let e1 = ghost_energy(&to_basis(&f, Basis::Exp, 16), &model, 1.0, 2.0);
            let e2 = ghost_energy(&to_basis(&f.scale(s), Basis::Exp, 16), &model, 1.0, 2.0);
            prop_assert!((e2 - s.norm_sqr() * e1).abs() <= 1e-12 * (1.0 + e2));
        }
    }
}
