//! Velocity recovery, rate fits, the quadratic consistency term and run
//! summaries.

use std::collections::BTreeMap;

use crate::elliptic::StreamSolver;
use crate::error::{Error, Result};
use crate::evolution::{scattering_profile, EvolutionHistory, ModeState};
use crate::grid::{ComplexField, C64, I};
use crate::profiles::{ChannelGeometry, ShearProfile};

/// `(V̂1, V̂2)` with `V̂2 = (i/k) Φ` and `V̂1 = -(g/k)(∂/k - it) Φ`.
pub fn velocity_mode(
    state: &ModeState,
    profile: &ShearProfile,
    geometry: &ChannelGeometry,
    solver: &dyn StreamSolver,
) -> Result<(ComplexField, ComplexField)> {
    let (k, t) = (state.k, state.t);
    let phi = solver.solve(&state.w, k, t, profile, geometry)?;
    let dphi = phi.d1();
    let g = profile.g_values();
    let v2 = phi.scale(I / k);
    let v1 = phi.map(|i, p| -(g[i] / k) * (dphi.values()[i] / k - I * t * p));
    Ok((v1, v2))
}

/// Full and vertical velocity norms over a set of modes, in the physical
/// measure `dy = dz / g`.
pub fn physical_norms(
    modes: &[ModeState],
    profile: &ShearProfile,
    geometry: &ChannelGeometry,
    solver: &dyn StreamSolver,
) -> Result<(f64, f64)> {
    let g = profile.g_values();
    let (mut full, mut vertical) = (0.0, 0.0);
    for m in modes {
        let (v1, v2) = velocity_mode(m, profile, geometry, solver)?;
        let a = v1.weighted_l2_norm(|i| 1.0 / g[i]).powi(2);
        let b = v2.weighted_l2_norm(|i| 1.0 / g[i]).powi(2);
        full += a + b;
        vertical += b;
    }
    Ok((full.sqrt(), vertical.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub exponent: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFit {
    pub alpha: f64,
    pub beta: f64,
    pub r_squared: f64,
}

pub const MIN_FIT_SAMPLES: usize = 8;

/// Least squares `y = a + b x`; returns `(a, b, r²)`.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    (a, b, r2)
}

fn window_samples(series: &[(f64, f64)], window: (f64, f64), positive: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut ts = Vec::new();
    let mut vs = Vec::new();
    for &(t, v) in series.iter().filter(|(t, _)| *t >= window.0 && *t <= window.1) {
        if positive && !(v > 0.0) {
            return Err(Error::NonPositiveValue { t, value: v });
        }
        ts.push(t.ln());
        vs.push(v);
    }
    if ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientSamples { found: ts.len() });
    }
    Ok((ts, vs))
}

/// `log v = intercept + exponent · log t` over the window.
pub fn fit_power_law(series: &[(f64, f64)], window: (f64, f64)) -> Result<RateFit> {
    let (lt, vs) = window_samples(series, window, true)?;
    let lv: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    let (a, b, r2) = least_squares(&lt, &lv);
    Ok(RateFit {
        exponent: b,
        intercept: a,
        r_squared: r2,
        window,
    })
}

/// `v = alpha + beta · log t` over the window.
pub fn fit_log_growth(series: &[(f64, f64)], window: (f64, f64)) -> Result<LogFit> {
    let (lt, vs) = window_samples(series, window, false)?;
    let (a, b, r2) = least_squares(&lt, &vs);
    Ok(LogFit {
        alpha: a,
        beta: b,
        r_squared: r2,
    })
}

/// Predicted boundary log-slopes of `∂W(t, y0)` for data with wall value
/// `omega0_wall`: `(f ω0 / (k g²), -f ω0 / g²)`. The first is the slope
/// from the asymptotic trace formula read literally; the second follows
/// from the boundary trace of the solver's normalization.
pub fn blowup_slopes(f_wall: f64, g_wall: f64, omega0_wall: f64, k: f64) -> (f64, f64) {
    let base = f_wall * omega0_wall / (g_wall * g_wall);
    (base / k, -base)
}

/// `‖∇⊥φ · ∇W‖` over output modes `|k| ≤ max_k`, with `φ = Φ/k²` and the
/// plain gradients `(∂x, ∂y) → (ik, ∂z)`. All modes share the clock `t`.
pub fn consistency_term(
    modes: &[ModeState],
    profile: &ShearProfile,
    geometry: &ChannelGeometry,
    solver: &dyn StreamSolver,
    max_k: f64,
) -> Result<f64> {
    struct Parts {
        k: f64,
        phi: ComplexField,
        dphi: ComplexField,
        w: ComplexField,
        dw: ComplexField,
    }
    let parts = modes
        .iter()
        .map(|m| {
            let phi = solver.solve(&m.w, m.k, m.t, profile, geometry)?.scale(C64::new(1.0 / (m.k * m.k), 0.0));
            Ok(Parts {
                k: m.k,
                dphi: phi.d1(),
                phi,
                w: m.w.clone(),
                dw: m.w.d1(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    // key output modes on a rounded wavenumber so sums land in one bucket
    let key = |k: f64| (k * 1e9).round() as i64;
    let mut out: BTreeMap<i64, ComplexField> = BTreeMap::new();
    for a in &parts {
        for b in &parts {
            let k = a.k + b.k;
            if k.abs() > max_k * (1.0 + 1e-12) {
                continue;
            }
            // -∂yφ ∂xW + ∂xφ ∂yW
            let term = a.phi.map(|i, _| {
                -a.dphi.values()[i] * (I * b.k * b.w.values()[i]) + I * a.k * a.phi.values()[i] * b.dw.values()[i]
            });
            out.entry(key(k))
                .and_modify(|acc| *acc = acc.axpy(C64::new(1.0, 0.0), &term))
                .or_insert(term);
        }
    }
    Ok(out.values().map(|f| f.l2_norm().powi(2)).sum::<f64>().sqrt())
}

/// Tolerances applied by [`stability_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportTolerances {
    pub h2_ratio_max: f64,
    pub monotone_rel: f64,
    pub v_exponent: (f64, f64),
    pub v2_exponent: (f64, f64),
    pub scatter_exponent_max: f64,
}

impl Default for ReportTolerances {
    fn default() -> Self {
        Self {
            h2_ratio_max: 10.0,
            monotone_rel: 1e-8,
            v_exponent: (-1.0, 0.15),
            v2_exponent: (-2.0, 0.2),
            scatter_exponent_max: -0.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Monotonicity {
    pub violations: usize,
    pub max_relative: f64,
}

/// Counts steps where `v[i+1] > v[i]·(1 + tol)` and the largest relative rise.
pub fn monotonicity(series: &[(f64, f64)], tol: f64) -> Monotonicity {
    let mut m = Monotonicity::default();
    for p in series.windows(2) {
        let (a, b) = (p[0].1, p[1].1);
        if a <= 0.0 && b <= 0.0 {
            continue;
        }
        let rel = (b - a) / a.abs().max(f64::MIN_POSITIVE);
        if rel > m.max_relative {
            m.max_relative = rel;
        }
        if rel > tol {
            m.violations += 1;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub l2_ratio: f64,
    pub h1_ratio: f64,
    pub h2_ratio: f64,
    pub i0_monotonicity: Monotonicity,
    pub e2_monotonicity: Monotonicity,
    pub scatter_fit: Option<RateFit>,
    pub v_fit: Option<RateFit>,
    pub v2_fit: Option<RateFit>,
    pub max_boundary_drift: f64,
    /// `(name, passed, detail)`; `None` for checks that could not be made.
    pub checks: Vec<(String, Option<bool>, String)>,
}

impl StabilityReport {
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|(name, ok, detail)| check_line(name, *ok, detail))
            .collect()
    }
}

/// `PASS|FAIL|NA name: detail`.
pub fn check_line(name: &str, ok: Option<bool>, detail: &str) -> String {
    let tag = match ok {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "NA",
    };
    format!("{tag} {name}: {detail}")
}

/// Summarizes a set of per-mode histories sharing one time axis.
pub fn stability_report(
    histories: &[EvolutionHistory],
    fit_window: (f64, f64),
    tol: &ReportTolerances,
) -> StabilityReport {
    let n_snap = histories.iter().map(|h| h.snapshots.len()).min().unwrap_or(0);
    let combine = |idx: usize, col: &dyn Fn(&crate::energy::EnergySnapshot) -> f64| -> f64 {
        histories
            .iter()
            .map(|h| col(&h.snapshots[idx].energy).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let sum_col = |idx: usize, col: &dyn Fn(&crate::energy::EnergySnapshot) -> f64| -> f64 {
        histories.iter().map(|h| col(&h.snapshots[idx].energy)).sum()
    };
    let time = |idx: usize| histories[0].snapshots[idx].state.t;
    let ratio = |col: &dyn Fn(&crate::energy::EnergySnapshot) -> f64| -> f64 {
        if n_snap == 0 {
            return f64::NAN;
        }
        let base = combine(0, col);
        let sup = (0..n_snap).map(|i| combine(i, col)).fold(0.0, f64::max);
        if base == 0.0 {
            if sup == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            sup / base
        }
    };
    let l2_ratio = ratio(&|e| e.l2);
    let h1_ratio = ratio(&|e| e.h1);
    let h2_ratio = ratio(&|e| e.h2);
    let series = |col: &dyn Fn(&crate::energy::EnergySnapshot) -> f64, quad: bool| -> Vec<(f64, f64)> {
        (0..n_snap)
            .map(|i| (time(i), if quad { combine(i, col) } else { sum_col(i, col) }))
            .collect()
    };
    let i0_monotonicity = monotonicity(&series(&|e| e.i0, false), tol.monotone_rel);
    let e2_monotonicity = monotonicity(&series(&|e| e.e2, false), tol.monotone_rel);
    let v_fit = fit_power_law(&series(&|e| e.v_norm, true), fit_window).ok();
    let v2_fit = fit_power_law(&series(&|e| e.v2_norm, true), fit_window).ok();
    let scatter: Vec<(f64, f64)> = if n_snap == 0 {
        Vec::new()
    } else {
        let per_mode: Vec<Vec<(f64, f64)>> = histories.iter().map(|h| scattering_profile(h).1).collect();
        // the residual vanishes identically at the reference time T
        (0..n_snap - 1)
            .map(|i| (per_mode[0][i].0, per_mode.iter().map(|r| r[i].1.powi(2)).sum::<f64>().sqrt()))
            .collect()
    };
    let scatter_fit = fit_power_law(&scatter, fit_window).ok();
    let max_boundary_drift = histories.iter().map(|h| h.max_boundary_drift).fold(0.0, f64::max);

    let mut checks = Vec::new();
    checks.push((
        "h2_ratio_bounded".to_string(),
        h2_ratio.is_finite().then_some(h2_ratio <= tol.h2_ratio_max),
        format!("sup ||W||_H2/||w0||_H2 = {h2_ratio:.6} (limit {})", tol.h2_ratio_max),
    ));
    checks.push((
        "energy_monotone".to_string(),
        Some(i0_monotonicity.violations == 0),
        format!(
            "I0 violations {} (max rel {:.3e}), E2 violations {}",
            i0_monotonicity.violations, i0_monotonicity.max_relative, e2_monotonicity.violations
        ),
    ));
    let rate_check = |name: &str, fit: &Option<RateFit>, (target, tol): (f64, f64)| match fit {
        Some(f) => (
            name.to_string(),
            Some((f.exponent - target).abs() <= tol),
            format!("exponent {:.4} (target {target} ± {tol}), r2 {:.4}", f.exponent, f.r_squared),
        ),
        None => (name.to_string(), None, "no fit (zero or too few samples)".to_string()),
    };
    checks.push(rate_check("v_rate", &v_fit, tol.v_exponent));
    checks.push(rate_check("v2_rate", &v2_fit, tol.v2_exponent));
    checks.push(match &scatter_fit {
        Some(f) => (
            "scatter_rate".to_string(),
            Some(f.exponent <= tol.scatter_exponent_max),
            format!("exponent {:.4} (limit {}), r2 {:.4}", f.exponent, tol.scatter_exponent_max, f.r_squared),
        ),
        None => ("scatter_rate".to_string(), None, "no fit (zero or too few samples)".to_string()),
    });
    StabilityReport {
        l2_ratio,
        h1_ratio,
        h2_ratio,
        i0_monotonicity,
        e2_monotonicity,
        scatter_fit,
        v_fit,
        v2_fit,
        max_boundary_drift,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::FdDirichlet;
    use crate::grid::Grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn series(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let t = a + (b - a) * i as f64 / (n - 1) as f64;
                (t, f(t))
            })
            .collect()
    }

    #[test]
    fn exact_power_laws() {
        let fit = fit_power_law(&series(|t| t.powi(-2), 1.0, 100.0, 50), (1.0, 100.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let fit = fit_power_law(&series(|t| 5.0 / t, 1.0, 100.0, 50), (1.0, 100.0)).unwrap();
        assert!((fit.exponent + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law() {
        let s = series(|t| t.powi(-2) * (1.0 + 0.1 * t.sin()), 10.0, 100.0, 200);
        let fit = fit_power_law(&s, (10.0, 100.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 0.05);
    }

    #[test]
    fn fit_errors() {
        let s = series(|t| 1.0 / t, 1.0, 2.0, 5);
        assert!(matches!(fit_power_law(&s, (1.0, 2.0)), Err(Error::InsufficientSamples { found: 5 })));
        let s = series(|t| t - 5.0, 1.0, 10.0, 20);
        assert!(matches!(fit_power_law(&s, (1.0, 10.0)), Err(Error::NonPositiveValue { .. })));
    }

    #[test]
    fn exact_log_growth() {
        let fit = fit_log_growth(&series(|t| 3.0 + 2.0 * t.ln(), 1.0, 50.0, 40), (1.0, 50.0)).unwrap();
        assert!((fit.alpha - 3.0).abs() < 1e-12 && (fit.beta - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn couette_sine_velocity() {
        let g = Grid::unit(2049).unwrap();
        let p = ShearProfile::constant(g, 0.0, 1.0).unwrap();
        let geo = ChannelGeometry::finite();
        let s = ModeState::new(1.0, 0.0, ComplexField::from_real_fn(g, |y| (PI * y).sin())).unwrap();
        let (_, v2) = velocity_mode(&s, &p, &geo, &FdDirichlet).unwrap();
        assert!((v2.l2_norm() - 0.5f64.sqrt() / (1.0 + PI * PI)).abs() < 1e-6);
        let mid = v2.values()[1024];
        assert!((mid - C64::new(0.0, -1.0 / (1.0 + PI * PI))).norm() < 1e-6);
        let zero = ModeState::new(1.0, 0.0, ComplexField::zeros(g)).unwrap();
        let (a, b) = velocity_mode(&zero, &p, &geo, &FdDirichlet).unwrap();
        assert_eq!(a.sup_norm() + b.sup_norm(), 0.0);
    }

    #[test]
    fn frozen_sine_v2_rate() {
        let g = Grid::unit(2049).unwrap();
        let p = ShearProfile::constant(g, 0.0, 1.0).unwrap();
        let geo = ChannelGeometry::finite();
        let w = ComplexField::from_real_fn(g, |y| (PI * y).sin());
        let s: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                let t = 100.0 * 10f64.powf(i as f64 / 29.0);
                let st = ModeState::new(1.0, t, w.clone()).unwrap();
                (t, velocity_mode(&st, &p, &geo, &FdDirichlet).unwrap().1.l2_norm())
            })
            .collect();
        assert!(s.windows(2).all(|p| p[1].1 < p[0].1));
        let fit = fit_power_law(&s, (100.0, 1000.0)).unwrap();
        assert!((fit.exponent + 2.0).abs() < 0.02, "{}", fit.exponent);
    }

    #[test]
    fn physical_norms_ignore_zero_modes() {
        let g = Grid::unit(129).unwrap();
        let p = ShearProfile::constant(g, 0.0, 1.0).unwrap();
        let geo = ChannelGeometry::finite();
        let w = ComplexField::from_real_fn(g, |y| (PI * y).sin() * y);
        let one = vec![ModeState::new(2.0, 1.0, w.clone()).unwrap()];
        let mut two = one.clone();
        two.push(ModeState::new(4.0, 1.0, ComplexField::zeros(g)).unwrap());
        assert_eq!(
            physical_norms(&one, &p, &geo, &FdDirichlet).unwrap(),
            physical_norms(&two, &p, &geo, &FdDirichlet).unwrap()
        );
    }

    #[test]
    fn consistency_term_of_conjugate_pair() {
        let g = Grid::unit(129).unwrap();
        let p = ShearProfile::constant(g, 0.0, 1.0).unwrap();
        let geo = ChannelGeometry::finite();
        let w = ComplexField::from_fn(g, |y| C64::new((PI * y).sin(), (2.0 * PI * y).sin()));
        let modes = vec![
            ModeState::new(1.0, 0.5, w.clone()).unwrap(),
            ModeState::new(-1.0, 0.5, w.conj()).unwrap(),
        ];
        let c = consistency_term(&modes, &p, &geo, &FdDirichlet, 2.0).unwrap();
        assert!(c.is_finite() && c >= 0.0);
        let scaled: Vec<ModeState> = modes.iter().map(|m| ModeState { w: m.w.scale(C64::new(2.0, 0.0)), ..m.clone() }).collect();
        let c2 = consistency_term(&scaled, &p, &geo, &FdDirichlet, 2.0).unwrap();
        assert!((c2 - 4.0 * c).abs() < 1e-12 * c2);
    }

    #[test]
    fn monotonicity_counts() {
        let s = vec![(0.0, 1.0), (1.0, 0.9), (2.0, 0.95), (3.0, 0.9)];
        let m = monotonicity(&s, 1e-8);
        assert_eq!(m.violations, 1);
        assert!((m.max_relative - 0.05 / 0.9).abs() < 1e-12);
    }

    #[test]
    fn slopes() {
        let (spec, corrected) = blowup_slopes(0.1, 1.0, 1.0, 1.0);
        assert!((spec - 0.1).abs() < 1e-15 && (corrected + 0.1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn power_law_recovery(c in 0.1f64..10.0, p in -3.0f64..1.0) {
            let s = series(|t| c * t.powf(p), 2.0, 80.0, 30);
            let fit = fit_power_law(&s, (2.0, 80.0)).unwrap();
            prop_assert!((fit.exponent - p).abs() < 1e-10);
            prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
