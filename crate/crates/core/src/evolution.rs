//! Fixed-step RK4 integration of the per-mode equation `∂t W = (i f/k) Φ`.

use crate::elliptic::StreamSolver;
use crate::energy::{EnergyMeter, EnergySnapshot, WeightModel};
use crate::error::{Error, Result};
use crate::grid::{ComplexField, C64, I};
use crate::profiles::{ChannelGeometry, ShearProfile};

#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub k: f64,
    pub t: f64,
    pub w: ComplexField,
}

impl ModeState {
    pub fn new(k: f64, t: f64, w: ComplexField) -> Result<Self> {
        if k == 0.0 {
            return Err(Error::ZeroWavenumber);
        }
        if !w.is_finite() {
            return Err(Error::NonFinite { t });
        }
        Ok(Self { k, t, w })
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: ModeState,
    pub energy: EnergySnapshot,
}

#[derive(Debug, Clone)]
pub struct EvolutionHistory {
    pub initial: ModeState,
    pub snapshots: Vec<Snapshot>,
    /// `∫₀ᵗ (i f/k) Φ dτ` up to the last step, trapezoid rule.
    pub duhamel_partial: ComplexField,
    /// Largest wall-value deviation seen before re-pinning.
    pub max_boundary_drift: f64,
}

impl EvolutionHistory {
    pub fn final_state(&self) -> &ModeState {
        &self.snapshots.last().expect("history is never empty").state
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.t).collect()
    }

    /// `(t, value)` pairs for one energy column.
    pub fn series(&self, column: impl Fn(&EnergySnapshot) -> f64) -> Vec<(f64, f64)> {
        self.snapshots.iter().map(|s| (s.state.t, column(&s.energy))).collect()
    }
}

/// The linear dynamics of one channel configuration.
pub struct Dynamics<'a> {
    pub profile: &'a ShearProfile,
    pub geometry: &'a ChannelGeometry,
    pub solver: &'a dyn StreamSolver,
}

impl<'a> Dynamics<'a> {
    pub fn new(profile: &'a ShearProfile, geometry: &'a ChannelGeometry, solver: &'a dyn StreamSolver) -> Result<Self> {
        solver.check(profile, geometry)?;
        Ok(Self {
            profile,
            geometry,
            solver,
        })
    }

    fn rhs_at(&self, w: &ComplexField, k: f64, t: f64) -> Result<ComplexField> {
        let phi = self.solver.solve(w, k, t, self.profile, self.geometry)?;
        let f = self.profile.f_values();
        Ok(phi.map(|i, v| I * (f[i] / k) * v))
    }

    pub fn rhs(&self, state: &ModeState) -> Result<ComplexField> {
        self.rhs_at(&state.w, state.k, state.t)
    }

    /// One RK4 step. Returns the new state and the wall drift measured
    /// before the wall values were re-pinned (zero on the truncated domain).
    pub fn step_rk4(&self, state: &ModeState, dt: f64, pins: Option<(C64, C64)>) -> Result<(ModeState, f64)> {
        self.step_with(state, dt, pins, None).map(|(s, d, _)| (s, d))
    }

    fn step_with(
        &self,
        state: &ModeState,
        dt: f64,
        pins: Option<(C64, C64)>,
        k1: Option<ComplexField>,
    ) -> Result<(ModeState, f64, ComplexField)> {
        if !(dt > 0.0) {
            return Err(Error::InvalidTimeStep(format!("dt must be positive, got {dt}")));
        }
        let (k, t, w) = (state.k, state.t, &state.w);
        let half = C64::new(0.5 * dt, 0.0);
        let k1 = match k1 {
            Some(v) => v,
            None => self.rhs_at(w, k, t)?,
        };
        let k2 = self.rhs_at(&w.axpy(half, &k1), k, t + 0.5 * dt)?;
        let k3 = self.rhs_at(&w.axpy(half, &k2), k, t + 0.5 * dt)?;
        let k4 = self.rhs_at(&w.axpy(C64::new(dt, 0.0), &k3), k, t + dt)?;
        let c = dt / 6.0;
        let mut next = w.clone();
        for (i, v) in next.values_mut().iter_mut().enumerate() {
            *v += c * (k1.values()[i] + 2.0 * k2.values()[i] + 2.0 * k3.values()[i] + k4.values()[i]);
        }
        let t_next = t + dt;
        if !next.is_finite() {
            return Err(Error::NonFinite { t: t_next });
        }
        let mut drift = 0.0;
        if let Some((a, b)) = pins {
            let n = next.values().len();
            let vals = next.values_mut();
            drift = (vals[0] - a).norm().max((vals[n - 1] - b).norm());
            vals[0] = a;
            vals[n - 1] = b;
        }
        Ok((ModeState { k, t: t_next, w: next }, drift, k1))
    }

    /// Integrates from `initial.t` to `initial.t + t_final` in steps of `dt`,
    /// recording a snapshot every `stride` steps and at the end. The
    /// observer sees every recorded snapshot.
    pub fn evolve(
        &self,
        initial: &ModeState,
        t_final: f64,
        dt: f64,
        stride: usize,
        weights: &dyn WeightModel,
        observer: &mut dyn FnMut(&Snapshot) -> Result<()>,
    ) -> Result<EvolutionHistory> {
        let steps = step_count(t_final, dt)?;
        let stride = stride.max(1);
        let pins = self
            .geometry
            .is_finite()
            .then(|| (initial.w.first(), initial.w.last()));
        let mut meter = EnergyMeter::new(weights, initial.w.grid(), initial.k);
        let mut record = |state: &ModeState, out: &mut Vec<Snapshot>| -> Result<()> {
            let energy = meter.measure(state, self.profile, self.geometry, self.solver)?;
            let snap = Snapshot {
                state: state.clone(),
                energy,
            };
            observer(&snap)?;
            out.push(snap);
            Ok(())
        };
        let mut snapshots = Vec::with_capacity(steps / stride + 2);
        record(initial, &mut snapshots)?;
        let mut duhamel = ComplexField::zeros(*initial.w.grid());
        let mut max_drift: f64 = 0.0;
        let mut state = initial.clone();
        let mut f_now = self.rhs(&state)?;
        let trap = C64::new(0.5 * dt, 0.0);
        for step in 1..=steps {
            let (next, drift, f_prev) = self.step_with(&state, dt, pins, Some(f_now))?;
            // exact clock, free of accumulated rounding
            let next = ModeState {
                t: initial.t + step as f64 * dt,
                ..next
            };
            max_drift = max_drift.max(drift);
            f_now = self.rhs(&next)?;
            duhamel = duhamel.axpy(trap, &f_prev).axpy(trap, &f_now);
            state = next;
            if step % stride == 0 || step == steps {
                record(&state, &mut snapshots)?;
            }
        }
        Ok(EvolutionHistory {
            initial: initial.clone(),
            snapshots,
            duhamel_partial: duhamel,
            max_boundary_drift: max_drift,
        })
    }
}

/// Evolves independent modes in parallel; histories come back in input order.
pub fn evolve_modes(
    dynamics: &Dynamics<'_>,
    initial: &[ModeState],
    t_final: f64,
    dt: f64,
    stride: usize,
    weights: &dyn WeightModel,
) -> Result<Vec<EvolutionHistory>> {
    use rayon::prelude::*;
    initial
        .par_iter()
        .map(|s| dynamics.evolve(s, t_final, dt, stride, weights, &mut |_| Ok(())))
        .collect()
}

/// `T / dt` as an integer step count.
pub fn step_count(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidTimeStep(format!("dt must be positive, got {dt}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidTimeStep(format!("T must be nonnegative, got {t_final}")));
    }
    let steps = (t_final / dt).round();
    if (steps * dt - t_final).abs() > 1e-9 * t_final.max(1.0) {
        return Err(Error::InvalidTimeStep(format!("dt = {dt} does not divide T = {t_final}")));
    }
    Ok(steps as usize)
}

/// `W(T)` as the scattering-profile estimate and `‖W(t) - W(T)‖` per snapshot.
pub fn scattering_profile(history: &EvolutionHistory) -> (ComplexField, Vec<(f64, f64)>) {
    let last = history.final_state().w.clone();
    let residuals = history
        .snapshots
        .iter()
        .map(|s| {
            (s.state.t, s.state.w.sub(&last).l2_norm())
        })
        .collect();
    (last, residuals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{FdDirichlet, PeriodicSpectral};
    use crate::energy::ArctanWeight;
    use crate::grid::Grid;
    use crate::profiles::{build_profile, flows::SinePerturbed};
    use std::f64::consts::PI;

    fn sine_setup(n: usize) -> (ShearProfile, ChannelGeometry) {
        let p = build_profile(&SinePerturbed { amplitude: 0.05 }, Grid::unit(n).unwrap()).unwrap();
        (p, ChannelGeometry::finite())
    }

    fn bump(grid: Grid) -> ComplexField {
        ComplexField::from_fn(grid, |y| C64::new((PI * y).sin() * (1.0 + y), 0.3 * (2.0 * PI * y).sin()))
    }

    #[test]
    fn couette_is_frozen() {
        let g = Grid::unit(65).unwrap();
        let p = ShearProfile::constant(g, 0.0, 1.0).unwrap();
        let geo = ChannelGeometry::finite();
        let dynamics = Dynamics::new(&p, &geo, &FdDirichlet).unwrap();
        let s0 = ModeState::new(1.0, 0.0, bump(g)).unwrap();
        assert_eq!(dynamics.rhs(&s0).unwrap().sup_norm(), 0.0);
        let h = dynamics.evolve(&s0, 2.0, 0.1, 5, &ArctanWeight { c: 1.0 }, &mut |_| Ok(())).unwrap();
        assert_eq!(h.final_state().w, s0.w);
        assert!((h.final_state().t - 2.0).abs() < 1e-15);
        let (_, r) = scattering_profile(&h);
        assert!(r.iter().all(|&(_, v)| v == 0.0));
        let i0 = h.series(|e| e.i0);
        assert!(i0.windows(2).all(|p| p[1].1 <= p[0].1));
    }

    #[test]
    fn zero_horizon_gives_single_snapshot() {
        let (p, geo) = sine_setup(65);
        let dynamics = Dynamics::new(&p, &geo, &FdDirichlet).unwrap();
        let s0 = ModeState::new(2.0 * PI, 0.0, bump(*p.grid())).unwrap();
        let h = dynamics.evolve(&s0, 0.0, 0.01, 1, &ArctanWeight { c: 1.0 }, &mut |_| Ok(())).unwrap();
        assert_eq!(h.snapshots.len(), 1);
        assert_eq!(h.final_state(), &s0);
    }

    #[test]
    fn walls_are_frozen_and_rhs_vanishes_there() {
        let (p, geo) = sine_setup(129);
        let dynamics = Dynamics::new(&p, &geo, &FdDirichlet).unwrap();
        let s0 = ModeState::new(2.0 * PI, 0.3, bump(*p.grid())).unwrap();
        let r = dynamics.rhs(&s0).unwrap();
        assert_eq!(r.first(), C64::new(0.0, 0.0));
        assert_eq!(r.last(), C64::new(0.0, 0.0));
        let (_, drift) = dynamics.step_rk4(&s0, 0.01, Some((s0.w.first(), s0.w.last()))).unwrap();
        assert!(drift <= 1e-8 * s0.w.sup_norm());
    }

    #[test]
    fn conjugate_mode_symmetry() {
        let (p, geo) = sine_setup(129);
        let dynamics = Dynamics::new(&p, &geo, &FdDirichlet).unwrap();
        let s = ModeState::new(2.0 * PI, 0.7, bump(*p.grid())).unwrap();
        let sc = ModeState::new(-2.0 * PI, 0.7, s.w.conj()).unwrap();
        let a = dynamics.rhs(&s).unwrap().conj();
        let b = dynamics.rhs(&sc).unwrap();
        assert!(a.sub(&b).sup_norm() < 1e-14);
    }

    #[test]
    fn rk4_local_error_ratio() {
        let (p, geo) = sine_setup(257);
        let dynamics = Dynamics::new(&p, &geo, &FdDirichlet).unwrap();
        let s0 = ModeState::new(2.0 * PI, 0.0, bump(*p.grid())).unwrap();
        let reference = |dt: f64| {
            let mut s = s0.clone();
            for _ in 0..16 {
                s = dynamics.step_rk4(&s, dt / 16.0, None).unwrap().0;
            }
            s.w
        };
        let err = |dt: f64| {
            let one = dynamics.step_rk4(&s0, dt, None).unwrap().0.w;
            one.sub(&reference(dt)).l2_norm()
        };
        // one step carries local error O(dt⁵): halving dt gives ≈ 32
        let ratio = err(0.4) / err(0.2);
        assert!((ratio.log2() - 5.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn periodic_surrogate_matches_propagator_for_one_exponential() {
        let grid = Grid::new(129, -8.0, 8.0).unwrap();
        let geo = ChannelGeometry::infinite_truncated(8.0);
        let p = ShearProfile::constant(grid, 0.1, 1.0).unwrap();
        let solver = PeriodicSpectral::default();
        let dynamics = Dynamics::new(&p, &geo, &solver).unwrap();
        let eta = 2.0 * PI * 5.0 / 16.0;
        let s0 = ModeState::new(1.0, 0.0, ComplexField::from_fn(grid, |y| (I * eta * y).exp())).unwrap();
        let h = dynamics.evolve(&s0, 2.0, 0.01, 100, &ArctanWeight { c: 1.0 }, &mut |_| Ok(())).unwrap();
        let expect = crate::oracle::cc_propagator(C64::new(0.0, 0.1), 1.0, eta, 2.0);
        let got = h.final_state().w.values()[10] / s0.w.values()[10];
        assert!((got - expect).norm() < 1e-10);
        let recon = s0.w.axpy(C64::new(1.0, 0.0), &h.duhamel_partial);
        assert!(recon.sub(&h.final_state().w).l2_norm() < 1e-6 * s0.w.l2_norm());
    }

    #[test]
    fn step_count_validation() {
        assert_eq!(step_count(1.0, 0.01).unwrap(), 100);
        assert!(step_count(1.0, 0.3).is_err());
        assert!(step_count(1.0, 0.0).is_err());
        assert_eq!(step_count(0.0, 0.5).unwrap(), 0);
    }
}
