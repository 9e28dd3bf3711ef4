//! Interchangeable stream-function solvers used by the time stepper.

use std::sync::{Arc, Mutex};

use rustfft::{Fft, FftPlanner};

use super::solve_phi;
use crate::error::{Error, Result};
use crate::grid::{ComplexField, C64};
use crate::profiles::{ChannelGeometry, ShearProfile};
use crate::registry::Registry;

pub trait StreamSolver: Send + Sync {
    fn name(&self) -> &'static str;

    /// `Φ` at wavenumber `k` and time `t` for vorticity `w`.
    fn solve(
        &self,
        w: &ComplexField,
        k: f64,
        t: f64,
        profile: &ShearProfile,
        geometry: &ChannelGeometry,
    ) -> Result<ComplexField>;

    /// Rejects profiles this solver cannot represent.
    fn check(&self, _profile: &ShearProfile, _geometry: &ChannelGeometry) -> Result<()> {
        Ok(())
    }
}

pub fn solver_registry() -> Registry<dyn StreamSolver, ()> {
    Registry::new("stream solver")
        .register("fd-dirichlet", |_: &()| -> Result<Box<dyn StreamSolver>> {
            Ok(Box::new(FdDirichlet))
        })
        .register("periodic-spectral", |_: &()| -> Result<Box<dyn StreamSolver>> {
            Ok(Box::new(PeriodicSpectral::default()))
        })
}

/// Finite differences with zero Dirichlet data; any admissible `g`.
pub struct FdDirichlet;

impl StreamSolver for FdDirichlet {
    fn name(&self) -> &'static str {
        "fd-dirichlet"
    }

    fn solve(
        &self,
        w: &ComplexField,
        k: f64,
        t: f64,
        profile: &ShearProfile,
        geometry: &ChannelGeometry,
    ) -> Result<ComplexField> {
        solve_phi(w, k, t, profile, geometry)
    }
}

/// Exact Fourier inversion on the periodized domain, for constant `g`.
///
/// The last node is identified with the first; the `M = n - 1` samples are
/// transformed and each frequency `η` is divided by `-(1 + g²(η/k - t)²)`.
/// Cached forward and inverse plans for one transform length.
type PlanCache = Option<(usize, Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>)>;

#[derive(Default)]
pub struct PeriodicSpectral {
    plans: Mutex<PlanCache>,
}

impl PeriodicSpectral {
    fn plans(&self, m: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
        let mut guard = self.plans.lock().unwrap_or_else(|e| e.into_inner());
        match guard.as_ref() {
            Some((len, f, b)) if *len == m => (f.clone(), b.clone()),
            _ => {
                let mut planner = FftPlanner::new();
                let f = planner.plan_fft_forward(m);
                let b = planner.plan_fft_inverse(m);
                *guard = Some((m, f.clone(), b.clone()));
                (f, b)
            }
        }
    }
}

impl StreamSolver for PeriodicSpectral {
    fn name(&self) -> &'static str {
        "periodic-spectral"
    }

    fn check(&self, profile: &ShearProfile, _geometry: &ChannelGeometry) -> Result<()> {
        if profile.has_constant_g() {
            Ok(())
        } else {
            Err(Error::UnsupportedSolver {
                solver: self.name().into(),
                reason: "requires a constant g".into(),
            })
        }
    }

    fn solve(
        &self,
        w: &ComplexField,
        k: f64,
        t: f64,
        profile: &ShearProfile,
        geometry: &ChannelGeometry,
    ) -> Result<ComplexField> {
        self.check(profile, geometry)?;
        if k == 0.0 {
            return Err(Error::ZeroWavenumber);
        }
        let grid = *w.grid();
        let m = grid.n_points() - 1;
        let period = grid.length();
        let g = profile.g_values()[0];
        let (fwd, inv) = self.plans(m);
        let mut buf: Vec<C64> = w.values()[..m].to_vec();
        fwd.process(&mut buf);
        for (j, v) in buf.iter_mut().enumerate() {
            let signed = if j <= m / 2 { j as f64 } else { j as f64 - m as f64 };
            let eta = 2.0 * std::f64::consts::PI * signed / period;
            let s = eta / k - t;
            *v *= -1.0 / ((1.0 + g * g * s * s) * m as f64);
        }
        inv.process(&mut buf);
        buf.push(buf[0]);
        ComplexField::new(grid, buf)
    }
}
