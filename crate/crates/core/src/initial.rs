//! Initial vorticity families, sampled per mode on the z-grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::ModeState;
use crate::grid::{ComplexField, C64};
use crate::profiles::{ChannelGeometry, ShearProfile, WavenumberSet};
use crate::registry::Registry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    /// `sine`, `cosine`, `gaussian`, `polynomial` or `random_sine`.
    pub family: String,
    pub amplitude: f64,
    /// Multiple of π in `sin(m π y)` / `cos(m π y)`.
    pub index: u32,
    pub center: f64,
    pub width: f64,
    /// Polynomial coefficients, lowest order first.
    pub coefficients: Vec<f64>,
    /// Number of sine terms in `random_sine`.
    pub terms: u32,
    /// Mode `j` is scaled by `j^(-mode_decay)`.
    pub mode_decay: f64,
    /// Subtract the linear interpolant of the wall values.
    pub project: bool,
    /// Asserts that the data vanishes at the walls; checked at load.
    pub zero_dirichlet: bool,
}

impl Default for InitialSpec {
    fn default() -> Self {
        Self {
            family: "sine".into(),
            amplitude: 1.0,
            index: 1,
            center: 0.5,
            width: 0.1,
            coefficients: vec![0.0, 1.0, -1.0],
            terms: 8,
            mode_decay: 0.0,
            project: false,
            zero_dirichlet: false,
        }
    }
}

impl InitialSpec {
    pub fn family(family: &str) -> Self {
        Self {
            family: family.into(),
            ..Self::default()
        }
    }
}

/// A family of initial profiles `ω_j(y)` for the positive mode index `j`.
pub trait InitialFamily: Send + Sync {
    fn name(&self) -> &'static str;

    fn sample(&self, ys: &[f64], j: u64, seed: u64) -> Vec<C64>;
}

pub fn initial_registry() -> Registry<dyn InitialFamily, InitialSpec> {
    fn sine(s: &InitialSpec) -> Result<Box<dyn InitialFamily>> {
        Ok(Box::new(Trig { index: s.index, cosine: false }))
    }
    fn cosine(s: &InitialSpec) -> Result<Box<dyn InitialFamily>> {
        Ok(Box::new(Trig { index: s.index, cosine: true }))
    }
    fn gaussian(s: &InitialSpec) -> Result<Box<dyn InitialFamily>> {
        if !(s.width > 0.0) {
            return Err(Error::Validation(format!("initial.width must be positive, got {}", s.width)));
        }
        Ok(Box::new(Gaussian { center: s.center, width: s.width }))
    }
    fn polynomial(s: &InitialSpec) -> Result<Box<dyn InitialFamily>> {
        Ok(Box::new(Polynomial { coefficients: s.coefficients.clone() }))
    }
    fn random_sine(s: &InitialSpec) -> Result<Box<dyn InitialFamily>> {
        Ok(Box::new(RandomSine { terms: s.terms.max(1) }))
    }
    Registry::new("initial family")
        .register("sine", sine)
        .register("cosine", cosine)
        .register("gaussian", gaussian)
        .register("polynomial", polynomial)
        .register("random_sine", random_sine)
}

pub struct Trig {
    pub index: u32,
    pub cosine: bool,
}

impl InitialFamily for Trig {
    fn name(&self) -> &'static str {
        if self.cosine {
            "cosine"
        } else {
            "sine"
        }
    }

    fn sample(&self, ys: &[f64], _j: u64, _seed: u64) -> Vec<C64> {
        let m = self.index as f64 * std::f64::consts::PI;
        ys.iter()
            .map(|&y| C64::new(if self.cosine { (m * y).cos() } else { (m * y).sin() }, 0.0))
            .collect()
    }
}

pub struct Gaussian {
    pub center: f64,
    pub width: f64,
}

impl InitialFamily for Gaussian {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn sample(&self, ys: &[f64], _j: u64, _seed: u64) -> Vec<C64> {
        ys.iter()
            .map(|&y| C64::new((-(y - self.center).powi(2) / (2.0 * self.width * self.width)).exp(), 0.0))
            .collect()
    }
}

pub struct Polynomial {
    pub coefficients: Vec<f64>,
}

impl InitialFamily for Polynomial {
    fn name(&self) -> &'static str {
        "polynomial"
    }

    fn sample(&self, ys: &[f64], _j: u64, _seed: u64) -> Vec<C64> {
        ys.iter()
            .map(|&y| C64::new(self.coefficients.iter().rev().fold(0.0, |acc, c| acc * y + c), 0.0))
            .collect()
    }
}

/// `Σ_m (a_m + i b_m) sin(m π (y - y0)/ℓ) / m²` with seeded normal-ish
/// coefficients, independent per mode.
pub struct RandomSine {
    pub terms: u32,
}

impl InitialFamily for RandomSine {
    fn name(&self) -> &'static str {
        "random_sine"
    }

    fn sample(&self, ys: &[f64], j: u64, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(j.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
        let coeffs: Vec<C64> = (1..=self.terms)
            .map(|m| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                C64::new(a, b) / (m as f64).powi(2)
            })
            .collect();
        let (y0, y1) = (ys[0], ys[ys.len() - 1]);
        let len = y1 - y0;
        ys.iter()
            .map(|&y| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(m, c)| c * ((m + 1) as f64 * std::f64::consts::PI * (y - y0) / len).sin())
                    .sum()
            })
            .collect()
    }
}

/// `w - [w(a)(b - z) + w(b)(z - a)]/(b - a)`.
pub fn project_zero_dirichlet(w: &ComplexField) -> ComplexField {
    let grid = *w.grid();
    let (wa, wb) = (w.first(), w.last());
    let (a, len) = (grid.y_start(), grid.length());
    w.map(|i, v| {
        let s = (grid.node(i) - a) / len;
        v - wa * (1.0 - s) - wb * s
    })
}

/// Relative size of the wall values.
pub fn wall_ratio(w: &ComplexField) -> f64 {
    let sup = w.sup_norm();
    if sup == 0.0 {
        0.0
    } else {
        w.first().norm().max(w.last().norm()) / sup
    }
}

pub const WALL_TOL: f64 = 1e-12;

/// Initial states for every mode of `modes`, `ω_{-k} = conj(ω_k)`.
pub fn build_initial(
    spec: &InitialSpec,
    profile: &ShearProfile,
    geometry: &ChannelGeometry,
    modes: &WavenumberSet,
    seed: u64,
) -> Result<Vec<ModeState>> {
    let family = initial_registry().create(&spec.family, spec)?;
    let grid = *profile.grid();
    let ys: Vec<f64> = match profile.preimages() {
        Some(p) => p.to_vec(),
        None => grid.nodes().collect(),
    };
    modes
        .modes()
        .iter()
        .map(|&k| {
            let j = modes.index_of(k).unsigned_abs();
            let scale = spec.amplitude * (j as f64).powf(-spec.mode_decay);
            let mut w = ComplexField::new(grid, family.sample(&ys, j, seed))?.scale(C64::new(scale, 0.0));
            if spec.project {
                w = project_zero_dirichlet(&w);
            }
            if k < 0.0 {
                w = w.conj();
            }
            if spec.zero_dirichlet && geometry.is_finite() && wall_ratio(&w) > WALL_TOL {
                return Err(Error::Validation(format!(
                    "initial.zero_dirichlet is set but family '{}' is nonzero at the walls (ratio {:.3e}); set initial.project",
                    spec.family,
                    wall_ratio(&w)
                )));
            }
            ModeState::new(k, 0.0, w)
        })
        .collect()
}
