//! Closed-form references in Fourier variables: Couette flow and the
//! constant-coefficient model.

use crate::grid::{C64, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierDatum {
    pub k: f64,
    pub eta: f64,
    pub value: C64,
}

/// Couette vorticity transported along characteristics: `ω̂0(k, η + kt)`.
pub fn couette_vorticity(omega0_hat: impl Fn(f64, f64) -> C64, k: f64, eta: f64, t: f64) -> C64 {
    omega0_hat(k, eta + k * t)
}

/// `(m1, m2)` with `V̂1 = m1 ω̂0`, `V̂2 = m2 ω̂0` for Couette flow.
pub fn couette_velocity_multipliers(k: f64, eta: f64, t: f64) -> (C64, C64) {
    let s = eta - k * t;
    let denom = k * k + s * s;
    let inv_ik = 1.0 / (I * k);
    let m1 = -(s * k / denom) * inv_ik;
    let m2 = -(k * k / denom) * inv_ik;
    (m1, m2)
}

/// `(‖v1‖, ‖v2‖)` at time `t` for a single wavenumber, integrating
/// `|m_j|² |ω̂0(k, η)|²` over `η ∈ [-eta_max, eta_max]` by Simpson's rule.
pub fn couette_velocity_norms(
    omega0_hat: impl Fn(f64, f64) -> C64,
    k: f64,
    t: f64,
    eta_max: f64,
    d_eta: f64,
) -> (f64, f64) {
    let mut cells = (2.0 * eta_max / d_eta).ceil() as usize;
    if cells % 2 == 1 {
        cells += 1;
    }
    let h = 2.0 * eta_max / cells as f64;
    let (mut s1, mut s2) = (0.0, 0.0);
    for j in 0..=cells {
        let eta = -eta_max + j as f64 * h;
        let w = if j == 0 || j == cells {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let amp = omega0_hat(k, eta).norm_sqr();
        let (m1, m2) = couette_velocity_multipliers(k, eta, t);
        s1 += w * m1.norm_sqr() * amp;
        s2 += w * m2.norm_sqr() * amp;
    }
    ((s1 * h / 3.0).sqrt(), (s2 * h / 3.0).sqrt())
}

/// Exact multiplier of the constant-coefficient model:
/// `exp(c (arctan(η/k - t) - arctan(η/k)))`.
pub fn cc_propagator(c: C64, k: f64, eta: f64, t: f64) -> C64 {
    let phase = (eta / k - t).atan() - (eta / k).atan();
    (c * phase).exp()
}

pub fn cc_evolve(spectrum: &[FourierDatum], c: C64, t: f64) -> Vec<FourierDatum> {
    spectrum
        .iter()
        .map(|d| FourierDatum {
            value: d.value * cc_propagator(c, d.k, d.eta, t),
            ..*d
        })
        .collect()
}
