//! Coefficient functions `f = U''∘U⁻¹`, `g = U'∘U⁻¹` of the scattering-form
//! equations, the channel geometry and the set of evolved wavenumbers.

pub mod expr;
pub mod flows;
pub mod series;

use serde::{Deserialize, Serialize};

pub use flows::{flow_registry, ProfileSpec, ShearFlow};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Slopes below this are treated as loss of monotonicity.
pub const MIN_SLOPE: f64 = 1e-8;
/// Absolute tolerance of the inversion `U(y) = z`.
pub const INVERSION_TOL: f64 = 1e-12;

/// Highest derivative of `f` tracked by [`ShearProfile::f_sup_norms`].
pub const MAX_F_DERIVATIVE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    Finite,
    InfiniteTruncated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelGeometry {
    pub kind: ChannelKind,
    /// Truncation `[-Y, Y]` of the infinite channel.
    pub half_width: f64,
}

impl Default for ChannelGeometry {
    fn default() -> Self {
        Self::finite()
    }
}

impl ChannelGeometry {
    pub fn finite() -> Self {
        Self {
            kind: ChannelKind::Finite,
            half_width: 0.0,
        }
    }

    pub fn infinite_truncated(half_width: f64) -> Self {
        Self {
            kind: ChannelKind::InfiniteTruncated,
            half_width,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.kind == ChannelKind::Finite
    }

    /// Grid over the z-domain: `[0, 1]` or `[-Y, Y]`.
    pub fn grid(&self, n_points: usize) -> Result<Grid> {
        match self.kind {
            ChannelKind::Finite => Grid::unit(n_points),
            ChannelKind::InfiniteTruncated => {
                if !(self.half_width > 0.0) {
                    return Err(Error::Validation(format!(
                        "geometry.half_width must be positive, got {}",
                        self.half_width
                    )));
                }
                Grid::new(n_points, -self.half_width, self.half_width)
            }
        }
    }

    /// Whether `y` lies in the inner half of the truncated domain.
    pub fn in_inner_half(&self, y: f64) -> bool {
        match self.kind {
            ChannelKind::Finite => true,
            ChannelKind::InfiniteTruncated => y.abs() <= 0.5 * self.half_width,
        }
    }
}

/// Nonzero x-wavenumbers `k ∈ (2π/L)·{±1, …, ±K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavenumberSet {
    period_l: f64,
    modes: Vec<f64>,
}

impl WavenumberSet {
    pub fn new(period_l: f64, max_mode: usize) -> Result<Self> {
        if !(period_l > 0.0) || !period_l.is_finite() {
            return Err(Error::Validation(format!("period_L must be positive, got {period_l}")));
        }
        if max_mode == 0 {
            return Err(Error::Validation("max_mode_K must be at least 1".into()));
        }
        let base = 2.0 * std::f64::consts::PI / period_l;
        let mut modes: Vec<f64> = (1..=max_mode as i64)
            .flat_map(|j| [-(j as f64) * base, j as f64 * base])
            .collect();
        modes.sort_by(f64::total_cmp);
        Ok(Self { period_l, modes })
    }

    pub fn period_l(&self) -> f64 {
        self.period_l
    }

    pub fn base(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.period_l
    }

    /// Sorted ascending.
    pub fn modes(&self) -> &[f64] {
        &self.modes
    }

    /// Integer index `j` with `k = j·2π/L`.
    pub fn index_of(&self, k: f64) -> i64 {
        (k / self.base()).round() as i64
    }
}

/// `f`, `g` and `g'` sampled on the z-grid, with bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct ShearProfile {
    grid: Grid,
    f_values: Vec<f64>,
    g_values: Vec<f64>,
    g_prime_values: Vec<f64>,
    c_bound: f64,
    f_sup_norms: [f64; MAX_F_DERIVATIVE + 1],
    preimages: Option<Vec<f64>>,
}

impl ShearProfile {
    /// Frozen-coefficient surrogate with `f ≡ f_value`, `g ≡ g_value`.
    ///
    /// Not the image of any shear flow when `f_value ≠ 0`; used to compare
    /// against the explicit constant-coefficient propagator.
    pub fn constant(grid: Grid, f_value: f64, g_value: f64) -> Result<Self> {
        if !(g_value > 0.0) || !g_value.is_finite() || !f_value.is_finite() {
            return Err(Error::Validation(format!(
                "constant coefficients need finite f and positive g (f={f_value}, g={g_value})"
            )));
        }
        let n = grid.n_points();
        // derivatives vanish; the norms are cumulative over orders
        let f_sup_norms = [f_value.abs(); MAX_F_DERIVATIVE + 1];
        Ok(Self {
            grid,
            f_values: vec![f_value; n],
            g_values: vec![g_value; n],
            g_prime_values: vec![0.0; n],
            c_bound: g_value.min(1.0 / g_value),
            f_sup_norms,
            preimages: None,
        })
    }

    /// Builds from a profile section: either a registered flow or the surrogate.
    pub fn from_spec(spec: &ProfileSpec, grid: Grid) -> Result<Self> {
        if spec.is_surrogate() {
            return Self::constant(grid, spec.f_value, spec.g_value);
        }
        let flow = flow_registry().create(&spec.kind, spec)?;
        build_profile(flow.as_ref(), grid)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn f_values(&self) -> &[f64] {
        &self.f_values
    }

    pub fn g_values(&self) -> &[f64] {
        &self.g_values
    }

    pub fn g_prime_values(&self) -> &[f64] {
        &self.g_prime_values
    }

    pub fn c_bound(&self) -> f64 {
        self.c_bound
    }

    /// `max_{j ≤ s} sup |f^{(j)}|` over the grid for `s = 0..=4`.
    pub fn f_sup_norms(&self) -> &[f64; MAX_F_DERIVATIVE + 1] {
        &self.f_sup_norms
    }

    /// Physical coordinates `U⁻¹(z)` of the nodes, when built from a flow.
    pub fn preimages(&self) -> Option<&[f64]> {
        self.preimages.as_deref()
    }

    pub fn is_couette(&self) -> bool {
        self.f_values.iter().all(|&f| f == 0.0) && self.g_values.iter().all(|&g| g == 1.0)
    }

    pub fn has_constant_g(&self) -> bool {
        self.g_values.iter().all(|&g| g == self.g_values[0])
    }
}

/// Samples `f` and `g` on `grid` (z-coordinates) by inverting `U`.
pub fn build_profile(flow: &dyn ShearFlow, grid: Grid) -> Result<ShearProfile> {
    const ORDER: usize = MAX_F_DERIVATIVE + 2;
    let n = grid.n_points();
    let mut f_values = Vec::with_capacity(n);
    let mut g_values = Vec::with_capacity(n);
    let mut g_prime_values = Vec::with_capacity(n);
    let mut preimages = Vec::with_capacity(n);
    let mut f_sup_norms = [0.0f64; MAX_F_DERIVATIVE + 1];

    let mut guess = 0.0;
    for z in grid.nodes() {
        let y = invert(flow, z, guess)?;
        guess = y;
        let u = flow.jet(y, ORDER);
        let slope = u.derivative(1);
        if !(slope >= MIN_SLOPE) {
            return Err(Error::NonMonotoneProfile { y, slope });
        }
        // y - y_i as a series in z - z_i
        let dy = u.reverted();
        let up = u.differentiate();
        let upp = up.differentiate();
        let g = dy.compose_into(&up);
        let f = dy.compose_into(&upp);
        let (fv, gv, gp) = (f.value(), g.value(), g.derivative(1));
        for (name, v) in [("f", fv), ("g", gv), ("g'", gp)] {
            if !v.is_finite() {
                return Err(Error::NonFiniteProfile { name, z });
            }
        }
        f_values.push(fv);
        g_values.push(gv);
        g_prime_values.push(gp);
        preimages.push(y);
        for (j, slot) in f_sup_norms.iter_mut().enumerate() {
            *slot = slot.max(f.derivative(j).abs());
        }
    }

    // Slopes between nodes: the node checks alone can miss a dip.
    for w in preimages.windows(2) {
        for frac in [0.25, 0.5, 0.75] {
            let y = w[0] + frac * (w[1] - w[0]);
            let slope = flow.slope(y);
            if !(slope >= MIN_SLOPE) {
                return Err(Error::NonMonotoneProfile { y, slope });
            }
        }
    }

    for s in 1..=MAX_F_DERIVATIVE {
        f_sup_norms[s] = f_sup_norms[s].max(f_sup_norms[s - 1]);
    }
    let g_min = g_values.iter().copied().fold(f64::INFINITY, f64::min);
    let g_max = g_values.iter().copied().fold(0.0, f64::max);
    Ok(ShearProfile {
        grid,
        f_values,
        g_values,
        g_prime_values,
        c_bound: g_min.min(1.0 / g_max),
        f_sup_norms,
        preimages: Some(preimages),
    })
}

/// Solves `U(y) = z` by bracketing, bisection and a Newton polish.
pub fn invert(flow: &dyn ShearFlow, z: f64, guess: f64) -> Result<f64> {
    let slope0 = flow.slope(guess);
    if !(slope0 >= MIN_SLOPE) {
        return Err(Error::NonMonotoneProfile {
            y: guess,
            slope: slope0,
        });
    }
    let mut step = 1.0;
    let (mut lo, mut hi) = (guess - step, guess + step);
    let mut expansions = 0;
    while !(flow.value(lo) <= z && flow.value(hi) >= z) {
        expansions += 1;
        if expansions > 64 {
            return Err(Error::InversionFailure {
                z,
                residual: f64::INFINITY,
            });
        }
        step *= 2.0;
        if flow.value(lo) > z {
            lo -= step;
        }
        if flow.value(hi) < z {
            hi += step;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-10 * (1.0 + mid.abs()) {
            break;
        }
        if flow.value(mid) < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..50 {
        let r = flow.value(y) - z;
        if r.abs() <= INVERSION_TOL {
            return Ok(y);
        }
        let s = flow.slope(y);
        if !(s.abs() >= MIN_SLOPE) {
            break;
        }
        y -= r / s;
    }
    let residual = (flow.value(y) - z).abs();
    if residual <= INVERSION_TOL {
        Ok(y)
    } else {
        Err(Error::InversionFailure { z, residual })
    }
}

/// `L · ‖f‖_{W^{s+1,∞}}` (grid surrogate), for `s ∈ 0..=3`.
pub fn smallness_parameter(profile: &ShearProfile, period_l: f64, s: usize) -> f64 {
    let s = s.min(MAX_F_DERIVATIVE - 1);
    period_l * profile.f_sup_norms[s + 1]
}
