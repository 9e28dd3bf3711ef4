//! Run configuration: a TOML tree with documented defaults, dotted-key
//! overrides and load-time validation.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diagnostics::ReportTolerances;
use crate::elliptic::{solver_registry, StreamSolver};
use crate::energy::{WeightModel, WeightSpec};
use crate::error::{Error, Result};
use crate::evolution::{step_count, ModeState};
use crate::initial::{build_initial, InitialSpec};
use crate::profiles::{ChannelGeometry, ProfileSpec, ShearProfile, WavenumberSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "period_L")]
    pub period_l: f64,
    #[serde(rename = "max_mode_K")]
    pub max_mode_k: usize,
    /// At most `i64::MAX`: TOML integers are signed.
    pub seed: u64,
    pub profile: ProfileSpec,
    pub grid: GridSpec,
    pub geometry: ChannelGeometry,
    pub initial: InitialSpec,
    pub time: TimeSpec,
    pub weights: WeightSpec,
    pub fits: FitSpec,
    pub solver: SolverSpec,
    pub gate: GateSpec,
    pub tolerances: ToleranceSpec,
    pub output: OutputSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            period_l: 2.0 * std::f64::consts::PI,
            max_mode_k: 1,
            seed: 0,
            profile: ProfileSpec::default(),
            grid: GridSpec::default(),
            geometry: ChannelGeometry::default(),
            initial: InitialSpec::default(),
            time: TimeSpec::default(),
            weights: WeightSpec::default(),
            fits: FitSpec::default(),
            solver: SolverSpec::default(),
            gate: GateSpec::default(),
            tolerances: ToleranceSpec::default(),
            output: OutputSpec::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub n_points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n_points: 512 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Defaults to `min(0.01, 0.5/max|k|)`, shrunk so that it divides `T`.
    pub dt: Option<f64>,
    /// Observer stride in steps.
    pub stride: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        Self {
            t_final: 50.0,
            dt: None,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct FitSpec {
    /// Rate-fit window; defaults to `[T/10, T]`.
    pub window: Option<[f64; 2]>,
    /// Window of the boundary log-growth fit; defaults to the rate window.
    pub log_window: Option<[f64; 2]>,
    /// Also evaluate the quadratic consistency term at each snapshot.
    pub consistency: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub kind: String,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            kind: "fd-dirichlet".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSpec {
    /// Sobolev index `s` of `L·‖f‖_{W^{s+1,∞}}`.
    pub s: usize,
    /// Gate threshold; the value is always reported, never enforced.
    pub threshold: f64,
}

impl Default for GateSpec {
    fn default() -> Self {
        Self { s: 0, threshold: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToleranceSpec {
    pub h2_ratio_max: f64,
    pub monotone_rel: f64,
    pub v_exponent: f64,
    pub v_exponent_tol: f64,
    pub v2_exponent: f64,
    pub v2_exponent_tol: f64,
    pub scatter_exponent_max: f64,
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        let d = ReportTolerances::default();
        Self {
            h2_ratio_max: d.h2_ratio_max,
            monotone_rel: d.monotone_rel,
            v_exponent: d.v_exponent.0,
            v_exponent_tol: d.v_exponent.1,
            v2_exponent: d.v2_exponent.0,
            v2_exponent_tol: d.v2_exponent.1,
            scatter_exponent_max: d.scatter_exponent_max,
        }
    }
}

impl ToleranceSpec {
    pub fn report(&self) -> ReportTolerances {
        ReportTolerances {
            h2_ratio_max: self.h2_ratio_max,
            monotone_rel: self.monotone_rel,
            v_exponent: (self.v_exponent, self.v_exponent_tol),
            v2_exponent: (self.v2_exponent, self.v2_exponent_tol),
            scatter_exponent_max: self.scatter_exponent_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// Everything a run needs, built once from a validated config.
pub struct Scenario {
    pub profile: ShearProfile,
    pub geometry: ChannelGeometry,
    pub modes: WavenumberSet,
    pub solver: Box<dyn StreamSolver>,
    pub weights: Box<dyn WeightModel>,
    pub initial: Vec<ModeState>,
    pub dt: f64,
    pub fit_window: (f64, f64),
    pub log_window: (f64, f64),
}

/// 1-based line of a byte offset.
fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

fn parse_error(src: &str, e: toml::de::Error) -> Error {
    let msg = e.message().trim().to_string();
    let msg = match e.span() {
        Some(span) => format!("line {}: {msg}", line_of(src, span.start)),
        None => msg,
    };
    Error::Parse { key: None, msg }
}

/// Parses an override value as a TOML literal, falling back to a bare string.
fn override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `key.path=value` to a TOML table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| Error::Parse {
        key: None,
        msg: format!("override `{assignment}` is not of the form key=value"),
    })?;
    let key = key.trim();
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Parse {
            key: Some(key.into()),
            msg: "empty path segment".into(),
        });
    }
    let mut node = table;
    for part in &parts[..parts.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| Error::Parse {
            key: Some(key.into()),
            msg: format!("`{part}` is not a section"),
        })?;
    }
    node.insert(parts[parts.len() - 1].to_string(), override_value(raw.trim()));
    Ok(())
}

impl RunConfig {
    /// Parses, applies overrides, fills defaults and validates.
    pub fn from_toml_str(src: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = src.parse().map_err(|e| parse_error(src, e))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: RunConfig = table.try_into().map_err(|e: toml::de::Error| {
            // re-deserialize the source alone to recover a line number
            match toml::from_str::<RunConfig>(src) {
                Err(e) if e.span().is_some() => parse_error(src, e),
                _ => Error::Parse {
                    key: None,
                    msg: format!("{} (after overrides)", e.message().trim()),
                },
            }
        })?;
        config.resolve()?;
        config.scenario()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let src = std::fs::read_to_string(path)?;
        Self::from_toml_str(&src, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn wavenumbers(&self) -> Result<WavenumberSet> {
        WavenumberSet::new(self.period_l, self.max_mode_k)
    }

    /// Fills the derived defaults (`dt`, fit windows).
    fn resolve(&mut self) -> Result<()> {
        if !(self.period_l > 0.0) || !self.period_l.is_finite() {
            return Err(Error::Validation(format!("period_L must be positive, got {}", self.period_l)));
        }
        if self.max_mode_k == 0 {
            return Err(Error::Validation("max_mode_K must be at least 1 (only k ≠ 0 modes are evolved)".into()));
        }
        let t = self.time.t_final;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Validation(format!("time.T must be positive, got {t}")));
        }
        if self.time.dt.is_none() {
            let k_max = self.wavenumbers()?.modes().iter().fold(0.0f64, |a, k| a.max(k.abs()));
            let target = 0.01f64.min(0.5 / k_max);
            let steps = (t / target - 1e-9).ceil().max(1.0);
            self.time.dt = Some(t / steps);
        }
        if self.fits.window.is_none() {
            self.fits.window = Some([t / 10.0, t]);
        }
        if self.fits.log_window.is_none() {
            self.fits.log_window = self.fits.window;
        }
        Ok(())
    }

    fn window(w: Option<[f64; 2]>, t: f64, name: &str) -> Result<(f64, f64)> {
        let [a, b] = w.unwrap_or([t / 10.0, t]);
        if !(a > 0.0 && b > a && b <= t * (1.0 + 1e-12)) {
            return Err(Error::Validation(format!("fits.{name} must satisfy 0 < a < b ≤ T, got [{a}, {b}]")));
        }
        Ok((a, b))
    }

    /// Validates every gate and builds the run inputs.
    pub fn scenario(&self) -> Result<Scenario> {
        let modes = self.wavenumbers()?;
        if i64::try_from(self.seed).is_err() {
            return Err(Error::Validation(format!("seed {} exceeds the TOML integer range", self.seed)));
        }
        self.weights.validate()?;
        let dt = self.time.dt.unwrap_or(0.01);
        step_count(self.time.t_final, dt)?;
        if self.time.stride == 0 {
            return Err(Error::Validation("time.stride must be at least 1".into()));
        }
        if self.output.dir.trim().is_empty() {
            return Err(Error::Validation("output.dir must not be empty".into()));
        }
        let fit_window = Self::window(self.fits.window, self.time.t_final, "window")?;
        let log_window = Self::window(self.fits.log_window, self.time.t_final, "log_window")?;
        let grid = self.geometry.grid(self.grid.n_points)?;
        let profile = ShearProfile::from_spec(&self.profile, grid)?;
        let solver = solver_registry().create(&self.solver.kind, &())?;
        solver.check(&profile, &self.geometry)?;
        let weights = self.weights.model()?;
        let initial = build_initial(&self.initial, &profile, &self.geometry, &modes, self.seed)?;
        Ok(Scenario {
            profile,
            geometry: self.geometry,
            modes,
            solver,
            weights,
            initial,
            dt,
            fit_window,
            log_window,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_toml_str("[profile]\nkind = \"couette\"\n", &[]).unwrap();
        assert_eq!(c.weights.c, 1.0);
        assert_eq!((c.weights.beta, c.weights.gamma), (0.3, 0.3));
        assert_eq!(c.time.dt, Some(0.01));
        assert_eq!(c.fits.window, Some([5.0, 50.0]));
    }

    #[test]
    fn beta_out_of_range() {
        let err = RunConfig::from_toml_str("[weights]\nbeta = 0.6\n", &[]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("beta out of (0,1/2)"));
    }

    #[test]
    fn zero_dirichlet_with_nonzero_walls() {
        let src = "[initial]\nfamily = \"cosine\"\nzero_dirichlet = true\n";
        let err = RunConfig::from_toml_str(src, &[]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let ok = RunConfig::from_toml_str(src, &["initial.project=true".into()]);
        assert!(ok.is_ok());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = RunConfig::from_toml_str("seed = 1\n[grid]\nn_points = \"many\"\n", &[]).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = RunConfig::from_toml_str("seed = 1\nseed = = 2\n", &[]).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = RunConfig::from_toml_str("[grid]\nnpoints = 3\n", &[]).unwrap_err();
        assert!(err.to_string().contains("npoints"), "{err}");
    }

    #[test]
    fn overrides_reach_nested_and_top_level_keys() {
        let c = RunConfig::from_toml_str(
            "",
            &["period_L=0.5".into(), "time.T=10".into(), "profile.kind=sine_perturbed".into(), "profile.amplitude=0.05".into()],
        )
        .unwrap();
        assert_eq!(c.period_l, 0.5);
        assert_eq!(c.time.t_final, 10.0);
        assert_eq!(c.profile.kind, "sine_perturbed");
        assert_eq!(c.time.dt, Some(0.01));
        // k_max = 40π: 0.5/k_max < 0.01, shrunk to divide T
        let c = RunConfig::from_toml_str("", &["period_L=0.1".into(), "max_mode_K=2".into(), "time.T=10".into()]).unwrap();
        let target = 0.5 / (40.0 * std::f64::consts::PI);
        assert_eq!(c.time.dt, Some(10.0 / (10.0 / target).ceil()));
        assert!(RunConfig::from_toml_str("", &["time.T".into()]).is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let c = RunConfig::from_toml_str("[profile]\nkind = \"quadratic\"\namplitude = 0.05\n", &[]).unwrap();
        let once = c.to_toml();
        let again = RunConfig::from_toml_str(&once, &[]).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_toml(), once);
        assert_eq!(again.sha256(), c.sha256());
    }

    #[test]
    fn seed_must_fit_toml() {
        let mut c = RunConfig::from_toml_str(&format!("seed = {}", i64::MAX), &[]).unwrap();
        assert_eq!(c.seed, i64::MAX as u64);
        c.seed += 1;
        assert!(matches!(c.scenario(), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_bad_gates() {
        assert!(RunConfig::from_toml_str("[time]\nT = 1.0\ndt = 0.3\n", &[]).is_err());
        assert!(RunConfig::from_toml_str("max_mode_K = 0\n", &[]).is_err());
        assert!(RunConfig::from_toml_str("[solver]\nkind = \"periodic-spectral\"\n[profile]\nkind = \"sine_perturbed\"\namplitude = 0.05\n", &[]).is_err());
        assert!(RunConfig::from_toml_str("[fits]\nwindow = [0.0, 10.0]\n", &[]).is_err());
    }
}
