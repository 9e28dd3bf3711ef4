//! Run orchestration: evolve every mode, write per-mode CSVs, the summary
//! report and a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{RunConfig, Scenario};
use crate::diagnostics::{
    blowup_slopes, consistency_term, fit_log_growth, fit_power_law, stability_report, StabilityReport,
};
use crate::error::{Error, Result};
use crate::evolution::{evolve_modes, scattering_profile, Dynamics, EvolutionHistory, ModeState};
use crate::profiles::smallness_parameter;

/// Columns of the per-mode CSV.
pub const MODE_COLUMNS: [&str; 12] = [
    "t",
    "l2_norm",
    "h1_norm",
    "h2_norm",
    "I0",
    "I1",
    "I2",
    "v_norm",
    "v2_norm",
    "dyW_at_0",
    "dyW_at_1",
    "scatter_residual",
];

pub fn mode_file_name(k: f64) -> String {
    format!("mode_k{k:.6}.csv")
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            key: None,
            msg: format!("{other:?}"),
        },
    }
}

/// Writes a header and rows of floats.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt_float(x))).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mode_csv(path: &Path, history: &EvolutionHistory) -> Result<()> {
    let (_, residual) = scattering_profile(history);
    let rows = history.snapshots.iter().zip(&residual).map(|(s, &(_, r))| {
        let e = &s.energy;
        vec![
            s.state.t, e.l2, e.h1, e.h2, e.i0, e.i1, e.i2, e.v_norm, e.v2_norm, e.dyw_bounds.0, e.dyw_bounds.1, r,
        ]
    });
    write_table(path, &MODE_COLUMNS, rows)
}

/// A numeric CSV read back into columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
        let headers: Vec<String> = r.headers().map_err(csv_error)?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(csv_error)?;
            let row = rec
                .iter()
                .zip(&headers)
                .map(|(v, h)| {
                    v.trim().parse::<f64>().map_err(|e| Error::Parse {
                        key: Some(h.clone()),
                        msg: format!("{}: row {}: {e}", path.display(), line + 2),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Ok(Self { headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            key: Some(name.into()),
            msg: format!("missing column (have {})", self.headers.join(", ")),
        })?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// `(t, column)` pairs.
    pub fn series(&self, name: &str) -> Result<Vec<(f64, f64)>> {
        Ok(self.column("t")?.into_iter().zip(self.column(name)?).collect())
    }
}

#[derive(Debug, Serialize)]
struct Manifest {
    version: &'static str,
    config_sha256: String,
    modes: Vec<f64>,
    files: Vec<ManifestFile>,
}

#[derive(Debug, Serialize)]
struct ManifestFile {
    name: String,
    sha256: String,
}

fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub struct RunOutcome {
    pub histories: Vec<EvolutionHistory>,
    pub report: StabilityReport,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.checks.iter().all(|(_, ok, _)| *ok != Some(false))
    }
}

/// Consistency-term series over the shared snapshot times.
pub fn consistency_series(scenario: &Scenario, histories: &[EvolutionHistory], max_k: f64) -> Result<Vec<(f64, f64)>> {
    use rayon::prelude::*;
    let n = histories.iter().map(|h| h.snapshots.len()).min().unwrap_or(0);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let states: Vec<ModeState> = histories.iter().map(|h| h.snapshots[i].state.clone()).collect();
            let v = consistency_term(&states, &scenario.profile, &scenario.geometry, scenario.solver.as_ref(), max_k)?;
            Ok((states[0].t, v))
        })
        .collect()
}

/// Evolves all modes of the scenario.
pub fn evolve_scenario(config: &RunConfig, scenario: &Scenario) -> Result<Vec<EvolutionHistory>> {
    let dynamics = Dynamics::new(&scenario.profile, &scenario.geometry, scenario.solver.as_ref())?;
    evolve_modes(
        &dynamics,
        &scenario.initial,
        config.time.t_final,
        scenario.dt,
        config.time.stride,
        scenario.weights.as_ref(),
    )
}

/// Runs the configured scenario and writes every artifact under `out_dir`.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    let scenario = config.scenario()?;
    let histories = evolve_scenario(config, &scenario)?;
    fs::create_dir_all(out_dir)?;
    let mut files = Vec::new();

    for h in &histories {
        let path = out_dir.join(mode_file_name(h.initial.k));
        write_mode_csv(&path, h)?;
        files.push(path);
    }

    let report = stability_report(&histories, scenario.fit_window, &config.tolerances.report());
    let mut summary = summary_header(config, &scenario);
    for line in report.lines() {
        let _ = writeln!(summary, "{line}");
    }
    let _ = writeln!(
        summary,
        "sup ratios: L2 {:.6}, H1 {:.6}, H2 {:.6}; max wall drift before re-pinning {:.3e}",
        report.l2_ratio, report.h1_ratio, report.h2_ratio, report.max_boundary_drift
    );
    append_boundary_fits(&mut summary, config, &scenario, &histories);

    if config.fits.consistency {
        let max_k = scenario.modes.base() * config.max_mode_k as f64;
        let series = consistency_series(&scenario, &histories, max_k)?;
        let path = out_dir.join("consistency.csv");
        write_table(&path, &["t", "consistency"], series.iter().map(|&(t, v)| vec![t, v]))?;
        files.push(path);
        let _ = match fit_power_law(&series, scenario.fit_window) {
            Ok(f) => writeln!(summary, "consistency term: exponent {:.4} (r2 {:.4})", f.exponent, f.r_squared),
            Err(e) => writeln!(summary, "consistency term: no fit ({e})"),
        };
    }

    let summary_path = out_dir.join("summary.txt");
    fs::write(&summary_path, &summary)?;
    files.push(summary_path);
    let config_path = out_dir.join("config.toml");
    fs::write(&config_path, config.to_toml())?;
    files.push(config_path);

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config.sha256(),
        modes: scenario.modes.modes().to_vec(),
        files: files
            .iter()
            .map(|p| {
                Ok(ManifestFile {
                    name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                    sha256: file_sha256(p)?,
                })
            })
            .collect::<Result<_>>()?,
    };
    let manifest_path = out_dir.join("manifest.toml");
    fs::write(
        &manifest_path,
        toml::to_string(&manifest).map_err(|e| Error::Validation(e.to_string()))?,
    )?;
    files.push(manifest_path);

    Ok(RunOutcome {
        histories,
        report,
        summary,
        files,
    })
}

fn summary_header(config: &RunConfig, scenario: &Scenario) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "shearlab run summary");
    let _ = writeln!(s, "config_sha256 = {}", config.sha256());
    let _ = writeln!(
        s,
        "profile = {} (amplitude {}), geometry = {:?}, n_points = {}, solver = {}",
        config.profile.kind, config.profile.amplitude, config.geometry.kind, config.grid.n_points, config.solver.kind
    );
    let _ = writeln!(
        s,
        "modes = {:?}, T = {}, dt = {}, fit window = [{}, {}]",
        scenario.modes.modes(),
        config.time.t_final,
        scenario.dt,
        scenario.fit_window.0,
        scenario.fit_window.1
    );
    let s_idx = config.gate.s.min(crate::profiles::MAX_F_DERIVATIVE - 1);
    let gate = smallness_parameter(&scenario.profile, config.period_l, s_idx);
    let _ = writeln!(
        s,
        "smallness L*|f|_W{}inf = {gate:.6} ({} threshold {})",
        s_idx + 1,
        if gate <= config.gate.threshold { "within" } else { "above" },
        config.gate.threshold
    );
    s
}

/// Log-growth of `|∂yW|` at both walls for each positive mode (finite channel).
fn append_boundary_fits(summary: &mut String, config: &RunConfig, scenario: &Scenario, histories: &[EvolutionHistory]) {
    if !config.geometry.is_finite() {
        return;
    }
    let p = &scenario.profile;
    let (f, g) = (p.f_values(), p.g_values());
    let last = f.len() - 1;
    for h in histories.iter().filter(|h| h.initial.k > 0.0) {
        let k = h.initial.k;
        for (wall, idx, w0, column) in [
            ("0", 0, h.initial.w.first().norm(), 0usize),
            ("1", last, h.initial.w.last().norm(), 1),
        ] {
            let series = h.series(|e| if column == 0 { e.dyw_bounds.0 } else { e.dyw_bounds.1 });
            let (pred, corrected) = blowup_slopes(f[idx], g[idx], w0, k);
            let _ = match fit_log_growth(&series, scenario.log_window) {
                Ok(fit) => writeln!(
                    summary,
                    "boundary growth k={k:.6} y={wall}: |dyW| ~ {:.6} + {:.6} log t (r2 {:.4}); predicted |slope| {:.6} (trace-corrected {:.6})",
                    fit.alpha,
                    fit.beta,
                    fit.r_squared,
                    pred.abs(),
                    corrected.abs()
                ),
                Err(e) => writeln!(summary, "boundary growth k={k:.6} y={wall}: no fit ({e})"),
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(extra: &[&str]) -> RunConfig {
        let mut o: Vec<String> = vec![
            "grid.n_points=65".into(),
            "time.T=2".into(),
            "time.dt=0.05".into(),
            "time.stride=2".into(),
        ];
        o.extend(extra.iter().map(|s| s.to_string()));
        RunConfig::from_toml_str("", &o).unwrap()
    }

    #[test]
    fn couette_run_is_frozen_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let c = quick(&[]);
        let a = run(&c, &dir.path().join("a")).unwrap();
        run(&c, &dir.path().join("b")).unwrap();
        assert_eq!(a.report.l2_ratio, 1.0);
        assert_eq!(a.report.h2_ratio, 1.0);
        for name in ["mode_k1.000000.csv", "mode_k-1.000000.csv", "summary.txt", "manifest.toml"] {
            let x = fs::read(dir.path().join("a").join(name)).unwrap();
            let y = fs::read(dir.path().join("b").join(name)).unwrap();
            assert_eq!(x, y, "{name}");
        }
        let t = Table::read(&dir.path().join("a/mode_k1.000000.csv")).unwrap();
        assert_eq!(t.headers, MODE_COLUMNS);
        assert_eq!(t.rows.len(), 21);
        assert!(t.column("scatter_residual").unwrap().iter().all(|&r| r == 0.0));
        let manifest = fs::read_to_string(dir.path().join("a/manifest.toml")).unwrap();
        assert!(manifest.contains(&c.sha256()));
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(mode_file_name(-4.0 * std::f64::consts::PI), "mode_k-12.566371.csv");
    }

    #[test]
    fn consistency_output() {
        let dir = tempfile::tempdir().unwrap();
        let c = quick(&["fits.consistency=true", "max_mode_K=2", "profile.kind=quadratic", "profile.amplitude=0.05"]);
        let out = run(&c, dir.path()).unwrap();
        assert!(out.files.iter().any(|p| p.ends_with("consistency.csv")));
        assert!(out.summary.contains("boundary growth k=1.000000 y=0"));
    }
}
