//! Post-processing of run directories: decay, energy and boundary-growth
//! reports read back from the per-mode CSVs.

use std::path::Path;

use crate::config::RunConfig;
use crate::diagnostics::{blowup_slopes, check_line, fit_log_growth, fit_power_law, monotonicity, ReportTolerances};
use crate::error::{Error, Result};
use crate::run::Table;

/// A per-mode table keyed by its wavenumber.
#[derive(Debug, Clone)]
pub struct ModeTable {
    pub k: f64,
    pub table: Table,
}

/// Parses `mode_k<k>.csv`.
pub fn mode_from_file_name(name: &str) -> Option<f64> {
    name.strip_prefix("mode_k")?.strip_suffix(".csv")?.parse().ok()
}

/// Every `mode_k*.csv` in `dir`, sorted by `k`.
pub fn load_mode_tables(dir: &Path) -> Result<Vec<ModeTable>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(k) = path.file_name().and_then(|n| n.to_str()).and_then(mode_from_file_name) else {
            continue;
        };
        out.push(ModeTable {
            k,
            table: Table::read(&path)?,
        });
    }
    if out.is_empty() {
        return Err(Error::Validation(format!("no mode_k*.csv files in {}", dir.display())));
    }
    out.sort_by(|a, b| a.k.total_cmp(&b.k));
    Ok(out)
}

/// Loads the resolved `config.toml` a run leaves next to its CSVs.
pub fn load_run_config(dir: &Path) -> Result<Option<RunConfig>> {
    let path = dir.join("config.toml");
    if path.exists() {
        RunConfig::load(&path, &[]).map(Some)
    } else {
        Ok(None)
    }
}

/// `sqrt(Σ_k col²)` per row, or the plain sum when `quadratic` is false.
pub fn combined_series(modes: &[ModeTable], column: &str, quadratic: bool) -> Result<Vec<(f64, f64)>> {
    let first = modes.first().ok_or_else(|| Error::Validation("no modes".into()))?;
    let t = first.table.column("t")?;
    let mut acc = vec![0.0; t.len()];
    for m in modes {
        let v = m.table.column(column)?;
        if v.len() != t.len() {
            return Err(Error::Validation(format!(
                "mode k={} has {} rows, expected {}",
                m.k,
                v.len(),
                t.len()
            )));
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += if quadratic { x * x } else { x };
        }
    }
    Ok(t.into_iter()
        .zip(acc)
        .map(|(t, a)| (t, if quadratic { a.sqrt() } else { a }))
        .collect())
}

fn sup_ratio(series: &[(f64, f64)]) -> f64 {
    let base = series.first().map_or(0.0, |p| p.1);
    let sup = series.iter().map(|p| p.1).fold(0.0, f64::max);
    match (base == 0.0, sup == 0.0) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ => sup / base,
    }
}

/// Default window `[T/10, T]` from the last sample time.
pub fn default_window(series: &[(f64, f64)]) -> (f64, f64) {
    let t = series.last().map_or(0.0, |p| p.0);
    (t / 10.0, t)
}

/// Norm ratios and decay-rate fits over the combined modes.
pub fn decay_report(modes: &[ModeTable], window: (f64, f64), tol: &ReportTolerances) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for (col, label) in [("l2_norm", "L2"), ("h1_norm", "H1"), ("h2_norm", "H2")] {
        let r = sup_ratio(&combined_series(modes, col, true)?);
        let ok = (col == "h2_norm").then_some(r <= tol.h2_ratio_max);
        let detail = format!("sup ratio {r:.6}");
        lines.push(match ok {
            Some(_) if r.is_finite() => check_line(&format!("{label}_ratio"), ok, &format!("{detail} (limit {})", tol.h2_ratio_max)),
            Some(_) => check_line(&format!("{label}_ratio"), None, &detail),
            None => format!("INFO {label}_ratio: {detail}"),
        });
    }
    for (col, name, target) in [
        ("v_norm", "v_rate", Some(tol.v_exponent)),
        ("v2_norm", "v2_rate", Some(tol.v2_exponent)),
        ("scatter_residual", "scatter_rate", None),
    ] {
        let mut series = combined_series(modes, col, true)?;
        if col == "scatter_residual" {
            // zero by construction at the reference time T
            series.pop();
        }
        lines.push(match fit_power_law(&series, window) {
            Ok(f) => {
                let ok = match target {
                    Some((e, tol)) => (f.exponent - e).abs() <= tol,
                    None => f.exponent <= tol.scatter_exponent_max,
                };
                let limit = match target {
                    Some((e, tol)) => format!("target {e} ± {tol}"),
                    None => format!("limit {}", tol.scatter_exponent_max),
                };
                check_line(
                    name,
                    Some(ok),
                    &format!(
                        "exponent {:.4} ({limit}), r2 {:.4}, window [{}, {}]",
                        f.exponent, f.r_squared, window.0, window.1
                    ),
                )
            }
            Err(e) => check_line(name, None, &format!("no fit ({e})")),
        });
    }
    Ok(lines)
}

/// Violation statistics of one monotone column.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLine {
    pub column: String,
    pub violations: usize,
    pub max_relative: f64,
}

/// Monotonicity of `I0`, `I1`, `I2` and `E2 = I0 + I1 + I2`, summed over modes.
pub fn energy_report(modes: &[ModeTable], tol: f64) -> Result<Vec<EnergyLine>> {
    let cols = ["I0", "I1", "I2"];
    let mut series = Vec::new();
    for c in cols {
        series.push((c.to_string(), combined_series(modes, c, false)?));
    }
    let e2: Vec<(f64, f64)> = (0..series[0].1.len())
        .map(|i| (series[0].1[i].0, series.iter().map(|(_, s)| s[i].1).sum()))
        .collect();
    series.push(("E2".to_string(), e2));
    Ok(series
        .into_iter()
        .map(|(column, s)| {
            let m = monotonicity(&s, tol);
            EnergyLine {
                column,
                violations: m.violations,
                max_relative: m.max_relative,
            }
        })
        .collect())
}

/// Log-growth fits of `|∂yW|` at both walls against the predicted slopes.
/// Requires the run's config to recover the wall values of `f`, `g`, `ω0`.
pub fn blowup_report(modes: &[ModeTable], config: &RunConfig, window: Option<(f64, f64)>) -> Result<Vec<String>> {
    let scenario = config.scenario()?;
    if !scenario.geometry.is_finite() {
        return Ok(vec![check_line("boundary_growth", None, "infinite channel has no walls")]);
    }
    let window = window.unwrap_or(scenario.log_window);
    let (f, g) = (scenario.profile.f_values(), scenario.profile.g_values());
    let last = f.len() - 1;
    let mut lines = Vec::new();
    for m in modes.iter().filter(|m| m.k > 0.0) {
        let Some(init) = scenario.initial.iter().find(|s| (s.k - m.k).abs() <= 1e-6 * m.k.abs().max(1.0)) else {
            lines.push(check_line("boundary_growth", None, &format!("k={:.6} not in the configured modes", m.k)));
            continue;
        };
        for (wall, col, idx, w0) in [
            ("0", "dyW_at_0", 0, init.w.first().norm()),
            ("1", "dyW_at_1", last, init.w.last().norm()),
        ] {
            let series = m.table.series(col)?;
            let (pred, corrected) = blowup_slopes(f[idx], g[idx], w0, m.k);
            let name = format!("boundary_growth k={:.6} y={wall}", m.k);
            lines.push(match fit_log_growth(&series, window) {
                Ok(fit) => check_line(
                    &name,
                    Some(fit.beta > 0.0 && fit.r_squared >= 0.9),
                    &format!(
                        "slope {:.6} (r2 {:.4}), predicted {:.6}, trace-corrected {:.6}",
                        fit.beta,
                        fit.r_squared,
                        pred.abs(),
                        corrected.abs()
                    ),
                ),
                Err(e) => check_line(&name, None, &format!("no fit ({e})")),
            });
        }
    }
    let h2 = combined_series(modes, "h2_norm", true)?;
    let growth: Vec<String> = [0.25, 0.5, 1.0]
        .iter()
        .filter_map(|&frac| {
            let tmax = h2.last()?.0 * frac;
            let upto: Vec<(f64, f64)> = h2.iter().copied().filter(|p| p.0 <= tmax + 1e-12).collect();
            Some(format!("T={tmax}: {:.6}", sup_ratio(&upto)))
        })
        .collect();
    lines.push(format!("INFO h2_ratio_growth: {}", growth.join(", ")));
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: Vec<Vec<f64>>) -> Table {
        Table {
            headers: crate::run::MODE_COLUMNS.iter().map(|s| s.to_string()).collect(),
            rows,
        }
    }

    fn row(t: f64, i0: f64, v: f64) -> Vec<f64> {
        vec![t, 1.0, 1.0, 1.0, i0, 0.0, 0.0, v, v * v, 0.0, 0.0, 0.0]
    }

    #[test]
    fn file_names_round_trip() {
        for k in [1.0, -2.5, 12.566371] {
            assert_eq!(mode_from_file_name(&crate::run::mode_file_name(k)), Some(k));
        }
        assert_eq!(mode_from_file_name("summary.txt"), None);
    }

    #[test]
    fn combined_and_reports() {
        let a = ModeTable {
            k: 1.0,
            table: table((1..=20).map(|i| row(i as f64, 3.0 - i as f64 * 0.1, 1.0 / i as f64)).collect()),
        };
        let b = ModeTable {
            k: -1.0,
            table: table((1..=20).map(|i| row(i as f64, 1.0, 1.0 / i as f64)).collect()),
        };
        let modes = [b, a];
        let s = combined_series(&modes, "l2_norm", true).unwrap();
        assert!((s[0].1 - 2f64.sqrt()).abs() < 1e-15);
        let lines = decay_report(&modes, (1.0, 20.0), &ReportTolerances::default()).unwrap();
        assert!(lines.iter().any(|l| l.starts_with("PASS v_rate")), "{lines:?}");
        assert!(lines.iter().any(|l| l.starts_with("PASS v2_rate")), "{lines:?}");
        assert!(lines.iter().any(|l| l.starts_with("PASS H2_ratio")), "{lines:?}");
        let e = energy_report(&modes, 1e-8).unwrap();
        assert_eq!(e.len(), 4);
        assert!(e.iter().all(|l| l.violations == 0));

        let mut rising = modes.clone();
        rising[1].table.rows[5][4] = 10.0;
        let e = energy_report(&rising, 1e-8).unwrap();
        assert_eq!(e[0].violations, 1);
        assert!(e[0].max_relative > 1.0);
    }

    #[test]
    fn mismatched_lengths() {
        let a = ModeTable { k: 1.0, table: table(vec![row(0.0, 1.0, 1.0)]) };
        let b = ModeTable { k: 2.0, table: table(vec![]) };
        assert!(combined_series(&[a, b], "I0", false).is_err());
    }
}
