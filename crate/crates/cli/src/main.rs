use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use shearlab::config::RunConfig;
use shearlab::diagnostics::check_line;
use shearlab::grid::C64;
use shearlab::oracle::{cc_propagator, couette_velocity_multipliers};
use shearlab::report::{
    blowup_report, decay_report, default_window, energy_report, load_mode_tables, load_run_config,
    mode_from_file_name, ModeTable,
};
use shearlab::run::{fmt_float, run, Table};
use shearlab::spectral::{Basis, CoefficientRecord, CoefficientVerifier};

#[derive(Parser)]
#[command(name = "shearlab", version, about = "Linearized Euler shear-flow laboratory")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SHEARLAB_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML scenario file; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,

    /// `key.path=value`, applied after the file. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve every mode of a scenario and write CSVs, summary and manifest.
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit with status 2 when any report check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Couette velocity multipliers and constant-coefficient propagator on a lattice.
    Oracle {
        /// Comma-separated wavenumbers.
        #[arg(long, default_value = "1")]
        k: String,
        /// `start:end:count`.
        #[arg(long, default_value = "-4:4:9")]
        eta: String,
        /// `start:end:count`.
        #[arg(long, default_value = "0:100:101")]
        t: String,
        /// Propagator constant `c`, as `re` or `re,im`.
        #[arg(long, default_value = "1")]
        c: String,
        /// Directory for `oracle.csv`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form stream-function coefficients against the numeric oracle.
    VerifyBasis {
        /// `exp`, `sin` or `both`.
        #[arg(long, default_value = "both")]
        basis: String,
        /// Comma-separated wavenumbers.
        #[arg(long, default_value = "1,-2.5")]
        k: String,
        /// Comma-separated times.
        #[arg(long, default_value = "0,1.5,-3")]
        t: String,
        /// Largest basis index `j` (`n = 2πj` or `πj`).
        #[arg(long, default_value_t = 4)]
        max_index: i64,
        #[arg(long, default_value_t = 4096)]
        n_points: usize,
        /// Relative tolerance for the analytic vs numeric line.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Directory for `verify_basis.csv`; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Norm ratios and decay-rate fits from a run directory.
    DecayReport {
        /// Run directory holding `mode_k*.csv` (and `config.toml`).
        #[arg(long)]
        input: PathBuf,
        /// Fit window `a,b`; default from the run config or `[T/10, T]`.
        #[arg(long)]
        window: Option<String>,
    },
    /// Monotonicity of the weighted energies in per-mode CSVs.
    EnergyReport {
        /// A `mode_k*.csv` file or a run directory.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Logarithmic growth of the wall derivative on the finite channel.
    BlowupProbe {
        /// Run directory from `simulate`.
        #[arg(long)]
        input: PathBuf,
        /// Config used for the run; defaults to the copy in the run directory.
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Fit window `a,b` for `|dyW| ~ alpha + beta log t`.
        #[arg(long)]
        window: Option<String>,
    },
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("bad number `{x}` in `{s}`")))
        .collect()
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        bail!("expected start:end:count, got `{s}`");
    };
    let (a, b): (f64, f64) = (a.parse()?, b.parse()?);
    let n: usize = n.parse()?;
    Ok(match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
    })
}

fn parse_window(s: &str) -> Result<(f64, f64)> {
    match parse_list(s)?.as_slice() {
        [a, b] if a < b => Ok((*a, *b)),
        _ => bail!("window must be `a,b` with a < b, got `{s}`"),
    }
}

fn load_config(cfg: &ConfigArgs) -> Result<RunConfig> {
    Ok(match &cfg.config {
        Some(p) => RunConfig::load(p, &cfg.overrides).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::from_toml_str("", &cfg.overrides)?,
    })
}

/// Writes CSV rows to `dir/name`, or stdout.
fn emit_csv(out: Option<&Path>, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            Box::new(std::fs::File::create(dir.join(name))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn simulate(cfg: &ConfigArgs, out: Option<PathBuf>, strict: bool) -> Result<ExitCode> {
    let config = load_config(cfg)?;
    let dir = out.unwrap_or_else(|| PathBuf::from(&config.output.dir));
    let outcome = run(&config, &dir)?;
    print!("{}", outcome.summary);
    println!("wrote {} files to {}", outcome.files.len(), dir.display());
    Ok(if strict && !outcome.passed() {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn oracle(k: &str, eta: &str, t: &str, c: &str, out: Option<PathBuf>) -> Result<()> {
    let ks = parse_list(k)?;
    if ks.contains(&0.0) {
        bail!("wavenumber must be nonzero");
    }
    let c = match parse_list(c)?.as_slice() {
        [re] => C64::new(*re, 0.0),
        [re, im] => C64::new(*re, *im),
        _ => bail!("--c takes `re` or `re,im`"),
    };
    let (etas, ts) = (parse_range(eta)?, parse_range(t)?);
    let mut rows = Vec::new();
    for &k in &ks {
        for &eta in &etas {
            for &t in &ts {
                let (m1, m2) = couette_velocity_multipliers(k, eta, t);
                let p = cc_propagator(c, k, eta, t);
                rows.push(
                    [k, eta, t, m1.re, m1.im, m2.re, m2.im, m1.norm(), m2.norm(), p.re, p.im]
                        .iter()
                        .map(|&x| fmt_float(x))
                        .collect(),
                );
            }
        }
    }
    emit_csv(
        out.as_deref(),
        "oracle.csv",
        &["k", "eta", "t", "m1_re", "m1_im", "m2_re", "m2_im", "m1_abs", "m2_abs", "prop_re", "prop_im"],
        rows,
    )
}

#[allow(clippy::too_many_arguments)]
fn verify_basis(
    basis: &str,
    k: &str,
    t: &str,
    max_index: i64,
    n_points: usize,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let bases = match basis {
        "exp" => vec![Basis::Exp],
        "sin" => vec![Basis::Sin],
        "both" => vec![Basis::Exp, Basis::Sin],
        other => bail!("unknown basis `{other}` (exp, sin, both)"),
    };
    let (ks, ts) = (parse_list(k)?, parse_list(t)?);
    let verifier = CoefficientVerifier::new(n_points);
    let mut records: Vec<CoefficientRecord> = Vec::new();
    let mut lines = Vec::new();
    for b in bases {
        let idx: Vec<i64> = match b {
            Basis::Exp => (-max_index..=max_index).collect(),
            Basis::Sin => (1..=max_index.max(1)).collect(),
        };
        let (recs, sum) = verifier.coefficient_sweep(b, &ks, &ts, &idx)?;
        lines.push(check_line(
            &format!("{b:?}_analytic_vs_numeric"),
            Some(sum.max_an_num <= tol),
            &format!("max {:.3e} over {} coefficients (tol {tol:e})", sum.max_an_num, sum.count),
        ));
        lines.push(format!(
            "INFO {b:?}_analytic_vs_printed: max {:.3e}, {} degenerate n=m entries",
            sum.max_an_printed, sum.degenerate
        ));
        records.extend(recs);
    }
    let rows = records
        .iter()
        .map(|r| {
            [
                r.n,
                r.m,
                r.k,
                r.t,
                r.analytic.re,
                r.analytic.im,
                r.printed.re,
                r.printed.im,
                r.numeric.re,
                r.numeric.im,
                r.disc_an_num,
                r.disc_an_printed,
            ]
            .iter()
            .map(|&x| fmt_float(x))
            .collect()
        })
        .collect();
    emit_csv(
        out.as_deref(),
        "verify_basis.csv",
        &[
            "n",
            "m",
            "k",
            "t",
            "analytic_re",
            "analytic_im",
            "printed_re",
            "printed_im",
            "numeric_re",
            "numeric_im",
            "disc_an_num",
            "disc_an_printed",
        ],
        rows,
    )?;
    let failed = lines.iter().any(|l| l.starts_with("FAIL"));
    for l in lines {
        eprintln!("{l}");
    }
    Ok(if failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn decay(input: &Path, window: Option<&str>) -> Result<()> {
    let modes = load_mode_tables(input)?;
    let config = load_run_config(input)?;
    let tol = config.as_ref().map(|c| c.tolerances.report()).unwrap_or_default();
    let window = match window {
        Some(w) => parse_window(w)?,
        None => match config.as_ref().and_then(|c| c.fits.window) {
            Some([a, b]) => (a, b),
            None => default_window(&modes[0].table.series("t")?),
        },
    };
    for l in decay_report(&modes, window, &tol)? {
        println!("{l}");
    }
    Ok(())
}

fn energy(input: &Path, tol: f64) -> Result<()> {
    let modes = if input.is_dir() {
        load_mode_tables(input)?
    } else {
        let k = input
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(mode_from_file_name)
            .unwrap_or(f64::NAN);
        vec![ModeTable {
            k,
            table: Table::read(input)?,
        }]
    };
    println!("column,violations,max_relative");
    for l in energy_report(&modes, tol)? {
        println!("{},{},{}", l.column, l.violations, fmt_float(l.max_relative));
    }
    Ok(())
}

fn blowup(input: &Path, cfg: &ConfigArgs, window: Option<&str>) -> Result<()> {
    let path = cfg.config.clone().unwrap_or_else(|| input.join("config.toml"));
    if !path.exists() {
        bail!("{} has no config.toml; pass --config", input.display());
    }
    let config = RunConfig::load(&path, &cfg.overrides).with_context(|| format!("loading {}", path.display()))?;
    let modes = load_mode_tables(input)?;
    let window = window.map(parse_window).transpose()?;
    for l in blowup_report(&modes, &config, window)? {
        println!("{l}");
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::Simulate { cfg, out, strict } => simulate(&cfg, out, strict),
        Command::Oracle { k, eta, t, c, out } => oracle(&k, &eta, &t, &c, out).map(|_| ExitCode::SUCCESS),
        Command::VerifyBasis {
            basis,
            k,
            t,
            max_index,
            n_points,
            tol,
            out,
        } => verify_basis(&basis, &k, &t, max_index, n_points, tol, out),
        Command::DecayReport { input, window } => decay(&input, window.as_deref()).map(|_| ExitCode::SUCCESS),
        Command::EnergyReport { input, tol } => energy(&input, tol).map(|_| ExitCode::SUCCESS),
        Command::BlowupProbe { input, cfg, window } => {
            blowup(&input, &cfg, window.as_deref()).map(|_| ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
