//! Command implementations behind the `carfollow` binary.

pub mod config;
pub mod csv;
pub mod svg;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use carfollow::analysis::{
    default_frequency_grid, linearize, magnitude_m, magnitude_m1, string_stability_oracle, sweep_stability,
    OracleSettings, StabilityGrid, DIAGRAM_HEADWAYS,
};
use carfollow::plant::DisturbanceSpec;
use carfollow::sim::{builtin_scenario, LeadProfile, PlantKind, Scenario, SimTrace};
use carfollow::{ControlLaw, ControllerParams, RangePolicy};

use crate::config::Config;

pub const CONFIG_ENV: &str = "CARFOLLOW_CONFIG";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Where the scenario comes from, plus command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct SimulateArgs {
    pub scenario: Option<String>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub svg: Option<PathBuf>,
    pub controller: Option<String>,
    pub plant: Option<String>,
    pub range_policy: Option<String>,
}

fn load_config(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Config::from_text(&text)
        .map(|c| c.scenario)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Resolves the scenario and applies `--controller`, `--plant` and
/// `--range-policy`, in that order.
pub fn resolve_scenario(args: &SimulateArgs) -> Result<Scenario, CliError> {
    let env_config = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let mut sc = match (&args.scenario, &args.config) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give --scenario or --config, not both".into())),
        (Some(name), None) => builtin_scenario(name).map_err(|e| CliError::Usage(e.to_string()))?,
        (None, Some(path)) => load_config(path)?,
        (None, None) => match env_config {
            Some(path) => load_config(&path)?,
            None => {
                return Err(CliError::Usage(format!(
                    "give --scenario or --config (or set {CONFIG_ENV})"
                )))
            }
        },
    };
    if let Some(law) = &args.controller {
        sc.law = config::parse_law(law)?;
        sc.policy = match sc.law {
            ControlLaw::Linear => RangePolicy::FollowerBased,
            ControlLaw::Nonlinear => RangePolicy::PredecessorBased,
        };
    }
    if let Some(plant) = &args.plant {
        let tau = match sc.plant {
            PlantKind::Lag { tau } => tau,
            _ => 0.8,
        };
        sc.plant = config::parse_plant(plant, tau)?;
        let delta = match sc.disturbance {
            DisturbanceSpec::Constant(d) | DisturbanceSpec::ConstantHat(d) => d,
            _ => 0.5,
        };
        sc.disturbance = match (sc.plant, sc.disturbance) {
            (PlantKind::Disturbed | PlantKind::Lag { .. }, DisturbanceSpec::PhysicsDerived) => {
                DisturbanceSpec::PhysicsDerived
            }
            (plant, _) => config::constant_disturbance(plant, delta),
        };
    }
    if let Some(policy) = &args.range_policy {
        sc.policy = config::parse_policy(policy)?;
    }
    sc.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(sc)
}

/// Runs a scenario and writes its CSV (and SVG). On an aborted run the
/// partial trace is still written before reporting the failure.
pub fn simulate(args: &SimulateArgs) -> Result<String, CliError> {
    let sc = resolve_scenario(args)?;
    let trace = match carfollow::run(&sc) {
        Ok(trace) => trace,
        Err(carfollow::Error::SimulationAborted { t, reason, partial }) => {
            write_file(&args.out, &csv::trace_csv(&partial))?;
            return Err(CliError::Runtime(format!(
                "simulation aborted at t = {t}: {reason}; partial trace of {} rows written to {}",
                partial.rows.len(),
                args.out.display()
            )));
        }
        Err(e) => return Err(runtime(e)),
    };
    write_file(&args.out, &csv::trace_csv(&trace))?;
    if let Some(svg) = &args.svg {
        write_file(svg, &svg::trace_svg(&trace))?;
    }
    Ok(summarize(&sc, &trace))
}

/// One line of headline numbers for a trace.
pub fn summarize(sc: &Scenario, trace: &SimTrace) -> String {
    let mut line = format!("{}: {} rows", trace.scenario, trace.rows.len());
    let Some(last) = trace.last() else {
        return line;
    };
    let _ = write!(
        line,
        ", min h {:.3} m, a_des in [{:.3}, {:.3}] m/s^2, min a_cf {:.3} m/s^2, final h {:.3} m, final v_F {:.4} m/s",
        trace.min_by(|r| r.h),
        trace.min_by(|r| r.a_des),
        trace.max_by(|r| r.a_des),
        trace.min_by(|r| r.a_cf),
        last.h,
        last.v_f
    );
    let settled = trace
        .rows
        .iter()
        .rposition(|r| r.v_hat().abs() >= 0.05 || r.h_hat().abs() >= 0.1)
        .map(|i| trace.rows.get(i + 1).map(|r| r.t));
    match settled {
        None => line.push_str(", settled from the start"),
        Some(Some(t)) => {
            let _ = write!(line, ", settled at {t:.2} s");
        }
        Some(None) => line.push_str(", not settled"),
    }
    if let LeadProfile::Sinusoid { amp, freq_hz, .. } = sc.lead {
        let from = last.t - 2.0 / freq_hz;
        let (lo, hi) = trace
            .rows
            .iter()
            .filter(|r| r.t >= from)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.v_f), hi.max(r.v_f)));
        let _ = write!(line, ", steady v_F amplitude {:.3} vs lead {amp}", 0.5 * (hi - lo));
    }
    let clamped = trace.clamped_fraction();
    if clamped > 0.0 {
        let _ = write!(line, ", surface clamped {:.1}% of samples", 100.0 * clamped);
    }
    line
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub t_h: Vec<f64>,
    pub k1_range: (f64, f64),
    pub k2_range: (f64, f64),
    pub grid: usize,
    pub out: PathBuf,
}

/// Default gain window of the stability sweep.
pub const SWEEP_RANGE: (f64, f64) = (0.0, 4.0);

impl Default for SweepArgs {
    fn default() -> Self {
        Self {
            t_h: DIAGRAM_HEADWAYS.to_vec(),
            k1_range: SWEEP_RANGE,
            k2_range: SWEEP_RANGE,
            grid: 200,
            out: PathBuf::from("sweep.csv"),
        }
    }
}

fn sweep_grids(args: &SweepArgs) -> Result<Vec<StabilityGrid>, CliError> {
    if args.t_h.is_empty() {
        return Err(CliError::Usage("--t-h needs at least one value".into()));
    }
    args.t_h
        .iter()
        .map(|&t_h| {
            sweep_stability(args.k2_range, args.k1_range, args.grid, t_h).map_err(|e| CliError::Usage(e.to_string()))
        })
        .collect()
}

fn sweep_summary(grids: &[StabilityGrid]) -> String {
    let counts: Vec<String> = grids
        .iter()
        .map(|g| format!("t_h = {}: {} of {}", g.t_h, g.string_stable_count(), g.cells.len()))
        .collect();
    format!("string-stable cells: {}", counts.join("; "))
}

pub fn sweep(args: &SweepArgs) -> Result<String, CliError> {
    let grids = sweep_grids(args)?;
    write_file(&args.out, &csv::sweep_csv(&grids))?;
    Ok(sweep_summary(&grids))
}

#[derive(Debug, Clone)]
pub struct FreqArgs {
    pub k1: f64,
    pub k2: f64,
    pub t_h: f64,
    pub oracle: bool,
    pub out: PathBuf,
}

/// Frequencies [Hz] at which `--oracle` runs the time-domain check.
pub const ORACLE_FREQS: [f64; 4] = [0.02, 0.05, 0.1, 0.2];

/// Frequency response CSV. Starts with an `ω = 0` row, then the default
/// log grid; `--oracle` adds rows at [`ORACLE_FREQS`].
pub fn freq(args: &FreqArgs) -> Result<String, CliError> {
    let (k1, k2, t_h) = (args.k1, args.k2, args.t_h);
    linearize(k1, k2, t_h).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rows: Vec<(f64, Option<f64>)> = std::iter::once(0.0)
        .chain(default_frequency_grid())
        .map(|w| (w, None))
        .collect();
    let mut failure = None;
    let mut summary = format!("k1 = {k1}, k2 = {k2}, t_h = {t_h}");
    if args.oracle {
        let params = ControllerParams {
            k1,
            k2,
            t_h,
            ..ControllerParams::default()
        };
        params.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        for f in ORACLE_FREQS {
            let w = std::f64::consts::TAU * f;
            match string_stability_oracle(&params, f, &OracleSettings::default()) {
                Ok(ratio) => {
                    let _ = write!(summary, "; {f} Hz oracle {ratio:.5} vs M {:.5}", magnitude_m(k1, k2, t_h, w));
                    rows.push((w, Some(ratio)));
                }
                Err(e) => {
                    rows.push((w, Some(f64::NAN)));
                    failure = Some(e.to_string());
                    break;
                }
            }
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    let mut out = String::from(csv::FREQ_HEADER);
    out.push('\n');
    for (w, oracle) in rows {
        csv::freq_row(&mut out, w, magnitude_m1(k1, k2, t_h, w), magnitude_m(k1, k2, t_h, w), oracle);
    }
    write_file(&args.out, &out)?;
    match failure {
        Some(e) => Err(CliError::Runtime(e)),
        None => Ok(summary),
    }
}

pub const FIGURES: &[&str] = &["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10"];

/// Writes the data (and plots) behind one figure into `outdir`.
pub fn reproduce(figure: &str, outdir: &Path) -> Result<String, CliError> {
    let scenarios: Vec<String> = match figure {
        "fig3" => Vec::new(),
        "fig4" | "fig5" | "fig6" | "fig7" => vec![figure.to_string(), format!("{figure}-linear")],
        "fig8" | "fig9" | "fig10" => vec![format!("{figure}a"), format!("{figure}b")],
        _ => {
            return Err(CliError::Usage(format!(
                "unknown figure `{figure}`; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    std::fs::create_dir_all(outdir).map_err(|source| CliError::Io {
        path: outdir.to_path_buf(),
        source,
    })?;
    if figure == "fig3" {
        let mut grids = Vec::new();
        for t_h in DIAGRAM_HEADWAYS {
            let args = SweepArgs {
                t_h: vec![t_h],
                out: outdir.join(format!("fig3_th{t_h}.csv")),
                ..SweepArgs::default()
            };
            let grid = sweep_grids(&args)?;
            write_file(&args.out, &csv::sweep_csv(&grid))?;
            grids.extend(grid);
        }
        return Ok(format!("fig3: {}", sweep_summary(&grids)));
    }
    let mut lines = Vec::new();
    for name in scenarios {
        let sc = builtin_scenario(&name).map_err(runtime)?;
        let trace = carfollow::run(&sc).map_err(runtime)?;
        write_file(&outdir.join(format!("{name}.csv")), &csv::trace_csv(&trace))?;
        write_file(&outdir.join(format!("{name}.svg")), &svg::trace_svg(&trace))?;
        lines.push(summarize(&sc, &trace));
    }
    Ok(lines.join("\n"))
}

/// Parses `lo:hi`.
pub fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound in `{s}`"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound in `{s}`"))?;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(format!("range must satisfy 0 <= lo < hi, got `{s}`"));
    }
    Ok((lo, hi))
}
