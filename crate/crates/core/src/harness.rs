//! Named experiments that regenerate the tables and figure data as CSV or JSON.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::amplitude::{photon_flux_power, pulse_peak_power, CoherentLabel, QuadratureConvention};
use crate::estimator::{
    classify_phase_squeezed, find_transmissivity, linear_grid, maximize_fidelity, sweep, EstimatorOptions,
    SqueezingEstimate,
};
use crate::fock::{self, Observable};
use crate::interferometer::{
    build_cat, fidelity, min_quadrature_variance, quadrature_density, quadrature_moments, success_probability,
    CatState, Compensation, InterferometerConfig, MIN_TRANSMISSIVITY,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TOOL: &str = "kerr-squeeze";
/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "KERR_SQUEEZE_THREADS";
/// Marker of the only metadata line that varies between runs.
pub const TIMESTAMP_KEY: &str = "generated_unix";

const DEFAULT_P_POINTS: usize = 801;
const DEFAULT_T_POINTS: usize = 50;
const DEFAULT_WAVELENGTH: f64 = 802e-9;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Computation(#[from] crate::Error),
    #[error("i/o: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Computation(_) => 3,
            HarnessError::Io(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HarnessError::Usage(_) => "usage",
            HarnessError::Computation(_) => "computation",
            HarnessError::Io(_) => "io",
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Table1,
    Fig3,
    Fig4,
    Fig5,
    Feasibility,
    Optimize,
    FindT,
    Quadrature,
    Power,
    Oracle,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Table1,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Feasibility,
        Experiment::Optimize,
        Experiment::FindT,
        Experiment::Quadrature,
        Experiment::Power,
        Experiment::Oracle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Feasibility => "feasibility",
            Experiment::Optimize => "optimize",
            Experiment::FindT => "find-t",
            Experiment::Quadrature => "quadrature",
            Experiment::Power => "power",
            Experiment::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// `MIN:MAX:N` on the command line, `{min, max, points}` in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        linear_grid(self.min, self.max, self.points)
    }

    fn validate(&self, name: &str) -> Result<(), HarnessError> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.max < self.min || self.points == 0 {
            return Err(HarnessError::Usage(format!(
                "{name}: need finite min <= max and points >= 1, got {}:{}:{}",
                self.min, self.max, self.points
            )));
        }
        Ok(())
    }
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected MIN:MAX:N, got '{s}'"));
        }
        let min = parts[0].parse::<f64>().map_err(|e| format!("grid min: {e}"))?;
        let max = parts[1].parse::<f64>().map_err(|e| format!("grid max: {e}"))?;
        let points = parts[2].parse::<usize>().map_err(|e| format!("grid points: {e}"))?;
        Ok(Self { min, max, points })
    }
}

/// Experiment settings as read from a config file or flags. Every field is optional; defaults
/// depend on the experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<Experiment>,
    pub alpha: Option<f64>,
    pub phi0: Option<f64>,
    pub t: Option<f64>,
    pub delta: Option<Compensation>,
    pub fidelity_target: Option<f64>,
    pub t_grid: Option<GridSpec>,
    pub p_grid: Option<GridSpec>,
    pub wavelength: Option<f64>,
    pub flux: Option<f64>,
    pub output_path: Option<PathBuf>,
    pub format: Option<Format>,
    pub align_peaks: Option<bool>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::Usage(format!("config file: {e}")))
    }

    /// Fields set in `other` replace those in `self`.
    pub fn overridden_by(self, other: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            experiment: other.experiment.or(self.experiment),
            alpha: other.alpha.or(self.alpha),
            phi0: other.phi0.or(self.phi0),
            t: other.t.or(self.t),
            delta: other.delta.or(self.delta),
            fidelity_target: other.fidelity_target.or(self.fidelity_target),
            t_grid: other.t_grid.or(self.t_grid),
            p_grid: other.p_grid.or(self.p_grid),
            wavelength: other.wavelength.or(self.wavelength),
            flux: other.flux.or(self.flux),
            output_path: other.output_path.or(self.output_path),
            format: other.format.or(self.format),
            align_peaks: other.align_peaks.or(self.align_peaks),
        }
    }
}

/// Fully defaulted and validated settings; recorded verbatim in every output header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub experiment: Experiment,
    pub alpha: f64,
    pub phi0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    pub delta: Compensation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity_target: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_grid: Option<GridSpec>,
    pub wavelength: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flux: Option<f64>,
    pub align_peaks: bool,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

struct Defaults {
    alpha: f64,
    phi0: f64,
    delta: Compensation,
    t: Option<f64>,
}

fn defaults(experiment: Experiment) -> Defaults {
    let table_alpha = 10f64.powf(2.5);
    let table_phi0 = 2.0 * PI * 1e-5;
    match experiment {
        Experiment::Table1 | Experiment::Fig3 | Experiment::FindT => Defaults {
            alpha: table_alpha,
            phi0: table_phi0,
            delta: Compensation::Fixed(0.0),
            t: None,
        },
        Experiment::Fig4 | Experiment::Optimize | Experiment::Quadrature | Experiment::Power => Defaults {
            alpha: table_alpha,
            phi0: table_phi0,
            delta: Compensation::Fixed(0.0),
            t: Some(0.717),
        },
        Experiment::Fig5 => Defaults {
            alpha: table_alpha,
            phi0: 1.2566e-2,
            delta: Compensation::Auto,
            t: Some(FRAC_1_SQRT_2),
        },
        Experiment::Feasibility => Defaults {
            alpha: 3e6f64.sqrt(),
            phi0: 1e-7,
            delta: Compensation::Auto,
            t: None,
        },
        Experiment::Oracle => Defaults {
            alpha: 2.0,
            phi0: 0.3,
            delta: Compensation::Fixed(0.0),
            t: Some(0.8),
        },
    }
}

fn positive(name: &str, v: f64) -> Result<f64, HarnessError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(HarnessError::Usage(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

impl ResolvedConfig {
    pub fn resolve(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let experiment = cfg
            .experiment
            .ok_or_else(|| HarnessError::Usage("no experiment given".into()))?;
        let d = defaults(experiment);
        let alpha = positive("alpha", cfg.alpha.unwrap_or(d.alpha))?;
        let phi0 = cfg.phi0.unwrap_or(d.phi0);
        if !(phi0.is_finite() && phi0 >= 0.0) {
            return Err(HarnessError::Usage(format!("phi0 must be finite and >= 0, got {phi0}")));
        }
        let t = cfg.t.or(d.t);
        if let Some(t) = t {
            if !(MIN_TRANSMISSIVITY - 1e-12..=1.0).contains(&t) {
                return Err(HarnessError::Usage(format!("t must lie in [1/sqrt(2), 1], got {t}")));
            }
        }
        let wavelength = positive("wavelength", cfg.wavelength.unwrap_or(DEFAULT_WAVELENGTH))?;
        if let Some(flux) = cfg.flux {
            positive("flux", flux)?;
        }

        let fidelity_target = match experiment {
            Experiment::FindT => {
                let f = cfg
                    .fidelity_target
                    .ok_or_else(|| HarnessError::Usage("find-t requires fidelity_target".into()))?;
                if !(f > 0.0 && f < 1.0) {
                    return Err(HarnessError::Usage(format!(
                        "fidelity_target must lie in (0, 1), got {f}"
                    )));
                }
                Some(f)
            }
            _ => None,
        };
        let t_grid = match experiment {
            Experiment::Fig3 => {
                let g = cfg.t_grid.unwrap_or(GridSpec {
                    min: MIN_TRANSMISSIVITY,
                    max: 1.0,
                    points: DEFAULT_T_POINTS,
                });
                g.validate("t_grid")?;
                if g.min < MIN_TRANSMISSIVITY - 1e-12 || g.max > 1.0 {
                    return Err(HarnessError::Usage("t_grid must lie within [1/sqrt(2), 1]".into()));
                }
                Some(g)
            }
            _ => None,
        };
        let p_grid = match experiment {
            Experiment::Fig4 | Experiment::Fig5 | Experiment::Quadrature => {
                if let Some(g) = cfg.p_grid {
                    g.validate("p_grid")?;
                }
                cfg.p_grid
            }
            _ => None,
        };
        Ok(Self {
            experiment,
            alpha,
            phi0,
            t: match experiment {
                Experiment::Table1
                | Experiment::Fig3
                | Experiment::FindT
                | Experiment::Feasibility
                | Experiment::Power => None,
                _ => t,
            },
            delta: cfg.delta.unwrap_or(d.delta),
            fidelity_target,
            t_grid,
            p_grid,
            wavelength,
            flux: if experiment == Experiment::Power {
                cfg.flux
            } else {
                None
            },
            align_peaks: cfg.align_peaks.unwrap_or(false),
            format: cfg.format.unwrap_or_default(),
            output_path: cfg.output_path.clone(),
        })
    }

    fn interferometer(&self, t: f64) -> Result<InterferometerConfig, HarnessError> {
        Ok(InterferometerConfig::new(self.alpha, self.phi0, t, self.delta)?)
    }

    fn required_t(&self) -> Result<f64, HarnessError> {
        self.t
            .ok_or_else(|| HarnessError::Usage(format!("{} requires t", self.experiment.name())))
    }
}

/// A value in an output table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Bool(bool),
    Text(String),
}

/// Rounds to 12 significant digits.
fn sig12(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.11e}").parse().unwrap_or(v)
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.11e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(sig12(*v))
                .map(Value::Number)
                .unwrap_or_else(|| Value::String(v.to_string())),
            Cell::Int(v) => json!(v),
            Cell::Bool(b) => json!(b),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Value of `column` in `row`, if numeric.
    pub fn number(&self, row: usize, column: &str) -> Option<f64> {
        let idx = self.columns.iter().position(|c| c == column)?;
        match self.rows.get(row)?.get(idx)? {
            Cell::Num(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

/// Result of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: ResolvedConfig,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn render(&self, format: Format, generated_unix: u64) -> String {
        match format {
            Format::Csv => self.render_csv(generated_unix),
            Format::Json => self.render_json(generated_unix),
        }
    }

    fn render_csv(&self, generated_unix: u64) -> String {
        let mut out = String::new();
        let config = serde_json::to_string(&self.config).expect("config serializes");
        let _ = writeln!(out, "# {TOOL} {VERSION} experiment={}", self.config.experiment.name());
        let _ = writeln!(out, "# config={config}");
        let _ = writeln!(out, "# {TIMESTAMP_KEY}={generated_unix}");
        let multi = self.tables.len() > 1;
        for (i, table) in self.tables.iter().enumerate() {
            if multi {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "# table={}", table.name);
            }
            let _ = writeln!(out, "{}", table.columns.join(","));
            for row in &table.rows {
                let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
        out
    }

    fn render_json(&self, generated_unix: u64) -> String {
        let mut tables = Map::new();
        for table in &self.tables {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|row| {
                    let mut obj = Map::new();
                    for (col, cell) in table.columns.iter().zip(row) {
                        obj.insert(col.clone(), cell.json());
                    }
                    Value::Object(obj)
                })
                .collect();
            tables.insert(table.name.clone(), Value::Array(rows));
        }
        let doc = json!({
            "tool": TOOL,
            "version": VERSION,
            "experiment": self.config.experiment.name(),
            "config": self.config,
            TIMESTAMP_KEY: generated_unix,
            "tables": tables,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Removes the timestamp metadata line so two renderings can be compared byte for byte.
pub fn strip_timestamp(rendered: &str) -> String {
    rendered
        .lines()
        .filter(|l| !l.contains(TIMESTAMP_KEY))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Runs the named experiment.
pub fn run(cfg: &ExperimentConfig) -> Result<Report, HarnessError> {
    let config = ResolvedConfig::resolve(cfg)?;
    let tables = match config.experiment {
        Experiment::Table1 => table1(&config)?,
        Experiment::Fig3 => fig3(&config)?,
        Experiment::Fig4 | Experiment::Fig5 => density_figure(&config)?,
        Experiment::Feasibility => feasibility(&config)?,
        Experiment::Optimize => optimize(&config)?,
        Experiment::FindT => find_t(&config)?,
        Experiment::Quadrature => quadrature(&config)?,
        Experiment::Power => power(&config)?,
        Experiment::Oracle => oracle(&config)?,
    };
    Ok(Report { config, tables })
}

/// Transmissivities of the four tabulated cases.
pub const TABLE1_T: [f64; 4] = [FRAC_1_SQRT_2, 0.717, 0.724, 1.0];

fn table1(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let mut table = Table::new("table1", &["t", "F", "x_est", "squeezing_db", "theta_est", "p_suc"]);
    for &t in &TABLE1_T {
        let est = maximize_fidelity(&cfg.interferometer(t)?)?;
        table.push(vec![
            Cell::Num(t),
            Cell::Num(est.fidelity),
            Cell::Num(est.x_est),
            Cell::Num(est.squeezing_db),
            Cell::Num(est.theta_est),
            Cell::Num(est.p_suc),
        ]);
    }
    Ok(vec![table])
}

fn fig3(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let grid = cfg.t_grid.expect("resolved").values();
    let rows = sweep(&cfg.interferometer(1.0)?, &grid, &EstimatorOptions::default())?;
    let mut table = Table::new("fig3", &["t", "F", "x_est", "varphi_est", "theta_est", "p_suc"]);
    let mut failures = Table::new("failures", &["t", "error"]);
    for row in rows {
        match row.estimate {
            Ok(est) => table.push(vec![
                Cell::Num(row.t),
                Cell::Num(est.fidelity),
                Cell::Num(est.x_est),
                Cell::Num(est.varphi_est),
                Cell::Num(est.theta_est),
                Cell::Num(est.p_suc),
            ]),
            Err(e) => failures.push(vec![Cell::Num(row.t), Cell::Text(e.to_string())]),
        }
    }
    let mut tables = vec![table];
    if !failures.rows.is_empty() {
        tables.push(failures);
    }
    Ok(tables)
}

fn component_means(cat: &CatState) -> (f64, f64) {
    (
        QuadratureConvention::mean_p(cat.beta1()),
        QuadratureConvention::mean_p(cat.beta2()),
    )
}

/// Default window: both component means plus six vacuum widths either side.
fn default_p_grid(cat: &CatState) -> GridSpec {
    let (p1, p2) = component_means(cat);
    let sigma = QuadratureConvention::VACUUM_VARIANCE.sqrt();
    let half = 6.0 * sigma + 0.5 * (p1 - p2).abs();
    let mid = 0.5 * (p1 + p2);
    GridSpec {
        min: mid - half,
        max: mid + half,
        points: DEFAULT_P_POINTS,
    }
}

fn density_figure(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let t = cfg.required_t()?;
    let cat = build_cat(&cfg.interferometer(t)?)?;
    let grid = cfg.p_grid.unwrap_or_else(|| default_p_grid(&cat)).values();
    let reference = CoherentLabel::real(cfg.alpha).map_err(HarnessError::Computation)?;
    let post: Vec<f64> = grid.iter().map(|&p| quadrature_density(&cat, p)).collect();
    let shift = if cfg.align_peaks {
        let peak = grid.iter().zip(&post).fold(
            (grid[0], f64::NEG_INFINITY),
            |best, (&p, &d)| if d > best.1 { (p, d) } else { best },
        );
        peak.0 - QuadratureConvention::mean_p(reference.amplitude())
    } else {
        0.0
    };
    let mut table = Table::new(
        cfg.experiment.name(),
        &["p", "density_postselected", "density_coherent_ref", "shift_applied"],
    );
    for (&p, &d) in grid.iter().zip(&post) {
        let r = crate::amplitude::quadrature_wavefunction_coherent(reference, p - shift)?.norm_sqr();
        table.push(vec![Cell::Num(p), Cell::Num(d), Cell::Num(r), Cell::Num(shift)]);
    }
    Ok(vec![table])
}

fn estimate_cells(est: &SqueezingEstimate) -> Vec<Cell> {
    vec![
        Cell::Num(est.fidelity),
        Cell::Num(est.x_est),
        Cell::Num(est.squeezing_db),
        Cell::Num(est.varphi_est),
        Cell::Num(est.theta_est),
        Cell::Num(est.gamma_est),
        Cell::Num(est.p_suc),
        Cell::Bool(est.converged),
    ]
}

const ESTIMATE_COLUMNS: [&str; 8] = [
    "F",
    "x_est",
    "squeezing_db",
    "varphi_est",
    "theta_est",
    "gamma_est",
    "p_suc",
    "converged",
];

fn with_columns(lead: &[&'static str], tail: &[&'static str]) -> Vec<&'static str> {
    lead.iter().chain(tail).copied().collect()
}

fn feasibility(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let columns = with_columns(&["fidelity_target", "t"], &ESTIMATE_COLUMNS);
    let mut table = Table::new("feasibility", &columns);
    for &target in &[0.99, 0.999] {
        let (t, est) = find_transmissivity(target, cfg.alpha, cfg.phi0, cfg.delta)?;
        let mut row = vec![Cell::Num(target), Cell::Num(t)];
        row.extend(estimate_cells(&est));
        table.push(row);
    }
    let mut power = Table::new("power", &["quantity", "photons", "seconds", "wavelength_m", "power_w"]);
    let flux = 5e18;
    power.push(vec![
        Cell::Text("mean_flux".into()),
        Cell::Num(flux),
        Cell::Num(1.0),
        Cell::Num(cfg.wavelength),
        Cell::Num(photon_flux_power(flux, cfg.wavelength)?),
    ]);
    let photons = cfg.alpha * cfg.alpha;
    power.push(vec![
        Cell::Text("pulse_peak".into()),
        Cell::Num(photons),
        Cell::Num(0.6e-12),
        Cell::Num(cfg.wavelength),
        Cell::Num(pulse_peak_power(photons, 0.6e-12, cfg.wavelength)?),
    ]);
    Ok(vec![table, power])
}

fn optimize(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let t = cfg.required_t()?;
    let est = maximize_fidelity(&cfg.interferometer(t)?)?;
    let columns = with_columns(&["t"], &ESTIMATE_COLUMNS);
    let mut table = Table::new("estimate", &columns);
    let mut row = vec![Cell::Num(t)];
    row.extend(estimate_cells(&est));
    table.push(row);
    let mut extra = Table::new(
        "diagnostics",
        &[
            "phase_squeezed",
            "free_F",
            "free_x",
            "free_varphi",
            "free_theta",
            "evaluations",
        ],
    );
    let free = est.unconstrained.expect("default options run the free search");
    extra.push(vec![
        Cell::Bool(classify_phase_squeezed(&est).unwrap_or(false)),
        Cell::Num(free.fidelity),
        Cell::Num(free.x),
        Cell::Num(free.varphi),
        Cell::Num(free.theta),
        Cell::Int(est.evaluations as u64),
    ]);
    Ok(vec![table, extra])
}

fn find_t(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let target = cfg.fidelity_target.expect("resolved");
    let (t, est) = find_transmissivity(target, cfg.alpha, cfg.phi0, cfg.delta)?;
    let columns = with_columns(&["fidelity_target", "t"], &ESTIMATE_COLUMNS);
    let mut table = Table::new("find_t", &columns);
    let mut row = vec![Cell::Num(target), Cell::Num(t)];
    row.extend(estimate_cells(&est));
    table.push(row);
    Ok(vec![table])
}

fn quadrature(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let t = cfg.required_t()?;
    let cat = build_cat(&cfg.interferometer(t)?)?;
    let grid = cfg.p_grid.unwrap_or_else(|| default_p_grid(&cat)).values();
    let mut density = Table::new("density", &["p", "density"]);
    for p in grid {
        density.push(vec![Cell::Num(p), Cell::Num(quadrature_density(&cat, p))]);
    }
    let m = quadrature_moments(&cat);
    let (min_var, angle) = min_quadrature_variance(&cat);
    let mut moments = Table::new(
        "moments",
        &[
            "mean_x",
            "mean_p",
            "var_x",
            "var_p",
            "cov_xp",
            "min_variance",
            "min_angle",
        ],
    );
    moments.push(vec![
        Cell::Num(m.mean_x),
        Cell::Num(m.mean_p),
        Cell::Num(m.var_x),
        Cell::Num(m.var_p),
        Cell::Num(m.cov_xp),
        Cell::Num(min_var),
        Cell::Num(angle),
    ]);
    Ok(vec![density, moments])
}

/// Reference conversions: (label, photons, seconds, wavelength).
pub const POWER_REFERENCES: [(&str, f64, f64, f64); 4] = [
    ("flux_802nm", 5e18, 1.0, 802e-9),
    ("flux_860nm", 1.0e6, 1.0, 860e-9),
    ("flux_1064nm", 8.6e14, 1.0, 1064e-9),
    ("pulse_peak_802nm", 3.0e6, 0.6e-12, 802e-9),
];

fn power(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let mut table = Table::new("power", &["quantity", "photons", "seconds", "wavelength_m", "power_w"]);
    let rows: Vec<(String, f64, f64, f64)> = match cfg.flux {
        Some(flux) => vec![("flux".into(), flux, 1.0, cfg.wavelength)],
        None => POWER_REFERENCES
            .iter()
            .map(|&(n, ph, s, w)| (n.to_string(), ph, s, w))
            .collect(),
    };
    for (name, photons, seconds, wavelength) in rows {
        table.push(vec![
            Cell::Text(name),
            Cell::Num(photons),
            Cell::Num(seconds),
            Cell::Num(wavelength),
            Cell::Num(pulse_peak_power(photons, seconds, wavelength)?),
        ]);
    }
    Ok(vec![table])
}

fn oracle(cfg: &ResolvedConfig) -> Result<Vec<Table>, HarnessError> {
    let t = cfg.required_t()?;
    let icfg = cfg.interferometer(t)?;
    let cat = build_cat(&icfg)?;
    let cutoff = fock::DEFAULT_CUTOFF;
    let v1 = fock::coherent_fock(cat.beta1(), cutoff)?;
    let v2 = fock::coherent_fock(cat.beta2(), cutoff)?;
    let unnormalized: Vec<Complex64> = v1
        .coeffs()
        .iter()
        .zip(v2.coeffs())
        .map(|(a, b)| cat.c1() * a + cat.c2() * b)
        .collect();
    let raw = fock::FockVector::from_coeffs(unnormalized)?;
    let psi = fock::FockVector::superpose(cat.c1(), &v1, cat.c2(), &v2)?;

    let mut table = Table::new("oracle", &["quantity", "closed_form", "oracle", "abs_diff"]);
    let mut add = |name: &str, closed: f64, brute: f64| {
        table.push(vec![
            Cell::Text(name.into()),
            Cell::Num(closed),
            Cell::Num(brute),
            Cell::Num((closed - brute).abs()),
        ]);
    };

    add("success_probability", success_probability(&icfg), 0.5 * raw.norm_sqr());

    let est = maximize_fidelity(&icfg)?;
    let target = est.target()?;
    let tv = fock::squeezed_coherent_fock(&target, cutoff)?;
    add(
        "fidelity_at_estimate",
        fidelity(&cat, &target)?,
        fock::overlap_fock(&tv, &psi)?.norm(),
    );

    let m = quadrature_moments(&cat);
    let a = fock::expectation_fock(&psi, Observable::Annihilation);
    let a2 = fock::expectation_fock(&psi, Observable::AnnihilationSquared);
    let n = fock::expectation_fock(&psi, Observable::Number).re;
    let var_x = 0.5 + n + a2.re - (a.re * a.re - a.im * a.im) - a.norm_sqr();
    let var_p = 0.5 + n - a2.re + (a.re * a.re - a.im * a.im) - a.norm_sqr();
    add("mean_x", m.mean_x, SQRT_2 * a.re);
    add("mean_p", m.mean_p, SQRT_2 * a.im);
    add("var_x", m.var_x, var_x);
    add("var_p", m.var_p, var_p);
    add("cov_xp", m.cov_xp, a2.im - 2.0 * a.re * a.im);

    let window = default_p_grid(&cat);
    for p in linear_grid(window.min, window.max, 9) {
        add(
            &format!("density(p={p:.6})"),
            quadrature_density(&cat, p),
            fock::quadrature_density_fock(&psi, p),
        );
    }
    Ok(vec![table])
}
