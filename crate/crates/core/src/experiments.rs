//! Scripted reproduction runs: configuration, reports and CSV output.
//!
//! A config is a flat TOML table. Every key has a default (the water-like
//! medium, `T = 4 L / c_inf` with `L = 0.5 m`, a 1-D grid of 2^17 samples
//! over 8 m) and `key=value` overrides are applied on top of the file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::kernels::{dc_constant, small_k_multiplier, zeta_hats};
use crate::medium::{derive_medium, Medium, RawParams, SpeedKind};
use crate::spectral::{
    amplitudes, asymptotic_limits, cardano_roots, cubic_residual, log_grid, solve_vandermonde,
    vieta_residuals,
};
use crate::transform::{
    gaussian_phantom, relative_l2_on, relative_linf_on, apply_multiplier, time_reversal_image,
    Field, GridSpec,
};

/// Published resolution figure, in metres.
pub const PUBLISHED_RESOLUTION_M: f64 = 0.036e-3;

/// A wavenumber, either absolute (1/m) or a multiple of `k_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KValue {
    Absolute(f64),
    TimesKc(f64),
}

impl KValue {
    pub fn resolve(&self, k_c: f64) -> f64 {
        match *self {
            KValue::Absolute(k) => k,
            KValue::TimesKc(f) => f * k_c,
        }
    }
}

impl std::str::FromStr for KValue {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("wavenumber `{s}` is neither a number nor `<x>kc`"));
        if let Some(f) = s.strip_suffix("kc") {
            let f = if f.is_empty() { 1.0 } else { f.trim().parse().map_err(|_| bad())? };
            return Ok(KValue::TimesKc(f));
        }
        s.parse().map(KValue::Absolute).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGrid {
    pub k_min: KValue,
    pub k_max: KValue,
    pub n: usize,
    pub spacing: Spacing,
}

impl KGrid {
    pub fn points(&self, k_c: f64) -> Vec<f64> {
        let lo = self.k_min.resolve(k_c);
        let hi = self.k_max.resolve(k_c);
        match (self.spacing, self.n) {
            (_, 0) => Vec::new(),
            (_, 1) => vec![lo],
            (Spacing::Linear, n) => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
            (Spacing::Log, n) => log_grid(lo, hi, n),
        }
    }
}

/// How the final time `T` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TRule {
    Explicit(f64),
    /// `T = 4 L / c_inf`.
    FourLOverCInf(f64),
}

impl TRule {
    pub fn resolve(&self, medium: &Medium) -> f64 {
        match *self {
            TRule::Explicit(t) => t,
            TRule::FourLOverCInf(l) => 4.0 * l / medium.c_inf(),
        }
    }
}

/// Pass/fail tolerances, all relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub tau0: f64,
    pub lambda0_inf: f64,
    pub mu_inf: f64,
    pub dc: f64,
    pub reconstruction: f64,
    pub dissipation_free: f64,
    pub kappa_final: f64,
    pub residual: f64,
    pub amplitude_paths: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub medium: RawParams,
    pub t_rule: TRule,
    pub grid: GridSpec,
    /// `None` selects `D0 = (500 / k_c)^2`.
    pub phantom_d: Option<f64>,
    pub k_grid: KGrid,
    pub out_dir: PathBuf,
    pub tolerances: Tolerances,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawK {
    Number(f64),
    Text(String),
}

impl RawK {
    fn parse(&self) -> Result<KValue> {
        match self {
            RawK::Number(v) => Ok(KValue::Absolute(*v)),
            RawK::Text(s) => s.parse(),
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    tau1_s: Option<f64>,
    kappa1_m2_per_N: Option<f64>,
    rho_kg_per_m3: Option<f64>,
    speed_m_per_s: Option<f64>,
    speed_kind: Option<SpeedKind>,
    T_s: Option<f64>,
    L_m: Option<f64>,
    grid_dim: Option<u32>,
    grid_n: Option<usize>,
    grid_extent_m: Option<f64>,
    phantom_D_m2: Option<f64>,
    k_min: Option<RawK>,
    k_max: Option<RawK>,
    k_n: Option<usize>,
    k_spacing: Option<String>,
    out_dir: Option<String>,
    tol_tau0: Option<f64>,
    tol_lambda0_inf: Option<f64>,
    tol_mu_inf: Option<f64>,
    tol_dc: Option<f64>,
    tol_reconstruction: Option<f64>,
    tol_dissipation_free: Option<f64>,
    tol_kappa_final: Option<f64>,
    tol_residual: Option<f64>,
    tol_amplitude_paths: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            medium: RawParams::WATER,
            t_rule: TRule::FourLOverCInf(0.5),
            grid: GridSpec {
                dim: 1,
                n_per_axis: 1 << 17,
                extent: 8.0,
            },
            phantom_d: None,
            k_grid: KGrid {
                k_min: KValue::Absolute(0.0),
                k_max: KValue::TimesKc(10.0),
                n: 1001,
                spacing: Spacing::Linear,
            },
            out_dir: PathBuf::from("out"),
            tolerances: Tolerances {
                tau0: 0.01,
                lambda0_inf: 0.005,
                mu_inf: 0.005,
                dc: 0.015,
                reconstruction: 0.02,
                dissipation_free: 1e-3,
                kappa_final: 0.005,
                residual: 1e-9,
                amplitude_paths: 1e-8,
            },
        }
    }
}

/// Apply `key=value` to a TOML table. Values that do not parse as TOML are
/// taken as strings.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let key = key.trim();
    let value = value.trim();
    if key.is_empty() {
        return Err(Error::Config(format!("override `{assignment}` has an empty key")));
    }
    let parsed = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    table.insert(key.to_string(), parsed);
    Ok(())
}

impl ExperimentConfig {
    /// Parse TOML text, apply overrides, fill defaults.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let raw: ConfigFile = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    fn from_raw(raw: ConfigFile) -> Result<Self> {
        let d = ExperimentConfig::default();
        let medium = RawParams {
            tau1: raw.tau1_s.unwrap_or(d.medium.tau1),
            kappa1: raw.kappa1_m2_per_N.unwrap_or(d.medium.kappa1),
            rho: raw.rho_kg_per_m3.unwrap_or(d.medium.rho),
            speed: raw.speed_m_per_s.unwrap_or(d.medium.speed),
            speed_kind: raw.speed_kind.unwrap_or(d.medium.speed_kind),
        };
        let t_rule = match (raw.T_s, raw.L_m) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("set either T_s or L_m, not both".into()))
            }
            (Some(t), None) => TRule::Explicit(t),
            (None, Some(l)) => TRule::FourLOverCInf(l),
            (None, None) => d.t_rule,
        };
        let grid = GridSpec::new(
            raw.grid_dim.unwrap_or(d.grid.dim),
            raw.grid_n.unwrap_or(d.grid.n_per_axis),
            raw.grid_extent_m.unwrap_or(d.grid.extent),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        let spacing = match raw.k_spacing.as_deref() {
            None | Some("linear") => Spacing::Linear,
            Some("log") => Spacing::Log,
            Some(other) => {
                return Err(Error::Config(format!(
                    "k_spacing must be linear or log, got `{other}`"
                )))
            }
        };
        let k_grid = KGrid {
            k_min: raw.k_min.as_ref().map(RawK::parse).transpose()?.unwrap_or(d.k_grid.k_min),
            k_max: raw.k_max.as_ref().map(RawK::parse).transpose()?.unwrap_or(d.k_grid.k_max),
            n: raw.k_n.unwrap_or(d.k_grid.n),
            spacing,
        };
        let t = d.tolerances;
        let tolerances = Tolerances {
            tau0: raw.tol_tau0.unwrap_or(t.tau0),
            lambda0_inf: raw.tol_lambda0_inf.unwrap_or(t.lambda0_inf),
            mu_inf: raw.tol_mu_inf.unwrap_or(t.mu_inf),
            dc: raw.tol_dc.unwrap_or(t.dc),
            reconstruction: raw.tol_reconstruction.unwrap_or(t.reconstruction),
            dissipation_free: raw.tol_dissipation_free.unwrap_or(t.dissipation_free),
            kappa_final: raw.tol_kappa_final.unwrap_or(t.kappa_final),
            residual: raw.tol_residual.unwrap_or(t.residual),
            amplitude_paths: raw.tol_amplitude_paths.unwrap_or(t.amplitude_paths),
        };
        let cfg = ExperimentConfig {
            medium,
            t_rule,
            grid,
            phantom_d: raw.phantom_D_m2,
            k_grid,
            out_dir: raw.out_dir.map(PathBuf::from).unwrap_or(d.out_dir),
            tolerances,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let m = self.derived_medium()?;
        let t = self.t_rule.resolve(&m);
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Config(format!("final time T = {t} must be > 0")));
        }
        let lo = self.k_grid.k_min.resolve(m.k_c());
        let hi = self.k_grid.k_max.resolve(m.k_c());
        if !(lo >= 0.0 && hi >= lo && hi.is_finite()) {
            return Err(Error::Config(format!("k grid [{lo}, {hi}] is invalid")));
        }
        if self.k_grid.spacing == Spacing::Log && lo <= 0.0 {
            return Err(Error::Config("log k grid needs k_min > 0".into()));
        }
        if let Some(dd) = self.phantom_d {
            if !(dd > 0.0) {
                return Err(Error::Config(format!("phantom_D_m2 = {dd} must be > 0")));
            }
        }
        Ok(())
    }

    pub fn derived_medium(&self) -> Result<Medium> {
        derive_medium(&self.medium).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn final_time(&self) -> Result<f64> {
        Ok(self.t_rule.resolve(&self.derived_medium()?))
    }

    pub fn phantom_width(&self, medium: &Medium) -> f64 {
        self.phantom_d.unwrap_or_else(|| resolution_width(medium))
    }

    fn is_water(&self) -> bool {
        self.medium == RawParams::WATER
    }
}

/// `D0 = (500 / k_c)^2`.
pub fn resolution_width(medium: &Medium) -> f64 {
    (500.0 / medium.k_c()).powi(2)
}

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Published,
    Derived,
    Exact,
}

impl Source {
    fn as_str(&self) -> &'static str {
        match self {
            Source::Published => "published",
            Source::Derived => "derived",
            Source::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub name: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub tolerance: Option<f64>,
    pub deviation: Option<f64>,
    pub source: Source,
    /// Entries that are recorded but do not decide the outcome.
    pub asserted: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub title: String,
    pub entries: Vec<ReportEntry>,
    pub csv_paths: Vec<PathBuf>,
    pub notes: Vec<String>,
}

fn relative_deviation(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        value.abs()
    } else {
        (value - reference).abs() / reference.abs()
    }
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report {
            title: title.into(),
            ..Default::default()
        }
    }

    /// Relative comparison `|value - reference| / |reference| <= tolerance`
    /// (absolute when `reference` is zero).
    pub fn check(&mut self, name: &str, value: f64, reference: f64, tolerance: f64, source: Source) {
        let deviation = relative_deviation(value, reference);
        self.entries.push(ReportEntry {
            name: name.into(),
            value,
            reference: Some(reference),
            tolerance: Some(tolerance),
            deviation: Some(deviation),
            source,
            asserted: true,
            pass: deviation <= tolerance,
        });
    }

    /// `value <= bound`.
    pub fn check_max(&mut self, name: &str, value: f64, bound: f64, source: Source) {
        self.entries.push(ReportEntry {
            name: name.into(),
            value,
            reference: Some(0.0),
            tolerance: Some(bound),
            deviation: Some(value),
            source,
            asserted: true,
            pass: value <= bound,
        });
    }

    /// A boolean property, recorded as 1 or 0.
    pub fn check_true(&mut self, name: &str, holds: bool, source: Source) {
        self.entries.push(ReportEntry {
            name: name.into(),
            value: if holds { 1.0 } else { 0.0 },
            reference: Some(1.0),
            tolerance: Some(0.0),
            deviation: Some(if holds { 0.0 } else { 1.0 }),
            source,
            asserted: true,
            pass: holds,
        });
    }

    /// Record a comparison without letting it decide the outcome.
    pub fn compare(&mut self, name: &str, value: f64, reference: f64, tolerance: f64, source: Source) {
        self.check(name, value, reference, tolerance, source);
        self.entries.last_mut().unwrap().asserted = false;
    }

    pub fn info(&mut self, name: &str, value: f64, source: Source) {
        self.entries.push(ReportEntry {
            name: name.into(),
            value,
            reference: None,
            tolerance: None,
            deviation: None,
            source,
            asserted: false,
            pass: true,
        });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn get(&self, name: &str) -> Option<&ReportEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|e| e.value)
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().filter(|e| e.asserted).all(|e| e.pass)
    }

    pub fn failures(&self) -> Vec<&ReportEntry> {
        self.entries.iter().filter(|e| e.asserted && !e.pass).collect()
    }

    pub fn merge(&mut self, other: Report) {
        let prefix = other.title.clone();
        for mut e in other.entries {
            e.name = format!("{prefix}.{}", e.name);
            self.entries.push(e);
        }
        self.csv_paths.extend(other.csv_paths);
        self.notes.extend(other.notes.into_iter().map(|n| format!("{prefix}: {n}")));
    }

    /// Flat `key=value` text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# relaxtr report: {}", self.title);
        for n in &self.notes {
            let _ = writeln!(out, "# note: {n}");
        }
        for e in &self.entries {
            let p = &e.name;
            let _ = writeln!(out, "{p}.value={}", fmt_f64(e.value));
            if let Some(r) = e.reference {
                let _ = writeln!(out, "{p}.reference={}", fmt_f64(r));
            }
            if let Some(t) = e.tolerance {
                let _ = writeln!(out, "{p}.tolerance={}", fmt_f64(t));
            }
            if let Some(d) = e.deviation {
                let _ = writeln!(out, "{p}.deviation={}", fmt_f64(d));
            }
            let _ = writeln!(out, "{p}.source={}", e.source.as_str());
            if e.asserted {
                let _ = writeln!(out, "{p}.pass={}", e.pass);
            } else if e.tolerance.is_some() {
                let _ = writeln!(out, "{p}.asserted=false");
                let _ = writeln!(out, "{p}.within_tolerance={}", e.pass);
            }
        }
        for (i, path) in self.csv_paths.iter().enumerate() {
            let _ = writeln!(out, "csv.{i}={}", path.display());
        }
        let _ = writeln!(out, "overall.pass={}", self.passed());
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

/// Full double precision, 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write a CSV file with `#` comment lines, a column header and rows.
pub fn write_csv(path: &Path, comments: &[String], columns: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    let _ = writeln!(out, "{}", columns.join(","));
    for r in rows {
        let _ = writeln!(out, "{}", r.join(","));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

fn medium_comments(cfg: &ExperimentConfig, m: &Medium) -> Vec<String> {
    vec![
        format!(
            "tau1_s={} kappa1_m2_per_N={} rho_kg_per_m3={} speed_m_per_s={} speed_kind={:?}",
            cfg.medium.tau1, cfg.medium.kappa1, cfg.medium.rho, cfg.medium.speed, cfg.medium.speed_kind
        ),
        format!("tau0_s={} c0_m_per_s={} k_c_per_m={}", fmt_f64(m.tau0()), fmt_f64(m.c0()), fmt_f64(m.k_c())),
    ]
}

/// Derived constants of the medium against the published water values.
pub fn run_water_constants(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.derived_medium()?;
    let tol = cfg.tolerances;
    let mut r = Report::new("water_constants");
    let (l_inf, mu_inf) = asymptotic_limits(&m);
    let far = cardano_roots(&m, 1e3 * m.k_c())?;

    r.info("tau1", m.tau1(), Source::Exact);
    r.info("c0", m.c0(), Source::Derived);
    r.info("c_inf", m.c_inf(), Source::Derived);
    r.info("k_c", m.k_c(), Source::Derived);
    r.info("lambda0_limit", l_inf, Source::Derived);
    r.info("mu_limit", mu_inf, Source::Derived);
    r.check("dc_constant_formula", dc_constant(&m), 2.0 * (1.0 - m.tau_ratio_inv()).powi(2) + 1.0, 1e-15, Source::Exact);
    r.check("c_inf_round_trip", (m.tau1() / m.tau0()).sqrt() * m.c0(), m.c_inf(), 1e-12, Source::Exact);

    if cfg.is_water() {
        r.check("tau0", m.tau0(), 4.7e-10, tol.tau0, Source::Published);
        r.check("lambda0_at_1000kc", far.lambda0.re, 1e9, tol.lambda0_inf, Source::Published);
        r.check("mu_at_1000kc", far.mu.re, 5.625e8, tol.mu_inf, Source::Published);
        r.check("dc_constant", dc_constant(&m), 3.5, tol.dc, Source::Published);
        r.check("dc_constant_digits", dc_constant(&m), 3.53125, 1e-12, Source::Derived);
    } else {
        r.info("tau0", m.tau0(), Source::Derived);
        r.check("lambda0_at_1000kc", far.lambda0.re, l_inf, tol.lambda0_inf, Source::Derived);
        let mu_tol = if mu_inf == 0.0 { 1e-9 * l_inf } else { tol.mu_inf };
        r.check("mu_at_1000kc", far.mu.re, mu_inf, mu_tol, Source::Derived);
        r.info("dc_constant", dc_constant(&m), Source::Derived);
        r.note("published comparisons apply to the water medium only");
    }
    Ok(r)
}

fn root_row(m: &Medium, k: f64) -> Result<Vec<String>> {
    let r = cardano_roots(m, k)?;
    let amp = if r.is_degenerate() {
        None
    } else {
        Some(amplitudes(&r, m)?)
    };
    let res = r
        .lambdas()
        .iter()
        .map(|l| cubic_residual(m, k, *l))
        .fold(0.0, f64::max);
    let c = r.diagnostics.big_c;
    let mut row = vec![
        fmt_f64(k),
        fmt_f64(r.lambda0.re),
        fmt_f64(r.lambda0.im),
        fmt_f64(r.mu.re),
        fmt_f64(r.theta.re),
    ];
    for a in amp.map(|a| a.as_array()).unwrap_or([num_complex::Complex64::new(f64::NAN, f64::NAN); 3]) {
        row.push(fmt_f64(a.re));
        row.push(fmt_f64(a.im));
    }
    row.extend([
        fmt_f64(r.diagnostics.delta0),
        fmt_f64(r.diagnostics.delta1),
        fmt_f64(c.re),
        fmt_f64(c.im),
        (r.real_c_regime() as u8).to_string(),
        fmt_f64(res),
    ]);
    Ok(row)
}

/// Root and amplitude table over the configured k grid.
pub fn run_roots_table(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.derived_medium()?;
    let ks = cfg.k_grid.points(m.k_c());
    let mut r = Report::new("roots");
    let mut rows = Vec::with_capacity(ks.len());
    let mut worst: f64 = 0.0;
    for &k in &ks {
        let row = root_row(&m, k)?;
        worst = worst.max(row.last().unwrap().parse::<f64>().unwrap_or(f64::INFINITY));
        rows.push(row);
    }
    let path = cfg.out_dir.join("roots.csv");
    let columns = [
        "k", "lambda0_re", "lambda0_im", "mu", "theta", "A0_re", "A0_im", "A1_re", "A1_im",
        "A2_re", "A2_im", "delta0", "delta1", "C_re", "C_im", "real_c_regime", "cubic_residual",
    ];
    write_csv(&path, &medium_comments(cfg, &m), &columns, &rows)?;
    r.csv_paths.push(path);
    r.info("k_points", ks.len() as f64, Source::Exact);
    r.check_max("max_cubic_residual", worst, cfg.tolerances.residual, Source::Derived);
    Ok(r)
}

/// Amplitude properties on a 200-point log grid over `[1e-3, 1e3] k_c`.
pub fn run_coefficient_checks(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.derived_medium()?;
    let tol = cfg.tolerances;
    let ks = log_grid(1e-3 * m.k_c(), 1e3 * m.k_c(), 200);
    let mut r = Report::new("coefficients");
    let (mut res, mut vieta, mut moment, mut paths) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut paths_norm = 0.0f64;
    let (mut conj, mut neg_conj, mut a0_imag) = (0.0f64, 0.0f64, 0.0f64);
    let mut rows = Vec::with_capacity(ks.len());
    for &k in &ks {
        let roots = cardano_roots(&m, k)?;
        for l in roots.lambdas() {
            res = res.max(cubic_residual(&m, k, l));
        }
        vieta = vieta_residuals(&m, &roots).iter().fold(vieta, |a, &b| a.max(b));
        let a = amplitudes(&roots, &m)?;
        let v = solve_vandermonde(&roots, &m)?;
        moment = a.moment_residuals(&roots, &m).iter().fold(moment, |x, &y| x.max(y));
        let mut dev = 0.0f64;
        let mut diff = 0.0f64;
        let mut scale = 0.0f64;
        for (x, y) in a.as_array().iter().zip(v.as_array()) {
            dev = dev.max((x - y).norm() / y.norm());
            diff = diff.max((x - y).norm());
            scale = scale.max(y.norm());
        }
        paths = paths.max(dev);
        paths_norm = paths_norm.max(diff / scale);
        let a1 = a.a1_coef;
        conj = conj.max((a.a2_coef - a1.conj()).norm() / a1.norm());
        neg_conj = neg_conj.max((a.a2_coef + a1.conj()).norm() / a1.norm());
        a0_imag = a0_imag.max(a.a0_coef.im.abs() / a.a0_coef.norm());
        rows.push(vec![
            fmt_f64(k),
            fmt_f64(a.a0_coef.re),
            fmt_f64(a1.re),
            fmt_f64(a1.im),
            fmt_f64(a.a2_coef.re),
            fmt_f64(a.a2_coef.im),
            fmt_f64(dev),
        ]);
    }
    let path = cfg.out_dir.join("coefficients.csv");
    write_csv(
        &path,
        &medium_comments(cfg, &m),
        &["k", "A0", "A1_re", "A1_im", "A2_re", "A2_im", "closed_vs_vandermonde"],
        &rows,
    )?;
    r.csv_paths.push(path);
    r.check_max("max_cubic_residual", res, tol.residual, Source::Derived);
    r.check_max("max_vieta_residual", vieta, tol.residual, Source::Derived);
    r.check_max("max_moment_residual", moment, tol.residual, Source::Derived);
    // componentwise agreement degrades where A0 is many orders below A1
    r.check_max("max_closed_vs_vandermonde", paths_norm, tol.amplitude_paths, Source::Derived);
    r.info("max_closed_vs_vandermonde_componentwise", paths, Source::Derived);
    r.check_max("max_a2_minus_conj_a1", conj, 1e-10, Source::Derived);
    r.check_max("max_imag_a0", a0_imag, 1e-10, Source::Derived);
    r.compare("max_a2_plus_conj_a1", neg_conj, 0.0, 1e-10, Source::Published);
    r.note("A2 = conj(A1) holds; the published relation A2 = -conj(A1) is recorded unasserted");
    Ok(r)
}

/// Curves behind the coefficient, root and kernel figures, plus growth orders.
pub fn run_kernel_tables(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.derived_medium()?;
    let t = cfg.final_time()?;
    let dim = cfg.grid.dim;
    let mut r = Report::new("kernel_tables");
    let comments = {
        let mut c = medium_comments(cfg, &m);
        c.push(format!("T_s={} dim={dim}", fmt_f64(t)));
        c
    };

    for (name, hi) in [("10kc", 10.0), ("100kc", 100.0)] {
        let ks: Vec<f64> = (1..=1000).map(|i| hi * m.k_c() * i as f64 / 1000.0).collect();
        let mut coeff_rows = Vec::new();
        let mut kernel_rows = Vec::new();
        for k in std::iter::once(0.0).chain(ks) {
            let s = zeta_hats(&m, k, t, dim)?;
            kernel_rows.push(vec![
                fmt_f64(k),
                fmt_f64(s.zeta1_hat),
                fmt_f64(s.zeta2_hat),
                fmt_f64(s.zeta3_hat.mantissa().re),
                fmt_f64(s.zeta3_hat.log_scale()),
                fmt_f64(s.eta0_hat),
                fmt_f64(s.multiplier),
            ]);
            if k == 0.0 {
                continue;
            }
            let roots = cardano_roots(&m, k)?;
            let a = amplitudes(&roots, &m)?;
            let (a0k, a1k, a2k) = (a.a0_coef * k, a.a1_coef * k, a.a2_coef * k);
            coeff_rows.push(vec![
                fmt_f64(k),
                fmt_f64(a0k.re),
                fmt_f64(a1k.re),
                fmt_f64(a1k.im),
                fmt_f64(a2k.re),
                fmt_f64(a2k.im),
                fmt_f64(a.a0_coef.norm() * k * k),
                fmt_f64(a.a1_coef.norm() * k),
                fmt_f64(roots.lambda0.re),
                fmt_f64(roots.mu.re),
                fmt_f64(roots.theta.re),
                fmt_f64(roots.lambda1().norm()),
            ]);
        }
        let cp = cfg.out_dir.join(format!("coefficients_{name}.csv"));
        write_csv(
            &cp,
            &comments,
            &["k", "A0k_re", "A1k_re", "A1k_im", "A2k_re", "A2k_im", "abs_A0k2", "abs_A1k", "lambda0", "mu", "theta", "abs_lambda1"],
            &coeff_rows,
        )?;
        let kp = cfg.out_dir.join(format!("kernels_{name}.csv"));
        write_csv(
            &kp,
            &comments,
            &["k", "zeta1", "zeta2", "zeta3_mantissa", "zeta3_logscale", "eta0", "multiplier_no_zeta3"],
            &kernel_rows,
        )?;
        r.csv_paths.push(cp);
        r.csv_paths.push(kp);
    }

    let g = growth_orders(&m, t, dim)?;
    r.check_true("sup_abs_a0_k2_finite", g.a0_k2.is_finite(), Source::Derived);
    r.info("sup_abs_a0_k2", g.a0_k2, Source::Derived);
    r.check_true("sup_abs_a1_k_finite", g.a1_k.is_finite(), Source::Derived);
    r.info("sup_abs_a1_k", g.a1_k, Source::Derived);
    r.check_true("sup_zeta1_finite", g.zeta1.is_finite(), Source::Derived);
    r.info("sup_zeta1", g.zeta1, Source::Derived);
    r.check_true("sup_zeta2_finite", g.zeta2.is_finite(), Source::Derived);
    r.info("sup_zeta2", g.zeta2, Source::Derived);
    r.check_true("theta_over_k_bounded_below", g.theta_over_k_min > 0.0, Source::Derived);
    r.info("theta_over_k_min", g.theta_over_k_min, Source::Derived);
    r.info("theta_over_k_max", g.theta_over_k_max, Source::Derived);
    r.check("theta_over_k_plateau", g.theta_over_k_last, m.c_inf(), 1e-3, Source::Derived);
    r.check_true("lambda0_mu_bounded", g.rates_bounded, Source::Derived);
    r.check_max("max_abs_a1_vs_abs_a2", g.a1_a2_modulus, 1e-12, Source::Derived);
    r.compare("max_re_a1_plus_re_a2", g.re_sum, 0.0, 1e-10, Source::Published);
    if m.is_dissipation_free() {
        r.check("abs_a1_k_constant", g.a1_k, 0.5 / m.c0(), 1e-12, Source::Exact);
    }
    Ok(r)
}

/// Suprema over a 200-point log grid on `[k_c, 1e3 k_c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthOrders {
    pub a0_k2: f64,
    pub a1_k: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub theta_over_k_min: f64,
    pub theta_over_k_max: f64,
    pub theta_over_k_last: f64,
    pub rates_bounded: bool,
    pub a1_a2_modulus: f64,
    pub re_sum: f64,
}

pub fn growth_orders(m: &Medium, t: f64, dim: u32) -> Result<GrowthOrders> {
    let mut g = GrowthOrders {
        a0_k2: 0.0,
        a1_k: 0.0,
        zeta1: 0.0,
        zeta2: 0.0,
        theta_over_k_min: f64::INFINITY,
        theta_over_k_max: 0.0,
        theta_over_k_last: 0.0,
        rates_bounded: true,
        a1_a2_modulus: 0.0,
        re_sum: 0.0,
    };
    let (l_inf, mu_inf) = asymptotic_limits(m);
    let rate_bound = 2.0 * (1.0 / m.tau0()).max(l_inf + mu_inf);
    for k in log_grid(m.k_c(), 1e3 * m.k_c(), 200) {
        let roots = cardano_roots(m, k)?;
        let a = amplitudes(&roots, m)?;
        let s = zeta_hats(m, k, t, dim)?;
        g.a0_k2 = g.a0_k2.max(a.a0_coef.norm() * k * k);
        g.a1_k = g.a1_k.max(a.a1_coef.norm() * k);
        g.zeta1 = g.zeta1.max(s.zeta1_hat.abs());
        g.zeta2 = g.zeta2.max(s.zeta2_hat.abs());
        let ratio = roots.theta.re / k;
        g.theta_over_k_min = g.theta_over_k_min.min(ratio);
        g.theta_over_k_max = g.theta_over_k_max.max(ratio);
        g.theta_over_k_last = ratio;
        g.rates_bounded &= roots.lambda0.re.abs() <= rate_bound && roots.mu.re.abs() <= rate_bound;
        let (n1, n2) = (a.a1_coef.norm(), a.a2_coef.norm());
        g.a1_a2_modulus = g.a1_a2_modulus.max((n1 - n2).abs() / n1);
        g.re_sum = g.re_sum.max((a.a1_coef.re + a.a2_coef.re).abs() / n1);
    }
    Ok(g)
}

/// Errors of one reconstruction against `C phi` and against `phi`.
#[derive(Debug, Clone)]
pub struct ReconstructionErrors {
    pub dc: f64,
    pub linf_vs_c_phi: f64,
    pub l2_vs_c_phi: f64,
    pub linf_vs_phi: f64,
    pub l2_vs_phi: f64,
    pub eta0_linf_vs_c_phi: f64,
    pub image: Field,
    pub phantom: Field,
}

/// Mask `{phi >= 0.01 max phi}`.
pub fn phantom_support(phantom: &Field) -> Vec<bool> {
    let cut = 0.01 * phantom.max_abs();
    phantom.samples.iter().map(|v| *v >= cut).collect()
}

/// Time-reversal image without `zeta3` and the small-`k` image of a
/// Gaussian phantom of width `d_coef`.
pub fn reconstruct(m: &Medium, grid: &GridSpec, d_coef: f64, t: f64) -> Result<ReconstructionErrors> {
    let phantom = gaussian_phantom(grid, d_coef)?;
    let image = time_reversal_image(m, &phantom, t, false)?;
    let small = apply_multiplier(&phantom, |k| small_k_multiplier(m, k))?;
    let c = dc_constant(m);
    let c_phi = phantom.scaled(c);
    let mask = phantom_support(&phantom);
    Ok(ReconstructionErrors {
        dc: c,
        linf_vs_c_phi: relative_linf_on(&image, &c_phi, &mask),
        l2_vs_c_phi: relative_l2_on(&image, &c_phi, &mask),
        linf_vs_phi: relative_linf_on(&image, &phantom, &mask),
        l2_vs_phi: relative_l2_on(&image, &phantom, &mask),
        eta0_linf_vs_c_phi: relative_linf_on(&small, &c_phi, &mask),
        image,
        phantom,
    })
}

fn geometry_notes(r: &mut Report, m: &Medium, grid: &GridSpec, d_coef: f64, t: f64) {
    let shell = 2.0 * m.c0() * t;
    let support = 6.0 * (2.0 * d_coef).sqrt();
    if shell < 2.0 * support {
        r.note(format!("outgoing shell at 2*c0*T = {shell:e} m overlaps the phantom support"));
    }
    if 4.0 * m.c0() * t > grid.extent {
        r.note(format!(
            "aliasing: 4*c0*T = {:e} m exceeds the grid extent {:e} m",
            4.0 * m.c0() * t,
            grid.extent
        ));
    }
}

/// Reconstruction of the `D0` Gaussian.
pub fn run_reconstruction(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.derived_medium()?;
    let t = cfg.final_time()?;
    let d_coef = cfg.phantom_width(&m);
    let mut r = Report::new("reconstruction");
    geometry_notes(&mut r, &m, &cfg.grid, d_coef, t);
    let e = reconstruct(&m, &cfg.grid, d_coef, t)?;
    r.info("T", t, Source::Derived);
    r.info("phantom_D", d_coef, Source::Derived);
    r.info("dc_constant", e.dc, Source::Derived);
    r.info("l2_vs_c_phi", e.l2_vs_c_phi, Source::Derived);
    r.info("linf_vs_phi", e.linf_vs_phi, Source::Derived);
    r.info("l2_vs_phi", e.l2_vs_phi, Source::Derived);
    r.info("eta0_linf_vs_c_phi", e.eta0_linf_vs_c_phi, Source::Derived);
    if m.is_dissipation_free() {
        r.check_max("linf_vs_phi_dissipation_free", e.linf_vs_phi, cfg.tolerances.dissipation_free, Source::Published);
    } else {
        r.check_max("linf_vs_c_phi", e.linf_vs_c_phi, cfg.tolerances.reconstruction, Source::Derived);
    }
    let stem = cfg.out_dir.join("reconstruction");
    fs::create_dir_all(&cfg.out_dir).map_err(|err| Error::io(&cfg.out_dir, err))?;
    let image_csv = stem.with_extension("csv");
    e.image.clone().with_label("image").write_profile_csv(&image_csv)?;
    let phantom_csv = cfg.out_dir.join("phantom.csv");
    e.phantom.clone().with_label("phantom").write_profile_csv(&phantom_csv)?;
    r.csv_paths.push(image_csv);
    r.csv_paths.push(phantom_csv);
    Ok(r)
}

/// Reconstruction error against `phi` for `kappa1 * 2^-j`, `j = 0..=5`.
pub fn run_kappa_sweep(cfg: &ExperimentConfig) -> Result<Report> {
    let base = cfg.derived_medium()?;
    let d_coef = cfg.phantom_width(&base);
    let mut r = Report::new("kappa_sweep");
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for j in 0..=5 {
        let kappa = cfg.medium.kappa1 * 0.5f64.powi(j);
        let m = derive_medium(&cfg.medium.with_kappa1(kappa))?;
        let t = cfg.t_rule.resolve(&m);
        let e = reconstruct(&m, &cfg.grid, d_coef, t)?;
        r.info(&format!("error_j{j}"), e.linf_vs_phi, Source::Derived);
        rows.push(vec![
            j.to_string(),
            fmt_f64(kappa),
            fmt_f64(e.dc),
            fmt_f64(e.linf_vs_phi),
            fmt_f64(e.l2_vs_phi),
            fmt_f64(e.linf_vs_c_phi),
        ]);
        errors.push(e.linf_vs_phi);
    }
    let path = cfg.out_dir.join("kappa_sweep.csv");
    write_csv(
        &path,
        &medium_comments(cfg, &base),
        &["j", "kappa1", "dc_constant", "linf_vs_phi", "l2_vs_phi", "linf_vs_c_phi"],
        &rows,
    )?;
    r.csv_paths.push(path);
    let decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    r.check_true("strictly_decreasing", decreasing, Source::Derived);
    r.check_max("final_error", *errors.last().unwrap(), cfg.tolerances.kappa_final, Source::Derived);
    Ok(r)
}

/// `k_c -> D0 -> sigma` for the configured medium next to the published
/// resolution figure.
pub fn run_resolution_study(cfg: &ExperimentConfig) -> Result<Report> {
    let m = cfg.derived_medium()?;
    let mut r = Report::new("resolution");
    let k_c = 2.0 / (m.c0() * m.tau1());
    let d0 = (500.0 / k_c).powi(2);
    let sigma = (2.0 * d0).sqrt();
    r.check("k_c", m.k_c(), k_c, 0.0, Source::Exact);
    r.check("D0", resolution_width(&m), d0, 0.0, Source::Exact);
    r.check("sigma", (2.0 * resolution_width(&m)).sqrt(), sigma, 0.0, Source::Exact);
    let k = m.k_c() / 100.0;
    r.check("bandlimit_ratio", (-d0 * k * k).exp(), (-25.0f64).exp(), 1e-12, Source::Exact);
    r.info("sigma_published", PUBLISHED_RESOLUTION_M, Source::Published);
    r.info("sigma_over_published", sigma / PUBLISHED_RESOLUTION_M, Source::Derived);
    r.note("sigma is reported next to the published 0.036 mm figure without asserting equality");
    Ok(r)
}

/// Every run above, merged.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Report> {
    let mut r = Report::new("all");
    r.merge(run_water_constants(cfg)?);
    r.merge(run_roots_table(cfg)?);
    r.merge(run_coefficient_checks(cfg)?);
    r.merge(run_kernel_tables(cfg)?);
    r.merge(run_reconstruction(cfg)?);
    r.merge(run_kappa_sweep(cfg)?);
    r.merge(run_resolution_study(cfg)?);
    Ok(r)
}
