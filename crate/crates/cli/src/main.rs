use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use relaxtr_core::experiments::{
    run_all, run_coefficient_checks, run_kappa_sweep, run_kernel_tables, run_reconstruction,
    run_resolution_study, run_roots_table, ExperimentConfig, Report,
};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_USAGE: u8 = 64;

/// Spectral time-reversal experiments for a relaxing acoustic medium.
#[derive(Parser, Debug)]
#[command(name = "relaxtr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dispersion roots and amplitudes over the k grid, with residuals.
    Roots(Common),
    /// Amplitude property checks on a log grid over [1e-3, 1e3] k_c.
    Coeffs(Common),
    /// Coefficient and kernel curves over [0, 10 k_c] and [0, 100 k_c].
    Kernels(Common),
    /// Time-reversal image of the Gaussian phantom.
    Reconstruct(Common),
    /// Reconstruction error as kappa1 is halved five times.
    SweepKappa(Common),
    /// Resolution estimate from k_c.
    Resolution(Common),
    /// Every run above, one combined report.
    Report(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML config; missing keys take the water defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for CSVs and the report.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Upper end of the k grid, absolute or `<x>kc`.
    #[arg(long)]
    k_max: Option<String>,
}

impl Common {
    fn load(&self) -> relaxtr_core::Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(dir) = &self.out_dir {
            overrides.push(format!("out_dir={:?}", dir.display().to_string()));
        }
        if let Some(k) = &self.k_max {
            overrides.push(format!("k_max={k:?}"));
        }
        match &self.config {
            Some(path) => ExperimentConfig::load(path, &overrides),
            None => ExperimentConfig::from_toml_str("", &overrides),
        }
    }
}

fn run(command: &Command) -> relaxtr_core::Result<(Report, ExperimentConfig, &'static str)> {
    let (common, name, op): (_, _, fn(&ExperimentConfig) -> relaxtr_core::Result<Report>) =
        match command {
            Command::Roots(c) => (c, "roots", run_roots_table),
            Command::Coeffs(c) => (c, "coeffs", run_coefficient_checks),
            Command::Kernels(c) => (c, "kernels", run_kernel_tables),
            Command::Reconstruct(c) => (c, "reconstruct", run_reconstruction),
            Command::SweepKappa(c) => (c, "sweep-kappa", run_kappa_sweep),
            Command::Resolution(c) => (c, "resolution", run_resolution_study),
            Command::Report(c) => (c, "report", run_all),
        };
    let cfg = common.load()?;
    let report = op(&cfg)?;
    Ok((report, cfg, name))
}

fn echo_config(cfg: &ExperimentConfig) -> String {
    let t = cfg.tolerances;
    format!(
        "# config: tau1_s={} kappa1_m2_per_N={} rho_kg_per_m3={} speed_m_per_s={} speed_kind={:?} \
         grid_dim={} grid_n={} grid_extent_m={} T_rule={:?}\n\
         # tolerances: tau0={} lambda0_inf={} mu_inf={} dc={} reconstruction={} dissipation_free={} \
         kappa_final={} residual={} amplitude_paths={}\n",
        cfg.medium.tau1,
        cfg.medium.kappa1,
        cfg.medium.rho,
        cfg.medium.speed,
        cfg.medium.speed_kind,
        cfg.grid.dim,
        cfg.grid.n_per_axis,
        cfg.grid.extent,
        cfg.t_rule,
        t.tau0,
        t.lambda0_inf,
        t.mu_inf,
        t.dc,
        t.reconstruction,
        t.dissipation_free,
        t.kappa_final,
        t.residual,
        t.amplitude_paths,
    )
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    let (report, cfg, name) = match run(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let text = format!("{}{}", echo_config(&cfg), report.render());
    let path = cfg.out_dir.join(format!("{name}.report.txt"));
    if let Err(e) = std::fs::create_dir_all(&cfg.out_dir).and_then(|_| std::fs::write(&path, &text)) {
        eprintln!("error: cannot write {}: {e}", path.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    print!("{text}");
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        for f in report.failures() {
            eprintln!("failed: {} = {:e} (tolerance {:?})", f.name, f.value, f.tolerance);
        }
        ExitCode::from(EXIT_FAIL)
    }
}
