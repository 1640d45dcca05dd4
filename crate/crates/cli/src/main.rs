//! Batch front-end: scenario configs in, result records and plot-ready CSV
//! out. Exit codes are a stable contract: 0 success, 2 configuration error,
//! 3 infeasible, 4 validation failure.

use clap::{Args, Parser, Subcommand};
use nanofringe::config::ScenarioConfig;
use nanofringe::error::Error;
use nanofringe::pipeline;
use nanofringe::record::{pattern_csv, sweep_csv, thermal_csv};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "nanofringe",
    version,
    about = "Pulsed-optical-potential matter-wave interference toolkit for levitated \
             nanoparticles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Scenario config (flat key = value; defaults are the shipped case study)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for records and CSV files
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and contour solves (default: all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Black-body emission table (overrides the config's bb_table)
    #[arg(long)]
    bb_table: Option<PathBuf>,
    /// Confidence multiple for the run-count estimate
    #[arg(long, default_value_t = 5.0)]
    m_sigma: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline for one parameter set: pattern, budget, metrics,
    /// coherence, environment requirements
    CaseStudy(CommonOpts),
    /// Certified-coherence optimization over the configured sweep ranges
    Sweep(CommonOpts),
    /// Coherent-splitting optimization (no inverted potential)
    OptimizeSplitting(CommonOpts),
    /// Run the numeric-oracle validation battery
    OracleValidate {
        #[command(flatten)]
        common: CommonOpts,
        /// Corrupt the analytic fringe scale by 10% (sensitivity smoke test;
        /// the battery is then expected to fail)
        #[arg(long, hide = true)]
        corrupt_delta_x: bool,
    },
    /// Gas-pressure requirement for collision-free protocol runs
    PressureRequirement(CommonOpts),
    /// Internal-temperature dynamics over repeated protocol runs
    Thermal(CommonOpts),
}

fn load_config(opts: &CommonOpts) -> Result<ScenarioConfig, Error> {
    let mut cfg = match &opts.config {
        Some(path) => ScenarioConfig::from_path(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(t) = &opts.bb_table {
        cfg.bb_table = Some(t.clone());
    }
    cfg.m_sigma = opts.m_sigma;
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn init_workers(opts: &CommonOpts) {
    if let Some(n) = opts.workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::Io(_)
        | Error::GridInsufficient(_)
        | Error::TableRange(_) => 2,
        Error::Infeasible(_) | Error::NoFringes(_) => 3,
        Error::QuadratureFailure(_) => 4,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::CaseStudy(opts) => {
            init_workers(&opts);
            let cfg = load_config(&opts)?;
            let out = pipeline::run_case_study(&cfg)?;
            write(&opts.out.join("record.json"), &out.record.to_json())?;
            write(
                &opts.out.join("pattern_unitary.csv"),
                &pattern_csv(&out.pattern_grid, &out.unitary, "unitary interference pattern"),
            )?;
            write(
                &opts.out.join("pattern_decohered.csv"),
                &pattern_csv(&out.pattern_grid, &out.decohered, "decohered interference pattern"),
            )?;
            if let Some(h) = &out.thermal_history {
                write(&opts.out.join("thermal_history.csv"), &thermal_csv(h))?;
            }
            let m = &out.record.metrics;
            println!(
                "pattern: dx = {:.4e} m, p_c = {:.4}, p_lambda = {:.4}",
                out.record.pattern.delta_x, out.record.pattern.p_c, out.record.pattern.p_lambda
            );
            println!(
                "metrics: v = {:.4}, p_r = {:.4}, q = {:.5}, N_{}sigma = {}",
                m.visibility,
                m.p_r,
                m.quality,
                cfg.m_sigma,
                m.n_runs_5sigma.map_or("unbounded".into(), |n| n.to_string()),
            );
            println!(
                "coherence: x_c* = {}",
                nanofringe::record::coherence_str(&out.record.coherence.x_c_star)
            );
            for f in &out.record.conditional_flags {
                println!("conditional: {f}");
            }
            for w in &out.record.warnings {
                println!("warning: {w}");
            }
            println!("wrote {}", opts.out.join("record.json").display());
            Ok(0)
        }
        Command::Sweep(opts) => {
            init_workers(&opts);
            let cfg = load_config(&opts)?;
            let rows = pipeline::run_sweep(&cfg)?;
            let csv = sweep_csv(&rows, "certified coherence length x_c*");
            write(&opts.out.join("sweep.csv"), &csv)?;
            let feasible = rows.iter().filter(|r| r.feasible).count();
            println!("{} sweep points, {} feasible", rows.len(), feasible);
            println!("wrote {}", opts.out.join("sweep.csv").display());
            Ok(0)
        }
        Command::OptimizeSplitting(opts) => {
            init_workers(&opts);
            let cfg = load_config(&opts)?;
            let (res, row) = pipeline::run_optimize_splitting(&cfg)?;
            let peaks = pipeline::peaks_mass_for(&res)?;
            #[derive(serde::Serialize)]
            struct SplitRecord<'a> {
                tool_version: &'a str,
                timestamp_unix_s: u64,
                inputs: &'a ScenarioConfig,
                result: &'a nanofringe::optimizer::OptimizationResult,
                peak_distance_nm: f64,
                mass_within_two_peaks: f64,
            }
            let rec = SplitRecord {
                tool_version: nanofringe::VERSION,
                timestamp_unix_s: nanofringe::record::now_unix_s(),
                inputs: &cfg,
                result: &res,
                peak_distance_nm: res.objective * 1e9,
                mass_within_two_peaks: peaks,
            };
            write(
                &opts.out.join("splitting.json"),
                &serde_json::to_string_pretty(&rec).expect("serialize"),
            )?;
            write(&opts.out.join("splitting.csv"), &sweep_csv(&[row], "peak distance"))?;
            println!(
                "splitting optimum: tau1 = {:.4} ms, phi2 = {:.4} pi, omega2 = 2pi*{:.3} kHz",
                res.tau1 * 1e3,
                res.phi2 / std::f64::consts::PI,
                res.omega2 / (2.0 * std::f64::consts::PI) * 1e-3
            );
            println!(
                "peak distance = {:.2} nm, g1 = {:.4}, mass in two peaks = {:.3}",
                res.objective * 1e9,
                res.g1_peaks.unwrap_or(f64::NAN),
                peaks
            );
            println!("wrote {}", opts.out.join("splitting.json").display());
            Ok(0)
        }
        Command::OracleValidate { common, corrupt_delta_x } => {
            init_workers(&common);
            let cfg = load_config(&common)?;
            // explicit user-grid comparison first: a too-small grid surfaces
            // as a grid-insufficiency (configuration) error
            if let Some(l1) = pipeline::user_grid_oracle_check(&cfg)? {
                println!(
                    "user-grid comparison (n = {}): L1 = {l1:.3e}",
                    cfg.oracle_grid_n.unwrap()
                );
            }
            let checks = nanofringe::oracle::run_battery(cfg.oracle_seed, corrupt_delta_x);
            let mut failed = 0;
            for c in &checks {
                println!(
                    "{} {:30} value {:.3e} (tolerance {:.1e})  {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold,
                    c.detail
                );
                if !c.passed {
                    failed += 1;
                }
            }
            write(
                &common.out.join("oracle_report.json"),
                &serde_json::to_string_pretty(&checks).expect("serialize"),
            )?;
            println!("wrote {}", common.out.join("oracle_report.json").display());
            if failed > 0 {
                println!("{failed} oracle check(s) failed");
                return Ok(4);
            }
            Ok(0)
        }
        Command::PressureRequirement(opts) => {
            init_workers(&opts);
            let cfg = load_config(&opts)?;
            let params = cfg.protocol()?;
            let particle =
                nanofringe::material::Particle::from_radius(cfg.radius(), cfg.material())?;
            let p = nanofringe::environment::pressure_for_quantile(
                cfg.gas_mass(),
                cfg.temperature_k,
                particle.radius,
                params.tau_f(),
                cfg.quantile,
            )?;
            let gas = nanofringe::environment::GasModel {
                gas_mass: cfg.gas_mass(),
                temperature: cfg.temperature_k,
                pressure: cfg.pressure_pa(),
            };
            let rate = nanofringe::environment::gas_collision_rate(&gas, particle.radius)?;
            let p0 = nanofringe::environment::no_collision_probability(
                &gas,
                particle.radius,
                params.tau_f(),
                true,
            )?;
            #[derive(serde::Serialize)]
            struct PressureRecord<'a> {
                tool_version: &'a str,
                inputs: &'a ScenarioConfig,
                tau_f_s: f64,
                collision_rate_at_config_pressure_per_s: f64,
                no_collision_probability_axis: f64,
                required_pressure_mbar: f64,
                required_pressure_pa: f64,
            }
            let rec = PressureRecord {
                tool_version: nanofringe::VERSION,
                inputs: &cfg,
                tau_f_s: params.tau_f(),
                collision_rate_at_config_pressure_per_s: rate,
                no_collision_probability_axis: p0,
                required_pressure_mbar: nanofringe::environment::pa_to_mbar(p),
                required_pressure_pa: p,
            };
            write(
                &opts.out.join("pressure.json"),
                &serde_json::to_string_pretty(&rec).expect("serialize"),
            )?;
            println!(
                "P_{:.2} = {:.4e} mbar for tau_f = {:.4} ms (gamma_g at config pressure: \
                 {:.1} /s, axis collision-free probability {:.4})",
                cfg.quantile,
                nanofringe::environment::pa_to_mbar(p),
                params.tau_f() * 1e3,
                rate,
                p0
            );
            Ok(0)
        }
        Command::Thermal(opts) => {
            init_workers(&opts);
            let cfg = load_config(&opts)?;
            let Some(table) = &cfg.bb_table else {
                return Err(Error::Config(vec![
                    "thermal command requires bb_table (or --bb-table)".into(),
                ]));
            };
            let particle =
                nanofringe::material::Particle::from_radius(cfg.radius(), cfg.material())?;
            let params = cfg.protocol()?;
            let bb = nanofringe::environment::BlackBodyModel::from_csv_path(table)?;
            let t_ss = nanofringe::environment::steady_state_temperature(
                &particle,
                &bb,
                cfg.temperature_k,
                params.omega0,
                particle.material.wavelength,
                1.0,
            )?;
            let duty = nanofringe::environment::DutyCycle {
                tau_on: params.tau0,
                tau_off: params.tau_f(),
            };
            let hist = nanofringe::environment::internal_temperature_evolution(
                &particle,
                &bb,
                cfg.temperature_k,
                params.omega0,
                particle.material.wavelength,
                duty,
                cfg.n_thermal_runs,
            )?;
            write(&opts.out.join("thermal_history.csv"), &thermal_csv(&hist))?;
            #[derive(serde::Serialize)]
            struct ThermalRecord<'a> {
                tool_version: &'a str,
                inputs: &'a ScenarioConfig,
                t_ss_full_power_k: f64,
                t_steady_k: f64,
                runs_to_steady: Option<usize>,
                conditional: &'a str,
            }
            let rec = ThermalRecord {
                tool_version: nanofringe::VERSION,
                inputs: &cfg,
                t_ss_full_power_k: t_ss,
                t_steady_k: hist.t_steady,
                runs_to_steady: hist.runs_to_steady,
                conditional: "all values depend on the supplied black-body emission table",
            };
            write(
                &opts.out.join("thermal.json"),
                &serde_json::to_string_pretty(&rec).expect("serialize"),
            )?;
            println!(
                "T_ss (full power) = {:.2} K, T_i(inf) = {:.2} K, steady after {} runs",
                t_ss,
                hist.t_steady,
                hist.runs_to_steady.map_or("n/a".into(), |n| n.to_string())
            );
            println!("wrote {}", opts.out.join("thermal.json").display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
