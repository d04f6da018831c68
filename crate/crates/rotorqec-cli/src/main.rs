//! Batch front end: verification sweeps, QEC simulation, and distance scans
//! with machine-readable outputs.
//!
//! Exit codes: 0 success, 1 assertion failure, 2 configuration error.
//! `ROTORQEC_THREADS` caps the rayon pool.

mod config;

use clap::{Parser, Subcommand};
use config::{load_raw, ConfigError, RunConfig};
use rotorqec::distance::{
    contrived_code_check, default_grid_axes, detectability_grid, grid_to_csv, tradeoff_row,
    tradeoff_to_csv, verify_tradeoff,
};
use rotorqec::gates::{appendix_b_polynomial, verify_logical_action, GateSpec};
use rotorqec::propagation::{report_to_csv, run_sweep, SweepConfig};
use rotorqec::qec::{monte_carlo, trials_to_csv};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rotorqec",
    version,
    about = "Bosonic rotation codes: error propagation verification, explicit QEC simulation, and number-phase distance"
)]
struct Cli {
    /// TOML config file; flags override file values
    #[arg(long, global = true)]
    config: Option<String>,
    /// RNG seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Truncation dimension
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Safe-subspace pad (default: per-gate rule)
    #[arg(long, global = true)]
    pad: Option<usize>,
    /// Residual tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output directory
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Restrict to one gate kind (e.g. CROT)
    #[arg(long, global = true)]
    gate: Option<String>,
    /// Correction scheme: direct | teleport
    #[arg(long, global = true)]
    scheme: Option<String>,
    /// Channel prior: gain | loss | symmetric | any
    #[arg(long, global = true)]
    prior: Option<String>,
    /// Monte Carlo trial count
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify every error-propagation identity and emit the residual table
    VerifyPropagation,
    /// Monte Carlo error-correction sweep (per-trial CSV + JSON summary)
    Simulate,
    /// Detectability grid and the number-phase trade-off table
    Distance {
        /// Append the contrived-code footnote report
        #[arg(long)]
        contrived: bool,
    },
    /// Logical-action report for the configured code
    GateCheck,
    /// Discrete-rotation polynomial table
    AppendixB {
        /// Largest l to tabulate
        #[arg(long, default_value_t = 3)]
        ell_max: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("ROTORQEC_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn run(cli: Cli) -> Result<bool, ConfigError> {
    let cfg = load_raw(cli.config.as_deref())?
        .with_overrides(
            cli.seed,
            cli.dim,
            cli.pad,
            cli.tol,
            cli.out_dir.clone(),
            cli.trials,
            cli.prior.clone(),
            cli.scheme.clone(),
            cli.gate.clone(),
        )
        .validate()?;
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| ConfigError(format!("cannot create out dir {}: {e}", cfg.out_dir)))?;
    match cli.command {
        Command::VerifyPropagation => cmd_verify_propagation(&cfg),
        Command::Simulate => cmd_simulate(&cfg),
        Command::Distance { contrived } => cmd_distance(&cfg, contrived),
        Command::GateCheck => cmd_gate_check(&cfg),
        Command::AppendixB { ell_max } => cmd_appendix_b(&cfg, ell_max),
    }
}

/// Write a file atomically: temp file in the same directory, then rename.
fn write_atomic(dir: &str, name: &str, contents: &str) -> Result<PathBuf, ConfigError> {
    let path = Path::new(dir).join(name);
    let tmp = Path::new(dir).join(format!(".{name}.tmp"));
    std::fs::write(&tmp, contents)
        .map_err(|e| ConfigError(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, &path)
        .map_err(|e| ConfigError(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(path)
}

fn cmd_verify_propagation(cfg: &RunConfig) -> Result<bool, ConfigError> {
    let sweep = SweepConfig {
        d_single: cfg.dim,
        gate_filter: cfg.gate_filter.clone(),
        pad_override: cfg.pad,
        ..SweepConfig::default()
    };
    let rows = run_sweep(&sweep).map_err(|e| ConfigError(e.to_string()))?;
    if rows.is_empty() {
        return Err(ConfigError(format!(
            "gate filter {:?} matched nothing",
            cfg.gate_filter
        )));
    }
    let path = write_atomic(&cfg.out_dir, "propagation_report.csv", &report_to_csv(&rows))?;
    let worst = rows
        .iter()
        .max_by(|a, b| a.residual.partial_cmp(&b.residual).unwrap())
        .unwrap();
    let failures = rows.iter().filter(|r| r.residual >= cfg.tol).count();
    println!(
        "verified {} cells; worst residual {:e} ({} N={} k={} theta={:.3}); report: {}",
        rows.len(),
        worst.residual,
        worst.gate,
        worst.n,
        worst.k,
        worst.theta,
        path.display()
    );
    if failures > 0 {
        println!("{failures} cells exceed tolerance {:e}", cfg.tol);
        return Ok(false);
    }
    println!("all residuals below {:e}", cfg.tol);
    Ok(true)
}

fn cmd_simulate(cfg: &RunConfig) -> Result<bool, ConfigError> {
    cfg.check_scheme_offset()?;
    let code = cfg.build_code()?;
    let (records, summary) = monte_carlo(&code, &cfg.prior, cfg.scheme, cfg.trials, cfg.seed)
        .map_err(|e| ConfigError(e.to_string()))?;
    let csv_path = write_atomic(&cfg.out_dir, "trials.csv", &trials_to_csv(&records))?;
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| ConfigError(format!("summary serialization: {e}")))?;
    let json_path = write_atomic(&cfg.out_dir, "summary.json", &json)?;
    println!(
        "{} {} trials (seed {}): mean fidelity {}, logical error rate {}",
        cfg.scheme.name(),
        cfg.trials,
        cfg.seed,
        summary
            .mean_fidelity
            .map(|f| format!("{f:.6}"))
            .unwrap_or_else(|| "n/a".into()),
        summary
            .logical_error_rate
            .map(|r| format!("{r:.4}"))
            .unwrap_or_else(|| "n/a".into()),
    );
    println!("trials: {}", csv_path.display());
    println!("summary: {}", json_path.display());
    Ok(true)
}

fn cmd_distance(cfg: &RunConfig, contrived: bool) -> Result<bool, ConfigError> {
    let code = cfg.build_code()?;
    let (ks, thetas) = default_grid_axes(code.order(), 64);
    let grid = detectability_grid(&code, &ks, &thetas, 1e-8)
        .map_err(|e| ConfigError(e.to_string()))?;
    let grid_path = write_atomic(&cfg.out_dir, "detectability_grid.csv", &grid_to_csv(&grid))?;

    // trade-off table: ideal references plus the configured code
    let mut rows = verify_tradeoff(&[1, 2, 3, 4], 12).map_err(|e| ConfigError(e.to_string()))?;
    rows.push(
        tradeoff_row(&code, code.profile().grid_points(), 2048)
            .map_err(|e| ConfigError(e.to_string()))?,
    );
    let table_path = write_atomic(&cfg.out_dir, "tradeoff.csv", &tradeoff_to_csv(&rows))?;
    let json = serde_json::to_string_pretty(&rows)
        .map_err(|e| ConfigError(format!("tradeoff serialization: {e}")))?;
    write_atomic(&cfg.out_dir, "tradeoff.json", &json)?;
    for r in &rows {
        println!(
            "N={} d_n={} d_theta={:.6} product={:.6} (|product - pi| = {:.2e})",
            r.order, r.d_n, r.d_theta, r.product, r.deviation_from_pi
        );
    }
    println!("grid: {}", grid_path.display());
    println!("tradeoff: {}", table_path.display());

    if contrived {
        let report = contrived_code_check(code.order()).map_err(|e| ConfigError(e.to_string()))?;
        let text = format!(
            "# rotorqec contrived-code report v1\n\
             x_matrix_element_abs,{:e}\nn_shift_kl_deviation,{:e}\nn_shift_block_norm,{:e}\nx_logical_deviation,{:e}\n",
            report.x_matrix_element.norm(),
            report.n_shift_deviation,
            report.n_shift_block_norm,
            report.x_logical_deviation
        );
        let p = write_atomic(&cfg.out_dir, "contrived_code.csv", &text)?;
        println!(
            "contrived code: |<0|X|1>| = {:.2e}, N-shift KL deviation {:.2e} (report: {})",
            report.x_matrix_element.norm(),
            report.n_shift_deviation,
            p.display()
        );
    }
    Ok(true)
}

fn cmd_gate_check(cfg: &RunConfig) -> Result<bool, ConfigError> {
    let code = cfg.build_code()?;
    let n = code.order();
    let mut specs = vec![
        GateSpec::z(n),
        GateSpec::x(n),
        GateSpec::x_prime(n),
        GateSpec::s(n),
        GateSpec::t(n),
        GateSpec::t_prime(n),
        GateSpec::stab_z(n),
    ];
    if let Ok(rl) = GateSpec::rl_prime(n, 2) {
        specs.push(rl);
    }
    if let Some(filter) = &cfg.gate_filter {
        specs.retain(|s| s.kind().name().eq_ignore_ascii_case(filter));
        if specs.is_empty() {
            return Err(ConfigError(format!("gate filter {filter:?} matched nothing")));
        }
    }
    println!("{:<16} {:>12} {:>12} {:>14}", "gate", "deviation", "leakage", "isometry_def");
    let mut lines =
        String::from("# rotorqec gate check v1\ngate,deviation,leakage,isometry_defect\n");
    for spec in &specs {
        let report = verify_logical_action(spec, &code).map_err(|e| ConfigError(e.to_string()))?;
        let dev = report
            .deviation
            .map(|d| format!("{d:.3e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<16} {:>12} {:>12.3e} {:>14.3e}",
            spec.describe(),
            dev,
            report.leakage,
            report.isometry_defect
        );
        lines.push_str(&format!(
            "{},{},{:e},{:e}\n",
            spec.describe(),
            report.deviation.map(|d| format!("{d:e}")).unwrap_or_default(),
            report.leakage,
            report.isometry_defect
        ));
    }
    let path = write_atomic(&cfg.out_dir, "gate_check.csv", &lines)?;
    println!("report: {}", path.display());
    Ok(true)
}

fn cmd_appendix_b(cfg: &RunConfig, ell_max: u32) -> Result<bool, ConfigError> {
    if ell_max > 4 {
        return Err(ConfigError("ell_max above 4 exceeds the exact-arithmetic range".into()));
    }
    let mut lines = String::from("# rotorqec appendix-b table v1\nell,degree,fprime_coeffs,gate_coeffs_over_pi\n");
    for ell in 0..=ell_max {
        let spec = appendix_b_polynomial(ell);
        let fp: Vec<String> = spec.fprime().coeffs().iter().map(|c| c.to_string()).collect();
        let gc: Vec<String> = spec.gate_coeffs().iter().map(|c| c.to_string()).collect();
        println!(
            "l={ell}: degree {}, f'_l(k) coefficients [{}], f_l(x)/pi = [{}], f'_l(k) mod 2^{} for k=0..6: {:?}",
            spec.degree(),
            fp.join(", "),
            gc.join(", "),
            ell + 1,
            (0..7).map(|k| spec.eval_mod(k)).collect::<Vec<_>>()
        );
        lines.push_str(&format!(
            "{},{},{},{}\n",
            ell,
            spec.degree(),
            fp.join(" "),
            gc.join(" ")
        ));
    }
    let path = write_atomic(&cfg.out_dir, "appendix_b.csv", &lines)?;
    println!("table: {}", path.display());
    Ok(true)
}
