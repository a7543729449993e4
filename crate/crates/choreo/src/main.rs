//! Batch front-end: generate choreography configurations, integrate them,
//! verify residuals, and run the mass-rigidity analyses.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use choreo::action::{minimize_action, Ansatz, MinimizeOptions, ACTION_GRID};
use choreo::analysis;
use choreo::canonical;
use choreo::choreography::{
    detect_symmetry_axis, normalize_to_axis, polygon_curved, polygon_flat,
    polygon_flat_with_center, ChoreographyConfig, RESIDUAL_SAMPLES,
};
use choreo::dynamics::{integrate, verify_trajectory, Scheme};
use choreo::error::{ChoreoError, Result};
use choreo::io::{ConfigFile, OutputMeta, ReportFile, TrajectoryFile};
use choreo::model::{Curvature, ForceLaw, MassVector, Tolerances};

#[derive(Parser)]
#[command(
    name = "choreo",
    version,
    about = "Choreography laboratory: generate, simulate, verify, analyze"
)]
struct Cli {
    /// Worker threads for the analyses (default: all cores; env fallback
    /// CHOREO_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Override the absolute residual pass threshold.
    #[arg(long, global = true)]
    residual_abs: Option<f64>,

    /// Override the relative singular-value cutoff for rank decisions.
    #[arg(long, global = true)]
    rank_rel: Option<f64>,

    /// Override the permitted curved-surface constraint drift.
    #[arg(long, global = true)]
    constraint_abs: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a configuration file.
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Integrate a configuration into a trajectory file.
    Simulate(SimulateArgs),
    /// Run the rigidity analyses and write a report.
    Analyze(AnalyzeArgs),
    /// Check a configuration or trajectory against the residual threshold.
    Verify {
        /// Config or trajectory JSON (distinguished by shape).
        input: PathBuf,
        /// Samples per period for configuration checks.
        #[arg(long, default_value_t = RESIDUAL_SAMPLES)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// Regular polygon rotating in the plane.
    PolygonFlat {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Fixed attracting mass at the origin (0 = none).
        #[arg(long, default_value_t = 0.0)]
        central_mass: f64,
        #[arg(long, default_value = "config.json")]
        out: PathBuf,
    },
    /// Regular polygon rotating on the sphere or hyperboloid.
    PolygonCurved {
        #[arg(long)]
        n: usize,
        /// +1 for the sphere, -1 for the hyperboloid.
        #[arg(long, allow_negative_numbers = true)]
        sigma: i8,
        /// Height of the polygon plane.
        #[arg(long, allow_negative_numbers = true)]
        z: f64,
        /// Fixed attracting mass at (0,0,1) (0 = none).
        #[arg(long, default_value_t = 0.0)]
        central_mass: f64,
        #[arg(long, default_value = "config.json")]
        out: PathBuf,
    },
    /// Search for a figure-eight loop by action minimization.
    Eight {
        #[arg(long, default_value_t = 3)]
        n: usize,
        /// Fourier truncation order of the search space.
        #[arg(long, default_value_t = 12)]
        order: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        iterations: usize,
        #[arg(long, default_value_t = ACTION_GRID)]
        grid: usize,
        #[arg(long, default_value_t = 5)]
        restarts: usize,
        #[arg(long, default_value = "config.json")]
        out: PathBuf,
    },
    /// Validate and canonicalize a hand-written configuration.
    CustomJson {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "config.json")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Requested time step; snapped so a whole number of steps spans the
    /// requested duration.
    #[arg(long)]
    dt: f64,
    /// Number of periods to integrate (0 = initial state only).
    #[arg(long)]
    periods: f64,
    /// rk4 | verlet | rk4-projected (default: rk4, projected when curved).
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long, default_value = "trajectory.json")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Mode-exclusion residual table.
    #[arg(long)]
    modes: bool,
    /// Separation-span dimension and rank histogram.
    #[arg(long)]
    span: bool,
    /// Mass-feasibility nullspace.
    #[arg(long)]
    nullspace: bool,
    /// Reflection identities about a detected symmetry axis.
    #[arg(long)]
    symmetry: bool,
    /// Predicted mass structure versus the computed nullspace.
    #[arg(long)]
    verdict: bool,
    /// Samples per period for all analyses.
    #[arg(long, default_value_t = RESIDUAL_SAMPLES)]
    samples: usize,
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Also write the mode table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    configure_threads(&cli);
    let tol = match effective_tolerances(&cli) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(cli.command, &tol) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                ChoreoError::Parse(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn configure_threads(cli: &Cli) {
    let threads = cli.threads.or_else(|| {
        std::env::var("CHOREO_THREADS").ok().and_then(|s| s.parse().ok())
    });
    if let Some(t) = threads {
        // Fails only if a pool exists already, which keeps that pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t.max(1)).build_global();
    }
}

fn effective_tolerances(cli: &Cli) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    if let Some(v) = cli.residual_abs {
        tol.residual_abs = v;
    }
    if let Some(v) = cli.rank_rel {
        tol.rank_rel = v;
    }
    if let Some(v) = cli.constraint_abs {
        tol.constraint_abs = v;
    }
    tol.validate()?;
    Ok(tol)
}

fn run(command: Command, tol: &Tolerances) -> Result<u8> {
    match command {
        Command::Gen { kind } => cmd_gen(kind, tol),
        Command::Simulate(args) => cmd_simulate(args, tol),
        Command::Analyze(args) => cmd_analyze(args, tol),
        Command::Verify { input, samples } => cmd_verify(&input, samples, tol),
    }
}

fn print_line(value: serde_json::Value) {
    println!("{}", canonical::compact_string(&value));
}

fn write_config(
    config: ChoreographyConfig,
    seed: Option<u64>,
    tol: &Tolerances,
    out: &Path,
) -> Result<ChoreographyConfig> {
    let file = ConfigFile { meta: OutputMeta::new(seed, *tol), config };
    file.write(out)?;
    Ok(file.config)
}

fn gen_summary(config: &ChoreographyConfig, samples: usize, tol: &Tolerances) -> Result<serde_json::Value> {
    let check = config.verify(samples)?;
    let mut value = json!({
        "n": config.n_bodies(),
        "max_residual": check.max_residual,
        "mean_residual": check.mean_residual,
        "samples": check.samples,
        "pass": check.max_residual < tol.residual_abs,
    });
    if config.space.is_curved() {
        value["max_constraint_defect"] = json!(check.max_constraint_defect);
        value["great_circle"] = json!(analysis::great_circle_test(config, samples, tol)?);
    }
    Ok(value)
}

fn cmd_gen(kind: GenKind, tol: &Tolerances) -> Result<u8> {
    match kind {
        GenKind::PolygonFlat { n, radius, central_mass, out } => {
            let config = if central_mass > 0.0 {
                polygon_flat_with_center(n, radius, &ForceLaw::classical(), central_mass)?
            } else {
                polygon_flat(n, radius, &ForceLaw::classical())?
            };
            let config = write_config(config, None, tol, &out)?;
            print_line(gen_summary(&config, RESIDUAL_SAMPLES, tol)?);
        }
        GenKind::PolygonCurved { n, sigma, z, central_mass, out } => {
            let sigma = match sigma {
                1 => Curvature::Positive,
                -1 => Curvature::Negative,
                other => {
                    return Err(ChoreoError::Contract(format!(
                        "sigma must be 1 or -1, got {other}"
                    )))
                }
            };
            let config = polygon_curved(n, z, sigma, central_mass)?;
            let config = write_config(config, None, tol, &out)?;
            print_line(gen_summary(&config, RESIDUAL_SAMPLES, tol)?);
        }
        GenKind::Eight { n, order, seed, iterations, grid, restarts, out } => {
            let masses = MassVector::equal(n, 1.0)?;
            let opts = MinimizeOptions { order, iterations, grid, seed, restarts };
            let outcome =
                minimize_action(n, &masses, &ForceLaw::classical(), Ansatz::Eight, &opts)?;
            if !outcome.converged {
                eprintln!(
                    "warning: search did not meet the gradient tolerance; writing best found \
                     (action {:.9}, residual {:.3e})",
                    outcome.action, outcome.check.max_residual
                );
            }
            let config = write_config(outcome.config, Some(seed), tol, &out)?;
            let mut summary = gen_summary(&config, RESIDUAL_SAMPLES, tol)?;
            summary["action"] = json!(outcome.action);
            summary["converged"] = json!(outcome.converged);
            summary["iterations"] = json!(outcome.iterations);
            summary["restarts_used"] = json!(outcome.restarts_used);
            print_line(summary);
        }
        GenKind::CustomJson { input, out } => {
            let value = canonical::read_value(&input)?;
            let config: ChoreographyConfig = if value.get("config").is_some() {
                serde_json::from_value::<ConfigFile>(value)?.config
            } else {
                serde_json::from_value(value)?
            };
            config.validate()?;
            let config = write_config(config, None, tol, &out)?;
            print_line(gen_summary(&config, RESIDUAL_SAMPLES, tol)?);
        }
    }
    Ok(0)
}

fn cmd_simulate(args: SimulateArgs, tol: &Tolerances) -> Result<u8> {
    if !(args.dt.is_finite() && args.dt > 0.0) {
        return Err(ChoreoError::Contract(format!("dt must be positive, got {}", args.dt)));
    }
    if !(args.periods.is_finite() && args.periods >= 0.0) {
        return Err(ChoreoError::Contract(format!(
            "periods must be nonnegative, got {}",
            args.periods
        )));
    }
    let file = ConfigFile::read(&args.config)?;
    let config = file.config;
    let scheme = match args.scheme.as_deref() {
        None => {
            if config.space.is_curved() {
                Scheme::Rk4Projected
            } else {
                Scheme::Rk4
            }
        }
        Some("rk4") => Scheme::Rk4,
        Some("verlet") => Scheme::Verlet,
        Some("rk4-projected") => Scheme::Rk4Projected,
        Some(other) => {
            return Err(ChoreoError::Contract(format!(
                "unknown scheme {other:?}; use rk4, verlet, or rk4-projected"
            )))
        }
    };
    let total = args.periods * config.path.period();
    let steps = (total / args.dt).round() as usize;
    let dt = if steps > 0 { total / steps as f64 } else { args.dt };
    let trajectory = integrate(config.state_at(0.0), &config.problem(), dt, steps, scheme)?;
    let out_file = TrajectoryFile::from_trajectory(
        &trajectory,
        scheme,
        OutputMeta::new(file.meta.seed, *tol),
    );
    out_file.write(&args.out)?;
    let mut summary = json!({
        "states": trajectory.states.len(),
        "dt": dt,
        "closure_error": trajectory.closure_error(),
    });
    if config.space.is_curved() {
        summary["max_constraint_defect"] = json!(trajectory.max_constraint_defect());
    }
    print_line(summary);
    Ok(0)
}

fn cmd_analyze(args: AnalyzeArgs, tol: &Tolerances) -> Result<u8> {
    let file = ConfigFile::read(&args.config)?;
    let config = file.config;
    let none_selected =
        !(args.modes || args.span || args.nullspace || args.symmetry || args.verdict);
    let report_sections = none_selected || args.modes || args.span || args.nullspace || args.verdict;

    if report_sections && !config.offsets.is_equally_spaced() {
        eprintln!(
            "error: --modes/--span/--nullspace/--verdict need the equally spaced normal form \
             (h_k = k, period n); this configuration has general offsets. \
             Only --symmetry accepts general offsets."
        );
        return Ok(2);
    }

    if args.symmetry {
        run_symmetry(&config, args.samples, tol)?;
    }

    if report_sections {
        let report = analysis::analyze(&config, args.samples, tol)?;
        let show_all = none_selected;
        if show_all || args.span {
            print_line(json!({
                "d": report.d,
                "rank_histogram": report.rank_histogram,
                "simplex": report.flags.simplex,
                "great_circle": report.flags.great_circle,
                "excluded_samples": report.excluded_samples,
            }));
        }
        if show_all || args.modes {
            for m in &report.modes {
                print_line(json!({
                    "l": m.l,
                    "with_f": m.with_f,
                    "without_f": m.without_f,
                }));
            }
        }
        if show_all || args.nullspace {
            print_line(json!({
                "nullspace_dim": report.feasibility.nullspace_dim,
                "basis": report.feasibility.basis,
                "spectral_gap": report.feasibility.spectral_gap,
            }));
        }
        if show_all || args.verdict {
            print_line(json!({
                "verdict": report.verdict.text,
                "prediction_consistent": report.verdict.consistent,
            }));
        }
        let report_file =
            ReportFile::from_report(&report, OutputMeta::new(file.meta.seed, *tol));
        report_file.write(&args.out)?;
        if let Some(csv_path) = &args.csv {
            std::fs::write(csv_path, report_file.mode_csv())?;
        }
    }
    Ok(0)
}

fn run_symmetry(config: &ChoreographyConfig, samples: usize, tol: &Tolerances) -> Result<()> {
    let axis_tol = tol.residual_abs.max(1e-6);
    let axis = detect_symmetry_axis(&config.path, samples.max(64), axis_tol)?;
    let Some(axis) = axis else {
        print_line(json!({ "axis": null }));
        return Ok(());
    };
    let normalized = ChoreographyConfig {
        path: normalize_to_axis(&config.path, &axis)?,
        ..config.clone()
    };
    let n = config.n_bodies();
    let mut pairs = Vec::new();
    for k in 0..n {
        for l in (k + 1)..n {
            let check = analysis::reflection_identities(&normalized, k, l, samples)?;
            pairs.push(json!({
                "k": k,
                "l": l,
                "residuals": check.residuals,
                "mass_certificate": check.mass_certificate,
            }));
        }
    }
    print_line(json!({
        "axis": { "angle": axis.angle, "time_shift": axis.time_shift, "residual": axis.residual },
        "pairs": pairs,
    }));
    Ok(())
}

fn cmd_verify(input: &Path, samples: usize, tol: &Tolerances) -> Result<u8> {
    if choreo::io::holds_trajectory(input)? {
        let traj = TrajectoryFile::read(input)?.to_trajectory()?;
        let stats = verify_trajectory(&traj)?;
        let pass = stats.passes(tol.residual_abs);
        print_line(json!({
            "kind": "trajectory",
            "max_residual": stats.max_residual,
            "mean_residual": stats.mean_residual,
            "samples": stats.samples,
            "energy_drift": stats.energy_drift,
            "threshold": tol.residual_abs,
            "pass": pass,
        }));
        Ok(if pass { 0 } else { 1 })
    } else {
        let config = ConfigFile::read(input)?.config;
        let check = config.verify(samples)?;
        let pass = check.max_residual < tol.residual_abs
            && check.max_constraint_defect <= tol.constraint_abs;
        print_line(json!({
            "kind": "config",
            "max_residual": check.max_residual,
            "mean_residual": check.mean_residual,
            "max_constraint_defect": check.max_constraint_defect,
            "samples": check.samples,
            "threshold": tol.residual_abs,
            "pass": pass,
        }));
        Ok(if pass { 0 } else { 1 })
    }
}
