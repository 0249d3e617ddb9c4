use clap::{Parser, Subcommand, ValueEnum};
use guidewave::fit::{Model, Verdict};
use guidewave_cli::commands::{evolve, fit, heat, plot, scan};
use guidewave_cli::output::{to_json, write_atomic, Stamp, VERSION};
use guidewave_cli::report::{failed, FitReport};
use guidewave_cli::{configure_threads, CliError, ExperimentConfig, CONTROL_GROWTH_MIN, DENSE_REL_TOL, SEMICLASSICAL_SPREAD_MAX};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "guidewave", version, about = "Damped waves in a strip: evolution, heat comparison and resolvent scans")]
struct Cli {
    /// Root directory for run outputs.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Exit with status 4 when a verdict fails.
    #[arg(long)]
    assert: bool,
    config: PathBuf,
    /// Config overrides, `--key.path=value`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Power,
    Exponential,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxesArg {
    Loglog,
    Semilog,
}

#[derive(Subcommand)]
enum Cmd {
    /// Integrate the damped wave equation and fit the decay.
    Evolve(RunArgs),
    /// Compare the wave with its heat model.
    HeatCompare(RunArgs),
    /// Resolvent norms along a list of spectral points.
    ResolventScan(RunArgs),
    /// Semiclassical resolvent and its undamped control.
    Semiclassical(RunArgs),
    /// Fit one column of a CSV series.
    Fit {
        csv: PathBuf,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long, value_enum, default_value = "power")]
        model: ModelArg,
        /// `t_min,t_max`.
        #[arg(long, value_delimiter = ',', default_values_t = [20.0, 500.0])]
        window: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        predicted: Option<f64>,
        #[arg(long, default_value_t = 0.15)]
        tolerance: f64,
        #[arg(long)]
        sharp: bool,
        #[arg(long, default_value = "adhoc")]
        id: String,
        /// Write the report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        assert: bool,
    },
    /// Render CSV series as an SVG figure.
    Plot {
        #[arg(required = true)]
        csv: Vec<PathBuf>,
        /// Columns to plot, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        y: Vec<String>,
        #[arg(long, default_value = "t")]
        x: String,
        #[arg(long, value_enum, default_value = "loglog")]
        axes: AxesArg,
        #[arg(long, value_delimiter = ',')]
        fit_window: Option<Vec<f64>>,
        /// Slope (or rate) guide; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        guide: Vec<f64>,
        #[arg(long, default_value = "")]
        title: String,
        #[arg(long)]
        svg: PathBuf,
    },
    /// Print the canonical form and hash of a config.
    Config {
        config: PathBuf,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, bool), CliError> {
    let mut assert = args.assert;
    let mut overrides = Vec::new();
    for o in &args.overrides {
        if o == "--assert" {
            assert = true;
        } else {
            overrides.push(o.clone());
        }
    }
    Ok((ExperimentConfig::load(&args.config, &overrides)?, assert))
}

fn pair(name: &str, v: &[f64]) -> Result<[f64; 2], CliError> {
    match v {
        &[a, b] => Ok([a, b]),
        _ => Err(CliError::Config(format!("--{name} takes two comma-separated values, got {}", v.len()))),
    }
}

fn list(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn print_fits(fits: &[FitReport]) {
    for f in fits {
        let pred = f.predicted.map_or("-".to_string(), |p| format!("{p:.4}"));
        println!("{:<14} {:<11} exponent {:>9.4} +- {:.1e}  predicted {pred:>8}  {:?}", f.series, format!("{:?}", f.model), f.exponent, f.stderr, f.verdict);
    }
}

fn check_fits(assert: bool, fits: &[FitReport]) -> Result<(), CliError> {
    let bad = failed(fits);
    if assert && !bad.is_empty() {
        return Err(CliError::Verdict(bad.join(", ")));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    let root = cli.out.as_path();
    match cli.cmd {
        Cmd::Evolve(a) => {
            let (cfg, assert) = load(&a)?;
            let (out, files) = evolve::cmd_evolve(&cfg, root)?;
            list(&files);
            let id = &out.output.identity;
            println!("energy identity: max step residual {:.2e}, drift {:.2e} (relative to E(0))", id.max_step_residual / id.initial_energy, id.max_drift / id.initial_energy);
            print_fits(&out.fits);
            check_fits(assert, &out.fits)
        }
        Cmd::HeatCompare(a) => {
            let (cfg, assert) = load(&a)?;
            let (out, files) = heat::cmd_heat_compare(&cfg, root)?;
            list(&files);
            println!("heat mass {:.4e}, final ratio_dt {:.4e}", out.summary.heat_mass, out.summary.ratio_dt_final);
            print_fits(&out.summary.fits);
            check_fits(assert, &out.summary.fits)
        }
        Cmd::ResolventScan(a) => {
            let (cfg, assert) = load(&a)?;
            let (out, files) = scan::cmd_resolvent(&cfg, root)?;
            list(&files);
            let s = &out.summary;
            if let (Some(m), Some(e)) = (s.slope, s.slope_stderr) {
                println!("slope {m:.4} +- {e:.1e}");
            }
            println!("max norm {:.4e}, max norm/<z>^2 {:.4e}, truncation-limited points {}", s.max_norm, s.max_ratio_japanese2, s.truncation_limited);
            let worst = s.dense_checks.iter().map(|d| d.relative_error).fold(0.0, f64::max);
            if !s.dense_checks.is_empty() {
                println!("dense checks {}, worst relative error {worst:.2e}", s.dense_checks.len());
            }
            if assert && (s.truncation_limited > 0 || worst > DENSE_REL_TOL) {
                return Err(CliError::Verdict(format!("{} truncation-limited points, dense error {worst:.2e}", s.truncation_limited)));
            }
            Ok(())
        }
        Cmd::Semiclassical(a) => {
            let (cfg, assert) = load(&a)?;
            let (out, files) = scan::cmd_semiclassical(&cfg, root)?;
            list(&files);
            println!("spread of h||R|| {:.3}, control growth {:.3}", out.spread, out.control_growth);
            if assert && !(out.spread <= SEMICLASSICAL_SPREAD_MAX && out.control_growth >= CONTROL_GROWTH_MIN) {
                return Err(CliError::Verdict(format!("spread {:.3}, control growth {:.3}", out.spread, out.control_growth)));
            }
            Ok(())
        }
        Cmd::Fit { csv, y, x, model, window, predicted, tolerance, sharp, id, report, assert } => {
            let req = fit::FitRequest {
                experiment_id: id,
                x,
                y,
                model: match model {
                    ModelArg::Power => Model::Power,
                    ModelArg::Exponential => Model::Exponential,
                },
                window: pair("window", &window)?,
                predicted,
                tolerance,
                sharp,
            };
            let r = fit::run_fit(&csv, &req)?;
            let stamp = fit::csv_stamp(&csv)?.unwrap_or(Stamp { config_hash: String::new(), version: VERSION.to_string() });
            let bytes = to_json(&stamp, &r);
            match report {
                Some(p) => {
                    write_atomic(&p, &bytes)?;
                    println!("wrote {}", p.display());
                }
                None => print!("{}", String::from_utf8_lossy(&bytes)),
            }
            if assert && r.verdict == Verdict::Fail {
                return Err(CliError::Verdict(format!("{} exponent {:.4}", r.series, r.exponent)));
            }
            Ok(())
        }
        Cmd::Plot { csv, y, x, axes, fit_window, guide, title, svg } => {
            let req = plot::PlotRequest {
                csvs: csv,
                x,
                ys: y,
                axes: match axes {
                    AxesArg::Loglog => plot::Axes::LogLog,
                    AxesArg::Semilog => plot::Axes::SemiLog,
                },
                fit_window: fit_window.map(|w| pair("fit-window", &w)).transpose()?,
                guides: guide,
                title,
            };
            write_atomic(&svg, plot::render(&req)?.as_bytes())?;
            println!("wrote {}", svg.display());
            Ok(())
        }
        Cmd::Config { config, overrides } => {
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            print!("{}", cfg.canonical());
            eprintln!("hash {}", cfg.hash());
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit status.
fn status<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("guidewave: {e}");
            e.exit_code() as u8
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(status(std::env::args_os()))
}
