//! Command-line front end: tuning campaigns, baselines, single evaluations,
//! resume, and run-directory reports.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use valvetune::acquisition::AcquisitionKind;
use valvetune::bo::TuningReport;
use valvetune::campaign::{BaselineMethod, Campaign, CampaignError};
use valvetune::config::{CampaignConfig, Functional};
use valvetune::cost::{j_heur, zero_phase_filter, SAMPLE_RATE_HZ};
use valvetune::paramspace::ParamVector;

/// Environment variable naming the default output base directory.
const OUT_ENV: &str = "VALVETUNE_OUT";

#[derive(Parser)]
#[command(
    name = "valvetune",
    version,
    about = "Bayesian-optimization auto-tuning of ADRC controllers on a simulated throttle valve"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a tuning campaign from a config file.
    Tune {
        /// Path to the campaign config (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides config and VALVETUNE_OUT).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spend the same evaluation budget on random or grid proposals.
    Baseline {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Grid resolution per dimension (grid method only).
        #[arg(long, default_value_t = 2)]
        points_per_dim: usize,
    },
    /// Evaluate one parameter point and print its cost breakdown.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// T_set [s], T_obs [s], P1 [1/s], P2 [1/s].
        #[arg(num_args = 4, value_names = ["T_SET", "T_OBS", "P1", "P2"], allow_negative_numbers = true)]
        theta: Vec<f64>,
        /// Also run the secondary-objective experiments.
        #[arg(long)]
        secondary: bool,
    },
    /// Continue an interrupted run directory to completion.
    Resume {
        #[arg(long)]
        run: PathBuf,
    },
    /// Summarize a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Random,
    Grid,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = std::error::Error::source(&err);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Configuration and safety-bound violations exit with 2; runtime failures
/// with 1.
fn exit_code_for(err: &CampaignError) -> u8 {
    match err {
        CampaignError::Config(_) | CampaignError::ParamSpace(_) => 2,
        _ => 1,
    }
}

fn dispatch(cmd: Command) -> Result<(), CampaignError> {
    match cmd {
        Command::Tune { config, out } => {
            let cfg = CampaignConfig::from_path(&config)?;
            let out = resolve_out(&cfg, out, "tune");
            let campaign = Campaign::new(cfg, out.clone())?;
            let report = campaign.run_tune()?;
            write_plots(&out, &report)?;
            print_summary(&report, &out);
            Ok(())
        }
        Command::Baseline {
            config,
            out,
            method,
            points_per_dim,
        } => {
            let cfg = CampaignConfig::from_path(&config)?;
            let out = resolve_out(&cfg, out, "baseline");
            let campaign = Campaign::new(cfg, out.clone())?;
            let method = match method {
                MethodArg::Random => BaselineMethod::Random,
                MethodArg::Grid => BaselineMethod::Grid { points_per_dim },
            };
            let report = campaign.run_baseline(method)?;
            write_plots(&out, &report)?;
            print_summary(&report, &out);
            Ok(())
        }
        Command::Evaluate {
            config,
            theta,
            secondary,
        } => {
            let cfg = CampaignConfig::from_path(&config)?;
            let theta = ParamVector::from_slice(&theta).map_err(CampaignError::ParamSpace)?;
            let campaign = Campaign::new(cfg, PathBuf::from("."))?;
            let report = campaign.evaluate_once(&theta, secondary)?;
            print_evaluation(campaign.config(), &report)?;
            Ok(())
        }
        Command::Resume { run } => {
            let report = Campaign::resume(run.clone())?;
            write_plots(&run, &report)?;
            print_summary(&report, &run);
            Ok(())
        }
        Command::Report { run } => print_run_report(&run),
    }
}

fn resolve_out(cfg: &CampaignConfig, flag: Option<PathBuf>, kind: &str) -> PathBuf {
    if let Some(out) = flag {
        return out;
    }
    if let Some(out) = &cfg.output_dir {
        return out.clone();
    }
    let base = std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"));
    let functional = match cfg.functional {
        Functional::Heur => "heur",
        Functional::Norm => "norm",
    };
    let acq = match cfg.acquisition {
        AcquisitionKind::Ei => "ei",
        AcquisitionKind::Es => "es",
    };
    base.join(format!("{kind}_{functional}_{acq}_seed{}", cfg.seed))
}

fn write_plots(out: &Path, report: &TuningReport) -> Result<(), CampaignError> {
    let best = report.best_observed_so_far();
    let observed: Vec<(f64, f64)> = report
        .history
        .iter()
        .map(|r| (r.iteration as f64, r.observed_cost))
        .collect();
    let best_pts: Vec<(f64, f64)> = best
        .iter()
        .enumerate()
        .map(|(i, &b)| (i as f64, b))
        .collect();
    let svg = plot::line_chart(
        "cost vs iteration",
        "iteration",
        "J",
        &[("observed", observed), ("best observed", best_pts)],
    );
    let path = out.join("plot").join("cost_vs_iteration.svg");
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).ok();
    }
    std::fs::write(&path, svg).map_err(|source| CampaignError::Io {
        context: format!("writing {}", path.display()),
        source,
    })?;

    // Frequency-response plot from the last persisted |S|/|T| file, if any.
    if let Some(st) = last_st_file(out) {
        if let Ok(text) = std::fs::read_to_string(&st) {
            let mut s_pts = Vec::new();
            let mut t_pts = Vec::new();
            for line in text.lines().skip(1) {
                let cols: Vec<&str> = line.split(',').collect();
                if cols.len() == 3 {
                    if let (Ok(f), Ok(s), Ok(t)) = (
                        cols[0].parse::<f64>(),
                        cols[1].parse::<f64>(),
                        cols[2].parse::<f64>(),
                    ) {
                        s_pts.push((f, s));
                        t_pts.push((f, t));
                    }
                }
            }
            let svg = plot::line_chart(
                "estimated |S| and |T|",
                "frequency [Hz]",
                "magnitude",
                &[("|S|", s_pts), ("|T|", t_pts)],
            );
            let path = out.join("plot").join("frequency_response.svg");
            std::fs::write(&path, svg).ok();
        }
    }
    Ok(())
}

fn last_st_file(out: &Path) -> Option<PathBuf> {
    let dir = out.join("plot");
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("st_iter_") && n.ends_with(".csv"))
        })
        .collect();
    files.sort();
    files.pop()
}

fn print_summary(report: &TuningReport, out: &Path) {
    let best = report
        .best_observed_so_far()
        .last()
        .copied()
        .unwrap_or(f64::NAN);
    println!("completed {} evaluations", report.history.len());
    println!("best observed cost: {best:.6}");
    println!(
        "incumbent: t_set = {:.4} s, t_obs = {:.4} s, p1 = {:.4}, p2 = {:.4} (cost {:.6})",
        report.incumbent.first().copied().unwrap_or(f64::NAN),
        report.incumbent.get(1).copied().unwrap_or(f64::NAN),
        report.incumbent.get(2).copied().unwrap_or(f64::NAN),
        report.incumbent.get(3).copied().unwrap_or(f64::NAN),
        report.incumbent_cost
    );
    println!("artifacts in {}", out.display());
}

fn print_evaluation(
    cfg: &CampaignConfig,
    report: &valvetune::campaign::EvalOnceReport,
) -> Result<(), CampaignError> {
    println!(
        "theta: t_set = {} s, t_obs = {} s, p1 = {}, p2 = {}",
        report.theta.t_set, report.theta.t_obs, report.theta.p1, report.theta.p2
    );
    println!("J = {:.6}", report.cost);
    println!("breakdown: {}", serde_json::to_string_pretty(&report.breakdown)?);
    println!(
        "controller: L = [{:.4}, {:.4}, {:.4}], K = [{:.6}, {:.6}], v = {:.6}",
        report.design.l[0],
        report.design.l[1],
        report.design.l[2],
        report.design.k[0],
        report.design.k[1],
        report.design.v
    );

    if cfg.functional == Functional::Heur {
        let mut filtered = report.trajectory.clone();
        filtered.y = zero_phase_filter(&report.trajectory.y, cfg.heur.filter_cutoff_hz, SAMPLE_RATE_HZ)?;
        let heur = j_heur(&filtered, &cfg.heur.steps)?;
        println!("per-step metrics:");
        println!("  step   edge[s]   from->to[deg]     T90[ms]   overshoot[deg]  settled");
        for s in &heur.steps {
            println!(
                "  {:>4}  {:>8.3}  {:>6.1} -> {:>5.1}  {:>9.1}  {:>14.4}  {}",
                s.index,
                s.t_edge,
                s.from,
                s.to,
                s.t90 * 1e3,
                s.overshoot,
                s.settled
            );
        }
    }

    if let Some(sec) = &report.secondary {
        println!("secondary metrics:");
        println!("  robustness (1/|S|_inf): {:.4}", sec.robustness);
        println!("  noise [deg]:            {:.4}", sec.noise);
        println!("  T_dist [ms]:            {:.1}", sec.t_dist * 1e3);
        println!("  h_dist [deg]:           {:.4}", sec.h_dist);
    }
    Ok(())
}

fn print_run_report(run: &Path) -> Result<(), CampaignError> {
    let path = run.join("report.json");
    let text = std::fs::read_to_string(&path).map_err(|source| CampaignError::Io {
        context: format!("reading {}", path.display()),
        source,
    })?;
    let report: TuningReport = serde_json::from_str(&text)?;
    println!("run directory: {}", run.display());
    println!("seed: {}", report.seed);
    println!("history ({} evaluations):", report.history.len());
    println!("  iter  phase  cost          best-so-far   failed");
    let best = report.best_observed_so_far();
    for (rec, b) in report.history.iter().zip(&best) {
        println!(
            "  {:>4}  {:<5}  {:<12.6}  {:<12.6}  {}",
            rec.iteration,
            match rec.phase {
                valvetune::bo::Phase::Init => "init",
                valvetune::bo::Phase::Bo => "bo",
            },
            rec.observed_cost,
            b,
            rec.failed
        );
    }
    print_summary(&report, run);
    Ok(())
}
