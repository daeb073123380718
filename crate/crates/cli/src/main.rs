//! `ap-lab`: runs registered verification checks from TOML configs.

mod config;
mod output;
mod runner;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ap_lab_core::verify::{Verdict, VerificationReport, CHECKS};
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use config::{expand_values, ConfigError, ExperimentConfig};
use output::{Scale, Writer};
use runner::RunError;

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_CONFIG: u8 = 64;

#[derive(Parser)]
#[command(name = "ap-lab", version, about = "Seeded 3AP counting and verification experiments")]
struct Cli {
    /// Overrides the `seeds` list of the config with this single seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 lets the pool pick.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output directory; overrides `out_dir` from the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        #[arg(required_unless_present = "list")]
        config: Option<PathBuf>,
        /// Print the registered checks and exit.
        #[arg(long)]
        list: bool,
    },
    /// Re-run an experiment over one parameter axis.
    Sweep {
        config: PathBuf,
        /// Dotted path below `params` (e.g. `n`, `measure.gamma`) or `seed`.
        #[arg(long)]
        axis: String,
        /// Comma-separated values or an inclusive integer range `a..b`.
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Metric to plot; `{value}` is replaced by the axis value.
        #[arg(long)]
        metric: Option<String>,
        #[arg(long, value_enum)]
        scale: Option<ScaleArg>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ScaleArg {
    Semilog,
    Loglog,
    Linear,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Config(m) => Failure::Config(m),
            RunError::Compute(m) => Failure::Runtime(m),
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { list: true, .. } => {
            for (name, claim) in CHECKS {
                println!("{name}\t{claim}");
            }
            Ok(EXIT_PASS)
        }
        Command::Run { config: Some(path), .. } => run(&cli, path),
        Command::Run { config: None, .. } => unreachable!("clap requires a config without --list"),
        Command::Sweep { config, axis, values, metric, scale } => sweep(&cli, config, axis, values, metric.as_deref(), *scale),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_FAIL)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: cannot read: {e}", path.display())))
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))
}

fn out_dir(cli: &Cli, cfg: &ExperimentConfig, config_path: &Path) -> PathBuf {
    match (&cli.out_dir, &cfg.out_dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => config_path.parent().unwrap_or(Path::new(".")).join(d),
        (None, None) => PathBuf::from("ap-lab-out"),
    }
}

fn exit_code(reports: &[VerificationReport]) -> u8 {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        EXIT_FAIL
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_PASS
    }
}

fn print_summary(label: &str, r: &VerificationReport) {
    let seed = r.seed.map_or("-".into(), |s| s.to_string());
    let diag = r.diagnostic.as_deref().map_or(String::new(), |d| format!(" ({d})"));
    println!("{label} seed {seed}: {}{diag}", r.verdict.as_str());
}

fn run(cli: &Cli, path: &Path) -> Result<u8, Failure> {
    let text = read(path)?;
    let mut cfg = config::parse(&text, &path.display().to_string())?;
    if let Some(s) = cli.seed {
        cfg.seeds = vec![s];
    }
    let hash = cfg.hash();
    let seeds = cfg.seeds.clone();
    let reports = pool(cli.threads)?.install(|| {
        seeds.par_iter().map(|&s| runner::run_one(&cfg, s)).collect::<Result<Vec<_>, RunError>>()
    })?;

    let dir = out_dir(cli, &cfg, path);
    let writer = Writer::new(&dir).map_err(io_err(&dir))?;
    let rows: Vec<String> = reports.iter().map(|r| output::jsonl_row(r, &cfg.name, &hash)).collect();
    writer.append_reports(&rows).map_err(io_err(&dir))?;
    let stem = output::stem("", &cfg.name, &hash);
    writer.write(&format!("{stem}.csv"), &output::reports_csv(&reports, &cfg.name, &hash)).map_err(io_err(&dir))?;
    let title = format!("{} ({})", cfg.name, cfg.check_name());
    writer.write(&format!("{stem}.svg"), &output::report_svg(&title, &hash, &reports)).map_err(io_err(&dir))?;

    for r in &reports {
        print_summary(&cfg.name, r);
    }
    println!("config {hash} -> {}", dir.display());
    Ok(exit_code(&reports))
}

fn default_metric(check: &str) -> &'static str {
    match check {
        "l3count" => "min_margin",
        "gowers_threshold" => "max_fourth_moment_ratio",
        "mass_telescoping" => "a_{value}",
        "polar_consistency" => "l1_gap",
        "frostman_fit" | "fractal_corollary" => "s_hat",
        "pointwise_decay" => "decay_exponent",
        _ => "ratio_constant",
    }
}

fn lookup(r: &VerificationReport, key: &str) -> Option<f64> {
    r.metrics.get(key).or_else(|| r.fitted.get(key)).copied()
}

fn sweep(
    cli: &Cli,
    path: &Path,
    axis: &str,
    values: &str,
    metric: Option<&str>,
    scale: Option<ScaleArg>,
) -> Result<u8, Failure> {
    let text = read(path)?;
    let origin = path.display().to_string();
    let base = config::parse(&text, &origin)?;
    let raw = config::read_raw(&text, &origin)?;
    let values = expand_values(values)?;
    let mut points: Vec<(String, ExperimentConfig)> = Vec::with_capacity(values.len());
    for v in &values {
        let mut cfg = config::with_axis(&raw, axis, v)?;
        if let (Some(s), false) = (cli.seed, axis == "seed") {
            cfg.seeds = vec![s];
        }
        points.push((v.clone(), cfg));
    }

    let jobs: Vec<(usize, u64)> =
        points.iter().enumerate().flat_map(|(i, (_, c))| c.seeds.iter().map(move |&s| (i, s))).collect();
    let reports = pool(cli.threads)?.install(|| {
        jobs.par_iter().map(|&(i, s)| runner::run_one(&points[i].1, s)).collect::<Result<Vec<_>, RunError>>()
    })?;

    let sweep_hash = {
        let joined: Vec<String> = points.iter().map(|(_, c)| c.hash()).collect();
        let key = format!("{}|{axis}|{}", base.hash(), joined.join(","));
        ap_lab_core::verify::digest_hex(key.as_bytes())
    };
    let labelled: Vec<(String, String, VerificationReport)> = jobs
        .iter()
        .zip(&reports)
        .map(|(&(i, _), r)| (points[i].0.clone(), points[i].1.hash(), r.clone()))
        .collect();

    let dir = out_dir(cli, &base, path);
    let writer = Writer::new(&dir).map_err(io_err(&dir))?;
    let rows: Vec<String> = labelled.iter().map(|(_, h, r)| output::jsonl_row(r, &base.name, h)).collect();
    writer.append_reports(&rows).map_err(io_err(&dir))?;
    let stem = output::stem("sweep-", &format!("{}-{axis}", base.name), &sweep_hash);
    writer.write(&format!("{stem}.csv"), &output::sweep_csv(&labelled, &base.name, axis)).map_err(io_err(&dir))?;

    let template = metric.unwrap_or(default_metric(base.check_name()));
    let xy: Vec<(f64, f64)> = labelled
        .iter()
        .filter_map(|(v, _, r)| {
            let x: f64 = v.parse().ok()?;
            Some((x, lookup(r, &template.replace("{value}", v))?))
        })
        .collect();
    let scale = match scale {
        Some(ScaleArg::Semilog) => Scale::SemiLog,
        Some(ScaleArg::Loglog) => Scale::LogLog,
        Some(ScaleArg::Linear) => Scale::Linear,
        None => output::default_scale(&xy),
    };
    let title = format!("{}: {template} over {axis}", base.name);
    writer.write(&format!("{stem}.svg"), &output::scatter_svg(&title, &sweep_hash, &xy, scale)).map_err(io_err(&dir))?;

    for (v, _, r) in &labelled {
        print_summary(&format!("{axis} = {v}"), r);
    }
    if let (_, Some(fit)) = output::fit_points(&xy, scale) {
        println!("fit of {template} ({scale:?}): slope {:.6}, r² {:.6}", fit.slope, fit.r2);
    }
    println!("sweep {sweep_hash} -> {}", dir.display());
    Ok(exit_code(&reports))
}
