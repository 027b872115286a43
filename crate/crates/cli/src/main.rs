#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ngflex_core::calibration::{CalibrationReport, CalibrationRequest, QMethod};
use ngflex_core::field::MarginalModel;
use ngflex_core::inference::study::{aggregate, run_study, NoiseScale, StudyConfig};
use ngflex_core::inference::{fit, gaussianity_report, FitConfig, ObservationModel, PosteriorChains};
use ngflex_core::priors::{kld_eta_taylor, kld_noise_numeric};
use ngflex_core::Variant;
use rayon::prelude::*;

mod output;
mod simulate;

use output::{read_config, Outputs};

/// R̂ threshold for a converged fit.
const RHAT_THRESHOLD: f64 = 1.05;

#[derive(Debug, Parser)]
#[command(name = "ngflex", version, about = "Non-Gaussian latent models with flexible noise and PC priors")]
struct Cli {
    /// Seed overriding the one in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 uses all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw noise and latent paths for one or more models.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Calibrate the PC-prior rates.
    Calibrate(CalibrateArgs),
    /// Compare the numeric KLD with its small-η expansion on a grid.
    KldCheck(KldArgs),
    /// Fit a model to `(location, y)` data.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Convergence and Gaussianity diagnostics of a stored posterior.
    Diagnose {
        /// `posterior.json` written by `fit`.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Replicated simulation study.
    Study(StudyArgs),
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Calibration request document; the flags below are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "NIG")]
    variant: Variant,
    /// OU_d1, Matern2_d1 or Matern2_d2. Without it only θ_μ is calibrated.
    #[arg(long)]
    model: Option<MarginalModel>,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long)]
    alpha_eta: Option<f64>,
    #[arg(long)]
    alpha_mu: Option<f64>,
    /// Find `Q⁻¹(2)` numerically instead of using the closed forms.
    #[arg(long)]
    root_finding: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct KldArgs {
    #[arg(long, default_value_t = 1e-3)]
    eta_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    eta_max: f64,
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// Values of `μ`; rows with `μ ≠ 0` also report the excess over `μ = 0`.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    mu: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct StudyArgs {
    #[arg(long, default_value_t = 1)]
    set: u8,
    /// Study configuration document; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated prior names (PC1, PC2, IG1/N1, IG2/N2, Uniform).
    #[arg(long, value_delimiter = ',')]
    priors: Vec<String>,
    /// Comma-separated scenario names.
    #[arg(long, value_delimiter = ',')]
    scenarios: Vec<String>,
    /// Read the measurement-noise figure as a standard deviation.
    #[arg(long)]
    noise_sd: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { config, out } => {
            let mut cfg: simulate::SimulateConfig = read_config(&config)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let outputs = Outputs::new(&out, "simulate", cfg.seed, &cfg)?;
            for p in simulate::run(&cfg, &outputs)? {
                println!("{}", p.display());
            }
        }
        Command::Calibrate(args) => calibrate(args, cli.seed.unwrap_or(0))?,
        Command::KldCheck(args) => kld_check(args, cli.seed.unwrap_or(0))?,
        Command::Fit { data, config, out } => return fit_cmd(&data, &config, &out, cli.seed),
        Command::Diagnose { input, out } => diagnose(&input, &out)?,
        Command::Study(args) => study(args, cli.seed)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn calibrate(args: CalibrateArgs, seed: u64) -> Result<()> {
    let request = match &args.config {
        Some(path) => read_config(path)?,
        None => match (args.model, args.alpha_eta) {
            (Some(model), Some(alpha_eta)) => CalibrationRequest::Marginal {
                variant: args.variant,
                model,
                kappa: args.kappa,
                alpha_eta,
                alpha_mu: args.alpha_mu,
                q_method: if args.root_finding { QMethod::RootFinding } else { QMethod::Table },
            },
            (None, None) => match args.alpha_mu {
                Some(alpha_mu) => CalibrationRequest::Mu {
                    variant: args.variant,
                    alpha_mu,
                },
                None => bail!("give --alpha-mu, or --model with --alpha-eta, or --config"),
            },
            _ => bail!("--model and --alpha-eta go together"),
        },
    };
    let report = CalibrationReport::run(request.clone())?;
    let outputs = Outputs::new(&args.out, "calibrate", seed, &request)?;
    let doc = serde_json::json!({
        "schema": "ngflex-calibration-1",
        "method": request,
        "report": report,
    });
    outputs.write_json("calibration.json", &doc)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// Least-squares slope of `log y` on `log x`.
fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn kld_check(args: KldArgs, seed: u64) -> Result<()> {
    if !(args.eta_min > 0.0 && args.eta_max > args.eta_min) || args.points < 2 {
        bail!("need 0 < eta-min < eta-max and at least two points");
    }
    let etas: Vec<f64> = (0..args.points)
        .map(|i| {
            let t = i as f64 / (args.points - 1) as f64;
            (args.eta_min.ln() + t * (args.eta_max / args.eta_min).ln()).exp()
        })
        .collect();
    let mut cells = Vec::new();
    for variant in [Variant::Nig, Variant::Gal] {
        for &mu in &args.mu {
            for &eta in &etas {
                cells.push((variant, mu, eta));
            }
        }
    }
    let rows: Vec<(Variant, f64, f64, f64, f64, f64)> = cells
        .par_iter()
        .map(|&(variant, mu, eta)| -> Result<_> {
            let numeric = kld_noise_numeric(variant, eta, mu, args.h)?;
            let base = if mu == 0.0 { numeric } else { kld_noise_numeric(variant, eta, 0.0, args.h)? };
            let taylor = kld_eta_taylor(variant, eta, &[args.h]);
            Ok((variant, eta, mu, numeric, taylor, numeric - base))
        })
        .collect::<Result<_>>()?;
    let slopes: serde_json::Map<String, serde_json::Value> = [Variant::Nig, Variant::Gal]
        .iter()
        .map(|&v| {
            let (x, y): (Vec<f64>, Vec<f64>) =
                rows.iter().filter(|r| r.0 == v && r.2 == 0.0).map(|r| (r.1, r.3)).unzip();
            let slope = if x.len() >= 2 { log_log_slope(&x, &y) } else { f64::NAN };
            (v.name().to_string(), serde_json::json!(slope))
        })
        .collect();
    let config = serde_json::json!({
        "eta_min": args.eta_min, "eta_max": args.eta_max, "points": args.points, "mu": args.mu, "h": args.h,
    });
    let outputs = Outputs::new(&args.out, "kld-check", seed, &config)?;
    let path = outputs.csv_with("kld.csv", serde_json::json!({ "log_log_slope_mu0": slopes }), |w| {
        w.write_record(["variant", "eta", "mu", "kld_numeric", "kld_taylor", "rel_error", "kld_mu_excess"])?;
        for &(v, eta, mu, numeric, taylor, excess) in &rows {
            w.write_record([
                v.name().to_string(),
                eta.to_string(),
                mu.to_string(),
                numeric.to_string(),
                taylor.to_string(),
                (numeric / taylor - 1.0).to_string(),
                excess.to_string(),
            ])?;
        }
        Ok(())
    })?;
    println!("{}", path.display());
    for (v, s) in &slopes {
        println!("{v}: log-log slope at mu = 0: {:.4}", s.as_f64().unwrap_or(f64::NAN));
    }
    Ok(())
}

/// Locations and observations; `y` is required, every other column is a
/// coordinate.
fn read_data(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let header = r.headers()?.clone();
    let y_col = header
        .iter()
        .position(|h| h.trim() == "y")
        .with_context(|| format!("{}: no 'y' column in header", path.display()))?;
    let coord_cols: Vec<usize> = (0..header.len()).filter(|&c| c != y_col).collect();
    if coord_cols.is_empty() || coord_cols.len() > 2 {
        bail!("{}: expected one or two coordinate columns, found {}", path.display(), coord_cols.len());
    }
    let mut coords = Vec::new();
    let mut y = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |c: usize| -> Result<f64> {
            rec[c]
                .trim()
                .parse()
                .with_context(|| format!("{}: row {}, column '{}'", path.display(), line + 2, &header[c]))
        };
        coords.push(coord_cols.iter().map(|&c| num(c)).collect::<Result<Vec<f64>>>()?);
        y.push(num(y_col)?);
    }
    if y.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok((coords, y))
}

fn fit_cmd(data: &Path, config: &Path, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let mut cfg = FitConfig::read(config).with_context(|| format!("invalid config {}", config.display()))?;
    if let Some(s) = seed {
        cfg.mcmc.seed = s;
    }
    let (coords, y) = read_data(data)?;
    let (op, a) = match coords[0].len() {
        1 => {
            if cfg.model.dimension() != 1 {
                bail!("model.kind needs two coordinate columns");
            }
            cfg.model.build_1d(&coords.iter().map(|c| c[0]).collect::<Vec<_>>())?
        }
        _ => cfg.model.build_2d(&coords.iter().map(|c| [c[0], c[1]]).collect::<Vec<_>>())?,
    };
    let model = ObservationModel::new(y, a, op, cfg.variant)?;
    let chains = fit(&model, &cfg.prior, &cfg.mcmc)?;
    let outputs = Outputs::new(out, "fit", cfg.mcmc.seed, &cfg)?;
    outputs.csv_raw("chains.csv", |w| Ok(chains.write_csv(w)?))?;
    outputs.write_json("summary.json", &chains.summary_json()?)?;
    outputs.write_json("posterior.json", &chains)?;
    let report = gaussianity_report(&chains)?;
    outputs.csv_raw("gaussianity.csv", |w| Ok(report.write_csv(w)?))?;
    Ok(convergence_status(&chains, report.n_flagged()))
}

fn convergence_status(chains: &PosteriorChains, flagged: usize) -> ExitCode {
    let mut bad = Vec::new();
    for s in chains.summary().iter().filter(|s| !s.fixed) {
        println!("{:<10} mean {:>10.4}  sd {:>9.4}  R-hat {:.3}  ESS {:>7.1}", s.name, s.mean, s.sd, s.rhat, s.ess);
        if !(s.rhat < RHAT_THRESHOLD) {
            bad.push(format!("{} (R-hat {:.3})", s.name, s.rhat));
        }
    }
    println!("nodes flagged as locally non-Gaussian: {flagged}");
    if bad.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("not converged: R-hat >= {RHAT_THRESHOLD} for {}", bad.join(", "));
        eprintln!("acceptance rates per chain: {:?}", chains.acceptance);
        ExitCode::from(2)
    }
}

fn diagnose(input: &Path, out: &Path) -> Result<()> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let chains: PosteriorChains = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    let report = gaussianity_report(&chains)?;
    let outputs = Outputs::new(out, "diagnose", chains.config.seed, &serde_json::json!({ "input": input }))?;
    outputs.csv_raw("gaussianity.csv", |w| Ok(report.write_csv(w)?))?;
    outputs.csv("parameters.csv", |w| {
        for s in chains.summary() {
            w.serialize(s)?;
        }
        Ok(())
    })?;
    let code = convergence_status(&chains, report.n_flagged());
    if code != ExitCode::SUCCESS {
        println!("chains have not converged");
    }
    Ok(())
}

fn study(args: StudyArgs, seed: Option<u64>) -> Result<()> {
    let mut cfg: StudyConfig = match &args.config {
        Some(p) => read_config(p)?,
        None => StudyConfig {
            set: args.set,
            ..StudyConfig::default()
        },
    };
    if let Some(r) = args.replications {
        cfg.replications = r;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if !args.priors.is_empty() {
        cfg.priors = args.priors.clone();
    }
    if !args.scenarios.is_empty() {
        cfg.scenarios = args.scenarios.clone();
    }
    if args.noise_sd {
        cfg.noise_scale = NoiseScale::Sd;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let rows = run_study(&cfg)?;
    let agg = aggregate(&rows);
    let outputs = Outputs::new(&args.out, "study", cfg.seed, &cfg)?;
    outputs.csv("study_rows.csv", |w| {
        for r in &rows {
            w.serialize(r)?;
        }
        Ok(())
    })?;
    let path = outputs.csv("study_aggregate.csv", |w| {
        for a in &agg {
            w.serialize(a)?;
        }
        Ok(())
    })?;
    println!("{:<10} {:<8} {:>10} {:>10} {:>10} {:>10}", "scenario", "prior", "eta*", "width", "mu*", "width");
    for a in &agg {
        println!(
            "{:<10} {:<8} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            a.scenario, a.prior, a.median_eta_star_mean, a.median_eta_star_width, a.median_mu_star_mean, a.median_mu_star_width
        );
    }
    println!("{}", path.display());
    Ok(())
}
