//! `rspnet`: analyse interaction matrices, simulate networks of reinforced
//! stochastic processes, run seeded ensembles, emit figure panels and query
//! the exact law of small instances.
//!
//! Exit codes: 0 success, 1 a checked expectation failed, 2 invalid input.

mod manifest;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use chrono::Utc;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rspnet::condensation::{condensation, CondensationReport};
use rspnet::export::{diagnostics_records, fmt_f64, write_trajectory_csv};
use rspnet::harness::check::{check_verdict, CheckReport, Outcome};
use rspnet::harness::ensemble::{run_ensemble, ConfigFile, EnsembleConfig, EnsembleStats};
use rspnet::harness::figures::{figure_data, write_panels_csv};
use rspnet::harness::oracle::brute_force_law;
use rspnet::harness::scenario::{figure_scenario, Preset};
use rspnet::matrix::MatrixFile;
use rspnet::regime::{classify, RegimeKind, RegimeVerdict};
use rspnet::spectral::{is_irreducible, period};
use rspnet::{InteractionMatrix, Mode, SpectralStructure};

use manifest::{config_hash, RunManifest};

#[derive(Parser)]
#[command(name = "rspnet", version, about = "Networks of interacting reinforced stochastic processes")]
struct Cli {
    /// Master seed; overrides the seed of the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for replicate-parallel work.
    #[arg(long, global = true, env = "RSPNET_JOBS")]
    jobs: Option<usize>,

    /// Output directory (or file for `analyze`). Without it, results go to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Kind {
    TrivialAbsorbed,
    ForcedToZero,
    ConvergeNoSync,
    CompleteSync,
    PeriodicPartialSync,
}

impl From<Kind> for RegimeKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::TrivialAbsorbed => RegimeKind::TrivialAbsorbed,
            Kind::ForcedToZero => RegimeKind::ForcedToZero,
            Kind::ConvergeNoSync => RegimeKind::ConvergeNoSync,
            Kind::CompleteSync => RegimeKind::CompleteSync,
            Kind::PeriodicPartialSync => RegimeKind::PeriodicPartialSync,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Period, cyclic classes, Perron vector, or the block structure of a reducible matrix.
    Analyze { matrix: PathBuf },
    /// One trajectory with per-checkpoint diagnostics.
    Simulate { config: PathBuf },
    /// Seeded Monte Carlo ensemble; optionally check the predicted regime.
    Ensemble {
        config: PathBuf,
        /// Evaluate the predicted regime's expectations; exit 1 if any fails.
        #[arg(long)]
        check_verdict: bool,
        /// Check this regime instead of the predicted one.
        #[arg(long, value_enum, requires = "check_verdict")]
        expect: Option<Kind>,
    },
    /// Inclination and action panels of a preset scenario.
    Figures {
        preset: String,
        #[arg(long, default_value_t = 6)]
        panels: usize,
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Exact moments of a small instance by enumerating every action path.
    Oracle { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Errors are input or validation failures and map to exit code 2.
fn run(cli: Cli) -> Result<u8> {
    if let Some(jobs) = cli.jobs.filter(|&j| j > 0) {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global()?;
    }
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Analyze { matrix } => analyze(matrix, out, cli.format).map(|_| 0),
        Command::Simulate { config } => simulate(config, cli.seed, out, cli.format).map(|_| 0),
        Command::Ensemble { config, check_verdict, expect } => ensemble(
            config,
            cli.seed,
            out,
            cli.format,
            check_verdict.then_some(expect.map(RegimeKind::from)),
        ),
        Command::Figures { preset, panels, horizon } => {
            figures(preset, cli.seed.unwrap_or(0), *panels, *horizon, out).map(|_| 0)
        }
        Command::Oracle { config } => oracle(config, cli.seed, out, cli.format).map(|_| 0),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<EnsembleConfig> {
    let file: ConfigFile = read_json(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut cfg = file.resolve(base)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut w = stdout.lock();
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    manifest_hash: &'a str,
    #[serde(flatten)]
    body: T,
}

// analyze

#[derive(Serialize)]
struct BlockReport {
    vertices: Vec<usize>,
    n_per: Option<usize>,
    classes: Option<Vec<usize>>,
    v: Option<Vec<f64>>,
    lambda_star: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct AnalyzeReport {
    n: usize,
    mode: Mode,
    irreducible: bool,
    n_per: Option<usize>,
    classes: Option<Vec<usize>>,
    class_members: Option<Vec<Vec<usize>>>,
    class_mass: Option<Vec<f64>>,
    v: Option<Vec<f64>>,
    lambda_star: Option<f64>,
    condensation: Option<CondensationReport>,
    blocks: Option<Vec<BlockReport>>,
    warning: Option<String>,
}

fn block_report(vertices: &[usize], sub: &[Vec<f64>], mode: Mode) -> BlockReport {
    let mut b = BlockReport {
        vertices: vertices.to_vec(),
        n_per: None,
        classes: None,
        v: None,
        lambda_star: None,
        error: None,
    };
    if vertices.len() == 1 {
        b.n_per = Some(1);
        b.classes = Some(vec![0]);
        b.v = Some(vec![1.0]);
        b.lambda_star = Some(sub[0][0]);
        return b;
    }
    let other = if mode == Mode::Stochastic { Mode::Generalized } else { Mode::Stochastic };
    let analysed = InteractionMatrix::from_transpose_rows(sub, mode)
        .or_else(|_| InteractionMatrix::from_transpose_rows(sub, other))
        .and_then(|m| SpectralStructure::analyze(&m));
    match analysed {
        Ok(s) => {
            b.n_per = Some(s.n_per);
            b.classes = Some(s.classes);
            b.v = Some(s.v);
            b.lambda_star = Some(s.lambda_star);
        }
        Err(e) => b.error = Some(e.to_string()),
    }
    b
}

fn analyze(path: &Path, out: Option<&Path>, format: Format) -> Result<()> {
    let file: MatrixFile = read_json(path)?;
    let m = InteractionMatrix::from_file(&file)?;
    let mut report = AnalyzeReport {
        n: m.n(),
        mode: m.mode(),
        irreducible: is_irreducible(&m),
        n_per: None,
        classes: None,
        class_members: None,
        class_mass: None,
        v: None,
        lambda_star: None,
        condensation: None,
        blocks: None,
        warning: None,
    };
    if report.irreducible {
        let s = SpectralStructure::analyze(&m)?;
        report.n_per = Some(s.n_per);
        report.classes = Some(s.classes);
        report.class_members = Some(s.class_members);
        report.class_mass = Some(s.class_mass);
        report.v = Some(s.v);
        report.lambda_star = Some(s.lambda_star);
    } else {
        let c = condensation(&m);
        report.blocks = Some(
            c.recurrent_blocks
                .iter()
                .map(|b| block_report(&b.vertices, &b.sub_matrix, m.mode()))
                .collect(),
        );
        report.warning = Some(format!(
            "matrix is reducible with {} recurrent block(s); period and classes are reported per block",
            c.m
        ));
        report.condensation = Some(c);
    }
    match (format, out) {
        (Format::Json, Some(p)) => write_json(p, &report),
        (Format::Json, None) => print_json(&report),
        (Format::Csv, out) => {
            let mut w: Box<dyn Write> = match out {
                Some(p) => Box::new(create(p)?),
                None => Box::new(io::stdout().lock()),
            };
            writeln!(w, "vertex,class,v")?;
            if let (Some(cls), Some(v)) = (&report.classes, &report.v) {
                for (l, (c, x)) in cls.iter().zip(v).enumerate() {
                    writeln!(w, "{l},{c},{}", fmt_f64(*x))?;
                }
            }
            if let Some(msg) = &report.warning {
                eprintln!("warning: {msg}");
            }
            w.flush()?;
            Ok(())
        }
    }
}

// simulate

fn simulate(path: &Path, seed: Option<u64>, out: Option<&Path>, format: Format) -> Result<()> {
    let started = Utc::now();
    let cfg = load_config(path, seed)?;
    cfg.thresholds.validate()?;
    let file = cfg.to_file();
    let hash = config_hash("simulate", &file)?;
    let traj = cfg.replicate(0)?;
    let records = diagnostics_records(&traj);
    let diagnostics = Stamped { manifest_hash: &hash, body: serde_json::json!({ "records": records }) };
    match out {
        Some(dir) => {
            create_dir(dir)?;
            let mut w = create(&dir.join("trajectory.csv"))?;
            write_trajectory_csv(&mut w, &traj, Some(&hash))?;
            w.flush()?;
            write_json(&dir.join("diagnostics.json"), &diagnostics)?;
            let mut man = RunManifest::new("simulate", hash.clone(), cfg.master_seed, started);
            man.outputs = vec!["trajectory.csv".into(), "diagnostics.json".into()];
            man.write(dir)
        }
        None => match format {
            Format::Csv => {
                let mut w = io::stdout().lock();
                write_trajectory_csv(&mut w, &traj, Some(&hash))?;
                w.flush()?;
                Ok(())
            }
            Format::Json => print_json(&diagnostics),
        },
    }
}

// ensemble

fn predicted_verdict(cfg: &EnsembleConfig) -> Result<RegimeVerdict> {
    let n_per = period(&cfg.matrix)?;
    let trivial = cfg.z0.is_trivial(cfg.matrix.n(), cfg.matrix.mode())?;
    let f = cfg.schedule.flags;
    Ok(classify(f.sum_r, f.sum_r_one_minus_r, n_per, trivial, cfg.matrix.mode())?)
}

fn print_check_table(report: &CheckReport) {
    eprintln!("regime: {:?}", report.kind);
    for r in &report.results {
        let outcome = match r.outcome {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::NotApplicable => "N/A",
            Outcome::Informational => "INFO",
        };
        let num = |x: Option<f64>| x.map_or("-".to_owned(), |x| format!("{x:.4e}"));
        eprintln!(
            "{outcome:<5} {:<28} stat={:<11} threshold={:<11} {}",
            format!("{:?}", r.name),
            num(r.statistic),
            num(r.threshold),
            r.note
        );
    }
}

fn write_checkpoint_csv<W: Write>(mut w: W, stats: &EnsembleStats, hash: &str) -> Result<()> {
    writeln!(w, "# manifest_hash={hash}")?;
    writeln!(w, "n,is_clock,metric,count,min,q25,median,q75,max,mean")?;
    for c in &stats.checkpoints {
        for (metric, q) in &c.metrics {
            let name = serde_json::to_value(metric)?;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                c.n,
                c.is_clock,
                name.as_str().unwrap_or_default(),
                q.count,
                fmt_f64(q.min),
                fmt_f64(q.q25),
                fmt_f64(q.median),
                fmt_f64(q.q75),
                fmt_f64(q.max),
                fmt_f64(q.mean)
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `check` is `None` without `--check-verdict`, `Some(None)` for the
/// predicted regime and `Some(Some(kind))` for an explicit one.
fn ensemble(
    path: &Path,
    seed: Option<u64>,
    out: Option<&Path>,
    format: Format,
    check: Option<Option<RegimeKind>>,
) -> Result<u8> {
    let started = Utc::now();
    let cfg = load_config(path, seed)?;
    cfg.validate()?;
    let hash = config_hash("ensemble", &cfg.to_file())?;
    let verdict = match check {
        None => None,
        Some(Some(kind)) => Some(kind.verdict()),
        Some(None) => Some(predicted_verdict(&cfg)?),
    };
    let stats = run_ensemble(&cfg)?;
    let report = match &verdict {
        Some(v) => Some(check_verdict(&stats, v, &cfg.thresholds)?),
        None => None,
    };
    let stamped_stats = Stamped { manifest_hash: &hash, body: &stats };
    match out {
        Some(dir) => {
            create_dir(dir)?;
            let mut outputs = vec!["stats.json".to_owned()];
            write_json(&dir.join("stats.json"), &stamped_stats)?;
            if format == Format::Csv {
                write_checkpoint_csv(create(&dir.join("checkpoints.csv"))?, &stats, &hash)?;
                outputs.push("checkpoints.csv".into());
            }
            if let Some(r) = &report {
                write_json(&dir.join("check.json"), &Stamped { manifest_hash: &hash, body: r })?;
                outputs.push("check.json".into());
            }
            let mut man = RunManifest::new("ensemble", hash.clone(), cfg.master_seed, started);
            man.outputs = outputs;
            man.write(dir)?;
        }
        None => match format {
            Format::Json => print_json(&stamped_stats)?,
            Format::Csv => write_checkpoint_csv(io::stdout().lock(), &stats, &hash)?,
        },
    }
    Ok(match &report {
        Some(r) => {
            print_check_table(r);
            if r.passed() {
                0
            } else {
                1
            }
        }
        None => 0,
    })
}

// figures

fn figures(
    preset: &str,
    seed: u64,
    n_panels: usize,
    horizon: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let started = Utc::now();
    let dir = out.ok_or_else(|| anyhow!("figures requires --out DIR"))?;
    if n_panels == 0 {
        bail!("--panels must be at least 1");
    }
    let preset: Preset = preset.parse()?;
    let mut cfg = figure_scenario(preset, seed)?;
    if let Some(h) = horizon {
        cfg.horizon = h;
    }
    cfg.validate()?;
    let hash = config_hash(
        "figures",
        &serde_json::json!({ "preset": preset, "panels": n_panels, "config": cfg.to_file() }),
    )?;
    let data = figure_data(&cfg, n_panels)?;
    create_dir(dir)?;
    let mut w = create(&dir.join("inclinations.csv"))?;
    write_panels_csv(&mut w, &data.inclinations, Some(&hash))?;
    w.flush()?;
    let mut w = create(&dir.join("actions.csv"))?;
    write_panels_csv(&mut w, &data.actions, Some(&hash))?;
    w.flush()?;
    let mut man = RunManifest::new("figures", hash.clone(), seed, started);
    man.outputs = vec!["inclinations.csv".into(), "actions.csv".into()];
    man.write(dir)
}

// oracle

#[derive(Serialize)]
struct OracleLevel {
    n: usize,
    total_probability: f64,
    mean_z: Vec<f64>,
    mean_z_tilde: Option<f64>,
    second_moment_z_tilde: Option<f64>,
    martingale_error: Option<f64>,
    mean_scaled: Option<f64>,
    scaled_martingale_error: Option<f64>,
}

#[derive(Serialize)]
struct OracleReport {
    n: usize,
    horizon: usize,
    z0: Vec<f64>,
    path_probability_sum: f64,
    martingale_error: Option<f64>,
    scaled_martingale_error: Option<f64>,
    levels: Vec<OracleLevel>,
}

fn oracle(path: &Path, seed: Option<u64>, out: Option<&Path>, format: Format) -> Result<()> {
    let started = Utc::now();
    let cfg = load_config(path, seed)?;
    let hash = config_hash("oracle", &cfg.to_file())?;
    let z0 = cfg.z0.resolve(cfg.matrix.n(), 0)?;
    let law = brute_force_law(&cfg.matrix, &cfg.schedule, &z0, cfg.horizon)?;
    let first = &law.levels[0];
    let levels = law
        .levels
        .iter()
        .map(|l| OracleLevel {
            n: l.n,
            total_probability: l.total_probability,
            mean_z: l.mean_z.clone(),
            mean_z_tilde: l.mean_z_tilde,
            second_moment_z_tilde: l.second_moment_z_tilde,
            martingale_error: l.mean_z_tilde.zip(first.mean_z_tilde).map(|(a, b)| (a - b).abs()),
            mean_scaled: l.mean_scaled,
            scaled_martingale_error: l.mean_scaled.zip(first.mean_scaled).map(|(a, b)| (a - b).abs()),
        })
        .collect();
    let report = OracleReport {
        n: law.n,
        horizon: law.horizon,
        path_probability_sum: law.levels.last().map_or(1.0, |l| l.total_probability),
        martingale_error: law.martingale_error(),
        scaled_martingale_error: law.scaled_martingale_error(),
        z0,
        levels,
    };
    let write_csv = |mut w: Box<dyn Write + '_>| -> Result<()> {
        let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
        writeln!(w, "# manifest_hash={hash}")?;
        writeln!(w, "n,total_probability,mean_z_tilde,second_moment_z_tilde,martingale_error,mean_scaled,scaled_martingale_error")?;
        for l in &report.levels {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                l.n,
                fmt_f64(l.total_probability),
                opt(l.mean_z_tilde),
                opt(l.second_moment_z_tilde),
                opt(l.martingale_error),
                opt(l.mean_scaled),
                opt(l.scaled_martingale_error)
            )?;
        }
        w.flush()?;
        Ok(())
    };
    let stamped = Stamped { manifest_hash: &hash, body: &report };
    match out {
        Some(dir) => {
            create_dir(dir)?;
            write_json(&dir.join("oracle.json"), &stamped)?;
            let mut outputs = vec!["oracle.json".to_owned()];
            if format == Format::Csv {
                write_csv(Box::new(create(&dir.join("oracle.csv"))?))?;
                outputs.push("oracle.csv".into());
            }
            let mut man = RunManifest::new("oracle", hash.clone(), cfg.master_seed, started);
            man.outputs = outputs;
            man.write(dir)
        }
        None => match format {
            Format::Json => print_json(&stamped),
            Format::Csv => write_csv(Box::new(io::stdout().lock())),
        },
    }
}
