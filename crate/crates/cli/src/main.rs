//! `catsim`: build states, run sampled experiments, and emit analytics tables
//! for the cat-code tele-correction simulator.

mod statefile;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use catsim_core::experiment::{
    figure_config, optimize_displacement, run_experiment_streaming, DisplacementObjective,
    ExperimentConfig, Figure, FigureRun, SearchConfig, StateSpec,
};
use catsim_core::measure::tvd_cat;
use catsim_core::{Error, FockVector, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64 as C64;
use rand::Rng;
use serde::Serialize;

const OUT_DIR_ENV: &str = "CATSIM_OUT_DIR";

#[derive(Parser)]
#[command(name = "catsim", version, about = "Cat-code tele-correction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a single state and write it as an `n re im` table.
    State(StateCmd),
    /// Run a sampled experiment from a config file or a figure preset.
    Experiment(ExperimentCmd),
    /// Emit the closed-form TVD / single-trial-error table.
    Analytics(AnalyticsCmd),
}

#[derive(Args)]
struct StateCmd {
    #[command(subcommand)]
    kind: StateKind,
}

#[derive(Subcommand)]
enum StateKind {
    /// Coherent state |alpha> (real amplitude).
    Coherent {
        #[arg(long)]
        alpha: f64,
        #[command(flatten)]
        common: StateCommon,
    },
    /// Cat codeword with 2*distance components.
    Cat {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        distance: usize,
        #[arg(long)]
        mu: usize,
        #[command(flatten)]
        common: StateCommon,
    },
    /// Logical superposition c0|0>_K + c1|1>_K.
    Logical {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        components: usize,
        #[arg(long, default_value_t = 1.0)]
        c0_re: f64,
        #[arg(long, default_value_t = 0.0)]
        c0_im: f64,
        #[arg(long, default_value_t = 0.0)]
        c1_re: f64,
        #[arg(long, default_value_t = 0.0)]
        c1_im: f64,
        #[command(flatten)]
        common: StateCommon,
    },
    /// Yurke-Stoler state with N components.
    Ys {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        components: usize,
        #[command(flatten)]
        common: StateCommon,
    },
    /// Displaced Yurke-Stoler state.
    DisplacedYs {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        components: usize,
        #[arg(long, default_value_t = 0.0)]
        sigma_re: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma_im: f64,
        #[command(flatten)]
        common: StateCommon,
    },
}

#[derive(Args)]
struct StateCommon {
    /// Photon-number cutoff; defaults to the standard policy.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Output file; defaults to `<out-dir>/state-<kind>.txt`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentCmd {
    /// TOML experiment configuration.
    #[arg(long, conflicts_with = "figure")]
    config: Option<PathBuf>,
    /// Paper preset: fig3-left, fig3-right, fig5-left, fig5-right, fig4-inset.
    #[arg(long)]
    figure: Option<String>,
    /// Number of shots (overrides the config value).
    #[arg(long)]
    samples: Option<usize>,
    /// RNG seed; omitted = a random seed is drawn and recorded.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for chunked sampling (default: machine parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyticsCmd {
    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = 6.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 25)]
    alpha_steps: usize,
    #[arg(long, default_value_t = 1)]
    distance_min: usize,
    #[arg(long, default_value_t = 4)]
    distance_max: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Manifest {
    tool: String,
    version: String,
    seed: u64,
    started_at: String,
    finished_at: String,
    config: Option<ExperimentConfig>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    config: &'a ExperimentConfig,
    seed: u64,
    summary: &'a catsim_core::experiment::HistogramSummary,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 = configuration error, 3 = numerical (coverage/cutoff), 4 = degenerate
/// parameters, 1 = anything else.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::InvalidParameter(_) | Error::DimensionMismatch(_, _) | Error::RailOutOfRange { .. } => 2,
        Error::GridCoverage { .. } | Error::CutoffTooSmall { .. } => 3,
        Error::DegenerateState(_) | Error::ImpossibleOutcome { .. } | Error::UndefinedPhase => 4,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::State(cmd) => run_state(cmd),
        Command::Experiment(cmd) => run_experiment_cmd(cmd),
        Command::Analytics(cmd) => run_analytics(cmd),
    }
}

fn out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn io_err(e: std::io::Error) -> Error {
    Error::InvalidParameter(format!("io error: {e}"))
}

fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn run_state(cmd: StateCmd) -> Result<()> {
    let (spec, name) = match cmd.kind {
        StateKind::Coherent { alpha, ref common } => {
            (StateSpec::Coherent { alpha }, ("coherent", common))
        }
        StateKind::Cat { alpha, distance, mu, ref common } => {
            (StateSpec::Cat { alpha, distance, mu }, ("cat", common))
        }
        StateKind::Logical { alpha, components, c0_re, c0_im, c1_re, c1_im, ref common } => (
            StateSpec::Logical { alpha, components, c0_re, c0_im, c1_re, c1_im },
            ("logical", common),
        ),
        StateKind::Ys { alpha, components, ref common } => {
            (StateSpec::Ys { alpha, components }, ("ys", common))
        }
        StateKind::DisplacedYs { alpha, components, sigma_re, sigma_im, ref common } => (
            StateSpec::DisplacedYs { alpha, components, sigma_re, sigma_im },
            ("displaced-ys", common),
        ),
    };
    let (kind, common) = name;
    let cutoff = common.cutoff.unwrap_or_else(|| spec.policy_cutoff());
    let state = spec.build(cutoff)?;
    let path = common
        .out
        .clone()
        .unwrap_or_else(|| out_dir(None).join(format!("state-{kind}.txt")));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let file = fs::File::create(&path).map_err(io_err)?;
    let params =
        serde_json::to_string(&spec).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    statefile::write_state(
        BufWriter::new(file),
        &[("kind", kind.to_string()), ("params", params)],
        &state,
    )
    .map_err(io_err)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn configure_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        // ignore failure: the global pool may already exist (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

fn run_experiment_cmd(cmd: ExperimentCmd) -> Result<()> {
    configure_threads(cmd.threads);
    let seed = cmd.seed.unwrap_or_else(|| rand::thread_rng().gen());
    let dir = out_dir(cmd.out.as_deref());
    fs::create_dir_all(&dir).map_err(io_err)?;
    let started_at = now_rfc3339();

    if let Some(figure) = cmd.figure.as_deref() {
        let figure: Figure = figure.parse()?;
        let samples = cmd.samples.unwrap_or(10_000);
        match figure_config(figure, samples, seed)? {
            FigureRun::Sampled(config) => run_and_write(&config, seed, &dir, started_at),
            FigureRun::Fig4Table { alpha, component_counts } => {
                run_fig4_table(alpha, &component_counts, seed, &dir, started_at)
            }
        }
    } else if let Some(path) = cmd.config.as_deref() {
        let text = fs::read_to_string(path).map_err(io_err)?;
        let mut config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidParameter(format!("config parse: {e}")))?;
        if let Some(samples) = cmd.samples {
            config.samples = samples;
        }
        if cmd.seed.is_some() {
            config.seed = seed;
        }
        run_and_write(&config, config.seed, &dir, started_at)
    } else {
        Err(Error::InvalidParameter(
            "experiment needs --config or --figure".into(),
        ))
    }
}

fn run_and_write(config: &ExperimentConfig, seed: u64, dir: &Path, started_at: String) -> Result<()> {
    let mut config = config.clone().validated()?;
    config.seed = seed;
    let records_path = dir.join("records.jsonl");
    let summary_path = dir.join("summary.json");
    let manifest_path = dir.join("manifest.json");

    let file = fs::File::create(&records_path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let mut write_err: Option<std::io::Error> = None;
    let summary = run_experiment_streaming(&config, |record| {
        if write_err.is_none() {
            if let Err(e) = serde_json::to_writer(&mut w, record).map_err(std::io::Error::from)
                .and_then(|()| writeln!(w))
            {
                write_err = Some(e);
            }
        }
    })?;
    if let Some(e) = write_err {
        return Err(io_err(e));
    }
    w.flush().map_err(io_err)?;

    let doc = SummaryDocument { config: &config, seed, summary: &summary };
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidParameter(e.to_string()))?,
    )
    .map_err(io_err)?;

    let manifest = Manifest {
        tool: "catsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        started_at,
        finished_at: now_rfc3339(),
        config: Some(config.clone()),
        outputs: vec![
            records_path.display().to_string(),
            summary_path.display().to_string(),
        ],
    };
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?,
    )
    .map_err(io_err)?;

    for stat in &summary.thresholds {
        println!(
            "P(F > {:.2}) = {:.4}  [{:.4}, {:.4}]",
            stat.threshold, stat.probability, stat.wilson_low, stat.wilson_high
        );
    }
    println!("mean fidelity {:.6} over {} shots", summary.mean_fidelity, summary.samples);
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn run_fig4_table(
    alpha: f64,
    component_counts: &[usize],
    seed: u64,
    dir: &Path,
    started_at: String,
) -> Result<()> {
    let table_path = dir.join("fig4_inset.tsv");
    let mut outputs = vec![table_path.display().to_string()];
    let mut table = String::from("components\tp_target\tsigma_re\tsigma_im\tsigma_abs\n");
    for &n in component_counts {
        let opt = optimize_displacement(
            alpha,
            n,
            DisplacementObjective::ModularMass,
            &SearchConfig::default(),
        )?;
        table.push_str(&format!(
            "{n}\t{:.10}\t{:.10}\t{:.10}\t{:.10}\n",
            opt.value,
            opt.sigma.re,
            opt.sigma.im,
            opt.sigma.norm()
        ));
        // photon-number distribution of the optimally displaced state
        let cutoff = catsim_core::default_cutoff(alpha + opt.sigma.norm());
        let state = catsim_core::displaced_ys(alpha, n, opt.sigma, cutoff)?;
        let dist_path = dir.join(format!("fig4_distribution_n{n}.tsv"));
        let mut dist = String::from("n\tprobability\n");
        for (i, p) in state.photon_distribution().iter().enumerate() {
            dist.push_str(&format!("{i}\t{p:.12e}\n"));
        }
        fs::write(&dist_path, dist).map_err(io_err)?;
        outputs.push(dist_path.display().to_string());
        println!("N={n}: P_target = {:.6}, |sigma*| = {:.6}", opt.value, opt.sigma.norm());
    }
    fs::write(&table_path, table).map_err(io_err)?;

    let manifest = Manifest {
        tool: "catsim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        started_at,
        finished_at: now_rfc3339(),
        config: None,
        outputs,
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?,
    )
    .map_err(io_err)?;
    Ok(())
}

fn run_analytics(cmd: AnalyticsCmd) -> Result<()> {
    if cmd.alpha_steps == 0 || cmd.distance_max < cmd.distance_min {
        return Err(Error::InvalidParameter("empty analytics range".into()));
    }
    let mut out = String::from("alpha\tdistance\ttvd_exact\ttvd_burmann\tp_err\n");
    for i in 0..cmd.alpha_steps {
        let alpha = if cmd.alpha_steps == 1 {
            cmd.alpha_min
        } else {
            cmd.alpha_min
                + (cmd.alpha_max - cmd.alpha_min) * i as f64 / (cmd.alpha_steps - 1) as f64
        };
        for d in cmd.distance_min..=cmd.distance_max {
            let (exact, approx) = tvd_cat(alpha, d)?;
            let p_err = (1.0 - exact) / 2.0;
            out.push_str(&format!(
                "{alpha:.6}\t{d}\t{exact:.12}\t{approx:.12}\t{p_err:.12}\n"
            ));
        }
    }
    match cmd.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent).map_err(io_err)?;
                }
            }
            fs::write(&path, out).map_err(io_err)?;
            println!("wrote {}", path.display());
        }
        None => print!("{out}"),
    }
    Ok(())
}

// Used by integration tests.
#[allow(dead_code)]
fn reload_state(path: &Path) -> Result<FockVector> {
    let file = fs::File::open(path).map_err(io_err)?;
    Ok(statefile::read_state(std::io::BufReader::new(file))?.state)
}

#[allow(dead_code)]
fn complex(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
