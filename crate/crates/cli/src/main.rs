use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use doa_core::experiment::{time_spectra, write_timing_csv};
use doa_core::{
    generate_snapshots, run_experiment, sample_covariance, spectrum, write_csv, AngleGrid,
    EstimatorKind, ExperimentPlan, ScenarioConfig, SpectrumOptions, SpectrumPath, SteeringGrid,
};

/// Monte-Carlo DOA benchmark for the partial-relaxation estimators
#[derive(Parser, Debug)]
#[command(name = "doa-bench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep a plan and write one RMSE row per estimator and axis value
    Run {
        plan: PathBuf,
        /// Output CSV; overrides the plan's `output`, stdout if neither is set
        #[arg(long)]
        out: Option<PathBuf>,
        /// Monte-Carlo runs per axis value
        #[arg(long)]
        runs: Option<usize>,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
        /// Base seed; run r uses seed + r
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate one null-spectrum on a single realization of a scenario
    Spectrum {
        scenario: PathBuf,
        #[arg(long)]
        estimator: EstimatorKind,
        /// Angle grid as lo:hi:n in degrees
        #[arg(long, default_value_t = AngleGrid::default())]
        grid: AngleGrid,
        #[arg(long, value_enum, default_value_t = PathArg::Fast)]
        path: PathArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Median wall time of full-grid spectra, fast and naive paths
    Time {
        plan: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PathArg {
    Fast,
    Naive,
}

impl From<PathArg> for SpectrumPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Fast => SpectrumPath::Fast,
            PathArg::Naive => SpectrumPath::Naive,
        }
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_plan(path: &Path) -> Result<ExperimentPlan> {
    ExperimentPlan::from_path(path).with_context(|| format!("reading plan {}", path.display()))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => bail!("--threads must be at least 1"),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build()?;
            Ok(pool.install(f))
        }
    }
}

fn run(
    plan_path: &Path,
    out: Option<PathBuf>,
    runs: Option<usize>,
    threads: Option<usize>,
    seed: Option<u64>,
) -> Result<()> {
    let mut plan = load_plan(plan_path)?;
    if let Some(r) = runs {
        plan.runs = r;
    }
    if let Some(s) = seed {
        plan.scenario.seed = s;
    }
    plan.validate()?;
    let rows = with_threads(threads, || run_experiment(&plan))??;
    let out = out.or_else(|| plan.output.clone());
    let mut w = sink(out.as_deref())?;
    write_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn spectrum_cmd(
    scenario_path: &Path,
    kind: EstimatorKind,
    grid: AngleGrid,
    path: PathArg,
    out: Option<PathBuf>,
) -> Result<()> {
    let config = ScenarioConfig::from_path(scenario_path)
        .with_context(|| format!("reading scenario {}", scenario_path.display()))?;
    let (geometry, scenario) = config.build()?;
    let x = generate_snapshots(&geometry, &scenario)?;
    let cov = sample_covariance(&x, scenario.sources())?;
    let steering = SteeringGrid::from_grid(&geometry, &grid)?;
    let opts = SpectrumOptions {
        path: path.into(),
        ..SpectrumOptions::default()
    };
    let result = spectrum(kind, &cov, &steering, &opts)?;

    let mut csv = csv::Writer::from_writer(sink(out.as_deref())?);
    csv.write_record(["angle_deg", "value"])?;
    for (angle, value) in result.angles.iter().zip(&result.values) {
        csv.write_record([angle.to_string(), value.to_string()])?;
    }
    csv.flush()?;
    Ok(())
}

fn time_cmd(plan_path: &Path, out: Option<PathBuf>, threads: Option<usize>) -> Result<()> {
    let plan = load_plan(plan_path)?;
    plan.validate()?;
    let rows = with_threads(threads, || time_spectra(&plan))??;
    let mut w = sink(out.as_deref())?;
    write_timing_csv(&rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let outcome = match Cli::parse().command {
        Command::Run {
            plan,
            out,
            runs,
            threads,
            seed,
        } => run(&plan, out, runs, threads, seed),
        Command::Spectrum {
            scenario,
            estimator,
            grid,
            path,
            out,
        } => spectrum_cmd(&scenario, estimator, grid, path, out),
        Command::Time { plan, out, threads } => time_cmd(&plan, out, threads),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
