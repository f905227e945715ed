use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use traverse_cli::{run, Analysis, NormModel, RunConfig};

/// Tangency strata, trajectory censuses, chain averaging, norm bounds and
/// ε-partitions on bundled or user-supplied inputs.
#[derive(Debug, Parser)]
#[command(name = "traverse", version)]
struct Args {
    #[arg(long, value_enum)]
    analysis: Analysis,
    /// Scene JSON (strata, census, graph).
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Labelled chain JSON (chains).
    #[arg(long)]
    chain: Option<PathBuf>,
    /// Partial coloring JSON (chains).
    #[arg(long)]
    coloring: Option<PathBuf>,
    /// OFF surface (norm).
    #[arg(long)]
    complex: Option<PathBuf>,
    /// Stratum labels of a singular cycle (norm).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Stratified space JSON (partition); the three-ray plane when absent.
    #[arg(long)]
    space: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "combinatorial")]
    model: NormModel,
    /// Barycentric subdivisions applied before the norm LP.
    #[arg(long, default_value_t = 0)]
    subdivide: usize,
    /// Double a surface with boundary before the norm LP.
    #[arg(long)]
    double: bool,
    /// ε for chains (rational, e.g. 1/10) or partition (decimal).
    #[arg(long)]
    epsilon: Option<String>,
    /// Grid side of the built-in three-ray plane.
    #[arg(long, default_value_t = 200)]
    grid: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory for report files; only the summary is printed without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    allow_nongeneric: bool,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Ok(v) = std::env::var("TRAVERSE_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: TRAVERSE_THREADS must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    let cfg = RunConfig {
        analysis: args.analysis,
        scene: args.scene,
        chain: args.chain,
        coloring: args.coloring,
        complex: args.complex,
        labels: args.labels,
        space: args.space,
        model: args.model,
        subdivide: args.subdivide,
        double: args.double,
        epsilon: args.epsilon,
        grid: args.grid,
        tol: args.tol,
        seeds: args.seeds,
        seed: args.seed,
        allow_nongeneric: args.allow_nongeneric,
    };
    let output = match run(&cfg) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("error: {f}");
            return ExitCode::from(f.code as u8);
        }
    };
    if let Some(dir) = &args.out {
        if let Err(e) = std::fs::create_dir_all(dir) {
            eprintln!("error: {}: {e}", dir.display());
            return ExitCode::from(1);
        }
        for (name, body) in output.files.iter().chain([("summary.txt".to_string(), output.summary.clone())].iter()) {
            let path = dir.join(name);
            if let Err(e) = std::fs::write(&path, body) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(1);
            }
        }
    }
    print!("{}", output.summary);
    ExitCode::SUCCESS
}
