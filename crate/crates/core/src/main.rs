use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use polymot::config::TrackerConfig;
use polymot::io::{load_detections, load_results, write_detections, write_results};
use polymot::lifecycle::track_scenes;
use polymot::sim::{evaluate_clear, generate_scene, mixed_scene_spec, NoiseSpec};
use polymot::{bench, Result};

#[derive(Parser)]
#[command(name = "polymot", version, about = "Category-aware 3D multi-object tracker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track a detection file and write per-frame results.
    Track(TrackArgs),
    /// Generate synthetic scenes: detections plus ground truth.
    Simulate(SimulateArgs),
    /// CLEAR metrics of a result file against ground truth.
    Eval(EvalArgs),
    /// Time the geometry, association and filter kernels.
    Bench(BenchArgs),
}

#[derive(Args)]
struct TrackArgs {
    /// TOML config; omitted keys take defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Track scenes concurrently. Output order is unchanged.
    #[arg(long)]
    parallel_scenes: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Detection file to write.
    #[arg(long)]
    output: PathBuf,
    /// Ground-truth file to write, in the result schema.
    #[arg(long)]
    ground_truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    scenes: usize,
    #[arg(long, default_value_t = 10)]
    tracks: usize,
    #[arg(long, default_value_t = 40)]
    frames: usize,
    /// Seconds between frames.
    #[arg(long, default_value_t = 0.5)]
    dt: f64,
    /// Minimum clearance between objects in meters.
    #[arg(long, default_value_t = 2.0)]
    min_gap: f64,
    #[arg(long, default_value_t = 0.0)]
    position_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    yaw_noise: f64,
    #[arg(long, default_value_t = 0.0)]
    drop_probability: f64,
    /// Mean clutter boxes per frame.
    #[arg(long, default_value_t = 0.0)]
    clutter_rate: f64,
}

#[derive(Args)]
struct EvalArgs {
    /// Result file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    ground_truth: PathBuf,
    /// Center distance in meters for a match.
    #[arg(long, default_value_t = 2.0)]
    match_threshold: f64,
    /// Also write the report here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time budget per kernel in milliseconds.
    #[arg(long, default_value_t = 200)]
    budget_ms: u64,
    /// Also write the table here.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<TrackerConfig> {
    match path {
        Some(p) => TrackerConfig::load(p),
        None => Ok(TrackerConfig::default()),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| polymot::Error::io(path, e))
}

fn track(a: &TrackArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let start = Instant::now();
    let scenes = load_detections(&a.input)?;
    let frames: usize = scenes.iter().map(|s| s.frames.len()).sum();
    log::info!("loaded {} scenes, {} frames from {}", scenes.len(), frames, a.input.display());
    let results = track_scenes(&scenes, &cfg, a.parallel_scenes)?;
    let n = write_results(results.iter().flatten(), &a.output)?;
    let secs = start.elapsed().as_secs_f64();
    eprintln!(
        "tracked {} scenes, {} frames, {} records in {:.3} s ({:.1} frames/s)",
        scenes.len(),
        frames,
        n,
        secs,
        frames as f64 / secs.max(1e-9)
    );
    Ok(())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let noise = NoiseSpec {
        position_std: a.position_noise,
        yaw_std: a.yaw_noise,
        drop_probability: a.drop_probability,
        clutter_rate: a.clutter_rate,
        ..NoiseSpec::none()
    };
    if !(0.0..=1.0).contains(&a.drop_probability) || a.position_noise < 0.0 || a.yaw_noise < 0.0 || a.clutter_rate < 0.0 {
        return Err(polymot::Error::Config("noise parameters must be non-negative, drop probability in [0, 1]".into()));
    }
    if !(a.dt > 0.0) {
        return Err(polymot::Error::Config("dt must be positive".into()));
    }
    let mut scenes = Vec::with_capacity(a.scenes);
    let mut truth = Vec::new();
    for i in 0..a.scenes {
        let seed = a.seed.wrapping_add(i as u64);
        let mut spec = mixed_scene_spec(format!("scene-{i:03}"), a.tracks, a.frames, a.dt, a.min_gap, seed);
        spec.noise = noise;
        let s = generate_scene(&spec, seed);
        truth.extend(s.ground_truth_records());
        scenes.push(s.detections);
    }
    write_detections(&scenes, &a.output)?;
    let n = write_results(&truth, &a.ground_truth)?;
    eprintln!("simulated {} scenes, {} ground-truth records", scenes.len(), n);
    Ok(())
}

fn eval(a: &EvalArgs) -> Result<()> {
    let results = load_results(&a.input)?;
    let gt = load_results(&a.ground_truth)?;
    let report = evaluate_clear(&results, &gt, a.match_threshold)?;
    let text = report.to_string();
    print!("{text}");
    if let Some(p) = &a.output {
        write_text(p, &text)?;
    }
    Ok(())
}

fn run_bench(a: &BenchArgs) -> Result<()> {
    let start = Instant::now();
    let rows = bench::run(Duration::from_millis(a.budget_ms), a.seed);
    let text = bench::format_table(&rows);
    print!("{text}");
    if let Some(p) = &a.output {
        write_text(p, &text)?;
    }
    eprintln!("bench finished in {:.2} s", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("POLYMOT_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Track(a) => track(a),
        Command::Simulate(a) => simulate(a),
        Command::Eval(a) => eval(a),
        Command::Bench(a) => run_bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
