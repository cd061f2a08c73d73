//! Command-line front end: simulate scenes, run the mapping pipeline,
//! benchmark the suppression step and evaluate maps.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use poleline::event::{encode_events_binary, events_to_csv, load_events, EventFormat};
use poleline::hough::detections_to_csv;
use poleline::plot::{map_svg, xt_svg};
use poleline::track::tracks_to_csv;
use poleline::triangulate::{ground_truth_to_csv, load_ground_truth, match_and_rmse};
use poleline::{bench, run_pipeline, simulate, CameraIntrinsics, LandmarkMap, PipelineConfig, PoseLog, SceneFile};

#[derive(Parser)]
#[command(
    name = "poleline",
    version,
    about = "Pole landmark mapping from event camera streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect, track and triangulate poles into a map.
    Run(RunArgs),
    /// Render a synthetic scene into events, poses and ground truth.
    Simulate(SimulateArgs),
    /// Time iterative against full suppression and check they agree.
    Bench(BenchArgs),
    /// Compare a map with ground truth.
    Eval(EvalArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    poses: PathBuf,
    #[arg(long)]
    calib: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground-truth map; when given an evaluation report is written too.
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Also write SVG figures.
    #[arg(long)]
    plot: bool,
    /// Probability of dropping each event.
    #[arg(long)]
    subsample: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "csv")]
    format: EventFormat,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scene: PathBuf,
    /// Camera intrinsics; a 240x180 sensor without distortion by default.
    #[arg(long)]
    calib: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "csv")]
    format: EventFormat,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: EventFormat,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Pose log used to split errors along the direction of travel.
    #[arg(long)]
    poses: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Files are fully rendered before any is written; if a write fails the
/// files already written are removed again.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    fn new(dir: &Path) -> Outputs {
        Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    fn commit(self) -> Result<()> {
        let created = !self.dir.exists();
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let mut written: Vec<PathBuf> = Vec::new();
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            if let Err(e) = fs::write(&path, bytes) {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                if created {
                    let _ = fs::remove_dir(&self.dir);
                }
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            written.push(path);
        }
        Ok(())
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("config {}", p.display())),
        None => Ok(PipelineConfig::default()),
    }
}

fn events_name(format: EventFormat) -> &'static str {
    match format {
        EventFormat::Csv => "events.csv",
        EventFormat::Binary => "events.bin",
    }
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let mut cfg = load_config(a.config.as_deref())?;
    if let Some(p) = a.subsample {
        cfg.subsample = p;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let intr = CameraIntrinsics::<f64>::load(&a.calib).with_context(|| format!("calibration {}", a.calib.display()))?;
    let poses = PoseLog::<f64>::load(&a.poses).with_context(|| format!("poses {}", a.poses.display()))?;
    let events = load_events(&a.events, a.format, Some(intr.sensor()))
        .with_context(|| format!("events {}", a.events.display()))?;
    let gt = match &a.gt {
        Some(p) => Some(load_ground_truth::<f64>(p).with_context(|| format!("ground truth {}", p.display()))?),
        None => None,
    };

    let out = run_pipeline(&events, &poses, &intr, &cfg)?;
    let s = &out.stats;
    eprintln!(
        "{} events, {} detections, {} tracks, {} landmarks ({} degenerate, {} behind camera, {} outside poses)",
        s.events, s.detections, s.tracks, s.landmarks, s.degenerate, s.behind_camera, s.outside_poses
    );

    let mut files = Outputs::new(&a.out);
    files.add("detections.csv", detections_to_csv(&out.detections));
    files.add("tracks.csv", tracks_to_csv(&out.tracks));
    files.add("map.csv", out.map.to_csv());
    if let Some(gt) = &gt {
        let report = match_and_rmse(&out.map, gt, cfg.reject_radius, Some(&poses))?;
        print!("{}", report.to_table());
        files.add("eval.txt", report.to_kv());
    }
    if a.plot {
        files.add("xt.svg", xt_svg(&out.detections, &out.tracks));
        files.add("map.svg", map_svg(&out.map, gt.as_deref().unwrap_or(&[]), Some(&poses)));
    }
    files.commit()
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut scene = SceneFile::load(&a.scene).with_context(|| format!("scene {}", a.scene.display()))?;
    if let Some(s) = a.seed {
        scene.seed = s;
    }
    let intr = match &a.calib {
        Some(p) => CameraIntrinsics::<f64>::load(p).with_context(|| format!("calibration {}", p.display()))?,
        None => CameraIntrinsics::davis240(),
    };
    let sim = simulate(&scene.scene, &scene.profile, &scene.sensor(intr))?;
    eprintln!(
        "{} events ({} from poles), {} poses",
        sim.events.len(),
        sim.signal_events,
        sim.poses.poses().len()
    );
    let mut files = Outputs::new(&a.out);
    match a.format {
        EventFormat::Csv => files.add(events_name(a.format), events_to_csv(&sim.events)),
        EventFormat::Binary => files.add(events_name(a.format), encode_events_binary(&sim.events)),
    }
    files.add("poses.csv", sim.poses.to_csv());
    files.add("gt.csv", ground_truth_to_csv(&sim.ground_truth));
    files.add("calib.txt", intr.to_text());
    files.commit()
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let events = load_events(&a.events, a.format, None).with_context(|| format!("events {}", a.events.display()))?;
    let report = bench(&events, &cfg.hough)?;
    print!("{}", report.to_text());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let cfg = load_config(a.config.as_deref())?;
    let map = LandmarkMap::<f64>::load(&a.map, cfg.merge_radius).with_context(|| format!("map {}", a.map.display()))?;
    let gt = load_ground_truth::<f64>(&a.gt).with_context(|| format!("ground truth {}", a.gt.display()))?;
    let poses = match &a.poses {
        Some(p) => Some(PoseLog::<f64>::load(p).with_context(|| format!("poses {}", p.display()))?),
        None => None,
    };
    if map.is_empty() {
        bail!("map {} has no landmarks", a.map.display());
    }
    let report = match_and_rmse(&map, &gt, cfg.reject_radius, poses.as_ref())?;
    print!("{}", report.to_table());
    print!("{}", report.to_kv());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Eval(a) => cmd_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
