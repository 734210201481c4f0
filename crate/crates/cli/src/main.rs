use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use lumped_core::config::{load_experiment, LoadedExperiment};
use lumped_core::control::{servo_loop, warm_up, ControllerConfig, Goal, LumpSource};
use lumped_core::harness::{
    lump_check, run_experiment, summarize, trial_seeds, write_rows, write_servo_log,
    ExperimentSpec, DEFAULT_BURN_IN,
};
use lumped_core::presets::Preset;
use lumped_core::replay::{
    read_stream, track_frames, write_line, FrameRecord, StreamHeader, STREAM_FORMAT,
};
use lumped_core::se3::rotation_from_axis_angle;
use lumped_core::simulator::{tracking_model, CameraMode, Scene};
use lumped_core::tracker::{ParticleFilter, TrackingMode};

#[derive(Parser)]
#[command(name = "lumped", version, about = "Lumped error tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one trial and write its feature stream (JSON lines).
    Simulate {
        #[command(flatten)]
        setup: Setup,
        /// Trial index whose seed is used.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Replay a feature stream through the filter and write estimates.
    Track {
        #[command(flatten)]
        setup: Setup,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run a full experiment and write per-step metrics as CSV.
    Run {
        #[command(flatten)]
        setup: Setup,
    },
    /// Drive the end effector to a camera-frame goal.
    Servo {
        #[command(flatten)]
        setup: Setup,
        /// Absolute goal position in the camera frame (mm), `x,y,z`.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        goal: Option<Vector3<f64>>,
        /// Goal relative to the end effector after warm-up (mm), `x,y,z`.
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "5,-5,3")]
        offset: Vector3<f64>,
        /// Goal orientation in the camera frame as an axis-angle vector (rad).
        #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
        rotation: Option<Vector3<f64>>,
        #[arg(long, value_enum, default_value = "tracker")]
        lump: LumpArg,
        /// Tracker steps along the planned path before servoing.
        #[arg(long, default_value_t = 50)]
        warmup: usize,
        #[arg(long)]
        step_max: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Check the lumped-error identity on random chains.
    LumpCheck {
        /// Number of random chains.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum LumpArg {
    Tracker,
    Oracle,
    Identity,
}

/// Experiment selection shared by the subcommands. Flags override values
/// from `--config`.
#[derive(Args)]
struct Setup {
    /// Experiment file (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in setup used when no config is given: da-vinci or baxter.
    #[arg(long, default_value = "da-vinci")]
    preset: String,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// all-unknowns, lumped or lumped-plus-joints.
    #[arg(long)]
    mode: Option<TrackingMode>,
    /// stationary or eye-in-hand.
    #[arg(long)]
    camera: Option<CameraMode>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Setup {
    fn resolve(&self) -> Result<LoadedExperiment> {
        let mut loaded = match &self.config {
            Some(path) => load_experiment(path)?,
            None => {
                let preset: Preset = self.preset.parse()?;
                let camera = self.camera.unwrap_or(CameraMode::Stationary);
                LoadedExperiment {
                    spec: ExperimentSpec {
                        scenario: preset.scenario(),
                        filter: preset.filter(camera),
                        mode: preset.filter(camera).mode,
                        camera,
                        trials: 50,
                        seed: 1,
                        burn_in: DEFAULT_BURN_IN,
                    },
                    controller: ControllerConfig::default(),
                }
            }
        };
        let spec = &mut loaded.spec;
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.mode {
            spec.mode = v;
        }
        if let Some(v) = self.camera {
            spec.camera = v;
        }
        if let Some(v) = self.burn_in {
            spec.burn_in = v;
        }
        spec.validate()?;
        Ok(loaded)
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        open_output(self.out.as_deref())
    }
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_vec3(s: &str) -> std::result::Result<Vector3<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v.as_slice() {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(format!("expected three finite numbers `x,y,z`, got `{s}`")),
    }
}

fn simulate(setup: &Setup, trial: usize) -> Result<()> {
    let spec = setup.resolve()?.spec;
    let mut scene = Scene::new(&spec.scenario, spec.camera, trial_seeds(spec.seed, trial).0)?;
    let mut out = setup.output()?;
    let header = StreamHeader {
        format: STREAM_FORMAT.into(),
        scenario: spec.scenario.name.clone(),
        camera: spec.camera,
        calibration: scene.calibration().to_axis_angle(),
    };
    write_line(&mut out, &header)?;
    while let Some(row) = scene.step()? {
        write_line(&mut out, &FrameRecord::from_row(&row))?;
    }
    out.flush()?;
    Ok(())
}

fn track(setup: &Setup, input: &Path, trial: usize) -> Result<()> {
    let spec = setup.resolve()?.spec;
    let file = File::open(input).with_context(|| format!("opening {}", input.display()))?;
    let (header, frames) = read_stream(BufReader::new(file))?;
    if header.scenario != spec.scenario.name {
        bail!(
            "stream was simulated for scenario `{}`, configuration is `{}`",
            header.scenario,
            spec.scenario.name
        );
    }
    let model = tracking_model(
        &spec.scenario,
        header.camera,
        &header.calibration.to_transform(),
    )?;
    let mut filter =
        ParticleFilter::new(spec.filter_config(), model, trial_seeds(spec.seed, trial).1)?;
    let estimates = track_frames(&mut filter, &frames)?;
    let mut out = setup.output()?;
    for e in &estimates {
        write_line(&mut out, e)?;
    }
    out.flush()?;
    Ok(())
}

fn run(setup: &Setup) -> Result<()> {
    let spec = setup.resolve()?.spec;
    let rows = run_experiment(&spec)?;
    let first_joint = spec.scenario.chain.n_b() + 1;
    write_rows(setup.output()?, first_joint, &rows)?;
    let s = summarize(&rows, spec.burn_in)?;
    eprintln!(
        "{} {} {}: {} trials, {} rows after step {}",
        spec.scenario.name, spec.mode, spec.camera, spec.trials, s.rows, spec.burn_in
    );
    eprintln!(
        "  eps_b mean {:.3} mm, median {:.3}, IQR {:.3}",
        s.eps_b.mean, s.eps_b.median, s.eps_b.iqr
    );
    eprintln!(
        "  eps_w mean {:.4} rad, median {:.4}, IQR {:.4}",
        s.eps_w.mean, s.eps_w.median, s.eps_w.iqr
    );
    for (k, q) in s.eps_q.iter().enumerate() {
        eprintln!(
            "  eps_q{} mean {:.4}, IQR {:.4}",
            first_joint + k,
            q.mean,
            q.iqr
        );
    }
    eprintln!(
        "  lump error: {:.3} mm (IQR {:.3}), {:.4} rad; mean ESS fraction {:.3}; degenerate rows {}",
        s.eps_lump_b.mean, s.eps_lump_b.iqr, s.eps_lump_w.mean, s.ess_mean, s.degenerate_rows
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn servo(
    setup: &Setup,
    goal: Option<Vector3<f64>>,
    offset: Vector3<f64>,
    rotation: Option<Vector3<f64>>,
    lump: LumpArg,
    warmup: usize,
    overrides: (Option<f64>, Option<f64>, Option<usize>),
) -> Result<()> {
    let LoadedExperiment {
        spec,
        mut controller,
    } = setup.resolve()?;
    if let Some(v) = overrides.0 {
        controller.step_max = v;
    }
    if let Some(v) = overrides.1 {
        controller.tolerance = v;
    }
    if let Some(v) = overrides.2 {
        controller.max_iterations = v;
    }
    let (scene_seed, filter_seed) = trial_seeds(spec.seed, 0);
    let mut scene = Scene::new(&spec.scenario, spec.camera, scene_seed)?;
    let mut filter = match lump {
        LumpArg::Tracker => Some(ParticleFilter::new(
            spec.filter_config(),
            scene.tracking_model(),
            filter_seed,
        )?),
        _ => None,
    };
    let source = match lump {
        LumpArg::Tracker => LumpSource::Tracker,
        LumpArg::Oracle => LumpSource::Oracle,
        LumpArg::Identity => LumpSource::Identity,
    };
    let row = warm_up(&mut scene, filter.as_mut(), warmup)?;
    let goal = Goal {
        position: goal.unwrap_or(row.ee_in_camera.translation + offset),
        orientation: rotation.map(|w| rotation_from_axis_angle(&w)),
    };
    let outcome = servo_loop(
        &mut scene,
        filter.as_mut(),
        source,
        &controller,
        &goal,
        &row.q,
    )?;
    write_servo_log(setup.output()?, &outcome.log)?;
    eprintln!(
        "converged {} after {} steps; terminal camera-frame error {:.3} mm",
        outcome.converged, outcome.iterations, outcome.terminal_error
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { setup, trial } => simulate(setup, *trial),
        Command::Track {
            setup,
            input,
            trial,
        } => track(setup, input, *trial),
        Command::Run { setup } => run(setup),
        Command::Servo {
            setup,
            goal,
            offset,
            rotation,
            lump,
            warmup,
            step_max,
            tolerance,
            max_iterations,
        } => servo(
            setup,
            *goal,
            *offset,
            *rotation,
            *lump,
            *warmup,
            (*step_max, *tolerance, *max_iterations),
        ),
        Command::LumpCheck {
            trials,
            seed,
            tolerance,
        } => lump_check(*trials, *seed, *tolerance)
            .map_err(Into::into)
            .and_then(|r| {
                println!(
                    "{} chains, max elementwise difference {:.3e}, {} above {:.0e}",
                    r.cases, r.max_abs_diff, r.failures, tolerance
                );
                if r.failures > 0 {
                    bail!("lump identity violated on {} chains", r.failures);
                }
                Ok(())
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
