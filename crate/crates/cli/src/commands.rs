use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use diabolo::calibration::{fit, CalibrationProblem};
use diabolo::data::{
    error_evolution, load_trace, moving_average, replay_trace, summarize_classes, synthesize_from, trace_to_string,
    trace_from_states, write_class_report, write_error_curves, ErrorCurve, Trace, TraceMeta,
};
use diabolo::env::{goal_pattern, MotionTemplate, TemplateShape};
use diabolo::player::{optimize, rollout, GoalWaypoint, StickTrajectory};
use diabolo::{DiaboloState, Vec3};
use log::{info, warn};
use serde::Deserialize;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{ensure_dir, manifest_path_for, sibling, ManifestBuilder};

/// Shared inputs of every command.
pub struct Context {
    pub config: Config,
    pub config_path: Option<PathBuf>,
}

impl Context {
    fn manifest(&self, command: &str) -> ManifestBuilder {
        ManifestBuilder::new(command, self.config_path.as_deref(), &self.config)
    }
}

fn template(name: &str) -> Result<MotionTemplate, CliError> {
    name.parse().map_err(CliError::from)
}

fn positive(value: f64, what: &str) -> Result<f64, CliError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CliError::Config(format!("{what} must be positive, got {value}")))
    }
}

fn start_sticks(config: &Config) -> Result<diabolo::StickPair, CliError> {
    let sticks = config.simulation.sticks();
    if sticks.distance() > config.model.l_string {
        return Err(CliError::Config(format!(
            "start sticks are {} m apart, more than the {} m string",
            sticks.distance(),
            config.model.l_string
        )));
    }
    Ok(sticks)
}

pub fn simulate(
    ctx: &Context,
    out: &Path,
    template_name: Option<&str>,
    trace: Option<&Path>,
    duration: Option<f64>,
) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let mut manifest = ctx.manifest("simulate");
    let result = match trace {
        Some(path) => {
            let (recorded, _) = load_trace(path)?;
            manifest.input(path);
            replay_trace(&recorded, &cfg.model)?
        }
        None => {
            let t = template(template_name.unwrap_or(&cfg.simulation.template))?;
            let duration = positive(duration.unwrap_or(cfg.simulation.duration), "duration")?;
            let spacing = positive(cfg.simulation.knot_spacing, "simulation.knot_spacing")?;
            synthesize_from(t, &cfg.model, &start_sticks(cfg)?, duration, spacing, cfg.seed)?.trace
        }
    };
    manifest.write(out, trace_to_string(&result).as_bytes())?;
    if let Some(last) = result.samples.last() {
        info!(
            "simulated {} samples; final speed {:.3e} m/s",
            result.len(),
            last.velocity.map_or(0.0, |v| v.norm())
        );
    }
    manifest.finish(&manifest_path_for(out))
}

pub fn generate(
    ctx: &Context,
    out_dir: &Path,
    template_name: Option<&str>,
    duration: Option<f64>,
    count: usize,
) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let templates = match template_name {
        Some(name) => vec![template(name)?],
        None => MotionTemplate::ALL.to_vec(),
    };
    let duration = positive(duration.unwrap_or(cfg.simulation.duration), "duration")?;
    let spacing = positive(cfg.simulation.knot_spacing, "simulation.knot_spacing")?;
    let sticks = start_sticks(cfg)?;
    ensure_dir(out_dir)?;
    let mut manifest = ctx.manifest("generate");
    for t in templates {
        for k in 0..count {
            let seed = cfg.seed.wrapping_add(k as u64);
            let run = synthesize_from(t, &cfg.model, &sticks, duration, spacing, seed)?;
            let path = out_dir.join(format!("{}_{k}.csv", t.name()));
            manifest.write(&path, trace_to_string(&run.trace).as_bytes())?;
        }
    }
    manifest.finish(&out_dir.join("manifest.json"))
}

/// Goal file: a named pattern, explicit waypoints, or both (pattern first).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GoalsFile {
    pattern: Option<String>,
    /// Pattern center; the hanging position when absent.
    center: Option<Vec3>,
    #[serde(default = "default_scale")]
    scale: f64,
    #[serde(default)]
    waypoints: Vec<GoalWaypoint>,
}

fn default_scale() -> f64 {
    0.15
}

fn load_goals(path: &Path, hang: &Vec3) -> Result<Vec<GoalWaypoint>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read goals {}: {e}", path.display())))?;
    let file: GoalsFile = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut goals = match &file.pattern {
        Some(name) => goal_pattern(name, &file.center.unwrap_or(*hang), file.scale)?,
        None => Vec::new(),
    };
    goals.extend(file.waypoints);
    if goals.is_empty() {
        return Err(CliError::Config(format!("{} defines no goals", path.display())));
    }
    for g in &goals {
        g.validated()?;
    }
    Ok(goals)
}

pub fn trajectory_to_string(traj: &StickTrajectory) -> String {
    let v = traj.start_velocity();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# start_velocity={},{},{},{},{},{}",
        v.left.x, v.left.y, v.left.z, v.right.x, v.right.y, v.right.z
    );
    s.push_str("t,lx,ly,lz,rx,ry,rz\n");
    for p in traj.points() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.t, p.left.x, p.left.y, p.left.z, p.right.x, p.right.y, p.right.z
        );
    }
    s
}

pub fn optimize_cmd(
    ctx: &Context,
    out: &Path,
    goals: Option<&Path>,
    template_name: Option<&str>,
    duration: Option<f64>,
) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let opt = &cfg.optimizer;
    let t = template(template_name.unwrap_or(&opt.template))?;
    let duration = positive(duration.unwrap_or(opt.duration), "duration")?;
    let spacing = positive(opt.knot_spacing, "optimizer.knot_spacing")?;
    let sticks = start_sticks(cfg)?;
    let initial = DiaboloState::hanging(&sticks, &cfg.model)?;
    let mut manifest = ctx.manifest("optimize");
    let waypoints = match goals {
        Some(path) => {
            manifest.input(path);
            load_goals(path, &initial.position)?
        }
        None => t.default_goals(&initial.position),
    };
    let seed_traj = t.seed_trajectory(&sticks, &cfg.model, duration, spacing, &TemplateShape::default())?;
    let outcome = optimize(&initial, &seed_traj, &waypoints, &cfg.model, &opt.optimizer(cfg.seed))?;

    let mut history = String::from("iteration,residual\n");
    for (i, r) in outcome.history.iter().enumerate() {
        let _ = writeln!(history, "{i},{r}");
    }
    let states = rollout(&initial, &outcome.trajectory, &cfg.model)?;
    let sticks_played = outcome.trajectory.discretize(&cfg.model)?;
    let meta = TraceMeta {
        diabolo: "simulated".into(),
        string_length: Some(cfg.model.l_string),
        sample_rate: Some(1.0 / cfg.model.dt),
        motion_class: Some(t.motion_class().into()),
        ..TraceMeta::default()
    };
    let trace = trace_from_states(meta, &sticks_played, &states);

    manifest.write(out, trajectory_to_string(&outcome.trajectory).as_bytes())?;
    manifest.write(&sibling(out, "history.csv"), history.as_bytes())?;
    manifest.write(&sibling(out, "rollout.csv"), trace_to_string(&trace).as_bytes())?;
    println!(
        "residual {} -> {} ({} accepted of {} iterations); final omega {}",
        outcome.history[0],
        outcome.residual,
        outcome.accepted,
        outcome.history.len() - 1,
        states.last().map_or(0.0, |s| s.omega)
    );
    manifest.finish(&manifest_path_for(out))
}

/// All `*.csv` traces in a directory, sorted by file name.
fn load_dir(dir: &Path, smoothing: usize, manifest: &mut ManifestBuilder) -> Result<Vec<(String, Trace)>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!("no .csv traces in {}", dir.display())));
    }
    paths
        .into_iter()
        .map(|p| {
            let (trace, _) = load_trace(&p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            manifest.input(&p);
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let trace = if smoothing > 1 { moving_average(&trace, smoothing) } else { trace };
            Ok((name, trace))
        })
        .collect()
}

pub fn evaluate(
    ctx: &Context,
    traces: &Path,
    out_dir: &Path,
    horizon: Option<f64>,
    stride: Option<f64>,
) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let horizon = horizon.unwrap_or(cfg.evaluation.horizon);
    let stride = positive(stride.unwrap_or(cfg.evaluation.stride), "stride")?;
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(CliError::Config(format!("horizon must be non-negative, got {horizon}")));
    }
    let mut manifest = ctx.manifest("evaluate");
    let loaded = load_dir(traces, cfg.evaluation.smoothing_window, &mut manifest)?;
    let mut curves: Vec<(String, String, ErrorCurve)> = Vec::new();
    for (name, trace) in &loaded {
        if trace.duration() + 0.5 * cfg.model.dt < horizon {
            warn!("{name}: {:.3} s is shorter than the {horizon} s horizon; skipped", trace.duration());
            continue;
        }
        let curve = error_evolution(trace, &cfg.model, horizon, stride)
            .map_err(|e| CliError::Data(format!("{name}: {e}")))?;
        curves.push((name.clone(), trace.motion_class().to_string(), curve));
    }
    if curves.is_empty() {
        return Err(CliError::Data("no trace is long enough for the horizon".into()));
    }
    let report = summarize_classes(curves.iter().map(|(_, c, e)| (c.as_str(), e)));
    let long: Vec<(String, ErrorCurve)> = curves.into_iter().map(|(n, _, e)| (n, e)).collect();

    ensure_dir(out_dir)?;
    let mut buf = Vec::new();
    write_error_curves(&long, &mut buf)?;
    manifest.write(&out_dir.join("error_curves.csv"), &buf)?;
    let mut buf = Vec::new();
    write_class_report(&report, &mut buf)?;
    manifest.write(&out_dir.join("class_report.csv"), &buf)?;
    print!("{}", String::from_utf8_lossy(&buf));
    manifest.finish(&out_dir.join("manifest.json"))
}

pub fn calibrate(
    ctx: &Context,
    traces: &Path,
    out: &Path,
    horizon: Option<f64>,
    stride: Option<f64>,
) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let cal = &cfg.calibration;
    let mut manifest = ctx.manifest("calibrate");
    let loaded = load_dir(traces, cfg.evaluation.smoothing_window, &mut manifest)?;
    let problem = CalibrationProblem {
        horizon: horizon.unwrap_or(cfg.evaluation.horizon),
        stride: stride.unwrap_or(cfg.evaluation.stride),
        omega_weight: cal.omega_weight,
        ..CalibrationProblem::new(loaded.into_iter().map(|(_, t)| t).collect(), cfg.model, cal.bounds())
    };
    problem.validate()?;
    let search = diabolo::player::OptimizerConfig {
        iterations: cal.iterations,
        step_scale_pos: cal.step_scale,
        seed: cfg.seed,
        ..Default::default()
    };
    let outcome = fit(&problem, &search)?;
    let fitted = Config {
        model: outcome.params,
        ..cfg.clone()
    };
    let body = toml::to_string(&fitted).map_err(|e| CliError::Data(e.to_string()))?;
    let free: Vec<String> = cal.free.iter().map(ToString::to_string).collect();
    let text = format!("# objective={}\n# free={}\n{body}", outcome.objective, free.join(","));
    manifest.write(out, text.as_bytes())?;
    println!("objective {}", outcome.objective);
    manifest.finish(&manifest_path_for(out))
}
