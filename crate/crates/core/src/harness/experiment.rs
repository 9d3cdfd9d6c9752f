//! Batch experiments: run planners over seeded scenarios and aggregate the
//! success rate, path lengths and timing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{
    generate_crossing_scene, generate_random_box_scene, generate_window_scene, solve_ik, CrossingKind,
    GeneratorContext,
};
use super::histogram::{mean_rms, Histogram};
use super::scenario::{load_model, Scenario, ScenarioFile};
use crate::baselines::{self, rrt_connect_plan, CollisionChecker};
use crate::error::{Error, Result};
use crate::reachability::ReachOptions;
use crate::reflex_controller::{run_episode, target_errors, ControllerConfig, EpisodeLog};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Planner {
    #[serde(rename = "reflex")]
    Reflex,
    #[serde(rename = "rrt-connect")]
    RrtConnect,
}

impl Planner {
    pub fn name(self) -> &'static str {
        match self {
            Planner::Reflex => "reflex",
            Planner::RrtConnect => "rrt-connect",
        }
    }
}

impl std::str::FromStr for Planner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reflex" => Ok(Planner::Reflex),
            "rrt-connect" | "rrt" => Ok(Planner::RrtConnect),
            other => Err(Error::Scenario(format!("unknown planner `{other}`"))),
        }
    }
}

/// Where each trial's scenario comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioSource {
    /// A scenario file; the seed only drives the sampling planner.
    File { path: PathBuf },
    BoxField {
        robot: PathBuf,
        #[serde(default = "default_boxes")]
        n_boxes: usize,
        #[serde(default = "default_box_edge")]
        edge: f64,
    },
    Window {
        robot: PathBuf,
        #[serde(default = "default_window_edge")]
        edge: f64,
    },
    Crossing { robot: PathBuf, crossing: CrossingKind },
}

fn default_boxes() -> usize {
    8
}
fn default_box_edge() -> f64 {
    0.2
}
fn default_window_edge() -> f64 {
    0.4
}
fn default_planners() -> Vec<Planner> {
    vec![Planner::Reflex]
}
fn default_trials() -> usize {
    1
}
fn default_time_limit() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub scenario: ScenarioSource,
    #[serde(default = "default_planners")]
    pub planners: Vec<Planner>,
    /// Number of seeds used when `seeds` is empty (seeds 0..trials).
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Wall-clock limit for the sampling planner, seconds.
    #[serde(default = "default_time_limit")]
    pub time_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub reach: ReachOptions,
    /// Replaces the controller settings of every trial's scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub controller: Option<ControllerConfig>,
    /// Run episodes on the worker pool. Timing is cleaner sequentially.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
}

fn default_parallel() -> bool {
    true
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut spec: Self =
            serde_json::from_str(&text).map_err(|e| Error::Scenario(format!("experiment spec: {e}")))?;
        spec.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(spec)
    }

    /// Make relative paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.scenario {
            ScenarioSource::File { path } => fix(path),
            ScenarioSource::BoxField { robot, .. }
            | ScenarioSource::Window { robot, .. }
            | ScenarioSource::Crossing { robot, .. } => fix(robot),
        }
        if let Some(out) = &mut self.output {
            fix(out);
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        if self.seeds.is_empty() {
            (0..self.trials as u64).collect()
        } else {
            self.seeds.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 && self.seeds.is_empty() {
            return Err(Error::Scenario("experiment needs at least one trial".into()));
        }
        if self.planners.is_empty() {
            return Err(Error::Scenario("experiment needs at least one planner".into()));
        }
        if !(self.time_limit > 0.0) {
            return Err(Error::Scenario("time_limit must be > 0".into()));
        }
        Ok(())
    }
}

/// Deterministic per-episode outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub planner: Planner,
    pub seed: u64,
    pub success: bool,
    /// Termination reason or planner error.
    pub outcome: String,
    pub iterations: usize,
    pub final_err_pos: f64,
    pub final_err_rot: f64,
    pub joint_path_length: f64,
    pub ee_path_length: f64,
    pub min_clearance: f64,
    pub null_space_residual: f64,
    pub avoidance_steps: usize,
}

/// Wall-clock figures for one episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTiming {
    pub planner: Planner,
    pub seed: u64,
    /// Compute until a solution is in hand. Reflex: ticks until the end
    /// effector settles inside the success tolerances (all ticks on failure).
    /// RRT-Connect: until a path is found.
    pub solve_time: f64,
    /// Time until the first motion command is available.
    pub first_action_time: f64,
    /// Per-tick milliseconds (reflex only).
    #[serde(skip)]
    pub ticks_ms: Vec<f64>,
    /// Thread CPU time of the same ticks.
    #[serde(skip)]
    pub ticks_cpu_ms: Vec<f64>,
}

/// One episode with its log, if the planner produced one.
#[derive(Clone, Debug)]
pub struct Episode {
    pub result: EpisodeResult,
    pub timing: EpisodeTiming,
    pub log: Option<EpisodeLog>,
    pub rrt_path: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerSummary {
    pub planner: Planner,
    pub episodes: usize,
    pub success_rate: f64,
    /// Means over successful episodes.
    pub mean_joint_path_length: f64,
    pub mean_ee_path_length: f64,
    pub min_clearance: f64,
    pub max_null_space_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannerTiming {
    pub planner: Planner,
    /// Mean over successful episodes, seconds.
    pub mean_solve_time: f64,
    pub mean_first_action_time: f64,
    pub tick_mean_ms: f64,
    pub tick_rms_ms: f64,
    pub tick_max_ms: f64,
    /// Thread CPU time per tick, which leaves out preemption.
    pub tick_cpu_mean_ms: f64,
    pub tick_cpu_max_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub scenario: String,
    /// Bit-identical across reruns of the same spec.
    pub results: Vec<PlannerSummary>,
    /// Wall-clock figures; these vary run to run.
    pub timing: Vec<PlannerTiming>,
    #[serde(skip)]
    pub episodes: Vec<Episode>,
    #[serde(skip)]
    pub histogram: Histogram,
}

impl ExperimentReport {
    pub fn from_episodes(scenario: String, episodes: Vec<Episode>) -> Self {
        let results: Vec<EpisodeResult> = episodes.iter().map(|e| e.result.clone()).collect();
        let summaries = summarize(&results);
        let planners: Vec<Planner> = summaries.iter().map(|s| s.planner).collect();
        let ticks: Vec<f64> = episodes.iter().flat_map(|e| e.timing.ticks_ms.iter().copied()).collect();
        Self {
            scenario,
            results: summaries,
            timing: summarize_timing(&episodes, &planners),
            histogram: Histogram::from_samples(&ticks, 1.0),
            episodes,
        }
    }

    pub fn summary(&self, planner: Planner) -> Option<&PlannerSummary> {
        self.results.iter().find(|s| s.planner == planner)
    }

    pub fn timing(&self, planner: Planner) -> Option<&PlannerTiming> {
        self.timing.iter().find(|s| s.planner == planner)
    }

    /// Deterministic results as JSON.
    pub fn results_json(&self) -> String {
        serde_json::to_string_pretty(&self.results).expect("results serialize")
    }

    /// Plain-text table of both sections.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<12} {:>5} {:>8} {:>10} {:>10} {:>10} {:>11} {:>10}",
            "planner", "n", "success", "joint_len", "ee_len", "solve_ms", "first_ms", "tick_ms"
        );
        for r in &self.results {
            let t = self.timing(r.planner).expect("timing per planner");
            let _ = writeln!(
                s,
                "{:<12} {:>5} {:>8.3} {:>10.4} {:>10.4} {:>10.3} {:>11.4} {:>10.4}",
                r.planner.name(),
                r.episodes,
                r.success_rate,
                r.mean_joint_path_length,
                r.mean_ee_path_length,
                t.mean_solve_time * 1e3,
                t.mean_first_action_time * 1e3,
                t.tick_mean_ms
            );
        }
        s
    }

    /// Write summary.json, episodes.csv, timing.csv, histogram.csv and the
    /// per-episode logs under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let logs = dir.join("episodes");
        std::fs::create_dir_all(&logs).map_err(|e| Error::io(&logs, e))?;
        let put = |name: &str, text: String| {
            let p = dir.join(name);
            std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
        };
        put("summary.json", serde_json::to_string_pretty(self)?)?;
        put("results.json", self.results_json())?;
        let results: Vec<_> = self.episodes.iter().map(|e| e.result.clone()).collect();
        put("episodes.csv", episodes_csv(&results))?;
        let mut timing = String::from("planner,seed,solve_time,first_action_time\n");
        for e in &self.episodes {
            let t = &e.timing;
            let _ = writeln!(timing, "{},{},{},{}", t.planner.name(), t.seed, t.solve_time, t.first_action_time);
        }
        put("timing.csv", timing)?;
        put("histogram.csv", self.histogram.to_csv())?;
        for e in &self.episodes {
            let stem = format!("{}_{}", e.result.planner.name(), e.result.seed);
            let mut buf = Vec::new();
            if let Some(log) = &e.log {
                log.write_csv(&mut buf, false).map_err(|err| Error::io(&logs, err))?;
            } else if let Some(path) = &e.rrt_path {
                buf = path_csv(path).into_bytes();
            }
            let p = logs.join(format!("{stem}.csv"));
            std::fs::write(&p, buf).map_err(|err| Error::io(&p, err))?;
        }
        Ok(())
    }
}

const EPISODE_HEADER: &str = "planner,seed,success,outcome,iterations,final_err_pos,final_err_rot,joint_path_length,ee_path_length,min_clearance,null_space_residual,avoidance_steps";

/// Per-episode results table. Floats print in shortest round-trip form so
/// the aggregates can be recomputed exactly.
pub fn episodes_csv(results: &[EpisodeResult]) -> String {
    let mut s = format!("{EPISODE_HEADER}\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.planner.name(),
            r.seed,
            r.success,
            r.outcome,
            r.iterations,
            r.final_err_pos,
            r.final_err_rot,
            r.joint_path_length,
            r.ee_path_length,
            r.min_clearance,
            r.null_space_residual,
            r.avoidance_steps
        );
    }
    s
}

/// Inverse of [`episodes_csv`].
pub fn parse_episodes_csv(text: &str) -> Result<Vec<EpisodeResult>> {
    let bad = |m: String| Error::Parse(format!("episodes.csv: {m}"));
    let mut lines = text.lines();
    if lines.next() != Some(EPISODE_HEADER) {
        return Err(bad("unexpected header".into()));
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 12 {
                return Err(bad(format!("expected 12 fields, got {}", f.len())));
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|e| bad(format!("field {i}: {e}")));
            let int = |i: usize| f[i].parse::<usize>().map_err(|e| bad(format!("field {i}: {e}")));
            Ok(EpisodeResult {
                planner: f[0].parse()?,
                seed: f[1].parse().map_err(|e| bad(format!("seed: {e}")))?,
                success: f[2].parse().map_err(|e| bad(format!("success: {e}")))?,
                outcome: f[3].to_string(),
                iterations: int(4)?,
                final_err_pos: num(5)?,
                final_err_rot: num(6)?,
                joint_path_length: num(7)?,
                ee_path_length: num(8)?,
                min_clearance: num(9)?,
                null_space_residual: num(10)?,
                avoidance_steps: int(11)?,
            })
        })
        .collect()
}

fn path_csv(path: &[Vec<f64>]) -> String {
    let n = path.first().map_or(0, Vec::len);
    let mut s = (1..=n).map(|i| format!("q_{i}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for q in path {
        s.push_str(&q.iter().map(f64::to_string).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Aggregate per-planner summaries, in the order planners first appear.
pub fn summarize(results: &[EpisodeResult]) -> Vec<PlannerSummary> {
    let mut planners: Vec<Planner> = Vec::new();
    for r in results {
        if !planners.contains(&r.planner) {
            planners.push(r.planner);
        }
    }
    planners
        .into_iter()
        .map(|p| {
            let all: Vec<&EpisodeResult> = results.iter().filter(|r| r.planner == p).collect();
            let ok: Vec<&EpisodeResult> = all.iter().copied().filter(|r| r.success).collect();
            PlannerSummary {
                planner: p,
                episodes: all.len(),
                success_rate: ok.len() as f64 / all.len() as f64,
                mean_joint_path_length: mean_of(ok.iter().map(|r| r.joint_path_length)),
                mean_ee_path_length: mean_of(ok.iter().map(|r| r.ee_path_length)),
                min_clearance: all.iter().map(|r| r.min_clearance).fold(f64::INFINITY, f64::min),
                max_null_space_residual: all.iter().map(|r| r.null_space_residual).fold(0.0, f64::max),
            }
        })
        .collect()
}

fn summarize_timing(episodes: &[Episode], planners: &[Planner]) -> Vec<PlannerTiming> {
    planners
        .iter()
        .map(|&p| {
            let ok: Vec<&Episode> = episodes
                .iter()
                .filter(|e| e.result.planner == p && e.result.success)
                .collect();
            let ticks: Vec<f64> = episodes
                .iter()
                .filter(|e| e.result.planner == p)
                .flat_map(|e| e.timing.ticks_ms.iter().copied())
                .collect();
            let (tick_mean_ms, tick_rms_ms) = mean_rms(&ticks);
            let cpu: Vec<f64> = episodes
                .iter()
                .filter(|e| e.result.planner == p)
                .flat_map(|e| e.timing.ticks_cpu_ms.iter().copied())
                .collect();
            PlannerTiming {
                planner: p,
                mean_solve_time: mean_of(ok.iter().map(|e| e.timing.solve_time)),
                mean_first_action_time: mean_of(ok.iter().map(|e| e.timing.first_action_time)),
                tick_mean_ms,
                tick_rms_ms,
                tick_max_ms: ticks.iter().copied().fold(0.0, f64::max),
                tick_cpu_mean_ms: mean_rms(&cpu).0,
                tick_cpu_max_ms: cpu.iter().copied().fold(0.0, f64::max),
            }
        })
        .collect()
}

/// Build the scenario for one seed.
pub fn scenario_for_seed(spec: &ExperimentSpec, ctx: Option<&GeneratorContext>, seed: u64) -> Result<Scenario> {
    let override_controller = |mut file: ScenarioFile| {
        if let Some(c) = &spec.controller {
            file.controller = c.clone();
        }
        file
    };
    match &spec.scenario {
        ScenarioSource::File { path } => {
            let file = override_controller(ScenarioFile::load(path)?);
            let base = path.parent().unwrap_or(Path::new("."));
            let model = match ctx {
                Some(c) => c.model.clone(),
                None => Arc::new(load_model(&base.join(&file.robot), &file.reach)?),
            };
            file.build(base, model)
        }
        source => {
            let ctx = ctx.ok_or_else(|| Error::Scenario("generated scenario needs a robot".into()))?;
            let file = match source {
                ScenarioSource::BoxField { n_boxes, edge, .. } => generate_random_box_scene(ctx, seed, *n_boxes, *edge)?,
                ScenarioSource::Window { edge, .. } => generate_window_scene(ctx, *edge, seed)?,
                ScenarioSource::Crossing { crossing, .. } => generate_crossing_scene(ctx, *crossing, seed)?,
                ScenarioSource::File { .. } => unreachable!(),
            };
            let file = override_controller(file);
            file.build(Path::new("."), ctx.model.clone())
        }
    }
}

/// Run one planner on a built scenario.
pub fn run_planner(sc: &Scenario, planner: Planner, seed: u64, time_limit: f64) -> Result<Episode> {
    let model = &sc.model;
    let file = &sc.file;
    match planner {
        Planner::Reflex => {
            let log = run_episode(model, &sc.planning, &sc.targets, &file.start, &file.controller, &file.episode, |_, _| {})?;
            let ticks = &log.rows[..log.iterations];
            let ticks_ms: Vec<f64> = ticks.iter().map(|r| r.elapsed_us * 1e-3).collect();
            let ticks_cpu_ms: Vec<f64> = ticks.iter().map(|r| r.cpu_us * 1e-3).collect();
            let result = EpisodeResult {
                planner,
                seed,
                success: log.success(&file.episode),
                outcome: format!("{:?}", log.termination).to_lowercase(),
                iterations: log.iterations,
                final_err_pos: log.final_err_pos,
                final_err_rot: log.final_err_rot,
                joint_path_length: log.joint_path_length(),
                ee_path_length: log.ee_path_length(),
                min_clearance: log.min_clearance(),
                null_space_residual: log.null_space_residual,
                avoidance_steps: log.avoidance_steps,
            };
            let first = log.rows.first().map_or(0.0, |r| r.elapsed_us * 1e-6);
            let timing = EpisodeTiming {
                planner,
                seed,
                solve_time: log.time_to_success(&file.episode).unwrap_or_else(|| log.compute_time()),
                first_action_time: first,
                ticks_ms,
                ticks_cpu_ms,
            };
            Ok(Episode {
                result,
                timing,
                log: Some(log),
                rrt_path: None,
            })
        }
        Planner::RrtConnect => {
            if !file.dynamic.is_empty() {
                return Err(Error::Scenario("rrt-connect needs a static scene".into()));
            }
            let target = sc.targets.at(0.0);
            let goal = match &file.goal {
                Some(g) => g.clone(),
                None => solve_ik(model, &file.start, &target, 2000)
                    .ok_or_else(|| Error::Scenario("no goal configuration reaches the target".into()))?,
            };
            let checker = CollisionChecker::from_planning(model, &sc.planning);
            let mut cfg = file.rrt.clone();
            cfg.seed = seed;
            cfg.max_time = cfg.max_time.min(time_limit);
            let (result, timing, path) = match rrt_connect_plan(model, &checker, &file.start, &goal, &cfg) {
                Ok(r) => {
                    let last = r.path.last().expect("path has endpoints");
                    let (ep, er) = target_errors(model, last, &target)?;
                    let min_clearance = r
                        .path
                        .iter()
                        .map(|q| crate::reflex_controller::clearance_at(model, &sc.planning, q, 0.0))
                        .collect::<Result<Vec<_>>>()?
                        .into_iter()
                        .fold(f64::INFINITY, f64::min);
                    let res = EpisodeResult {
                        planner,
                        seed,
                        success: ep <= file.episode.success_pos && er <= file.episode.success_rot,
                        outcome: "solved".into(),
                        iterations: r.iterations,
                        final_err_pos: ep,
                        final_err_rot: er,
                        joint_path_length: baselines::joint_path_length(&r.path),
                        ee_path_length: baselines::ee_path_length(model, &r.path, cfg.step / 8.0)?,
                        min_clearance,
                        null_space_residual: 0.0,
                        avoidance_steps: 0,
                    };
                    let t = EpisodeTiming {
                        planner,
                        seed,
                        solve_time: r.elapsed,
                        first_action_time: r.elapsed,
                        ticks_ms: Vec::new(),
                        ticks_cpu_ms: Vec::new(),
                    };
                    (res, t, Some(r.path))
                }
                Err(e @ (Error::Timeout(_) | Error::MaxIters(_) | Error::InvalidEndpoint(_))) => {
                    let (ep, er) = target_errors(model, &file.start, &target)?;
                    let outcome = match e {
                        Error::Timeout(_) => "timeout",
                        Error::MaxIters(_) => "max_iters",
                        _ => "invalid_endpoint",
                    };
                    let res = EpisodeResult {
                        planner,
                        seed,
                        success: false,
                        outcome: outcome.into(),
                        iterations: 0,
                        final_err_pos: ep,
                        final_err_rot: er,
                        joint_path_length: 0.0,
                        ee_path_length: 0.0,
                        min_clearance: f64::INFINITY,
                        null_space_residual: 0.0,
                        avoidance_steps: 0,
                    };
                    let t = EpisodeTiming {
                        planner,
                        seed,
                        solve_time: cfg.max_time,
                        first_action_time: cfg.max_time,
                        ticks_ms: Vec::new(),
                        ticks_cpu_ms: Vec::new(),
                    };
                    (res, t, None)
                }
                Err(e) => return Err(e),
            };
            Ok(Episode {
                result,
                timing,
                log: None,
                rrt_path: path,
            })
        }
    }
}

fn generator_context(spec: &ExperimentSpec) -> Result<Option<GeneratorContext>> {
    let robot = match &spec.scenario {
        ScenarioSource::File { .. } => return Ok(None),
        ScenarioSource::BoxField { robot, .. }
        | ScenarioSource::Window { robot, .. }
        | ScenarioSource::Crossing { robot, .. } => robot,
    };
    let model = load_model(robot, &spec.reach)?;
    Ok(Some(GeneratorContext {
        model: Arc::new(model),
        robot_path: robot.clone(),
        reach: spec.reach.clone(),
    }))
}

/// Run every planner on every seed, aggregate, and write outputs when the
/// spec names a directory.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    let ctx = generator_context(spec)?;
    let seeds = spec.seed_list();
    let scenarios: Vec<Scenario> = seeds
        .iter()
        .map(|&s| scenario_for_seed(spec, ctx.as_ref(), s))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, Planner)> = spec
        .planners
        .iter()
        .flat_map(|&p| (0..seeds.len()).map(move |i| (i, p)))
        .collect();
    let run = |&(i, p): &(usize, Planner)| run_planner(&scenarios[i], p, seeds[i], spec.time_limit);
    let episodes: Vec<Episode> = if spec.parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };
    let scenario = match &spec.scenario {
        ScenarioSource::File { path } => path.display().to_string(),
        other => format!("{other:?}"),
    };
    let report = ExperimentReport::from_episodes(scenario, episodes);
    if let Some(dir) = &spec.output {
        report.write(dir)?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(p: Planner, seed: u64, success: bool, len: f64) -> EpisodeResult {
        EpisodeResult {
            planner: p,
            seed,
            success,
            outcome: "converged".into(),
            iterations: 10,
            final_err_pos: 0.1 / 3.0,
            final_err_rot: 0.0,
            joint_path_length: len,
            ee_path_length: len * 0.7,
            min_clearance: 0.01 * seed as f64 + 1.0 / 7.0,
            null_space_residual: 1e-12,
            avoidance_steps: 3,
        }
    }

    #[test]
    fn csv_round_trip_reproduces_summary() {
        let rs: Vec<_> = (0..7)
            .map(|s| result(if s % 2 == 0 { Planner::Reflex } else { Planner::RrtConnect }, s, s != 3, 0.1 * s as f64 + 1.0 / 3.0))
            .collect();
        let parsed = parse_episodes_csv(&episodes_csv(&rs)).unwrap();
        assert_eq!(parsed, rs);
        assert_eq!(
            serde_json::to_string(&summarize(&parsed)).unwrap(),
            serde_json::to_string(&summarize(&rs)).unwrap()
        );
        let s = summarize(&rs);
        assert_eq!(s[0].planner, Planner::Reflex);
        assert_eq!(s[1].success_rate, 2.0 / 3.0);
    }

    #[test]
    fn spec_defaults_and_validation() {
        let spec: ExperimentSpec =
            serde_json::from_str(r#"{"scenario": {"kind": "window", "robot": "r.json"}}"#).unwrap();
        assert_eq!(spec.planners, vec![Planner::Reflex]);
        assert_eq!(spec.seed_list(), vec![0]);
        assert_eq!(spec.time_limit, 10.0);
        spec.validate().unwrap();
        let bad = ExperimentSpec { trials: 0, ..spec };
        assert!(matches!(bad.validate(), Err(Error::Scenario(_))));
    }
}
