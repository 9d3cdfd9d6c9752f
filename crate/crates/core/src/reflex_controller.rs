//! The reflex loop: per-link escape velocities from chained field lookups,
//! mapped into the null space of the end-effector position task.

use std::time::Instant;

use nalgebra::{DMatrix, DVector, Vector3, Vector6};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    damped_pseudo_inverse, forward_kinematics, geometric_jacobian, orientation_error, svd_pseudo_inverse,
    ForwardKinematics, Jacobian, JacobianTarget, Pose, RobotModel,
};
use crate::reachability::{prune_dynamic, prune_static, PruneMode};
use crate::scene::{enclosure_bounds, PointIndex, Scene};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Obstacle points closer than this to a link contribute to its escape.
    pub r_eva: f64,
    /// Desired end-effector translation per iteration, meters.
    pub p_step: f64,
    /// Gain of the near-target branch.
    pub beta: f64,
    pub eps_p: f64,
    pub eps_r: f64,
    /// Damping of the end-effector pseudo-inverse.
    pub damping: f64,
    /// Damping of (J_i·P)⁺. That matrix loses rank whenever a link's motion is
    /// mostly spent on the end-effector task, and the undamped inverse then
    /// turns the task-coupling term into joint jumps of several radians.
    pub secondary_damping: f64,
    pub max_iters: usize,
    /// Seconds per iteration.
    pub dt: f64,
    /// Link speed, meters per iteration, commanded at contact (γ = 1).
    pub escape_gain: f64,
    /// Largest per-joint change per iteration; Δq is scaled uniformly to respect it.
    pub max_joint_step: f64,
    /// Compute the main-task term once instead of accumulating it per link.
    pub main_task_once: bool,
    /// Gain that feeds the last link's escape into the end-effector
    /// translation target (0 disables it). The null-space term cannot move the
    /// end effector, so without this the tool never retreats from an
    /// approaching obstacle.
    pub ee_escape_gain: f64,
    pub stall_window: usize,
    pub stall_tol: f64,
    pub prune: PruneMode,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let r_eva = 0.25;
        Self {
            r_eva,
            p_step: 0.01,
            beta: 0.5,
            eps_p: 0.005,
            eps_r: 0.02,
            damping: 1e-3,
            secondary_damping: 0.05,
            max_iters: 5000,
            dt: 0.001,
            escape_gain: 0.01,
            max_joint_step: 0.1,
            main_task_once: false,
            ee_escape_gain: 0.01,
            stall_window: 200,
            stall_tol: 1e-4,
            prune: PruneMode::Lossless { radius: r_eva },
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if !(self.r_eva > 0.0) {
            return bad("r_eva must be > 0");
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return bad("beta must be in (0, 1]");
        }
        if !(self.eps_p > 0.0 && self.eps_r > 0.0) {
            return bad("eps_p and eps_r must be > 0");
        }
        if !(self.p_step > 0.0 && self.dt > 0.0) {
            return bad("p_step and dt must be > 0");
        }
        if !(self.secondary_damping >= 0.0) {
            return bad("secondary_damping must be >= 0");
        }
        if !(self.damping >= 0.0 && self.escape_gain >= 0.0 && self.ee_escape_gain >= 0.0 && self.max_joint_step > 0.0) {
            return bad("damping and escape gains must be >= 0, max_joint_step > 0");
        }
        Ok(())
    }
}

/// Avoidance demand of one link.
#[derive(Clone, Debug, PartialEq)]
pub struct EscapeCommand {
    /// 1-based.
    pub link_index: usize,
    /// `γ Σ λ_k g_k` rotated into the base frame. Points away from the link,
    /// toward the obstacles; the link itself is driven along its negation.
    pub velocity: Vector3<f64>,
    pub gamma: f64,
    /// Smallest link-field value over all query points (sentinel when none).
    pub min_distance: f64,
    pub contributing_points: usize,
    /// Base-frame point on the link surface nearest the closest obstacle point.
    pub control_point: Vector3<f64>,
}

impl EscapeCommand {
    pub fn active(&self) -> bool {
        self.contributing_points > 0
    }
}

/// Escape velocity of link `link_index` (1-based) from world-frame query points.
pub fn escape_velocity(
    model: &RobotModel,
    q: &[f64],
    link_index: usize,
    queries: &[Vector3<f64>],
    cfg: &ControllerConfig,
) -> Result<EscapeCommand> {
    let fk = forward_kinematics(model, q)?;
    if link_index == 0 || link_index > model.dof() {
        return Err(Error::InvalidConfig(format!("link index {link_index} outside 1..={}", model.dof())));
    }
    Ok(escape_from_fk(model, &fk, &model.world_to_base(), link_index, None, queries, cfg.r_eva))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn escape_from_fk(
    model: &RobotModel,
    fk: &ForwardKinematics,
    world_to_base: &Pose,
    link_index: usize,
    statics: Option<&PointIndex>,
    queries: &[Vector3<f64>],
    r_eva: f64,
) -> EscapeCommand {
    let link = &model.links[link_index - 1];
    let link_pose = &fk.links[link_index - 1];
    // World → link in one transform.
    let to_link = link_pose.inverse().compose(world_to_base);
    let sentinel = link.sdf.sentinel();
    let mut min_d = sentinel;
    let mut nearest = None;
    let mut weight_sum = 0.0;
    let mut weighted = Vector3::zeros();
    let mut count = 0;
    let mut visit = |p: &Vector3<f64>| {
        let local = to_link.transform_point(p);
        if !link.sdf.spec.contains(&local) {
            return;
        }
        let d = link.sdf.query(&local);
        if d < min_d {
            min_d = d;
            nearest = Some(local);
        }
        if d < r_eva {
            let w = r_eva - d;
            let g = link.gradient.query(&local);
            weighted += g * w;
            weight_sum += w;
            count += 1;
        }
    };
    if let Some(index) = statics {
        let (lo, hi) = enclosure_bounds(&link.sdf.spec, &to_link.inverse());
        index.for_each_near(&lo, &hi, &mut visit);
    }
    queries.iter().for_each(&mut visit);
    let mut velocity = Vector3::zeros();
    let mut gamma = 0.0;
    if count > 0 && weight_sum > 0.0 {
        gamma = ((r_eva - min_d) / r_eva).clamp(0.0, 1.0);
        velocity = link_pose.transform_vector(&(weighted * (gamma / weight_sum)));
    } else {
        count = 0;
    }
    let control_point = match nearest {
        Some(local) => {
            let g = link.gradient.query(&local);
            link_pose.transform_point(&(local - g * min_d))
        }
        None => fk.link_end(model, link_index - 1),
    };
    EscapeCommand {
        link_index,
        velocity,
        gamma,
        min_distance: min_d,
        contributing_points: count,
        control_point,
    }
}

/// Per-iteration translation and rotation targets.
pub fn step_targets(p_e: &Vector3<f64>, w_e: &Vector3<f64>, cfg: &ControllerConfig) -> (Vector3<f64>, Vector3<f64>) {
    let pn = p_e.norm();
    let wn = w_e.norm();
    let (dp, r_step) = if pn > 3.0 * cfg.p_step {
        (p_e * (cfg.p_step / pn), cfg.p_step * wn / pn)
    } else {
        (p_e * cfg.beta, cfg.beta * wn)
    };
    let dw = if wn > cfg.eps_r {
        w_e * (r_step / wn)
    } else {
        Vector3::zeros()
    };
    (dp, dw)
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub dq: DVector<f64>,
    pub q: Vec<f64>,
    pub ee: Pose,
    /// Per-link min clearance to the query points.
    pub clearances: Vec<f64>,
    pub escapes: Vec<EscapeCommand>,
    /// Sum of the null-space avoidance terms.
    pub dq_eva: DVector<f64>,
    /// Largest ‖J_p Δq_eva,i‖ over the active links.
    pub null_space_residual: f64,
    /// Errors before the step.
    pub err_pos: f64,
    pub err_rot: f64,
    /// Wall-clock seconds.
    pub elapsed: f64,
}

const LIMIT_TOL: f64 = 1e-9;

/// Zero the columns of frozen joints.
fn mask_columns(mut j: DMatrix<f64>, frozen: &[bool]) -> DMatrix<f64> {
    for (c, &f) in frozen.iter().enumerate() {
        if f {
            j.column_mut(c).fill(0.0);
        }
    }
    j
}

/// Main task plus null-space avoidance for the unfrozen joints. Returns
/// (Δq, Σ Δq_eva, largest ‖J_p Δq_eva‖), with Δq scaled to the step cap.
#[allow(clippy::too_many_arguments)]
fn solve_step(
    model: &RobotModel,
    fk: &ForwardKinematics,
    jee: &Jacobian,
    escapes: &[EscapeCommand],
    dp: &Vector3<f64>,
    dw: &Vector3<f64>,
    frozen: &[bool],
    cfg: &ControllerConfig,
) -> Result<(DVector<f64>, DVector<f64>, f64)> {
    let n = model.dof();
    let j_ee = mask_columns(jee.stacked(), frozen);
    let j_ee_pinv = damped_pseudo_inverse(&j_ee, cfg.damping).map_err(|_| Error::SingularityEscalation)?;
    let x_ee = Vector6::new(dp.x, dp.y, dp.z, dw.x, dw.y, dw.z);
    let dq_main = &j_ee_pinv * DVector::from_column_slice(x_ee.as_slice());

    // Exact projector onto the null space of the end-effector position task.
    let jp = mask_columns(jee.linear_dyn(), frozen);
    let jp_pinv = svd_pseudo_inverse(&jp, 1e-12);
    let projector = DMatrix::identity(n, n) - &jp_pinv * &jp;
    let xp_joint = &jp_pinv * DVector::from_column_slice(dp.as_slice());

    let mut dq = if cfg.main_task_once {
        dq_main.clone()
    } else {
        DVector::zeros(n)
    };
    let mut dq_eva_total = DVector::zeros(n);
    let mut residual: f64 = 0.0;
    for (i, esc) in escapes.iter().enumerate() {
        if !cfg.main_task_once {
            dq += &dq_main / n as f64;
        }
        if !esc.active() {
            continue;
        }
        let ji = mask_columns(
            geometric_jacobian(model, fk, JacobianTarget::Link(i), &esc.control_point).linear_dyn(),
            frozen,
        );
        let jip = &ji * &projector;
        let jip_pinv = if cfg.secondary_damping > 0.0 {
            damped_pseudo_inverse(&jip, cfg.secondary_damping).unwrap_or_else(|_| svd_pseudo_inverse(&jip, 1e-9))
        } else {
            svd_pseudo_inverse(&jip, 1e-9)
        };
        let v_link = -esc.velocity * cfg.escape_gain;
        let rhs = DVector::from_column_slice(v_link.as_slice()) - &ji * &xp_joint;
        let dq_eva = &projector * (jip_pinv * rhs);
        residual = residual.max((&jp * &dq_eva).norm());
        dq_eva_total += &dq_eva;
    }
    dq += &dq_eva_total;

    let peak = dq.amax();
    if peak > cfg.max_joint_step {
        dq *= cfg.max_joint_step / peak;
    }
    Ok((dq, dq_eva_total, residual))
}

/// Target errors of a configuration: (‖p_e‖, ‖ω_e‖), world-frame target.
pub fn target_errors(model: &RobotModel, q: &[f64], target: &Pose) -> Result<(f64, f64)> {
    let fk = forward_kinematics(model, q)?;
    let t = model.world_to_base().compose(target);
    Ok((
        (t.translation - fk.ee.translation).norm(),
        orientation_error(&fk.ee.rotation, &t.rotation).norm(),
    ))
}

/// One iteration. `target` is a world-frame pose; `queries[i]` are the
/// world-frame points (static and dynamic) pruned for link `i + 1`.
pub fn step(
    model: &RobotModel,
    q: &[f64],
    target: &Pose,
    queries: &[Vec<Vector3<f64>>],
    cfg: &ControllerConfig,
) -> Result<StepResult> {
    step_with(model, q, target, None, queries, cfg)
}

/// One iteration against a planning scene's indexed static points plus
/// `dynamic[i]`, the pruned moving points of link `i + 1`.
pub fn step_in_scene(
    model: &RobotModel,
    q: &[f64],
    target: &Pose,
    scene: &PlanningScene,
    dynamic: &[Vec<Vector3<f64>>],
    cfg: &ControllerConfig,
) -> Result<StepResult> {
    step_with(model, q, target, Some(&scene.static_index), dynamic, cfg)
}

fn step_with(
    model: &RobotModel,
    q: &[f64],
    target: &Pose,
    statics: Option<&[PointIndex]>,
    queries: &[Vec<Vector3<f64>>],
    cfg: &ControllerConfig,
) -> Result<StepResult> {
    let start = Instant::now();
    model.check_dims(q)?;
    let n = model.dof();
    if let Some(bad) = [Some(queries.len()), statics.map(<[_]>::len)].into_iter().flatten().find(|&l| l != n) {
        return Err(Error::DimensionMismatch { expected: n, got: bad });
    }
    let w2b = model.world_to_base();
    let target = w2b.compose(target);
    let fk = forward_kinematics(model, q)?;
    let p = fk.ee.translation;
    let jee = geometric_jacobian(model, &fk, JacobianTarget::EndEffector, &p);

    let p_e = target.translation - p;
    let w_e = orientation_error(&fk.ee.rotation, &target.rotation);
    let (mut dp, dw) = step_targets(&p_e, &w_e, cfg);

    let escapes: Vec<EscapeCommand> = (1..=n)
        .map(|i| escape_from_fk(model, &fk, &w2b, i, statics.map(|s| &s[i - 1]), &queries[i - 1], cfg.r_eva))
        .collect();
    if cfg.ee_escape_gain > 0.0 && escapes[n - 1].active() {
        dp -= escapes[n - 1].velocity * cfg.ee_escape_gain;
    }

    // Joints pinned at a limit and pushed further out are frozen and the step
    // is solved again without them.
    let mut frozen = vec![false; n];
    let (dq, dq_eva_total, residual) = loop {
        let (dq, eva, res) = solve_step(model, &fk, &jee, &escapes, &dp, &dw, &frozen, cfg)?;
        let mut changed = false;
        for (j, link) in model.links.iter().enumerate() {
            let [lo, hi] = link.joint.limits;
            let out = (q[j] <= lo + LIMIT_TOL && dq[j] < 0.0) || (q[j] >= hi - LIMIT_TOL && dq[j] > 0.0);
            if out && !frozen[j] {
                frozen[j] = true;
                changed = true;
            }
        }
        if !changed || frozen.iter().all(|&f| f) {
            break (dq, eva, res);
        }
    };

    let mut q_next: Vec<f64> = q.iter().zip(dq.iter()).map(|(a, b)| a + b).collect();
    model.clamp_to_limits(&mut q_next);
    let ee = forward_kinematics(model, &q_next)?.ee;
    Ok(StepResult {
        dq,
        q: q_next,
        ee,
        clearances: escapes.iter().map(|e| e.min_distance).collect(),
        escapes,
        dq_eva: dq_eva_total,
        null_space_residual: residual,
        err_pos: p_e.norm(),
        err_rot: w_e.norm(),
        elapsed: start.elapsed().as_secs_f64(),
    })
}

/// Bucket edge of the static point index, meters.
const STATIC_CELL: f64 = 0.1;

/// Query points of a scene, pruned per link.
#[derive(Clone, Debug)]
pub struct PlanningScene {
    pub scene: Scene,
    /// Static points per link, pruned once.
    pub static_queries: Vec<Vec<Vector3<f64>>>,
    /// `static_queries` bucketed for lookups around one link.
    pub static_index: Vec<PointIndex>,
    /// Per-link pruning threshold on the reach value.
    pub margins: Vec<f64>,
}

impl PlanningScene {
    pub fn new(model: &RobotModel, scene: Scene, prune: PruneMode) -> Self {
        let w2b = model.world_to_base();
        let margins: Vec<f64> = model
            .links
            .iter()
            .map(|l| match &l.reach {
                Some(r) => prune.margin(r, l.extent),
                None => f64::INFINITY,
            })
            .collect();
        let static_queries: Vec<Vec<Vector3<f64>>> = model
            .links
            .iter()
            .zip(&margins)
            .map(|(link, &m)| match (&link.reach, &scene.composite) {
                (_, None) => Vec::new(),
                (Some(reach), Some(grid)) => prune_static(grid, reach, &w2b, m),
                (None, Some(_)) => scene.static_points(),
            })
            .collect();
        let static_index = static_queries.iter().map(|p| PointIndex::new(p, STATIC_CELL)).collect();
        Self {
            scene,
            static_queries,
            static_index,
            margins,
        }
    }

    /// Pruned moving points per link at time `t`.
    pub fn dynamic_queries_at(&self, model: &RobotModel, t: f64) -> Result<Vec<Vec<Vector3<f64>>>> {
        let cloud = self.scene.dynamic_points(t)?;
        Ok(self.dynamic_queries_with(model, &cloud))
    }

    pub fn dynamic_queries_with(&self, model: &RobotModel, cloud: &[Vector3<f64>]) -> Vec<Vec<Vector3<f64>>> {
        let w2b = model.world_to_base();
        model
            .links
            .iter()
            .enumerate()
            .map(|(i, link)| match &link.reach {
                Some(reach) => prune_dynamic(cloud, reach, &w2b, self.margins[i]),
                None => cloud.to_vec(),
            })
            .collect()
    }

    /// Static plus pruned dynamic points per link at time `t`.
    pub fn queries_at(&self, model: &RobotModel, t: f64) -> Result<Vec<Vec<Vector3<f64>>>> {
        let cloud = self.scene.dynamic_points(t)?;
        Ok(self.queries_with(model, &cloud))
    }

    pub fn queries_with(&self, model: &RobotModel, cloud: &[Vector3<f64>]) -> Vec<Vec<Vector3<f64>>> {
        let w2b = model.world_to_base();
        model
            .links
            .iter()
            .enumerate()
            .map(|(i, link)| {
                let mut pts = self.static_queries[i].clone();
                match &link.reach {
                    Some(reach) => pts.extend(prune_dynamic(cloud, reach, &w2b, self.margins[i])),
                    None => pts.extend_from_slice(cloud),
                }
                pts
            })
            .collect()
    }
}

/// Time-indexed world target; poses are interpolated between keyframes and held past the ends.
#[derive(Clone, Debug)]
pub struct TargetTrack {
    pub keyframes: Vec<(f64, Pose)>,
}

impl TargetTrack {
    pub fn fixed(pose: Pose) -> Self {
        Self {
            keyframes: vec![(0.0, pose)],
        }
    }

    pub fn at(&self, t: f64) -> Pose {
        let k = &self.keyframes;
        let after = k.partition_point(|(s, _)| *s <= t);
        if after == 0 {
            return k[0].1;
        }
        if after == k.len() {
            return k[k.len() - 1].1;
        }
        let (a, b) = (&k[after - 1], &k[after]);
        a.1.interpolate(&b.1, (t - a.0) / (b.0 - a.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    Stalled,
    MaxIters,
    /// Ran for the scenario's fixed duration.
    Duration,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub t: f64,
    pub q: Vec<f64>,
    pub ee: [f64; 3],
    pub err_pos: f64,
    pub err_rot: f64,
    pub min_clearance: f64,
    pub clearances: Vec<f64>,
    /// Wall-clock time of the tick.
    pub elapsed_us: f64,
    /// CPU time the tick's thread spent, which excludes preemption.
    pub cpu_us: f64,
}

#[derive(Clone, Debug)]
pub struct EpisodeLog {
    pub rows: Vec<LogRow>,
    pub termination: Termination,
    pub iterations: usize,
    pub final_err_pos: f64,
    pub final_err_rot: f64,
    pub final_q: Vec<f64>,
    /// Largest null-space residual over all steps with active avoidance.
    pub null_space_residual: f64,
    pub avoidance_steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeOptions {
    /// Run for this many seconds regardless of convergence (moving scenes).
    pub duration: Option<f64>,
    pub success_pos: f64,
    pub success_rot: f64,
}

impl Default for EpisodeOptions {
    fn default() -> Self {
        Self {
            duration: None,
            success_pos: 0.06,
            success_rot: 0.15,
        }
    }
}

impl EpisodeLog {
    pub fn min_clearance(&self) -> f64 {
        self.rows.iter().map(|r| r.min_clearance).fold(f64::INFINITY, f64::min)
    }

    /// Cartesian end-effector path length.
    pub fn ee_path_length(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| (Vector3::from(w[1].ee) - Vector3::from(w[0].ee)).norm())
            .sum()
    }

    pub fn joint_path_length(&self) -> f64 {
        self.rows
            .windows(2)
            .map(|w| w[1].q.iter().zip(&w[0].q).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
            .sum()
    }

    /// Seconds of compute spent in `step`.
    pub fn compute_time(&self) -> f64 {
        self.rows.iter().map(|r| r.elapsed_us).sum::<f64>() * 1e-6
    }

    /// Seconds of compute until the end effector entered the success
    /// tolerances for the rest of the episode; `None` when it ends outside them.
    pub fn time_to_success(&self, opts: &EpisodeOptions) -> Option<f64> {
        let within = |r: &LogRow| r.err_pos <= opts.success_pos && r.err_rot <= opts.success_rot;
        if !self.success(opts) || !self.rows.last().is_some_and(within) {
            return None;
        }
        let k = self.rows.iter().rposition(|r| !within(r)).map_or(0, |i| i + 1);
        Some(self.rows[..k].iter().map(|r| r.elapsed_us).sum::<f64>() * 1e-6)
    }

    /// Final pose within the success tolerances, however the episode ended.
    pub fn success(&self, opts: &EpisodeOptions) -> bool {
        self.final_err_pos <= opts.success_pos && self.final_err_rot <= opts.success_rot
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W, with_timing: bool) -> std::io::Result<()> {
        let Some(first) = self.rows.first() else {
            return Ok(());
        };
        let n = first.q.len();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("q_{i}")));
        header.extend(["ee_x", "ee_y", "ee_z", "err_pos", "err_rot", "min_clearance"].map(String::from));
        header.extend((1..=n).map(|i| format!("clearance_{i}")));
        if with_timing {
            header.push("iter_elapsed_us".into());
            header.push("iter_cpu_us".into());
        }
        writeln!(w, "{}", header.join(","))?;
        for r in &self.rows {
            let mut f: Vec<String> = vec![r.t.to_string()];
            f.extend(r.q.iter().map(|v| v.to_string()));
            f.extend(r.ee.iter().map(|v| v.to_string()));
            f.push(r.err_pos.to_string());
            f.push(r.err_rot.to_string());
            f.push(r.min_clearance.to_string());
            f.extend(r.clearances.iter().map(|v| v.to_string()));
            if with_timing {
                f.push(format!("{:.3}", r.elapsed_us));
                f.push(format!("{:.3}", r.cpu_us));
            }
            writeln!(w, "{}", f.join(","))?;
        }
        Ok(())
    }
}

/// CPU time consumed by the calling thread, seconds.
#[cfg(unix)]
pub fn thread_cpu_time() -> f64 {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid out-pointer and the clock id is a constant.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    debug_assert_eq!(rc, 0);
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

/// Wall-clock fallback where no per-thread clock is available.
#[cfg(not(unix))]
pub fn thread_cpu_time() -> f64 {
    static START: std::sync::OnceLock<Instant> = std::sync::OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

/// Iterate the controller from `q0` until it converges or stalls. It also
/// stops at the iteration cap or after the fixed duration.
pub fn run_episode(
    model: &RobotModel,
    scene: &PlanningScene,
    targets: &TargetTrack,
    q0: &[f64],
    cfg: &ControllerConfig,
    opts: &EpisodeOptions,
    mut hook: impl FnMut(f64, &StepResult),
) -> Result<EpisodeLog> {
    cfg.validate()?;
    model.check_dims(q0)?;
    let mut q = q0.to_vec();
    let mut t = 0.0;
    let mut rows = Vec::new();
    let mut residual: f64 = 0.0;
    let mut avoidance_steps = 0;
    let mut best_err = f64::INFINITY;
    let mut window_start = (f64::INFINITY, f64::INFINITY);
    let mut iterations = 0;
    let termination = loop {
        let target = targets.at(t);
        let (ep, er) = target_errors(model, &q, &target)?;
        let converged = ep <= cfg.eps_p && er <= cfg.eps_r;
        match opts.duration {
            Some(d) if t >= d - 1e-12 => break Termination::Duration,
            None if converged => break Termination::Converged,
            _ => {}
        }
        if iterations >= cfg.max_iters {
            break Termination::MaxIters;
        }
        // One tick: refresh and prune the clouds, then step.
        let tick = Instant::now();
        let cpu = thread_cpu_time();
        let dynamic = scene.dynamic_queries_at(model, t)?;
        let res = step_in_scene(model, &q, &target, scene, &dynamic, cfg)?;
        let tick_us = tick.elapsed().as_secs_f64() * 1e6;
        let cpu_us = (thread_cpu_time() - cpu) * 1e6;
        if res.escapes.iter().any(EscapeCommand::active) {
            avoidance_steps += 1;
            residual = residual.max(res.null_space_residual);
        }
        let min_clear = res.clearances.iter().copied().fold(f64::INFINITY, f64::min);
        rows.push(LogRow {
            t,
            q: q.clone(),
            ee: forward_kinematics(model, &q)?.ee.translation.into(),
            err_pos: ep,
            err_rot: er,
            min_clearance: min_clear,
            clearances: res.clearances.clone(),
            elapsed_us: tick_us,
            cpu_us,
        });
        hook(t, &res);
        q = res.q;
        t = (iterations + 1) as f64 * cfg.dt;
        iterations += 1;

        if opts.duration.is_none() {
            // Stall: neither the error nor the clearance moved over the window.
            best_err = best_err.min(ep);
            if iterations % cfg.stall_window == 1 || cfg.stall_window == 1 {
                if iterations > 1
                    && window_start.0 - best_err < cfg.stall_tol
                    && (window_start.1 - min_clear).abs() < cfg.stall_tol
                {
                    break Termination::Stalled;
                }
                window_start = (best_err, min_clear);
            }
        }
    };
    let target = targets.at(t);
    let (ep, er) = target_errors(model, &q, &target)?;
    // Final state row so path metrics include the last move.
    let fk = forward_kinematics(model, &q)?;
    let clearances = final_clearances(model, scene, &fk, t, cfg.r_eva);
    rows.push(LogRow {
        t,
        q: q.clone(),
        ee: fk.ee.translation.into(),
        err_pos: ep,
        err_rot: er,
        min_clearance: clearances.iter().copied().fold(f64::INFINITY, f64::min),
        clearances,
        elapsed_us: 0.0,
        cpu_us: 0.0,
    });
    Ok(EpisodeLog {
        rows,
        termination,
        iterations,
        final_err_pos: ep,
        final_err_rot: er,
        final_q: q,
        null_space_residual: residual,
        avoidance_steps,
    })
}

/// Smallest link-field value over each link's static and dynamic points at `t`.
pub fn clearance_at(model: &RobotModel, scene: &PlanningScene, q: &[f64], t: f64) -> Result<f64> {
    let fk = forward_kinematics(model, q)?;
    let dynamic = scene.dynamic_queries_at(model, t)?;
    let w2b = model.world_to_base();
    Ok((1..=model.dof())
        .map(|i| escape_from_fk(model, &fk, &w2b, i, Some(&scene.static_index[i - 1]), &dynamic[i - 1], 0.0).min_distance)
        .fold(f64::INFINITY, f64::min))
}

fn final_clearances(model: &RobotModel, scene: &PlanningScene, fk: &ForwardKinematics, t: f64, r_eva: f64) -> Vec<f64> {
    let dynamic = scene
        .dynamic_queries_at(model, t)
        .unwrap_or_else(|_| vec![Vec::new(); model.dof()]);
    let w2b = model.world_to_base();
    (1..=model.dof())
        .map(|i| escape_from_fk(model, fk, &w2b, i, Some(&scene.static_index[i - 1]), &dynamic[i - 1], r_eva).min_distance)
        .collect()
}
