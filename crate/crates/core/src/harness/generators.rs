//! Seeded scenario generators: random box fields, a wall with a window, and
//! moving-obstacle scenes.

use std::f64::consts::FRAC_PI_2;
use std::path::PathBuf;
use std::sync::Arc;

use nalgebra::{DVector, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::scenario::{DynamicSpec, Geometry, ScenarioFile, StaticSpec, TargetSpec, TimedPose, WorldGrid};
use crate::baselines::{CollisionChecker, RrtConfig};
use crate::error::{Error, Result};
use crate::kinematics::{
    damped_pseudo_inverse, forward_kinematics, geometric_jacobian, orientation_error, JacobianTarget, Pose,
    PoseSpec, RobotModel,
};
use crate::reachability::{PruneMode, ReachOptions};
use crate::reflex_controller::{clearance_at, ControllerConfig, EpisodeOptions, PlanningScene};
use crate::scene::{Scene, StaticObject};
use crate::sdf_grid::shapes::{Primitive, ShapeSpec};

/// What every generator needs: the robot and where its description lives.
#[derive(Clone, Debug)]
pub struct GeneratorContext {
    pub model: Arc<RobotModel>,
    /// Written into generated scenario files.
    pub robot_path: PathBuf,
    pub reach: ReachOptions,
}

/// Clearance required at generated start and goal configurations.
pub const ENDPOINT_CLEARANCE: f64 = 0.05;
const MAX_TRIES: usize = 2000;

/// Damped least-squares IK toward a world pose. Returns the configuration once
/// within 1 mm / 0.01 rad, or `None`.
pub fn solve_ik(model: &RobotModel, seed: &[f64], target: &Pose, iters: usize) -> Option<Vec<f64>> {
    let target = model.world_to_base().compose(target);
    let mut q = seed.to_vec();
    for _ in 0..iters {
        let fk = forward_kinematics(model, &q).ok()?;
        let p_e = target.translation - fk.ee.translation;
        let w_e = orientation_error(&fk.ee.rotation, &target.rotation);
        if p_e.norm() < 1e-3 && w_e.norm() < 1e-2 {
            return Some(q);
        }
        let j = geometric_jacobian(model, &fk, JacobianTarget::EndEffector, &fk.ee.translation).stacked();
        let pinv = damped_pseudo_inverse(&j, 0.05).ok()?;
        let x = DVector::from_vec(vec![p_e.x, p_e.y, p_e.z, w_e.x, w_e.y, w_e.z]);
        let mut dq = pinv * x;
        let peak = dq.amax();
        if peak > 0.2 {
            dq *= 0.2 / peak;
        }
        for (v, d) in q.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        model.clamp_to_limits(&mut q);
    }
    None
}

fn box_shape(size: [f64; 3]) -> ShapeSpec {
    ShapeSpec::Primitive(Primitive::Box {
        size: Vector3::from(size),
        center: Vector3::zeros(),
        rpy: Vector3::zeros(),
    })
}

fn static_box(name: String, size: [f64; 3], center: [f64; 3]) -> StaticSpec {
    StaticSpec {
        name,
        geometry: Geometry::shape(box_shape(size)),
        pose: PoseSpec {
            xyz: center,
            rpy: [0.0; 3],
        },
    }
}

fn desk_world() -> WorldGrid {
    WorldGrid {
        min: [-1.4, -1.4, -0.2],
        max: [1.4, 1.4, 1.5],
        resolution: 0.02,
    }
}

/// Static-scene controller settings shared by the generated corpora.
pub fn static_controller() -> ControllerConfig {
    ControllerConfig {
        max_iters: 5000,
        escape_gain: 0.005,
        ee_escape_gain: 0.005,
        ..ControllerConfig::default()
    }
}

/// Joint sampling box for random configurations: yaw and wrists over one
/// turn, shoulder and elbow over the poses that keep the arm above the table.
fn random_config(model: &RobotModel, rng: &mut ChaCha8Rng) -> Vec<f64> {
    use std::f64::consts::PI;
    let ranges = [PI, 1.4, 2.6, PI, PI, PI];
    model
        .links
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let [lo, hi] = l.joint.limits;
            let r = ranges.get(i).copied().unwrap_or(PI);
            rng.random_range(lo.max(-r)..=hi.min(r))
        })
        .collect()
}

/// Every link end above the floor plane z = 0.
fn above_floor(model: &RobotModel, q: &[f64]) -> bool {
    let Ok(fk) = forward_kinematics(model, q) else {
        return false;
    };
    let b = model.base_pose;
    (0..model.dof()).all(|i| b.transform_point(&fk.link_end(model, i)).z > 0.05)
}

/// Side of the wall opening around the fixed dynamic-scene target.
const OPENING_EDGE: f64 = 0.35;

/// Distances from the base z-axis and from the shoulder that keep the arm
/// away from the column and stretch singularities.
const MIN_AXIS_DISTANCE: f64 = 0.3;
const MAX_SHOULDER_DISTANCE: f64 = 0.85;

/// The straight end-effector line between two configurations, and the wrist
/// point carried along it by the interpolated orientation, stay in the
/// well-conditioned shell. Both configurations share the elbow branch, so a
/// Cartesian tracker can follow the line in free space.
fn trackable(model: &RobotModel, a: &[f64], b: &[f64]) -> Result<bool> {
    if a.len() > 2 && a[2].signum() != b[2].signum() {
        return Ok(false);
    }
    let fa = forward_kinematics(model, a)?;
    let fb = forward_kinematics(model, b)?;
    let (pa, pb) = (fa.ee.translation, fb.ee.translation);
    let ra = UnitQuaternion::from_matrix(&fa.ee.rotation);
    let rb = UnitQuaternion::from_matrix(&fb.ee.rotation);
    // Wrist point: origin of the last link, fixed in the end-effector frame.
    let wrist = fa.ee.rotation.transpose() * (fa.links[model.dof() - 1].translation - pa);
    let shoulder = forward_kinematics(model, &vec![0.0; model.dof()])?.links[1].translation;
    let in_shell = |p: Vector3<f64>| p.xy().norm() >= MIN_AXIS_DISTANCE && (p - shoulder).norm() <= MAX_SHOULDER_DISTANCE;
    Ok((0..=20).all(|k| {
        let s = k as f64 / 20.0;
        let p = pa.lerp(&pb, s);
        let r = ra.try_slerp(&rb, s, 1e-9).unwrap_or(rb);
        in_shell(p) && (p + r * wrist - shoulder).norm() <= MAX_SHOULDER_DISTANCE
    }))
}

fn endpoint_ok(model: &RobotModel, planning: &PlanningScene, checker: &CollisionChecker, q: &[f64]) -> bool {
    above_floor(model, q)
        && !checker.in_collision(model, q)
        && clearance_at(model, planning, q, 0.0).is_ok_and(|c| c > ENDPOINT_CLEARANCE)
}

fn prepare(ctx: &GeneratorContext, statics: &[StaticSpec], world: &WorldGrid) -> Result<(PlanningScene, CollisionChecker)> {
    let objects = statics
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(StaticObject {
                name: s.name.clone(),
                sdf: s.geometry.build(&s.name, &format!("S_{i}"), std::path::Path::new("."))?,
                pose: s.pose.into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scene = Scene::new(objects, vec![], &world.spec()?)?;
    let planning = PlanningScene::new(&ctx.model, scene, PruneMode::Lossless { radius: 0.3 });
    let checker = CollisionChecker::from_planning(&ctx.model, &planning);
    Ok((planning, checker))
}

fn base_file(ctx: &GeneratorContext, name: String, world: WorldGrid) -> ScenarioFile {
    ScenarioFile {
        name,
        robot: ctx.robot_path.clone(),
        world_grid: world,
        static_objects: Vec::new(),
        dynamic: Vec::new(),
        start: Vec::new(),
        goal: None,
        targets: Vec::new(),
        controller: static_controller(),
        episode: EpisodeOptions::default(),
        rrt: RrtConfig::default(),
        reach: ctx.reach.clone(),
    }
}

/// `n_boxes` cubes of edge `edge` placed uniformly in the arm's reach box,
/// plus collision-free start and goal configurations at least 0.3 m apart.
pub fn generate_random_box_scene(ctx: &GeneratorContext, seed: u64, n_boxes: usize, edge: f64) -> Result<ScenarioFile> {
    let model = &ctx.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = desk_world();
    let reach = 1.08;
    for _ in 0..50 {
        let mut statics = Vec::new();
        while statics.len() < n_boxes {
            let c = [
                rng.random_range(-reach..reach),
                rng.random_range(-reach..reach),
                rng.random_range(edge / 2.0..reach + 0.1),
            ];
            // Keep the base column free; a box there blocks every configuration.
            if (c[0] * c[0] + c[1] * c[1]).sqrt() < 0.2 + edge / 2.0 {
                continue;
            }
            statics.push(static_box(format!("box_{}", statics.len()), [edge; 3], c));
        }
        let (planning, checker) = prepare(ctx, &statics, &world)?;
        let sample = |rng: &mut ChaCha8Rng| {
            (0..MAX_TRIES)
                .map(|_| random_config(model, rng))
                .find(|q| endpoint_ok(model, &planning, &checker, q))
        };
        let Some(start) = sample(&mut rng) else { continue };
        let start_ee = forward_kinematics(model, &start)?.ee.translation;
        let mut goal = None;
        for _ in 0..MAX_TRIES {
            let Some(q) = sample(&mut rng) else { break };
            if (forward_kinematics(model, &q)?.ee.translation - start_ee).norm() >= 0.3 && trackable(model, &start, &q)? {
                goal = Some(q);
                break;
            }
        }
        let Some(goal) = goal else { continue };
        let target = model.base_pose.compose(&forward_kinematics(model, &goal)?.ee);
        let mut file = base_file(ctx, format!("box_field_{seed}"), world);
        file.static_objects = statics;
        file.start = start;
        file.goal = Some(goal);
        file.targets = vec![TargetSpec::from_pose(0.0, &target)];
        file.rrt.seed = seed;
        return Ok(file);
    }
    Err(Error::Scenario(format!("box field seed {seed}: no valid start/goal after retries")))
}

/// Wall plane x = `WALL_X`, aperture center height.
pub const WALL_X: f64 = 0.5;
pub const WINDOW_Z: f64 = 0.55;
const WALL_THICKNESS: f64 = 0.06;
const WALL_HALF_WIDTH: f64 = 0.7;
const WALL_HEIGHT: f64 = 1.2;

/// Wall slabs around a square aperture of side `edge`. An aperture as large as
/// the wall leaves no slabs.
pub fn window_slabs(edge: f64) -> Vec<StaticSpec> {
    let h = edge / 2.0;
    let mut out = Vec::new();
    let mut push = |name: &str, y0: f64, y1: f64, z0: f64, z1: f64| {
        if y1 - y0 > 1e-9 && z1 - z0 > 1e-9 {
            out.push(static_box(
                name.into(),
                [WALL_THICKNESS, y1 - y0, z1 - z0],
                [WALL_X, 0.5 * (y0 + y1), 0.5 * (z0 + z1)],
            ));
        }
    };
    let (zlo, zhi) = ((WINDOW_Z - h).max(0.0), (WINDOW_Z + h).min(WALL_HEIGHT));
    push("wall_bottom", -WALL_HALF_WIDTH, WALL_HALF_WIDTH, 0.0, zlo);
    push("wall_top", -WALL_HALF_WIDTH, WALL_HALF_WIDTH, zhi, WALL_HEIGHT);
    push("wall_left", -WALL_HALF_WIDTH, (-h).max(-WALL_HALF_WIDTH), zlo, zhi);
    push("wall_right", h.min(WALL_HALF_WIDTH), WALL_HALF_WIDTH, zlo, zhi);
    out
}

/// Tool pointing along +x.
fn forward_rpy() -> [f64; 3] {
    [0.0, FRAC_PI_2, 0.0]
}

/// Nominal elbow-up configuration reaching forward.
fn forward_seed() -> Vec<f64> {
    vec![0.0, 0.3, 1.2, 0.07, 0.0, 0.0]
}

/// A wall with a square window of side `edge` and a fixed target behind it.
/// Starts are seeded end-effector poses in front of the aperture, so the
/// straight approach passes the opening.
pub fn generate_window_scene(ctx: &GeneratorContext, edge: f64, seed: u64) -> Result<ScenarioFile> {
    if !(edge > 0.0) {
        return Err(Error::Scenario("window edge must be > 0".into()));
    }
    let model = &ctx.model;
    let world = desk_world();
    let statics = window_slabs(edge);
    let (planning, checker) = prepare(ctx, &statics, &world)?;
    let target = Pose::from_xyz_rpy(Vector3::new(WALL_X + 0.25, 0.0, WINDOW_Z), Vector3::from(forward_rpy()));
    let goal = solve_ik(model, &forward_seed(), &target, 2000)
        .ok_or_else(|| Error::Scenario("window target unreachable".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reach = (edge / 2.0 - 0.05).clamp(0.0, 0.25);
    for _ in 0..MAX_TRIES {
        let pos = Vector3::new(
            rng.random_range(0.15..0.3),
            rng.random_range(-reach..=reach),
            WINDOW_Z + rng.random_range(-reach..=reach),
        );
        let rpy = Vector3::new(
            rng.random_range(-0.3..0.3),
            FRAC_PI_2 + rng.random_range(-0.3..0.3),
            rng.random_range(-0.3..0.3),
        );
        let Some(start) = solve_ik(model, &forward_seed(), &Pose::from_xyz_rpy(pos, rpy), 2000) else {
            continue;
        };
        if !endpoint_ok(model, &planning, &checker, &start) {
            continue;
        }
        let mut file = base_file(ctx, format!("window_{seed}"), world);
        file.static_objects = statics;
        file.start = start;
        file.goal = Some(goal);
        file.targets = vec![TargetSpec::from_pose(0.0, &target)];
        file.rrt.seed = seed;
        return Ok(file);
    }
    Err(Error::Scenario(format!("window seed {seed}: no valid start")))
}

/// Settings for moving-obstacle scenes: 10 ms ticks, run for a fixed duration.
pub fn dynamic_controller() -> ControllerConfig {
    ControllerConfig {
        dt: 0.01,
        max_iters: 100_000,
        escape_gain: 0.02,
        ee_escape_gain: 0.05,
        // About 3 rad/s at this tick rate.
        max_joint_step: 0.03,
        ..ControllerConfig::default()
    }
}

/// Kinds of moving-obstacle scene.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    /// Fixed target, a ball approaching the tool head-on and receding.
    StaticTarget,
    /// `StaticTarget` with the target inside a square wall opening.
    Opening,
    /// Target sliding side to side behind a window while a ball passes in front of it.
    MovingTarget,
    /// Large body swept back and forth near the arm for a long run; latency benchmark.
    Torso,
}

/// Moving-obstacle scenes. Seeds vary the obstacle path offsets and direction.
pub fn generate_crossing_scene(ctx: &GeneratorContext, kind: CrossingKind, seed: u64) -> Result<ScenarioFile> {
    let model = &ctx.model;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let world = desk_world();
    let mut file = base_file(ctx, format!("{kind:?}_{seed}").to_lowercase(), world);
    file.controller = dynamic_controller();
    let home = Pose::from_xyz_rpy(Vector3::new(0.55, 0.0, 0.45), Vector3::from(forward_rpy()));
    file.start = solve_ik(model, &forward_seed(), &home, 2000).ok_or_else(|| Error::Scenario("home unreachable".into()))?;
    let dir = if rng.random::<bool>() { 1.0 } else { -1.0 };
    match kind {
        CrossingKind::StaticTarget | CrossingKind::Opening => {
            // The ball comes head-on along the approach axis at 5 cm/s, pushes
            // the tool back, and recedes. `Opening` puts the target inside a
            // wall opening.
            let target = Pose::from_xyz_rpy(Vector3::new(WALL_X + 0.25, 0.0, WINDOW_Z), Vector3::from(forward_rpy()));
            file.start = solve_ik(model, &forward_seed(), &target, 2000)
                .ok_or_else(|| Error::Scenario("target unreachable".into()))?;
            if kind == CrossingKind::Opening {
                file.static_objects = window_slabs(OPENING_EDGE);
            }
            file.targets = vec![TargetSpec::from_pose(0.0, &target)];
            let side = Vector3::new(0.0, rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.03));
            let near = target.translation + Vector3::new(0.05, 0.0, 0.0) + side;
            let far = near + Vector3::new(0.4, 0.0, 0.0);
            let leg = 0.4 / 0.05;
            file.dynamic = vec![ball("ball", 0.08, vec![timed(0.0, far), timed(leg, near), timed(2.0 * leg, far)])];
            file.episode.duration = Some(2.0 * leg);
        }
        CrossingKind::MovingTarget => {
            // Target slides ±0.15 m along y at 5 cm/s; the ball crosses above it.
            let speed = 0.05;
            let amp = 0.15;
            let leg = 2.0 * amp / speed;
            let p = |y: f64| {
                let mut t = home;
                t.translation.y = y;
                t
            };
            file.targets = vec![
                TargetSpec::from_pose(0.0, &p(0.0)),
                TargetSpec::from_pose(leg / 2.0, &p(amp)),
                TargetSpec::from_pose(1.5 * leg, &p(-amp)),
                TargetSpec::from_pose(2.0 * leg, &p(0.0)),
            ];
            let z = home.translation.z + rng.random_range(0.3..0.4);
            let x = rng.random_range(0.25..0.4);
            let duration = 2.0 * leg;
            file.dynamic = vec![ball(
                "ball",
                0.08,
                vec![
                    timed(0.0, Vector3::new(x, -dir * 0.8, z)),
                    timed(duration, Vector3::new(x, dir * 0.8, z)),
                ],
            )];
            file.episode.duration = Some(duration);
        }
        CrossingKind::Torso => {
            // Upright cylinder swaying beside the arm for 5000 ticks.
            let dt = file.controller.dt;
            let duration = 5000.0 * dt;
            let mut keys = Vec::new();
            let period = 4.0;
            let mut t = 0.0;
            while t <= duration + 1e-9 {
                let phase = (t / period * std::f64::consts::TAU).sin();
                keys.push(timed(t, Vector3::new(0.35, dir * (0.45 + 0.1 * phase), 0.5)));
                t += 0.25;
            }
            file.targets = vec![TargetSpec::from_pose(0.0, &home)];
            file.dynamic = vec![DynamicSpec {
                name: "torso".into(),
                geometry: Some(Geometry {
                    resolution: 0.01,
                    padding: 0.05,
                    ..Geometry::shape(ShapeSpec::Primitive(Primitive::Cylinder {
                        a: Vector3::new(0.0, 0.0, -0.3),
                        b: Vector3::new(0.0, 0.0, 0.3),
                        radius: 0.15,
                    }))
                }),
                trajectory: keys,
                raw: None,
                interpolate: true,
                cap: 2000,
                interior: false,
            }];
            file.episode.duration = Some(duration);
        }
    }
    Ok(file)
}

fn timed(t: f64, p: Vector3<f64>) -> TimedPose {
    TimedPose {
        t,
        xyz: p.into(),
        rpy: [0.0; 3],
    }
}

fn ball(name: &str, radius: f64, trajectory: Vec<TimedPose>) -> DynamicSpec {
    DynamicSpec {
        name: name.into(),
        geometry: Some(Geometry {
            padding: 0.05,
            ..Geometry::shape(ShapeSpec::Primitive(Primitive::Sphere {
                center: Vector3::zeros(),
                radius,
            }))
        }),
        trajectory,
        raw: None,
        interpolate: true,
        cap: crate::scene::DEFAULT_POINT_CAP,
        interior: false,
    }
}
