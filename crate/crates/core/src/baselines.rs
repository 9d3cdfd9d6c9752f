//! RRT-Connect over joint space with field-based collision checks, for comparison.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, RobotModel};
use crate::reachability::PruneMode;
use crate::reflex_controller::PlanningScene;
use crate::scene::{enclosure_bounds, PointIndex, Scene};

/// Configuration collision test against the static scene.
#[derive(Clone, Debug)]
pub struct CollisionChecker {
    /// World points per link that can touch it (pruned by reach).
    pub points: Vec<PointIndex>,
    /// A point collides when the link field there is below this.
    pub margins: Vec<f64>,
}

impl CollisionChecker {
    /// Margins default to each link grid's resolution.
    pub fn new(model: &RobotModel, scene: &Scene) -> Self {
        let planning = PlanningScene::new(model, scene.clone(), PruneMode::Lossless { radius: 0.0 });
        Self {
            points: planning.static_index,
            margins: model.links.iter().map(|l| l.sdf.spec.resolution).collect(),
        }
    }

    pub fn from_planning(model: &RobotModel, scene: &PlanningScene) -> Self {
        Self {
            points: scene.static_index.clone(),
            margins: model.links.iter().map(|l| l.sdf.spec.resolution).collect(),
        }
    }

    pub fn in_collision(&self, model: &RobotModel, q: &[f64]) -> bool {
        let Ok(fk) = forward_kinematics(model, q) else {
            return true;
        };
        let w2b = model.world_to_base();
        model.links.iter().enumerate().any(|(i, link)| {
            let to_link = fk.links[i].inverse().compose(&w2b);
            let (lo, hi) = enclosure_bounds(&link.sdf.spec, &to_link.inverse());
            self.points[i].any_near(&lo, &hi, |p| {
                let local = to_link.transform_point(p);
                link.sdf.spec.contains(&local) && link.sdf.query(&local) < self.margins[i]
            })
        })
    }

    /// Check `a → b` at `per_step` samples per `step` of joint-space length.
    pub fn edge_free(&self, model: &RobotModel, a: &[f64], b: &[f64], step: f64, per_step: usize) -> bool {
        let len = dist(a, b);
        let segments = ((len / step).ceil() as usize).max(1) * per_step;
        (1..=segments).all(|s| {
            let t = s as f64 / segments as f64;
            let q: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + (y - x) * t).collect();
            !self.in_collision(model, &q)
        })
    }
}

pub fn config_in_collision(model: &RobotModel, scene: &Scene, q: &[f64]) -> bool {
    CollisionChecker::new(model, scene).in_collision(model, q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RrtConfig {
    /// Extension step, radians.
    pub step: f64,
    pub goal_bias: f64,
    /// Seconds.
    pub max_time: f64,
    pub seed: u64,
    /// Hard cap on extension rounds, for reproducibility independent of speed.
    pub max_iters: usize,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            step: 0.25,
            goal_bias: 0.05,
            max_time: 10.0,
            seed: 0,
            max_iters: 100_000,
        }
    }
}

/// Edge samples per step while planning; the validity recheck uses half as many.
pub const EDGE_CHECKS_PER_STEP: usize = 4;

#[derive(Clone, Debug)]
pub struct RrtResult {
    pub path: Vec<Vec<f64>>,
    pub iterations: usize,
    /// Wall-clock planning seconds.
    pub elapsed: f64,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

struct Tree {
    nodes: Vec<Vec<f64>>,
    parent: Vec<usize>,
}

impl Tree {
    fn new(root: Vec<f64>) -> Self {
        Self {
            nodes: vec![root],
            parent: vec![usize::MAX],
        }
    }

    fn nearest(&self, q: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = n.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>();
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn push(&mut self, q: Vec<f64>, parent: usize) -> usize {
        self.nodes.push(q);
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    fn branch(&self, mut i: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        while i != usize::MAX {
            out.push(self.nodes[i].clone());
            i = self.parent[i];
        }
        out
    }
}

enum Extend {
    Trapped,
    Advanced(usize),
    Reached(usize),
}

fn extend(
    tree: &mut Tree,
    q: &[f64],
    model: &RobotModel,
    checker: &CollisionChecker,
    step: f64,
) -> Extend {
    let near = tree.nearest(q);
    let from = tree.nodes[near].clone();
    let d = dist(&from, q);
    let (to, reached) = if d <= step {
        (q.to_vec(), true)
    } else {
        let s = step / d;
        (from.iter().zip(q).map(|(a, b)| a + (b - a) * s).collect(), false)
    };
    if !checker.edge_free(model, &from, &to, step, EDGE_CHECKS_PER_STEP) {
        return Extend::Trapped;
    }
    let id = tree.push(to, near);
    if reached {
        Extend::Reached(id)
    } else {
        Extend::Advanced(id)
    }
}

/// Bidirectional RRT with greedy connect.
pub fn rrt_connect_plan(
    model: &RobotModel,
    checker: &CollisionChecker,
    q_start: &[f64],
    q_goal: &[f64],
    cfg: &RrtConfig,
) -> Result<RrtResult> {
    model.check_dims(q_start)?;
    model.check_dims(q_goal)?;
    if !(cfg.step > 0.0) || !(0.0..=1.0).contains(&cfg.goal_bias) {
        return Err(Error::InvalidConfig("rrt step must be > 0 and goal_bias in [0, 1]".into()));
    }
    if checker.in_collision(model, q_start) {
        return Err(Error::InvalidEndpoint("start"));
    }
    if checker.in_collision(model, q_goal) {
        return Err(Error::InvalidEndpoint("goal"));
    }
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut a = Tree::new(q_start.to_vec());
    let mut b = Tree::new(q_goal.to_vec());
    // `a` grows from the start when false.
    let mut swapped = false;
    for iter in 0..cfg.max_iters {
        if start.elapsed().as_secs_f64() > cfg.max_time {
            return Err(Error::Timeout(cfg.max_time));
        }
        let q_rand: Vec<f64> = if rng.random::<f64>() < cfg.goal_bias {
            b.nodes[0].clone()
        } else {
            model
                .links
                .iter()
                .map(|l| rng.random_range(l.joint.limits[0]..=l.joint.limits[1]))
                .collect()
        };
        let new = match extend(&mut a, &q_rand, model, checker, cfg.step) {
            Extend::Trapped => None,
            Extend::Advanced(i) | Extend::Reached(i) => Some(i),
        };
        if let Some(new) = new {
            let target = a.nodes[new].clone();
            // Connect: keep extending `b` toward the new node.
            loop {
                match extend(&mut b, &target, model, checker, cfg.step) {
                    Extend::Trapped => break,
                    Extend::Advanced(_) => continue,
                    Extend::Reached(j) => {
                        let mut from_a = a.branch(new);
                        from_a.reverse();
                        let from_b = b.branch(j);
                        // `target` appears at the end of from_a and the start of from_b.
                        from_a.extend(from_b.into_iter().skip(1));
                        if swapped {
                            from_a.reverse();
                        }
                        return Ok(RrtResult {
                            path: from_a,
                            iterations: iter + 1,
                            elapsed: start.elapsed().as_secs_f64(),
                        });
                    }
                }
            }
        }
        std::mem::swap(&mut a, &mut b);
        swapped = !swapped;
    }
    Err(Error::MaxIters(cfg.max_iters))
}

/// Σ‖Δq‖ along the path.
pub fn joint_path_length(path: &[Vec<f64>]) -> f64 {
    path.windows(2).map(|w| dist(&w[0], &w[1])).sum()
}

/// End-effector distance travelled, sampling each edge at `step` resolution.
pub fn ee_path_length(model: &RobotModel, path: &[Vec<f64>], step: f64) -> Result<f64> {
    let mut total = 0.0;
    let Some(first) = path.first() else {
        return Ok(0.0);
    };
    let mut prev = forward_kinematics(model, first)?.ee.translation;
    for w in path.windows(2) {
        let n = ((dist(&w[0], &w[1]) / step).ceil() as usize).max(1);
        for s in 1..=n {
            let t = s as f64 / n as f64;
            let q: Vec<f64> = w[0].iter().zip(&w[1]).map(|(x, y)| x + (y - x) * t).collect();
            let p = forward_kinematics(model, &q)?.ee.translation;
            total += (p - prev).norm();
            prev = p;
        }
    }
    Ok(total)
}

/// Every edge re-checked at half the planning sample density.
pub fn path_is_valid(model: &RobotModel, checker: &CollisionChecker, path: &[Vec<f64>], step: f64) -> bool {
    path.windows(2)
        .all(|w| checker.edge_free(model, &w[0], &w[1], step, EDGE_CHECKS_PER_STEP / 2))
        && path.first().is_some_and(|q| !checker.in_collision(model, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::test_models::planar;
    use crate::kinematics::Pose;
    use nalgebra::Vector3;
    use crate::scene::StaticObject;
    use crate::sdf_grid::construct_sdf_edt;
    use crate::sdf_grid::shapes::{voxelize, Primitive, Shape};
    use crate::sdf_grid::GridSpec;
    use std::f64::consts::PI;

    fn box_object(center: Vector3<f64>, size: f64) -> StaticObject {
        let shape = Shape::from_primitive(Primitive::Box {
            size: Vector3::new(size, size, 0.4),
            center: Vector3::zeros(),
            rpy: Vector3::zeros(),
        });
        let spec = shape.grid_spec(0.02, 0.1).unwrap();
        StaticObject {
            name: "box".into(),
            sdf: construct_sdf_edt(&voxelize(&shape, &spec)).unwrap(),
            pose: Pose::from_translation(center),
        }
    }

    fn world() -> GridSpec {
        GridSpec::new(Vector3::new(-2.2, -2.2, -0.3), 0.02, [220, 220, 30]).unwrap()
    }

    #[test]
    fn empty_scene_never_collides() {
        let m = planar(&[1.0, 0.8]);
        let c = CollisionChecker::new(&m, &Scene::default());
        assert!(!c.in_collision(&m, &[0.3, -1.0]));
        assert!(!config_in_collision(&m, &Scene::default(), &[2.0, 2.0]));
    }

    #[test]
    fn link_inside_box_collides() {
        let m = planar(&[1.0, 0.8]);
        let scene = Scene::new(vec![box_object(Vector3::new(0.5, 0.0, 0.0), 0.3)], vec![], &world()).unwrap();
        let c = CollisionChecker::new(&m, &scene);
        assert!(c.in_collision(&m, &[0.0, 0.0]));
        assert!(!c.in_collision(&m, &[PI / 2.0, 0.0]));
    }

    #[test]
    fn plans_around_an_obstacle() {
        let m = planar(&[1.0, 0.8]);
        let scene = Scene::new(vec![box_object(Vector3::new(1.2, 0.9, 0.0), 0.4)], vec![], &world()).unwrap();
        let c = CollisionChecker::new(&m, &scene);
        let (qs, qg) = ([0.0, 0.0], [PI / 2.0, 0.0]);
        let r = rrt_connect_plan(&m, &c, &qs, &qg, &RrtConfig::default()).unwrap();
        assert_eq!(r.path.first().unwrap().as_slice(), qs);
        assert_eq!(r.path.last().unwrap().as_slice(), qg);
        assert!(path_is_valid(&m, &c, &r.path, 0.25));
        let again = rrt_connect_plan(&m, &c, &qs, &qg, &RrtConfig::default()).unwrap();
        assert_eq!(again.path, r.path);
        assert!(joint_path_length(&r.path) >= PI / 2.0 - 1e-12);
        assert!(ee_path_length(&m, &r.path, 0.05).unwrap() > 0.0);
    }

    #[test]
    fn free_space_is_nearly_straight() {
        let m = planar(&[1.0, 0.8]);
        let c = CollisionChecker::new(&m, &Scene::default());
        let r = rrt_connect_plan(&m, &c, &[0.0, 0.0], &[1.0, -1.0], &RrtConfig::default()).unwrap();
        assert!(joint_path_length(&r.path) <= 2f64.sqrt() * 1.5);
    }

    #[test]
    fn endpoint_in_obstacle_rejected() {
        let m = planar(&[1.0, 0.8]);
        let scene = Scene::new(vec![box_object(Vector3::new(0.5, 0.0, 0.0), 0.3)], vec![], &world()).unwrap();
        let c = CollisionChecker::new(&m, &scene);
        assert!(matches!(
            rrt_connect_plan(&m, &c, &[PI / 2.0, 0.0], &[0.0, 0.0], &RrtConfig::default()),
            Err(Error::InvalidEndpoint("goal"))
        ));
    }
}
