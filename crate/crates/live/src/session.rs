//! One interactive session: controller state plus the inputs clients have sent.

use std::collections::HashMap;
use std::time::Instant;

use nalgebra::Vector3;

use reflex_core::harness::Scenario;
use reflex_core::kinematics::{forward_kinematics, Pose};
use reflex_core::reflex_controller::{step_in_scene, target_errors};
use reflex_core::scene::{update_dynamic, DynamicSource};
use reflex_core::sdf_grid::shapes::ShapeSpec;
use reflex_core::{Error, Result};

use crate::protocol::{
    ClientMessage, GeometryMsg, Handshake, LatencyStats, LinkGeometry, ObstacleGeometry, ObstacleState, PoseMsg,
    StateFrame, StaticGeometry, Status,
};

pub struct Session {
    scenario: Scenario,
    rate_hz: f64,
    q: Vec<f64>,
    tick: u64,
    /// Ticks since the last reset; scene time is this over the rate.
    local_ticks: u64,
    target: Option<Pose>,
    overrides: HashMap<String, Pose>,
    paused: bool,
    inputs: u64,
    // Stall tracking: best error at the start of the window and now.
    window_best: f64,
    best: f64,
    stalled: bool,
    lat_sum: f64,
    lat_sq: f64,
    lat_max: f64,
    lat_n: u64,
}

impl Session {
    pub fn new(scenario: Scenario, rate_hz: f64) -> Self {
        let q = scenario.file.start.clone();
        Self {
            scenario,
            rate_hz,
            q,
            tick: 0,
            local_ticks: 0,
            target: None,
            overrides: HashMap::new(),
            paused: false,
            inputs: 0,
            window_best: f64::INFINITY,
            best: f64::INFINITY,
            stalled: false,
            lat_sum: 0.0,
            lat_sq: 0.0,
            lat_max: 0.0,
            lat_n: 0,
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn scene_time(&self) -> f64 {
        self.local_ticks as f64 / self.rate_hz
    }

    /// Obstacles a client may move.
    pub fn posable_ids(&self) -> Vec<String> {
        self.obstacle_ids(true)
    }

    pub fn recorded_ids(&self) -> Vec<String> {
        self.obstacle_ids(false)
    }

    fn obstacle_ids(&self, posable: bool) -> Vec<String> {
        self.scenario
            .planning
            .scene
            .dynamic
            .iter()
            .filter(|o| matches!(o.source, DynamicSource::Shape { .. }) == posable)
            .map(|o| o.name.clone())
            .collect()
    }

    pub fn current_target(&self) -> Pose {
        self.target.unwrap_or_else(|| self.scenario.targets.at(self.scene_time()))
    }

    /// Apply one validated message. Takes effect from the next tick on.
    pub fn apply(&mut self, msg: ClientMessage) {
        self.inputs += 1;
        match msg {
            ClientMessage::SetObstaclePose { id, pose } => {
                self.overrides.insert(id, pose.to_pose());
            }
            ClientMessage::SetTarget { pose } => {
                self.target = Some(pose.to_pose());
                self.reset_stall();
            }
            ClientMessage::Pause => self.paused = true,
            ClientMessage::Resume => self.paused = false,
            ClientMessage::Reset => {
                self.q = self.scenario.file.start.clone();
                self.local_ticks = 0;
                self.target = None;
                self.overrides.clear();
                self.paused = false;
                self.reset_stall();
            }
        }
    }

    fn reset_stall(&mut self) {
        self.window_best = f64::INFINITY;
        self.best = f64::INFINITY;
        self.stalled = false;
    }

    fn obstacle_pose(&self, name: &str, source: &DynamicSource, t: f64) -> Option<Pose> {
        if let Some(p) = self.overrides.get(name) {
            return Some(*p);
        }
        let DynamicSource::Shape { keyframes, .. } = source else {
            return None;
        };
        let obj = self.scenario.planning.scene.dynamic.iter().find(|o| o.name == name)?;
        let (lo, hi) = obj.span();
        obj.pose_at(t.clamp(lo, hi)).ok().flatten().or(keyframes.first().map(|k| k.pose))
    }

    /// World points of every moving obstacle at scene time `t`. Trajectories
    /// hold their end poses; posed obstacles use the client's pose.
    fn dynamic_cloud(&self, t: f64) -> Result<Vec<Vector3<f64>>> {
        let mut out = Vec::new();
        for obj in &self.scenario.planning.scene.dynamic {
            match &obj.source {
                DynamicSource::Shape { body_points, .. } => {
                    let pose = self.obstacle_pose(&obj.name, &obj.source, t).expect("shape obstacles have a pose");
                    out.extend(body_points.iter().map(|p| pose.transform_point(p)));
                }
                DynamicSource::Raw { .. } => {
                    let (lo, hi) = obj.span();
                    out.extend(update_dynamic(obj, t.clamp(lo, hi))?.points);
                }
            }
        }
        Ok(out)
    }

    /// Run one controller iteration (unless paused) and describe the result.
    pub fn advance(&mut self) -> Result<StateFrame> {
        let model = self.scenario.model.clone();
        let cfg = &self.scenario.file.controller;
        let t = self.scene_time();
        let target = self.current_target();
        let started = Instant::now();
        let cloud = self.dynamic_cloud(t)?;
        let queries = self.scenario.planning.dynamic_queries_with(&model, &cloud);
        let (clearance, iter_us) = if self.paused {
            // Evaluate for the clearance readout but hold the arm still.
            (step_in_scene(&model, &self.q, &target, &self.scenario.planning, &queries, cfg)?.clearances, 0.0)
        } else {
            let res = match step_in_scene(&model, &self.q, &target, &self.scenario.planning, &queries, cfg) {
                Ok(r) => r,
                Err(Error::SingularityEscalation) => {
                    log::warn!("singular end-effector Jacobian at tick {}", self.tick);
                    return self.frame(t, &target, Vec::new(), 0.0, Status::Stalled);
                }
                Err(e) => return Err(e),
            };
            let us = started.elapsed().as_secs_f64() * 1e6;
            self.q = res.q;
            self.local_ticks += 1;
            self.lat_sum += us;
            self.lat_sq += us * us;
            self.lat_max = self.lat_max.max(us);
            self.lat_n += 1;
            (res.clearances, us)
        };
        let (ep, er) = target_errors(&model, &self.q, &target)?;
        let status = if self.paused {
            Status::Paused
        } else if ep <= cfg.eps_p && er <= cfg.eps_r {
            self.reset_stall();
            Status::Converged
        } else {
            self.best = self.best.min(ep);
            if self.local_ticks % cfg.stall_window as u64 == 0 {
                self.stalled = self.window_best - self.best < cfg.stall_tol;
                self.window_best = self.best;
            }
            if self.stalled {
                Status::Stalled
            } else {
                Status::Running
            }
        };
        self.frame(t, &target, clearance, iter_us, status)
    }

    fn frame(&mut self, t: f64, target: &Pose, clearance: Vec<f64>, iter_us: f64, status: Status) -> Result<StateFrame> {
        let model = &self.scenario.model;
        let fk = forward_kinematics(model, &self.q)?;
        let (ep, er) = target_errors(model, &self.q, target)?;
        let base = model.base_pose;
        let tick = self.tick;
        self.tick += 1;
        let n = self.lat_n.max(1) as f64;
        Ok(StateFrame {
            kind: "state".into(),
            tick,
            t,
            q: self.q.clone(),
            ee: (&base.compose(&fk.ee)).into(),
            links: fk.links.iter().map(|l| (&base.compose(l)).into()).collect(),
            clearance,
            err_pos: ep,
            err_rot: er,
            iter_us,
            status,
            target: target.into(),
            obstacles: self
                .scenario
                .planning
                .scene
                .dynamic
                .iter()
                .map(|o| ObstacleState {
                    id: o.name.clone(),
                    pose: self.obstacle_pose(&o.name, &o.source, t).as_ref().map(PoseMsg::from),
                })
                .collect(),
            inputs: self.inputs,
            latency: LatencyStats {
                mean_us: self.lat_sum / n,
                rms_us: (self.lat_sq / n).sqrt(),
                max_us: self.lat_max,
                samples: self.lat_n,
            },
        })
    }

    pub fn handshake(&self) -> Handshake {
        let sc = &self.scenario;
        let links = sc
            .model
            .links
            .iter()
            .map(|l| LinkGeometry {
                name: l.name.clone(),
                geometry: if l.shape.meshes.is_empty() {
                    GeometryMsg::primitives(&l.shape.primitives)
                } else {
                    let (lo, hi) = l.shape.bounds();
                    GeometryMsg::Bounds {
                        min: lo.into(),
                        max: hi.into(),
                    }
                },
            })
            .collect();
        let static_objects = sc
            .planning
            .scene
            .static_objects
            .iter()
            .zip(&sc.file.static_objects)
            .map(|(o, spec)| StaticGeometry {
                name: o.name.clone(),
                pose: (&o.pose).into(),
                geometry: shape_or_bounds(spec.geometry.shape.as_ref(), &o.sdf.spec),
            })
            .collect();
        let obstacles = sc
            .planning
            .scene
            .dynamic
            .iter()
            .map(|o| {
                let spec = sc.file.dynamic.iter().find(|d| d.name == o.name);
                let shape = spec.and_then(|d| d.geometry.as_ref()).and_then(|g| g.shape.clone());
                ObstacleGeometry {
                    id: o.name.clone(),
                    geometry: shape.map(|shape| GeometryMsg::Shape { shape }),
                    posable: matches!(o.source, DynamicSource::Shape { .. }),
                }
            })
            .collect();
        Handshake {
            kind: "hello".into(),
            scenario: sc.file.name.clone(),
            robot: sc.model.name.clone(),
            base: (&sc.model.base_pose).into(),
            links,
            static_objects,
            obstacles,
            target: (&self.current_target()).into(),
            rate_hz: self.rate_hz,
        }
    }
}

fn shape_or_bounds(shape: Option<&ShapeSpec>, spec: &reflex_core::sdf_grid::GridSpec) -> GeometryMsg {
    match shape {
        Some(s) => GeometryMsg::Shape { shape: s.clone() },
        None => GeometryMsg::Bounds {
            min: spec.origin.into(),
            max: spec.max_corner().into(),
        },
    }
}
