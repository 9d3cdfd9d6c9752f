//! Scenario files: robot, world grid, static and dynamic objects, targets and
//! controller settings in one JSON document.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::baselines::RrtConfig;
use crate::error::{Error, Result};
use crate::kinematics::{load_robot, Pose, PoseSpec, RobotModel};
use crate::reachability::{attach_reach, ReachOptions};
use crate::reflex_controller::{ControllerConfig, EpisodeOptions, PlanningScene, TargetTrack};
use crate::scene::{DynamicObject, Keyframe, PointCloud, Scene, StaticObject, DEFAULT_POINT_CAP};
use crate::sdf_grid::shapes::{voxelize, Shape, ShapeSpec};
use crate::sdf_grid::{construct_sdf_edt, io, GridSpec, SdfGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldGrid {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub resolution: f64,
}

impl WorldGrid {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::covering(Vector3::from(self.min), Vector3::from(self.max), self.resolution, 0.0)
    }
}

fn default_object_resolution() -> f64 {
    0.02
}
fn default_object_padding() -> f64 {
    0.1
}

/// Geometry of a scene object: a shape voxelized on load, or a prebuilt grid file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<PathBuf>,
    #[serde(default = "default_object_resolution")]
    pub resolution: f64,
    #[serde(default = "default_object_padding")]
    pub padding: f64,
}

impl Geometry {
    pub fn shape(shape: ShapeSpec) -> Self {
        Self {
            shape: Some(shape),
            grid: None,
            resolution: default_object_resolution(),
            padding: default_object_padding(),
        }
    }

    pub(crate) fn build(&self, name: &str, frame: &str, base_dir: &Path) -> Result<SdfGrid> {
        match (&self.shape, &self.grid) {
            (Some(spec), None) => {
                let shape = Shape::resolve(spec, base_dir)?;
                let grid = shape.grid_spec(self.resolution, self.padding)?;
                construct_sdf_edt(&voxelize(&shape, &grid))
                    .map(|g| g.with_frame(frame))
                    .map_err(|e| Error::Scenario(format!("object `{name}`: {e}")))
            }
            (None, Some(path)) => Ok(io::load(&base_dir.join(path))?.0.with_frame(frame)),
            _ => Err(Error::Scenario(format!("object `{name}` needs exactly one of `shape` or `grid`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticSpec {
    pub name: String,
    #[serde(flatten)]
    pub geometry: Geometry,
    #[serde(default)]
    pub pose: PoseSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimedPose {
    pub t: f64,
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl TimedPose {
    pub fn pose(&self) -> Pose {
        PoseSpec {
            xyz: self.xyz,
            rpy: self.rpy,
        }
        .into()
    }
}

fn default_cap() -> usize {
    DEFAULT_POINT_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicSpec {
    pub name: String,
    #[serde(flatten)]
    pub geometry: Option<Geometry>,
    #[serde(default)]
    pub trajectory: Vec<TimedPose>,
    /// JSON file of `[{stamp, points: [[x, y, z], ...]}, ...]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<PathBuf>,
    #[serde(default)]
    pub interpolate: bool,
    #[serde(default = "default_cap")]
    pub cap: usize,
    /// Use every voxel with value ≤ 0 instead of only the surface.
    #[serde(default)]
    pub interior: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    #[serde(default)]
    pub t: f64,
    pub pos: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl TargetSpec {
    pub fn pose(&self) -> Pose {
        Pose::from_xyz_rpy(Vector3::from(self.pos), Vector3::from(self.rpy))
    }

    pub fn from_pose(t: f64, pose: &Pose) -> Self {
        let spec = PoseSpec::from(pose);
        Self {
            t,
            pos: spec.xyz,
            rpy: spec.rpy,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub name: String,
    /// Robot description, relative to the scenario file.
    pub robot: PathBuf,
    pub world_grid: WorldGrid,
    #[serde(default, rename = "static")]
    pub static_objects: Vec<StaticSpec>,
    #[serde(default)]
    pub dynamic: Vec<DynamicSpec>,
    /// Initial joint configuration.
    pub start: Vec<f64>,
    /// Goal configuration for joint-space planners; reflex uses `targets`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<Vec<f64>>,
    pub targets: Vec<TargetSpec>,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub episode: EpisodeOptions,
    #[serde(default)]
    pub rrt: RrtConfig,
    #[serde(default)]
    pub reach: ReachOptions,
}

#[derive(Deserialize)]
struct RawFrame {
    stamp: f64,
    points: Vec<[f64; 3]>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Scenario(format!("scenario: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn validate(&self, model: &RobotModel) -> Result<()> {
        let bad = |m: String| Err(Error::Scenario(m));
        if self.start.len() != model.dof() {
            return bad(format!("start has {} joints, robot has {}", self.start.len(), model.dof()));
        }
        if let Some(g) = &self.goal {
            if g.len() != model.dof() {
                return bad(format!("goal has {} joints, robot has {}", g.len(), model.dof()));
            }
        }
        if self.targets.is_empty() {
            return bad("scenario has no targets".into());
        }
        if self.targets.windows(2).any(|w| w[1].t <= w[0].t) {
            return bad("target stamps must increase".into());
        }
        self.controller
            .validate()
            .map_err(|e| Error::Scenario(format!("controller: {e}")))?;
        Ok(())
    }

    /// Build the scene against an already loaded robot.
    pub fn build(&self, base_dir: &Path, model: Arc<RobotModel>) -> Result<Scenario> {
        self.validate(&model)?;
        let world = self
            .world_grid
            .spec()
            .map_err(|e| Error::Scenario(format!("world grid: {e}")))?;
        let static_objects = self
            .static_objects
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(StaticObject {
                    name: s.name.clone(),
                    sdf: s.geometry.build(&s.name, &format!("S_{i}"), base_dir)?,
                    pose: s.pose.into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let dynamic = self
            .dynamic
            .iter()
            .map(|d| self.build_dynamic(d, base_dir))
            .collect::<Result<Vec<_>>>()?;
        let scene = Scene::new(static_objects, dynamic, &world)?;
        let planning = PlanningScene::new(&model, scene, self.controller.prune);
        let targets = TargetTrack {
            keyframes: self.targets.iter().map(|t| (t.t, t.pose())).collect(),
        };
        Ok(Scenario {
            file: self.clone(),
            model,
            planning,
            targets,
        })
    }

    fn build_dynamic(&self, d: &DynamicSpec, base_dir: &Path) -> Result<DynamicObject> {
        match (&d.geometry, &d.raw) {
            (Some(g), None) if g.shape.is_some() || g.grid.is_some() => {
                let sdf = g.build(&d.name, &format!("D_{}", d.name), base_dir)?;
                let keyframes = d
                    .trajectory
                    .iter()
                    .map(|k| Keyframe { t: k.t, pose: k.pose() })
                    .collect();
                DynamicObject::from_shape(d.name.clone(), &sdf, keyframes, d.interpolate, d.cap, d.interior)
            }
            (_, Some(path)) => {
                let path = base_dir.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let frames: Vec<RawFrame> = serde_json::from_str(&text)
                    .map_err(|e| Error::Scenario(format!("raw stream `{}`: {e}", path.display())))?;
                let clouds = frames
                    .into_iter()
                    .map(|f| PointCloud::new(f.points.into_iter().map(Vector3::from).collect(), f.stamp))
                    .collect::<Result<Vec<_>>>()?;
                DynamicObject::from_raw(d.name.clone(), clouds)
            }
            _ => Err(Error::Scenario(format!(
                "dynamic object `{}` needs a shape, a grid or a raw stream",
                d.name
            ))),
        }
    }
}

/// Load a robot and attach reach fields for links that have none.
pub fn load_model(path: &Path, reach: &ReachOptions) -> Result<RobotModel> {
    let mut model = load_robot(path)?;
    attach_reach(&mut model, reach)?;
    Ok(model)
}

/// Load a scenario file together with its robot.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let file = ScenarioFile::load(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let model = load_model(&base.join(&file.robot), &file.reach)?;
    file.build(base, Arc::new(model))
}

/// A scenario ready to run.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub model: Arc<RobotModel>,
    pub planning: PlanningScene,
    pub targets: TargetTrack,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_are_scenario_errors() {
        assert!(matches!(ScenarioFile::parse("{"), Err(Error::Scenario(_))));
        assert!(matches!(ScenarioFile::parse("{\"robot\": \"r.json\"}"), Err(Error::Scenario(_))));
    }

    #[test]
    fn round_trip() {
        let text = r#"{
            "name": "t", "robot": "r.json",
            "world_grid": {"min": [-1, -1, 0], "max": [1, 1, 1], "resolution": 0.05},
            "static": [{"name": "b", "shape": {"primitive": "box", "size": [0.2, 0.2, 0.2]}, "pose": {"xyz": [0.5, 0, 0.3]}}],
            "dynamic": [{"name": "ball", "shape": {"primitive": "sphere", "radius": 0.1},
                         "trajectory": [{"t": 0, "xyz": [0, 0.5, 0.5]}, {"t": 1, "xyz": [0, -0.5, 0.5]}]}],
            "start": [0, 0], "targets": [{"pos": [0.5, 0, 0.5]}]
        }"#;
        let f = ScenarioFile::parse(text).unwrap();
        assert_eq!(f.static_objects.len(), 1);
        assert!(f.dynamic[0].geometry.as_ref().unwrap().shape.is_some());
        assert_eq!(ScenarioFile::parse(&f.to_json()).unwrap(), f);
    }
}
