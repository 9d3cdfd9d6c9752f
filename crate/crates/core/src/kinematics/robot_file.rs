//! JSON robot descriptions.
//!
//! ```json
//! { "name": "arm",
//!   "base": {"xyz": [0,0,0], "rpy": [0,0,0]},
//!   "tool": {"xyz": [0,0,0.08]},
//!   "grid": {"resolution": 0.01, "padding": 0.3},
//!   "links": [
//!     { "name": "shoulder",
//!       "joint": {"kind": "revolute", "axis": [0,0,1],
//!                 "origin": {"xyz": [0,0,0], "rpy": [0,0,0]}, "limits": [-3.14, 3.14]},
//!       "shape": {"primitive": "capsule", "a": [0,0,0], "b": [0,0,0.1], "radius": 0.06} } ] }
//! ```
//!
//! A link may instead point at a prebuilt grid (`"sdf": "link.sdfg"`) and a
//! prebuilt reach grid (`"reach": "reach.sdfg"`). Paths are relative to the file.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Joint, JointKind, Link, Pose, PoseSpec, RobotModel};
use crate::error::{Error, Result};
use crate::reachability::ReachSdf;
use crate::sdf_grid::shapes::{voxelize, Shape, ShapeSpec};
use crate::sdf_grid::{construct_sdf_edt, gradient_field, io};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Space around each link's shape covered by its grid; must exceed the
    /// avoidance activation radius.
    #[serde(default = "default_padding")]
    pub padding: f64,
}

fn default_resolution() -> f64 {
    0.01
}
fn default_padding() -> f64 {
    0.3
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            resolution: default_resolution(),
            padding: default_padding(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointDescription {
    pub kind: JointKind,
    pub axis: [f64; 3],
    #[serde(default)]
    pub origin: PoseSpec,
    pub limits: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkDescription {
    pub name: String,
    /// Defaults to the previous link (or the base for the first link).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    pub joint: JointDescription,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ShapeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sdf: Option<PathBuf>,
    /// Link end point in the link frame; defaults to the next joint's origin.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reach: Option<PathBuf>,
    /// Sampling slack recorded when the reach grid was built.
    #[serde(default)]
    pub reach_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotDescription {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub base: PoseSpec,
    #[serde(default)]
    pub tool: PoseSpec,
    #[serde(default)]
    pub grid: GridOptions,
    pub links: Vec<LinkDescription>,
}

impl RobotDescription {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("robot description: {e}")))
    }

    fn check_serial(&self) -> Result<()> {
        if self.links.is_empty() {
            return Err(Error::Parse("robot has no links".into()));
        }
        for (i, link) in self.links.iter().enumerate() {
            let expected = if i == 0 {
                None
            } else {
                Some(self.links[i - 1].name.as_str())
            };
            match (link.parent.as_deref(), expected) {
                (None, _) | (Some("base"), None) => {}
                (Some(p), Some(e)) if p == e => {}
                (Some(p), _) => {
                    return Err(Error::NonSerialChain(format!(
                        "link `{}` has parent `{p}`, expected `{}`",
                        link.name,
                        expected.unwrap_or("base")
                    )))
                }
            }
        }
        let mut names: Vec<&str> = self.links.iter().map(|l| l.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::NonSerialChain("duplicate link names".into()));
        }
        Ok(())
    }

    /// Voxelize every link and assemble the model.
    pub fn build(&self, base_dir: &Path) -> Result<RobotModel> {
        self.check_serial()?;
        let n = self.links.len();
        let tool: Pose = self.tool.into();
        let links = self
            .links
            .par_iter()
            .enumerate()
            .map(|(i, desc)| {
                let end = match desc.end {
                    Some(e) => Vector3::from(e),
                    None if i + 1 < n => Vector3::from(self.links[i + 1].joint.origin.xyz),
                    None => tool.translation,
                };
                self.build_link(desc, i, end, base_dir)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RobotModel {
            name: self.name.clone(),
            links,
            base_pose: self.base.into(),
            tool,
        })
    }

    fn build_link(
        &self,
        desc: &LinkDescription,
        index: usize,
        end: Vector3<f64>,
        base_dir: &Path,
    ) -> Result<Link> {
        let j = &desc.joint;
        let joint = Joint::new(j.kind, Vector3::from(j.axis), j.origin.into(), j.limits)?;
        let shape = match &desc.shape {
            Some(s) => Shape::resolve(s, base_dir)?,
            None => Shape::default(),
        };
        let frame = format!("L_{}", index + 1);
        let (sdf, gradient) = match &desc.sdf {
            Some(path) => {
                let (sdf, grad) = io::load(&base_dir.join(path))?;
                let grad = match grad {
                    Some(g) => g,
                    None => gradient_field(&sdf)?,
                };
                (sdf.with_frame(frame), grad)
            }
            None => {
                if shape.is_empty() {
                    return Err(Error::MissingShape(desc.name.clone()));
                }
                let spec = shape.grid_spec(self.grid.resolution, self.grid.padding)?;
                let occ = voxelize(&shape, &spec);
                let sdf = construct_sdf_edt(&occ)
                    .map_err(|_| Error::MissingShape(desc.name.clone()))?
                    .with_frame(frame);
                let grad = gradient_field(&sdf)?;
                (sdf, grad)
            }
        };
        let extent = if shape.is_empty() {
            occupied_extent(&sdf, &end)
        } else {
            shape.max_extent_from(&end)
        };
        let reach = match &desc.reach {
            Some(path) => {
                let (grid, _) = io::load(&base_dir.join(path))?;
                Some(ReachSdf {
                    sdf: grid.with_frame(format!("B/EE_{}", index + 1)),
                    sampling_slack: desc.reach_slack,
                })
            }
            None => None,
        };
        Ok(Link {
            name: desc.name.clone(),
            joint,
            shape,
            sdf,
            gradient,
            end,
            extent,
            reach,
        })
    }
}

fn occupied_extent(sdf: &crate::sdf_grid::SdfGrid, end: &Vector3<f64>) -> f64 {
    sdf.values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= 0.0)
        .map(|(o, _)| (sdf.spec.voxel_center(sdf.spec.index_of(o)) - end).norm())
        .fold(0.0, f64::max)
        + sdf.spec.resolution
}

pub fn load_robot(path: &Path) -> Result<RobotModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let desc = RobotDescription::parse(&text)?;
    desc.build(path.parent().unwrap_or(Path::new(".")))
}
