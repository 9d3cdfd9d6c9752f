//! Solid shapes and their voxelization.
//!
//! A voxel is occupied when its center lies inside the solid. Meshes use a
//! ray-parity point-in-mesh test, so they must be closed.

use std::path::{Path, PathBuf};

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::{GridSpec, OccupancyGrid};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "primitive", rename_all = "snake_case")]
pub enum Primitive {
    Sphere {
        #[serde(default = "zero3")]
        center: Vector3<f64>,
        radius: f64,
    },
    Box {
        /// Full edge lengths.
        size: Vector3<f64>,
        #[serde(default = "zero3")]
        center: Vector3<f64>,
        #[serde(default = "zero3")]
        rpy: Vector3<f64>,
    },
    /// Solid cylinder between the centers of its two caps.
    Cylinder {
        a: Vector3<f64>,
        b: Vector3<f64>,
        radius: f64,
    },
    Capsule {
        a: Vector3<f64>,
        b: Vector3<f64>,
        radius: f64,
    },
}

fn zero3() -> Vector3<f64> {
    Vector3::zeros()
}

fn rpy_rotation(rpy: &Vector3<f64>) -> Rotation3<f64> {
    Rotation3::from_euler_angles(rpy.x, rpy.y, rpy.z)
}

/// Parameter of the closest point on segment `ab` to `p`, clamped to [0, 1].
fn segment_param(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(&ab) / len2).clamp(0.0, 1.0)
    }
}

impl Primitive {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match self {
            Primitive::Sphere { center, radius } => (p - center).norm_squared() <= radius * radius,
            Primitive::Box { size, center, rpy } => {
                let local = rpy_rotation(rpy).inverse() * (p - center);
                (0..3).all(|a| local[a].abs() <= 0.5 * size[a])
            }
            Primitive::Cylinder { a, b, radius } => {
                let ab = b - a;
                let len2 = ab.norm_squared();
                if len2 == 0.0 {
                    return false;
                }
                let t = (p - a).dot(&ab) / len2;
                if !(0.0..=1.0).contains(&t) {
                    return false;
                }
                (p - (a + ab * t)).norm_squared() <= radius * radius
            }
            Primitive::Capsule { a, b, radius } => {
                let t = segment_param(p, a, b);
                (p - (a + (b - a) * t)).norm_squared() <= radius * radius
            }
        }
    }

    /// Axis-aligned bounds (min, max).
    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        match self {
            Primitive::Sphere { center, radius } => {
                (center.add_scalar(-radius), center.add_scalar(*radius))
            }
            Primitive::Box { size, center, rpy } => {
                let r = rpy_rotation(rpy);
                let half = size * 0.5;
                let m = r.matrix().abs();
                let ext = m * half;
                (center - ext, center + ext)
            }
            Primitive::Cylinder { a, b, radius } | Primitive::Capsule { a, b, radius } => (
                a.inf(b).add_scalar(-radius),
                a.sup(b).add_scalar(*radius),
            ),
        }
    }
}

/// Closed triangle mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    /// Minimal Wavefront OBJ reader: `v` and `f` records, polygons fan-triangulated.
    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let mut it = line.split_whitespace();
            match it.next() {
                Some("v") => {
                    let xyz: Vec<f64> = it
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|e| Error::Parse(format!("obj line {}: {e}", lineno + 1)))?;
                    if xyz.len() != 3 {
                        return Err(Error::Parse(format!("obj line {}: short vertex", lineno + 1)));
                    }
                    vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
                }
                Some("f") => {
                    let idx: Vec<usize> = it
                        .map(|tok| {
                            let head = tok.split('/').next().unwrap_or("");
                            let i: i64 = head.parse().map_err(|_| {
                                Error::Parse(format!("obj line {}: bad face index", lineno + 1))
                            })?;
                            let resolved = if i < 0 {
                                vertices.len() as i64 + i
                            } else {
                                i - 1
                            };
                            if resolved < 0 || resolved as usize >= vertices.len() {
                                return Err(Error::Parse(format!(
                                    "obj line {}: face index out of range",
                                    lineno + 1
                                )));
                            }
                            Ok(resolved as usize)
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() < 3 {
                        return Err(Error::Parse(format!("obj line {}: degenerate face", lineno + 1)));
                    }
                    for t in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[t], idx[t + 1]]);
                    }
                }
                _ => {}
            }
        }
        if triangles.is_empty() {
            return Err(Error::Parse("obj has no faces".into()));
        }
        Ok(Self {
            vertices,
            triangles,
        })
    }

    pub fn load_obj(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_obj(&text)
    }

    pub fn scaled(mut self, scale: f64) -> Self {
        for v in &mut self.vertices {
            *v *= scale;
        }
        self
    }

    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    /// Ray-parity test along a fixed skewed direction.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let dir = Vector3::new(0.8723, 0.3317, 0.3591).normalize();
        let hits = self
            .triangles
            .iter()
            .filter(|t| {
                ray_hits_triangle(
                    p,
                    &dir,
                    &self.vertices[t[0]],
                    &self.vertices[t[1]],
                    &self.vertices[t[2]],
                )
            })
            .count();
        hits % 2 == 1
    }
}

/// Möller–Trumbore, counting hits strictly in front of the origin.
fn ray_hits_triangle(
    o: &Vector3<f64>,
    d: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let h = d.cross(&e2);
    let det = e1.dot(&h);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv = 1.0 / det;
    let s = o - a;
    let u = inv * s.dot(&h);
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let q = s.cross(&e1);
    let v = inv * d.dot(&q);
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    inv * e2.dot(&q) > 1e-12
}

/// Shape description as written in robot and scenario files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShapeSpec {
    Mesh {
        mesh: PathBuf,
        #[serde(default = "one")]
        scale: f64,
    },
    Primitive(Primitive),
    Compound(Vec<Primitive>),
}

fn one() -> f64 {
    1.0
}

/// A resolved solid: union of primitives and meshes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Shape {
    pub primitives: Vec<Primitive>,
    pub meshes: Vec<TriMesh>,
}

impl Shape {
    pub fn from_primitive(p: Primitive) -> Self {
        Self {
            primitives: vec![p],
            meshes: Vec::new(),
        }
    }

    /// Resolve mesh paths relative to `base_dir`.
    pub fn resolve(spec: &ShapeSpec, base_dir: &Path) -> Result<Self> {
        Ok(match spec {
            ShapeSpec::Mesh { mesh, scale } => {
                let path = if mesh.is_absolute() {
                    mesh.clone()
                } else {
                    base_dir.join(mesh)
                };
                Self {
                    primitives: Vec::new(),
                    meshes: vec![TriMesh::load_obj(&path)?.scaled(*scale)],
                }
            }
            ShapeSpec::Primitive(p) => Self::from_primitive(p.clone()),
            ShapeSpec::Compound(ps) => Self {
                primitives: ps.clone(),
                meshes: Vec::new(),
            },
        })
    }

    pub fn is_empty(&self) -> bool {
        self.primitives.is_empty() && self.meshes.is_empty()
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.primitives.iter().any(|s| s.contains(p)) || self.meshes.iter().any(|m| m.contains(p))
    }

    pub fn bounds(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        let all = self
            .primitives
            .iter()
            .map(Primitive::bounds)
            .chain(self.meshes.iter().map(TriMesh::bounds));
        for (a, b) in all {
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        (lo, hi)
    }

    /// Largest distance from `p` to any point of the shape's bounding box.
    pub fn max_extent_from(&self, p: &Vector3<f64>) -> f64 {
        let (lo, hi) = self.bounds();
        let mut far = Vector3::zeros();
        for a in 0..3 {
            far[a] = (p[a] - lo[a]).abs().max((hi[a] - p[a]).abs());
        }
        far.norm()
    }

    /// Grid covering the shape plus `padding` meters on every side.
    pub fn grid_spec(&self, resolution: f64, padding: f64) -> Result<GridSpec> {
        let (lo, hi) = self.bounds();
        GridSpec::covering(lo, hi, resolution, padding)
    }
}

/// Occupancy by voxel-center containment.
pub fn voxelize(shape: &Shape, spec: &GridSpec) -> OccupancyGrid {
    OccupancyGrid::from_fn(spec.clone(), |v| shape.contains(&spec.voxel_center(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE_OBJ: &str = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\nf 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";

    #[test]
    fn mesh_parity_matches_box() {
        let mesh = TriMesh::parse_obj(CUBE_OBJ).unwrap();
        let boxed = Primitive::Box {
            size: Vector3::repeat(1.0),
            center: Vector3::repeat(0.5),
            rpy: Vector3::zeros(),
        };
        let spec = GridSpec::new(Vector3::repeat(-0.27), 0.1, [15, 15, 15]).unwrap();
        let a = voxelize(&Shape { primitives: vec![], meshes: vec![mesh] }, &spec);
        let b = voxelize(&Shape::from_primitive(boxed), &spec);
        assert_eq!(a, b);
        assert_eq!(a.count(), 1000);
    }

    #[test]
    fn obj_errors() {
        assert!(TriMesh::parse_obj("v 0 0 0\n").is_err());
        assert!(TriMesh::parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(TriMesh::parse_obj("v 0 0 x\n").is_err());
    }

    #[test]
    fn primitive_membership() {
        let cap = Primitive::Capsule {
            a: Vector3::zeros(),
            b: Vector3::new(0.0, 0.0, 1.0),
            radius: 0.1,
        };
        assert!(cap.contains(&Vector3::new(0.0, 0.0, 1.05)));
        assert!(!cap.contains(&Vector3::new(0.0, 0.11, 0.5)));
        let cyl = Primitive::Cylinder {
            a: Vector3::zeros(),
            b: Vector3::new(0.0, 0.0, 1.0),
            radius: 0.1,
        };
        assert!(!cyl.contains(&Vector3::new(0.0, 0.0, 1.05)));
        assert!(cyl.contains(&Vector3::new(0.05, 0.0, 0.5)));
        let rotated = Primitive::Box {
            size: Vector3::new(1.0, 0.1, 0.1),
            center: Vector3::zeros(),
            rpy: Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2),
        };
        assert!(rotated.contains(&Vector3::new(0.0, 0.45, 0.0)));
        assert!(!rotated.contains(&Vector3::new(0.45, 0.0, 0.0)));
        let (lo, hi) = rotated.bounds();
        assert!((hi.y - 0.5).abs() < 1e-12 && (lo.x + 0.05).abs() < 1e-12);
    }

    #[test]
    fn shape_spec_json_forms() {
        let p: ShapeSpec =
            serde_json::from_str(r#"{"primitive":"sphere","radius":0.2}"#).unwrap();
        assert!(matches!(p, ShapeSpec::Primitive(Primitive::Sphere { .. })));
        let c: ShapeSpec = serde_json::from_str(
            r#"[{"primitive":"box","size":[1,1,1]},{"primitive":"capsule","a":[0,0,0],"b":[1,0,0],"radius":0.1}]"#,
        )
        .unwrap();
        assert!(matches!(c, ShapeSpec::Compound(ref v) if v.len() == 2));
        let m: ShapeSpec = serde_json::from_str(r#"{"mesh":"arm.obj"}"#).unwrap();
        assert!(matches!(m, ShapeSpec::Mesh { scale, .. } if scale == 1.0));
    }
}
