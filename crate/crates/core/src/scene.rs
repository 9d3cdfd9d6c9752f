//! Static objects composited into one world field, and dynamic objects that
//! produce a fresh point cloud at every tick.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::Pose;
use crate::sdf_grid::{GridSpec, SdfGrid};

/// Rigid object fixed for the whole episode.
#[derive(Clone, Debug)]
pub struct StaticObject {
    pub name: String,
    /// Field in the object's own frame.
    pub sdf: SdfGrid,
    /// Object frame in the world.
    pub pose: Pose,
}

impl StaticObject {
    /// Object-field value at a world point; the world sentinel `bar` when the
    /// point falls outside the object's grid.
    #[inline]
    pub fn query_world(&self, p: &Vector3<f64>, inverse: &Pose, bar: f64) -> f64 {
        let local = inverse.transform_point(p);
        if self.sdf.spec.contains(&local) {
            self.sdf.query(&local)
        } else {
            bar
        }
    }
}

/// Sample the min over all objects at every world voxel center.
pub fn composite_static_sdf(objects: &[StaticObject], world_spec: &GridSpec) -> Result<SdfGrid> {
    if objects.is_empty() {
        return Err(Error::EmptyScene);
    }
    world_spec.validate()?;
    let bar = world_spec.sentinel();
    let inverses: Vec<Pose> = objects.iter().map(|o| o.pose.inverse()).collect();
    let values: Vec<f64> = (0..world_spec.len())
        .into_par_iter()
        .map(|o| {
            let p = world_spec.voxel_center(world_spec.index_of(o));
            objects
                .iter()
                .zip(&inverses)
                .map(|(obj, inv)| obj.query_world(&p, inv, bar))
                .fold(bar, f64::min)
        })
        .collect();
    SdfGrid::new(world_spec.clone(), values, "W")
}

/// True when every world sample cell corner near `p` agrees on which object
/// grids contain it. Across an enclosure edge the composite blends an object
/// value with the sentinel, so pointwise comparisons only hold away from edges.
pub fn away_from_enclosure_edges(objs: &[StaticObject], spec: &GridSpec, p: &Vector3<f64>) -> bool {
    let h = spec.resolution;
    objs.iter().all(|o| {
        let inv = o.pose.inverse();
        let mut inside = [0usize; 2];
        for c in 0..8 {
            let q = p + Vector3::new(
                if c & 1 == 0 { -h } else { h },
                if c & 2 == 0 { -h } else { h },
                if c & 4 == 0 { -h } else { h },
            );
            inside[o.sdf.spec.contains(&inv.transform_point(&q)) as usize] += 1;
        }
        inside[0] == 0 || inside[1] == 0
    })
}


/// Points bucketed on a uniform grid so box-shaped regions can be visited
/// without scanning the whole set. Within a cell, points keep their input order.
#[derive(Clone, Debug, Default)]
pub struct PointIndex {
    origin: Vector3<f64>,
    cell: f64,
    dims: [usize; 3],
    /// Start offset of each cell in `points`, plus one trailing end offset.
    starts: Vec<usize>,
    points: Vec<Vector3<f64>>,
}

impl PointIndex {
    pub fn new(points: &[Vector3<f64>], cell: f64) -> Self {
        assert!(cell > 0.0, "cell size must be positive");
        if points.is_empty() {
            return Self {
                cell,
                ..Self::default()
            };
        }
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let dims = [0, 1, 2].map(|a| ((hi[a] - lo[a]) / cell).floor() as usize + 1);
        let mut index = Self {
            origin: lo,
            cell,
            dims,
            starts: Vec::new(),
            points: Vec::new(),
        };
        let ids: Vec<usize> = points.iter().map(|p| index.flat(index.cell_of(p))).collect();
        let mut counts = vec![0usize; dims[0] * dims[1] * dims[2] + 1];
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for k in 1..counts.len() {
            counts[k] += counts[k - 1];
        }
        let mut fill = counts.clone();
        let mut sorted = vec![Vector3::zeros(); points.len()];
        for (p, &c) in points.iter().zip(&ids) {
            sorted[fill[c]] = *p;
            fill[c] += 1;
        }
        index.starts = counts;
        index.points = sorted;
        index
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All points, grouped by cell.
    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    fn cell_of(&self, p: &Vector3<f64>) -> [usize; 3] {
        [0, 1, 2].map(|a| (((p[a] - self.origin[a]) / self.cell).floor().max(0.0) as usize).min(self.dims[a] - 1))
    }

    fn flat(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    /// Points in the cells overlapping the box `[lo, hi]`. May include points
    /// outside the box, never misses one inside it. Stops early once `f`
    /// returns true, and reports whether it did.
    pub fn any_near(&self, lo: &Vector3<f64>, hi: &Vector3<f64>, mut f: impl FnMut(&Vector3<f64>) -> bool) -> bool {
        if self.points.is_empty() {
            return false;
        }
        let mut range = [(0usize, 0usize); 3];
        for a in 0..3 {
            let top = self.origin[a] + self.dims[a] as f64 * self.cell;
            if hi[a] < self.origin[a] || lo[a] > top {
                return false;
            }
            let first = ((lo[a] - self.origin[a]) / self.cell).floor().max(0.0) as usize;
            let last = ((hi[a] - self.origin[a]) / self.cell).floor().max(0.0) as usize;
            range[a] = (first.min(self.dims[a] - 1), last.min(self.dims[a] - 1));
        }
        for z in range[2].0..=range[2].1 {
            for y in range[1].0..=range[1].1 {
                let row = self.flat([0, y, z]);
                let (a, b) = (self.starts[row + range[0].0], self.starts[row + range[0].1 + 1]);
                if self.points[a..b].iter().any(&mut f) {
                    return true;
                }
            }
        }
        false
    }

    /// Visit every point in the cells overlapping `[lo, hi]`.
    pub fn for_each_near(&self, lo: &Vector3<f64>, hi: &Vector3<f64>, mut f: impl FnMut(&Vector3<f64>)) {
        self.any_near(lo, hi, |p| {
            f(p);
            false
        });
    }
}

/// World-frame axis-aligned box around a grid enclosure placed at `pose`.
pub fn enclosure_bounds(spec: &GridSpec, pose: &Pose) -> (Vector3<f64>, Vector3<f64>) {
    let (a, b) = (spec.origin, spec.max_corner());
    let mut lo = Vector3::from_element(f64::INFINITY);
    let mut hi = Vector3::from_element(f64::NEG_INFINITY);
    for k in 0..8 {
        let c = Vector3::new(
            if k & 1 == 0 { a.x } else { b.x },
            if k & 2 == 0 { a.y } else { b.y },
            if k & 4 == 0 { a.z } else { b.z },
        );
        let w = pose.transform_point(&c);
        lo = lo.inf(&w);
        hi = hi.sup(&w);
    }
    (lo, hi)
}

/// Point set in the world frame at one instant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub stamp: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, stamp: f64) -> Result<Self> {
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidConfig("point cloud has non-finite coordinates".into()));
        }
        Ok(Self { points, stamp })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keyframe {
    pub t: f64,
    pub pose: Pose,
}

#[derive(Clone, Debug)]
pub enum DynamicSource {
    /// A known shape carried along a pose trajectory. `body_points` are in the object frame.
    Shape {
        body_points: Vec<Vector3<f64>>,
        keyframes: Vec<Keyframe>,
        interpolate: bool,
    },
    /// Sensed frames, replayed by nearest stamp.
    Raw { frames: Vec<PointCloud> },
}

#[derive(Clone, Debug)]
pub struct DynamicObject {
    pub name: String,
    pub source: DynamicSource,
}

/// Default cap on points taken from one object's zero set.
pub const DEFAULT_POINT_CAP: usize = 2000;

/// Keep at most `cap` points by taking every `ceil(n / cap)`-th one.
pub fn subsample(points: Vec<Vector3<f64>>, cap: usize) -> Vec<Vector3<f64>> {
    if cap == 0 || points.len() <= cap {
        return points;
    }
    let stride = points.len().div_ceil(cap);
    points.into_iter().step_by(stride).collect()
}

const STAMP_TOL: f64 = 1e-9;

impl DynamicObject {
    /// Object with a precomputed field; its surface voxels (or all voxels with
    /// value ≤ 0 when `interior`) become the body points.
    pub fn from_shape(
        name: impl Into<String>,
        sdf: &SdfGrid,
        keyframes: Vec<Keyframe>,
        interpolate: bool,
        cap: usize,
        interior: bool,
    ) -> Result<Self> {
        let name = name.into();
        check_stamps(keyframes.iter().map(|k| k.t), &name)?;
        let spec = &sdf.spec;
        let body: Vec<Vector3<f64>> = sdf
            .values
            .iter()
            .enumerate()
            .filter(|(_, &v)| if interior { v <= 0.0 } else { v == 0.0 })
            .map(|(o, _)| spec.voxel_center(spec.index_of(o)))
            .collect();
        if body.is_empty() {
            return Err(Error::InvalidConfig(format!("dynamic object `{name}` has no surface voxels")));
        }
        Ok(Self {
            name,
            source: DynamicSource::Shape {
                body_points: subsample(body, cap),
                keyframes,
                interpolate,
            },
        })
    }

    pub fn from_raw(name: impl Into<String>, frames: Vec<PointCloud>) -> Result<Self> {
        let name = name.into();
        check_stamps(frames.iter().map(|f| f.stamp), &name)?;
        Ok(Self {
            name,
            source: DynamicSource::Raw { frames },
        })
    }

    /// Time span covered by the stream; a single frame covers all time.
    pub fn span(&self) -> (f64, f64) {
        let stamps: Vec<f64> = match &self.source {
            DynamicSource::Shape { keyframes, .. } => keyframes.iter().map(|k| k.t).collect(),
            DynamicSource::Raw { frames } => frames.iter().map(|f| f.stamp).collect(),
        };
        if stamps.len() == 1 {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (stamps[0], stamps[stamps.len() - 1])
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let (lo, hi) = self.span();
        if t < lo - STAMP_TOL || t > hi + STAMP_TOL {
            return Err(Error::StreamExhausted(t));
        }
        Ok(())
    }

    /// Pose of a shape object at `t`.
    pub fn pose_at(&self, t: f64) -> Result<Option<Pose>> {
        self.check_time(t)?;
        let DynamicSource::Shape {
            keyframes,
            interpolate,
            ..
        } = &self.source
        else {
            return Ok(None);
        };
        let i = nearest_index(keyframes.iter().map(|k| k.t), t);
        if !*interpolate {
            return Ok(Some(keyframes[i].pose));
        }
        // Bracketing pair around t.
        let after = keyframes.partition_point(|k| k.t <= t);
        if after == 0 || after == keyframes.len() {
            return Ok(Some(keyframes[i].pose));
        }
        let (a, b) = (&keyframes[after - 1], &keyframes[after]);
        let s = (t - a.t) / (b.t - a.t);
        Ok(Some(a.pose.interpolate(&b.pose, s)))
    }
}

fn check_stamps(stamps: impl Iterator<Item = f64>, name: &str) -> Result<()> {
    let s: Vec<f64> = stamps.collect();
    if s.is_empty() {
        return Err(Error::InvalidConfig(format!("dynamic object `{name}` has an empty stream")));
    }
    if s.iter().any(|t| !t.is_finite()) || s.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidConfig(format!(
            "dynamic object `{name}` stamps must be finite and strictly increasing"
        )));
    }
    Ok(())
}

/// Index of the stamp closest to `t`; ties go to the earlier stamp.
fn nearest_index(stamps: impl Iterator<Item = f64>, t: f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, s) in stamps.enumerate() {
        let d = (s - t).abs();
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// World-frame cloud of `obj` at time `t`.
pub fn update_dynamic(obj: &DynamicObject, t: f64) -> Result<PointCloud> {
    obj.check_time(t)?;
    match &obj.source {
        DynamicSource::Shape { body_points, .. } => {
            let pose = obj.pose_at(t)?.expect("shape objects have a pose");
            Ok(PointCloud {
                points: body_points.iter().map(|p| pose.transform_point(p)).collect(),
                stamp: t,
            })
        }
        DynamicSource::Raw { frames } => {
            let i = nearest_index(frames.iter().map(|f| f.stamp), t);
            Ok(frames[i].clone())
        }
    }
}

/// Everything the planner sees of the environment.
#[derive(Clone, Debug, Default)]
pub struct Scene {
    pub static_objects: Vec<StaticObject>,
    /// Composite of `static_objects` in the world frame, if there are any.
    pub composite: Option<SdfGrid>,
    pub dynamic: Vec<DynamicObject>,
}

impl Scene {
    pub fn new(
        static_objects: Vec<StaticObject>,
        dynamic: Vec<DynamicObject>,
        world_spec: &GridSpec,
    ) -> Result<Self> {
        let composite = if static_objects.is_empty() {
            None
        } else {
            Some(composite_static_sdf(&static_objects, world_spec)?)
        };
        Ok(Self {
            static_objects,
            composite,
            dynamic,
        })
    }

    /// Add one static object and fold it into the composite in place.
    pub fn add_static(&mut self, object: StaticObject, world_spec: &GridSpec) -> Result<()> {
        let grid = match self.composite.take() {
            None => composite_static_sdf(std::slice::from_ref(&object), world_spec)?,
            Some(mut grid) => {
                let bar = grid.sentinel();
                let inv = object.pose.inverse();
                let spec = grid.spec.clone();
                grid.values.par_iter_mut().enumerate().for_each(|(o, v)| {
                    let p = spec.voxel_center(spec.index_of(o));
                    *v = v.min(object.query_world(&p, &inv, bar));
                });
                grid
            }
        };
        self.composite = Some(grid);
        self.static_objects.push(object);
        Ok(())
    }

    /// Obstacle voxel centers of the static composite (value ≤ 0).
    pub fn static_points(&self) -> Vec<Vector3<f64>> {
        let Some(grid) = &self.composite else {
            return Vec::new();
        };
        let spec = &grid.spec;
        grid.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v <= 0.0)
            .map(|(o, _)| spec.voxel_center(spec.index_of(o)))
            .collect()
    }

    /// All dynamic points at time `t`.
    pub fn dynamic_points(&self, t: f64) -> Result<Vec<Vector3<f64>>> {
        let mut out = Vec::new();
        for obj in &self.dynamic {
            out.extend(update_dynamic(obj, t)?.points);
        }
        Ok(out)
    }
}
