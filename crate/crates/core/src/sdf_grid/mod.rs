//! Voxelized signed-distance fields for a single rigid body.
//!
//! A grid stores one signed distance per voxel: zero on the object's boundary
//! voxels, negative inside, positive outside. Lookups outside the grid volume
//! return the grid's sentinel distance, which means "no collision risk".
//!
//! Voxel indices are 1-based, matching the grid function that rasterizes a
//! point: `i = clamp(floor((x - x_min) / δ) + 1, 1, N_x)`. Storage is
//! k-fastest, the same order as the on-disk format in [`io`].

mod edt;
pub mod io;
pub mod shapes;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use edt::construct_sdf_edt;

/// 1-based lattice coordinates of a voxel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VoxelIndex {
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl VoxelIndex {
    pub fn new(i: usize, j: usize, k: usize) -> Self {
        Self { i, j, k }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Minimum corner of the grid volume.
    pub origin: Vector3<f64>,
    /// Edge length of one voxel, meters.
    pub resolution: f64,
    pub dims: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: Vector3<f64>, resolution: f64, dims: [usize; 3]) -> Result<Self> {
        let spec = Self {
            origin,
            resolution,
            dims,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Smallest grid at `resolution` that covers `[min, max]` grown by `padding` on every side.
    pub fn covering(
        min: Vector3<f64>,
        max: Vector3<f64>,
        resolution: f64,
        padding: f64,
    ) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::InvalidGrid(format!("resolution {resolution} must be > 0")));
        }
        let lo = min.add_scalar(-padding);
        let hi = max.add_scalar(padding);
        let mut dims = [0usize; 3];
        for a in 0..3 {
            let extent = (hi[a] - lo[a]).max(0.0);
            dims[a] = ((extent / resolution - 1e-9).ceil() as usize).max(3);
        }
        // Center the lattice on the requested box.
        let size = Vector3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64) * resolution;
        let origin = (lo + hi) * 0.5 - size * 0.5;
        Self::new(origin, resolution, dims)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) || !self.resolution.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "resolution {} must be finite and > 0",
                self.resolution
            )));
        }
        if self.dims.iter().any(|&n| n < 3) {
            return Err(Error::GridTooSmall(self.dims));
        }
        if self.origin.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Maximum corner of the grid volume.
    pub fn max_corner(&self) -> Vector3<f64> {
        self.origin
            + Vector3::new(
                self.dims[0] as f64,
                self.dims[1] as f64,
                self.dims[2] as f64,
            ) * self.resolution
    }

    /// Linear storage offset of a 0-based lattice coordinate (k fastest).
    #[inline]
    pub fn offset(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    #[inline]
    pub fn offset_of(&self, v: VoxelIndex) -> usize {
        self.offset(v.i - 1, v.j - 1, v.k - 1)
    }

    /// Inverse of [`GridSpec::offset`], returning a 1-based index.
    pub fn index_of(&self, offset: usize) -> VoxelIndex {
        let k = offset % self.dims[2];
        let rest = offset / self.dims[2];
        let j = rest % self.dims[1];
        let i = rest / self.dims[1];
        VoxelIndex::new(i + 1, j + 1, k + 1)
    }

    pub fn voxel_center(&self, v: VoxelIndex) -> Vector3<f64> {
        self.origin
            + Vector3::new(
                v.i as f64 - 0.5,
                v.j as f64 - 0.5,
                v.k as f64 - 0.5,
            ) * self.resolution
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let hi = self.max_corner();
        (0..3).all(|a| p[a] >= self.origin[a] && p[a] <= hi[a])
    }

    /// Sentinel distance d̄: the space diagonal rounded up to a whole meter.
    pub fn sentinel(&self) -> f64 {
        let d = Vector3::new(
            self.dims[0] as f64,
            self.dims[1] as f64,
            self.dims[2] as f64,
        )
        .norm()
            * self.resolution;
        d.ceil().max(1.0)
    }

    pub fn voxels(&self) -> impl Iterator<Item = VoxelIndex> + '_ {
        (0..self.len()).map(|o| self.index_of(o))
    }
}

/// Grid function: rasterize a point (in the grid's frame) to the voxel containing it.
/// Total; points outside the volume clamp to the nearest face voxel.
pub fn world_to_voxel(p: &Vector3<f64>, spec: &GridSpec) -> VoxelIndex {
    let axis = |a: usize| -> usize {
        let cell = ((p[a] - spec.origin[a]) / spec.resolution).floor();
        // NaN falls through to the lower clamp.
        let idx = if cell.is_nan() { 1.0 } else { cell + 1.0 };
        idx.clamp(1.0, spec.dims[a] as f64) as usize
    };
    VoxelIndex::new(axis(0), axis(1), axis(2))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyGrid {
    pub spec: GridSpec,
    pub occupied: Vec<bool>,
}

impl OccupancyGrid {
    pub fn empty(spec: GridSpec) -> Self {
        let n = spec.len();
        Self {
            spec,
            occupied: vec![false; n],
        }
    }

    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(VoxelIndex) -> bool) -> Self {
        let occupied = (0..spec.len()).map(|o| f(spec.index_of(o))).collect();
        Self { spec, occupied }
    }

    pub fn get(&self, v: VoxelIndex) -> bool {
        self.occupied[self.spec.offset_of(v)]
    }

    pub fn set(&mut self, v: VoxelIndex, value: bool) {
        let o = self.spec.offset_of(v);
        self.occupied[o] = value;
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    /// Occupied voxels with at least one unoccupied 6-neighbor inside the grid.
    pub fn boundary(&self) -> Vec<VoxelIndex> {
        let [nx, ny, nz] = self.spec.dims;
        let mut out = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                for k in 0..nz {
                    if self.is_boundary0(i, j, k) {
                        out.push(VoxelIndex::new(i + 1, j + 1, k + 1));
                    }
                }
            }
        }
        out
    }

    pub(crate) fn is_boundary0(&self, i: usize, j: usize, k: usize) -> bool {
        let s = &self.spec;
        if !self.occupied[s.offset(i, j, k)] {
            return false;
        }
        let [nx, ny, nz] = s.dims;
        let free = |a: usize, b: usize, c: usize| !self.occupied[s.offset(a, b, c)];
        (i > 0 && free(i - 1, j, k))
            || (i + 1 < nx && free(i + 1, j, k))
            || (j > 0 && free(i, j - 1, k))
            || (j + 1 < ny && free(i, j + 1, k))
            || (k > 0 && free(i, j, k - 1))
            || (k + 1 < nz && free(i, j, k + 1))
    }

    fn check_partition(&self) -> Result<()> {
        let n = self.count();
        if n == 0 {
            return Err(Error::EmptyOccupancy);
        }
        if n == self.occupied.len() {
            return Err(Error::FullOccupancy);
        }
        Ok(())
    }

    /// Morphological closing (dilate then erode) with a cubic structuring element.
    /// Voxels outside the grid count as unoccupied during dilation and as
    /// occupied during erosion, so closing never shrinks the input.
    pub fn closed(&self, radius: usize) -> OccupancyGrid {
        if radius == 0 {
            return self.clone();
        }
        let dilated = self.morph(radius, true);
        dilated.morph(radius, false)
    }

    fn morph(&self, radius: usize, dilate: bool) -> OccupancyGrid {
        // Separable: a cube element is the product of three 1-D windows.
        let s = &self.spec;
        let mut cur = self.occupied.clone();
        for axis in 0..3 {
            let mut next = cur.clone();
            let n = s.dims[axis];
            for o in 0..s.len() {
                let v = s.index_of(o);
                let c = [v.i - 1, v.j - 1, v.k - 1];
                let lo = c[axis].saturating_sub(radius);
                let hi = (c[axis] + radius).min(n - 1);
                let mut q = c;
                let mut hit = !dilate;
                for t in lo..=hi {
                    q[axis] = t;
                    let occ = cur[s.offset(q[0], q[1], q[2])];
                    if dilate && occ {
                        hit = true;
                        break;
                    }
                    if !dilate && !occ {
                        hit = false;
                        break;
                    }
                }
                next[o] = hit;
            }
            cur = next;
        }
        OccupancyGrid {
            spec: s.clone(),
            occupied: cur,
        }
    }
}

/// Lookup strategy for [`SdfGrid::query_with`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryMode {
    #[default]
    Trilinear,
    /// Value of the voxel selected by the grid function, no interpolation.
    Nearest,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdfGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Frame the grid is fixed to, e.g. `S_0`, `L_3`, `B/EE_2`, `W`.
    pub frame: String,
}

impl SdfGrid {
    pub fn new(spec: GridSpec, values: Vec<f64>, frame: impl Into<String>) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            spec,
            values,
            frame: frame.into(),
        })
    }

    pub fn with_frame(mut self, frame: impl Into<String>) -> Self {
        self.frame = frame.into();
        self
    }

    pub fn sentinel(&self) -> f64 {
        self.spec.sentinel()
    }

    pub fn value(&self, v: VoxelIndex) -> f64 {
        self.values[self.spec.offset_of(v)]
    }

    #[inline]
    pub fn query(&self, p: &Vector3<f64>) -> f64 {
        self.query_with(p, QueryMode::Trilinear)
    }

    pub fn query_with(&self, p: &Vector3<f64>, mode: QueryMode) -> f64 {
        if !self.spec.contains(p) {
            return self.sentinel();
        }
        match mode {
            QueryMode::Nearest => self.value(world_to_voxel(p, &self.spec)),
            QueryMode::Trilinear => {
                let c = Cell::locate(&self.spec, p);
                c.blend(|o| self.values[o])
            }
        }
    }

    pub fn zero_set(&self) -> Vec<VoxelIndex> {
        extract_zero_set(self)
    }
}

/// The 8 lattice samples surrounding a point and its fractional offsets.
struct Cell {
    base: [usize; 3],
    t: [f64; 3],
    strides: [usize; 3],
}

impl Cell {
    #[inline]
    fn locate(spec: &GridSpec, p: &Vector3<f64>) -> Cell {
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            // Continuous coordinate with voxel centers at integers.
            let n = spec.dims[a];
            let mut u = ((p[a] - spec.origin[a]) / spec.resolution - 0.5).clamp(0.0, (n - 1) as f64);
            // Snap round-off so a voxel center returns its stored sample exactly.
            let r = u.round();
            if (u - r).abs() < 1e-9 {
                u = r;
            }
            let i0 = (u.floor() as usize).min(n - 2);
            base[a] = i0;
            t[a] = u - i0 as f64;
        }
        Cell {
            base,
            t,
            strides: [spec.dims[1] * spec.dims[2], spec.dims[2], 1],
        }
    }

    #[inline]
    fn blend<T>(&self, sample: impl Fn(usize) -> T) -> T
    where
        T: std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Copy,
    {
        let o = self.base[0] * self.strides[0] + self.base[1] * self.strides[1] + self.base[2];
        let [sx, sy, sz] = self.strides;
        let [tx, ty, tz] = self.t;
        let lerp = |a: T, b: T, t: f64| a * (1.0 - t) + b * t;
        let c00 = lerp(sample(o), sample(o + sx), tx);
        let c10 = lerp(sample(o + sy), sample(o + sx + sy), tx);
        let c01 = lerp(sample(o + sz), sample(o + sx + sz), tx);
        let c11 = lerp(sample(o + sy + sz), sample(o + sx + sy + sz), tx);
        let c0 = lerp(c00, c10, ty);
        let c1 = lerp(c01, c11, ty);
        lerp(c0, c1, tz)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientGrid {
    pub spec: GridSpec,
    pub vectors: Vec<Vector3<f64>>,
}

impl GradientGrid {
    pub fn vector(&self, v: VoxelIndex) -> Vector3<f64> {
        self.vectors[self.spec.offset_of(v)]
    }

    /// Interpolated gradient direction, unit length, or zero outside the grid
    /// and where the interpolated vector vanishes.
    #[inline]
    pub fn query(&self, p: &Vector3<f64>) -> Vector3<f64> {
        if !self.spec.contains(p) {
            return Vector3::zeros();
        }
        let g = Cell::locate(&self.spec, p).blend(|o| self.vectors[o]);
        let n = g.norm();
        if n > 1e-9 {
            g / n
        } else {
            Vector3::zeros()
        }
    }
}

pub fn query(sdf: &SdfGrid, p: &Vector3<f64>) -> f64 {
    sdf.query(p)
}

pub fn query_gradient(grad: &GradientGrid, p: &Vector3<f64>) -> Vector3<f64> {
    grad.query(p)
}

/// Exact signed distance construction by exhaustive search over boundary voxels.
///
/// Boundary voxels (occupied, with an unoccupied 6-neighbor) get 0. Every other
/// voxel gets `δ·min‖v − b‖` over boundary voxels `b`, negated when occupied.
pub fn construct_sdf(occ: &OccupancyGrid) -> Result<SdfGrid> {
    occ.check_partition()?;
    let spec = &occ.spec;
    let boundary: Vec<[i64; 3]> = occ
        .boundary()
        .into_iter()
        .map(|v| [v.i as i64, v.j as i64, v.k as i64])
        .collect();
    let mut values = vec![0.0; spec.len()];
    for (o, value) in values.iter_mut().enumerate() {
        let v = spec.index_of(o);
        let (i, j, k) = (v.i - 1, v.j - 1, v.k - 1);
        if occ.is_boundary0(i, j, k) {
            continue;
        }
        let (vi, vj, vk) = (v.i as i64, v.j as i64, v.k as i64);
        let d2 = boundary
            .iter()
            .map(|b| {
                let (di, dj, dk) = (vi - b[0], vj - b[1], vk - b[2]);
                di * di + dj * dj + dk * dk
            })
            .min()
            .expect("boundary is non-empty when both classes exist");
        *value = signed_distance(d2, spec.resolution, occ.occupied[o]);
    }
    Ok(SdfGrid {
        spec: spec.clone(),
        values,
        frame: String::new(),
    })
}

/// Shared final expression so every builder produces bit-identical values.
#[inline]
pub(crate) fn signed_distance(index_dist2: i64, resolution: f64, occupied: bool) -> f64 {
    let d = resolution * (index_dist2 as f64).sqrt();
    if occupied {
        -d
    } else {
        d
    }
}

/// Central differences on interior voxels, one-sided differences on faces.
pub fn gradient_field(sdf: &SdfGrid) -> Result<GradientGrid> {
    let spec = &sdf.spec;
    if spec.dims.iter().any(|&n| n < 3) {
        return Err(Error::GridTooSmall(spec.dims));
    }
    let h = spec.resolution;
    let strides = [spec.dims[1] * spec.dims[2], spec.dims[2], 1];
    let vectors = (0..spec.len())
        .map(|o| {
            let v = spec.index_of(o);
            let idx = [v.i - 1, v.j - 1, v.k - 1];
            let mut g = Vector3::zeros();
            for a in 0..3 {
                let s = strides[a];
                let n = spec.dims[a];
                g[a] = if idx[a] == 0 {
                    (sdf.values[o + s] - sdf.values[o]) / h
                } else if idx[a] == n - 1 {
                    (sdf.values[o] - sdf.values[o - s]) / h
                } else {
                    (sdf.values[o + s] - sdf.values[o - s]) / (2.0 * h)
                };
            }
            g
        })
        .collect();
    Ok(GradientGrid {
        spec: spec.clone(),
        vectors,
    })
}

/// Voxels whose stored value is exactly zero.
pub fn extract_zero_set(sdf: &SdfGrid) -> Vec<VoxelIndex> {
    sdf.values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == 0.0)
        .map(|(o, _)| sdf.spec.index_of(o))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cube_spec(n: usize, delta: f64) -> GridSpec {
        GridSpec::new(Vector3::zeros(), delta, [n, n, n]).unwrap()
    }

    #[test]
    fn grid_function_edges() {
        let spec = cube_spec(10, 0.1);
        let at = |x: f64| world_to_voxel(&Vector3::new(x, 0.0, 0.0), &spec).i;
        assert_eq!(at(0.0), 1);
        assert_eq!(at(0.05), 1);
        assert_eq!(at(0.1000001), 2);
        assert_eq!(at(1.0), 10);
        assert_eq!(at(7.0), 10);
        assert_eq!(at(-3.0), 1);
        assert_eq!(world_to_voxel(&Vector3::new(f64::NAN, 0.0, 0.0), &spec).i, 1);
    }

    #[test]
    fn spec_rejects_small_or_bad() {
        assert!(matches!(
            GridSpec::new(Vector3::zeros(), 0.1, [2, 5, 5]),
            Err(Error::GridTooSmall(_))
        ));
        assert!(GridSpec::new(Vector3::zeros(), 0.0, [5, 5, 5]).is_err());
        assert!(GridSpec::new(Vector3::zeros(), -1.0, [5, 5, 5]).is_err());
    }

    #[test]
    fn offset_round_trip() {
        let spec = GridSpec::new(Vector3::zeros(), 1.0, [3, 4, 5]).unwrap();
        for o in 0..spec.len() {
            assert_eq!(spec.offset_of(spec.index_of(o)), o);
        }
        // k is the fastest axis
        assert_eq!(spec.offset_of(VoxelIndex::new(1, 1, 2)), 1);
        assert_eq!(spec.offset_of(VoxelIndex::new(1, 2, 1)), 5);
    }

    #[test]
    fn single_voxel_sdf() {
        let spec = cube_spec(5, 0.1);
        let mut occ = OccupancyGrid::empty(spec);
        let c = VoxelIndex::new(3, 3, 3);
        occ.set(c, true);
        let sdf = construct_sdf(&occ).unwrap();
        assert_eq!(sdf.value(c), 0.0);
        for n in [
            VoxelIndex::new(2, 3, 3),
            VoxelIndex::new(4, 3, 3),
            VoxelIndex::new(3, 2, 3),
            VoxelIndex::new(3, 4, 3),
            VoxelIndex::new(3, 3, 2),
            VoxelIndex::new(3, 3, 4),
        ] {
            assert_eq!(sdf.value(n), 0.1);
        }
        assert_eq!(extract_zero_set(&sdf), vec![c]);
    }

    #[test]
    fn block_center_is_one_voxel_deep() {
        let spec = cube_spec(9, 0.05);
        let occ = OccupancyGrid::from_fn(spec, |v| {
            (4..=6).contains(&v.i) && (4..=6).contains(&v.j) && (4..=6).contains(&v.k)
        });
        let sdf = construct_sdf(&occ).unwrap();
        assert_eq!(sdf.value(VoxelIndex::new(5, 5, 5)), -0.05);
        let zero = extract_zero_set(&sdf);
        assert_eq!(zero.len(), 26);
        assert!(!zero.contains(&VoxelIndex::new(5, 5, 5)));
    }

    #[test]
    fn degenerate_occupancy_is_rejected() {
        let spec = cube_spec(4, 0.1);
        assert!(matches!(
            construct_sdf(&OccupancyGrid::empty(spec.clone())),
            Err(Error::EmptyOccupancy)
        ));
        let full = OccupancyGrid::from_fn(spec, |_| true);
        assert!(matches!(construct_sdf(&full), Err(Error::FullOccupancy)));
        assert!(matches!(construct_sdf_edt(&full), Err(Error::FullOccupancy)));
    }

    #[test]
    fn query_exact_center_and_midpoint() {
        let spec = GridSpec::new(Vector3::zeros(), 0.1, [4, 3, 3]).unwrap();
        let mut values = vec![1.0; spec.len()];
        values[spec.offset(1, 1, 1)] = 0.1;
        values[spec.offset(2, 1, 1)] = 0.3;
        let sdf = SdfGrid::new(spec.clone(), values, "S_0").unwrap();
        let a = spec.voxel_center(VoxelIndex::new(2, 2, 2));
        let b = spec.voxel_center(VoxelIndex::new(3, 2, 2));
        assert_eq!(sdf.query(&a), 0.1);
        assert_relative_eq!(sdf.query(&((a + b) * 0.5)), 0.2, epsilon = 1e-12);
        assert_eq!(sdf.query(&Vector3::new(-0.01, 0.1, 0.1)), sdf.sentinel());
        assert_eq!(sdf.query_with(&((a + b) * 0.5 - Vector3::new(0.001, 0.0, 0.0)), QueryMode::Nearest), 0.1);
    }

    #[test]
    fn sentinel_bounds_every_distance() {
        let spec = cube_spec(16, 0.01);
        // diagonal 0.277 m rounds up to 1 m
        assert_eq!(spec.sentinel(), 1.0);
        let spec = cube_spec(100, 0.05);
        assert_eq!(spec.sentinel(), 9.0);
    }

    #[test]
    fn gradient_query_normalizes() {
        let spec = GridSpec::new(Vector3::zeros(), 1.0, [3, 3, 3]).unwrap();
        let mut vectors = vec![Vector3::zeros(); spec.len()];
        vectors[spec.offset(0, 1, 1)] = Vector3::new(1.0, 0.0, 0.0);
        vectors[spec.offset(1, 1, 1)] = Vector3::new(0.0, 1.0, 0.0);
        vectors[spec.offset(2, 1, 1)] = Vector3::new(2.0, 0.0, 0.0);
        let grad = GradientGrid { spec: spec.clone(), vectors };
        let c2 = spec.voxel_center(VoxelIndex::new(3, 2, 2));
        assert_eq!(grad.query(&c2), Vector3::new(1.0, 0.0, 0.0));
        let mid = (spec.voxel_center(VoxelIndex::new(1, 2, 2)) + spec.voxel_center(VoxelIndex::new(2, 2, 2))) * 0.5;
        let g = grad.query(&mid);
        assert_relative_eq!(g, Vector3::new(0.5f64.sqrt(), 0.5f64.sqrt(), 0.0), epsilon = 1e-12);
        assert_eq!(grad.query(&Vector3::new(5.0, 1.0, 1.0)), Vector3::zeros());
        // corner region where every sample is zero
        assert_eq!(grad.query(&Vector3::new(0.1, 0.1, 0.1)), Vector3::zeros());
    }

    #[test]
    fn plateau_has_zero_gradient() {
        let spec = cube_spec(5, 0.1);
        let sdf = SdfGrid::new(spec.clone(), vec![spec.sentinel(); spec.len()], "L_1").unwrap();
        let grad = gradient_field(&sdf).unwrap();
        assert!(grad.vectors.iter().all(|g| *g == Vector3::zeros()));
    }

    #[test]
    fn half_space_gradient_points_along_x() {
        let spec = cube_spec(9, 0.1);
        let occ = OccupancyGrid::from_fn(spec.clone(), |v| v.i <= 4);
        let sdf = construct_sdf(&occ).unwrap();
        let grad = gradient_field(&sdf).unwrap();
        for v in spec.voxels() {
            if (2..=8).contains(&v.i) {
                let g = grad.vector(v);
                assert_relative_eq!(g.x, 1.0, epsilon = 1e-9);
                assert_relative_eq!(g.y, 0.0, epsilon = 1e-12);
                assert_relative_eq!(g.z, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn closing_fills_single_hole() {
        let spec = cube_spec(9, 0.1);
        let mut occ = OccupancyGrid::from_fn(spec, |v| {
            (2..=8).contains(&v.i) && (2..=8).contains(&v.j) && (2..=8).contains(&v.k)
        });
        let hole = VoxelIndex::new(5, 5, 5);
        occ.set(hole, false);
        let closed = occ.closed(1);
        assert!(closed.get(hole));
        // closing is extensive
        for (a, b) in occ.occupied.iter().zip(&closed.occupied) {
            assert!(!a || *b);
        }
    }

    #[test]
    fn covering_spans_requested_box() {
        let spec = GridSpec::covering(
            Vector3::new(-0.1, -0.2, 0.0),
            Vector3::new(0.1, 0.2, 0.5),
            0.05,
            0.1,
        )
        .unwrap();
        assert!(spec.origin.x <= -0.2 && spec.max_corner().z >= 0.6);
        assert_eq!(spec.dims, [8, 12, 14]);
    }
}
