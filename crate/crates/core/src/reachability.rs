//! Reachable-workspace fields for each link's end, and query-point pruning.
//!
//! The reachable set of link `i`'s end is found by traversing a lattice over
//! joints `1..=i` (later joints cannot move it), rasterizing every end
//! position, closing small sampling holes, and building a signed distance
//! field that is negative inside the reachable region. When the first joint
//! turns through a full revolution the set is a solid of revolution, so only
//! joints `2..=i` are sampled and the result is revolved about that axis.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{JointKind, Pose, RobotModel};
use crate::sdf_grid::{construct_sdf_edt, world_to_voxel, GridSpec, OccupancyGrid, SdfGrid};

/// Total FK samples the default lattice may use for one link.
pub const DEFAULT_SAMPLE_BUDGET: usize = 20_000_000;
/// Upper bound on lattice steps for one joint.
pub const MAX_STEPS: usize = 100_000;

/// Reach field of one link end, base frame.
#[derive(Clone, Debug)]
pub struct ReachSdf {
    pub sdf: SdfGrid,
    /// Upper bound on how far an off-lattice end position can lie from the
    /// nearest sampled one. Zero when unknown (e.g. loaded from disk).
    pub sampling_slack: f64,
}

impl ReachSdf {
    pub fn new(sdf: SdfGrid) -> Self {
        Self {
            sdf,
            sampling_slack: 0.0,
        }
    }

    #[inline]
    pub fn value(&self, p_base: &Vector3<f64>) -> f64 {
        self.sdf.query(p_base)
    }

    pub fn resolution(&self) -> f64 {
        self.sdf.spec.resolution
    }
}

/// Threshold rule for keeping a query point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PruneMode {
    /// Keep points with reach value < 0.
    Strict,
    /// Keep points with reach value < one reach voxel.
    Voxel,
    /// Keep every point that can come within `radius` of the link's surface:
    /// reach value < link extent + radius + sampling slack + one voxel.
    Lossless { radius: f64 },
}

impl PruneMode {
    pub fn margin(&self, reach: &ReachSdf, link_extent: f64) -> f64 {
        let delta = reach.resolution();
        match *self {
            PruneMode::Strict => 0.0,
            PruneMode::Voxel => delta,
            PruneMode::Lossless { radius } => link_extent + radius + reach.sampling_slack + delta,
        }
    }
}

fn check_link(model: &RobotModel, link: usize) -> Result<()> {
    if link == 0 || link > model.dof() {
        return Err(Error::InvalidConfig(format!(
            "link index {link} outside 1..={}",
            model.dof()
        )));
    }
    Ok(())
}

/// Steps per swept joint. The sample budget is split in proportion to each
/// joint's range times its lever arm, so every joint adds about the same
/// sampling slack. No joint is stepped finer than a quarter voxel of end
/// motion, and joints that cannot move the end point get two steps.
pub fn default_joint_steps(model: &RobotModel, link: usize, opts: &ReachOptions) -> Vec<usize> {
    let weights: Vec<f64> = (0..link)
        .map(|j| {
            let [lo, hi] = model.links[j].joint.limits;
            (hi - lo) * lever(model, link, j)
        })
        .collect();
    let caps: Vec<f64> = weights
        .iter()
        .map(|w| (w / (0.25 * opts.resolution)).ceil().max(1.0) + 1.0)
        .collect();
    let budget = opts.budget.max(1) as f64;
    // Water-filling in log space: joints whose share exceeds their cap are
    // pinned there and the rest of the budget is shared again.
    let revolved = full_turn(model);
    let mut pinned: Vec<bool> = weights.iter().enumerate().map(|(j, &w)| w <= 1e-9 || (revolved && j == 0)).collect();
    let mut steps_f: Vec<f64> = (0..link)
        .map(|j| match (pinned[j], revolved && j == 0) {
            // Unused by the sweep, so it costs nothing.
            (_, true) => 1.0,
            (true, false) => 2.0,
            (false, false) => caps[j],
        })
        .collect();
    loop {
        let free: Vec<usize> = (0..link).filter(|&j| !pinned[j]).collect();
        if free.is_empty() {
            break;
        }
        let used: f64 = (0..link).filter(|&j| pinned[j]).map(|j| steps_f[j].ln()).sum();
        let log_scale = (budget.ln() - used - free.iter().map(|&j| weights[j].ln()).sum::<f64>()) / free.len() as f64;
        let mut changed = false;
        for &j in &free {
            let share = log_scale.exp() * weights[j];
            if share >= caps[j] {
                steps_f[j] = caps[j];
                pinned[j] = true;
                changed = true;
            } else {
                steps_f[j] = share;
            }
        }
        if !changed {
            break;
        }
    }
    let mut steps: Vec<usize> = steps_f.iter().map(|&n| (n.floor() as usize).clamp(2, MAX_STEPS)).collect();
    let first = usize::from(revolved);
    while steps[first..].iter().map(|&n| n as f64).product::<f64>() > budget {
        let Some((j, _)) = steps.iter().enumerate().skip(first).filter(|(_, &n)| n > 2).max_by_key(|(_, &n)| n) else {
            break;
        };
        steps[j] -= 1;
    }
    steps
}

/// Bound on how far link `link`'s end moves per radian of joint `j` (per
/// meter for a prismatic joint). 0-based `j`, 1-based `link`.
fn lever(model: &RobotModel, link: usize, j: usize) -> f64 {
    let links = &model.links[..link];
    let joint = &links[j].joint;
    match joint.kind {
        JointKind::Prismatic => 1.0,
        // The last swept joint turns the end on a circle about its own axis.
        JointKind::Revolute if j + 1 == link => {
            let end = links[link - 1].end;
            (end - joint.axis * end.dot(&joint.axis)).norm()
        }
        // Everything from joint j's origin out to the end.
        JointKind::Revolute => {
            links[j + 1..]
                .iter()
                .map(|m| m.joint.origin.translation.norm() + prismatic_reach(m))
                .sum::<f64>()
                + links[link - 1].end.norm()
        }
    }
}

/// Upper bound on the distance from link `link`'s end to its nearest lattice
/// sample. `resolution` is the reach grid's voxel size, which sets the
/// revolution's sampling when the first joint turns fully.
pub fn sampling_slack(model: &RobotModel, link: usize, steps: &[usize], resolution: f64) -> f64 {
    let revolved = full_turn(model);
    let lattice: f64 = (usize::from(revolved)..link)
        .map(|j| {
            let l = &model.links[j].joint;
            let step = (l.limits[1] - l.limits[0]) / (steps[j] - 1) as f64;
            0.5 * step * lever(model, link, j)
        })
        .sum();
    if revolved {
        // Profile cell half-diagonal plus half an arc step.
        let c = REVOLVE_CELL * resolution;
        lattice + c * (std::f64::consts::FRAC_1_SQRT_2 + 0.5)
    } else {
        lattice
    }
}

/// Profile cell and arc step of a revolved sweep, in reach voxels.
const REVOLVE_CELL: f64 = 0.25;

/// True when the first joint is revolute with a range of at least one turn.
pub fn full_turn(model: &RobotModel) -> bool {
    let j = &model.links[0].joint;
    j.kind == JointKind::Revolute && j.limits[1] - j.limits[0] >= std::f64::consts::TAU - 1e-9
}

fn prismatic_reach(link: &crate::kinematics::Link) -> f64 {
    match link.joint.kind {
        JointKind::Prismatic => link.joint.limits[0].abs().max(link.joint.limits[1].abs()),
        JointKind::Revolute => 0.0,
    }
}

/// Bound on the base-frame distance of link `link`'s end from the base origin.
pub fn reach_radius(model: &RobotModel, link: usize) -> f64 {
    model.links[..link]
        .iter()
        .map(|m| m.joint.origin.translation.norm() + prismatic_reach(m))
        .sum::<f64>()
        + model.links[link - 1].end.norm()
}

/// Grid for link `link`'s reach field, padded by `padding`.
pub fn reach_grid_spec(model: &RobotModel, link: usize, resolution: f64, padding: f64) -> Result<GridSpec> {
    check_link(model, link)?;
    let r = reach_radius(model, link);
    GridSpec::covering(Vector3::repeat(-r), Vector3::repeat(r), resolution, padding)
}

/// Mark every voxel hit by link `link`'s end over the joint lattice.
/// `link` is 1-based; `joint_steps` gives the lattice size for joints
/// `1..=link`. The first entry is unused when the first joint turns fully.
pub fn sweep_reachable(
    model: &RobotModel,
    link: usize,
    spec: &GridSpec,
    joint_steps: &[usize],
) -> Result<OccupancyGrid> {
    check_link(model, link)?;
    if joint_steps.len() != link {
        return Err(Error::DimensionMismatch {
            expected: link,
            got: joint_steps.len(),
        });
    }
    if joint_steps.iter().any(|&s| s < 2) {
        return Err(Error::InvalidConfig("every swept joint needs at least 2 steps".into()));
    }
    let values: Vec<Vec<f64>> = (0..link)
        .map(|j| {
            let [lo, hi] = model.links[j].joint.limits;
            let n = joint_steps[j];
            (0..n).map(|t| lo + (hi - lo) * t as f64 / (n - 1) as f64).collect()
        })
        .collect();
    let marks = if full_turn(model) {
        revolve(model, link, spec, &values)
    } else {
        let first = &model.links[0];
        par_marks(&values[0], spec.len(), |q0, marks| {
            let t = first.joint.origin.compose(&first.joint.motion(q0));
            descend(model, &values, 1, link, &t, &mut |p| {
                marks[spec.offset_of(world_to_voxel(&p, spec))] = true;
            });
        })
    };
    Ok(OccupancyGrid {
        spec: spec.clone(),
        occupied: marks,
    })
}

/// OR together boolean grids filled in parallel, one task per value.
fn par_marks(values: &[f64], len: usize, fill: impl Fn(f64, &mut Vec<bool>) + Sync) -> Vec<bool> {
    values
        .par_iter()
        .fold(
            || vec![false; len],
            |mut marks, &v| {
                fill(v, &mut marks);
                marks
            },
        )
        .reduce(
            || vec![false; len],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x |= y;
                }
                a
            },
        )
}

/// Sample joints `2..=link` in the first joint's frame, record each end
/// position as (distance from the axis, height along it) on a fine profile
/// grid, then sweep every profile cell around the axis.
fn revolve(model: &RobotModel, link: usize, spec: &GridSpec, values: &[Vec<f64>]) -> Vec<bool> {
    let first = &model.links[0].joint;
    let axis = first.axis;
    let cell = REVOLVE_CELL * spec.resolution;
    let r = reach_radius(model, link);
    let (nr, nh) = ((r / cell).ceil() as usize + 1, (2.0 * r / cell).ceil() as usize + 1);
    let profile_at = |p: &Vector3<f64>| {
        let h = p.dot(&axis);
        let rho = (p - axis * h).norm();
        let i = ((rho / cell).floor() as usize).min(nr - 1);
        let k = (((h + r) / cell).floor().max(0.0) as usize).min(nh - 1);
        i * nh + k
    };
    let profile = if link == 1 {
        let mut marks = vec![false; nr * nh];
        marks[profile_at(&model.links[0].end)] = true;
        marks
    } else {
        par_marks(&values[1], nr * nh, |q1, marks| {
            let joint = &model.links[1].joint;
            let t = joint.origin.compose(&joint.motion(q1));
            descend(model, values, 2, link, &t, &mut |p| marks[profile_at(&p)] = true);
        })
    };
    // Orthonormal frame around the axis.
    let u = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (u - axis * u.dot(&axis)).normalize();
    let v = axis.cross(&u);
    let cells: Vec<usize> = (0..profile.len()).filter(|&c| profile[c]).collect();
    let chunk = cells.len().div_ceil(rayon::current_num_threads().max(1)).max(1);
    cells
        .par_chunks(chunk)
        .map(|chunk| {
            let mut marks = vec![false; spec.len()];
            for &c in chunk {
                let rho = ((c / nh) as f64 + 0.5) * cell;
                let h = ((c % nh) as f64 + 0.5) * cell - r;
                let n = ((std::f64::consts::TAU * rho / cell).ceil() as usize).max(1);
                for a in 0..n {
                    let th = std::f64::consts::TAU * a as f64 / n as f64;
                    let p = axis * h + (u * th.cos() + v * th.sin()) * rho;
                    let w = first.origin.transform_point(&p);
                    if spec.contains(&w) {
                        marks[spec.offset_of(world_to_voxel(&w, spec))] = true;
                    }
                }
            }
            marks
        })
        .reduce(
            || vec![false; spec.len()],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x |= y;
                }
                a
            },
        )
}

/// Visit link `link`'s end for every lattice point of joints `depth..link`.
fn descend(
    model: &RobotModel,
    values: &[Vec<f64>],
    depth: usize,
    link: usize,
    parent: &Pose,
    emit: &mut impl FnMut(Vector3<f64>),
) {
    if depth == link {
        emit(parent.transform_point(&model.links[link - 1].end));
        return;
    }
    let joint = &model.links[depth].joint;
    let base = parent.compose(&joint.origin);
    for &q in &values[depth] {
        let t = base.compose(&joint.motion(q));
        descend(model, values, depth + 1, link, &t, emit);
    }
}

/// Close sampling holes with a cubic element of `dilation` voxels, then build the field.
pub fn build_reach_sdf(occ: &OccupancyGrid, dilation: usize) -> Result<SdfGrid> {
    if occ.count() == 0 {
        return Err(Error::EmptyOccupancy);
    }
    construct_sdf_edt(&occ.closed(dilation))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReachOptions {
    #[serde(default = "default_reach_resolution")]
    pub resolution: f64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_dilation")]
    pub dilation: usize,
    /// Largest avoidance radius the grid must support. The grid is padded by
    /// link extent + this + sampling slack + two voxels, so every lossless
    /// margin up to this radius stays inside it.
    #[serde(default = "default_reach_radius")]
    pub radius: f64,
}

fn default_reach_resolution() -> f64 {
    0.04
}
fn default_budget() -> usize {
    DEFAULT_SAMPLE_BUDGET
}
fn default_dilation() -> usize {
    1
}
fn default_reach_radius() -> f64 {
    0.3
}

impl Default for ReachOptions {
    fn default() -> Self {
        Self {
            resolution: default_reach_resolution(),
            budget: default_budget(),
            dilation: default_dilation(),
            radius: default_reach_radius(),
        }
    }
}

/// Sweep and build the reach field of link `link` (1-based).
pub fn build_link_reach(model: &RobotModel, link: usize, opts: &ReachOptions) -> Result<ReachSdf> {
    build_link_reach_with_steps(model, link, opts, &default_joint_steps(model, link, opts))
}

/// As [`build_link_reach`] with an explicit joint lattice.
pub fn build_link_reach_with_steps(
    model: &RobotModel,
    link: usize,
    opts: &ReachOptions,
    steps: &[usize],
) -> Result<ReachSdf> {
    let slack = sampling_slack(model, link, steps, opts.resolution);
    let pad = model.links[link - 1].extent + opts.radius + slack + 2.0 * opts.resolution;
    let spec = reach_grid_spec(model, link, opts.resolution, pad)?;
    let occ = sweep_reachable(model, link, &spec, steps)?;
    let sdf = build_reach_sdf(&occ, opts.dilation)?.with_frame(format!("B/EE_{link}"));
    Ok(ReachSdf {
        sdf,
        sampling_slack: slack,
    })
}

/// Attach reach fields to every link that lacks one.
pub fn attach_reach(model: &mut RobotModel, opts: &ReachOptions) -> Result<()> {
    let missing: Vec<usize> = (1..=model.dof())
        .filter(|&i| model.links[i - 1].reach.is_none())
        .collect();
    let built = missing
        .par_iter()
        .map(|&i| build_link_reach(model, i, opts).map(|r| (i, r)))
        .collect::<Result<Vec<_>>>()?;
    for (i, r) in built {
        model.links[i - 1].reach = Some(r);
    }
    Ok(())
}

/// Static query points for one link: world voxel centers inside an obstacle
/// (`scene_sdf <= 0`) whose reach value is below `margin`.
pub fn prune_static(
    scene_sdf: &SdfGrid,
    reach: &ReachSdf,
    world_to_base: &Pose,
    margin: f64,
) -> Vec<Vector3<f64>> {
    let spec = &scene_sdf.spec;
    scene_sdf
        .values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v <= 0.0)
        .map(|(o, _)| spec.voxel_center(spec.index_of(o)))
        .filter(|p| reach.value(&world_to_base.transform_point(p)) < margin)
        .collect()
}

/// Dynamic query points for one link: cloud points whose reach value is below `margin`.
pub fn prune_dynamic(
    cloud: &[Vector3<f64>],
    reach: &ReachSdf,
    world_to_base: &Pose,
    margin: f64,
) -> Vec<Vector3<f64>> {
    cloud
        .iter()
        .filter(|p| reach.value(&world_to_base.transform_point(p)) < margin)
        .copied()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::test_models::{planar, six_dof};
    use crate::kinematics::{forward_kinematics, Pose};
    use crate::sdf_grid::VoxelIndex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn plane_spec(half: f64, delta: f64) -> GridSpec {
        // Plane z = 0 sits inside the middle voxel layer.
        let n = (2.0 * half / delta).ceil() as usize;
        GridSpec::new(Vector3::new(-half, -half, -1.5 * delta), delta, [n, n, 3]).unwrap()
    }

    #[test]
    fn one_link_sweep_is_a_circle() {
        let m = planar(&[1.0]);
        let delta = 0.05;
        let spec = plane_spec(1.2, delta);
        let occ = sweep_reachable(&m, 1, &spec, &[360]).unwrap();
        for v in spec.voxels() {
            let c = spec.voxel_center(v);
            let r = (c.x * c.x + c.y * c.y).sqrt();
            if occ.get(v) {
                assert_eq!(v.k, 2);
                assert!((r - 1.0).abs() <= delta * 2f64.sqrt(), "r = {r}");
            }
        }
        // the ring is closed: every angle hits a voxel
        assert!(occ.count() as f64 >= 2.0 * PI / (delta * 2f64.sqrt()));
    }

    #[test]
    fn sweep_preconditions() {
        let m = planar(&[1.0, 0.5]);
        let spec = plane_spec(2.0, 0.1);
        assert!(matches!(sweep_reachable(&m, 0, &spec, &[]), Err(Error::InvalidConfig(_))));
        assert!(matches!(
            sweep_reachable(&m, 2, &spec, &[10]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(sweep_reachable(&m, 1, &spec, &[1]).is_err());
        let empty = OccupancyGrid::empty(spec);
        assert!(matches!(build_reach_sdf(&empty, 1), Err(Error::EmptyOccupancy)));
    }

    #[test]
    fn default_steps_respect_budget() {
        let m = six_dof();
        let opts = ReachOptions::default();
        // Few joints: every joint reaches a quarter voxel of end motion.
        let two = default_joint_steps(&m, 2, &opts);
        assert!(sampling_slack(&m, 2, &two, opts.resolution) <= 0.5 * opts.resolution, "{two:?}");
        let s = default_joint_steps(&m, 6, &opts);
        assert!(s[1..].iter().product::<usize>() <= opts.budget);
        // The first joint is revolved rather than sampled; the next one
        // moves the end the most and gets the finest steps.
        assert!(full_turn(&m));
        assert_eq!(s[0], 2);
        assert!(s[1] > s[3] && s[1] > s[5], "{s:?}");
        assert!(sampling_slack(&m, 6, &s, opts.resolution) < sampling_slack(&m, 6, &[16; 6], opts.resolution));
        // The fifth link's end sits on its own joint axis.
        assert_eq!(default_joint_steps(&m, 5, &opts)[4], 2);
        let tiny = ReachOptions { budget: 1, ..opts };
        assert_eq!(default_joint_steps(&m, 4, &tiny), vec![2; 4]);
    }

    #[test]
    fn annulus_field_signs() {
        let m = planar(&[1.0, 0.5]);
        let delta = 0.04;
        let spec = plane_spec(1.7, delta);
        let occ = sweep_reachable(&m, 2, &spec, &[181, 181]).unwrap();
        let sdf = build_reach_sdf(&occ, 1).unwrap();
        // strictly inside the annulus
        assert!(sdf.query(&Vector3::new(1.0, 0.0, 0.0)) < 0.0);
        assert!(sdf.query(&Vector3::new(0.0, -0.8, 0.0)) < 0.0);
        // the hole in the middle
        assert!(sdf.query(&Vector3::new(0.0, 0.0, 0.0)) > 0.0);
        assert!(sdf.query(&Vector3::new(0.1, 0.1, 0.0)) > 0.0);
    }

    #[test]
    fn closing_seals_a_hole() {
        let spec = GridSpec::new(Vector3::zeros(), 0.1, [11, 11, 11]).unwrap();
        let mut occ = OccupancyGrid::from_fn(spec, |v| {
            (4..=8).contains(&v.i) && (4..=8).contains(&v.j) && (4..=8).contains(&v.k)
        });
        let hole = VoxelIndex::new(6, 6, 6);
        occ.set(hole, false);
        let sdf = build_reach_sdf(&occ, 1).unwrap();
        assert!(sdf.value(hole) < 0.0);
    }

    #[test]
    fn prune_filters_match_brute_force() {
        let m = planar(&[1.0, 0.5]);
        let spec = plane_spec(1.7, 0.04);
        let occ = sweep_reachable(&m, 2, &spec, &[121, 121]).unwrap();
        let reach = ReachSdf::new(build_reach_sdf(&occ, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cloud: Vec<Vector3<f64>> = (0..500)
            .map(|_| Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), 0.0))
            .collect();
        let id = Pose::identity();
        let kept = prune_dynamic(&cloud, &reach, &id, 0.0);
        let oracle: Vec<_> = cloud.iter().filter(|p| reach.sdf.query(p) < 0.0).copied().collect();
        assert_eq!(kept, oracle);
        let far: Vec<_> = cloud.iter().map(|p| p + Vector3::new(10.0, 0.0, 0.0)).collect();
        assert!(prune_dynamic(&far, &reach, &id, 0.0).is_empty());
        let inside = vec![Vector3::new(1.0, 0.0, 0.0); 7];
        assert_eq!(prune_dynamic(&inside, &reach, &id, 0.0).len(), 7);
    }

    #[test]
    fn lossless_pruning_keeps_every_touching_point() {
        // Exhaustive over a 2-DoF lattice: any point touching a link at some q survives.
        let mut m = planar(&[0.6, 0.4]);
        let opts = ReachOptions {
            resolution: 0.05,
            budget: 3600,
            dilation: 1,
            radius: 0.3,
        };
        attach_reach(&mut m, &opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cloud: Vec<Vector3<f64>> = (0..400)
            .map(|_| Vector3::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2), rng.random_range(-0.06..0.06)))
            .collect();
        let id = Pose::identity();
        for link in 0..2 {
            let reach = m.links[link].reach.as_ref().unwrap();
            let margin = PruneMode::Lossless { radius: 0.0 }.margin(reach, m.links[link].extent);
            let kept = prune_dynamic(&cloud, reach, &id, margin);
            for a in 0..72 {
                for b in 0..72 {
                    let q = [-PI + a as f64 * PI / 36.0, -PI + b as f64 * PI / 36.0];
                    let fk = forward_kinematics(&m, &q).unwrap();
                    let inv = fk.links[link].inverse();
                    for p in &cloud {
                        if m.links[link].shape.contains(&inv.transform_point(p)) {
                            assert!(kept.contains(p), "link {link} point {p:?} pruned");
                        }
                    }
                }
            }
        }
    }
}
