//! Serial-chain forward kinematics and geometric Jacobians.
//!
//! Frames: link `i`'s frame is the frame after joint `i`'s motion. Joint axes
//! are expressed in that frame (which the joint's own motion leaves unchanged),
//! so `s_i = R_i · axis_i` and `p_i` is the link frame's origin.

mod pose;
mod robot_file;

use nalgebra::{DMatrix, Matrix3, Matrix3xX, Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reachability::ReachSdf;
use crate::sdf_grid::shapes::Shape;
use crate::sdf_grid::{GradientGrid, SdfGrid};

pub use pose::{Pose, PoseSpec};
pub use robot_file::{load_robot, GridOptions, LinkDescription, RobotDescription};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Joint {
    pub kind: JointKind,
    /// Unit axis in the joint frame.
    pub axis: Vector3<f64>,
    /// Fixed transform from the parent link frame to the joint frame.
    pub origin: Pose,
    pub limits: [f64; 2],
}

impl Joint {
    pub fn new(kind: JointKind, axis: Vector3<f64>, origin: Pose, limits: [f64; 2]) -> Result<Self> {
        let n = axis.norm();
        if !(n > 0.0) {
            return Err(Error::Parse("joint axis must be non-zero".into()));
        }
        if !(limits[0] < limits[1]) {
            return Err(Error::Parse(format!(
                "joint limits {limits:?} must satisfy min < max"
            )));
        }
        Ok(Self {
            kind,
            axis: axis / n,
            origin,
            limits,
        })
    }

    #[inline]
    pub fn motion(&self, q: f64) -> Pose {
        match self.kind {
            JointKind::Revolute => Pose::new(
                *Rotation3::from_axis_angle(&Unit::new_unchecked(self.axis), q).matrix(),
                Vector3::zeros(),
            ),
            JointKind::Prismatic => Pose::from_translation(self.axis * q),
        }
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.limits[0], self.limits[1])
    }
}

/// One link with its precomputed local fields.
#[derive(Clone, Debug)]
pub struct Link {
    pub name: String,
    pub joint: Joint,
    pub shape: Shape,
    /// Signed distance to the link surface, in the link frame.
    pub sdf: SdfGrid,
    pub gradient: GradientGrid,
    /// The link's end point in its own frame (the next joint's origin, or the tool point).
    pub end: Vector3<f64>,
    /// Largest distance from `end` to any point of the link's bounding box.
    pub extent: f64,
    /// Reachable workspace of this link's end, base frame.
    pub reach: Option<ReachSdf>,
}

#[derive(Clone, Debug)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<Link>,
    /// Pose of the base in the world frame. World points map to the base by its inverse.
    pub base_pose: Pose,
    /// End-effector frame relative to the last link.
    pub tool: Pose,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointState(pub Vec<f64>);

impl JointState {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Poses of every link frame and the end effector, base frame.
#[derive(Clone, Debug)]
pub struct ForwardKinematics {
    pub links: Vec<Pose>,
    pub ee: Pose,
}

impl ForwardKinematics {
    /// Base-frame position of link `i`'s end point (0-based link index).
    pub fn link_end(&self, model: &RobotModel, i: usize) -> Vector3<f64> {
        self.links[i].transform_point(&model.links[i].end)
    }
}

/// Which frame a Jacobian is taken at.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JacobianTarget {
    /// 0-based link index; columns past this link are zero.
    Link(usize),
    EndEffector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    pub linear: Matrix3xX<f64>,
    pub angular: Matrix3xX<f64>,
}

impl Jacobian {
    /// `[J_p; J_r]` as a 6×N matrix.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.linear.ncols();
        let mut m = DMatrix::zeros(6, n);
        m.view_mut((0, 0), (3, n)).copy_from(&self.linear);
        m.view_mut((3, 0), (3, n)).copy_from(&self.angular);
        m
    }

    pub fn linear_dyn(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(3, self.linear.ncols(), self.linear.iter().copied())
    }
}

impl RobotModel {
    pub fn dof(&self) -> usize {
        self.links.len()
    }

    pub fn world_to_base(&self) -> Pose {
        self.base_pose.inverse()
    }

    pub fn check_dims(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                got: q.len(),
            });
        }
        Ok(())
    }

    pub fn clamp_to_limits(&self, q: &mut [f64]) -> bool {
        let mut saturated = false;
        for (v, link) in q.iter_mut().zip(&self.links) {
            let c = link.joint.clamp(*v);
            if c != *v {
                saturated = true;
                *v = c;
            }
        }
        saturated
    }

    pub fn within_limits(&self, q: &[f64]) -> bool {
        q.iter()
            .zip(&self.links)
            .all(|(v, l)| *v >= l.joint.limits[0] && *v <= l.joint.limits[1])
    }
}

/// Cumulative link poses in the base frame, then the tool pose.
pub fn forward_kinematics(model: &RobotModel, q: &[f64]) -> Result<ForwardKinematics> {
    model.check_dims(q)?;
    Ok(forward_kinematics_prefix(model, q, model.dof()))
}

/// Poses of the first `count` links only; joints past `count` are ignored.
pub(crate) fn forward_kinematics_prefix(
    model: &RobotModel,
    q: &[f64],
    count: usize,
) -> ForwardKinematics {
    let mut links = Vec::with_capacity(count);
    let mut t = Pose::identity();
    for (link, &qi) in model.links.iter().zip(q).take(count) {
        t = t.compose(&link.joint.origin).compose(&link.joint.motion(qi));
        links.push(t);
    }
    let ee = t.compose(&model.tool);
    ForwardKinematics { links, ee }
}

/// Geometric Jacobian at `target` for a reference point given in the base frame.
///
/// Revolute columns: `J_p = s × (p_ref − p_i)`, `J_r = Rᵀ s` where `R` is the
/// target frame's rotation (angular velocity expressed in that frame).
/// Prismatic columns: `J_p = s`, `J_r = 0`.
pub fn geometric_jacobian(
    model: &RobotModel,
    fk: &ForwardKinematics,
    target: JacobianTarget,
    reference_point: &Vector3<f64>,
) -> Jacobian {
    let n = model.dof();
    let (last, frame_rot): (usize, Matrix3<f64>) = match target {
        JacobianTarget::Link(i) => (i + 1, fk.links[i].rotation),
        JacobianTarget::EndEffector => (n, fk.ee.rotation),
    };
    let rt = frame_rot.transpose();
    let mut linear = Matrix3xX::zeros(n);
    let mut angular = Matrix3xX::zeros(n);
    for j in 0..last.min(fk.links.len()) {
        let frame = &fk.links[j];
        let s = frame.rotation * model.links[j].joint.axis;
        match model.links[j].joint.kind {
            JointKind::Revolute => {
                linear.set_column(j, &s.cross(&(reference_point - frame.translation)));
                angular.set_column(j, &(rt * s));
            }
            JointKind::Prismatic => {
                linear.set_column(j, &s);
            }
        }
    }
    Jacobian { linear, angular }
}

/// `Jᵀ (J Jᵀ + λ² I)⁻¹`. With `λ = 0` this is the Moore–Penrose inverse of a
/// full-row-rank `J`; rank deficiency is an error.
pub fn damped_pseudo_inverse(j: &DMatrix<f64>, damping: f64) -> Result<DMatrix<f64>> {
    let m = j.nrows();
    let jt = j.transpose();
    let mut a = j * &jt;
    if damping > 0.0 {
        for d in 0..m {
            a[(d, d)] += damping * damping;
        }
        let chol = a.cholesky().ok_or(Error::SingularMatrix)?;
        return Ok(jt * chol.inverse());
    }
    // Undamped: reject numerically singular J Jᵀ.
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let sv = a.clone().singular_values();
    if sv.min() <= 1e-12 * scale {
        return Err(Error::SingularMatrix);
    }
    let inv = a.try_inverse().ok_or(Error::SingularMatrix)?;
    Ok(jt * inv)
}

/// Moore–Penrose pseudo-inverse by SVD, dropping singular values below `tol`
/// (relative to the largest). Used where rank deficiency is structural.
pub fn svd_pseudo_inverse(j: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = j.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (tol * smax).max(f64::MIN_POSITIVE);
    svd.pseudo_inverse(eps)
        .unwrap_or_else(|_| DMatrix::zeros(j.ncols(), j.nrows()))
}

fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)])
}

/// Axis-angle vector of `R_currentᵀ · R_target` (matrix logarithm mapped to ℝ³).
pub fn orientation_error(current: &Matrix3<f64>, target: &Matrix3<f64>) -> Vector3<f64> {
    rotation_log(&(current.transpose() * target))
}

pub fn rotation_log(r: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos.acos();
    let w = vee(r);
    if theta < 1e-9 {
        return w * 0.5;
    }
    if std::f64::consts::PI - theta > 1e-4 {
        return w * (theta / (2.0 * theta.sin()));
    }
    // Near π, sin θ vanishes: recover the axis from the symmetric part.
    let one_minus = 1.0 - cos;
    let diag = Vector3::new(r[(0, 0)], r[(1, 1)], r[(2, 2)]);
    let big = diag.imax();
    let mut axis = Vector3::zeros();
    axis[big] = ((diag[big] - cos) / one_minus).max(0.0).sqrt();
    for a in 0..3 {
        if a != big {
            axis[a] = (r[(big, a)] + r[(a, big)]) / (2.0 * one_minus * axis[big]);
        }
    }
    axis.normalize_mut();
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    axis * theta
}
