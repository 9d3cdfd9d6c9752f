use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

/// Rigid transform: `p' = rotation * p + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Fixed-axis roll, pitch, yaw (R = Rz(yaw)·Ry(pitch)·Rx(roll)).
    pub fn from_xyz_rpy(xyz: Vector3<f64>, rpy: Vector3<f64>) -> Self {
        Self {
            rotation: *Rotation3::from_euler_angles(rpy.x, rpy.y, rpy.z).matrix(),
            translation: xyz,
        }
    }

    pub fn rpy(&self) -> Vector3<f64> {
        let (r, p, y) = Rotation3::from_matrix_unchecked(self.rotation).euler_angles();
        Vector3::new(r, p, y)
    }

    #[inline]
    pub fn compose(&self, rhs: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * rhs.rotation,
            translation: self.rotation * rhs.translation + self.translation,
        }
    }

    #[inline]
    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    #[inline]
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    /// Rotation only; directions and velocities do not translate.
    #[inline]
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * v
    }

    pub fn is_rigid(&self, tol: f64) -> bool {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax() <= tol
            && (self.rotation.determinant() - 1.0).abs() <= tol
    }

    /// Linear interpolation of translation and spherical interpolation of rotation.
    pub fn interpolate(&self, other: &Pose, s: f64) -> Pose {
        let a = nalgebra::UnitQuaternion::from_matrix(&self.rotation);
        let b = nalgebra::UnitQuaternion::from_matrix(&other.rotation);
        let q = a.slerp(&b, s);
        Pose {
            rotation: *q.to_rotation_matrix().matrix(),
            translation: self.translation.lerp(&other.translation, s),
        }
    }
}

impl std::ops::Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

/// `{xyz, rpy}` as written in robot and scenario files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PoseSpec {
    #[serde(default)]
    pub xyz: [f64; 3],
    #[serde(default)]
    pub rpy: [f64; 3],
}

impl From<PoseSpec> for Pose {
    fn from(s: PoseSpec) -> Pose {
        Pose::from_xyz_rpy(Vector3::from(s.xyz), Vector3::from(s.rpy))
    }
}

impl From<&Pose> for PoseSpec {
    fn from(p: &Pose) -> PoseSpec {
        let rpy = p.rpy();
        PoseSpec {
            xyz: p.translation.into(),
            rpy: rpy.into(),
        }
    }
}
