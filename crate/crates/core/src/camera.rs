//! Pinhole camera model. Camera frame: x right, y down, z forward. World
//! frame: +Z up.

use nalgebra::{Matrix3, Point2, Point3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub near: f64,
    pub far: f64,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            width: 320,
            height: 240,
            fx: 285.0,
            fy: 285.0,
            cx: 160.0,
            cy: 120.0,
            near: 0.4,
            far: 8.0,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.cx, self.cy, self.near, self.far].iter().all(|v| v.is_finite());
        if !finite || self.width == 0 || self.height == 0 {
            return Err(Error::Parameter("intrinsics must be finite with nonzero size".into()));
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return Err(Error::Parameter(format!("focal lengths must be positive, got ({}, {})", self.fx, self.fy)));
        }
        if !(0.0 < self.near && self.near < self.far) {
            return Err(Error::Parameter(format!("need 0 < near < far, got near {} far {}", self.near, self.far)));
        }
        if !(0.0..self.width as f64).contains(&self.cx) || !(0.0..self.height as f64).contains(&self.cy) {
            return Err(Error::Parameter(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Pixel coordinates of a camera-frame point; pixel centers sit on integers.
    #[inline]
    pub fn project(&self, p: &Point3<f64>) -> Point2<f64> {
        Point2::new(self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy)
    }

    /// Camera-frame direction through pixel `(u, v)` with unit z.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Camera-frame point at planar depth `z` behind pixel `(u, v)`.
    #[inline]
    pub fn back_project(&self, u: f64, v: f64, z: f64) -> Point3<f64> {
        Point3::from(self.ray(u, v) * z)
    }

    /// Same camera with the image scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let size = |n: usize| ((n as f64 * factor).round() as usize).max(1);
        Self {
            width: size(self.width),
            height: size(self.height),
            fx: self.fx * factor,
            fy: self.fy * factor,
            cx: self.cx * factor,
            cy: self.cy * factor,
            ..*self
        }
    }
}

/// Rigid world-to-camera transform: `x_cam = R * x_world + t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraPose {
    rotation: Rotation3<f64>,
    translation: Vector3<f64>,
}

impl CameraPose {
    /// Fails unless `rotation` is orthonormal with determinant +1 within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        if !(err <= 1e-9) || (rotation.determinant() - 1.0).abs() > 1e-9 {
            return Err(Error::Geometry("camera rotation is not a proper rotation".into()));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Geometry("camera translation is not finite".into()));
        }
        Ok(Self {
            rotation: Rotation3::from_matrix_unchecked(rotation),
            translation,
        })
    }

    /// Camera at `position` looking along heading `yaw` (radians from +X)
    /// tilted up by `pitch`; the image x axis stays horizontal.
    pub fn look(position: Point3<f64>, yaw: f64, pitch: f64) -> Self {
        let forward = Vector3::new(yaw.cos() * pitch.cos(), yaw.sin() * pitch.cos(), pitch.sin());
        let right = Vector3::new(yaw.sin(), -yaw.cos(), 0.0);
        let down = forward.cross(&right);
        let cam_to_world = Matrix3::from_columns(&[right, down, forward]);
        let rotation = Rotation3::from_matrix_unchecked(cam_to_world.transpose());
        Self {
            rotation,
            translation: -(rotation * position.coords),
        }
    }

    /// Camera at `position` looking at `target`; `target` must not lie
    /// straight above or below.
    pub fn look_at(position: Point3<f64>, target: Point3<f64>) -> Result<Self> {
        let d = target - position;
        let horizontal = d.x.hypot(d.y);
        if horizontal < 1e-9 {
            return Err(Error::Geometry("look-at direction is vertical".into()));
        }
        Ok(Self::look(position, d.y.atan2(d.x), d.z.atan2(horizontal)))
    }

    /// Inverse of [`CameraPose::camera_in_world`].
    pub fn from_camera_in_world(orientation: UnitQuaternion<f64>, position: Vector3<f64>) -> Self {
        let rotation = orientation.to_rotation_matrix().inverse();
        Self {
            rotation,
            translation: -(rotation * position),
        }
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.translation
    }

    /// Camera center in world coordinates.
    pub fn position(&self) -> Point3<f64> {
        Point3::from(-(self.rotation.inverse() * self.translation))
    }

    /// Orientation and position of the camera in the world.
    pub fn camera_in_world(&self) -> (UnitQuaternion<f64>, Vector3<f64>) {
        (UnitQuaternion::from_rotation_matrix(&self.rotation.inverse()), self.position().coords)
    }

    /// World up direction (fixed +Z).
    pub fn gravity_up(&self) -> Vector3<f64> {
        Vector3::z()
    }

    #[inline]
    pub fn to_camera(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn to_world(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation.inverse() * (p - self.translation)
    }

    /// Camera-frame direction rotated into the world frame.
    #[inline]
    pub fn direction_to_world(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * v
    }
}

/// One line per pose: `tx ty tz qx qy qz qw`, the camera-in-world transform.
pub fn format_trajectory(poses: &[CameraPose]) -> String {
    let mut out = String::new();
    for pose in poses {
        let (q, t) = pose.camera_in_world();
        let q = q.quaternion();
        out.push_str(&format!(
            "{:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e} {:.17e}\n",
            t.x, t.y, t.z, q.i, q.j, q.k, q.w
        ));
    }
    out
}

pub fn parse_trajectory(text: &str) -> Result<Vec<CameraPose>> {
    let mut poses = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("trajectory line {}: {e}", n + 1)))?;
        let &[tx, ty, tz, qx, qy, qz, qw] = values.as_slice() else {
            return Err(Error::Format(format!("trajectory line {}: expected 7 values, got {}", n + 1, values.len())));
        };
        let q = nalgebra::Quaternion::new(qw, qx, qy, qz);
        if !(q.norm() > 1e-12) {
            return Err(Error::Format(format!("trajectory line {}: zero quaternion", n + 1)));
        }
        poses.push(CameraPose::from_camera_in_world(
            UnitQuaternion::from_quaternion(q),
            Vector3::new(tx, ty, tz),
        ));
    }
    Ok(poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_intrinsics_valid() {
        CameraIntrinsics::default().validate().unwrap();
        let bad = CameraIntrinsics {
            near: 9.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CameraIntrinsics {
            cx: 320.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn look_axes() {
        let pose = CameraPose::look(Point3::new(1.0, 2.0, 1.5), 0.0, 0.0);
        let ahead = pose.to_camera(&Point3::new(3.0, 2.0, 1.5));
        assert_relative_eq!(ahead, Point3::new(0.0, 0.0, 2.0), epsilon = 1e-12);
        let right = pose.to_camera(&Point3::new(1.0, 1.0, 1.5));
        assert_relative_eq!(right, Point3::new(1.0, 0.0, 0.0), epsilon = 1e-12);
        let above = pose.to_camera(&Point3::new(1.0, 2.0, 2.5));
        assert_relative_eq!(above, Point3::new(0.0, -1.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(pose.position(), Point3::new(1.0, 2.0, 1.5), epsilon = 1e-12);
    }

    #[test]
    fn rejects_improper_rotation() {
        let flip = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(CameraPose::new(flip, Vector3::zeros()).is_err());
        assert!(CameraPose::new(Matrix3::identity() * 1.01, Vector3::zeros()).is_err());
        assert!(CameraPose::new(Matrix3::identity(), Vector3::zeros()).is_ok());
    }

    #[test]
    fn trajectory_round_trip() {
        let poses = vec![
            CameraPose::look(Point3::new(1.0, 2.0, 1.5), 0.3, -0.2),
            CameraPose::look(Point3::new(-1.0, 0.5, 1.1), -2.0, 0.1),
        ];
        let parsed = parse_trajectory(&format_trajectory(&poses)).unwrap();
        for (a, b) in poses.iter().zip(&parsed) {
            assert_relative_eq!(a.rotation().matrix(), b.rotation().matrix(), epsilon = 1e-12);
            assert_relative_eq!(a.translation(), b.translation(), epsilon = 1e-12);
        }
        assert!(parse_trajectory("1 2 3").is_err());
    }
}
