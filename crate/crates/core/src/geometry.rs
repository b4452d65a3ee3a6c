//! World and camera frames, poses and the pinhole model.
//!
//! World frame is right-handed ENU: x east, y north, z up. Camera frame is
//! x right, y down, z forward. A pose with zero attitude looks horizontally
//! north with the image up direction equal to world up. Attitude is applied
//! intrinsically as yaw, then pitch, then roll:
//!
//! * yaw is a heading, positive clockwise from north toward east;
//! * pitch tilts the optical axis, positive upward;
//! * roll turns the camera about its optical axis.
//!
//! Angles are stored in degrees and converted to radians only for math.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Near-plane distance used when none is given.
pub const DEFAULT_NEAR: f64 = 0.5;

#[inline]
pub(crate) fn deg_to_rad(d: f64) -> f64 {
    d * (core::f64::consts::PI / 180.0)
}

#[inline]
pub(crate) fn rad_to_deg(r: f64) -> f64 {
    r * (180.0 / core::f64::consts::PI)
}

/// Wraps a heading into `[0, 360)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    let y = yaw % 360.0;
    let y = if y < 0.0 { y + 360.0 } else { y };
    // -1e-17 % 360 + 360 rounds to 360.0
    if y >= 360.0 {
        0.0
    } else {
        y
    }
}

/// Wraps a roll angle into `(-180, 180]`.
pub fn normalize_roll(roll: f64) -> f64 {
    let r = normalize_yaw(roll);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Camera position (meters, world frame) and attitude (degrees).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl Pose {
    /// Builds a pose, wrapping yaw and roll into their canonical ranges.
    pub fn new(x: f64, y: f64, z: f64, yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        let all = [x, y, z, yaw, pitch, roll];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPose("non-finite component"));
        }
        if !(-90.0..=90.0).contains(&pitch) {
            return Err(Error::InvalidPose("pitch outside [-90, 90]"));
        }
        Ok(Pose {
            x,
            y,
            z,
            yaw: normalize_yaw(yaw),
            pitch,
            roll: normalize_roll(roll),
        })
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    pub fn rotation(&self) -> Rotation {
        rotation_from_angles(self.yaw, self.pitch, self.roll)
    }

    /// Same attitude, moved by `(dx, dy, dz)` and turned by `dyaw` degrees.
    pub fn offset(&self, dx: f64, dy: f64, dz: f64, dyaw: f64) -> Pose {
        Pose {
            x: self.x + dx,
            y: self.y + dy,
            z: self.z + dz,
            yaw: normalize_yaw(self.yaw + dyaw),
            pitch: self.pitch,
            roll: self.roll,
        }
    }
}

/// Camera-to-world rotation. Columns are the camera axes in world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn right(&self) -> Vec3 {
        self.0.column(0).into_owned()
    }

    pub fn down(&self) -> Vec3 {
        self.0.column(1).into_owned()
    }

    pub fn forward(&self) -> Vec3 {
        self.0.column(2).into_owned()
    }

    /// Recovers `(yaw, pitch, roll)` in degrees. Near pitch = ±90 yaw and
    /// roll are not separable and roll is reported as 0.
    pub fn to_angles(&self) -> (f64, f64, f64) {
        let f = self.forward();
        let pitch = rad_to_deg(libm::asin(f.z.clamp(-1.0, 1.0)));
        let horiz = libm::hypot(f.x, f.y);
        if horiz < 1e-12 {
            // Gimbal lock: the down vector carries heading and roll combined.
            let d = self.down();
            let yaw = if f.z < 0.0 {
                libm::atan2(-d.x, -d.y)
            } else {
                libm::atan2(d.x, d.y)
            };
            return (normalize_yaw(rad_to_deg(yaw)), pitch, 0.0);
        }
        let yaw = rad_to_deg(libm::atan2(f.x, f.y));
        let r = self.right();
        let d = self.down();
        let roll = rad_to_deg(libm::atan2(-r.z, -d.z));
        (normalize_yaw(yaw), pitch, normalize_roll(roll))
    }

    /// Geodesic angle between two rotations, degrees in `[0, 180]`.
    pub fn angle_to(&self, other: &Rotation) -> f64 {
        let rel = self.0.transpose() * other.0;
        let c = ((rel.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
        rad_to_deg(libm::acos(c))
    }
}

/// Camera-to-world rotation for the given attitude (degrees).
pub fn rotation_from_angles(yaw: f64, pitch: f64, roll: f64) -> Rotation {
    let (sy, cy) = libm::sincos(deg_to_rad(normalize_yaw(yaw)));
    let (sp, cp) = libm::sincos(deg_to_rad(pitch));
    let (sr, cr) = libm::sincos(deg_to_rad(roll));
    // Heading: clockwise about world up.
    let heading = Matrix3::new(cy, sy, 0.0, -sy, cy, 0.0, 0.0, 0.0, 1.0);
    // Zero attitude: camera x -> east, y -> down, z -> north.
    let base = Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0);
    // Pitch about camera x, positive lifts the optical axis toward -y.
    let tilt = Matrix3::new(1.0, 0.0, 0.0, 0.0, cp, -sp, 0.0, sp, cp);
    // Roll about camera z.
    let spin = Matrix3::new(cr, -sr, 0.0, sr, cr, 0.0, 0.0, 0.0, 1.0);
    Rotation(heading * base * tilt * spin)
}

/// Pinhole intrinsics tied to a reference resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if !(fx.is_finite() && fy.is_finite() && fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidIntrinsics("focal lengths must be positive"));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidIntrinsics("zero resolution"));
        }
        if !(cx >= 0.0 && cx < width as f64 && cy >= 0.0 && cy < height as f64) {
            return Err(Error::InvalidIntrinsics("principal point outside image"));
        }
        Ok(CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// The default synthetic camera: 602x448 reference, about 68° horizontal FOV.
    pub fn default_uav() -> Self {
        CameraIntrinsics {
            fx: 448.0,
            fy: 448.0,
            cx: 301.0,
            cy: 224.0,
            width: 602,
            height: 448,
        }
    }

    /// Intrinsics for the same camera sampled at `width x height`.
    pub fn scaled(&self, width: u32, height: u32) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        CameraIntrinsics {
            fx: self.fx * sx,
            fy: self.fy * sy,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
        }
    }
}

/// A posed camera with the world-to-camera transform precomputed.
#[derive(Debug, Clone, Copy)]
pub struct CameraView {
    pub intrinsics: CameraIntrinsics,
    world_to_cam: Matrix3<f64>,
    center: Vec3,
    pub near: f64,
}

impl CameraView {
    pub fn new(intrinsics: CameraIntrinsics, pose: &Pose, near: f64) -> Self {
        CameraView {
            intrinsics,
            world_to_cam: pose.rotation().matrix().transpose(),
            center: pose.position(),
            near,
        }
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    /// `Rᵀ (p − t)`.
    #[inline]
    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.world_to_cam * (p - self.center)
    }

    /// Pixel coordinates of a camera-frame point (no near test).
    #[inline]
    pub fn project_camera(&self, c: &Vec3) -> (f64, f64) {
        let k = &self.intrinsics;
        (k.fx * c.x / c.z + k.cx, k.fy * c.y / c.z + k.cy)
    }

    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        let c = self.to_camera(p);
        if c.z >= self.near {
            Some(self.project_camera(&c))
        } else {
            None
        }
    }
}

/// Projects a world point to pixels; `None` when it lies in front of the near plane.
///
/// Pixel `(i, j)` covers `[i, i+1) x [j, j+1)`; results may fall outside the image.
pub fn project_point(
    intrinsics: &CameraIntrinsics,
    pose: &Pose,
    point: &Vec3,
    near: f64,
) -> Option<(f64, f64)> {
    CameraView::new(*intrinsics, pose, near).project(point)
}
