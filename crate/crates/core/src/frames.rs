//! Reference-frame conventions shared by every other module.
//!
//! Navigation frame is local-level north-east-down (NED). Body frame is
//! forward-right-down. `R_b^n` maps body vectors into NED.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Earth rotation rate (rad/s).
pub const EARTH_RATE: f64 = 7.292_115e-5;
/// Spherical Earth radius used for the transport rate (m).
pub const EARTH_RADIUS: f64 = 6_378_137.0;
/// Standard gravity (m/s²).
pub const STANDARD_GRAVITY: f64 = 9.806_65;

/// Local geodetic context needed by the mechanization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoContext {
    /// Latitude (rad).
    pub latitude: f64,
    /// Depth below the surface (m, positive down).
    pub depth: f64,
    /// Gravity magnitude (m/s²).
    pub gravity: f64,
}

impl Default for GeoContext {
    fn default() -> Self {
        Self {
            latitude: 32.8_f64.to_radians(),
            depth: 0.0,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl GeoContext {
    pub fn new(latitude: f64, depth: f64, gravity: f64) -> crate::Result<Self> {
        let ctx = Self {
            latitude,
            depth,
            gravity,
        };
        ctx.validate()?;
        Ok(ctx)
    }

    pub fn validate(&self) -> crate::Result<()> {
        if !(self.latitude.abs() <= std::f64::consts::FRAC_PI_2) {
            return Err(crate::Error::InvalidParameter(format!(
                "latitude {} rad outside [-pi/2, pi/2]",
                self.latitude
            )));
        }
        if !(9.7..=9.9).contains(&self.gravity) {
            return Err(crate::Error::InvalidParameter(format!(
                "gravity {} m/s^2 outside [9.7, 9.9]",
                self.gravity
            )));
        }
        if !self.depth.is_finite() {
            return Err(crate::Error::NonFinite("depth"));
        }
        Ok(())
    }
}

/// Cross-product matrix: `skew(v) * w == v.cross(&w)`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`] for a skew-symmetric (or nearly so) matrix.
pub fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// Body-to-NED rotation from ZYX Euler angles (yaw, then pitch, then roll).
pub fn dcm_from_euler(roll: f64, pitch: f64, yaw: f64) -> Mat3 {
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    Mat3::new(
        cy * cp,
        cy * sp * sr - sy * cr,
        cy * sp * cr + sy * sr,
        sy * cp,
        sy * sp * sr + cy * cr,
        sy * sp * cr - cy * sr,
        -sp,
        cp * sr,
        cp * cr,
    )
}

/// ZYX Euler angles `(roll, pitch, yaw)` of a body-to-NED rotation.
pub fn euler_from_dcm(r: &Mat3) -> (f64, f64, f64) {
    let pitch = (-r[(2, 0)]).clamp(-1.0, 1.0).asin();
    (r[(2, 1)].atan2(r[(2, 2)]), pitch, r[(1, 0)].atan2(r[(0, 0)]))
}

/// Rotation about the NED down axis by `yaw`.
pub fn yaw_rotation(yaw: f64) -> Mat3 {
    dcm_from_euler(0.0, 0.0, yaw)
}

/// Exponential map of a rotation vector (Rodrigues formula).
pub fn so3_exp(v: &Vec3) -> Mat3 {
    let theta2 = v.norm_squared();
    let k = skew(v);
    if theta2 < 1e-12 {
        // second-order series; the third-order term is below 1e-18
        return Mat3::identity() + k + 0.5 * k * k;
    }
    let theta = theta2.sqrt();
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / theta2;
    Mat3::identity() + a * k + b * k * k
}

/// Logarithm map of a rotation matrix, principal branch.
pub fn so3_log(r: &Mat3) -> Vec3 {
    let cos_theta = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    let w = vee(r);
    if theta < 1e-6 {
        return w;
    }
    if std::f64::consts::PI - theta < 1e-6 {
        // near pi: take the axis from the symmetric part
        let s = (r + Mat3::identity()) * 0.5;
        let mut best = 0;
        for i in 1..3 {
            if s[(i, i)] > s[(best, best)] {
                best = i;
            }
        }
        let mut axis = s.column(best).into_owned();
        axis /= axis.norm();
        if axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        return axis * theta;
    }
    w * (theta / theta.sin())
}

/// Project a nearly orthonormal matrix back onto SO(3).
pub fn orthonormalize(r: &Mat3) -> Mat3 {
    let mut out = *r;
    for _ in 0..2 {
        out = out * (Mat3::identity() * 1.5 - 0.5 * out.transpose() * out);
    }
    out
}

/// `‖RᵀR − I‖` (Frobenius).
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

pub fn gravity_ned(ctx: &GeoContext) -> Vec3 {
    Vec3::new(0.0, 0.0, ctx.gravity)
}

pub fn earth_rate_ned(ctx: &GeoContext) -> Vec3 {
    let (s, c) = ctx.latitude.sin_cos();
    Vec3::new(EARTH_RATE * c, 0.0, -EARTH_RATE * s)
}

/// Transport rate of the NED frame over a spherical Earth.
pub fn transport_rate_ned(v: &Vec3, ctx: &GeoContext) -> Vec3 {
    let r = EARTH_RADIUS - ctx.depth;
    Vec3::new(v.y / r, -v.x / r, -v.y * ctx.latitude.tan() / r)
}
