//! Strapdown velocity and attitude mechanization in the NED frame.

use serde::{Deserialize, Serialize};

use crate::frames::{earth_rate_ned, gravity_ned, orthonormalize, so3_exp, transport_rate_ned, GeoContext, Mat3, Vec3};
use crate::{Error, Result};

/// Largest accepted mechanization step (s).
pub const MAX_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NavState {
    pub time: f64,
    /// Velocity in NED (m/s).
    pub velocity: Vec3,
    /// Body-to-NED rotation `R_b^n`.
    pub attitude: Mat3,
    pub geo: GeoContext,
}

impl NavState {
    pub fn new(time: f64, velocity: Vec3, attitude: Mat3, geo: GeoContext) -> Self {
        Self {
            time,
            velocity,
            attitude,
            geo,
        }
    }

    /// Velocity expressed in the body frame.
    pub fn body_velocity(&self) -> Vec3 {
        self.attitude.transpose() * self.velocity
    }
}

/// One IMU record. The values are the mean specific force and angular rate
/// over the interval that starts at `time`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    pub time: f64,
    /// Specific force in the body frame (m/s²).
    pub specific_force: Vec3,
    /// Angular rate of body w.r.t. inertial space, body frame (rad/s).
    pub angular_rate: Vec3,
}

impl ImuSample {
    pub fn is_finite(&self) -> bool {
        self.time.is_finite()
            && self.specific_force.iter().all(|x| x.is_finite())
            && self.angular_rate.iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsConfig {
    /// Include Earth rotation and transport rate terms.
    pub earth_rotation: bool,
}

impl Default for InsConfig {
    fn default() -> Self {
        Self { earth_rotation: true }
    }
}

impl InsConfig {
    /// `(ω_ie^n, ω_en^n)` for the given velocity, or zeros when disabled.
    pub fn frame_rates(&self, velocity: &Vec3, geo: &GeoContext) -> (Vec3, Vec3) {
        if self.earth_rotation {
            (earth_rate_ned(geo), transport_rate_ned(velocity, geo))
        } else {
            (Vec3::zeros(), Vec3::zeros())
        }
    }
}

/// Attitude after one step: `exp(−[ω_in dt]) · R · exp([ω_ib dt])`.
pub fn propagate_attitude(attitude: &Mat3, angular_rate: &Vec3, nav_rate: &Vec3, dt: f64) -> Mat3 {
    so3_exp(&(-nav_rate * dt)) * attitude * so3_exp(&(angular_rate * dt))
}

/// Advance the navigation state by one IMU interval.
pub fn mechanize_step(state: &NavState, imu: &ImuSample, dt: f64, cfg: &InsConfig) -> Result<NavState> {
    if !(dt > 0.0 && dt <= MAX_STEP) {
        return Err(Error::InvalidTimeStep(dt));
    }
    if !imu.is_finite() {
        return Err(Error::NonFinite("IMU sample"));
    }
    let (w_ie, w_en) = cfg.frame_rates(&state.velocity, &state.geo);
    let w_in = w_ie + w_en;
    let r0 = state.attitude;
    let r1 = orthonormalize(&propagate_attitude(&r0, &imu.angular_rate, &w_in, dt));

    let f_n = (r0 + r1) * imu.specific_force * 0.5;
    let coriolis = (w_en + 2.0 * w_ie).cross(&state.velocity);
    let v1 = state.velocity + (f_n + gravity_ned(&state.geo) - coriolis) * dt;

    Ok(NavState {
        time: state.time + dt,
        velocity: v1,
        attitude: r1,
        geo: state.geo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{dcm_from_euler, orthonormality_error, so3_log};
    use std::f64::consts::FRAC_PI_2;

    fn level(geo: GeoContext) -> NavState {
        NavState::new(0.0, Vec3::zeros(), Mat3::identity(), geo)
    }

    #[test]
    fn static_equilibrium() {
        let geo = GeoContext::default();
        let cfg = InsConfig::default();
        let mut s = level(geo);
        let imu = ImuSample {
            time: 0.0,
            specific_force: Vec3::new(0.0, 0.0, -geo.gravity),
            angular_rate: earth_rate_ned(&geo),
        };
        let dt = 0.01;
        for _ in 0..1000 {
            s = mechanize_step(&s, &imu, dt, &cfg).unwrap();
        }
        assert!(s.velocity.norm() < 1e-9 * dt);
        assert!(orthonormality_error(&s.attitude) < 1e-12);
    }

    #[test]
    fn constant_acceleration() {
        let geo = GeoContext::default();
        let cfg = InsConfig { earth_rotation: false };
        let mut s = level(geo);
        let imu = ImuSample {
            time: 0.0,
            specific_force: Vec3::new(1.0, 0.0, -geo.gravity),
            angular_rate: Vec3::zeros(),
        };
        for _ in 0..100 {
            s = mechanize_step(&s, &imu, 0.01, &cfg).unwrap();
        }
        assert!((s.velocity - Vec3::x()).norm() < 1e-12);
    }

    #[test]
    fn yaw_quarter_turn() {
        let cfg = InsConfig { earth_rotation: false };
        let mut s = level(GeoContext::default());
        let imu = ImuSample {
            time: 0.0,
            specific_force: Vec3::zeros(),
            angular_rate: Vec3::new(0.0, 0.0, FRAC_PI_2),
        };
        for _ in 0..100 {
            s = mechanize_step(&s, &imu, 0.01, &cfg).unwrap();
        }
        let yaw = so3_log(&s.attitude).z;
        assert!((yaw - FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = level(GeoContext::default());
        let cfg = InsConfig::default();
        let mut imu = ImuSample {
            time: 0.0,
            specific_force: Vec3::zeros(),
            angular_rate: Vec3::zeros(),
        };
        assert!(matches!(
            mechanize_step(&s, &imu, 0.0, &cfg),
            Err(Error::InvalidTimeStep(_))
        ));
        assert!(matches!(
            mechanize_step(&s, &imu, -0.01, &cfg),
            Err(Error::InvalidTimeStep(_))
        ));
        assert!(matches!(
            mechanize_step(&s, &imu, 0.5, &cfg),
            Err(Error::InvalidTimeStep(_))
        ));
        imu.angular_rate.x = f64::NAN;
        assert!(matches!(mechanize_step(&s, &imu, 0.01, &cfg), Err(Error::NonFinite(_))));
    }

    #[test]
    fn determinant_stays_unity() {
        let cfg = InsConfig::default();
        let mut s = NavState::new(
            0.0,
            Vec3::new(1.0, 0.5, 0.0),
            dcm_from_euler(0.1, -0.2, 1.0),
            GeoContext::default(),
        );
        for k in 0..20_000 {
            let t = k as f64 * 0.01;
            let imu = ImuSample {
                time: t,
                specific_force: Vec3::new(0.1 * t.sin(), 0.0, -9.8),
                angular_rate: Vec3::new(0.3 * t.cos(), 0.2, -0.5 * (0.3 * t).sin()),
            };
            s = mechanize_step(&s, &imu, 0.01, &cfg).unwrap();
            assert!((s.attitude.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn speed_is_conserved_without_forcing() {
        let cfg = InsConfig { earth_rotation: false };
        let geo = GeoContext::default();
        let mut s = NavState::new(0.0, Vec3::new(1.2, -0.4, 0.1), Mat3::identity(), geo);
        let imu = ImuSample {
            time: 0.0,
            specific_force: Vec3::new(0.0, 0.0, -geo.gravity),
            angular_rate: Vec3::zeros(),
        };
        for _ in 0..1000 {
            let before = s.velocity.norm();
            s = mechanize_step(&s, &imu, 0.01, &cfg).unwrap();
            assert!((s.velocity.norm() - before).abs() < 1e-9);
        }
    }
}
