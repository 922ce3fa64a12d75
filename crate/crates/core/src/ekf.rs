//! 12-state error-state EKF for INS/DVL fusion.
//!
//! Error-state layout: `[δv^n (0..3), φ^n (3..6), b_a (6..9), b_g (9..12)]`.
//!
//! Conventions:
//! - `δv = v̂ − v`.
//! - `R̂_b^n = (I + [φ×]) R_b^n`, so `φ` is the small rotation from the true
//!   to the estimated navigation frame.
//! - `b_a`, `b_g` are the residual sensor biases left after subtracting the
//!   current bias estimates: `f̃ = f + b_a`, `ω̃ = ω + b_g`.
//!
//! With these conventions the system matrix is
//! `[[0, −[f^n×], R_b^n, 0], [0, −[ω_in^n×], 0, R_b^n], [0; 0]]`.

use std::collections::VecDeque;

use nalgebra::{Matrix3, SMatrix, SVector, SymmetricEigen};

use crate::dvl::{slope_variance, AccelerationWindow, DvlGeometry, VelocityWindow};
use crate::frames::{gravity_ned, skew, so3_exp, Mat3, Vec3};
use crate::ins::{mechanize_step, ImuSample, InsConfig, NavState};
use crate::{Error, Result};

pub type Mat12 = SMatrix<f64, 12, 12>;
pub type Vec12 = SVector<f64, 12>;
pub type Mat3x12 = SMatrix<f64, 3, 12>;

pub const DV: usize = 0;
pub const PHI: usize = 3;
pub const BA: usize = 6;
pub const BG: usize = 9;
pub const STATE_DIM: usize = 12;

/// Column names in the fixed state order.
pub const STATE_NAMES: [&str; 12] = [
    "dv_n", "dv_e", "dv_d", "phi_n", "phi_e", "phi_d", "ba_x", "ba_y", "ba_z", "bg_x", "bg_y", "bg_z",
];

/// 0.999 quantile of the chi-square distribution with 3 degrees of freedom.
pub const CHI2_3DOF_999: f64 = 16.266_236_196_238_13;

/// Largest misalignment accepted by [`apply_correction`] (rad).
pub const MAX_CORRECTION_ANGLE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorState(pub Vec12);

impl ErrorState {
    pub fn zeros() -> Self {
        Self(Vec12::zeros())
    }

    pub fn from_parts(dv: Vec3, phi: Vec3, ba: Vec3, bg: Vec3) -> Self {
        let mut x = Vec12::zeros();
        x.fixed_rows_mut::<3>(DV).copy_from(&dv);
        x.fixed_rows_mut::<3>(PHI).copy_from(&phi);
        x.fixed_rows_mut::<3>(BA).copy_from(&ba);
        x.fixed_rows_mut::<3>(BG).copy_from(&bg);
        Self(x)
    }

    fn block(&self, at: usize) -> Vec3 {
        self.0.fixed_rows::<3>(at).into_owned()
    }

    pub fn dv(&self) -> Vec3 {
        self.block(DV)
    }
    pub fn phi(&self) -> Vec3 {
        self.block(PHI)
    }
    pub fn ba(&self) -> Vec3 {
        self.block(BA)
    }
    pub fn bg(&self) -> Vec3 {
        self.block(BG)
    }
}

/// Symmetric positive semi-definite 12×12 error covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance(Mat12);

impl Covariance {
    pub fn new(p: Mat12) -> Result<Self> {
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        if (p - p.transpose()).abs().max() > 1e-10 * p.abs().max().max(1.0) {
            return Err(Error::InvalidParameter("covariance is not symmetric".into()));
        }
        let c = Self(symmetrize(&p));
        if c.min_eigenvalue() < -1e-12 {
            return Err(Error::InvalidParameter("covariance is not PSD".into()));
        }
        Ok(c)
    }

    pub fn from_sigmas(sigmas: &[f64; 12]) -> Self {
        let d = Vec12::from_iterator(sigmas.iter().map(|s| s * s));
        Self(Mat12::from_diagonal(&d))
    }

    pub fn matrix(&self) -> &Mat12 {
        &self.0
    }

    pub fn sigmas(&self) -> [f64; 12] {
        std::array::from_fn(|i| self.0[(i, i)].max(0.0).sqrt())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        SymmetricEigen::new(self.0).eigenvalues.min()
    }

    pub fn asymmetry(&self) -> f64 {
        (self.0 - self.0.transpose()).abs().max()
    }

    /// Symmetry within 1e−10 and `λ_min ≥ −1e−9·trace`.
    pub fn is_healthy(&self) -> bool {
        self.asymmetry() <= 1e-10 && self.min_eigenvalue() >= -1e-9 * self.trace()
    }
}

fn symmetrize(p: &Mat12) -> Mat12 {
    (p + p.transpose()) * 0.5
}

/// White-noise and bias random-walk densities, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessNoise {
    /// Accelerometer white noise (m/s²/√Hz).
    pub accel_noise: f64,
    /// Gyro white noise (rad/s/√Hz).
    pub gyro_noise: f64,
    /// Accelerometer bias random walk (m/s²/√s).
    pub accel_bias_walk: f64,
    /// Gyro bias random walk (rad/s/√s).
    pub gyro_bias_walk: f64,
}

impl ProcessNoise {
    /// `Q(dt) = G·diag(w²)·Gᵀ·dt`. Each sensor triad is isotropic, so the
    /// rotation blocks of `G` drop out.
    pub fn discrete(&self, dt: f64) -> Mat12 {
        let mut d = Vec12::zeros();
        for i in 0..3 {
            d[DV + i] = self.accel_noise.powi(2);
            d[PHI + i] = self.gyro_noise.powi(2);
            d[BA + i] = self.accel_bias_walk.powi(2);
            d[BG + i] = self.gyro_bias_walk.powi(2);
        }
        Mat12::from_diagonal(&(d * dt))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMode {
    /// DVL velocity updates only (baseline).
    VelocityOnly,
    /// DVL velocity plus DVL-derived acceleration updates.
    VelocityAcceleration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOrder {
    VelocityFirst,
    AccelerationFirst,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub noise: ProcessNoise,
    /// Velocity measurement covariance, body frame.
    pub r_vel: Mat3,
    /// Acceleration measurement covariance, body frame.
    pub r_acc: Mat3,
    pub p0: Covariance,
    /// DVL-to-body rotation `R_d^b`.
    pub dvl_to_body: Mat3,
    pub mode: UpdateMode,
    /// Number of DVL velocities per acceleration estimate.
    pub window_len: usize,
    pub overlapping_windows: bool,
    pub update_order: UpdateOrder,
    /// Mahalanobis gate on the innovation; `None` disables gating.
    pub gate: Option<f64>,
    /// Account for frame rotation in the predicted DVL-frame acceleration.
    pub rotation_compensation: bool,
    /// Largest accepted DVL velocity magnitude (m/s).
    pub max_dvl_speed: f64,
    pub ins: InsConfig,
}

impl FilterConfig {
    /// Measurement covariances derived from the beam noise: the LS velocity
    /// covariance, and the slope variance of the acceleration window inflated
    /// by `accel_inflation`.
    pub fn from_dvl(
        geom: &DvlGeometry,
        beam_sigma: f64,
        dvl_period: f64,
        window_len: usize,
        accel_inflation: f64,
        dvl_to_body: Mat3,
    ) -> Self {
        let r_d = geom.velocity_covariance(beam_sigma);
        let r_vel = dvl_to_body * r_d * dvl_to_body.transpose();
        let slope = slope_variance(1.0, dvl_period, window_len) * accel_inflation;
        Self {
            r_vel,
            r_acc: r_vel * slope,
            dvl_to_body,
            window_len,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [("r_vel", &self.r_vel), ("r_acc", &self.r_acc)] {
            if (m - m.transpose()).abs().max() > 1e-12 {
                return Err(Error::InvalidParameter(format!("{name} is not symmetric")));
            }
            if m.cholesky().is_none() {
                return Err(Error::InvalidParameter(format!("{name} is not positive definite")));
            }
        }
        if self.window_len < 2 {
            return Err(Error::WindowTooShort {
                len: self.window_len,
                need: 2,
            });
        }
        let n = self.noise;
        if [n.accel_noise, n.gyro_noise, n.accel_bias_walk, n.gyro_bias_walk]
            .iter()
            .any(|x| !(*x >= 0.0))
        {
            return Err(Error::InvalidParameter("process noise must be >= 0".into()));
        }
        if crate::frames::orthonormality_error(&self.dvl_to_body) > 1e-9 {
            return Err(Error::InvalidParameter("R_d^b is not a rotation".into()));
        }
        Ok(())
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        let mg = 9.806_65e-3;
        let r_vel = DvlGeometry::default().velocity_covariance(0.006);
        Self {
            noise: ProcessNoise {
                accel_noise: 50e-6 * 9.806_65,
                gyro_noise: 0.02 * deg / 60.0,
                accel_bias_walk: 1e-6,
                gyro_bias_walk: 1e-8,
            },
            r_vel,
            r_acc: r_vel * slope_variance(1.0, 1.0, 3) * 2.0,
            p0: Covariance::from_sigmas(&[
                0.05,
                0.05,
                0.05,
                2e-3,
                2e-3,
                10e-3,
                mg,
                mg,
                mg,
                10.0 * deg / 3600.0,
                10.0 * deg / 3600.0,
                10.0 * deg / 3600.0,
            ]),
            dvl_to_body: Mat3::identity(),
            mode: UpdateMode::VelocityAcceleration,
            window_len: 3,
            overlapping_windows: false,
            update_order: UpdateOrder::VelocityFirst,
            gate: Some(CHI2_3DOF_999),
            rotation_compensation: true,
            max_dvl_speed: 10.0,
            ins: InsConfig::default(),
        }
    }
}

/// Linearized error dynamics for the current state and compensated specific force.
pub fn build_f(state: &NavState, specific_force: &Vec3, ins: &InsConfig) -> Mat12 {
    let r = state.attitude;
    let f_n = r * specific_force;
    let (w_ie, w_en) = ins.frame_rates(&state.velocity, &state.geo);
    let mut f = Mat12::zeros();
    f.fixed_view_mut::<3, 3>(DV, PHI).copy_from(&(-skew(&f_n)));
    f.fixed_view_mut::<3, 3>(DV, BA).copy_from(&r);
    f.fixed_view_mut::<3, 3>(PHI, PHI).copy_from(&(-skew(&(w_ie + w_en))));
    f.fixed_view_mut::<3, 3>(PHI, BG).copy_from(&r);
    f
}

/// First-order covariance propagation: `Φ = I + F·dt`, `P⁻ = ΦPΦᵀ + Q(dt)`.
pub fn predict(p: &Covariance, f: &Mat12, noise: &ProcessNoise, dt: f64) -> Covariance {
    let phi = Mat12::identity() + f * dt;
    Covariance(symmetrize(&(phi * p.0 * phi.transpose() + noise.discrete(dt))))
}

/// Result of a measurement update.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum UpdateOutcome {
    Accepted {
        correction: ErrorState,
        covariance: Covariance,
        /// Squared Mahalanobis distance of the innovation.
        mahalanobis: f64,
    },
    /// Innovation failed the gate. The covariance is left unchanged.
    Rejected { mahalanobis: f64 },
}

/// A prepared linear measurement: residual, Jacobian and noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub residual: Vec3,
    pub jacobian: Mat3x12,
    pub noise: Mat3,
}

/// Standard EKF update with Joseph-form covariance.
pub fn kalman_update(p: &Covariance, m: &Measurement, gate: Option<f64>) -> Result<UpdateOutcome> {
    let h = m.jacobian;
    let ph = p.0 * h.transpose();
    let s = h * ph + m.noise;
    let s_inv = s
        .try_inverse()
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularMatrix("innovation covariance"))?;
    let d2 = (m.residual.transpose() * s_inv * m.residual)[(0, 0)];
    if let Some(limit) = gate {
        if !(d2 <= limit) {
            return Ok(UpdateOutcome::Rejected { mahalanobis: d2 });
        }
    }
    let k = ph * s_inv;
    let dx = k * m.residual;
    let ikh = Mat12::identity() - k * h;
    let p_post = ikh * p.0 * ikh.transpose() + k * m.noise * k.transpose();
    Ok(UpdateOutcome::Accepted {
        correction: ErrorState(dx),
        covariance: Covariance(symmetrize(&p_post)),
        mahalanobis: d2,
    })
}

/// Body-frame DVL velocity residual `R̂_n^b v̂^n − R_d^b ṽ^d` and its Jacobian
/// `[R̂_n^b, R̂_n^b[ṽ^n×], 0, 0]`.
pub fn velocity_measurement(state: &NavState, v_dvl: &Vec3, cfg: &FilterConfig) -> Result<Measurement> {
    let speed = v_dvl.norm();
    if !speed.is_finite() {
        return Err(Error::NonFinite("DVL velocity"));
    }
    if speed > cfg.max_dvl_speed {
        return Err(Error::ImplausibleVelocity(speed));
    }
    let rt = state.attitude.transpose();
    let v_body = cfg.dvl_to_body * v_dvl;
    let v_meas_n = state.attitude * v_body;
    let mut h = Mat3x12::zeros();
    h.fixed_view_mut::<3, 3>(0, DV).copy_from(&rt);
    h.fixed_view_mut::<3, 3>(0, PHI).copy_from(&(rt * skew(&v_meas_n)));
    Ok(Measurement {
        residual: rt * state.velocity - v_body,
        jacobian: h,
        noise: cfg.r_vel,
    })
}

pub fn velocity_update(state: &NavState, p: &Covariance, v_dvl: &Vec3, cfg: &FilterConfig) -> Result<UpdateOutcome> {
    kalman_update(p, &velocity_measurement(state, v_dvl, cfg)?, cfg.gate)
}

/// Inertial counterpart of the DVL-frame acceleration: the rate of change of
/// the body-frame velocity predicted from compensated IMU output.
pub fn predicted_acceleration(
    state: &NavState,
    specific_force: &Vec3,
    angular_rate: &Vec3,
    cfg: &FilterConfig,
) -> Vec3 {
    let rt = state.attitude.transpose();
    let base = specific_force + rt * gravity_ned(&state.geo);
    if !cfg.rotation_compensation {
        return base;
    }
    let (w_ie, _) = cfg.ins.frame_rates(&state.velocity, &state.geo);
    base - angular_rate.cross(&(rt * state.velocity)) - rt * w_ie.cross(&state.velocity)
}

/// Jacobian of [`predicted_acceleration`] w.r.t. the error state. Without
/// rotation compensation it reduces to `[0, R̂_n^b[g^n×], I, 0]`.
pub fn acceleration_jacobian(state: &NavState, angular_rate: &Vec3, cfg: &FilterConfig) -> Mat3x12 {
    let rt = state.attitude.transpose();
    let g = gravity_ned(&state.geo);
    let mut h = Mat3x12::zeros();
    h.fixed_view_mut::<3, 3>(0, BA).copy_from(&Matrix3::identity());
    let mut h_phi = rt * skew(&g);
    if cfg.rotation_compensation {
        let v = state.velocity;
        let (w_ie, _) = cfg.ins.frame_rates(&v, &state.geo);
        let w = skew(angular_rate);
        h.fixed_view_mut::<3, 3>(0, DV).copy_from(&(-w * rt - rt * skew(&w_ie)));
        h_phi += -w * rt * skew(&v) - rt * skew(&w_ie.cross(&v));
        h.fixed_view_mut::<3, 3>(0, BG).copy_from(&skew(&(rt * v)));
    }
    h.fixed_view_mut::<3, 3>(0, PHI).copy_from(&h_phi);
    h
}

/// Inputs for the inertial side of the acceleration residual.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertialAcceleration {
    /// Predicted DVL-frame-consistent acceleration in the body frame.
    pub predicted: Vec3,
    /// Compensated angular rate used for the Jacobian.
    pub angular_rate: Vec3,
}

impl InertialAcceleration {
    /// Instantaneous prediction from the current state and IMU output.
    pub fn at(state: &NavState, specific_force: &Vec3, angular_rate: &Vec3, cfg: &FilterConfig) -> Self {
        Self {
            predicted: predicted_acceleration(state, specific_force, angular_rate, cfg),
            angular_rate: *angular_rate,
        }
    }
}

/// Acceleration residual `ã^b − R_d^b ã^d` with Jacobian from [`acceleration_jacobian`].
pub fn acceleration_measurement(
    state: &NavState,
    a_dvl: &Vec3,
    inertial: &InertialAcceleration,
    cfg: &FilterConfig,
) -> Result<Measurement> {
    if a_dvl.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("DVL acceleration"));
    }
    Ok(Measurement {
        residual: inertial.predicted - cfg.dvl_to_body * a_dvl,
        jacobian: acceleration_jacobian(state, &inertial.angular_rate, cfg),
        noise: cfg.r_acc,
    })
}

pub fn accel_update(
    state: &NavState,
    p: &Covariance,
    a_dvl: &Vec3,
    inertial: &InertialAcceleration,
    cfg: &FilterConfig,
) -> Result<UpdateOutcome> {
    kalman_update(p, &acceleration_measurement(state, a_dvl, inertial, cfg)?, cfg.gate)
}

/// Inject the velocity and attitude parts of a correction into the state.
pub fn apply_correction(state: &NavState, dx: &ErrorState) -> Result<NavState> {
    let phi = dx.phi();
    let angle = phi.norm();
    if !(angle < MAX_CORRECTION_ANGLE) {
        return Err(Error::LargeAngle(angle));
    }
    Ok(NavState {
        velocity: state.velocity - dx.dv(),
        attitude: crate::frames::orthonormalize(&(so3_exp(&(-phi)) * state.attitude)),
        ..*state
    })
}

/// Accumulated IMU bias estimates subtracted from raw samples.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuBias {
    pub accel: Vec3,
    pub gyro: Vec3,
}

impl ImuBias {
    pub fn absorb(&mut self, dx: &ErrorState) {
        self.accel += dx.ba();
        self.gyro += dx.bg();
    }

    pub fn compensate(&self, imu: &ImuSample) -> ImuSample {
        ImuSample {
            time: imu.time,
            specific_force: imu.specific_force - self.accel,
            angular_rate: imu.angular_rate - self.gyro,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Velocity,
    Acceleration,
}

/// A gated-out measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateEvent {
    pub time: f64,
    pub kind: MeasurementKind,
    pub mahalanobis: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FilterStats {
    pub velocity_updates: usize,
    pub acceleration_updates: usize,
    pub rejected_velocity: usize,
    pub rejected_acceleration: usize,
}

/// Integrals of the bias-independent pieces of the predicted acceleration
/// between two DVL epochs.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct AccelIntegral {
    start: f64,
    end: f64,
    /// ∫ (f_raw + R̂_n^b g − R̂_n^b(ω_ie × v̂) − ω_raw × v̂^b) dt
    base: Vec3,
    /// ∫ v̂^b dt
    body_velocity: Vec3,
}

/// Closed-loop INS/DVL filter.
#[derive(Debug, Clone)]
pub struct InsDvlFilter {
    nav: NavState,
    cov: Covariance,
    bias: ImuBias,
    cfg: FilterConfig,
    window: AccelerationWindow,
    current: AccelIntegral,
    segments: VecDeque<AccelIntegral>,
    last_rate: Vec3,
    stats: FilterStats,
    events: Vec<GateEvent>,
}

impl InsDvlFilter {
    pub fn new(nav: NavState, cfg: FilterConfig) -> Result<Self> {
        cfg.validate()?;
        let window = AccelerationWindow::new(cfg.window_len, cfg.overlapping_windows)?;
        Ok(Self {
            nav,
            cov: cfg.p0,
            bias: ImuBias::default(),
            window,
            current: AccelIntegral {
                start: nav.time,
                end: nav.time,
                ..AccelIntegral::default()
            },
            segments: VecDeque::new(),
            last_rate: Vec3::zeros(),
            stats: FilterStats::default(),
            events: Vec::new(),
            cfg,
        })
    }

    pub fn nav(&self) -> &NavState {
        &self.nav
    }
    pub fn covariance(&self) -> &Covariance {
        &self.cov
    }
    pub fn bias(&self) -> &ImuBias {
        &self.bias
    }
    pub fn config(&self) -> &FilterConfig {
        &self.cfg
    }
    pub fn stats(&self) -> &FilterStats {
        &self.stats
    }
    pub fn gate_events(&self) -> &[GateEvent] {
        &self.events
    }

    /// Mechanize one raw IMU sample and propagate the covariance.
    pub fn propagate(&mut self, raw: &ImuSample, dt: f64) -> Result<()> {
        let imu = self.bias.compensate(raw);
        let f = build_f(&self.nav, &imu.specific_force, &self.cfg.ins);

        let rt = self.nav.attitude.transpose();
        let v = self.nav.velocity;
        let v_body = rt * v;
        let (w_ie, _) = self.cfg.ins.frame_rates(&v, &self.nav.geo);
        let mut base = raw.specific_force + rt * gravity_ned(&self.nav.geo);
        if self.cfg.rotation_compensation {
            base -= rt * w_ie.cross(&v) + raw.angular_rate.cross(&v_body);
        }
        self.current.base += base * dt;
        self.current.body_velocity += v_body * dt;
        self.last_rate = imu.angular_rate;

        self.nav = mechanize_step(&self.nav, &imu, dt, &self.cfg.ins)?;
        self.cov = predict(&self.cov, &f, &self.cfg.noise, dt);
        self.current.end = self.nav.time;
        Ok(())
    }

    fn correct(&mut self, dx: &ErrorState) -> Result<()> {
        self.nav = apply_correction(&self.nav, dx)?;
        self.bias.absorb(dx);
        Ok(())
    }

    fn apply(&mut self, kind: MeasurementKind, outcome: UpdateOutcome) -> Result<bool> {
        match outcome {
            UpdateOutcome::Accepted {
                correction, covariance, ..
            } => {
                self.correct(&correction)?;
                self.cov = covariance;
                match kind {
                    MeasurementKind::Velocity => self.stats.velocity_updates += 1,
                    MeasurementKind::Acceleration => self.stats.acceleration_updates += 1,
                }
                Ok(true)
            }
            UpdateOutcome::Rejected { mahalanobis } => {
                match kind {
                    MeasurementKind::Velocity => self.stats.rejected_velocity += 1,
                    MeasurementKind::Acceleration => self.stats.rejected_acceleration += 1,
                }
                self.events.push(GateEvent {
                    time: self.nav.time,
                    kind,
                    mahalanobis,
                });
                Ok(false)
            }
        }
    }

    /// Window-averaged inertial acceleration over `[start, end]`, if the
    /// integrals covering that span are available.
    fn window_prediction(&self, window: &VelocityWindow) -> Option<InertialAcceleration> {
        let (t0, t1) = (window.start_time(), window.end_time());
        let tol = 1e-6;
        let mut base = Vec3::zeros();
        let mut vb = Vec3::zeros();
        let mut covered = 0.0;
        for seg in self
            .segments
            .iter()
            .filter(|s| s.start >= t0 - tol && s.end <= t1 + tol)
        {
            base += seg.base;
            vb += seg.body_velocity;
            covered += seg.end - seg.start;
        }
        let span = t1 - t0;
        if !(span > 0.0) || (covered - span).abs() > tol {
            return None;
        }
        let mut predicted = base / span - self.bias.accel;
        if self.cfg.rotation_compensation {
            predicted += self.bias.gyro.cross(&(vb / span));
        }
        Some(InertialAcceleration {
            predicted,
            angular_rate: self.last_rate,
        })
    }

    fn close_segment(&mut self, time: f64) {
        let mut seg = std::mem::take(&mut self.current);
        seg.end = time;
        self.segments.push_back(seg);
        while self.segments.len() > self.cfg.window_len {
            self.segments.pop_front();
        }
        self.current = AccelIntegral {
            start: time,
            end: time,
            ..AccelIntegral::default()
        };
    }

    fn velocity_step(&mut self, v_dvl: &Vec3) -> Result<()> {
        let outcome = velocity_update(&self.nav, &self.cov, v_dvl, &self.cfg)?;
        self.apply(MeasurementKind::Velocity, outcome)?;
        Ok(())
    }

    fn acceleration_step(&mut self, window: &VelocityWindow) -> Result<()> {
        let a_dvl = crate::dvl::extract_acceleration(window)?;
        let inertial = match self.window_prediction(window) {
            Some(x) => x,
            None => {
                let f = self.last_specific_force();
                InertialAcceleration::at(&self.nav, &f, &self.last_rate, &self.cfg)
            }
        };
        let outcome = accel_update(&self.nav, &self.cov, &a_dvl, &inertial, &self.cfg)?;
        self.apply(MeasurementKind::Acceleration, outcome)?;
        Ok(())
    }

    fn last_specific_force(&self) -> Vec3 {
        // level-hover fallback; only used before the first full window of integrals
        -(self.nav.attitude.transpose() * gravity_ned(&self.nav.geo))
    }

    /// Process a DVL velocity (DVL frame) at the current filter time.
    pub fn dvl_update(&mut self, v_dvl: &Vec3) -> Result<()> {
        let time = self.nav.time;
        self.close_segment(time);
        let window = match self.cfg.mode {
            UpdateMode::VelocityOnly => None,
            UpdateMode::VelocityAcceleration => self.window.push(time, *v_dvl),
        };
        match (self.cfg.update_order, window) {
            (UpdateOrder::AccelerationFirst, Some(w)) => {
                self.acceleration_step(&w)?;
                self.velocity_step(v_dvl)?;
            }
            (_, Some(w)) => {
                self.velocity_step(v_dvl)?;
                self.acceleration_step(&w)?;
            }
            (_, None) => self.velocity_step(v_dvl)?,
        }
        Ok(())
    }
}
