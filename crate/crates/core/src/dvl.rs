//! DVL beam geometry, the beam-level error model, and the least-squares
//! velocity and acceleration estimators built on top of it.

use std::collections::VecDeque;

use nalgebra::{DMatrix, Matrix3, Matrix4x3, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::frames::Vec3;
use crate::{Error, Result};

/// Default Janus pitch angle (rad).
pub const DEFAULT_PITCH: f64 = 20.0 * std::f64::consts::PI / 180.0;

/// Beam azimuths `(i − 1)·π/2 + π/4` for i = 1..4.
pub fn beam_azimuths() -> [f64; 4] {
    let q = std::f64::consts::FRAC_PI_2;
    let e = std::f64::consts::FRAC_PI_4;
    [e, q + e, 2.0 * q + e, 3.0 * q + e]
}

/// The 4×3 matrix mapping DVL-frame velocity to along-beam velocities.
///
/// Row i is the unit beam direction `[sin α cos ψ_i, sin α sin ψ_i, cos α]`
/// for a beam tilted by `α` from the DVL z axis at azimuth `ψ_i`.
pub fn beam_matrix(pitch: f64) -> Result<Matrix4x3<f64>> {
    if !(pitch > 0.0 && pitch < std::f64::consts::FRAC_PI_2) {
        return Err(Error::DegenerateGeometry(pitch));
    }
    let (sa, ca) = pitch.sin_cos();
    let mut h = Matrix4x3::zeros();
    for (i, psi) in beam_azimuths().into_iter().enumerate() {
        let (sp, cp) = psi.sin_cos();
        h[(i, 0)] = sa * cp;
        h[(i, 1)] = sa * sp;
        h[(i, 2)] = ca;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DvlGeometry {
    pitch: f64,
    h: Matrix4x3<f64>,
    normal_inv: Matrix3<f64>,
    /// Transmit frequency (Hz). Carried for reference only.
    pub transmit_frequency: f64,
    /// Speed of sound (m/s). Carried for reference only.
    pub speed_of_sound: f64,
}

impl DvlGeometry {
    pub fn new(pitch: f64) -> Result<Self> {
        let h = beam_matrix(pitch)?;
        let normal_inv = (h.transpose() * h)
            .try_inverse()
            .ok_or(Error::SingularMatrix("beam normal matrix"))?;
        Ok(Self {
            pitch,
            h,
            normal_inv,
            transmit_frequency: 600e3,
            speed_of_sound: 1500.0,
        })
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn matrix(&self) -> &Matrix4x3<f64> {
        &self.h
    }

    /// `(HᵀH)⁻¹`.
    pub fn normal_inverse(&self) -> &Matrix3<f64> {
        &self.normal_inv
    }

    /// Covariance of the LS velocity for i.i.d. beam noise of std `sigma`.
    pub fn velocity_covariance(&self, sigma: f64) -> Matrix3<f64> {
        self.normal_inv * sigma * sigma
    }
}

impl Default for DvlGeometry {
    fn default() -> Self {
        Self::new(DEFAULT_PITCH).expect("default pitch is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScaleFactor {
    Common(f64),
    PerBeam([f64; 4]),
}

impl ScaleFactor {
    fn per_beam(&self) -> [f64; 4] {
        match *self {
            ScaleFactor::Common(s) => [s; 4],
            ScaleFactor::PerBeam(s) => s,
        }
    }
}

impl Default for ScaleFactor {
    fn default() -> Self {
        ScaleFactor::Common(0.0)
    }
}

/// Beam error model: bias, scale factor and white Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DvlErrorModel {
    /// Per-beam bias (m/s).
    pub bias: [f64; 4],
    pub scale: ScaleFactor,
    /// Per-beam noise standard deviation (m/s).
    pub noise_std: f64,
}

impl DvlErrorModel {
    pub fn noise_only(noise_std: f64) -> Self {
        Self {
            noise_std,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_std >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "DVL noise std {} must be >= 0",
                self.noise_std
            )));
        }
        if self.scale.per_beam().iter().any(|s| !(s.abs() < 0.1)) {
            return Err(Error::InvalidParameter(
                "DVL scale factor magnitude must be < 0.1".into(),
            ));
        }
        if self.bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("DVL bias"));
        }
        Ok(())
    }
}

/// One DVL ping: along-beam velocities at a timestamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvlBeamSet {
    pub time: f64,
    pub beams: Vector4<f64>,
}

/// Draw beam velocities for a DVL-frame velocity under the error model.
pub fn simulate_beams<R: Rng + ?Sized>(
    time: f64,
    velocity: &Vec3,
    geom: &DvlGeometry,
    err: &DvlErrorModel,
    rng: &mut R,
) -> DvlBeamSet {
    let clean = geom.matrix() * velocity;
    let scale = err.scale.per_beam();
    let mut beams = Vector4::zeros();
    for i in 0..4 {
        let noise: f64 = if err.noise_std > 0.0 {
            err.noise_std * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        beams[i] = clean[i] * (1.0 + scale[i]) + err.bias[i] + noise;
    }
    DvlBeamSet { time, beams }
}

/// Least-squares DVL-frame velocity `(HᵀH)⁻¹Hᵀy`.
pub fn ls_velocity(beams: &DvlBeamSet, geom: &DvlGeometry) -> Result<Vec3> {
    let h = geom.matrix();
    let normal = h.transpose() * h;
    let chol = normal.cholesky().ok_or(Error::SingularMatrix("beam normal matrix"))?;
    let v = chol.solve(&(h.transpose() * beams.beams));
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite("LS velocity"))
    }
}

/// Time-ordered DVL-frame velocity samples.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityWindow {
    samples: Vec<(f64, Vec3)>,
}

impl VelocityWindow {
    pub fn new(samples: Vec<(f64, Vec3)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::WindowTooShort {
                len: samples.len(),
                need: 2,
            });
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::NonMonotonicTime);
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, Vec3)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// Same timestamps, every velocity mapped through `f`.
    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            samples: self.samples.iter().map(|(t, v)| (*t, f(v))).collect(),
        }
    }
}

/// Taylor-series fit of a velocity window; row k is the k-th derivative at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    pub coefficients: DMatrix<f64>,
    pub order: usize,
    pub t0: f64,
}

impl PolyFit {
    pub fn velocity(&self) -> Vec3 {
        self.row(0)
    }

    pub fn acceleration(&self) -> Vec3 {
        self.row(1)
    }

    pub fn row(&self, k: usize) -> Vec3 {
        if k >= self.order {
            return Vec3::zeros();
        }
        Vec3::new(
            self.coefficients[(k, 0)],
            self.coefficients[(k, 1)],
            self.coefficients[(k, 2)],
        )
    }

    /// Evaluate the fitted velocity at `t`.
    pub fn eval(&self, t: f64) -> Vec3 {
        let r = taylor_row(t - self.t0, self.order);
        (0..self.order).fold(Vec3::zeros(), |acc, k| acc + self.row(k) * r[k])
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Regressor `[1, Δ, Δ²/2!, …, Δⁿ⁻¹/(n−1)!]`.
pub fn taylor_row(dt: f64, order: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(order);
    let mut term = 1.0;
    for k in 0..order {
        if k > 0 {
            term *= dt / k as f64;
        }
        row.push(term);
    }
    row
}

/// Normal matrix of the Taylor design, built elementwise:
/// `s_ij = Σ_k Δ_k^(i+j) / (i! j!)` with zero-based i, j.
pub fn taylor_normal_matrix(window: &VelocityWindow, order: usize) -> DMatrix<f64> {
    let t0 = window.start_time();
    DMatrix::from_fn(order, order, |i, j| {
        let p = (i + j) as i32;
        let sum: f64 = window.samples().iter().map(|(t, _)| (t - t0).powi(p)).sum();
        sum / (factorial(i) * factorial(j))
    })
}

/// Polynomial least-squares fit of `order` Taylor terms to the window.
pub fn fit_velocity_poly(window: &VelocityWindow, order: usize) -> Result<PolyFit> {
    if order == 0 {
        return Err(Error::InvalidParameter("fit order must be >= 1".into()));
    }
    if window.len() < order {
        return Err(Error::WindowTooShort {
            len: window.len(),
            need: order,
        });
    }
    let t0 = window.start_time();
    let s = taylor_normal_matrix(window, order);
    let sv = s.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= 1e12) {
        return Err(Error::IllConditioned { cond });
    }
    // QR of the column-scaled design
    let samples = window.samples();
    let mut a = DMatrix::from_fn(samples.len(), order, |i, k| taylor_row(samples[i].0 - t0, order)[k]);
    let scale: Vec<f64> = a.column_iter().map(|c| 1.0 / c.norm()).collect();
    for (k, mut c) in a.column_iter_mut().enumerate() {
        c *= scale[k];
    }
    let b = DMatrix::from_fn(samples.len(), 3, |i, c| samples[i].1[c]);
    let qr = a.qr();
    let y = qr
        .r()
        .solve_upper_triangular(&(qr.q().transpose() * b))
        .ok_or(Error::SingularMatrix("Taylor design matrix"))?;
    let coefficients = DMatrix::from_fn(order, 3, |k, c| y[(k, c)] * scale[k]);
    Ok(PolyFit {
        coefficients,
        order,
        t0,
    })
}

/// Constant-acceleration estimate from a velocity window: the slope of the
/// straight-line LS fit through the samples.
pub fn extract_acceleration(window: &VelocityWindow) -> Result<Vec3> {
    let t0 = window.start_time();
    let m = window.len() as f64;
    let (mut sd, mut sdd) = (0.0, 0.0);
    let mut sv = Vec3::zeros();
    let mut svd = Vec3::zeros();
    for (t, v) in window.samples() {
        let d = t - t0;
        sd += d;
        sdd += d * d;
        sv += v;
        svd += v * d;
    }
    let det = m * sdd - sd * sd;
    if !(det > 0.0) {
        return Err(Error::SingularMatrix("acceleration normal matrix"));
    }
    Ok((svd * m - sv * sd) / det)
}

/// Per-axis slope variance for `m` equally spaced samples at `period` with
/// white velocity noise of variance `velocity_var`.
pub fn slope_variance(velocity_var: f64, period: f64, m: usize) -> f64 {
    let m = m as f64;
    velocity_var * 12.0 / (period * period * m * (m * m - 1.0))
}

/// Buffers incoming DVL velocities and releases a full window every `len`
/// samples (non-overlapping) or on every sample once full (overlapping).
#[derive(Debug, Clone)]
pub struct AccelerationWindow {
    len: usize,
    overlapping: bool,
    buf: VecDeque<(f64, Vec3)>,
}

impl AccelerationWindow {
    pub fn new(len: usize, overlapping: bool) -> Result<Self> {
        if len < 2 {
            return Err(Error::WindowTooShort { len, need: 2 });
        }
        Ok(Self {
            len,
            overlapping,
            buf: VecDeque::with_capacity(len),
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    pub fn clear(&mut self) {
        self.buf.clear();
    }

    pub fn push(&mut self, time: f64, velocity: Vec3) -> Option<VelocityWindow> {
        if let Some(&(last, _)) = self.buf.back() {
            if !(time > last) {
                self.buf.clear();
            }
        }
        self.buf.push_back((time, velocity));
        if self.buf.len() > self.len {
            self.buf.pop_front();
        }
        if self.buf.len() < self.len {
            return None;
        }
        let window = VelocityWindow {
            samples: self.buf.iter().copied().collect(),
        };
        if !self.overlapping {
            self.buf.clear();
        }
        Some(window)
    }
}
