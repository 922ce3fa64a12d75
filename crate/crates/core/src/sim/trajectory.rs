//! Level truth trajectories built from a curvature profile in arc length and
//! a speed profile in time.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::frames::{gravity_ned, yaw_rotation, GeoContext, Mat3, Vec3};
use crate::ins::{InsConfig, NavState};
use crate::observability::{Segment, SegmentSample};
use crate::{Error, Result};

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// ∫₀ˣ smoothstep
fn smoothstep_integral(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x - 0.5 * x * x * x * x
}

/// One piece of a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathSegment {
    Straight {
        length: f64,
    },
    /// Heading change `angle` (positive turns right) with curvature blended
    /// from zero to `peak_curvature` and back over `ramp` metres.
    Turn {
        angle: f64,
        peak_curvature: f64,
        ramp: f64,
    },
}

impl PathSegment {
    pub fn turn(angle: f64, peak_curvature: f64, ramp: f64) -> Result<Self> {
        if !(peak_curvature > 0.0) || !(ramp >= 0.0) || !angle.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "turn needs curvature > 0 and ramp >= 0 (got {peak_curvature}, {ramp})"
            )));
        }
        // an angle too small for the full ramps just shortens them
        let ramp = ramp.min(angle.abs() / peak_curvature);
        Ok(PathSegment::Turn {
            angle,
            peak_curvature,
            ramp,
        })
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathSegment::Straight { length } => length,
            PathSegment::Turn {
                angle,
                peak_curvature,
                ramp,
            } => angle.abs() / peak_curvature + ramp,
        }
    }

    pub fn heading_change(&self) -> f64 {
        match *self {
            PathSegment::Straight { .. } => 0.0,
            PathSegment::Turn { angle, .. } => angle,
        }
    }

    /// Heading change and signed curvature at arc length `u` into the segment.
    fn eval(&self, u: f64) -> (f64, f64) {
        match *self {
            PathSegment::Straight { .. } => (0.0, 0.0),
            PathSegment::Turn {
                angle,
                peak_curvature,
                ramp,
            } => {
                let sign = angle.signum();
                let len = self.length();
                let u = u.clamp(0.0, len);
                let hold = len - 2.0 * ramp;
                let (dpsi, k) = if ramp > 0.0 && u < ramp {
                    let x = u / ramp;
                    (
                        peak_curvature * ramp * smoothstep_integral(x),
                        peak_curvature * smoothstep(x),
                    )
                } else if u <= ramp + hold {
                    (peak_curvature * (0.5 * ramp + (u - ramp)), peak_curvature)
                } else {
                    let y = (len - u) / ramp;
                    (
                        angle.abs() - peak_curvature * ramp * smoothstep_integral(y),
                        peak_curvature * smoothstep(y),
                    )
                };
                (sign * dpsi, sign * k)
            }
        }
    }
}

/// A planar path: heading and curvature as functions of arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    initial_heading: f64,
    segments: Vec<PathSegment>,
    starts: Vec<f64>,
    headings: Vec<f64>,
}

impl Path {
    pub fn new(initial_heading: f64, segments: Vec<PathSegment>) -> Self {
        let mut starts = Vec::with_capacity(segments.len());
        let mut headings = Vec::with_capacity(segments.len());
        let (mut s, mut psi) = (0.0, initial_heading);
        for seg in &segments {
            starts.push(s);
            headings.push(psi);
            s += seg.length();
            psi += seg.heading_change();
        }
        Self {
            initial_heading,
            segments,
            starts,
            headings,
        }
    }

    pub fn length(&self) -> f64 {
        self.segments.iter().map(PathSegment::length).sum()
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    /// Heading and signed curvature at arc length `s`. Beyond the end the path
    /// continues straight.
    pub fn eval(&self, s: f64) -> (f64, f64) {
        if self.segments.is_empty() {
            return (self.initial_heading, 0.0);
        }
        let i = self.starts.partition_point(|&x| x <= s).saturating_sub(1);
        let seg = &self.segments[i];
        let u = s - self.starts[i];
        if u > seg.length() {
            return (self.headings[i] + seg.heading_change(), 0.0);
        }
        let (dpsi, k) = seg.eval(u);
        (self.headings[i] + dpsi, k)
    }

    /// Planar displacement between two arc lengths by Simpson quadrature.
    pub fn displacement(&self, s0: f64, s1: f64, steps: usize) -> (f64, f64) {
        let n = steps.max(2) + steps % 2;
        let h = (s1 - s0) / n as f64;
        let (mut x, mut y) = (0.0, 0.0);
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let (psi, _) = self.eval(s0 + i as f64 * h);
            x += w * psi.cos();
            y += w * psi.sin();
        }
        (x * h / 3.0, y * h / 3.0)
    }
}

/// Forward speed `v(t) = mean + amplitude·sin(2πt/period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeedProfile {
    pub mean: f64,
    pub amplitude: f64,
    pub period: f64,
}

impl SpeedProfile {
    pub fn constant(speed: f64) -> Self {
        Self {
            mean: speed,
            amplitude: 0.0,
            period: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mean > 0.0) || !(self.amplitude >= 0.0 && self.amplitude < self.mean) || !(self.period > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "speed profile needs 0 <= amplitude < mean and period > 0 (got {self:?})"
            )));
        }
        Ok(())
    }

    fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.mean + self.amplitude * (self.omega() * t).sin()
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        self.amplitude * self.omega() * (self.omega() * t).cos()
    }

    pub fn distance(&self, t: f64) -> f64 {
        let w = self.omega();
        self.mean * t + self.amplitude / w * (1.0 - (w * t).cos())
    }
}

/// Truth at one grid epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthEpoch {
    pub time: f64,
    /// NED position relative to the start (m).
    pub position: Vec3,
    /// NED velocity (m/s).
    pub velocity: Vec3,
    /// Body-to-NED rotation.
    pub attitude: Mat3,
    /// Time derivative of the NED velocity.
    pub accel_nav: Vec3,
    /// Time derivative of the body-frame velocity, taken in the body frame.
    pub accel_body: Vec3,
    /// Body rate relative to the navigation frame, body axes.
    pub body_rate: Vec3,
}

/// A truth trajectory on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthTrajectory {
    dt: f64,
    geo: GeoContext,
    epochs: Vec<TruthEpoch>,
}

impl TruthTrajectory {
    /// Sample `path` traversed with `speed` for `duration` seconds.
    pub fn from_path(path: &Path, speed: &SpeedProfile, duration: f64, dt: f64, geo: GeoContext) -> Result<Self> {
        speed.validate()?;
        geo.validate()?;
        if !(dt > 0.0 && dt <= crate::ins::MAX_STEP) {
            return Err(Error::InvalidTimeStep(dt));
        }
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter(format!("duration {duration} must be > 0")));
        }
        let n = (duration / dt).round() as usize;
        let mut epochs: Vec<TruthEpoch> = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let t = k as f64 * dt;
            let s = speed.distance(t);
            let v = speed.speed(t);
            let vdot = speed.acceleration(t);
            let (psi, kappa) = path.eval(s);
            let rate = kappa * v;
            let (sp, cp) = psi.sin_cos();
            let tangent = Vec3::new(cp, sp, 0.0);
            let normal = Vec3::new(-sp, cp, 0.0);
            let velocity = tangent * v;
            let accel_nav = tangent * vdot + normal * (v * rate);
            let attitude = yaw_rotation(psi);
            let body_rate = Vec3::new(0.0, 0.0, rate);
            let accel_body = attitude.transpose() * accel_nav - body_rate.cross(&(attitude.transpose() * velocity));
            let position = match epochs.last() {
                Some(prev) => prev.position + (prev.velocity + velocity) * (0.5 * dt),
                None => Vec3::zeros(),
            };
            epochs.push(TruthEpoch {
                time: t,
                position,
                velocity,
                attitude,
                accel_nav,
                accel_body,
                body_rate,
            });
        }
        Ok(Self { dt, geo, epochs })
    }

    pub fn from_epochs(dt: f64, geo: GeoContext, epochs: Vec<TruthEpoch>) -> Result<Self> {
        if epochs.len() < 2 {
            return Err(Error::WindowTooShort {
                len: epochs.len(),
                need: 2,
            });
        }
        for (k, e) in epochs.iter().enumerate() {
            if (e.time - k as f64 * dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(Error::NonMonotonicTime);
            }
        }
        Ok(Self { dt, geo, epochs })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn geo(&self) -> &GeoContext {
        &self.geo
    }

    pub fn epochs(&self) -> &[TruthEpoch] {
        &self.epochs
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.epochs[self.epochs.len() - 1].time
    }

    pub fn nav_state(&self, k: usize) -> NavState {
        let e = &self.epochs[k];
        NavState::new(e.time, e.velocity, e.attitude, self.geo)
    }

    /// Grid index of the epoch nearest `t`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let end = self.duration();
        if !(t >= -0.5 * self.dt && t <= end + 0.5 * self.dt) {
            return Err(Error::OutOfRange { t, start: 0.0, end });
        }
        Ok(((t / self.dt).round() as usize).min(self.epochs.len() - 1))
    }

    /// Instantaneous specific force in the body frame.
    pub fn specific_force(&self, k: usize, ins: &InsConfig) -> Vec3 {
        let e = &self.epochs[k];
        let (w_ie, w_en) = ins.frame_rates(&e.velocity, &self.geo);
        let coriolis = (w_en + 2.0 * w_ie).cross(&e.velocity);
        e.attitude.transpose() * (e.accel_nav - gravity_ned(&self.geo) + coriolis)
    }

    /// Instantaneous inertial angular rate in the body frame.
    pub fn angular_rate(&self, k: usize, ins: &InsConfig) -> Vec3 {
        let e = &self.epochs[k];
        let (w_ie, w_en) = ins.frame_rates(&e.velocity, &self.geo);
        e.body_rate + e.attitude.transpose() * (w_ie + w_en)
    }

    /// Observability segment over `[t0, t1]`.
    pub fn segment(&self, t0: f64, t1: f64, ins: InsConfig) -> Result<Segment> {
        let (i0, i1) = (self.index_of(t0)?, self.index_of(t1)?);
        let samples = (i0..=i1)
            .map(|k| {
                let e = &self.epochs[k];
                SegmentSample {
                    time: e.time,
                    attitude: e.attitude,
                    velocity: e.velocity,
                    specific_force: self.specific_force(k, &ins),
                    angular_rate: self.angular_rate(k, &ins),
                }
            })
            .collect();
        Segment::new(samples, self.geo, ins)
    }

    pub fn path_length(&self) -> f64 {
        self.epochs
            .windows(2)
            .map(|w| (w[1].position - w[0].position).norm())
            .sum()
    }

    /// Distance between the final and initial positions.
    pub fn closure_error(&self) -> f64 {
        (self.epochs[self.epochs.len() - 1].position - self.epochs[0].position).norm()
    }

    pub fn mean_speed(&self) -> f64 {
        let n = self.epochs.len() as f64;
        self.epochs.iter().map(|e| e.velocity.norm()).sum::<f64>() / n
    }

    /// Time-average of the turn-rate magnitude (rad/s).
    pub fn mean_abs_rate(&self) -> f64 {
        let n = self.epochs.len() as f64;
        self.epochs.iter().map(|e| e.body_rate.norm()).sum::<f64>() / n
    }

    pub fn max_abs_rate(&self) -> f64 {
        self.epochs.iter().map(|e| e.body_rate.norm()).fold(0.0, f64::max)
    }
}

/// Constant-velocity run due north.
pub fn gen_straight(duration: f64, speed: f64) -> Result<TruthTrajectory> {
    gen_straight_with(duration, speed, 0.01, GeoContext::default())
}

pub fn gen_straight_with(duration: f64, speed: f64, dt: f64, geo: GeoContext) -> Result<TruthTrajectory> {
    let path = Path::new(
        0.0,
        vec![PathSegment::Straight {
            length: duration * speed,
        }],
    );
    TruthTrajectory::from_path(&path, &SpeedProfile::constant(speed), duration, dt, geo)
}

/// Survey pattern of straight legs joined by alternating 180° turns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LawnmowerParams {
    /// Duration of each straight leg (s).
    pub leg_duration: f64,
    /// Turn rate of each U-turn in order (°/s).
    pub turn_rates_dps: Vec<f64>,
    /// Forward speed (m/s).
    pub speed: f64,
    /// Time to blend the turn rate in and out (s).
    pub ramp_time: f64,
}

impl Default for LawnmowerParams {
    fn default() -> Self {
        Self {
            leg_duration: 300.0,
            turn_rates_dps: vec![6.0, 9.0, 12.0, 15.0],
            speed: 0.6 / 3.6,
            ramp_time: 1.0,
        }
    }
}

pub fn gen_lawnmower(leg_duration: f64, turn_rates_dps: &[f64], speed: f64) -> Result<TruthTrajectory> {
    let params = LawnmowerParams {
        leg_duration,
        turn_rates_dps: turn_rates_dps.to_vec(),
        speed,
        ..LawnmowerParams::default()
    };
    gen_lawnmower_with(&params, 0.01, GeoContext::default())
}

pub fn gen_lawnmower_with(p: &LawnmowerParams, dt: f64, geo: GeoContext) -> Result<TruthTrajectory> {
    if !(p.leg_duration > 0.0) || !(p.speed > 0.0) || !(p.ramp_time >= 0.0) {
        return Err(Error::InvalidParameter(format!("invalid lawn-mower parameters {p:?}")));
    }
    if let Some(r) = p.turn_rates_dps.iter().find(|r| !(**r > 0.0 && **r <= 30.0)) {
        return Err(Error::InvalidParameter(format!("turn rate {r} °/s outside (0, 30]")));
    }
    let leg = p.leg_duration * p.speed;
    let mut segments = vec![PathSegment::Straight { length: leg }];
    let mut duration = p.leg_duration;
    for (i, rate) in p.turn_rates_dps.iter().enumerate() {
        let kappa = rate.to_radians() / p.speed;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let turn = PathSegment::turn(sign * PI, kappa, p.ramp_time * p.speed)?;
        duration += turn.length() / p.speed + p.leg_duration;
        segments.push(turn);
        segments.push(PathSegment::Straight { length: leg });
    }
    let path = Path::new(0.0, segments);
    TruthTrajectory::from_path(&path, &SpeedProfile::constant(p.speed), duration, dt, geo)
}

/// Figure-eight made of two crossing straight legs and two opposed loops.
/// Each loop blends a gentle arc into a sharp turn at `max_turn_rate_dps` and
/// back; the gentle curvature is solved so the figure closes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FigureEightParams {
    pub avg_speed: f64,
    pub duration: f64,
    pub max_turn_rate_dps: f64,
    /// Time-averaged |turn rate|; fixes the crossing angle of the legs.
    pub mean_turn_rate_dps: f64,
    /// Heading change of the sharp part of each loop (°).
    pub sharp_turn_deg: f64,
    /// Curvature blend length of the sharp turn (m).
    pub sharp_ramp: f64,
    /// Curvature blend length of the gentle arcs (m).
    pub gentle_ramp: f64,
    /// Speed oscillation amplitude (m/s).
    pub speed_amplitude: f64,
    /// Speed oscillation period (s); rounded to a whole number of cycles.
    pub speed_period: f64,
}

impl Default for FigureEightParams {
    fn default() -> Self {
        Self {
            avg_speed: 0.9,
            duration: 394.0,
            max_turn_rate_dps: 17.0,
            mean_turn_rate_dps: 1.41,
            sharp_turn_deg: 90.0,
            sharp_ramp: 1.0,
            gentle_ramp: 5.0,
            speed_amplitude: 0.1,
            speed_period: 12.0,
        }
    }
}

pub fn gen_figure_eight(avg_speed: f64, duration: f64, max_turn_rate_dps: f64) -> Result<TruthTrajectory> {
    let params = FigureEightParams {
        avg_speed,
        duration,
        max_turn_rate_dps,
        ..FigureEightParams::default()
    };
    gen_figure_eight_with(&params, 0.01, GeoContext::default())
}

pub fn gen_figure_eight_with(p: &FigureEightParams, dt: f64, geo: GeoContext) -> Result<TruthTrajectory> {
    if !(p.avg_speed > 0.0 && p.duration > 0.0 && p.max_turn_rate_dps > 0.0 && p.mean_turn_rate_dps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "invalid figure-eight parameters {p:?}"
        )));
    }
    let cycles = (p.duration / p.speed_period).round().max(1.0);
    let speed = SpeedProfile {
        mean: p.avg_speed,
        amplitude: p.speed_amplitude,
        period: p.duration / cycles,
    };
    speed.validate()?;
    let total = p.avg_speed * p.duration;
    // total |heading change| is 2(π + 2β) for legs crossing at ±β
    let beta = 0.5 * (0.5 * p.mean_turn_rate_dps.to_radians() * p.duration - PI);
    if !(beta > 0.0 && beta < 0.5 * PI) {
        return Err(Error::InvalidParameter(format!(
            "mean turn rate {} °/s over {} s gives no figure-eight",
            p.mean_turn_rate_dps, p.duration
        )));
    }
    let loop_angle = PI + 2.0 * beta;
    let sharp = p.sharp_turn_deg.to_radians().min(0.5 * loop_angle);
    let kappa_sharp = p.max_turn_rate_dps.to_radians() / (speed.mean + speed.amplitude);
    let gentle = 0.5 * (loop_angle - sharp);

    let build_loop = |kappa: f64, sign: f64| -> Result<Vec<PathSegment>> {
        Ok(vec![
            PathSegment::turn(sign * gentle, kappa, p.gentle_ramp)?,
            PathSegment::turn(sign * sharp, kappa_sharp, p.sharp_ramp)?,
            PathSegment::turn(sign * gentle, kappa, p.gentle_ramp)?,
        ])
    };
    // chord of the loop minus the gap between the leg ends
    let mismatch = |kappa: f64| -> Result<f64> {
        let segs = build_loop(kappa, -1.0)?;
        let loop_len: f64 = segs.iter().map(PathSegment::length).sum();
        let leg = 0.5 * (total - 2.0 * loop_len);
        let path = Path::new(beta, segs);
        let (_, y) = path.displacement(0.0, loop_len, 4000);
        Ok(-y - leg * beta.sin())
    };
    let (mut lo, mut hi) = (1e-6 * kappa_sharp, kappa_sharp);
    if mismatch(hi)? > 0.0 || mismatch(lo)? < 0.0 {
        return Err(Error::InvalidParameter(
            "figure-eight cannot close with these parameters".into(),
        ));
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mismatch(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = (lo * hi).sqrt();
    let right = build_loop(kappa, -1.0)?;
    let left = build_loop(kappa, 1.0)?;
    let loop_len: f64 = right.iter().map(PathSegment::length).sum();
    let leg = 0.5 * (total - 2.0 * loop_len);
    let mut segments = vec![PathSegment::Straight { length: 0.5 * leg }];
    segments.extend(right);
    segments.push(PathSegment::Straight { length: leg });
    segments.extend(left);
    segments.push(PathSegment::Straight { length: 0.5 * leg });
    let path = Path::new(beta, segments);
    TruthTrajectory::from_path(&path, &speed, p.duration, dt, geo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn straight_defaults() {
        let t = gen_straight(424.0, 2.0).unwrap();
        let last = t.epochs().last().unwrap();
        assert_relative_eq!(last.position.x, 848.0, epsilon = 1e-6);
        assert!(last.position.y.abs() < 1e-9);
        for e in t.epochs() {
            assert_eq!(e.accel_nav, Vec3::zeros());
            assert_eq!(e.attitude, Mat3::identity());
        }
    }

    #[test]
    fn turn_segment_angle_is_exact() {
        let seg = PathSegment::turn(PI, 0.3, 2.0).unwrap();
        let (dpsi, k) = seg.eval(seg.length());
        assert_relative_eq!(dpsi, PI, epsilon = 1e-12);
        assert_eq!(k, 0.0);
        let (_, k_mid) = seg.eval(0.5 * seg.length());
        assert_relative_eq!(k_mid, 0.3, epsilon = 1e-12);
    }

    #[test]
    fn short_turn_shrinks_ramp() {
        let seg = PathSegment::turn(0.01, 0.3, 10.0).unwrap();
        let (dpsi, _) = seg.eval(seg.length());
        assert_relative_eq!(dpsi, 0.01, epsilon = 1e-14);
    }

    #[test]
    fn lawnmower_defaults() {
        let p = LawnmowerParams::default();
        let t = gen_lawnmower_with(&p, 0.05, GeoContext::default()).unwrap();
        let minutes = t.duration() / 60.0;
        assert!((24.0..27.0).contains(&minutes), "{minutes}");
        // heading flips by π across every turn
        let mut prev: Option<f64> = None;
        let mut elapsed = 0.0;
        for rate in p.turn_rates_dps.iter().chain(std::iter::once(&1.0)) {
            let k = t.index_of(elapsed + 0.5 * p.leg_duration).unwrap();
            let v = t.epochs()[k].velocity;
            let yaw = v.y.atan2(v.x);
            if let Some(y0) = prev {
                let d = (yaw - y0).abs();
                assert_relative_eq!(d.min(2.0 * PI - d), PI, epsilon = 1e-9);
            }
            prev = Some(yaw);
            let kappa = rate.to_radians() / p.speed;
            let turn = PathSegment::turn(PI, kappa, p.ramp_time * p.speed).unwrap();
            elapsed += p.leg_duration + turn.length() / p.speed;
        }
    }

    #[test]
    fn lawnmower_centripetal_acceleration() {
        let p = LawnmowerParams {
            turn_rates_dps: vec![6.0],
            ..LawnmowerParams::default()
        };
        let t = gen_lawnmower_with(&p, 0.05, GeoContext::default()).unwrap();
        let peak = t.epochs().iter().map(|e| e.accel_nav.norm()).fold(0.0, f64::max);
        assert_relative_eq!(peak, p.speed * 6f64.to_radians(), max_relative = 1e-6);
        assert_relative_eq!(peak, 0.0175, epsilon = 5e-5);
    }

    #[test]
    fn lawnmower_rejects_bad_rates() {
        assert!(gen_lawnmower(300.0, &[0.0], 1.0).is_err());
        assert!(gen_lawnmower(300.0, &[31.0], 1.0).is_err());
    }

    #[test]
    fn figure_eight_statistics() {
        let t = gen_figure_eight(0.9, 394.0, 17.0).unwrap();
        assert_relative_eq!(t.mean_speed(), 0.9, max_relative = 0.01);
        let mean_rate = t.mean_abs_rate().to_degrees();
        assert!((mean_rate - 1.41).abs() < 0.05, "{mean_rate}");
        let max_rate = t.max_abs_rate().to_degrees();
        assert!(max_rate <= 17.0 + 1e-9 && max_rate > 14.0, "{max_rate}");
        assert!(t.closure_error() < 0.05 * t.path_length(), "{}", t.closure_error());
    }

    #[test]
    fn figure_eight_turns_both_ways() {
        let t = gen_figure_eight(0.9, 394.0, 17.0).unwrap();
        let max = t.epochs().iter().map(|e| e.body_rate.z).fold(f64::MIN, f64::max);
        let min = t.epochs().iter().map(|e| e.body_rate.z).fold(f64::MAX, f64::min);
        assert!(max > 0.1 && min < -0.1);
    }

    #[test]
    fn truth_is_kinematically_consistent() {
        let t = gen_figure_eight(0.9, 394.0, 17.0).unwrap();
        let dt = t.dt();
        let e = t.epochs();
        let mut worst: f64 = 0.0;
        for k in 1..e.len() - 1 {
            let fd = (e[k + 1].velocity - e[k - 1].velocity) / (2.0 * dt);
            worst = worst.max((fd - e[k].accel_nav).norm());
        }
        // central differences are O(dt²); the sharp-turn blends bound the constant
        assert!(worst < 2e-3, "{worst}");
        let mut worst_b: f64 = 0.0;
        for k in 1..e.len() - 1 {
            let vb = |i: usize| e[i].attitude.transpose() * e[i].velocity;
            let fd = (vb(k + 1) - vb(k - 1)) / (2.0 * dt);
            worst_b = worst_b.max((fd - e[k].accel_body).norm());
        }
        assert!(worst_b < 1e-4, "{worst_b}");
    }

    #[test]
    fn static_specific_force() {
        let path = Path::new(0.0, vec![]);
        let t =
            TruthTrajectory::from_path(&path, &SpeedProfile::constant(1e-9), 1.0, 0.01, GeoContext::default()).unwrap();
        let ins = InsConfig { earth_rotation: false };
        let f = t.specific_force(0, &ins);
        assert_relative_eq!(f, Vec3::new(0.0, 0.0, -GeoContext::default().gravity), epsilon = 1e-12);
    }

    #[test]
    fn index_lookup() {
        let t = gen_straight(10.0, 1.0).unwrap();
        assert_eq!(t.index_of(0.0).unwrap(), 0);
        assert_eq!(t.index_of(1.0).unwrap(), 100);
        assert!(t.index_of(11.0).is_err());
    }
}
