//! Observability analysis of the linearized error model.
//!
//! The stacked operator `[H(t_k)·Φ(t_k, t₀)]` is built over a trajectory
//! segment and its right null space is compared with the analytic
//! unobservable subspace.

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::ekf::{self, Mat12, Mat3x12, BA, BG, DV, PHI, STATE_DIM};
use crate::frames::{gravity_ned, skew, GeoContext, Mat3, Vec3};
use crate::ins::{InsConfig, NavState};
use crate::{Error, Result};

/// One sample of a trajectory segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSample {
    pub time: f64,
    /// Body-to-navigation rotation `R_b^n`.
    pub attitude: Mat3,
    pub velocity: Vec3,
    /// Body-frame specific force.
    pub specific_force: Vec3,
    /// Body-frame angular rate.
    pub angular_rate: Vec3,
}

impl SegmentSample {
    pub fn nav_state(&self, geo: GeoContext) -> NavState {
        NavState::new(self.time, self.velocity, self.attitude, geo)
    }

    /// Specific force resolved in the navigation frame.
    pub fn specific_force_nav(&self) -> Vec3 {
        self.attitude * self.specific_force
    }
}

/// A time-ordered trajectory segment with its environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    samples: Vec<SegmentSample>,
    geo: GeoContext,
    ins: InsConfig,
}

impl Segment {
    pub fn new(samples: Vec<SegmentSample>, geo: GeoContext, ins: InsConfig) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::WindowTooShort { len: 0, need: 1 });
        }
        if samples.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(Error::NonMonotonicTime);
        }
        Ok(Self { samples, geo, ins })
    }

    /// Vehicle at rest with fixed attitude, sampled every `dt` over `duration`.
    pub fn stationary(duration: f64, dt: f64, attitude: Mat3, geo: GeoContext, ins: InsConfig) -> Result<Self> {
        if !(dt > 0.0) || !(duration >= 0.0) {
            return Err(Error::InvalidTimeStep(dt));
        }
        let g = gravity_ned(&geo);
        let n = (duration / dt).round() as usize;
        let (w_ie, _) = ins.frame_rates(&Vec3::zeros(), &geo);
        let samples = (0..=n)
            .map(|k| SegmentSample {
                time: k as f64 * dt,
                attitude,
                velocity: Vec3::zeros(),
                specific_force: -(attitude.transpose() * g),
                angular_rate: attitude.transpose() * w_ie,
            })
            .collect();
        Self::new(samples, geo, ins)
    }

    pub fn samples(&self) -> &[SegmentSample] {
        &self.samples
    }

    pub fn geo(&self) -> &GeoContext {
        &self.geo
    }

    pub fn ins(&self) -> &InsConfig {
        &self.ins
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].time
    }

    fn linearization(&self, k: usize) -> Mat12 {
        let s = &self.samples[k];
        ekf::build_f(&s.nav_state(self.geo), &s.specific_force, &self.ins)
    }
}

/// Closed-form transition matrix blocks.
///
/// ```text
/// Φ = | I  S  R  M |
///     | 0  I  0  R |
///     | 0  0  I  0 |
///     | 0  0  0  I |
/// ```
/// with `R_t = ∫R_b^n`, `S_t = −∫[fⁿ×]` and `M_t = −∫[fⁿ×]R_τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StmBlocks {
    pub m_t: Mat3,
    pub r_t: Mat3,
    pub s_t: Mat3,
}

impl StmBlocks {
    pub fn identity() -> Self {
        Self {
            m_t: Mat3::zeros(),
            r_t: Mat3::zeros(),
            s_t: Mat3::zeros(),
        }
    }

    pub fn phi(&self) -> Mat12 {
        let mut phi = Mat12::identity();
        phi.fixed_view_mut::<3, 3>(DV, PHI).copy_from(&self.s_t);
        phi.fixed_view_mut::<3, 3>(DV, BA).copy_from(&self.r_t);
        phi.fixed_view_mut::<3, 3>(DV, BG).copy_from(&self.m_t);
        phi.fixed_view_mut::<3, 3>(PHI, BG).copy_from(&self.r_t);
        phi
    }
}

/// Closed-form transition matrix from the segment start to `t` by trapezoidal
/// quadrature. Navigation-frame rotation rates are neglected.
pub fn stm_closed_form(segment: &Segment, t: f64) -> Result<StmBlocks> {
    let (start, end) = (segment.start_time(), segment.end_time());
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let mut blocks = StmBlocks::identity();
    let samples = segment.samples();
    for w in samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.time >= t {
            break;
        }
        let t1 = b.time.min(t);
        let h = t1 - a.time;
        let frac = h / (b.time - a.time);
        let att_b = a.attitude + (b.attitude - a.attitude) * frac;
        let f_a = skew(&a.specific_force_nav());
        let f_b = skew(&(a.specific_force_nav() + (b.specific_force_nav() - a.specific_force_nav()) * frac));
        let r_a = blocks.r_t;
        let r_b = r_a + (a.attitude + att_b) * (0.5 * h);
        blocks.s_t -= (f_a + f_b) * (0.5 * h);
        blocks.m_t -= (f_a * r_a + f_b * r_b) * (0.5 * h);
        blocks.r_t = r_b;
    }
    Ok(blocks)
}

/// Second-order discrete transition factor for `F` held over `dt`.
fn step_factor(f: &Mat12, dt: f64) -> Mat12 {
    let fd = f * dt;
    Mat12::identity() + fd + fd * fd * 0.5
}

/// Transition matrices `Φ(t_k, t₀)` at every sample, from the product of
/// per-step factors with `F` averaged over each step.
pub fn stm_numeric_history(segment: &Segment) -> Vec<Mat12> {
    let samples = segment.samples();
    let mut out = Vec::with_capacity(samples.len());
    let mut phi = Mat12::identity();
    out.push(phi);
    let mut f_prev = segment.linearization(0);
    for k in 1..samples.len() {
        let f_next = segment.linearization(k);
        let dt = samples[k].time - samples[k - 1].time;
        phi = step_factor(&((f_prev + f_next) * 0.5), dt) * phi;
        out.push(phi);
        f_prev = f_next;
    }
    out
}

/// Numeric transition matrix from the segment start to the sample nearest `t`.
pub fn stm_numeric(segment: &Segment, t: f64) -> Result<Mat12> {
    let (start, end) = (segment.start_time(), segment.end_time());
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let idx = segment
        .samples()
        .partition_point(|s| s.time < t)
        .min(segment.samples().len() - 1);
    Ok(stm_numeric_history(segment)[idx])
}

/// A basis with orthonormal columns in the 12-dimensional error space.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis(DMatrix<f64>);

impl SubspaceBasis {
    pub const ORTHONORMAL_TOL: f64 = 1e-10;

    /// Wraps a matrix whose columns are already orthonormal.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != STATE_DIM {
            return Err(Error::DimensionMismatch(m.nrows(), STATE_DIM));
        }
        let k = m.ncols();
        let err = (m.transpose() * &m - DMatrix::identity(k, k)).amax();
        if k > 0 && err > Self::ORTHONORMAL_TOL {
            return Err(Error::InvalidParameter(format!(
                "basis columns not orthonormal (error {err:.3e})"
            )));
        }
        Ok(Self(m))
    }

    /// Orthonormal basis for the column span of `m`.
    pub fn span_of(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != STATE_DIM {
            return Err(Error::DimensionMismatch(m.nrows(), STATE_DIM));
        }
        if m.ncols() == 0 {
            return Ok(Self(m));
        }
        let svd = m.svd(true, false);
        let u = svd.u.expect("left vectors requested");
        let smax = svd.singular_values.max();
        let cols: Vec<DVector<f64>> = svd
            .singular_values
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 1e-12 * smax)
            .map(|(i, _)| u.column(i).into_owned())
            .collect();
        Ok(Self(columns_to_matrix(&cols)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn column(&self, i: usize) -> DVector<f64> {
        self.0.column(i).into_owned()
    }

    /// Distance from `v` to its projection onto the span, relative to `‖v‖`.
    pub fn residual(&self, v: &DVector<f64>) -> f64 {
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        let proj = &self.0 * (self.0.transpose() * v);
        (v - proj).norm() / n
    }
}

fn columns_to_matrix(cols: &[DVector<f64>]) -> DMatrix<f64> {
    if cols.is_empty() {
        DMatrix::zeros(STATE_DIM, 0)
    } else {
        DMatrix::from_columns(cols)
    }
}

/// Options for [`gramian_nullspace`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramianOptions {
    /// Singular values below `tol·σ_max` span the null space.
    pub tol: f64,
    /// Spacing of measurement epochs in seconds.
    pub epoch_interval: f64,
    pub max_epochs: usize,
}

impl Default for GramianOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            epoch_interval: 1.0,
            max_epochs: 512,
        }
    }
}

/// Result of a Gramian analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSpace {
    pub basis: SubspaceBasis,
    /// Singular values of the stacked operator, descending.
    pub singular_values: Vec<f64>,
    pub epochs: usize,
}

/// Right null space of the stacked `H(t_k)·Φ(t_k, t₀)` over measurement epochs.
///
/// `h_builder` returns the measurement Jacobian rows (12 columns) at a sample.
pub fn gramian_nullspace<F>(segment: &Segment, h_builder: F, opts: &GramianOptions) -> Result<NullSpace>
where
    F: Fn(&SegmentSample, &GeoContext) -> DMatrix<f64>,
{
    let samples = segment.samples();
    let history = stm_numeric_history(segment);
    let mut blocks: Vec<DMatrix<f64>> = Vec::new();
    let mut next_epoch = segment.start_time();
    for (s, phi) in samples.iter().zip(&history) {
        if blocks.len() >= opts.max_epochs {
            break;
        }
        if s.time + 1e-9 < next_epoch {
            continue;
        }
        next_epoch += opts.epoch_interval;
        let h = h_builder(s, segment.geo());
        if h.ncols() != STATE_DIM {
            return Err(Error::DimensionMismatch(h.ncols(), STATE_DIM));
        }
        let phi_d = DMatrix::from_column_slice(STATE_DIM, STATE_DIM, phi.as_slice());
        blocks.push(h * phi_d);
    }
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut stacked = DMatrix::zeros(rows.max(STATE_DIM), STATE_DIM);
    let mut r = 0;
    for b in &blocks {
        stacked.view_mut((r, 0), (b.nrows(), STATE_DIM)).copy_from(b);
        r += b.nrows();
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("right vectors requested");
    let smax = svd.singular_values.max();
    let threshold = opts.tol * smax;
    let mut pairs: Vec<(f64, DVector<f64>)> = svd
        .singular_values
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, v_t.row(i).transpose().into_owned()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let null: Vec<DVector<f64>> = pairs
        .iter()
        .filter(|(s, _)| smax == 0.0 || *s <= threshold)
        .map(|(_, v)| v.clone())
        .collect();
    Ok(NullSpace {
        basis: SubspaceBasis::new(columns_to_matrix(&null))?,
        singular_values: pairs.iter().map(|(s, _)| *s).collect(),
        epochs: blocks.len(),
    })
}

/// DVL velocity Jacobian at a segment sample.
pub fn velocity_rows(s: &SegmentSample, _geo: &GeoContext) -> DMatrix<f64> {
    let rt = s.attitude.transpose();
    let mut h = Mat3x12::zeros();
    h.fixed_view_mut::<3, 3>(0, DV).copy_from(&rt);
    h.fixed_view_mut::<3, 3>(0, PHI).copy_from(&(rt * skew(&s.velocity)));
    to_dynamic(&h)
}

/// Acceleration Jacobian `[0, R̂_n^b[gⁿ×], I, 0]` at a segment sample.
pub fn acceleration_rows(s: &SegmentSample, geo: &GeoContext) -> DMatrix<f64> {
    let mut h = Mat3x12::zeros();
    h.fixed_view_mut::<3, 3>(0, PHI)
        .copy_from(&(s.attitude.transpose() * skew(&gravity_ned(geo))));
    h.fixed_view_mut::<3, 3>(0, BA).copy_from(&Matrix3::identity());
    to_dynamic(&h)
}

/// Velocity rows stacked on acceleration rows.
pub fn velocity_acceleration_rows(s: &SegmentSample, geo: &GeoContext) -> DMatrix<f64> {
    let v = velocity_rows(s, geo);
    let a = acceleration_rows(s, geo);
    let mut out = DMatrix::zeros(6, STATE_DIM);
    out.rows_mut(0, 3).copy_from(&v);
    out.rows_mut(3, 3).copy_from(&a);
    out
}

fn to_dynamic(h: &Mat3x12) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, STATE_DIM, h.as_slice())
}

/// Analytic unobservable subspace for a level vehicle: the z gyro bias and the
/// three directions `[0, e_k, −[g×]e_k, 0]` coupling tilt with accelerometer bias.
pub fn analytic_u(g: &Vec3) -> SubspaceBasis {
    let mut cols = Vec::with_capacity(4);
    let mut e12 = DVector::zeros(STATE_DIM);
    e12[BG + 2] = 1.0;
    cols.push(e12);
    let gx = skew(g);
    for k in 0..3 {
        let mut u = DVector::zeros(STATE_DIM);
        u[PHI + k] = 1.0;
        let c = -gx.column(k);
        for i in 0..3 {
            u[BA + i] = c[i];
        }
        cols.push(u);
    }
    SubspaceBasis::span_of(DMatrix::from_columns(&cols)).expect("state dimension is fixed")
}

/// Largest principal angle between two spans in radians.
///
/// Spans of different dimension are never equal and give `π/2`.
pub fn subspace_angle(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    if a.dim() == 0 || b.dim() == 0 {
        return Err(Error::EmptyBasis);
    }
    if a.dim() != b.dim() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let (qa, qb) = (a.matrix(), b.matrix());
    let resid = qa - qb * (qb.transpose() * qa);
    let sin = resid.singular_values().max().min(1.0);
    Ok(sin.asin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{dcm_from_euler, EARTH_RATE};
    use approx::assert_relative_eq;

    fn no_earth() -> InsConfig {
        InsConfig { earth_rotation: false }
    }

    fn static_segment(duration: f64) -> Segment {
        Segment::stationary(duration, 0.01, Mat3::identity(), GeoContext::default(), no_earth()).unwrap()
    }

    #[test]
    fn stm_identity_at_start() {
        let seg = static_segment(10.0);
        let b = stm_closed_form(&seg, 0.0).unwrap();
        assert_eq!(b.phi(), Mat12::identity());
        assert_eq!(stm_numeric(&seg, 0.0).unwrap(), Mat12::identity());
    }

    #[test]
    fn stm_out_of_range() {
        let seg = static_segment(10.0);
        assert!(matches!(stm_closed_form(&seg, 10.5), Err(Error::OutOfRange { .. })));
        assert!(matches!(stm_closed_form(&seg, -0.1), Err(Error::OutOfRange { .. })));
        assert!(stm_numeric(&seg, 11.0).is_err());
    }

    #[test]
    fn stm_static_closed_form_integrals() {
        let seg = static_segment(10.0);
        let t = 7.3;
        let b = stm_closed_form(&seg, t).unwrap();
        let fx = skew(&seg.samples()[0].specific_force_nav());
        assert_relative_eq!(b.r_t, Mat3::identity() * t, epsilon = 1e-10);
        assert_relative_eq!(b.s_t, -fx * t, epsilon = 1e-8);
        assert_relative_eq!(b.m_t, -fx * (0.5 * t * t), epsilon = 1e-8);
    }

    #[test]
    fn stm_structure() {
        let seg = static_segment(5.0);
        let phi = stm_closed_form(&seg, 5.0).unwrap().phi();
        for blk in 0..4 {
            let d = phi.fixed_view::<3, 3>(3 * blk, 3 * blk);
            assert_eq!(d.into_owned(), Mat3::identity());
            for below in (blk + 1)..4 {
                assert_eq!(phi.fixed_view::<3, 3>(3 * below, 3 * blk).into_owned(), Mat3::zeros());
            }
        }
    }

    #[test]
    fn stm_numeric_matches_closed_form_static() {
        let seg = static_segment(10.0);
        let closed = stm_closed_form(&seg, 10.0).unwrap().phi();
        let numeric = stm_numeric(&seg, 10.0).unwrap();
        assert!((closed - numeric).amax() < 1e-6);
    }

    #[test]
    fn stm_numeric_matches_closed_form_tilted() {
        let att = dcm_from_euler(0.1, -0.2, 0.7);
        let seg = Segment::stationary(10.0, 0.01, att, GeoContext::default(), no_earth()).unwrap();
        let closed = stm_closed_form(&seg, 10.0).unwrap().phi();
        let numeric = stm_numeric(&seg, 10.0).unwrap();
        assert!((closed - numeric).amax() < 1e-6);
    }

    #[test]
    fn static_velocity_nullspace_is_u() {
        let seg = static_segment(60.0);
        let ns = gramian_nullspace(&seg, velocity_rows, &GramianOptions::default()).unwrap();
        assert_eq!(ns.basis.dim(), 4);
        let u = analytic_u(&gravity_ned(seg.geo()));
        assert!(subspace_angle(&ns.basis, &u).unwrap() < 1e-6);
    }

    #[test]
    fn static_stacked_nullspace_is_u() {
        let seg = static_segment(60.0);
        let ns = gramian_nullspace(&seg, velocity_acceleration_rows, &GramianOptions::default()).unwrap();
        assert_eq!(ns.basis.dim(), 4);
        let u = analytic_u(&gravity_ned(seg.geo()));
        assert!(subspace_angle(&ns.basis, &u).unwrap() < 1e-6);
    }

    #[test]
    fn acceleration_alone_leaves_velocity_error_unobservable() {
        let seg = static_segment(60.0);
        let ns = gramian_nullspace(&seg, acceleration_rows, &GramianOptions::default()).unwrap();
        assert_eq!(ns.basis.dim(), 7);
        let u = analytic_u(&gravity_ned(seg.geo()));
        for i in 0..u.dim() {
            assert!(ns.basis.residual(&u.column(i)) < 1e-6);
        }
        for k in 0..3 {
            let mut e = DVector::zeros(STATE_DIM);
            e[DV + k] = 1.0;
            assert!(ns.basis.residual(&e) < 1e-6);
        }
    }

    #[test]
    fn full_state_measurement_has_empty_nullspace() {
        let seg = static_segment(5.0);
        let ns = gramian_nullspace(
            &seg,
            |_: &SegmentSample, _: &GeoContext| DMatrix::identity(12, 12),
            &GramianOptions::default(),
        )
        .unwrap();
        assert_eq!(ns.basis.dim(), 0);
    }

    #[test]
    fn nullspace_heading_components_are_vertical() {
        let seg = static_segment(60.0);
        let g = gravity_ned(seg.geo());
        let ns = gramian_nullspace(&seg, velocity_acceleration_rows, &GramianOptions::default()).unwrap();
        for i in 0..ns.basis.dim() {
            let c = ns.basis.column(i);
            let u4 = Vec3::new(c[BG], c[BG + 1], c[BG + 2]);
            assert!((skew(&g) * u4).norm() < 1e-8 * g.norm());
        }
    }

    #[test]
    fn maneuvering_vehicle_observes_more() {
        let geo = GeoContext::default();
        let g = gravity_ned(&geo);
        let (amp, w) = (1.0, 0.2);
        let speed = 1.0;
        let dt = 0.01;
        let samples: Vec<_> = (0..=6000)
            .map(|k| {
                let t = k as f64 * dt;
                let yaw = amp * (w * t).sin();
                let rate = amp * w * (w * t).cos();
                let att = dcm_from_euler(0.0, 0.0, yaw);
                let v = att * Vec3::new(speed, 0.0, 0.0);
                let a = Vec3::new(0.0, 0.0, rate).cross(&v);
                SegmentSample {
                    time: t,
                    attitude: att,
                    velocity: v,
                    specific_force: att.transpose() * (a - g),
                    angular_rate: Vec3::new(0.0, 0.0, rate),
                }
            })
            .collect();
        let seg = Segment::new(samples, geo, no_earth()).unwrap();
        let ns = gramian_nullspace(&seg, velocity_rows, &GramianOptions::default()).unwrap();
        assert!(ns.basis.dim() < 4, "{:?}", ns.singular_values);
        let stacked = gramian_nullspace(&seg, velocity_acceleration_rows, &GramianOptions::default()).unwrap();
        assert!(stacked.basis.dim() < 4);
    }

    #[test]
    fn analytic_u_properties() {
        let u = analytic_u(&Vec3::new(0.0, 0.0, 9.81));
        assert_eq!(u.dim(), 4);
        let mut e12 = DVector::zeros(STATE_DIM);
        e12[11] = 1.0;
        assert!(u.residual(&e12) < 1e-12);
        for i in 0..4 {
            let c = u.column(i);
            assert!(c.rows(DV, 3).norm() < 1e-15);
        }
        let m = u.matrix();
        assert_relative_eq!(m.transpose() * m, DMatrix::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn subspace_angle_cases() {
        let u = analytic_u(&Vec3::new(0.0, 0.0, 9.81));
        assert!(subspace_angle(&u, &u).unwrap() < 1e-12);
        let mut a = DMatrix::zeros(12, 1);
        a[0] = 1.0;
        let mut b = DMatrix::zeros(12, 1);
        b[1] = 1.0;
        let (a, b) = (SubspaceBasis::new(a).unwrap(), SubspaceBasis::new(b).unwrap());
        assert_relative_eq!(
            subspace_angle(&a, &b).unwrap(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-12
        );
        let empty = SubspaceBasis::new(DMatrix::zeros(12, 0)).unwrap();
        assert!(matches!(subspace_angle(&empty, &a), Err(Error::EmptyBasis)));
    }

    #[test]
    fn subspace_angle_small_rotation() {
        let eps: f64 = 1e-7;
        let mut a = DMatrix::zeros(12, 1);
        a[0] = 1.0;
        let mut b = DMatrix::zeros(12, 1);
        b[0] = eps.cos();
        b[1] = eps.sin();
        let (a, b) = (SubspaceBasis::new(a).unwrap(), SubspaceBasis::new(b).unwrap());
        assert_relative_eq!(subspace_angle(&a, &b).unwrap(), eps, max_relative = 1e-6);
    }

    #[test]
    fn basis_rejects_non_orthonormal() {
        let m = DMatrix::from_element(12, 2, 1.0);
        assert!(SubspaceBasis::new(m.clone()).is_err());
        assert_eq!(SubspaceBasis::span_of(m).unwrap().dim(), 1);
    }

    #[test]
    fn earth_rate_changes_linearization() {
        let geo = GeoContext::default();
        let seg = Segment::stationary(1.0, 0.01, Mat3::identity(), geo, InsConfig::default()).unwrap();
        let phi = stm_numeric(&seg, 1.0).unwrap();
        let attitude_block = phi.fixed_view::<3, 3>(PHI, PHI).into_owned();
        assert!((attitude_block - Mat3::identity()).amax() > 0.5 * EARTH_RATE * 0.5);
    }
}
