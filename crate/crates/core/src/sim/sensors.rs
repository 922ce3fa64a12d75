//! IMU and DVL measurement synthesis from a truth trajectory.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dvl::{simulate_beams, DvlBeamSet, DvlErrorModel, DvlGeometry};
use crate::ekf::{Covariance, FilterConfig, ProcessNoise, BA, BG};
use crate::frames::{gravity_ned, so3_exp, so3_log, Mat3, Vec3, STANDARD_GRAVITY};
use crate::ins::{ImuSample, InsConfig};
use crate::{Error, Result};

use super::TruthTrajectory;

const DEG: f64 = std::f64::consts::PI / 180.0;

/// RNG stream ids derived from a single seed.
const IMU_STREAM: u64 = 0;
const DVL_STREAM: u64 = 1;
pub(crate) const INIT_STREAM: u64 = 2;

pub(crate) fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn normal3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

/// Sensor grades. Turn-on biases are drawn per run from zero-mean normals
/// with the given standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorErrorBudget {
    /// Accelerometer turn-on bias σ (mg).
    pub accel_bias_mg: f64,
    /// Accelerometer white noise density (µg/√Hz).
    pub accel_noise_ug_rthz: f64,
    /// Gyro turn-on bias σ (°/h).
    pub gyro_bias_dph: f64,
    /// Gyro angle random walk (°/√h).
    pub gyro_arw_deg_rth: f64,
    /// Accelerometer bias random walk (m/s²/√s).
    pub accel_bias_walk: f64,
    /// Gyro bias random walk (rad/s/√s).
    pub gyro_bias_walk: f64,
    pub dvl: DvlErrorModel,
    pub imu_rate: f64,
    pub dvl_rate: f64,
}

impl Default for SensorErrorBudget {
    fn default() -> Self {
        Self {
            accel_bias_mg: 1.0,
            accel_noise_ug_rthz: 50.0,
            gyro_bias_dph: 10.0,
            gyro_arw_deg_rth: 0.02,
            accel_bias_walk: 1e-6,
            gyro_bias_walk: 1e-8,
            dvl: DvlErrorModel::noise_only(0.006),
            imu_rate: 100.0,
            dvl_rate: 1.0,
        }
    }
}

impl SensorErrorBudget {
    /// No errors at all, default rates.
    pub fn zero() -> Self {
        Self {
            accel_bias_mg: 0.0,
            accel_noise_ug_rthz: 0.0,
            gyro_bias_dph: 0.0,
            gyro_arw_deg_rth: 0.0,
            accel_bias_walk: 0.0,
            gyro_bias_walk: 0.0,
            dvl: DvlErrorModel::default(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.accel_bias_mg,
            self.accel_noise_ug_rthz,
            self.gyro_bias_dph,
            self.gyro_arw_deg_rth,
            self.accel_bias_walk,
            self.gyro_bias_walk,
        ];
        if fields.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::InvalidParameter("sensor error terms must be >= 0".into()));
        }
        if !(self.imu_rate > 0.0 && self.dvl_rate > 0.0 && self.dvl_rate <= self.imu_rate) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dvl_rate <= imu_rate (got {} and {})",
                self.dvl_rate, self.imu_rate
            )));
        }
        self.dvl_decimation()?;
        self.dvl.validate()
    }

    /// IMU samples per DVL ping.
    pub fn dvl_decimation(&self) -> Result<usize> {
        let ratio = self.imu_rate / self.dvl_rate;
        let n = ratio.round();
        if !((ratio - n).abs() < 1e-9 && n >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "imu_rate / dvl_rate = {ratio} must be an integer"
            )));
        }
        Ok(n as usize)
    }

    pub fn imu_dt(&self) -> f64 {
        1.0 / self.imu_rate
    }

    pub fn accel_bias_sigma(&self) -> f64 {
        self.accel_bias_mg * 1e-3 * STANDARD_GRAVITY
    }

    pub fn gyro_bias_sigma(&self) -> f64 {
        self.gyro_bias_dph * DEG / 3600.0
    }

    /// Accelerometer white noise density in m/s²/√Hz.
    pub fn accel_noise_density(&self) -> f64 {
        self.accel_noise_ug_rthz * 1e-6 * STANDARD_GRAVITY
    }

    /// Gyro white noise density in rad/s/√Hz.
    pub fn gyro_noise_density(&self) -> f64 {
        self.gyro_arw_deg_rth * DEG / 60.0
    }

    /// Process noise matching this budget.
    pub fn process_noise(&self) -> ProcessNoise {
        ProcessNoise {
            accel_noise: self.accel_noise_density(),
            gyro_noise: self.gyro_noise_density(),
            accel_bias_walk: self.accel_bias_walk,
            gyro_bias_walk: self.gyro_bias_walk,
        }
    }

    /// Match the filter's process noise and initial bias σ to this budget.
    /// The initial covariance becomes diagonal.
    pub fn tune_filter(&self, cfg: &mut FilterConfig) {
        cfg.noise = self.process_noise();
        let mut sig = cfg.p0.sigmas();
        for i in 0..3 {
            sig[BA + i] = self.accel_bias_sigma();
            sig[BG + i] = self.gyro_bias_sigma();
        }
        cfg.p0 = Covariance::from_sigmas(&sig);
    }
}

/// Sensor biases at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuErrors {
    pub accel_bias: Vec3,
    pub gyro_bias: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImu {
    pub samples: Vec<ImuSample>,
    /// True biases at every truth epoch; sample `k` carries `biases[k]`.
    pub biases: Vec<ImuErrors>,
}

/// Error-free IMU record over `[t_k, t_{k+1}]` that makes one mechanization
/// step land exactly on the next truth epoch.
pub fn ideal_imu_sample(truth: &TruthTrajectory, k: usize, ins: &InsConfig) -> Result<ImuSample> {
    let (a, b) = (&truth.epochs()[k], &truth.epochs()[k + 1]);
    let dt = b.time - a.time;
    let geo = truth.geo();
    let (w_ie, w_en) = ins.frame_rates(&a.velocity, geo);
    let w_in = w_ie + w_en;
    let rotation = a.attitude.transpose() * so3_exp(&(w_in * dt)) * b.attitude;
    let angular_rate = so3_log(&rotation) / dt;
    let mean_att: Mat3 = (a.attitude + b.attitude) * 0.5;
    let rhs = (b.velocity - a.velocity) / dt - gravity_ned(geo) + (w_en + 2.0 * w_ie).cross(&a.velocity);
    let inv: Matrix3<f64> = mean_att
        .try_inverse()
        .ok_or(Error::SingularMatrix("mean attitude over IMU step"))?;
    Ok(ImuSample {
        time: a.time,
        specific_force: inv * rhs,
        angular_rate,
    })
}

/// IMU stream for `truth` with turn-on biases, bias random walks and white
/// noise from `budget`.
pub fn synth_imu(
    truth: &TruthTrajectory,
    budget: &SensorErrorBudget,
    ins: &InsConfig,
    seed: u64,
) -> Result<SyntheticImu> {
    budget.validate()?;
    if (truth.dt() - budget.imu_dt()).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "truth step {} does not match IMU rate {}",
            truth.dt(),
            budget.imu_rate
        )));
    }
    let mut rng = rng_for(seed, IMU_STREAM);
    let mut bias = ImuErrors {
        accel_bias: normal3(&mut rng) * budget.accel_bias_sigma(),
        gyro_bias: normal3(&mut rng) * budget.gyro_bias_sigma(),
    };
    let dt = truth.dt();
    let root_rate = budget.imu_rate.sqrt();
    let (sa, sg) = (
        budget.accel_noise_density() * root_rate,
        budget.gyro_noise_density() * root_rate,
    );
    let (wa, wg) = (budget.accel_bias_walk * dt.sqrt(), budget.gyro_bias_walk * dt.sqrt());
    let mut samples = Vec::with_capacity(truth.len() - 1);
    let mut biases = Vec::with_capacity(truth.len());
    for k in 0..truth.len() - 1 {
        let mut s = ideal_imu_sample(truth, k, ins)?;
        s.specific_force += bias.accel_bias;
        s.angular_rate += bias.gyro_bias;
        if sa > 0.0 {
            s.specific_force += normal3(&mut rng) * sa;
        }
        if sg > 0.0 {
            s.angular_rate += normal3(&mut rng) * sg;
        }
        samples.push(s);
        biases.push(bias);
        if wa > 0.0 {
            bias.accel_bias += normal3(&mut rng) * wa;
        }
        if wg > 0.0 {
            bias.gyro_bias += normal3(&mut rng) * wg;
        }
    }
    biases.push(bias);
    Ok(SyntheticImu { samples, biases })
}

/// Truth velocity in the DVL frame at grid epoch `k`.
pub fn dvl_frame_velocity(truth: &TruthTrajectory, k: usize, dvl_to_body: &Mat3) -> Vec3 {
    let e = &truth.epochs()[k];
    dvl_to_body.transpose() * (e.attitude.transpose() * e.velocity)
}

/// Grid indices of the DVL pings, starting one DVL period after the start.
pub fn dvl_epoch_indices(truth: &TruthTrajectory, budget: &SensorErrorBudget) -> Result<Vec<usize>> {
    let step = budget.dvl_decimation()?;
    Ok((1..).map(|j| j * step).take_while(|&k| k < truth.len()).collect())
}

/// DVL pings at the DVL rate with the beam error model of `budget`.
pub fn synth_dvl(
    truth: &TruthTrajectory,
    budget: &SensorErrorBudget,
    geom: &DvlGeometry,
    dvl_to_body: &Mat3,
    seed: u64,
) -> Result<Vec<DvlBeamSet>> {
    budget.validate()?;
    let mut rng = rng_for(seed, DVL_STREAM);
    Ok(dvl_epoch_indices(truth, budget)?
        .into_iter()
        .map(|k| {
            let v = dvl_frame_velocity(truth, k, dvl_to_body);
            simulate_beams(truth.epochs()[k].time, &v, geom, &budget.dvl, &mut rng)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dvl::ls_velocity;
    use crate::frames::GeoContext;
    use crate::ins::mechanize_step;
    use crate::sim::{gen_figure_eight, gen_straight_with};
    use approx::assert_relative_eq;

    fn no_earth() -> InsConfig {
        InsConfig { earth_rotation: false }
    }

    #[test]
    fn zero_budget_static_specific_force() {
        let truth = gen_straight_with(5.0, 1e-12, 0.01, GeoContext::default()).unwrap();
        let imu = synth_imu(&truth, &SensorErrorBudget::zero(), &no_earth(), 1).unwrap();
        let g = truth.geo().gravity;
        for s in &imu.samples {
            assert_relative_eq!(s.specific_force, Vec3::new(0.0, 0.0, -g), epsilon = 1e-9);
            assert!(s.angular_rate.norm() < 1e-15);
        }
    }

    #[test]
    fn zero_budget_mechanization_reproduces_truth() {
        let truth = gen_figure_eight(0.9, 394.0, 17.0).unwrap();
        let ins = InsConfig::default();
        let imu = synth_imu(&truth, &SensorErrorBudget::zero(), &ins, 3).unwrap();
        let mut s = truth.nav_state(0);
        let mut worst_v: f64 = 0.0;
        let mut worst_r: f64 = 0.0;
        for (k, sample) in imu.samples.iter().enumerate() {
            s = mechanize_step(&s, sample, truth.dt(), &ins).unwrap();
            let e = &truth.epochs()[k + 1];
            worst_v = worst_v.max((s.velocity - e.velocity).norm());
            worst_r = worst_r.max(so3_log(&(s.attitude * e.attitude.transpose())).norm());
        }
        assert!(worst_v < 1e-8, "{worst_v}");
        assert!(worst_r < 1e-9, "{worst_r}");
    }

    #[test]
    fn bias_only_error_grows_linearly() {
        let truth = gen_straight_with(60.0, 1e-12, 0.01, GeoContext::default()).unwrap();
        let ins = no_earth();
        let budget = SensorErrorBudget {
            accel_bias_mg: 1.0,
            ..SensorErrorBudget::zero()
        };
        let imu = synth_imu(&truth, &budget, &ins, 11).unwrap();
        let b = imu.biases[0].accel_bias;
        let mut s = truth.nav_state(0);
        for sample in &imu.samples {
            s = mechanize_step(&s, sample, truth.dt(), &ins).unwrap();
        }
        let expected = b * 60.0;
        assert!((s.velocity - expected).norm() < 0.01 * expected.norm());
    }

    #[test]
    fn imu_stream_is_deterministic() {
        let truth = gen_straight_with(20.0, 1.0, 0.01, GeoContext::default()).unwrap();
        let budget = SensorErrorBudget::default();
        let ins = InsConfig::default();
        let a = synth_imu(&truth, &budget, &ins, 42).unwrap();
        let b = synth_imu(&truth, &budget, &ins, 42).unwrap();
        let c = synth_imu(&truth, &budget, &ins, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn dvl_stream_defaults() {
        let truth = gen_straight_with(10.0, 2.0, 0.01, GeoContext::default()).unwrap();
        let budget = SensorErrorBudget {
            dvl: DvlErrorModel::default(),
            ..SensorErrorBudget::default()
        };
        let geom = DvlGeometry::default();
        let pings = synth_dvl(&truth, &budget, &geom, &Mat3::identity(), 5).unwrap();
        assert_eq!(pings.len(), 10);
        for (j, p) in pings.iter().enumerate() {
            assert_relative_eq!(p.time, (j + 1) as f64, epsilon = 1e-9);
            let v = ls_velocity(p, &geom).unwrap();
            assert_relative_eq!(v, Vec3::new(2.0, 0.0, 0.0), epsilon = 1e-12);
        }
        let noisy = SensorErrorBudget::default();
        let a = synth_dvl(&truth, &noisy, &geom, &Mat3::identity(), 5).unwrap();
        let b = synth_dvl(&truth, &noisy, &geom, &Mat3::identity(), 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_validation() {
        let d = SensorErrorBudget::default();
        for b in [
            SensorErrorBudget { dvl_rate: 200.0, ..d },
            SensorErrorBudget { dvl_rate: 3.0, ..d },
            SensorErrorBudget {
                gyro_bias_dph: -1.0,
                ..d
            },
            SensorErrorBudget {
                gyro_bias_walk: f64::NAN,
                ..d
            },
        ] {
            assert!(b.validate().is_err());
        }
    }

    #[test]
    fn tune_filter_matches_budget() {
        let budget = SensorErrorBudget::default();
        let mut cfg = FilterConfig::default();
        budget.tune_filter(&mut cfg);
        let s = cfg.p0.sigmas();
        assert_relative_eq!(s[BA], budget.accel_bias_sigma(), max_relative = 1e-12);
        assert_relative_eq!(s[BG + 2], budget.gyro_bias_sigma(), max_relative = 1e-12);
        assert_relative_eq!(cfg.noise.accel_noise, budget.accel_noise_density());
        assert_eq!(cfg.noise.gyro_bias_walk, budget.gyro_bias_walk);
    }
}
