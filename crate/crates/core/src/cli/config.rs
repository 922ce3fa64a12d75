//! Experiment configuration, loaded from TOML.

use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dvl::DvlGeometry;
use crate::ekf::{Covariance, FilterConfig, ProcessNoise, UpdateMode, UpdateOrder, BA, BG, DV, PHI};
use crate::frames::{dcm_from_euler, GeoContext, Mat3, STANDARD_GRAVITY};
use crate::ins::InsConfig;
use crate::sim::{
    gen_figure_eight_with, gen_lawnmower_with, gen_straight_with, FigureEightParams, LawnmowerParams, MonteCarloSetup,
    SensorErrorBudget, TruthTrajectory, SWEEP_MAX, SWEEP_MIN,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeSelect {
    Baseline,
    Accel,
    Both,
}

impl ModeSelect {
    pub fn modes(self) -> Vec<UpdateMode> {
        match self {
            ModeSelect::Baseline => vec![UpdateMode::VelocityOnly],
            ModeSelect::Accel => vec![UpdateMode::VelocityAcceleration],
            ModeSelect::Both => vec![UpdateMode::VelocityOnly, UpdateMode::VelocityAcceleration],
        }
    }
}

/// File tag of a filter mode.
pub fn mode_tag(mode: UpdateMode) -> &'static str {
    match mode {
        UpdateMode::VelocityOnly => "baseline",
        UpdateMode::VelocityAcceleration => "accel",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StraightParams {
    pub duration: f64,
    pub speed: f64,
    /// Heading of the run (°).
    pub heading_deg: f64,
}

impl Default for StraightParams {
    fn default() -> Self {
        Self {
            duration: 424.0,
            speed: 2.0,
            heading_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryConfig {
    Straight(StraightParams),
    Lawnmower(LawnmowerParams),
    FigureEight(FigureEightParams),
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        TrajectoryConfig::FigureEight(FigureEightParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SiteConfig {
    pub latitude_deg: f64,
    pub depth: f64,
    pub gravity: f64,
}

impl Default for SiteConfig {
    fn default() -> Self {
        Self {
            latitude_deg: 32.8,
            depth: 0.0,
            gravity: STANDARD_GRAVITY,
        }
    }
}

impl SiteConfig {
    pub fn geo(&self) -> Result<GeoContext> {
        GeoContext::new(self.latitude_deg.to_radians(), self.depth, self.gravity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DvlConfig {
    /// Beam angle from the DVL z axis (°).
    pub beam_pitch_deg: f64,
    /// DVL-to-body mounting rotation as roll, pitch, yaw (°).
    pub mounting_rpy_deg: [f64; 3],
}

impl Default for DvlConfig {
    fn default() -> Self {
        Self {
            beam_pitch_deg: 20.0,
            mounting_rpy_deg: [0.0; 3],
        }
    }
}

impl DvlConfig {
    pub fn geometry(&self) -> Result<DvlGeometry> {
        DvlGeometry::new(self.beam_pitch_deg.to_radians())
    }

    pub fn dvl_to_body(&self) -> Mat3 {
        let [r, p, y] = self.mounting_rpy_deg.map(f64::to_radians);
        dcm_from_euler(r, p, y)
    }
}

/// Process noise given explicitly instead of matched to the sensor budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseOverride {
    pub accel_noise: f64,
    pub gyro_noise: f64,
    pub accel_bias_walk: f64,
    pub gyro_bias_walk: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderSelect {
    VelocityFirst,
    AccelerationFirst,
}

/// Filter settings shared by both modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSettings {
    pub window_len: usize,
    pub overlapping_windows: bool,
    /// Factor on the window slope variance used for the acceleration noise.
    pub accel_inflation: f64,
    pub update_order: OrderSelect,
    /// Innovation gate threshold; 0 disables gating.
    pub gate: f64,
    pub rotation_compensation: bool,
    pub earth_rotation: bool,
    pub max_dvl_speed: f64,
    pub init_velocity_sigma: f64,
    pub init_level_sigma_deg: f64,
    pub init_heading_sigma_deg: f64,
    /// Perturb the initial state by a draw from P₀ in Monte Carlo runs.
    pub perturb_initial: bool,
    pub noise: Option<NoiseOverride>,
}

impl Default for FilterSettings {
    fn default() -> Self {
        let f = FilterConfig::default();
        let s = f.p0.sigmas();
        Self {
            window_len: f.window_len,
            overlapping_windows: f.overlapping_windows,
            accel_inflation: 2.0,
            update_order: OrderSelect::VelocityFirst,
            gate: f.gate.unwrap_or(0.0),
            rotation_compensation: f.rotation_compensation,
            earth_rotation: f.ins.earth_rotation,
            max_dvl_speed: f.max_dvl_speed,
            init_velocity_sigma: s[DV],
            init_level_sigma_deg: s[PHI].to_degrees(),
            init_heading_sigma_deg: s[PHI + 2].to_degrees(),
            perturb_initial: true,
            noise: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaSource {
    /// Filter σ on error-free sensors with an unperturbed start.
    Covariance,
    /// Ensemble mean of the filter σ over the Monte Carlo runs.
    Ensemble,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareConfig {
    pub source: SigmaSource,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            source: SigmaSource::Covariance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n_min: usize,
    pub n_max: usize,
    /// Number of independent DVL noise draws averaged into each point.
    pub realizations: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_min: SWEEP_MIN,
            n_max: SWEEP_MAX,
            realizations: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObservabilityConfig {
    /// Length of the stationary segment (s).
    pub static_duration: f64,
    pub tol: f64,
    pub epoch_interval: f64,
    /// Optional `[start, end]` window of the configured trajectory (s).
    pub trajectory_window: Option<[f64; 2]>,
}

impl Default for ObservabilityConfig {
    fn default() -> Self {
        Self {
            static_duration: 60.0,
            tol: 1e-8,
            epoch_interval: 1.0,
            trajectory_window: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub runs: usize,
    pub out_dir: PathBuf,
    pub mode: ModeSelect,
    /// Write one error CSV per Monte Carlo run.
    pub write_runs: bool,
    pub trajectory: TrajectoryConfig,
    pub site: SiteConfig,
    pub sensors: SensorErrorBudget,
    pub dvl: DvlConfig,
    pub filter: FilterSettings,
    pub compare: CompareConfig,
    pub sweep: SweepConfig,
    pub observability: ObservabilityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            runs: 100,
            out_dir: PathBuf::from("out"),
            mode: ModeSelect::Both,
            write_runs: true,
            trajectory: TrajectoryConfig::default(),
            site: SiteConfig::default(),
            sensors: SensorErrorBudget::default(),
            dvl: DvlConfig::default(),
            filter: FilterSettings::default(),
            compare: CompareConfig::default(),
            sweep: SweepConfig::default(),
            observability: ObservabilityConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.site.geo()?;
        self.sensors.validate()?;
        self.dvl.geometry()?;
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        let f = &self.filter;
        if !(f.accel_inflation > 0.0) || !(f.gate >= 0.0) || !(f.max_dvl_speed > 0.0) {
            return Err(Error::Config(
                "filter accel_inflation, gate and max_dvl_speed must be positive".into(),
            ));
        }
        if [f.init_velocity_sigma, f.init_level_sigma_deg, f.init_heading_sigma_deg]
            .iter()
            .any(|s| !(*s > 0.0))
        {
            return Err(Error::Config("initial sigmas must be positive".into()));
        }
        let s = &self.sweep;
        if s.n_min < SWEEP_MIN || s.n_max < s.n_min || s.realizations == 0 {
            return Err(Error::Config(format!(
                "sweep needs {SWEEP_MIN} <= n_min <= n_max and realizations >= 1"
            )));
        }
        let o = &self.observability;
        if !(o.static_duration > 0.0) || !(o.tol > 0.0) || !(o.epoch_interval > 0.0) {
            return Err(Error::Config("observability durations and tol must be positive".into()));
        }
        if let Some([a, b]) = o.trajectory_window {
            if !(b > a && a >= 0.0) {
                return Err(Error::Config(format!("trajectory_window [{a}, {b}] is empty")));
            }
        }
        self.filter_config(UpdateMode::VelocityAcceleration)?.validate()
    }

    pub fn geo(&self) -> Result<GeoContext> {
        self.site.geo()
    }

    pub fn ins(&self) -> InsConfig {
        InsConfig {
            earth_rotation: self.filter.earth_rotation,
        }
    }

    pub fn truth(&self) -> Result<TruthTrajectory> {
        let dt = self.sensors.imu_dt();
        let geo = self.geo()?;
        match &self.trajectory {
            TrajectoryConfig::Straight(p) => {
                let t = gen_straight_with(p.duration, p.speed, dt, geo)?;
                if p.heading_deg == 0.0 {
                    return Ok(t);
                }
                let rz = crate::frames::yaw_rotation(p.heading_deg.to_radians());
                let epochs = t
                    .epochs()
                    .iter()
                    .map(|e| {
                        let mut e = *e;
                        e.position = rz * e.position;
                        e.velocity = rz * e.velocity;
                        e.accel_nav = rz * e.accel_nav;
                        e.attitude = rz * e.attitude;
                        e
                    })
                    .collect();
                TruthTrajectory::from_epochs(dt, geo, epochs)
            }
            TrajectoryConfig::Lawnmower(p) => gen_lawnmower_with(p, dt, geo),
            TrajectoryConfig::FigureEight(p) => gen_figure_eight_with(p, dt, geo),
        }
    }

    /// Filter configuration for `mode`, tuned to the sensor budget.
    pub fn filter_config(&self, mode: UpdateMode) -> Result<FilterConfig> {
        let f = &self.filter;
        let geom = self.dvl.geometry()?;
        let mut cfg = FilterConfig::from_dvl(
            &geom,
            self.sensors.dvl.noise_std.max(1e-6),
            1.0 / self.sensors.dvl_rate,
            f.window_len,
            f.accel_inflation,
            self.dvl.dvl_to_body(),
        );
        self.sensors.tune_filter(&mut cfg);
        if let Some(n) = f.noise {
            cfg.noise = ProcessNoise {
                accel_noise: n.accel_noise,
                gyro_noise: n.gyro_noise,
                accel_bias_walk: n.accel_bias_walk,
                gyro_bias_walk: n.gyro_bias_walk,
            };
        }
        let mut sig = cfg.p0.sigmas();
        for i in 0..3 {
            sig[DV + i] = f.init_velocity_sigma;
        }
        sig[PHI] = f.init_level_sigma_deg.to_radians();
        sig[PHI + 1] = sig[PHI];
        sig[PHI + 2] = f.init_heading_sigma_deg.to_radians();
        for s in &mut sig[BA..BG + 3] {
            *s = s.max(1e-12);
        }
        cfg.p0 = Covariance::from_sigmas(&sig);
        cfg.mode = mode;
        cfg.overlapping_windows = f.overlapping_windows;
        cfg.update_order = match f.update_order {
            OrderSelect::VelocityFirst => UpdateOrder::VelocityFirst,
            OrderSelect::AccelerationFirst => UpdateOrder::AccelerationFirst,
        };
        cfg.gate = (f.gate > 0.0).then_some(f.gate);
        cfg.rotation_compensation = f.rotation_compensation;
        cfg.max_dvl_speed = f.max_dvl_speed;
        cfg.ins = self.ins();
        Ok(cfg)
    }

    pub fn monte_carlo_setup(&self, truth: &TruthTrajectory, mode: UpdateMode) -> Result<MonteCarloSetup> {
        Ok(MonteCarloSetup {
            truth: truth.clone(),
            budget: self.sensors,
            geometry: self.dvl.geometry()?,
            filter: self.filter_config(mode)?,
            seed: self.seed,
            perturb_initial: self.filter.perturb_initial,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shipped(name: &str) -> ExperimentConfig {
        let p = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("configs")
            .join(name);
        ExperimentConfig::load(&p).unwrap()
    }

    #[test]
    fn shipped_configs_load() {
        let f8 = shipped("figure_eight.toml");
        let d = ExperimentConfig {
            out_dir: "out/figure_eight".into(),
            ..ExperimentConfig::default()
        };
        assert_eq!(f8.sensors, d.sensors);
        assert_eq!(f8.trajectory, d.trajectory);
        assert_eq!(
            f8.filter_config(UpdateMode::VelocityOnly).unwrap(),
            d.filter_config(UpdateMode::VelocityOnly).unwrap()
        );
        assert!(matches!(
            shipped("straight.toml").trajectory,
            TrajectoryConfig::Straight(_)
        ));
        assert!(matches!(
            shipped("lawnmower.toml").trajectory,
            TrajectoryConfig::Lawnmower(_)
        ));
    }

    #[test]
    fn every_line_with_a_default_is_labelled() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        for e in std::fs::read_dir(dir).unwrap() {
            let text = std::fs::read_to_string(e.unwrap().path()).unwrap();
            assert!(text.contains("artifact default"));
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        for bad in [
            "sede = 1",
            "[filter]\nwindow = 3",
            "[trajectory]\nkind = \"straight\"\nspeeed = 1.0",
            "[sensors.dvl]\nnoise = 0.1",
        ] {
            let err = ExperimentConfig::from_toml(bad).unwrap_err().to_string();
            assert!(err.contains("unknown"), "{bad}: {err}");
        }
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(ExperimentConfig::from_toml("runs = 0").is_err());
        assert!(ExperimentConfig::from_toml("[sweep]\nn_min = 1").is_err());
        assert!(ExperimentConfig::from_toml("[dvl]\nbeam_pitch_deg = 95.0").is_err());
        assert!(ExperimentConfig::from_toml("[filter]\nwindow_len = 1").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = shipped("lawnmower.toml");
        let back = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn filter_tracks_budget() {
        let cfg = ExperimentConfig::default();
        let f = cfg.filter_config(UpdateMode::VelocityAcceleration).unwrap();
        assert_eq!(f.noise, cfg.sensors.process_noise());
        assert_eq!(f.mode, UpdateMode::VelocityAcceleration);
        let s = f.p0.sigmas();
        assert!((s[BA] - cfg.sensors.accel_bias_sigma()).abs() < 1e-18);
        assert!((s[PHI + 2] - 0.01).abs() < 1e-15);
    }
}
