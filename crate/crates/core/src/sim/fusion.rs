//! Full synth → filter pipeline for one run, and the Monte Carlo ensemble.

use rand::RngCore;
use rayon::prelude::*;

use crate::dvl::{ls_velocity, DvlBeamSet, DvlGeometry};
use crate::ekf::{Covariance, FilterConfig, FilterStats, ImuBias, InsDvlFilter, BA, BG, DV, PHI, STATE_DIM};
use crate::frames::{so3_exp, so3_log};
use crate::ins::NavState;
use crate::{Error, Result};

use super::sensors::{normal3, rng_for, INIT_STREAM};
use super::{synth_dvl, synth_imu, ImuErrors, SensorErrorBudget, SyntheticImu, TruthEpoch, TruthTrajectory};

/// Attitude error beyond which a run counts as diverged (rad).
pub const DIVERGENCE_ANGLE: f64 = 0.5;

pub type StateRow = [f64; STATE_DIM];

/// Worst covariance health seen over a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceHygiene {
    pub max_asymmetry: f64,
    /// Smallest `λ_min / trace(P)` observed.
    pub min_eigen_ratio: f64,
    pub non_finite: bool,
    pub epochs: usize,
}

impl Default for CovarianceHygiene {
    fn default() -> Self {
        Self {
            max_asymmetry: 0.0,
            min_eigen_ratio: f64::INFINITY,
            non_finite: false,
            epochs: 0,
        }
    }
}

impl CovarianceHygiene {
    pub const SYMMETRY_TOL: f64 = 1e-10;
    pub const PSD_TOL: f64 = 1e-9;

    pub fn observe(&mut self, p: &Covariance) {
        let m = p.matrix();
        self.non_finite |= m.iter().any(|x| !x.is_finite());
        self.max_asymmetry = self.max_asymmetry.max(p.asymmetry());
        self.min_eigen_ratio = self.min_eigen_ratio.min(p.min_eigenvalue() / p.trace());
        self.epochs += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        self.max_asymmetry = self.max_asymmetry.max(other.max_asymmetry);
        self.min_eigen_ratio = self.min_eigen_ratio.min(other.min_eigen_ratio);
        self.non_finite |= other.non_finite;
        self.epochs += other.epochs;
    }

    pub fn is_ok(&self) -> bool {
        !self.non_finite && self.max_asymmetry <= Self::SYMMETRY_TOL && self.min_eigen_ratio >= -Self::PSD_TOL
    }
}

/// Per-epoch record of one filter run. Errors are estimate minus truth; the
/// attitude error is `log(R̂ Rᵀ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    pub times: Vec<f64>,
    pub sigmas: Vec<StateRow>,
    pub errors: Vec<StateRow>,
    pub stats: FilterStats,
    pub hygiene: CovarianceHygiene,
    pub final_nav: NavState,
    pub final_bias: ImuBias,
}

impl FusionOutput {
    pub fn final_sigmas(&self) -> StateRow {
        self.sigmas[self.sigmas.len() - 1]
    }

    /// σ series of one state.
    pub fn sigma_series(&self, state: usize) -> Vec<f64> {
        self.sigmas.iter().map(|r| r[state]).collect()
    }
}

pub fn state_error(nav: &NavState, bias: &ImuBias, truth: &TruthEpoch, errors: &ImuErrors) -> StateRow {
    let mut row = [0.0; STATE_DIM];
    let dv = nav.velocity - truth.velocity;
    let phi = so3_log(&(nav.attitude * truth.attitude.transpose()));
    let ba = bias.accel - errors.accel_bias;
    let bg = bias.gyro - errors.gyro_bias;
    for i in 0..3 {
        row[DV + i] = dv[i];
        row[PHI + i] = phi[i];
        row[BA + i] = ba[i];
        row[BG + i] = bg[i];
    }
    row
}

/// Initial estimate with velocity and attitude errors drawn from `p0`.
pub fn perturb_initial<R: RngCore>(nav: &NavState, p0: &Covariance, rng: &mut R) -> NavState {
    let s = p0.sigmas();
    let n1 = normal3(rng);
    let n2 = normal3(rng);
    let dv = nalgebra::Vector3::new(n1.x * s[DV], n1.y * s[DV + 1], n1.z * s[DV + 2]);
    let phi = nalgebra::Vector3::new(n2.x * s[PHI], n2.y * s[PHI + 1], n2.z * s[PHI + 2]);
    NavState {
        velocity: nav.velocity + dv,
        attitude: so3_exp(&phi) * nav.attitude,
        ..*nav
    }
}

/// Run the filter over a synthesized stream. Pings must fall on truth grid
/// epochs.
pub fn run_fusion(
    truth: &TruthTrajectory,
    imu: &SyntheticImu,
    pings: &[DvlBeamSet],
    geom: &DvlGeometry,
    cfg: &FilterConfig,
    init: NavState,
) -> Result<FusionOutput> {
    if imu.samples.len() + 1 != truth.len() {
        return Err(Error::DimensionMismatch(imu.samples.len() + 1, truth.len()));
    }
    let dt = truth.dt();
    let mut ping_idx = Vec::with_capacity(pings.len());
    for p in pings {
        ping_idx.push(truth.index_of(p.time)?);
    }
    if ping_idx.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::NonMonotonicTime);
    }

    let mut filter = InsDvlFilter::new(init, cfg.clone())?;
    let mut out = FusionOutput {
        times: Vec::with_capacity(pings.len() + 1),
        sigmas: Vec::with_capacity(pings.len() + 1),
        errors: Vec::with_capacity(pings.len() + 1),
        stats: FilterStats::default(),
        hygiene: CovarianceHygiene::default(),
        final_nav: init,
        final_bias: ImuBias::default(),
    };
    let record = |filter: &InsDvlFilter, k: usize, out: &mut FusionOutput| -> Result<()> {
        let err = state_error(filter.nav(), filter.bias(), &truth.epochs()[k], &imu.biases[k]);
        let angle = (err[PHI].powi(2) + err[PHI + 1].powi(2) + err[PHI + 2].powi(2)).sqrt();
        if !(angle <= DIVERGENCE_ANGLE) {
            return Err(Error::LargeAngle(angle));
        }
        out.hygiene.observe(filter.covariance());
        out.times.push(truth.epochs()[k].time);
        out.sigmas.push(filter.covariance().sigmas());
        out.errors.push(err);
        Ok(())
    };
    record(&filter, 0, &mut out)?;
    let mut next = 0;
    for (k, sample) in imu.samples.iter().enumerate() {
        filter.propagate(sample, dt)?;
        if next < pings.len() && ping_idx[next] == k + 1 {
            let v = ls_velocity(&pings[next], geom)?;
            filter.dvl_update(&v)?;
            record(&filter, k + 1, &mut out)?;
            next += 1;
        }
    }
    out.stats = *filter.stats();
    out.final_nav = *filter.nav();
    out.final_bias = *filter.bias();
    Ok(out)
}

/// Everything a Monte Carlo ensemble needs.
#[derive(Debug, Clone)]
pub struct MonteCarloSetup {
    pub truth: TruthTrajectory,
    pub budget: SensorErrorBudget,
    pub geometry: DvlGeometry,
    pub filter: FilterConfig,
    pub seed: u64,
    /// Draw initial velocity and attitude errors from P₀.
    pub perturb_initial: bool,
}

/// Seed of run `run` under master seed `master`.
pub fn run_seed(master: u64, run: usize) -> u64 {
    let mut rng = rng_for(master, u64::MAX);
    rng.set_word_pos(2 * run as u128);
    rng.next_u64()
}

/// One member of the ensemble.
pub fn run_single(setup: &MonteCarloSetup, seed: u64) -> Result<FusionOutput> {
    let ins = setup.filter.ins;
    let imu = synth_imu(&setup.truth, &setup.budget, &ins, seed)?;
    let pings = synth_dvl(
        &setup.truth,
        &setup.budget,
        &setup.geometry,
        &setup.filter.dvl_to_body,
        seed,
    )?;
    let truth0 = setup.truth.nav_state(0);
    let init = if setup.perturb_initial {
        perturb_initial(&truth0, &setup.filter.p0, &mut rng_for(seed, INIT_STREAM))
    } else {
        truth0
    };
    run_fusion(&setup.truth, &imu, &pings, &setup.geometry, &setup.filter, init)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub result: std::result::Result<FusionOutput, String>,
}

/// Per-state ensemble statistics over the runs that did not diverge.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    /// Mean over runs of the filter σ.
    pub est_sigma: Vec<StateRow>,
    /// Sample standard deviation of the error across runs.
    pub ens_sigma: Vec<StateRow>,
    pub ens_mean: Vec<StateRow>,
    pub runs_used: usize,
    /// `(run, reason)` for excluded runs.
    pub diverged: Vec<(usize, String)>,
    pub hygiene: CovarianceHygiene,
}

impl EnsembleResult {
    pub fn total_runs(&self) -> usize {
        self.runs_used + self.diverged.len()
    }

    pub fn divergence_fraction(&self) -> f64 {
        self.diverged.len() as f64 / self.total_runs() as f64
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Index of the epoch nearest `t`.
    pub fn index_at(&self, t: f64) -> usize {
        let i = self.times.partition_point(|&x| x < t);
        if i == 0 {
            return 0;
        }
        if i >= self.times.len() {
            return self.times.len() - 1;
        }
        if (self.times[i] - t).abs() < (t - self.times[i - 1]).abs() {
            i
        } else {
            i - 1
        }
    }
}

/// Reduce finished runs in run order.
pub fn aggregate(outcomes: &[RunOutcome]) -> Result<EnsembleResult> {
    let ok: Vec<&FusionOutput> = outcomes.iter().filter_map(|o| o.result.as_ref().ok()).collect();
    let diverged: Vec<(usize, String)> = outcomes
        .iter()
        .filter_map(|o| o.result.as_ref().err().map(|e| (o.run, e.clone())))
        .collect();
    if ok.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "only {} of {} runs finished; need at least 2",
            ok.len(),
            outcomes.len()
        )));
    }
    let times = ok[0].times.clone();
    if ok.iter().any(|r| r.times.len() != times.len()) {
        return Err(Error::DimensionMismatch(ok[1].times.len(), times.len()));
    }
    let n = ok.len() as f64;
    let epochs = times.len();
    let mut est_sigma = vec![[0.0; STATE_DIM]; epochs];
    let mut ens_mean = vec![[0.0; STATE_DIM]; epochs];
    let mut ens_sigma = vec![[0.0; STATE_DIM]; epochs];
    let mut hygiene = CovarianceHygiene::default();
    for r in &ok {
        hygiene.merge(&r.hygiene);
        for k in 0..epochs {
            for i in 0..STATE_DIM {
                est_sigma[k][i] += r.sigmas[k][i] / n;
                ens_mean[k][i] += r.errors[k][i] / n;
            }
        }
    }
    for r in &ok {
        for k in 0..epochs {
            for i in 0..STATE_DIM {
                let d = r.errors[k][i] - ens_mean[k][i];
                ens_sigma[k][i] += d * d / (n - 1.0);
            }
        }
    }
    for row in &mut ens_sigma {
        for x in row.iter_mut() {
            *x = x.sqrt();
        }
    }
    Ok(EnsembleResult {
        times,
        est_sigma,
        ens_sigma,
        ens_mean,
        runs_used: ok.len(),
        diverged,
        hygiene,
    })
}

/// Run `n_runs` independent members in parallel. Results do not depend on
/// thread scheduling.
pub fn run_monte_carlo(setup: &MonteCarloSetup, n_runs: usize) -> Result<(EnsembleResult, Vec<RunOutcome>)> {
    if n_runs < 2 {
        return Err(Error::InvalidParameter(format!("n_runs = {n_runs}; need at least 2")));
    }
    setup.budget.validate()?;
    setup.filter.validate()?;
    let outcomes: Vec<RunOutcome> = (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let seed = run_seed(setup.seed, run);
            RunOutcome {
                run,
                seed,
                result: run_single(setup, seed).map_err(|e| e.to_string()),
            }
        })
        .collect();
    let ensemble = aggregate(&outcomes)?;
    Ok((ensemble, outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ekf::UpdateMode;
    use crate::frames::GeoContext;
    use crate::sim::{gen_straight_with, SensorErrorBudget};

    fn setup(duration: f64, budget: SensorErrorBudget) -> MonteCarloSetup {
        let mut filter = FilterConfig::default();
        budget.tune_filter(&mut filter);
        MonteCarloSetup {
            truth: gen_straight_with(duration, 1.0, 0.01, GeoContext::default()).unwrap(),
            budget,
            geometry: DvlGeometry::default(),
            filter,
            seed: 7,
            perturb_initial: true,
        }
    }

    #[test]
    fn zero_error_run_stays_at_truth() {
        let mut s = setup(60.0, SensorErrorBudget::zero());
        s.perturb_initial = false;
        let out = run_single(&s, 1).unwrap();
        assert_eq!(out.times.len(), 61);
        for row in &out.errors {
            assert!(row.iter().all(|x| x.abs() < 1e-9), "{row:?}");
        }
        assert!(out.hygiene.is_ok());
        assert_eq!(out.stats.velocity_updates, 60);
        assert_eq!(out.stats.acceleration_updates, 20);
    }

    #[test]
    fn baseline_mode_skips_acceleration() {
        let mut s = setup(30.0, SensorErrorBudget::default());
        s.filter.mode = UpdateMode::VelocityOnly;
        let out = run_single(&s, 2).unwrap();
        assert_eq!(out.stats.acceleration_updates, 0);
        assert_eq!(out.stats.velocity_updates, 30);
    }

    #[test]
    fn run_seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..50).map(|r| run_seed(9, r)).collect();
        let b: Vec<u64> = (0..50).map(|r| run_seed(9, r)).collect();
        assert_eq!(a, b);
        let mut c = a.clone();
        c.sort_unstable();
        c.dedup();
        assert_eq!(c.len(), 50);
        assert_ne!(run_seed(9, 0), run_seed(10, 0));
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let s = setup(20.0, SensorErrorBudget::default());
        let (a, _) = run_monte_carlo(&s, 6).unwrap();
        let (b, _) = run_monte_carlo(&s, 6).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.runs_used, 6);
        assert_eq!(a.len(), 21);
        assert!(a.hygiene.is_ok());
    }

    #[test]
    fn monte_carlo_needs_two_runs() {
        let s = setup(5.0, SensorErrorBudget::default());
        assert!(run_monte_carlo(&s, 1).is_err());
    }

    #[test]
    fn diverged_runs_are_reported() {
        let outcomes = vec![
            RunOutcome {
                run: 0,
                seed: 0,
                result: Err("large angle".into()),
            },
            RunOutcome {
                run: 1,
                seed: 1,
                result: run_single(&setup(5.0, SensorErrorBudget::default()), 1).map_err(|e| e.to_string()),
            },
            RunOutcome {
                run: 2,
                seed: 2,
                result: run_single(&setup(5.0, SensorErrorBudget::default()), 2).map_err(|e| e.to_string()),
            },
        ];
        let e = aggregate(&outcomes).unwrap();
        assert_eq!(e.runs_used, 2);
        assert_eq!(e.diverged, vec![(0, "large angle".to_string())]);
        assert!((e.divergence_fraction() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn velocity_error_converges_immediately() {
        let s = setup(30.0, SensorErrorBudget::default());
        let (e, _) = run_monte_carlo(&s, 20).unwrap();
        let r_vel = s.filter.r_vel;
        for i in 0..2 {
            // one update brings δv to the DVL noise level
            assert!(e.est_sigma[1][DV + i] < 1.5 * r_vel[(i, i)].sqrt());
        }
    }
}
