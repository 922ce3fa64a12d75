//! Experiment runner: configuration, pipelines and CSV/report output.

mod config;
mod report;
mod table;

pub use config::*;
pub use report::*;
pub use table::*;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::dvl::ls_velocity;
use crate::ekf::UpdateMode;
use crate::ekf::STATE_NAMES;
use crate::frames::{euler_from_dcm, gravity_ned, Mat3};
use crate::ins::InsConfig;
use crate::observability::{
    acceleration_rows, analytic_u, gramian_nullspace, subspace_angle, velocity_acceleration_rows, velocity_rows,
    GramianOptions, NullSpace, Segment, SegmentSample,
};
use crate::sim::{
    acc_rmse_sweep, argmin, dvl_velocities, run_monte_carlo, run_seed, run_single, synth_dvl, synth_imu,
    EnsembleResult, FusionOutput, RmsePoint, SensorErrorBudget, TruthTrajectory,
};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "insdvl", version, about = "INS/DVL fusion simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment configuration (TOML); built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub mode: Option<ModeSelect>,
    /// Monte Carlo run count.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Write truth, IMU and DVL streams.
    Simulate,
    /// Run one filter realization per mode.
    Fuse,
    /// Monte Carlo ensemble per mode with the comparison report.
    Montecarlo,
    /// Gramian null spaces against the analytic unobservable subspace.
    Observability,
    /// DVL acceleration RMSE against window length.
    RmseSweep,
    /// Baseline vs acceleration-mode σ comparison.
    Compare,
}

impl Cli {
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        if let Some(m) = self.mode {
            cfg.mode = m;
        }
        if let Some(n) = self.runs {
            cfg.runs = n;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Entry point of the `insdvl` binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.experiment().and_then(|cfg| run_command(cli.command, &cfg)) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

pub fn run_command(cmd: Command, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut out = Output::new(&cfg.out_dir)?;
    match cmd {
        Command::Simulate => simulate(cfg, &mut out)?,
        Command::Fuse => fuse(cfg, &mut out)?,
        Command::Montecarlo => {
            run_experiment_into(cfg, &mut out)?;
        }
        Command::Observability => observability(cfg, &mut out)?,
        Command::RmseSweep => {
            rmse_sweep(cfg, &mut out)?;
        }
        Command::Compare => {
            compare(cfg, &mut out)?;
        }
    }
    Ok(out.files)
}

/// Output directory that records every file written.
struct Output {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent)?;
        }
        self.files.push(p.clone());
        Ok(p)
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<PathBuf> {
        let p = self.path(name)?;
        t.write(&p)?;
        Ok(p)
    }

    fn text(&mut self, name: &str, s: &str) -> Result<PathBuf> {
        let p = self.path(name)?;
        fs::write(&p, s)?;
        Ok(p)
    }
}

pub fn truth_table(truth: &TruthTrajectory) -> Result<Table> {
    let cols = [
        "pos_n", "pos_e", "pos_d", "vel_n", "vel_e", "vel_d", "roll", "pitch", "yaw", "acc_n", "acc_e", "acc_d",
        "acc_bx", "acc_by", "acc_bz", "rate_x", "rate_y", "rate_z",
    ];
    let mut t = Table::new(cols.iter().map(|c| c.to_string()).collect());
    for e in truth.epochs() {
        let (r, p, y) = euler_from_dcm(&e.attitude);
        let mut row: Vec<f64> = e.position.iter().chain(e.velocity.iter()).copied().collect();
        row.extend([r, p, y]);
        row.extend(e.accel_nav.iter().chain(e.accel_body.iter()).chain(e.body_rate.iter()));
        t.push(e.time, row)?;
    }
    Ok(t)
}

pub fn error_table(out: &FusionOutput) -> Result<Table> {
    let mut t = Table::new(state_columns(""));
    for (time, e) in out.times.iter().zip(&out.errors) {
        t.push(*time, e.to_vec())?;
    }
    Ok(t)
}

pub fn sigma_table(times: &[f64], sigmas: &[[f64; 12]]) -> Result<Table> {
    let mut t = Table::new(state_columns("sigma"));
    for (time, s) in times.iter().zip(sigmas) {
        t.push(*time, s.to_vec())?;
    }
    Ok(t)
}

pub fn ensemble_table(e: &EnsembleResult) -> Result<Table> {
    let mut cols = state_columns("est_sigma");
    cols.extend(state_columns("ens_sigma"));
    cols.extend(state_columns("ens_mean"));
    let mut t = Table::new(cols);
    for k in 0..e.len() {
        let row = e.est_sigma[k]
            .iter()
            .chain(&e.ens_sigma[k])
            .chain(&e.ens_mean[k])
            .copied()
            .collect();
        t.push(e.times[k], row)?;
    }
    Ok(t)
}

/// RMSE curve as `n,rmse,count` rows.
pub fn write_rmse_csv<W: std::io::Write>(curve: &[RmsePoint], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "rmse", "count"])?;
    for p in curve {
        if !p.rmse.is_finite() {
            return Err(Error::NonFinite("rmse"));
        }
        out.write_record([p.n.to_string(), format_value(p.rmse), p.count.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rmse_csv<R: std::io::Read>(r: R) -> Result<Vec<RmsePoint>> {
    let mut rdr = csv::Reader::from_reader(r);
    let bad = |s: &str| Error::Config(format!("bad rmse entry {s:?}"));
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| bad(""));
            Ok(RmsePoint {
                n: field(0)?.parse().map_err(|_| bad(&rec[0]))?,
                rmse: field(1)?.parse().map_err(|_| bad(&rec[1]))?,
                count: field(2)?.parse().map_err(|_| bad(&rec[2]))?,
            })
        })
        .collect()
}

fn simulate(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let truth = cfg.truth()?;
    out.table("truth.csv", &truth_table(&truth)?)?;
    let seed = run_seed(cfg.seed, 0);
    let ins = cfg.ins();
    let imu = synth_imu(&truth, &cfg.sensors, &ins, seed)?;
    let mut t = Table::new(
        [
            "f_x", "f_y", "f_z", "w_x", "w_y", "w_z", "ba_x", "ba_y", "ba_z", "bg_x", "bg_y", "bg_z",
        ]
        .iter()
        .map(|c| c.to_string())
        .collect(),
    );
    for (k, s) in imu.samples.iter().enumerate() {
        let b = &imu.biases[k];
        let row = s
            .specific_force
            .iter()
            .chain(s.angular_rate.iter())
            .chain(b.accel_bias.iter())
            .chain(b.gyro_bias.iter())
            .copied()
            .collect();
        t.push(truth.epochs()[k].time, row)?;
    }
    out.table("imu.csv", &t)?;
    let geom = cfg.dvl.geometry()?;
    let pings = synth_dvl(&truth, &cfg.sensors, &geom, &cfg.dvl.dvl_to_body(), seed)?;
    let mut t = Table::new(
        ["beam_1", "beam_2", "beam_3", "beam_4", "v_x", "v_y", "v_z"]
            .iter()
            .map(|c| c.to_string())
            .collect(),
    );
    for p in &pings {
        let v = ls_velocity(p, &geom)?;
        t.push(p.time, p.beams.iter().chain(v.iter()).copied().collect())?;
    }
    out.table("dvl.csv", &t)?;
    Ok(())
}

fn fuse(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let truth = cfg.truth()?;
    let seed = run_seed(cfg.seed, 0);
    let mut summary = String::new();
    for mode in cfg.mode.modes() {
        let setup = cfg.monte_carlo_setup(&truth, mode)?;
        let res = run_single(&setup, seed)?;
        let tag = mode_tag(mode);
        out.table(&format!("errors_{tag}.csv"), &error_table(&res)?)?;
        out.table(&format!("sigma_{tag}.csv"), &sigma_table(&res.times, &res.sigmas)?)?;
        summary.push_str(&format!(
            "{tag}: {} velocity updates, {} acceleration updates, {} rejected\n",
            res.stats.velocity_updates,
            res.stats.acceleration_updates,
            res.stats.rejected_velocity + res.stats.rejected_acceleration
        ));
    }
    out.text("fuse_summary.txt", &summary)?;
    Ok(())
}

/// Artifacts of a Monte Carlo experiment.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub ensembles: Vec<(UpdateMode, EnsembleResult)>,
    pub report: ComparisonReport,
}

/// Monte Carlo experiment: truth CSV, per-run error CSVs, ensemble CSVs and
/// the comparison report built from the ensemble-mean filter σ.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let mut out = Output::new(&cfg.out_dir)?;
    let (ensembles, report) = run_experiment_into(cfg, &mut out)?;
    Ok(Artifacts {
        files: out.files,
        ensembles,
        report,
    })
}

fn run_experiment_into(
    cfg: &ExperimentConfig,
    out: &mut Output,
) -> Result<(Vec<(UpdateMode, EnsembleResult)>, ComparisonReport)> {
    let truth = cfg.truth()?;
    out.table("truth.csv", &truth_table(&truth)?)?;
    let mut ensembles = Vec::new();
    let mut summary = String::new();
    for mode in cfg.mode.modes() {
        let tag = mode_tag(mode);
        let setup = cfg.monte_carlo_setup(&truth, mode)?;
        let (ens, outcomes) = run_monte_carlo(&setup, cfg.runs)?;
        if cfg.write_runs {
            for o in &outcomes {
                if let Ok(r) = &o.result {
                    out.table(&format!("runs/{tag}/run_{:04}.csv", o.run), &error_table(r)?)?;
                }
            }
        }
        out.table(&format!("ensemble_{tag}.csv"), &ensemble_table(&ens)?)?;
        out.table(&format!("sigma_{tag}.csv"), &sigma_table(&ens.times, &ens.est_sigma)?)?;
        summary.push_str(&format!(
            "{tag}: {} of {} runs used; covariance hygiene {}\n",
            ens.runs_used,
            ens.total_runs(),
            if ens.hygiene.is_ok() { "ok" } else { "VIOLATED" }
        ));
        for (run, why) in &ens.diverged {
            summary.push_str(&format!("{tag}: run {run} excluded: {why}\n"));
        }
        ensembles.push((mode, ens));
    }
    out.text("montecarlo_summary.txt", &summary)?;
    let mut report = report_from_outputs(cfg, out)?;
    for (mode, e) in &ensembles {
        report.note_divergence(mode_tag(*mode), e.diverged.len(), e.total_runs());
    }
    write_report(&report, out)?;
    Ok((ensembles, report))
}

/// Rebuild the report from the σ CSVs just written.
fn report_from_outputs(cfg: &ExperimentConfig, out: &Output) -> Result<ComparisonReport> {
    let read = |mode| Table::read(&out.dir.join(format!("sigma_{}.csv", mode_tag(mode))));
    match cfg.mode {
        ModeSelect::Both => ComparisonReport::build(
            &read(UpdateMode::VelocityOnly)?,
            Some(&read(UpdateMode::VelocityAcceleration)?),
        ),
        ModeSelect::Baseline => ComparisonReport::build(&read(UpdateMode::VelocityOnly)?, None),
        ModeSelect::Accel => ComparisonReport::build(&read(UpdateMode::VelocityAcceleration)?, None),
    }
}

fn write_report(report: &ComparisonReport, out: &mut Output) -> Result<()> {
    let p = out.path("report.csv")?;
    report.write_csv(fs::File::create(p)?)?;
    out.text("report.txt", &report.render())?;
    Ok(())
}

/// σ comparison. The covariance source runs each mode once on error-free
/// sensors from the true initial state, so both filters linearize about truth.
pub fn compare_report(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ComparisonReport> {
    let mut out = Output::new(out_dir)?;
    compare(cfg, &mut out)
}

fn compare(cfg: &ExperimentConfig, out: &mut Output) -> Result<ComparisonReport> {
    match cfg.compare.source {
        SigmaSource::Ensemble => Ok(run_experiment_into(cfg, out)?.1),
        SigmaSource::Covariance => {
            for (mode, res) in covariance_runs(cfg)? {
                out.table(
                    &format!("sigma_{}.csv", mode_tag(mode)),
                    &sigma_table(&res.times, &res.sigmas)?,
                )?;
            }
            let report = report_from_outputs(cfg, out)?;
            write_report(&report, out)?;
            Ok(report)
        }
    }
}

/// One run per selected mode on error-free sensors from the true initial state.
pub fn covariance_runs(cfg: &ExperimentConfig) -> Result<Vec<(UpdateMode, FusionOutput)>> {
    let truth = cfg.truth()?;
    cfg.mode
        .modes()
        .into_iter()
        .map(|mode| {
            let mut setup = cfg.monte_carlo_setup(&truth, mode)?;
            setup.budget = SensorErrorBudget {
                imu_rate: cfg.sensors.imu_rate,
                dvl_rate: cfg.sensors.dvl_rate,
                ..SensorErrorBudget::zero()
            };
            setup.perturb_initial = false;
            Ok((mode, run_single(&setup, cfg.seed)?))
        })
        .collect()
}

/// Null space of one measurement set together with its angle to the analytic subspace.
#[derive(Debug, Clone)]
pub struct NullSpaceResult {
    pub region: String,
    pub set: &'static str,
    pub null: NullSpace,
    /// Principal angle to the analytic subspace (rad).
    pub angle: f64,
}

/// Null spaces of velocity, acceleration and stacked measurements on a static
/// segment and, when configured, on a window of the trajectory.
pub fn observability_results(cfg: &ExperimentConfig) -> Result<Vec<NullSpaceResult>> {
    let o = &cfg.observability;
    let geo = cfg.geo()?;
    let opts = GramianOptions {
        tol: o.tol,
        epoch_interval: o.epoch_interval,
        ..GramianOptions::default()
    };
    let flat = InsConfig { earth_rotation: false };
    let mut segments = vec![(
        "static".to_string(),
        Segment::stationary(o.static_duration, cfg.sensors.imu_dt(), Mat3::identity(), geo, flat)?,
    )];
    if let Some([a, b]) = o.trajectory_window {
        let truth = cfg.truth()?;
        segments.push((format!("trajectory_{a}_{b}"), truth.segment(a, b, cfg.ins())?));
    }
    let u = analytic_u(&gravity_ned(&geo));
    type Builder = fn(&SegmentSample, &crate::GeoContext) -> nalgebra::DMatrix<f64>;
    let sets: [(&'static str, Builder); 3] = [
        ("velocity", velocity_rows),
        ("acceleration", acceleration_rows),
        ("velocity_acceleration", velocity_acceleration_rows),
    ];
    let mut res = Vec::new();
    for (region, seg) in &segments {
        for (set, b) in sets {
            let null = gramian_nullspace(seg, b, &opts)?;
            let angle = if null.basis.dim() == 0 {
                std::f64::consts::FRAC_PI_2
            } else {
                subspace_angle(&null.basis, &u)?
            };
            res.push(NullSpaceResult {
                region: region.clone(),
                set,
                null,
                angle,
            });
        }
    }
    Ok(res)
}

fn observability(cfg: &ExperimentConfig, out: &mut Output) -> Result<()> {
    let results = observability_results(cfg)?;
    let u_dim = analytic_u(&gravity_ned(&cfg.geo()?)).dim();
    let p = out.path("observability_angles.csv")?;
    let mut w = csv::Writer::from_path(&p)?;
    w.write_record(["region", "set", "null_dim", "analytic_dim", "angle_rad", "epochs"])?;
    for r in &results {
        w.write_record([
            r.region.clone(),
            r.set.to_string(),
            r.null.basis.dim().to_string(),
            u_dim.to_string(),
            format!("{:e}", r.angle),
            r.null.epochs.to_string(),
        ])?;
        let p = out.path(&format!("nullspace_{}_{}.csv", r.region, r.set))?;
        let mut b = csv::Writer::from_path(&p)?;
        let dim = r.null.basis.dim();
        let header: Vec<String> = std::iter::once("state".to_string())
            .chain((1..=dim).map(|i| format!("u{i}")))
            .collect();
        b.write_record(&header)?;
        for (i, name) in STATE_NAMES.iter().enumerate() {
            let row = std::iter::once(name.to_string())
                .chain((0..dim).map(|j| format!("{:e}", r.null.basis.matrix()[(i, j)])));
            b.write_record(row)?;
        }
        b.flush()?;
    }
    w.flush()?;
    Ok(())
}

/// Summary of an RMSE sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseSummary {
    pub curve: Vec<RmsePoint>,
    pub argmin: usize,
    /// Length of the strictly decreasing prefix, in points.
    pub decreasing_prefix: usize,
    /// The curve rises again after its minimum.
    pub rises_after_min: bool,
}

impl RmseSummary {
    pub fn from_curve(curve: Vec<RmsePoint>) -> Result<Self> {
        let argmin = argmin(&curve).ok_or(Error::Config("empty RMSE curve".into()))?;
        let decreasing_prefix = 1 + curve.windows(2).take_while(|w| w[1].rmse < w[0].rmse).count();
        let i = curve.iter().position(|p| p.n == argmin).unwrap_or(0);
        let rises_after_min = curve[i..].iter().any(|p| p.rmse > curve[i].rmse);
        Ok(Self {
            curve,
            argmin,
            decreasing_prefix,
            rises_after_min,
        })
    }

    pub fn render(&self) -> String {
        format!(
            "argmin n = {}\nrmse at argmin = {:e} m/s^2\ndecreasing prefix = {} points\nrises after minimum = {}\n",
            self.argmin,
            self.curve
                .iter()
                .find(|p| p.n == self.argmin)
                .map_or(f64::NAN, |p| p.rmse),
            self.decreasing_prefix,
            self.rises_after_min
        )
    }
}

/// RMSE of the DVL acceleration against the window length, pooled over the
/// configured number of noise realizations.
pub fn rmse_curve(cfg: &ExperimentConfig, truth: &TruthTrajectory) -> Result<Vec<RmsePoint>> {
    let geom = cfg.dvl.geometry()?;
    let r = cfg.dvl.dvl_to_body();
    let range = cfg.sweep.n_min..=cfg.sweep.n_max;
    let mut pooled: Vec<RmsePoint> = Vec::new();
    for run in 0..cfg.sweep.realizations {
        let pings = synth_dvl(truth, &cfg.sensors, &geom, &r, run_seed(cfg.seed, run))?;
        let v = dvl_velocities(&pings, &geom)?;
        let curve = acc_rmse_sweep(truth, &v, &r, range.clone())?;
        if pooled.is_empty() {
            pooled = curve
                .iter()
                .map(|p| RmsePoint {
                    n: p.n,
                    rmse: 0.0,
                    count: 0,
                })
                .collect();
        }
        for (acc, p) in pooled.iter_mut().zip(&curve) {
            acc.rmse += p.rmse * p.rmse * p.count as f64;
            acc.count += p.count;
        }
    }
    for p in &mut pooled {
        p.rmse = (p.rmse / p.count.max(1) as f64).sqrt();
    }
    Ok(pooled)
}

fn rmse_sweep(cfg: &ExperimentConfig, out: &mut Output) -> Result<RmseSummary> {
    let truth = cfg.truth()?;
    let summary = RmseSummary::from_curve(rmse_curve(cfg, &truth)?)?;
    let p = out.path("rmse.csv")?;
    write_rmse_csv(&summary.curve, fs::File::create(p)?)?;
    out.text("rmse_summary.txt", &summary.render())?;
    Ok(summary)
}
