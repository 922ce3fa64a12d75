//! RMSE of the DVL-derived acceleration as a function of window length.

use std::ops::RangeInclusive;

use crate::dvl::{extract_acceleration, ls_velocity, DvlBeamSet, DvlGeometry, VelocityWindow};
use crate::frames::{Mat3, Vec3};
use crate::{Error, Result};

use super::TruthTrajectory;

pub const SWEEP_MIN: usize = 2;
pub const SWEEP_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsePoint {
    pub n: usize,
    pub rmse: f64,
    pub count: usize,
}

/// LS velocities of a ping stream.
pub fn dvl_velocities(pings: &[DvlBeamSet], geom: &DvlGeometry) -> Result<Vec<(f64, Vec3)>> {
    pings.iter().map(|p| Ok((p.time, ls_velocity(p, geom)?))).collect()
}

/// For each window length `n`, the RMSE of the slope of the last `n` DVL
/// velocities against the true DVL-frame acceleration at the newest sample.
/// Every `n` is scored on the same set of epochs.
pub fn acc_rmse_sweep(
    truth: &TruthTrajectory,
    velocities: &[(f64, Vec3)],
    dvl_to_body: &Mat3,
    n_range: RangeInclusive<usize>,
) -> Result<Vec<RmsePoint>> {
    let (lo, hi) = (*n_range.start(), *n_range.end());
    if lo < SWEEP_MIN || hi > SWEEP_MAX || lo > hi {
        return Err(Error::InvalidParameter(format!(
            "window range {lo}..={hi} must lie within {SWEEP_MIN}..={SWEEP_MAX}"
        )));
    }
    if velocities.len() < hi {
        return Err(Error::WindowTooShort {
            len: velocities.len(),
            need: hi,
        });
    }
    let mut truth_acc = Vec::with_capacity(velocities.len());
    for (t, _) in velocities {
        let e = &truth.epochs()[truth.index_of(*t)?];
        truth_acc.push(dvl_to_body.transpose() * e.accel_body);
    }
    let mut out = Vec::with_capacity(hi - lo + 1);
    for n in n_range {
        let mut sum = 0.0;
        let mut count = 0;
        for end in (hi - 1)..velocities.len() {
            let window = VelocityWindow::new(velocities[end + 1 - n..=end].to_vec())?;
            let a = extract_acceleration(&window)?;
            sum += (a - truth_acc[end]).norm_squared();
            count += 1;
        }
        out.push(RmsePoint {
            n,
            rmse: (sum / count as f64).sqrt(),
            count,
        });
    }
    Ok(out)
}

/// Window length with the smallest RMSE; ties go to the shorter window.
pub fn argmin(curve: &[RmsePoint]) -> Option<usize> {
    curve
        .iter()
        .fold(None::<&RmsePoint>, |best, p| match best {
            Some(b) if b.rmse <= p.rmse => Some(b),
            _ => Some(p),
        })
        .map(|p| p.n)
}
