//! Baseline vs acceleration-mode comparison tables.

use std::fmt::Write as _;

use crate::cli::table::{state_columns, Table};
use crate::ekf::{BG, PHI, STATE_NAMES};
use crate::{Error, Result};

/// States listed in the report: misalignment and both bias triads.
pub const REPORT_STATES: std::ops::Range<usize> = PHI..BG + 3;

/// Heading and vertical gyro bias: unobservable under velocity aiding.
pub const UNOBSERVABLE_STATES: [usize; 2] = [PHI + 2, BG + 2];

/// Fraction of diverged runs above which the report warns.
pub const DIVERGENCE_WARN_FRACTION: f64 = 0.1;

/// First time after which `sigma` stays at or below `level` to the end.
pub fn convergence_time(times: &[f64], sigma: &[f64], level: f64) -> Option<f64> {
    let mut first = None;
    for (i, s) in sigma.iter().enumerate().rev() {
        if *s > level {
            break;
        }
        first = Some(i);
    }
    first.map(|i| times[i])
}

/// Share of the run saved by converging at `t`, in percent.
pub fn convergence_improvement(t: f64, t_start: f64, t_end: f64) -> f64 {
    100.0 * (t_end - t) / (t_end - t_start)
}

pub fn improvement_pct(sigma_base: f64, sigma_ours: f64) -> f64 {
    100.0 * (sigma_base - sigma_ours) / sigma_base
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub sigma_accel: f64,
    pub improvement_pct: f64,
    pub convergence_time: Option<f64>,
    pub convergence_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub state: usize,
    pub sigma_base: f64,
    pub comparison: Option<Comparison>,
}

impl ReportRow {
    pub fn name(&self) -> &'static str {
        STATE_NAMES[self.state]
    }

    /// Rows left out of the averages.
    pub fn excluded(&self) -> bool {
        UNOBSERVABLE_STATES.contains(&self.state)
            || self.comparison.as_ref().is_some_and(|c| c.convergence_time.is_none())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<ReportRow>,
    pub t_start: f64,
    pub t_end: f64,
    pub average_improvement_pct: Option<f64>,
    pub average_convergence_pct: Option<f64>,
    pub warnings: Vec<String>,
}

fn final_sigmas(t: &Table) -> Result<Vec<f64>> {
    let last = t.rows.last().ok_or(Error::Config("empty sigma table".into()))?;
    let cols = state_columns("sigma");
    cols.iter()
        .map(|c| {
            t.column_index(c)
                .map(|i| last[i])
                .ok_or_else(|| Error::Config(format!("sigma table lacks column {c}")))
        })
        .collect()
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n > 0).then(|| s / n as f64)
}

impl ComparisonReport {
    /// Report from σ tables with `sigma_<state>` columns. Without `accel` the
    /// report carries baseline σ only.
    pub fn build(base: &Table, accel: Option<&Table>) -> Result<Self> {
        let base_final = final_sigmas(base)?;
        let (t_start, t_end) = match accel.unwrap_or(base).times.as_slice() {
            [a, .., b] => (*a, *b),
            _ => return Err(Error::Config("sigma table needs at least two epochs".into())),
        };
        let accel_final = accel.map(final_sigmas).transpose()?;
        let sigma_cols = state_columns("sigma");
        let mut rows = Vec::new();
        for state in REPORT_STATES {
            let comparison = match (accel, &accel_final) {
                (Some(t), Some(fin)) => {
                    let series = t.column(&sigma_cols[state]).unwrap_or_default();
                    let conv = convergence_time(&t.times, &series, base_final[state]);
                    Some(Comparison {
                        sigma_accel: fin[state],
                        improvement_pct: improvement_pct(base_final[state], fin[state]),
                        convergence_time: conv,
                        convergence_pct: conv.map(|c| convergence_improvement(c, t_start, t_end)),
                    })
                }
                _ => None,
            };
            rows.push(ReportRow {
                state,
                sigma_base: base_final[state],
                comparison,
            });
        }
        let included = || {
            rows.iter()
                .filter(|r| !r.excluded())
                .filter_map(|r| r.comparison.as_ref())
        };
        let average_improvement_pct = mean(included().map(|c| c.improvement_pct));
        let average_convergence_pct = mean(included().filter_map(|c| c.convergence_pct));
        Ok(Self {
            rows,
            t_start,
            t_end,
            average_improvement_pct,
            average_convergence_pct,
            warnings: Vec::new(),
        })
    }

    pub fn has_comparison(&self) -> bool {
        self.rows.iter().any(|r| r.comparison.is_some())
    }

    /// Add the divergence warning when more than 10% of runs diverged.
    pub fn note_divergence(&mut self, label: &str, diverged: usize, total: usize) {
        if total > 0 && diverged as f64 > DIVERGENCE_WARN_FRACTION * total as f64 {
            self.warnings.push(format!(
                "warning: {diverged} of {total} {label} runs diverged and were excluded"
            ));
        }
    }

    /// Machine-readable report; "-" marks missing entries.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let cmp = self.has_comparison();
        let mut header = vec!["state", "sigma_baseline"];
        if cmp {
            header.extend(["sigma_accel", "improvement_pct", "convergence_s", "convergence_pct"]);
        }
        out.write_record(&header)?;
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:e}"));
        for r in &self.rows {
            let mut rec = vec![r.name().to_string(), format!("{:e}", r.sigma_base)];
            if let Some(c) = &r.comparison {
                rec.extend([
                    format!("{:e}", c.sigma_accel),
                    format!("{:e}", c.improvement_pct),
                    opt(c.convergence_time),
                    opt(c.convergence_pct),
                ]);
            } else if cmp {
                rec.extend(["-".to_string(), "-".into(), "-".into(), "-".into()]);
            }
            out.write_record(&rec)?;
        }
        if cmp {
            out.write_record([
                "average".to_string(),
                "-".into(),
                "-".into(),
                opt(self.average_improvement_pct),
                "-".into(),
                opt(self.average_convergence_pct),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    /// Plain-text table.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let cmp = self.has_comparison();
        if cmp {
            let _ = writeln!(
                s,
                "{:<8} {:>12} {:>12} {:>12} {:>14} {:>14}",
                "state", "sigma_base", "sigma_accel", "improve_%", "converge_s", "converge_%"
            );
        } else {
            let _ = writeln!(s, "{:<8} {:>12}", "state", "sigma_base");
        }
        let dash = |x: Option<f64>, p: usize| x.map_or("—".to_string(), |v| format!("{v:.p$}"));
        for r in &self.rows {
            match &r.comparison {
                Some(c) => {
                    let _ = writeln!(
                        s,
                        "{:<8} {:>12.4e} {:>12.4e} {:>12.2} {:>14} {:>14}",
                        r.name(),
                        r.sigma_base,
                        c.sigma_accel,
                        c.improvement_pct,
                        dash(c.convergence_time, 1),
                        dash(c.convergence_pct, 2),
                    );
                }
                None => {
                    let _ = writeln!(s, "{:<8} {:>12.4e}", r.name(), r.sigma_base);
                }
            }
        }
        if cmp {
            let _ = writeln!(
                s,
                "{:<8} {:>12} {:>12} {:>12} {:>14} {:>14}",
                "average",
                "",
                "",
                dash(self.average_improvement_pct, 2),
                "",
                dash(self.average_convergence_pct, 2),
            );
            let excluded: Vec<_> = self.rows.iter().filter(|r| r.excluded()).map(|r| r.name()).collect();
            let _ = writeln!(
                s,
                "\nAverages exclude unobservable and non-converged rows: {}.",
                if excluded.is_empty() {
                    "none".to_string()
                } else {
                    excluded.join(", ")
                }
            );
            let _ = writeln!(
                s,
                "Convergence: first time the accel-mode sigma stays at or below the final baseline sigma, over a run of {:.1} s.",
                self.t_end - self.t_start
            );
        }
        for w in &self.warnings {
            let _ = writeln!(s, "{w}");
        }
        s
    }
}
