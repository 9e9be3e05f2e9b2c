//! Sudden death / sudden birth interval detection.

use serde::Serialize;

use super::ConcurrenceTrace;
use crate::error::Result;

/// A maximal time interval over which the state is strictly separable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeathInterval {
    pub start: f64,
    /// Revival (birth) time; `None` if entanglement never returns within the grid.
    pub end: Option<f64>,
}

impl DeathInterval {
    pub fn duration(&self, horizon: f64) -> f64 {
        self.end.unwrap_or(horizon) - self.start
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DeathIntervals {
    pub intervals: Vec<DeathInterval>,
}

impl DeathIntervals {
    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Times at which entanglement (re)appears.
    pub fn births(&self) -> Vec<f64> {
        self.intervals.iter().filter_map(|i| i.end).collect()
    }

    /// Death times excluding an interval that begins at the grid start.
    pub fn deaths_after(&self, t_start: f64) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|i| i.start)
            .filter(|&s| s > t_start)
            .collect()
    }

    /// Total disentangled time up to `horizon`.
    pub fn total_duration(&self, horizon: f64) -> f64 {
        self.intervals.iter().map(|i| i.duration(horizon)).sum()
    }

    /// Longest single interval (open intervals measured up to `horizon`).
    pub fn longest(&self, horizon: f64) -> f64 {
        self.intervals
            .iter()
            .map(|i| i.duration(horizon))
            .fold(0.0, f64::max)
    }
}

/// Runs of consecutive dead grid points as inclusive index ranges.
fn dead_runs(margins: &[f64], zero_tol: f64) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = None;
    for (k, m) in margins.iter().enumerate() {
        let dead = *m < -zero_tol;
        match (dead, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                runs.push((s, k - 1));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        runs.push((s, margins.len() - 1));
    }
    runs
}

fn interval_from_run<F>(
    run: (usize, usize),
    times: &[f64],
    mut boundary: F,
) -> Result<DeathInterval>
where
    F: FnMut(usize, usize) -> Result<f64>,
{
    let (first, last) = run;
    let start = if first == 0 { times[0] } else { boundary(first - 1, first)? };
    let end = if last + 1 == times.len() {
        None
    } else {
        Some(boundary(last + 1, last)?)
    };
    Ok(DeathInterval { start, end })
}

/// Grid-resolution detection; endpoints are placed by linear interpolation of max(C₁, C₂).
pub fn detect_death_intervals(trace: &ConcurrenceTrace, zero_tol: f64) -> DeathIntervals {
    let margins = trace.margins();
    let times = trace.times();
    let crossing = |alive: usize, dead: usize| -> Result<f64> {
        let (ma, md) = (margins[alive] + zero_tol, margins[dead] + zero_tol);
        let frac = ma / (ma - md);
        Ok(times[alive] + frac * (times[dead] - times[alive]))
    };
    let intervals = dead_runs(&margins, zero_tol)
        .into_iter()
        .map(|run| interval_from_run(run, &times, crossing))
        .collect::<Result<Vec<_>>>()
        .expect("interpolation is infallible");
    DeathIntervals { intervals }
}

/// Detection with endpoints refined by bisection to grid-step/100, evaluating
/// max(C₁, C₂) through `margin_at` (fresh propagation from t = 0).
pub fn detect_death_intervals_refined<F>(
    trace: &ConcurrenceTrace,
    zero_tol: f64,
    mut margin_at: F,
) -> Result<DeathIntervals>
where
    F: FnMut(f64) -> Result<f64>,
{
    let margins = trace.margins();
    let times = trace.times();
    let resolution = trace.grid.step() / 100.0;
    let mut bisect = |alive: usize, dead: usize| -> Result<f64> {
        let (mut t_alive, mut t_dead) = (times[alive], times[dead]);
        while (t_dead - t_alive).abs() > resolution {
            let mid = 0.5 * (t_alive + t_dead);
            if margin_at(mid)? < -zero_tol {
                t_dead = mid;
            } else {
                t_alive = mid;
            }
        }
        Ok(0.5 * (t_alive + t_dead))
    };
    let mut intervals = Vec::new();
    for run in dead_runs(&margins, zero_tol) {
        intervals.push(interval_from_run(run, &times, &mut bisect)?);
    }
    Ok(DeathIntervals { intervals })
}
