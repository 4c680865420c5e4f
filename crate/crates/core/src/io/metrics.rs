//! Scalar summaries of a deterministic run.

use std::fmt;

use crate::evolution::TimeSeriesRecord;

/// Population level counted as a completed return of the excitation.
pub const RETURN_LEVEL: f64 = 0.99;
/// Fraction of the run, at its end, averaged for the final-window means.
pub const FINAL_WINDOW: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    /// First time `p₁` crosses upward through [`RETURN_LEVEL`].
    pub return_time: Option<f64>,
    /// First time `p₁` crosses upward through ½.
    pub half_rise_time: Option<f64>,
    /// Total time with negativity above the threshold.
    pub entanglement_lifetime: f64,
    /// First local maximum of the negativity above the threshold.
    pub first_negativity_max_time: Option<f64>,
    pub max_negativity: f64,
    pub min_negativity: f64,
    pub final_mean_p1: f64,
    pub final_mean_r: f64,
    pub neg_threshold: f64,
}

fn upward_crossing(records: &[TimeSeriesRecord], level: f64) -> Option<f64> {
    records.windows(2).find(|w| w[0].p1 <= level && w[1].p1 > level).map(|w| w[1].t)
}

/// Summarizes `records` (time-ordered, at least two).
pub fn report_metrics(records: &[TimeSeriesRecord], neg_threshold: f64) -> Metrics {
    assert!(records.len() >= 2, "metrics need at least two records");

    let entanglement_lifetime =
        records.windows(2).filter(|w| w[0].negativity > neg_threshold).map(|w| w[1].t - w[0].t).sum();

    let first_negativity_max_time = records
        .windows(3)
        .find(|w| {
            w[1].negativity > neg_threshold && w[1].negativity >= w[0].negativity && w[1].negativity > w[2].negativity
        })
        .map(|w| w[1].t);

    let (t0, t1) = (records[0].t, records[records.len() - 1].t);
    let cut = t1 - FINAL_WINDOW * (t1 - t0);
    let tail: Vec<&TimeSeriesRecord> = records.iter().filter(|r| r.t >= cut).collect();
    let n = tail.len() as f64;

    Metrics {
        return_time: upward_crossing(records, RETURN_LEVEL),
        half_rise_time: upward_crossing(records, 0.5),
        entanglement_lifetime,
        first_negativity_max_time,
        max_negativity: records.iter().map(|r| r.negativity).fold(f64::NEG_INFINITY, f64::max),
        min_negativity: records.iter().map(|r| r.negativity).fold(f64::INFINITY, f64::min),
        final_mean_p1: tail.iter().map(|r| r.p1).sum::<f64>() / n,
        final_mean_r: tail.iter().map(|r| r.r).sum::<f64>() / n,
        neg_threshold,
    }
}

/// Flat `key = value` block.
impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |x| format!("{x}"));
        writeln!(f, "return_time_p1_gt_{RETURN_LEVEL} = {}", opt(self.return_time))?;
        writeln!(f, "half_rise_time_p1 = {}", opt(self.half_rise_time))?;
        writeln!(f, "neg_threshold = {}", self.neg_threshold)?;
        writeln!(f, "entanglement_lifetime = {}", self.entanglement_lifetime)?;
        writeln!(f, "first_negativity_max_time = {}", opt(self.first_negativity_max_time))?;
        writeln!(f, "max_negativity = {}", self.max_negativity)?;
        writeln!(f, "min_negativity = {}", self.min_negativity)?;
        writeln!(f, "final_mean_p1 = {}", self.final_mean_p1)?;
        write!(f, "final_mean_r = {}", self.final_mean_r)
    }
}
