//! Monte Carlo summaries standing in for convergence in probability / ucp.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid_paths::fmt17;

/// Slack factor allowed between consecutive medians along an epsilon ladder.
pub const MONOTONE_SLACK: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// No reference was available; the numbers are reported without a judgement.
    Informational,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Informational => "informational",
        }
    }

    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }
}

/// How a replica's estimator path is compared with its target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorStatistic {
    /// `sup_i |est(t_i) - target(t_i)|` over all grid nodes.
    SupOverGrid,
    /// `|est(T) - target(T)|`.
    Terminal,
}

impl ErrorStatistic {
    pub fn eval(&self, est: &[f64], target: &[f64]) -> f64 {
        match self {
            ErrorStatistic::SupOverGrid => est.iter().zip(target).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            ErrorStatistic::Terminal => (est[est.len() - 1] - target[target.len() - 1]).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub eps: f64,
    pub median: f64,
    pub q90: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Rows in order of decreasing epsilon.
    pub rows: Vec<ReportRow>,
    pub statistic: ErrorStatistic,
    pub tolerance: f64,
    pub verdict: Verdict,
}

impl ConvergenceReport {
    /// Builds a report from per-epsilon samples of the error statistic and applies the
    /// verdict rule: the median at the smallest epsilon is below `tolerance` and every
    /// median is at most [`MONOTONE_SLACK`] times the previous one.
    pub fn from_samples(eps: &[f64], samples: Vec<Vec<f64>>, statistic: ErrorStatistic, tolerance: f64) -> Self {
        let rows: Vec<ReportRow> = eps
            .iter()
            .zip(samples)
            .map(|(&e, mut s)| ReportRow { eps: e, median: quantile(&mut s, 0.5), q90: quantile(&mut s, 0.9) })
            .collect();
        let verdict = judge(&rows, tolerance);
        Self { rows, statistic, tolerance, verdict }
    }

    pub fn smallest_eps_median(&self) -> f64 {
        self.rows.last().map(|r| r.median).unwrap_or(f64::NAN)
    }

    pub fn medians(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.median).collect()
    }

    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median <= MONOTONE_SLACK * w[0].median)
    }

    pub fn mark_informational(mut self) -> Self {
        self.verdict = Verdict::Informational;
        self
    }

    /// CSV with header `eps,median,q90,verdict`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "eps,median,q90,verdict")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", fmt17(r.eps), fmt17(r.median), fmt17(r.q90), self.verdict.as_str())?;
        }
        Ok(())
    }

    /// Same as [`write_csv`](Self::write_csv) with an extra `reference` column.
    pub fn write_csv_with_reference<W: Write>(&self, mut out: W, reference: &str) -> Result<()> {
        writeln!(out, "eps,median,q90,verdict,reference")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt17(r.eps),
                fmt17(r.median),
                fmt17(r.q90),
                self.verdict.as_str(),
                reference
            )?;
        }
        Ok(())
    }
}

fn judge(rows: &[ReportRow], tolerance: f64) -> Verdict {
    let Some(last) = rows.last() else {
        return Verdict::Fail;
    };
    let monotone = rows.windows(2).all(|w| w[1].median <= MONOTONE_SLACK * w[0].median);
    if last.median < tolerance && monotone {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Linear-interpolation quantile of `xs` (sorts in place). NaN for empty input.
pub fn quantile(xs: &mut [f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (xs.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    xs[lo] * (1.0 - w) + xs[hi] * w
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(&mut xs.to_vec(), 0.5)
}
