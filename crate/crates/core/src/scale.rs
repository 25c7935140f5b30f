//! Per-scale curve comparison, the two scale-selection heuristics and the
//! area under the p-value curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::AccuracyCurve;
use crate::stats::{t_test, TTestKind};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveComparison {
    pub fractions: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub dof: Vec<f64>,
    pub p_values: Vec<f64>,
    /// Reference mean minus candidate mean.
    pub mean_diff: Vec<f64>,
    /// Zero variance on both sides with unequal means (`p = 0`, `t = ±inf`).
    pub degenerate: Vec<bool>,
    pub test: TTestKind,
}

impl CurveComparison {
    /// Builds a comparison directly from per-point values; `t_stats` and
    /// `dof` are left as NaN.
    pub fn from_parts(
        fractions: Vec<f64>,
        p_values: Vec<f64>,
        mean_diff: Vec<f64>,
    ) -> Result<Self> {
        let n = fractions.len();
        if n == 0 || p_values.len() != n || mean_diff.len() != n {
            return Err(Error::Grid(
                "comparison vectors must share a non-zero length".into(),
            ));
        }
        if p_values.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Stat("p-values must lie in [0, 1]".into()));
        }
        Ok(Self {
            fractions,
            t_stats: vec![f64::NAN; n],
            dof: vec![f64::NAN; n],
            p_values,
            mean_diff,
            degenerate: vec![false; n],
            test: TTestKind::Welch,
        })
    }
}

/// Welch two-sided test of reference vs candidate replicates at each grid point.
pub fn compare_curves(
    reference: &AccuracyCurve,
    candidate: &AccuracyCurve,
) -> Result<CurveComparison> {
    compare_curves_with(reference, candidate, TTestKind::Welch)
}

pub fn compare_curves_with(
    reference: &AccuracyCurve,
    candidate: &AccuracyCurve,
    test: TTestKind,
) -> Result<CurveComparison> {
    if reference.fractions() != candidate.fractions() {
        return Err(Error::Grid(format!(
            "reference has {} grid points, candidate {} (or fractions differ)",
            reference.fractions().len(),
            candidate.fractions().len()
        )));
    }
    let n = reference.fractions().len();
    let mut cmp = CurveComparison {
        fractions: reference.fractions().to_vec(),
        t_stats: Vec::with_capacity(n),
        dof: Vec::with_capacity(n),
        p_values: Vec::with_capacity(n),
        mean_diff: Vec::with_capacity(n),
        degenerate: Vec::with_capacity(n),
        test,
    };
    for i in 0..n {
        let r = t_test(test, &reference.row(i), &candidate.row(i))?;
        cmp.t_stats.push(r.t_stat);
        cmp.dof.push(r.dof);
        cmp.p_values.push(r.p_value);
        cmp.degenerate.push(r.degenerate);
        cmp.mean_diff.push(reference.mean[i] - candidate.mean[i]);
    }
    Ok(cmp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    /// Grid point with the smallest inline minus transfer gap.
    TransferMinDiff,
    /// First grid point where inline and selection transfer are not
    /// significantly different.
    SelectionFirstNonSig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaleDecision {
    pub method: ScaleMethod,
    pub index: usize,
    pub selected_fraction: f64,
    pub selected_percent: f64,
    /// No grid point satisfied the rule; the full grid end was returned.
    pub exhausted: bool,
}

impl ScaleDecision {
    fn at(method: ScaleMethod, cmp: &CurveComparison, index: usize, exhausted: bool) -> Self {
        let f = cmp.fractions[index];
        Self {
            method,
            index,
            selected_fraction: f,
            selected_percent: 100.0 * f,
            exhausted,
        }
    }
}

/// Argmin of `mean_diff`; ties go to the smallest fraction.
pub fn select_scale_transfer(cmp: &CurveComparison) -> ScaleDecision {
    let mut best = 0;
    for (i, &d) in cmp.mean_diff.iter().enumerate() {
        if d < cmp.mean_diff[best] {
            best = i;
        }
    }
    ScaleDecision::at(ScaleMethod::TransferMinDiff, cmp, best, false)
}

/// Smallest fraction with `p >= alpha`; falls back to the last grid point
/// with `exhausted = true`.
pub fn select_scale_selection(cmp: &CurveComparison, alpha: f64) -> Result<ScaleDecision> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Config(format!("alpha {alpha} outside (0, 1]")));
    }
    let method = ScaleMethod::SelectionFirstNonSig;
    Ok(match cmp.p_values.iter().position(|&p| p >= alpha) {
        Some(i) => ScaleDecision::at(method, cmp, i, false),
        None => ScaleDecision::at(method, cmp, cmp.fractions.len() - 1, true),
    })
}

/// Trapezoidal area under the p-values with the x-axis in percent of voxels.
pub fn p_curve_area(cmp: &CurveComparison) -> f64 {
    cmp.fractions
        .windows(2)
        .zip(cmp.p_values.windows(2))
        .map(|(x, p)| 100.0 * (x[1] - x[0]) * 0.5 * (p[0] + p[1]))
        .sum()
}
