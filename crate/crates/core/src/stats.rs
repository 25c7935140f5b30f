//! Per-feature one-way ANOVA, two-sample t-tests and the Student-t tail.

use ndarray::ArrayView2;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};
use crate::par;

/// Columns handled per parallel work item in [`anova_f`].
const ANOVA_CHUNK: usize = 512;

/// Per-feature F statistics. Entries are finite and non-negative, or `+inf`
/// for features that are constant within each class but differ across them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureScores(Vec<f64>);

impl FeatureScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(bad) = scores.iter().find(|s| s.is_nan() || **s < 0.0) {
            return Err(Error::Stat(format!("invalid feature score {bad}")));
        }
        Ok(Self(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Two-class one-way ANOVA F statistic of every column.
///
/// `F = [sum_g n_g (m_g - m)^2 / (G - 1)] / [sum_g sum_{i in g} (x_i - m_g)^2 / (n - G)]`
/// with `G = 2`. A constant column scores 0; a column that is constant inside
/// each class but separates the classes scores `+inf`.
pub fn anova_f(samples: ArrayView2<'_, f64>, labels: &[i8]) -> Result<FeatureScores> {
    let (n, k) = samples.dim();
    if labels.len() != n {
        return Err(Error::Dim(format!(
            "{} labels for {n} samples",
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l > 0).count();
    let n_neg = n - n_pos;
    if n_pos < 2 || n_neg < 2 {
        return Err(Error::Stat(format!(
            "ANOVA needs at least 2 samples per class, got ({n_neg}, {n_pos})"
        )));
    }
    let groups = 2.0;
    let mut scores = vec![0.0; k];
    par::for_each_chunk_mut(&mut scores, ANOVA_CHUNK, |chunk, out| {
        let j0 = chunk * ANOVA_CHUNK;
        let width = out.len();
        let mut sum = [vec![0.0; width], vec![0.0; width]];
        let mut lo = [vec![f64::INFINITY; width], vec![f64::INFINITY; width]];
        let mut hi = [
            vec![f64::NEG_INFINITY; width],
            vec![f64::NEG_INFINITY; width],
        ];
        for (row, &label) in samples.rows().into_iter().zip(labels) {
            let g = usize::from(label > 0);
            let vals = row.slice(ndarray::s![j0..j0 + width]);
            for (j, &v) in vals.iter().enumerate() {
                sum[g][j] += v;
                lo[g][j] = lo[g][j].min(v);
                hi[g][j] = hi[g][j].max(v);
            }
        }
        let counts = [n_neg as f64, n_pos as f64];
        let means: [Vec<f64>; 2] = [0, 1].map(|g| sum[g].iter().map(|s| s / counts[g]).collect());
        let mut within = vec![0.0; width];
        for (row, &label) in samples.rows().into_iter().zip(labels) {
            let g = usize::from(label > 0);
            let vals = row.slice(ndarray::s![j0..j0 + width]);
            for (j, &v) in vals.iter().enumerate() {
                let d = v - means[g][j];
                within[j] += d * d;
            }
        }
        for j in 0..width {
            let flat = [0, 1].map(|g| lo[g][j] == hi[g][j]);
            out[j] = if flat[0] && flat[1] {
                if lo[0][j] == lo[1][j] {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                let grand = (counts[0] * means[0][j] + counts[1] * means[1][j]) / n as f64;
                let between = (0..2)
                    .map(|g| counts[g] * (means[g][j] - grand).powi(2))
                    .sum::<f64>()
                    / (groups - 1.0);
                between / (within[j] / (n as f64 - groups))
            };
        }
    });
    FeatureScores::new(scores)
}

/// Which two-sample t-test compares replicate accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestKind {
    /// Unequal variances, Welch–Satterthwaite degrees of freedom.
    #[default]
    Welch,
    /// Pooled variance, `n_a + n_b - 2` degrees of freedom.
    Student,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TestResult {
    pub t_stat: f64,
    pub dof: f64,
    /// Two-sided.
    pub p_value: f64,
    /// Both samples have zero variance and different means: `t = ±inf`, `p = 0`.
    pub degenerate: bool,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check_sizes(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Stat(format!(
            "t-test needs at least 2 values per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

fn zero_variance_result(diff: f64, dof: f64) -> TestResult {
    if diff == 0.0 {
        TestResult {
            t_stat: 0.0,
            dof,
            p_value: 1.0,
            degenerate: false,
        }
    } else {
        TestResult {
            t_stat: f64::INFINITY.copysign(diff),
            dof,
            p_value: 0.0,
            degenerate: true,
        }
    }
}

fn two_sided(t: f64, dof: f64) -> Result<f64> {
    Ok((2.0 * t_sf(t.abs(), dof)?).min(1.0))
}

/// Two-sided Welch (unequal-variance) t-test of `mean(a) - mean(b)`.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_sizes(a, b)?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return Ok(zero_variance_result(ma - mb, na + nb - 2.0));
    }
    let t = (ma - mb) / se2.sqrt();
    let dof = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    Ok(TestResult {
        t_stat: t,
        dof,
        p_value: two_sided(t, dof)?,
        degenerate: false,
    })
}

/// Two-sided pooled-variance Student t-test.
pub fn student_t(a: &[f64], b: &[f64]) -> Result<TestResult> {
    check_sizes(a, b)?;
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let dof = na + nb - 2.0;
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / dof;
    let se2 = pooled * (1.0 / na + 1.0 / nb);
    if se2 == 0.0 {
        return Ok(zero_variance_result(ma - mb, dof));
    }
    let t = (ma - mb) / se2.sqrt();
    Ok(TestResult {
        t_stat: t,
        dof,
        p_value: two_sided(t, dof)?,
        degenerate: false,
    })
}

pub fn t_test(kind: TTestKind, a: &[f64], b: &[f64]) -> Result<TestResult> {
    match kind {
        TTestKind::Welch => welch_t(a, b),
        TTestKind::Student => student_t(a, b),
    }
}

/// Upper tail `P(T > t)` of Student's t with `dof` degrees of freedom.
pub fn t_sf(t: f64, dof: f64) -> Result<f64> {
    if !(dof > 0.0) || dof.is_infinite() {
        return Err(Error::Stat(format!(
            "degrees of freedom must be positive, got {dof}"
        )));
    }
    if t.is_nan() {
        return Err(Error::Stat("t statistic is NaN".into()));
    }
    if t < 0.0 {
        return Ok(1.0 - t_sf(-t, dof)?);
    }
    if t.is_infinite() {
        return Ok(0.0);
    }
    // P(T > t) = I_x(dof/2, 1/2) / 2 with x = dof / (dof + t^2).
    let x = dof / (dof + t * t);
    Ok(0.5 * beta_reg(dof / 2.0, 0.5, x))
}
