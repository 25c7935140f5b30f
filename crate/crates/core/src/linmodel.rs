//! L2-penalized logistic regression and linear SVC.
//!
//! Both solvers work on the Gram matrix of the training rows. The optimal
//! weight vector lies in the span of the training samples, so with `n << k`
//! (tens of samples, thousands of voxels) every iteration costs `O(n^2)` or
//! `O(n^3)` instead of touching all `k` features. Weights are recovered as
//! `w = X^T coef` at the end.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, dot, gram, matvec};

pub const LOGREG_TOL: f64 = 1e-8;
pub const LOGREG_MAX_ITER: usize = 1000;
pub const SVC_TOL: f64 = 1e-4;
pub const SVC_MAX_EPOCHS: usize = 10_000;
/// Relative duality-gap bound required, together with [`SVC_TOL`], before
/// the SVC solver stops.
pub const SVC_GAP_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "logreg")]
    LogisticL2,
    #[serde(rename = "svc")]
    LinearSvc,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogisticL2 => "logreg",
            ClassifierKind::LinearSvc => "svc",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logreg" => Ok(Self::LogisticL2),
            "svc" => Ok(Self::LinearSvc),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolverDiagnostics {
    /// Newton iterations (logreg) or epochs (SVC).
    pub iterations: usize,
    /// Minimized objective after each accepted step: the primal for
    /// logreg, the negated dual for SVC.
    pub objective_trace: Vec<f64>,
    /// Primal minus dual objective at termination (SVC only).
    pub duality_gap: Option<f64>,
    pub primal_objective: f64,
}

/// A fit expressed through training-sample coefficients:
/// `f(x) = sum_i coef_i <x_i, x> + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelFit {
    pub kind: ClassifierKind,
    pub coef: Vec<f64>,
    pub intercept: f64,
    pub penalty_c: f64,
    pub converged: bool,
    pub final_residual: f64,
    pub diagnostics: SolverDiagnostics,
}

impl KernelFit {
    /// Decision values for rows whose inner products with the training
    /// samples are given (`cross[r, i] = <x_r, x_i>`).
    pub fn decision_from_kernel(&self, cross: ArrayView2<'_, f64>) -> Vec<f64> {
        matvec(cross, &self.coef)
            .into_iter()
            .map(|v| v + self.intercept)
            .collect()
    }

    pub fn into_linear(self, x_train: ArrayView2<'_, f64>) -> LinearModel {
        let weights = x_train
            .t()
            .dot(&ndarray::ArrayView1::from(&self.coef))
            .to_vec();
        LinearModel {
            kind: self.kind,
            weights,
            intercept: self.intercept,
            penalty_c: self.penalty_c,
            converged: self.converged,
            final_residual: self.final_residual,
            diagnostics: self.diagnostics,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ClassifierKind,
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub penalty_c: f64,
    pub converged: bool,
    /// Gradient 2-norm (logreg) or largest projected-gradient violation (SVC).
    pub final_residual: f64,
    pub diagnostics: SolverDiagnostics,
}

impl LinearModel {
    pub fn decision_function(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.weights.len() {
            return Err(Error::Dim(format!(
                "model has {} weights, data has {} columns",
                self.weights.len(),
                x.ncols()
            )));
        }
        Ok(matvec(x, &self.weights)
            .into_iter()
            .map(|v| v + self.intercept)
            .collect())
    }
}

pub(crate) fn sign_label(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// `sign(w.x + b)` per row, with `sign(0) = +1`.
pub fn predict(m: &LinearModel, x: ArrayView2<'_, f64>) -> Result<Vec<i8>> {
    Ok(m.decision_function(x)?
        .into_iter()
        .map(sign_label)
        .collect())
}

pub fn accuracy(pred: &[i8], truth: &[i8]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Dim(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Dim("accuracy of an empty prediction".into()));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

fn labels_to_f64(y: &[i8]) -> Result<Vec<f64>> {
    if y.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::Fit("labels must be -1 or +1".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Fit("training labels contain a single class".into()));
    }
    Ok(y.iter().map(|&l| f64::from(l)).collect())
}

fn check_c(c: f64) -> Result<()> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Fit(format!(
            "penalty C must be positive and finite, got {c}"
        )));
    }
    Ok(())
}

/// Fits on a precomputed Gram matrix of the training rows.
pub fn fit_kernel(
    kind: ClassifierKind,
    gram: ArrayView2<'_, f64>,
    y: &[i8],
    c: f64,
) -> Result<KernelFit> {
    check_c(c)?;
    if gram.nrows() != y.len() || gram.ncols() != y.len() {
        return Err(Error::Dim(format!(
            "Gram matrix {:?} for {} labels",
            gram.dim(),
            y.len()
        )));
    }
    let yf = labels_to_f64(y)?;
    Ok(match kind {
        ClassifierKind::LogisticL2 => solve_logreg(gram, &yf, c),
        ClassifierKind::LinearSvc => solve_svc(gram, &yf, c),
    })
}

pub fn fit(kind: ClassifierKind, x: ArrayView2<'_, f64>, y: &[i8], c: f64) -> Result<LinearModel> {
    if x.nrows() != y.len() {
        return Err(Error::Dim(format!(
            "{} rows for {} labels",
            x.nrows(),
            y.len()
        )));
    }
    let k = gram(x);
    Ok(fit_kernel(kind, k.view(), y, c)?.into_linear(x))
}

/// Minimizes `0.5 |w|^2 + C sum_i log(1 + exp(-y_i (w.x_i + b)))`, intercept
/// unpenalized, by damped Newton with backtracking line search.
pub fn fit_logreg_l2(x: ArrayView2<'_, f64>, y: &[i8], c: f64) -> Result<LinearModel> {
    fit(ClassifierKind::LogisticL2, x, y, c)
}

/// Minimizes `0.5 (|w|^2 + b^2) + C sum_i max(0, 1 - y_i (w.x_i + b))` by dual
/// coordinate descent in fixed cyclic order. The intercept is an augmented
/// constant feature, hence the `b^2` term.
pub fn fit_linear_svc(x: ArrayView2<'_, f64>, y: &[i8], c: f64) -> Result<LinearModel> {
    fit(ClassifierKind::LinearSvc, x, y, c)
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(m))`, the probability assigned to the wrong class at margin `m`.
fn wrong_class_prob(m: f64) -> f64 {
    if m >= 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

pub fn logreg_objective(x: ArrayView2<'_, f64>, y: &[i8], c: f64, w: &[f64], b: f64) -> f64 {
    let f = matvec(x, w);
    0.5 * dot(w, w)
        + c * f
            .iter()
            .zip(y)
            .map(|(fi, &yi)| softplus(-f64::from(yi) * (fi + b)))
            .sum::<f64>()
}

/// Gradient of [`logreg_objective`] with respect to `(w, b)`.
pub fn logreg_gradient(
    x: ArrayView2<'_, f64>,
    y: &[i8],
    c: f64,
    w: &[f64],
    b: f64,
) -> (Vec<f64>, f64) {
    let f = matvec(x, w);
    let r: Vec<f64> = f
        .iter()
        .zip(y)
        .map(|(fi, &yi)| {
            let yi = f64::from(yi);
            -c * yi * wrong_class_prob(yi * (fi + b))
        })
        .collect();
    let mut gw = x.t().dot(&ndarray::ArrayView1::from(&r)).to_vec();
    for (g, wi) in gw.iter_mut().zip(w) {
        *g += wi;
    }
    (gw, r.iter().sum())
}

/// SVC primal with the augmented intercept: `0.5 (|w|^2 + b^2) + C sum hinge`.
pub fn svc_objective(x: ArrayView2<'_, f64>, y: &[i8], c: f64, w: &[f64], b: f64) -> f64 {
    let f = matvec(x, w);
    0.5 * (dot(w, w) + b * b)
        + c * f
            .iter()
            .zip(y)
            .map(|(fi, &yi)| (1.0 - f64::from(yi) * (fi + b)).max(0.0))
            .sum::<f64>()
}

struct LogregState {
    beta: Vec<f64>,
    b: f64,
    /// `K beta`
    f: Vec<f64>,
    obj: f64,
}

fn logreg_state_objective(beta: &[f64], f: &[f64], b: f64, y: &[f64], c: f64) -> f64 {
    0.5 * dot(beta, f)
        + c * f
            .iter()
            .zip(y)
            .map(|(fi, yi)| softplus(-yi * (fi + b)))
            .sum::<f64>()
}

/// Returns `(gamma, g_b, K gamma, |grad|_2)` where the primal gradient is
/// `(X^T gamma, g_b)`.
fn logreg_grad(
    k: ArrayView2<'_, f64>,
    st: &LogregState,
    y: &[f64],
    c: f64,
) -> (Vec<f64>, f64, Vec<f64>, f64) {
    let sig: Vec<f64> =
        st.f.iter()
            .zip(y)
            .map(|(fi, yi)| wrong_class_prob(yi * (fi + st.b)))
            .collect();
    let gamma: Vec<f64> = st
        .beta
        .iter()
        .zip(y)
        .zip(&sig)
        .map(|((bi, yi), si)| bi - c * yi * si)
        .collect();
    let g_b = -c * y.iter().zip(&sig).map(|(yi, si)| yi * si).sum::<f64>();
    let k_gamma = matvec(k, &gamma);
    let norm = (dot(&gamma, &k_gamma).max(0.0) + g_b * g_b).sqrt();
    (gamma, g_b, k_gamma, norm)
}

/// Newton direction in coefficient space, or `None` when the reduced
/// Hessian system is numerically singular.
fn newton_direction(
    k: ArrayView2<'_, f64>,
    st: &LogregState,
    y: &[f64],
    c: f64,
    gamma: &[f64],
    g_b: f64,
    k_gamma: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let n = y.len();
    let d: Vec<f64> =
        st.f.iter()
            .zip(y)
            .map(|(fi, yi)| {
                let p = wrong_class_prob(yi * (fi + st.b));
                p * (1.0 - p)
            })
            .collect();
    let s: Vec<f64> = d.iter().map(|di| (c * di).sqrt()).collect();
    // M = I + S K S, with S = diag(sqrt(C d)).
    let m = Array2::from_shape_fn((n, n), |(i, j)| {
        s[i] * k[[i, j]] * s[j] + if i == j { 1.0 } else { 0.0 }
    });
    let l = cholesky(&m)?;
    // (I + X^T S^2 X)^{-1} X^T u = X^T A(u), A(u) = u - S M^{-1} S K u.
    let apply = |u: &[f64], ku: &[f64]| -> Vec<f64> {
        let mut z: Vec<f64> = s.iter().zip(ku).map(|(si, v)| si * v).collect();
        cholesky_solve(&l, &mut z);
        u.iter()
            .zip(&s)
            .zip(&z)
            .map(|((ui, si), zi)| ui - si * zi)
            .collect()
    };
    let cd: Vec<f64> = d.iter().map(|di| c * di).collect();
    let a_g = apply(gamma, k_gamma);
    let a_h = apply(&cd, &matvec(k, &cd));
    let k_ag = matvec(k, &a_g);
    let k_ah = matvec(k, &a_h);
    let h_bb: f64 = cd.iter().sum();
    let schur = h_bb - dot(&cd, &k_ah);
    if !(schur > 1e-14 * h_bb.max(f64::MIN_POSITIVE)) {
        return None;
    }
    let db = (-g_b + dot(&cd, &k_ag)) / schur;
    let dbeta = a_g.iter().zip(&a_h).map(|(g, h)| -g - db * h).collect();
    Some((dbeta, db))
}

fn solve_logreg(k: ArrayView2<'_, f64>, y: &[f64], c: f64) -> KernelFit {
    let n = y.len();
    let mut st = LogregState {
        beta: vec![0.0; n],
        b: 0.0,
        f: vec![0.0; n],
        obj: 0.0,
    };
    st.obj = logreg_state_objective(&st.beta, &st.f, st.b, y, c);
    let mut trace = vec![st.obj];
    let (mut gamma, mut g_b, mut k_gamma, mut gnorm) = logreg_grad(k, &st, y, c);
    let mut converged = gnorm <= LOGREG_TOL;
    let mut iterations = 0;
    while !converged && iterations < LOGREG_MAX_ITER {
        iterations += 1;
        let newton = newton_direction(k, &st, y, c, &gamma, g_b, &k_gamma);
        let (dbeta, db) = match newton {
            Some((dbeta, db)) if dot(&k_gamma, &dbeta) + g_b * db < 0.0 => (dbeta, db),
            _ => (gamma.iter().map(|g| -g).collect(), -g_b),
        };
        let slope = dot(&k_gamma, &dbeta) + g_b * db;
        let k_d = matvec(k, &dbeta);
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..60 {
            let beta: Vec<f64> = st.beta.iter().zip(&dbeta).map(|(a, d)| a + t * d).collect();
            let f: Vec<f64> = st.f.iter().zip(&k_d).map(|(a, d)| a + t * d).collect();
            let b = st.b + t * db;
            let obj = logreg_state_objective(&beta, &f, b, y, c);
            let cand = LogregState { beta, b, f, obj };
            if obj <= st.obj + 1e-4 * t * slope {
                accepted = Some(cand);
                break;
            }
            // Near the optimum the decrease falls below rounding; take the
            // full step if it does not raise the objective and shrinks the gradient.
            if t == 1.0 && obj <= st.obj {
                let g = logreg_grad(k, &cand, y, c);
                if g.3 < gnorm {
                    accepted = Some(cand);
                    break;
                }
            }
            t *= 0.5;
        }
        let Some(next) = accepted else { break };
        st = next;
        trace.push(st.obj);
        (gamma, g_b, k_gamma, gnorm) = logreg_grad(k, &st, y, c);
        converged = gnorm <= LOGREG_TOL;
    }
    KernelFit {
        kind: ClassifierKind::LogisticL2,
        coef: st.beta,
        intercept: st.b,
        penalty_c: c,
        converged,
        final_residual: gnorm,
        diagnostics: SolverDiagnostics {
            iterations,
            primal_objective: st.obj,
            objective_trace: trace,
            duality_gap: None,
        },
    }
}

fn projected_gradient(g: f64, alpha: f64, c: f64) -> f64 {
    if alpha <= 0.0 {
        g.min(0.0)
    } else if alpha >= c {
        g.max(0.0)
    } else {
        g
    }
}

/// `(primal, dual)` of the augmented SVC problem given `g = Q alpha - 1`.
fn svc_objectives(alpha: &[f64], g: &[f64], c: f64) -> (f64, f64) {
    let quad: f64 = alpha.iter().zip(g).map(|(a, gi)| a * (gi + 1.0)).sum();
    let hinge: f64 = g.iter().map(|gi| (-gi).max(0.0)).sum();
    let primal = 0.5 * quad + c * hinge;
    let dual = alpha.iter().sum::<f64>() - 0.5 * quad;
    (primal, dual)
}

fn solve_svc(k: ArrayView2<'_, f64>, y: &[f64], c: f64) -> KernelFit {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * (k[[i, j]] + 1.0);
    let full_gradient = |alpha: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| q(i, j) * alpha[j]).sum::<f64>() - 1.0)
            .collect()
    };
    let qd: Vec<f64> = (0..n).map(|i| q(i, i)).collect();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let mut trace = vec![0.0];
    let mut converged = false;
    let mut epochs = 0;
    let mut violation = f64::INFINITY;
    let mut gap = f64::INFINITY;
    let mut primal = 0.0;
    while epochs < SVC_MAX_EPOCHS {
        epochs += 1;
        for i in 0..n {
            let pg = projected_gradient(g[i], alpha[i], c);
            if pg == 0.0 {
                continue;
            }
            let new = (alpha[i] - g[i] / qd[i]).clamp(0.0, c);
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                for (j, gj) in g.iter_mut().enumerate() {
                    *gj += delta * q(j, i);
                }
            }
        }
        // Refresh to keep accumulated rounding out of the stopping test.
        g = full_gradient(&alpha);
        violation = (0..n)
            .map(|i| projected_gradient(g[i], alpha[i], c).abs())
            .fold(0.0, f64::max);
        let (p, d) = svc_objectives(&alpha, &g, c);
        primal = p;
        gap = p - d;
        trace.push(-d);
        if violation <= SVC_TOL && gap <= SVC_GAP_TOL * (1.0 + p.abs()) {
            converged = true;
            break;
        }
    }
    let coef: Vec<f64> = alpha.iter().zip(y).map(|(a, yi)| a * yi).collect();
    let intercept = coef.iter().sum();
    KernelFit {
        kind: ClassifierKind::LinearSvc,
        coef,
        intercept,
        penalty_c: c,
        converged,
        final_residual: violation,
        diagnostics: SolverDiagnostics {
            iterations: epochs,
            objective_trace: trace,
            duality_gap: Some(gap),
            primal_objective: primal,
        },
    }
}
