//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Lanczos approximation (g = 7, 9 terms), valid for x >= 0.5.
pub fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let mut a = C[0];
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

pub fn t_density(x: f64, dof: f64) -> f64 {
    let log_norm =
        ln_gamma((dof + 1.0) / 2.0) - ln_gamma(dof / 2.0) - 0.5 * (dof * std::f64::consts::PI).ln();
    (log_norm - (dof + 1.0) / 2.0 * (1.0 + x * x / dof).ln()).exp()
}

/// `P(T > t)` as 1/2 minus a composite Simpson integral of the density over [0, |t|].
pub fn t_sf_quadrature(t: f64, dof: f64) -> f64 {
    let a = t.abs();
    let panels = 20_000;
    let h = a / panels as f64;
    let mut s = t_density(0.0, dof) + t_density(a, dof);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * t_density(i as f64 * h, dof);
    }
    let mass = s * h / 3.0;
    if t >= 0.0 {
        0.5 - mass
    } else {
        0.5 + mass
    }
}

/// Textbook Welch statistic and Welch-Satterthwaite degrees of freedom.
pub fn welch_scalar(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (var(a, ma), var(b, mb));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let t = (ma - mb) / (va / na + vb / nb).sqrt();
    let dof = (va / na + vb / nb).powi(2)
        / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
    let p = (2.0 * t_sf_quadrature(t.abs(), dof)).min(1.0);
    (t, dof, p)
}

/// One-way ANOVA F per column, straight from the sums-of-squares definition.
pub fn anova_brute(x: &Array2<f64>, y: &[i8]) -> Vec<f64> {
    let n = x.nrows();
    (0..x.ncols())
        .map(|j| {
            let col: Vec<f64> = (0..n).map(|i| x[[i, j]]).collect();
            let grand = col.iter().sum::<f64>() / n as f64;
            let mut ssb = 0.0;
            let mut ssw = 0.0;
            for class in [-1i8, 1] {
                let members: Vec<f64> = col
                    .iter()
                    .zip(y)
                    .filter(|(_, &l)| l == class)
                    .map(|(v, _)| *v)
                    .collect();
                let m = members.iter().sum::<f64>() / members.len() as f64;
                ssb += members.len() as f64 * (m - grand) * (m - grand);
                ssw += members.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
            }
            (ssb / 1.0) / (ssw / (n as f64 - 2.0))
        })
        .collect()
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Array2<f64> {
    Array2::from_shape_fn((n, k), |_| rng.sample(StandardNormal))
}

/// Labels with at least `min_each` of each class, shuffled.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, min_each: usize) -> Vec<i8> {
    use rand::seq::SliceRandom;
    let pos = rng.random_range(min_each..=n - min_each);
    let mut y: Vec<i8> = (0..n).map(|i| if i < pos { 1 } else { -1 }).collect();
    y.shuffle(rng);
    y
}

/// Linearly separable data: labels are the sign of a fixed direction with
/// a margin of at least `margin`.
pub fn separable(rng: &mut ChaCha8Rng, n: usize, k: usize, margin: f64) -> (Array2<f64>, Vec<i8>) {
    let w: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut rows = Vec::with_capacity(n * k);
    let mut y = Vec::with_capacity(n);
    while y.len() < n {
        let x: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let s = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / norm;
        if s.abs() < margin {
            continue;
        }
        let want = if y.len() % 2 == 0 { 1.0 } else { -1.0 };
        if s.signum() != want {
            continue;
        }
        rows.extend(x);
        y.push(want as i8);
    }
    (Array2::from_shape_vec((n, k), rows).unwrap(), y)
}

/// Exact two-sided binomial(n, 1/2) interval holding at least `level` mass,
/// as accuracy bounds.
pub fn binomial_chance_interval(n: usize, level: f64) -> (f64, f64) {
    let tail = (1.0 - level) / 2.0;
    let mut pmf = vec![0.0; n + 1];
    pmf[0] = 0.5f64.powi(n as i32);
    for k in 0..n {
        pmf[k + 1] = pmf[k] * (n - k) as f64 / (k + 1) as f64;
    }
    let mut cdf = 0.0;
    let mut lo = 0;
    for (k, p) in pmf.iter().enumerate() {
        if cdf + p > tail {
            lo = k;
            break;
        }
        cdf += p;
    }
    let mut upper = 0.0;
    let mut hi = n;
    for k in (0..=n).rev() {
        if upper + pmf[k] > tail {
            hi = k;
            break;
        }
        upper += pmf[k];
    }
    (lo as f64 / n as f64, hi as f64 / n as f64)
}
