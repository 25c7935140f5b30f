//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xferscope::dataset::TaskPair;
use xferscope::linmodel::{
    accuracy, fit_linear_svc, fit_logreg_l2, logreg_gradient, logreg_objective, predict,
    ClassifierKind,
};
use xferscope::protocols::{
    inline_curve, selection_transfer_curve, source_selections, transfer_curve, AccuracyCurve,
    InlineSelection, ProtocolConfig,
};
use xferscope::scale::{
    compare_curves, p_curve_area, select_scale_selection, select_scale_transfer, DEFAULT_ALPHA,
};
use xferscope::stats::{anova_f, t_sf, welch_t};
use xferscope::synth::{
    generate_pair, generate_single, selectivity_scores, BlobSpec, SyntheticSpec,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3}")).collect();
    format!("[{}]", parts.join(" "))
}

fn cfg(seed: u64) -> ProtocolConfig {
    ProtocolConfig {
        seed,
        ..ProtocolConfig::default()
    }
}

fn ac1_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_f: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(12..=50);
        let k = rng.random_range(1..=200);
        let x = common::gaussian_matrix(&mut rng, n, k);
        let y = common::random_labels(&mut rng, n, 2);
        let got = anova_f(x.view(), &y).map_err(|e| e.to_string())?;
        for (a, b) in got.as_slice().iter().zip(common::anova_brute(&x, &y)) {
            worst_f = worst_f.max((a - b).abs() / b.abs().max(f64::MIN_POSITIVE));
        }
    }
    let mut worst_w: f64 = 0.0;
    for _ in 0..50 {
        let na = rng.random_range(3..20);
        let nb = rng.random_range(3..20);
        let scale_b = rng.random_range(0.2..5.0);
        let a: Vec<f64> = (0..na).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..nb)
            .map(|_| scale_b * rng.random_range(-1.0..1.0) + 0.3)
            .collect();
        let r = welch_t(&a, &b).map_err(|e| e.to_string())?;
        let (t, dof, p) = common::welch_scalar(&a, &b);
        worst_w = worst_w
            .max((r.t_stat - t).abs())
            .max((r.dof - dof).abs())
            .max((r.p_value - p).abs());
    }
    let cauchy = t_sf(1.0, 1.0).map_err(|e| e.to_string())?;
    let mut worst_q: f64 = 0.0;
    for _ in 0..20 {
        let t = rng.random_range(-8.0..8.0);
        let dof = rng.random_range(1.0..60.0);
        let got = t_sf(t, dof).map_err(|e| e.to_string())?;
        worst_q = worst_q.max((got - common::t_sf_quadrature(t, dof)).abs());
    }
    check(
        worst_f <= 1e-10 && worst_w <= 1e-8 && (cauchy - 0.25).abs() <= 1e-9 && worst_q <= 1e-8,
        format!(
            "anova max rel err {worst_f:.2e}, welch max err {worst_w:.2e}, t_sf(1,1) = {cauchy:.12}, quadrature max err {worst_q:.2e}"
        ),
    )
}

fn ac2_optimizers() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let mut worst_grad: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(10..40);
        let k = rng.random_range(2..12);
        let x = common::gaussian_matrix(&mut rng, n, k);
        let y = common::random_labels(&mut rng, n, 2);
        let c = 10f64.powf(rng.random_range(-2.0..2.0));
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let (gw, gb) = logreg_gradient(x.view(), &y, c, &w, b);
        let mut fd = Vec::with_capacity(k + 1);
        let h = 1e-5;
        for j in 0..=k {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if j < k {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            fd.push(
                (logreg_objective(x.view(), &y, c, &wp, bp)
                    - logreg_objective(x.view(), &y, c, &wm, bm))
                    / (2.0 * h),
            );
        }
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff = analytic
            .iter()
            .zip(&fd)
            .map(|(a, f)| (a - f).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst_grad = worst_grad.max(diff / norm);
    }

    let mut worst_gap: f64 = 0.0;
    for c in [0.01, 0.1, 1.0, 10.0] {
        let x = common::gaussian_matrix(&mut rng, 60, 15);
        let y = common::random_labels(&mut rng, 60, 10);
        let m = fit_linear_svc(x.view(), &y, c).map_err(|e| e.to_string())?;
        let gap = m.diagnostics.duality_gap.ok_or("no gap reported")?;
        worst_gap = worst_gap.max(gap / (1.0 + m.diagnostics.primal_objective.abs()));
    }

    let (x, y) = common::separable(&mut rng, 100, 10, 1.0);
    let svc = fit_linear_svc(x.view(), &y, 10.0).map_err(|e| e.to_string())?;
    let lr = fit_logreg_l2(x.view(), &y, 10.0).map_err(|e| e.to_string())?;
    let acc_svc = accuracy(&predict(&svc, x.view()).map_err(|e| e.to_string())?, &y)
        .map_err(|e| e.to_string())?;
    let acc_lr = accuracy(&predict(&lr, x.view()).map_err(|e| e.to_string())?, &y)
        .map_err(|e| e.to_string())?;
    check(
        worst_grad <= 1e-5 && worst_gap <= 1e-3 && acc_svc >= 0.99 && acc_lr >= 0.99,
        format!(
            "gradient max rel err {worst_grad:.2e}, svc gap/(1+|P|) max {worst_gap:.2e}, separable train acc svc {acc_svc:.3} logreg {acc_lr:.3}"
        ),
    )
}

fn curves(pair: &TaskPair, cfg: &ProtocolConfig) -> Result<[AccuracyCurve; 3], String> {
    let e = |e: xferscope::Error| e.to_string();
    Ok([
        inline_curve(pair.target(), cfg).map_err(e)?,
        transfer_curve(pair, cfg).map_err(e)?,
        selection_transfer_curve(pair, cfg).map_err(e)?,
    ])
}

fn ac3_classifier_agreement() -> Outcome {
    let (pair, _) = generate_pair(&SyntheticSpec::desk_default()).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for p in [pair.clone(), pair.reversed()] {
        let svc = curves(
            &p,
            &ProtocolConfig {
                classifier: ClassifierKind::LinearSvc,
                ..cfg(0)
            },
        )?;
        let lr = curves(
            &p,
            &ProtocolConfig {
                classifier: ClassifierKind::LogisticL2,
                ..cfg(0)
            },
        )?;
        for (a, b) in svc.iter().zip(&lr) {
            for (x, y) in a.mean.iter().zip(&b.mean) {
                worst = worst.max((x - y).abs());
            }
        }
    }
    check(
        worst <= 0.03,
        format!("max |svc - logreg| mean accuracy over 3 curves x 2 directions = {worst:.4}"),
    )
}

fn ac4_converging_curves() -> Outcome {
    let (pair, truth) = generate_pair(&SyntheticSpec::desk_default()).map_err(|e| e.to_string())?;
    let e = |e: xferscope::Error| e.to_string();
    let c = cfg(0);
    let inline = inline_curve(pair.target(), &c).map_err(e)?;
    let sel = selection_transfer_curve(&pair, &c).map_err(e)?;
    let cmp = compare_curves(&inline, &sel).map_err(e)?;
    let p_last = *cmp.p_values.last().unwrap();

    let whole = ProtocolConfig {
        inline_selection: InlineSelection::WholeTask,
        ..cfg(0)
    };
    let inline_w = inline_curve(pair.target(), &whole).map_err(e)?;
    let sel_w = selection_transfer_curve(&pair, &whole).map_err(e)?;
    let p_last_whole = *compare_curves(&inline_w, &sel_w)
        .map_err(e)?
        .p_values
        .last()
        .unwrap();

    let d = select_scale_selection(&cmp, DEFAULT_ALPHA).map_err(e)?;
    let voxels = source_selections(pair.source(), &c)
        .map_err(e)?
        .swap_remove(d.index);
    let dice = selectivity_scores(voxels.indices(), &truth.shared_mask).dice;
    check(
        p_last >= 0.05 && p_last_whole == 1.0 && d.selected_fraction < 0.5 && !d.exhausted && dice >= 0.5,
        format!(
            "p(1.0) foldwise {p_last:.3}, wholetask {p_last_whole}; selected fraction {:.4} exhausted={}; dice vs shared {dice:.4}",
            d.selected_fraction, d.exhausted
        ),
    )
}

/// A weak, broad shared blob plus strong task-specific blobs.
fn diverging_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        seed,
        shared_blobs: vec![BlobSpec::new([10.0, 12.0, 10.0], 12.0, 0.03)],
        source_only_blobs: vec![BlobSpec::new([4.0, 5.0, 4.0], 3.0, 0.6)],
        target_only_blobs: vec![BlobSpec::new([15.0, 19.0, 15.0], 3.0, 0.6)],
        ..SyntheticSpec::desk_default()
    }
}

fn ac5_diverging_curves() -> Outcome {
    let e = |e: xferscope::Error| e.to_string();
    let mut diffs = Vec::new();
    let mut scales = Vec::new();
    for seed in 0..5 {
        let (pair, _) = generate_pair(&diverging_spec(seed)).map_err(e)?;
        let c = cfg(seed);
        let inline = inline_curve(pair.target(), &c).map_err(e)?;
        let transfer = transfer_curve(&pair, &c).map_err(e)?;
        let cmp = compare_curves(&inline, &transfer).map_err(e)?;
        scales.push(select_scale_transfer(&cmp).selected_fraction);
        diffs.push(cmp.mean_diff);
    }
    let med_diff: Vec<f64> = (0..diffs[0].len())
        .map(|i| median(diffs.iter().map(|d| d[i]).collect()))
        .collect();
    let min_diff = med_diff.iter().copied().fold(f64::INFINITY, f64::min);
    let med_scale = median(scales.clone());
    check(
        min_diff >= 0.05 && med_scale >= 0.5,
        format!(
            "median inline-transfer per point {} (min {min_diff:.3}); transfer scales {} (median {med_scale:.3})",
            fmt(&med_diff),
            fmt(&scales)
        ),
    )
}

fn ac6_similarity_ordering() -> Outcome {
    let e = |e: xferscope::Error| e.to_string();
    let mut sites = Vec::new();
    for x in [3.0, 9.0, 15.0] {
        for y in [3.0, 9.0, 15.0, 21.0] {
            for z in [4.0, 10.0, 16.0] {
                sites.push([x, y, z]);
            }
        }
    }
    let blob = |i: usize| BlobSpec::new(sites[i], 2.0, 0.2);
    let a_blobs: Vec<BlobSpec> = (0..10).map(blob).collect();
    let b_blobs: Vec<BlobSpec> = (0..8).chain(10..12).map(blob).collect();
    let c_blobs: Vec<BlobSpec> = (0..2).chain(12..20).map(blob).collect();

    let mut wins = 0;
    let mut areas = Vec::new();
    for seed in 0..5 {
        let spec = SyntheticSpec {
            seed,
            shared_blobs: vec![],
            source_only_blobs: vec![],
            target_only_blobs: vec![],
            ..SyntheticSpec::desk_default()
        };
        let a = generate_single("A", &a_blobs, &spec).map_err(e)?;
        let b = generate_single("B", &b_blobs, &spec).map_err(e)?;
        let c = generate_single("C", &c_blobs, &spec).map_err(e)?;
        let mut area = [0.0; 2];
        for (slot, t) in [b, c].into_iter().enumerate() {
            let pair = TaskPair::new(a.clone(), t).map_err(e)?;
            let inline = inline_curve(pair.target(), &cfg(seed)).map_err(e)?;
            let sel = selection_transfer_curve(&pair, &cfg(seed)).map_err(e)?;
            area[slot] = p_curve_area(&compare_curves(&inline, &sel).map_err(e)?);
        }
        if area[0] > area[1] {
            wins += 1;
        }
        areas.push(format!("{:.1}/{:.1}", area[0], area[1]));
    }
    check(
        wins >= 4,
        format!(
            "area A→B > A→C in {wins}/5 seeds (A→B/A→C: {})",
            areas.join(" ")
        ),
    )
}

fn asymmetric_spec(seed: u64) -> SyntheticSpec {
    SyntheticSpec {
        seed,
        shared_blobs: vec![BlobSpec::new([10.0, 12.0, 10.0], 3.0, 0.2)],
        source_only_blobs: vec![BlobSpec::new([15.0, 19.0, 15.0], 5.0, 0.6)],
        target_only_blobs: vec![BlobSpec::new([4.0, 5.0, 4.0], 3.0, 0.1)],
        ..SyntheticSpec::desk_default()
    }
}

fn ac7_asymmetry() -> Outcome {
    let e = |e: xferscope::Error| e.to_string();
    let mut differ = 0;
    let mut detail = Vec::new();
    for seed in 0..5 {
        let spec = asymmetric_spec(seed);
        let mut scale = [0.0; 2];
        for (slot, s) in [spec.clone(), spec.swapped()].iter().enumerate() {
            let (pair, _) = generate_pair(s).map_err(e)?;
            let inline = inline_curve(pair.target(), &cfg(seed)).map_err(e)?;
            let sel = selection_transfer_curve(&pair, &cfg(seed)).map_err(e)?;
            let cmp = compare_curves(&inline, &sel).map_err(e)?;
            scale[slot] = select_scale_selection(&cmp, DEFAULT_ALPHA)
                .map_err(e)?
                .selected_fraction;
        }
        if scale[0] != scale[1] {
            differ += 1;
        }
        detail.push(format!("{:.3}/{:.3}", scale[0], scale[1]));
    }
    check(
        differ >= 3,
        format!(
            "A→B vs B→A selected scales differ in {differ}/5 seeds ({})",
            detail.join(" ")
        ),
    )
}

fn ac8_chance_level() -> Outcome {
    let e = |e: xferscope::Error| e.to_string();
    let (pair, _) = generate_pair(&SyntheticSpec::desk_default()).map_err(e)?;
    let mut labels = pair.target().labels().to_vec();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(1000));
    let target = pair.target().with_labels(labels).map_err(e)?;
    let permuted = TaskPair::new(pair.source().clone(), target).map_err(e)?;
    let (lo, hi) = common::binomial_chance_interval(permuted.target().n(), 0.99);
    let mut lines = vec![format!(
        "interval [{lo:.4}, {hi:.4}] n={}",
        permuted.target().n()
    )];
    let mut ok = true;
    for curve in curves(&permuted, &cfg(0))? {
        let min = curve.mean.iter().copied().fold(f64::INFINITY, f64::min);
        let max = curve.mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ok &= min >= lo && max <= hi;
        lines.push(format!("{} [{min:.3}, {max:.3}]", curve.role.name()));
    }
    check(ok, lines.join("; "))
}

fn write_experiment(dir: &Path) -> std::path::PathBuf {
    fs::create_dir_all(dir).unwrap();
    let spec = serde_json::to_string_pretty(&SyntheticSpec::desk_default()).unwrap();
    fs::write(dir.join("spec.json"), spec).unwrap();
    let config = r#"{"synthetic_spec": "spec.json", "output_dir": "out", "seed": 0, "directions": ["A→B", "B→A"]}"#;
    let path = dir.join("config.json");
    fs::write(&path, config).unwrap();
    path
}

fn run_cli(config: &Path, out: &Path, threads: Option<&str>) -> Result<Duration, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xferscope"));
    cmd.arg("run").arg(config).arg("--output-dir").arg(out);
    cmd.env_remove("XFERSCOPE_THREADS");
    if let Some(t) = threads {
        cmd.env("XFERSCOPE_THREADS", t);
    }
    let start = Instant::now();
    let status = cmd.output().map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!(
            "run failed: {}",
            String::from_utf8_lossy(&status.stderr)
        ));
    }
    Ok(start.elapsed())
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn ac9_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = write_experiment(tmp.path());
    let runs = [
        (None, "auto"),
        (Some("1"), "1"),
        (Some("4"), "4"),
        (None, "auto"),
    ];
    let mut outputs = Vec::new();
    for (i, (threads, _)) in runs.iter().enumerate() {
        let out = tmp.path().join(format!("out{i}"));
        run_cli(&config, &out, *threads)?;
        outputs.push(dir_contents(&out));
    }
    let names: Vec<&str> = outputs[0].iter().map(|(n, _)| n.as_str()).collect();
    let identical = outputs.iter().all(|o| o == &outputs[0]);
    check(
        identical && names.len() >= 6,
        format!(
            "{} runs (XFERSCOPE_THREADS auto/1/4/auto), {} files byte-identical: {}",
            runs.len(),
            names.len(),
            identical
        ),
    )
}

fn ac10_desk_scale() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = write_experiment(tmp.path());
    let out = tmp.path().join("out");
    let took = run_cli(&config, &out, None)?;
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("report.json")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let rows = report.as_array().map(Vec::len).unwrap_or(0);
    let csv = fs::read_to_string(out.join("curve_inline.csv")).map_err(|e| e.to_string())?;
    let lines = csv.lines().count() - 1;
    check(
        took < Duration::from_secs(300) && rows == 2 && lines == 2 * 15 * 6,
        format!(
            "k=10000, n=80 per task, 15 points x 6 replicates, 2 directions in {:.1}s on {} thread(s); {rows} report rows, {lines} inline rows",
            took.as_secs_f64(),
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        ),
    )
}

struct Criterion {
    id: &'static str,
    name: &'static str,
    limit: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: "AC1",
            name: "stats oracle equivalence",
            limit: Duration::from_secs(10),
            run: ac1_oracles,
        },
        Criterion {
            id: "AC2",
            name: "optimizer correctness",
            limit: Duration::from_secs(10),
            run: ac2_optimizers,
        },
        Criterion {
            id: "AC3",
            name: "svc/logreg agreement",
            limit: Duration::from_secs(120),
            run: ac3_classifier_agreement,
        },
        Criterion {
            id: "AC4",
            name: "selection transfer converges",
            limit: Duration::from_secs(120),
            run: ac4_converging_curves,
        },
        Criterion {
            id: "AC5",
            name: "transfer learning diverges",
            limit: Duration::from_secs(180),
            run: ac5_diverging_curves,
        },
        Criterion {
            id: "AC6",
            name: "similarity ordering",
            limit: Duration::from_secs(240),
            run: ac6_similarity_ordering,
        },
        Criterion {
            id: "AC7",
            name: "asymmetry",
            limit: Duration::from_secs(180),
            run: ac7_asymmetry,
        },
        Criterion {
            id: "AC8",
            name: "chance-level control",
            limit: Duration::from_secs(120),
            run: ac8_chance_level,
        },
        Criterion {
            id: "AC9",
            name: "determinism",
            limit: Duration::from_secs(240),
            run: ac9_determinism,
        },
        Criterion {
            id: "AC10",
            name: "desk-scale performance",
            limit: Duration::from_secs(300),
            run: ac10_desk_scale,
        },
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for c in &criteria {
        if !filter.is_empty() && !filter.iter().any(|f| c.id.eq_ignore_ascii_case(f)) {
            continue;
        }
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if took <= c.limit => (true, d),
            Ok(d) => (false, format!("{d} (over time limit)")),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} {} {}: {} [{:.1}s, limit {}s]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            took.as_secs_f64(),
            c.limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
