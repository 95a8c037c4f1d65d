//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Tolerances and time budgets are pinned in each check.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use mlrm_core::metrics::{
    conditional_mutual_information, mutual_information, quantize_features, redundancy_index_eps, BinScheme,
    DistanceMetric,
};
use mlrm_core::model::{
    fit_and_score, l1_prune_search, loss_and_gradient, overparam_redundancy, Activation, MlpSpec, ModelConfig,
    OverparamMode, ParamVector,
};
use mlrm_core::sample::{avg_pairwise_distance, smote_oversample};
use mlrm_core::sensor::{cross_sensor_performance_redundancy, recommend_sensor_removal, Recommendation};
use mlrm_core::signal::{image_entropy, resize_to, ImageFrame};
use mlrm_core::split::{stratified_split, SplitRatios};
use mlrm_core::{rng, Direction, FeatureMatrix, LabelVector, MetricValue};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn c1() -> Check {
    let s = cross_sensor_performance_redundancy(
        MetricValue::higher(0.973).map_err(e)?,
        MetricValue::higher(0.981).map_err(e)?,
    )
    .map_err(e)?;
    ensure((s.r - 1.0082).abs() <= 1e-3, format!("R = {}", s.r))?;
    Ok(format!("R = {:.4}", s.r))
}

fn c2() -> Check {
    let a = MetricValue::higher(0.981).map_err(e)?;
    let s = overparam_redundancy(a, a, OverparamMode::Removed).map_err(e)?;
    ensure(s.r == 1.0, format!("R = {}", s.r))?;
    Ok(format!("R = {}", s.r))
}

fn c3() -> Check {
    let s = redundancy_index_eps(0.294, 0.245, Direction::LowerIsBetter, 1e-12).map_err(e)?;
    ensure((s.r - 0.833).abs() <= 5e-4, format!("R = {}", s.r))?;
    Ok(format!("R = {:.4}", s.r))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn c4() -> Check {
    let mut r = rng::seeded(4);
    let side = 320;
    let sizes = [80usize, 160, 320];
    let mut ent = vec![Vec::new(); sizes.len()];
    for _ in 0..500 {
        let (a, b): (f64, f64) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        let lo = r.random_range(0.0..60.0);
        let span = r.random_range(120.0..195.0);
        let norm = a.abs() + b.abs() + 1e-9;
        let px: Vec<u8> = (0..side * side)
            .map(|i| {
                let (x, y) = ((i % side) as f64 / side as f64, (i / side) as f64 / side as f64);
                let t = (a * x + b * y - a.min(0.0) - b.min(0.0)) / norm;
                (lo + span * t).round().clamp(0.0, 255.0) as u8
            })
            .collect();
        let img = ImageFrame::new(side, side, px, 0.0).map_err(e)?;
        for (k, &s) in sizes.iter().enumerate() {
            ent[k].push(image_entropy(&resize_to(&img, s).map_err(e)?));
        }
    }
    let means: Vec<f64> = ent.iter().map(|v| mean(v)).collect();
    let hi = means.iter().copied().fold(f64::MIN, f64::max);
    let lo = means.iter().copied().fold(f64::MAX, f64::min);
    let spread = (hi - lo) / hi;
    ensure(spread < 0.05, format!("gradient spread {spread:.4}"))?;

    let mut min320 = f64::MAX;
    let mut min20 = f64::MAX;
    for _ in 0..100 {
        let px: Vec<u8> = (0..side * side).map(|_| r.random()).collect();
        let img = ImageFrame::new(side, side, px, 0.0).map_err(e)?;
        min320 = min320.min(image_entropy(&img));
        min20 = min20.min(image_entropy(&resize_to(&img, 20).map_err(e)?));
    }
    let drop = (min320 - min20) / min320;
    ensure(drop > 0.20, format!("noise drop {drop:.4}"))?;
    Ok(format!("gradient spread {:.2}%, noise min-entropy drop {:.1}%", 100.0 * spread, 100.0 * drop))
}

// Plug-in entropy from raw counts, in bits.
fn entropy_of(codes: &[u32]) -> f64 {
    let mut counts = std::collections::HashMap::new();
    for &c in codes {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    let n = codes.len() as f64;
    counts.values().map(|&c| -(c as f64 / n) * (c as f64 / n).log2()).sum()
}

fn c5() -> Check {
    let mut r = rng::seeded(5);
    let n = 10_000;
    let cols: Vec<Vec<f64>> = (0..2).map(|_| (0..n).map(|_| r.random::<f64>()).collect()).collect();
    let coded = quantize_features(&FeatureMatrix::from_columns(&cols).map_err(e)?, 8, BinScheme::Quantile).map_err(e)?;
    let (f, g) = (coded.column(0), coded.column(1));
    let self_mi = mutual_information(f, f).map_err(e)?;
    let h = entropy_of(f);
    ensure((self_mi - h).abs() <= 1e-9, format!("I(f,f) = {self_mi}, H(f) = {h}"))?;
    let mi = mutual_information(f, g).map_err(e)?;
    ensure(mi.abs() <= 0.01, format!("independent I = {mi}"))?;
    // permutation null: shuffled pairings should look like the observed value
    let mut shuffled = g.to_vec();
    let mut null = Vec::new();
    for _ in 0..20 {
        shuffled.shuffle(&mut r);
        null.push(mutual_information(f, &shuffled).map_err(e)?);
    }
    let null_max = null.iter().copied().fold(0.0, f64::max);
    ensure(null_max <= 0.01, format!("permutation null reaches {null_max}"))?;
    Ok(format!("I(f,f)-H(f) = {:.1e}, I(f,g) = {mi:.5}, null max {null_max:.5}", self_mi - h))
}

fn c6() -> Check {
    let n = 4096u32;
    let f: Vec<u32> = (0..n).map(|i| i & 1).collect();
    let g: Vec<u32> = (0..n).map(|i| (i >> 1) & 1).collect();
    let y: Vec<u32> = f.iter().zip(&g).map(|(a, b)| a ^ b).collect();
    let i_fy = mutual_information(&f, &y).map_err(e)?;
    let i_fyg = conditional_mutual_information(&f, &y, &[&g]).map_err(e)?;
    ensure(i_fy <= 0.02 && i_fyg >= 0.98, format!("I(f;y) = {i_fy}, I(f;y|g) = {i_fyg}"))?;
    Ok(format!("I(f;y) = {i_fy:.4}, I(f;y|g) = {i_fyg:.4}"))
}

fn c7() -> Check {
    let mut r = rng::seeded(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let n = r.random_range(2..=50);
        let m = r.random_range(1..=6);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.random_range(-5.0..5.0)).collect()).collect();
        let x = FeatureMatrix::from_rows(&rows).map_err(e)?;
        let got = avg_pairwise_distance(&x, DistanceMetric::Euclidean, None, 0).map_err(e)?;
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in 0..n {
                if i < j {
                    let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).powi(2)).sum();
                    sum += d.sqrt();
                    pairs += 1;
                }
            }
        }
        worst = worst.max((got - sum / pairs as f64).abs());
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn c8() -> Check {
    let spec = MlpSpec {
        layer_sizes: vec![4, 6, 3],
        activation: Activation::Tanh,
        seed: 8,
        learning_rate: 0.1,
        epochs: 1,
        batch_size: 5,
    };
    let mut r = rng::seeded(8);
    let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let x = FeatureMatrix::from_rows(&rows).map_err(e)?;
    let y = LabelVector::new(vec![0, 1, 2, 1, 0], 3).map_err(e)?;
    let params = ParamVector::init(&spec).map_err(e)?;
    let (_, grad) = loss_and_gradient(&spec, &params, &x, &y).map_err(e)?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let mut plus = params.clone();
        plus.values_mut()[i] += h;
        let mut minus = params.clone();
        minus.values_mut()[i] -= h;
        let lp = loss_and_gradient(&spec, &plus, &x, &y).map_err(e)?.0;
        let lm = loss_and_gradient(&spec, &minus, &x, &y).map_err(e)?.0;
        let numeric = (lp - lm) / (2.0 * h);
        let rel = (grad[i] - numeric).abs() / (grad[i].abs() + numeric.abs()).max(1e-8);
        worst = worst.max(rel);
    }
    ensure(worst <= 1e-4, format!("max relative error {worst:e}"))?;
    Ok(format!("{} parameters, max relative error {worst:.1e}", params.len()))
}

fn blobs(n: usize, dims: usize, seed: u64) -> (FeatureMatrix, LabelVector) {
    let mut r = rng::seeded(seed);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        let shift = if c == 0 { -2.0 } else { 2.0 };
        rows.push((0..dims).map(|_| { let z: f64 = StandardNormal.sample(&mut r); shift + z * 0.5 }).collect::<Vec<f64>>());
        y.push(c);
    }
    (FeatureMatrix::from_rows(&rows).unwrap(), LabelVector::new(y, 2).unwrap())
}

fn c9() -> Check {
    let mut passes = 0;
    let mut notes = Vec::new();
    for seed in 1..=3u64 {
        let (x, y) = blobs(2000, 8, seed);
        let split = stratified_split(&y, SplitRatios::default(), seed).map_err(e)?;
        let cfg = ModelConfig {
            hidden: vec![64],
            epochs: 30,
            ..ModelConfig::default()
        };
        let (xt, yt) = (x.select_rows(&split.train).map_err(e)?, y.select(&split.train));
        let (xv, yv) = (x.select_rows(&split.val).map_err(e)?, y.select(&split.val));
        let m = fit_and_score(&cfg, &xt, &yt, &xv, &yv, seed).map_err(e)?;
        let xs = m.scaler.apply(&xv).map_err(e)?;
        let out = l1_prune_search(&m.params, &m.spec, &xs, &yv, 0.01, 0.01).map_err(e)?;
        let sparsity = out.mask.sparsity();
        let ok = sparsity >= 0.70 && out.pruned.value >= out.baseline.value - 0.01;
        passes += usize::from(ok);
        notes.push(format!("seed {seed}: sparsity {sparsity:.3}, acc {:.3}->{:.3}", out.baseline.value, out.pruned.value));
    }
    ensure(passes >= 2, notes.join("; "))?;
    Ok(format!("{passes}/3 seeds; {}", notes.join("; ")))
}

fn uniform_rows(n: usize, m: usize, r: &mut rng::Rng) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..m).map(|_| r.random_range(-1.0..1.0)).collect()).collect()
}

fn c10() -> Check {
    let cfg = ModelConfig::default();
    let n = 600;
    let mut tally = [0usize; 3];
    for seed in 1..=3u64 {
        let mut r = rng::seeded(100 + seed);
        let v = uniform_rows(n, 2, &mut r);
        let y: Vec<usize> = v.iter().map(|p| usize::from(p[0] + p[1] > 0.0)).collect();
        let y = LabelVector::new(y, 2).map_err(e)?;
        let xv = FeatureMatrix::from_rows(&v).map_err(e)?;

        // audio is a deterministic function of the video features
        let a: Vec<Vec<f64>> = v.iter().map(|p| vec![p[0] + p[1], (p[0] - p[1]).tanh()]).collect();
        let out = recommend_sensor_removal(&xv, &FeatureMatrix::from_rows(&a).map_err(e)?, &y, &cfg, seed)
            .map_err(e)?;
        tally[0] += usize::from(out.audio.recommendation == Recommendation::RemovableAtInference);

        // video is noise, audio carries the label
        let noise = FeatureMatrix::from_rows(&uniform_rows(n, 2, &mut r)).map_err(e)?;
        let out = recommend_sensor_removal(&noise, &xv, &y, &cfg, seed).map_err(e)?;
        tally[1] += usize::from(
            out.visual.recommendation == Recommendation::RemovableAtInference
                && out.audio.recommendation == Recommendation::Keep,
        );

        // each sensor holds one half of an XOR label
        let p = uniform_rows(n, 1, &mut r);
        let q = uniform_rows(n, 1, &mut r);
        let yx: Vec<usize> = p.iter().zip(&q).map(|(a, b)| usize::from((a[0] > 0.0) != (b[0] > 0.0))).collect();
        let xor_cfg = ModelConfig {
            epochs: 200,
            ..ModelConfig::default()
        };
        let out = recommend_sensor_removal(
            &FeatureMatrix::from_rows(&p).map_err(e)?,
            &FeatureMatrix::from_rows(&q).map_err(e)?,
            &LabelVector::new(yx, 2).map_err(e)?,
            &xor_cfg,
            seed,
        )
        .map_err(e)?;
        tally[2] += usize::from(
            out.visual.recommendation == Recommendation::Keep && out.audio.recommendation == Recommendation::Keep,
        );
    }
    let msg = format!(
        "redundant audio {}/3, redundant video {}/3, XOR {}/3",
        tally[0], tally[1], tally[2]
    );
    ensure(tally.iter().all(|&t| t >= 2), msg.clone())?;
    Ok(msg)
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

// Andrew's monotone chain, counter-clockwise.
fn hull(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn c11() -> Check {
    let mut r = rng::seeded(11);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (class, count, centre) in [(0usize, 3260usize, 0.0), (1, 1585, 3.0)] {
        for _ in 0..count {
            let a: f64 = StandardNormal.sample(&mut r);
            let b: f64 = StandardNormal.sample(&mut r);
            rows.push(vec![centre + a, centre + 0.5 * b]);
            y.push(class);
        }
    }
    let x = FeatureMatrix::from_rows(&rows).map_err(e)?;
    let y = LabelVector::new(y, 2).map_err(e)?;
    let (xs, ys) = smote_oversample(&x, &y, 1.0, 5, 11).map_err(e)?;
    let counts = ys.counts();
    let ratio = *counts.iter().max().unwrap() as f64 / *counts.iter().min().unwrap() as f64;
    ensure((0.99..=1.01).contains(&ratio), format!("disparity {ratio}"))?;
    let minority: Vec<[f64; 2]> = rows.iter().zip(y.labels()).filter(|(_, &l)| l == 1).map(|(p, _)| [p[0], p[1]]).collect();
    let h = hull(minority);
    let outside = (x.rows()..xs.rows())
        .filter(|&i| {
            let p = [xs.row(i)[0], xs.row(i)[1]];
            (0..h.len()).any(|k| cross(h[k], h[(k + 1) % h.len()], p) < -1e-9)
        })
        .count();
    ensure(outside == 0, format!("{outside} synthetic points outside the hull"))?;
    Ok(format!("counts {counts:?}, disparity {ratio:.4}, {} synthetic inside hull", xs.rows() - x.rows()))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_mlrm")).args(args).output().map_err(e)?;
    ensure(
        out.status.success(),
        format!("mlrm {} exited {:?}: {}", args.join(" "), out.status.code(), String::from_utf8_lossy(&out.stderr)),
    )
}

fn pipeline_report(dir: &Path, report: &str) -> Result<Value, String> {
    let d = dir.to_str().unwrap();
    run_cli(&[
        "pipeline",
        "run",
        "--config",
        &format!("{d}/config.json"),
        "--manifest",
        &format!("{d}/manifest.json"),
        "--out",
        &format!("{d}/{report}"),
    ])?;
    serde_json::from_str(&std::fs::read_to_string(dir.join(report)).map_err(e)?).map_err(e)
}

fn c12(dir: &Path) -> Check {
    let d = dir.to_str().unwrap();
    run_cli(&["gen", "synthetic", "--out", d, "--seed", "12"])?;
    let report = pipeline_report(dir, "a.json")?;
    let stages = report["stages"].as_array().ok_or("no stages")?;
    ensure(stages.len() == 9, format!("{} stage records", stages.len()))?;
    let fe = stages.iter().find(|s| s["stage"] == "feature_extract").ok_or("no feature_extract")?;
    let chosen = &fe["inputs"]["sweep"]["visual"]["recommended"];
    ensure(chosen == 80, format!("recommended size {chosen}"))?;
    let (bin, bout) = (fe["bytes_in"].as_u64().unwrap(), fe["bytes_out"].as_u64().unwrap());
    ensure(bout > 0 && bin == 16 * bout, format!("bytes {bin} -> {bout}"))?;
    let mut checked = 0;
    for s in stages {
        ensure(s["status"] == "ok", format!("{} status {}", s["stage"], s["status"]))?;
        let (Some(b), Some(a), Some(r)) = (s["p_before"].as_f64(), s["p_after"].as_f64(), s["r"].as_f64()) else {
            continue;
        };
        let dir = match s["direction"].as_str() {
            Some("higher_is_better") => Direction::HigherIsBetter,
            Some("lower_is_better") => Direction::LowerIsBetter,
            other => return Err(format!("{} direction {other:?}", s["stage"])),
        };
        let again = redundancy_index_eps(b, a, dir, report["epsilon"].as_f64().unwrap()).map_err(e)?.r;
        ensure((again - r).abs() <= 1e-9, format!("{}: R {r} vs recomputed {again}", s["stage"]))?;
        checked += 1;
    }
    Ok(format!("size 80 chosen, pixel bytes {bin} -> {bout} (x{}), {checked} R values recomputed", bin / bout))
}

fn strip_clock(mut v: Value) -> String {
    for s in v["stages"].as_array_mut().into_iter().flatten() {
        s["wall_clock_ms"] = Value::Null;
    }
    serde_json::to_string(&v).unwrap()
}

fn c13(dir: &Path) -> Check {
    let a = strip_clock(pipeline_report(dir, "a.json")?);
    let b = strip_clock(pipeline_report(dir, "b.json")?);
    ensure(a == b, "reports differ")?;
    Ok(format!("{} bytes identical", a.len()))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path().to_path_buf();
    let checks: Vec<(&str, Duration, Box<dyn Fn() -> Check>)> = vec![
        ("1 performance-delta arithmetic", Duration::from_millis(1), Box::new(c1)),
        ("2 removal-form arithmetic", Duration::from_millis(1), Box::new(c2)),
        ("3 downscale min-entropy index", Duration::from_millis(1), Box::new(c3)),
        ("4 size sweep discriminates", Duration::from_secs(30), Box::new(c4)),
        ("5 MI estimator oracles", Duration::from_secs(5), Box::new(c5)),
        ("6 XOR conditional MI", Duration::from_secs(5), Box::new(c6)),
        ("7 pairwise diversity oracle", Duration::from_secs(5), Box::new(c7)),
        ("8 MLP gradient check", Duration::from_secs(5), Box::new(c8)),
        ("9 pruning sparsity", Duration::from_secs(60), Box::new(c9)),
        ("10 sensor-removal verdicts", Duration::from_secs(120), Box::new(c10)),
        ("11 SMOTE rebalancing", Duration::from_secs(10), Box::new(c11)),
        ("12 end-to-end pipeline", Duration::from_secs(300), Box::new({
            let d = dir.clone();
            move || c12(&d)
        })),
        ("13 determinism", Duration::from_secs(300), Box::new({
            let d = dir.clone();
            move || c13(&d)
        })),
    ];
    let mut failed = 0;
    for (name, budget, check) in checks {
        let t = Instant::now();
        let res = check();
        let took = t.elapsed();
        let res = match res {
            Ok(m) if took > budget => Err(format!("{m}; took {took:?}, budget {budget:?}")),
            other => other,
        };
        match res {
            Ok(m) => println!("PASS  {name}: {m} [{took:.2?}]"),
            Err(m) => {
                failed += 1;
                println!("FAIL  {name}: {m} [{took:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 13 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
