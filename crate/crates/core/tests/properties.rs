//! Cross-module invariants checked through the public API.

use mlrm_core::feature::{cmi_gain, pca_fit, pca_transform, select_features, FeatureSubset, Scorer, SelectionMode, Stop};
use mlrm_core::metrics::{redundancy_index_eps, DistanceMetric};
use mlrm_core::model::{
    evaluate_masked, evaluate_model, l1_prune_search, submodule_param_distance, train_mlp, Activation, MlpSpec,
    ParamVector, PruneMask, Submodule,
};
use mlrm_core::sample::{greedy_diverse_subset, group_stats, smote_oversample, GridFrame, SubgroupPartition};
use mlrm_core::signal::{avg_pool_downscale, image_entropy, register_streams, AudioClip, ImageFrame, SensorStream};
use mlrm_core::{rng, Direction, FeatureMatrix, LabelVector};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn points(n: std::ops::Range<usize>, m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, m), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_is_strictly_monotone(before in 0.01f64..10.0, a in 0.0f64..10.0, d in 0.001f64..5.0) {
        let up = |after: f64, dir| redundancy_index_eps(before, after, dir, 1e-12).unwrap().r;
        prop_assert!(up(a + d, Direction::HigherIsBetter) < up(a, Direction::HigherIsBetter));
        prop_assert!(up(a + d, Direction::LowerIsBetter) > up(a, Direction::LowerIsBetter));
        prop_assert_eq!(up(before, Direction::HigherIsBetter), 1.0);
    }

    #[test]
    fn second_greedy_pick_is_farthest_from_the_seed(rows in points(2..12, 3)) {
        let x = matrix(&rows);
        let picked = greedy_diverse_subset(&x, 2, DistanceMetric::Euclidean, 0).unwrap();
        let centroid = x.column_means();
        let seed_d = rows.iter().map(|r| dist(r, &centroid)).fold(f64::INFINITY, f64::min);
        let got = dist(&rows[picked[0]], &rows[picked[1]]);
        // brute force over every pair containing a centroid-nearest row
        let best = (0..rows.len())
            .filter(|&i| dist(&rows[i], &centroid) == seed_d)
            .flat_map(|i| (0..rows.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| dist(&rows[i], &rows[j]))
            .fold(0.0, f64::max);
        prop_assert!((got - best).abs() <= 1e-12 * best.max(1.0), "{} vs {}", got, best);
    }

    #[test]
    fn smote_stays_in_the_minority_hull(rows in points(4..15, 2), seed in 0u64..1000) {
        // minority points lie on a segment so the hull test is exact
        let majority: Vec<Vec<f64>> = (0..30).map(|i| vec![100.0 + i as f64, 0.0]).collect();
        let line: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[0], 2.0 * r[0] + 1.0]).collect();
        let (lo, hi) = line.iter().fold((f64::MAX, f64::MIN), |(l, h), r| (l.min(r[0]), h.max(r[0])));
        let mut all = majority.clone();
        all.extend(line.clone());
        let y = LabelVector::new([vec![0; 30], vec![1; line.len()]].concat(), 2).unwrap();
        let (xs, _) = smote_oversample(&matrix(&all), &y, 1.0, 3, seed).unwrap();
        for i in all.len()..xs.rows() {
            let p = xs.row(i);
            prop_assert!(p[0] >= lo - 1e-9 && p[0] <= hi + 1e-9);
            prop_assert!((p[1] - (2.0 * p[0] + 1.0)).abs() <= 1e-9);
        }
    }

    #[test]
    fn group_rates_and_disparity(counts in prop::collection::vec(1usize..500, 2..6)) {
        let named: Vec<(String, usize)> = counts.iter().enumerate().map(|(i, &c)| (format!("g{i}"), c)).collect();
        let s = group_stats(&SubgroupPartition::from_counts(&named).unwrap()).unwrap();
        prop_assert!((s.rates.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for i in 0..counts.len() {
            for j in 0..counts.len() {
                prop_assert!((s.disparity[i][j] * s.disparity[j][i] - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn coverage_never_shrinks_when_rows_are_added(base in points(5..40, 3), extra in points(1..20, 3)) {
        let x0 = matrix(&base);
        let frame = GridFrame::fit(&x0, 3, 4).unwrap();
        let mut all = base.clone();
        all.extend(extra);
        let before = frame.coverage(&x0).unwrap().fraction;
        let after = frame.coverage(&matrix(&all)).unwrap().fraction;
        prop_assert!(after >= before);
    }

    #[test]
    fn pooling_identity_and_composition(w in 1usize..6, h in 1usize..6, seed in 0u64..1000) {
        let (w, h) = (4 * w, 4 * h);
        let mut r = rng::seeded(seed);
        let px: Vec<u8> = (0..w * h).map(|_| r.random()).collect();
        let img = ImageFrame::new(w, h, px, 0.0).unwrap();
        prop_assert_eq!(&avg_pool_downscale(&img, 1).unwrap(), &img);
        let twice = avg_pool_downscale(&avg_pool_downscale(&img, 2).unwrap(), 2).unwrap();
        let once = avg_pool_downscale(&img, 4).unwrap();
        prop_assert_eq!((twice.width(), twice.height()), (once.width(), once.height()));
        for (a, b) in twice.pixels().iter().zip(once.pixels()) {
            prop_assert!(a.abs_diff(*b) <= 1);
        }
    }

    #[test]
    fn entropy_ignores_pixel_positions(px in prop::collection::vec(any::<u8>(), 64), seed in 0u64..1000) {
        let mut shuffled = px.clone();
        shuffled.shuffle(&mut rng::seeded(seed));
        let a = image_entropy(&ImageFrame::new(8, 8, px, 0.0).unwrap());
        let b = image_entropy(&ImageFrame::new(8, 8, shuffled, 0.0).unwrap());
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn param_distance_is_a_metric(seeds in prop::array::uniform3(0u64..1000)) {
        let mk = |s: u64| {
            let spec = tiny_spec(s, Activation::ReLU);
            Submodule { id: s as usize, params: ParamVector::init(&spec).unwrap(), spec }
        };
        let [a, b, c] = seeds.map(mk);
        let ab = submodule_param_distance(&a, &b).unwrap();
        prop_assert_eq!(ab, submodule_param_distance(&b, &a).unwrap());
        let ac = submodule_param_distance(&a, &c).unwrap();
        let cb = submodule_param_distance(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }
}

fn tiny_spec(seed: u64, activation: Activation) -> MlpSpec {
    MlpSpec {
        layer_sizes: vec![3, 5, 2],
        activation,
        seed,
        learning_rate: 0.1,
        epochs: 40,
        batch_size: 8,
    }
}

fn two_class(n: usize, m: usize, seed: u64) -> (FeatureMatrix, LabelVector) {
    let mut r = rng::seeded(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let y = rows.iter().map(|p| usize::from(p[0] + 0.5 * p[1] > 0.0)).collect();
    (matrix(&rows), LabelVector::new(y, 2).unwrap())
}

#[test]
fn training_is_bitwise_reproducible() {
    let (x, y) = two_class(120, 3, 1);
    let spec = tiny_spec(9, Activation::Tanh);
    let (a, _) = train_mlp(&spec, &x, &y).unwrap();
    let (b, _) = train_mlp(&spec, &x, &y).unwrap();
    let bits = |p: &ParamVector| p.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn masked_evaluation_equals_zeroed_parameters() {
    let (x, y) = two_class(200, 3, 2);
    let spec = tiny_spec(3, Activation::ReLU);
    let (params, _) = train_mlp(&spec, &x, &y).unwrap();
    let mut r = rng::seeded(4);
    let chosen: Vec<usize> = (0..params.len()).filter(|&i| !params.is_bias(i) && r.random_bool(0.5)).collect();
    let mask = PruneMask::pruning(&params, &chosen);
    let mut zeroed = params.clone();
    for &i in &chosen {
        zeroed.values_mut()[i] = 0.0;
    }
    assert_eq!(
        evaluate_masked(&params, &mask, &spec, &x, &y).unwrap(),
        evaluate_model(&zeroed, &spec, &x, &y).unwrap()
    );
}

#[test]
fn prune_search_result_is_maximal_on_its_grid() {
    let (x, y) = two_class(300, 3, 5);
    let spec = MlpSpec {
        layer_sizes: vec![3, 32, 2],
        ..tiny_spec(6, Activation::ReLU)
    };
    let (params, _) = train_mlp(&spec, &x, &y).unwrap();
    let (step, tol) = (0.01, 0.01);
    let out = l1_prune_search(&params, &spec, &x, &y, step, tol).unwrap();
    assert!(out.pruned.value >= out.baseline.value - tol - 1e-12);
    // the next grid point must fail the tolerance test, recomputed here
    let next = out.weight_fraction + step;
    if next < 1.0 - 1e-12 {
        let mut ranked: Vec<usize> = (0..params.len()).filter(|&i| !params.is_bias(i)).collect();
        let v = params.values();
        ranked.sort_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(a.cmp(&b)));
        let n = (next * ranked.len() as f64).round() as usize;
        let acc = evaluate_masked(&params, &PruneMask::pruning(&params, &ranked[..n]), &spec, &x, &y).unwrap();
        let later_ok = out.curve.iter().any(|&(f, a)| f > out.weight_fraction + 1e-12 && a >= out.baseline.value - tol - 1e-12);
        assert!(!later_ok);
        assert!(acc.value < out.baseline.value - tol - 1e-12 || n == 0);
    }
}

#[test]
fn pca_scores_have_the_explained_variances() {
    let mut r = rng::seeded(7);
    let rows: Vec<Vec<f64>> = (0..300)
        .map(|_| {
            let a: f64 = r.random_range(-3.0..3.0);
            let b: f64 = r.random_range(-1.0..1.0);
            vec![a + b, a - b, 0.5 * a, r.random_range(-0.1..0.1)]
        })
        .collect();
    let x = matrix(&rows);
    let model = pca_fit(&x, 3).unwrap();
    let z = pca_transform(&model, &x).unwrap();
    let n = z.rows() as f64;
    let trace: f64 = (0..x.cols())
        .map(|j| {
            let c = x.column(j);
            let m = c.iter().sum::<f64>() / n;
            c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .sum();
    for k in 0..3 {
        for l in 0..3 {
            let (ck, cl) = (z.column(k), z.column(l));
            let (mk, ml) = (ck.iter().sum::<f64>() / n, cl.iter().sum::<f64>() / n);
            let cov = ck.iter().zip(&cl).map(|(a, b)| (a - mk) * (b - ml)).sum::<f64>() / (n - 1.0);
            let want = if k == l { model.explained_variance[k] } else { 0.0 };
            assert!((cov - want).abs() <= 1e-6 * trace, "cov[{k}][{l}] = {cov}, want {want}");
        }
    }
}

#[test]
fn forward_selection_respects_min_gain_and_is_deterministic() {
    let mut r = rng::seeded(8);
    let n = 2000;
    let mut cols: Vec<Vec<f64>> = (0..4).map(|_| (0..n).map(|_| r.random_range(0.0..1.0)).collect()).collect();
    cols.push(cols[0].clone());
    let y: Vec<usize> = (0..n).map(|i| usize::from(cols[0][i] > 0.5) + usize::from(cols[1][i] > 0.5)).collect();
    let x = FeatureMatrix::from_columns(&cols).unwrap();
    let y = LabelVector::new(y, 3).unwrap();
    let stop = Stop { max_features: None, min_gain: Some(0.05) };
    let a = select_features(&x, &y, SelectionMode::Forward, stop, &Scorer::Cmi { bins: 4 }, 1).unwrap();
    let b = select_features(&x, &y, SelectionMode::Forward, stop, &Scorer::Cmi { bins: 4 }, 1).unwrap();
    assert_eq!(a, b);
    let mut chosen = Vec::new();
    for step in &a.trail {
        let given = FeatureSubset::new(chosen.clone(), x.cols()).unwrap();
        let g = cmi_gain(&x, step.feature, &y, &given, 4).unwrap();
        assert!(g >= 0.05, "gain {g}");
        assert!((g - step.gain).abs() < 1e-12);
        chosen.push(step.feature);
    }
    // the duplicate of column 0 carries nothing once column 0 is in
    assert!(!(a.subset.contains(0) && a.subset.contains(4)));
    assert!(a.subset.contains(1));
}

#[test]
fn registered_snippets_are_ordered_and_disjoint() {
    let frames: Vec<ImageFrame> = (0..20)
        .map(|i| ImageFrame::new(2, 2, vec![0; 4], i as f64 / 25.0).unwrap())
        .collect();
    let video = SensorStream::image(frames, 25.0).unwrap();
    let audio = SensorStream::audio(AudioClip::new(vec![0.0; 8000], 8000.0, 0.0).unwrap());
    let reg = register_streams(&video, &audio).unwrap();
    assert_eq!(reg.pairs.len(), 20);
    for w in reg.pairs.windows(2) {
        let (a, b) = (&w[0].snippet, &w[1].snippet);
        assert!(w[0].frame.timestamp() < w[1].frame.timestamp());
        assert!(a.start_time() + a.duration() <= b.start_time() + 1e-12);
    }
}
