use cornercase_core::corruption::{apply_fog, apply_gaussian_noise, apply_pipeline, apply_white_box, white_box_rect, CorruptionKind, CorruptionSpec};
use cornercase_core::density::{build_knn_index, fit_gmm, score_gmm, score_knn, GmmConfig};
use cornercase_core::encoder::toy_encode;
use cornercase_core::metrics::{aupr, auroc, fpr_at_tpr, DetectionReport, LabeledScores, Positive};
use cornercase_core::stats::correlation::correlation_p_value;
use cornercase_core::stats::{pca_fit, pca_transform, pearson, spearman};
use cornercase_core::uncertainty::{dirichlet_uncertainty, mean_uncertainty, DirichletParams, UncertaintyMap};
use cornercase_core::{pool_spatial_mean, DepthMap, EmbeddingSet, EmbeddingVector, FeatureMap, ImageBuffer};
use proptest::prelude::*;

/// Scores on a coarse grid so ties are common.
fn scores(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-40i32..40).prop_map(|v| v as f64 / 8.0), 1..max)
}

fn labeled() -> impl Strategy<Value = LabeledScores> {
    (scores(60), scores(60)).prop_map(|(a, b)| LabeledScores::new(a, b).unwrap())
}

fn all_metrics(s: &LabeledScores) -> [f64; 4] {
    let r = DetectionReport::compute(s).unwrap();
    [r.fpr_at_95, r.auroc, r.aupr_in, r.aupr_out]
}

fn set_from(rows: &[Vec<f64>]) -> EmbeddingSet {
    EmbeddingSet::new(rows.iter().enumerate().map(|(i, v)| EmbeddingVector::new(format!("r{i}"), v.clone()).unwrap()).collect()).unwrap()
}

fn points(n: std::ops::Range<usize>, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0..5.0f64, dim), n)
}

fn image(max_side: usize) -> impl Strategy<Value = ImageBuffer> {
    (4..max_side, 4..max_side).prop_flat_map(|(h, w)| {
        prop::collection::vec(0.0..=1.0f64, h * w * 3).prop_map(move |px| ImageBuffer::new(h, w, px).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metrics_are_rank_invariant(s in labeled()) {
        let base = all_metrics(&s);
        let transforms: [fn(f64) -> f64; 3] = [f64::exp, |v| 3.0 * v + 2.0, |v| v * v * v];
        for f in transforms {
            let t = all_metrics(&s.map(f).unwrap());
            for (a, b) in base.iter().zip(&t) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn auroc_complements(s in labeled()) {
        let a = auroc(&s);
        prop_assert!((a + auroc(&s.swapped()) - 100.0).abs() < 1e-9);
        prop_assert!((a + auroc(&s.map(|v| -v).unwrap()) - 100.0).abs() < 1e-9);
        prop_assert!((a - auroc(&s.swapped().map(|v| -v).unwrap())).abs() < 1e-9);
    }

    #[test]
    fn fpr_falls_with_lower_target(s in labeled(), lo in 0.05..1.0f64, hi in 0.05..1.0f64) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        prop_assert!(fpr_at_tpr(&s, lo).unwrap() <= fpr_at_tpr(&s, hi).unwrap());
    }

    #[test]
    fn report_fields_are_percentages(s in labeled()) {
        for v in all_metrics(&s) {
            prop_assert!((0.0..=100.0).contains(&v));
        }
        prop_assert!((0.0..=100.0).contains(&aupr(&s, Positive::Out)));
    }

    #[test]
    fn pooling_is_linear(
        (c, hw, a_data, b_data) in (1..5usize, 1..40usize).prop_flat_map(|(c, hw)| {
            (Just(c), Just(hw), prop::collection::vec(-10.0..10.0f64, c * hw), prop::collection::vec(-10.0..10.0f64, c * hw))
        }),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let mix: Vec<f64> = a_data.iter().zip(&b_data).map(|(x, y)| a * x + b * y).collect();
        let pa = pool_spatial_mean("a", &FeatureMap::new(c, 1, hw, a_data).unwrap()).unwrap();
        let pb = pool_spatial_mean("b", &FeatureMap::new(c, 1, hw, b_data).unwrap()).unwrap();
        let pm = pool_spatial_mean("m", &FeatureMap::new(c, 1, hw, mix).unwrap()).unwrap();
        for i in 0..c {
            let want = a * pa.values()[i] + b * pb.values()[i];
            prop_assert!((pm.values()[i] - want).abs() <= 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn pooling_ignores_spatial_order(data in prop::collection::vec(-10.0..10.0f64, 2 * 12), perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle()) {
        let mut shuffled = data.clone();
        for c in 0..2 {
            for (dst, &src) in perm.iter().enumerate() {
                shuffled[c * 12 + dst] = data[c * 12 + src];
            }
        }
        let a = pool_spatial_mean("a", &FeatureMap::new(2, 3, 4, data).unwrap()).unwrap();
        let b = pool_spatial_mean("b", &FeatureMap::new(2, 3, 4, shuffled).unwrap()).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_encoder_is_pure(img in image(20)) {
        let a = toy_encode("x", &img, 2).unwrap();
        let b = toy_encode("x", &img, 2).unwrap();
        prop_assert_eq!(a.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn em_never_decreases_and_is_deterministic(rows in points(10..80, 3), k in 1..4usize, seed in any::<u64>()) {
        let set = set_from(&rows);
        let cfg = GmmConfig { components: k, seed, ..GmmConfig::default() };
        let fit = fit_gmm(&set, &cfg).unwrap();
        for w in fit.log_likelihood.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9);
        }
        let again = fit_gmm(&set, &cfg).unwrap();
        prop_assert_eq!(&fit.model, &again.model);
        prop_assert_eq!(&fit.log_likelihood, &again.log_likelihood);
    }

    #[test]
    fn scores_are_translation_consistent(rows in points(20..60, 3), q in prop::collection::vec(-5.0..5.0f64, 3), shift in prop::collection::vec(-20.0..20.0f64, 3)) {
        let moved: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let qm: Vec<f64> = q.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let (z, zm) = (EmbeddingVector::new("q", q).unwrap(), EmbeddingVector::new("q", qm).unwrap());

        let knn = score_knn(&build_knn_index(&set_from(&rows), 5).unwrap(), &z).unwrap().score;
        let knn_m = score_knn(&build_knn_index(&set_from(&moved), 5).unwrap(), &zm).unwrap().score;
        prop_assert!((knn - knn_m).abs() <= 1e-9 * knn.abs().max(1.0));

        let cfg = GmmConfig { components: 1, ..GmmConfig::default() };
        let g = score_gmm(&fit_gmm(&set_from(&rows), &cfg).unwrap().model, &z).unwrap().score;
        let gm = score_gmm(&fit_gmm(&set_from(&moved), &cfg).unwrap().model, &zm).unwrap().score;
        prop_assert!((g - gm).abs() <= 1e-9 * g.abs().max(1.0));
    }

    #[test]
    fn scores_fall_along_far_rays(rows in points(20..40, 2), dir in prop::collection::vec(-1.0..1.0f64, 2)) {
        prop_assume!(dir.iter().map(|v| v * v).sum::<f64>() > 0.01);
        let set = set_from(&rows);
        let gmm = fit_gmm(&set, &GmmConfig { components: 2, ..GmmConfig::default() }).unwrap().model;
        let knn = build_knn_index(&set, 3).unwrap();
        let at = |t: f64| EmbeddingVector::new("p", dir.iter().map(|d| d * t).collect()).unwrap();
        let mut prev: Option<(f64, f64)> = None;
        for step in 0..10 {
            let z = at(100.0 + 50.0 * step as f64);
            let cur = (score_gmm(&gmm, &z).unwrap().score, score_knn(&knn, &z).unwrap().score);
            if let Some(p) = prev {
                prop_assert!(cur.0 < p.0 && cur.1 < p.1);
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn uncertainty_scales_inversely(kappa in prop::collection::vec(0.01..50.0f64, 2..6), exp in -8i32..8, c in 0.01..100.0f64) {
        let p = DirichletParams::new(kappa).unwrap();
        let u = dirichlet_uncertainty(&p);
        // Powers of two scale every partial sum exactly.
        let two = 2f64.powi(exp);
        prop_assert_eq!(dirichlet_uncertainty(&p.scaled(two).unwrap()), u / two);
        let uc = dirichlet_uncertainty(&p.scaled(c).unwrap());
        prop_assert!((uc - u / c).abs() <= 1e-12 * (u / c));
    }

    #[test]
    fn mean_uncertainty_tiles(values in prop::collection::vec(0.0..=1.0f64, 8 * 6), split_r in 1..8usize, split_c in 1..6usize, perm in Just((0..48).collect::<Vec<usize>>()).prop_shuffle()) {
        let whole = mean_uncertainty("w", &UncertaintyMap::new(8, 6, values.clone()).unwrap()).score;
        let shuffled: Vec<f64> = perm.iter().map(|&i| values[i]).collect();
        prop_assert!((whole - mean_uncertainty("s", &UncertaintyMap::new(8, 6, shuffled).unwrap()).score).abs() < 1e-12);
        let mut acc = 0.0;
        for (r0, r1) in [(0, split_r), (split_r, 8)] {
            for (c0, c1) in [(0, split_c), (split_c, 6)] {
                let tile: Vec<f64> = (r0..r1).flat_map(|r| (c0..c1).map(move |c| (r, c))).map(|(r, c)| values[r * 6 + c]).collect();
                let m = UncertaintyMap::new(r1 - r0, c1 - c0, tile).unwrap();
                acc += m.mean() * ((r1 - r0) * (c1 - c0)) as f64 / 48.0;
            }
        }
        prop_assert!((acc + whole).abs() < 1e-12);
    }

    #[test]
    fn fog_is_monotone_and_convex(img in image(12), b1 in 0.0..0.05f64, b2 in 0.0..0.05f64, a in 0.0..=1.0f64) {
        let depth = DepthMap::road_ramp(img.height(), img.width());
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let f_lo = apply_fog(&img, &depth, lo, a).unwrap();
        for ((&j, &o), _) in img.pixels().iter().zip(f_lo.pixels()).zip(0..) {
            prop_assert!(o >= j.min(a) && o <= j.max(a));
        }
        // Monotone in β when A dominates scene radiance.
        let light = 1.0;
        let m_lo = apply_fog(&img, &depth, lo, light).unwrap();
        let m_hi = apply_fog(&img, &depth, hi, light).unwrap();
        for (x, y) in m_lo.pixels().iter().zip(m_hi.pixels()) {
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn white_box_touches_only_the_box(img in image(24), f in 0.0..=0.5f64, seed in any::<u64>()) {
        let out = apply_white_box(&img, f, seed).unwrap();
        let rect = white_box_rect(img.height(), img.width(), f, seed).unwrap();
        for r in 0..img.height() {
            for c in 0..img.width() {
                let inside = rect.is_some_and(|b| r >= b.top && r < b.top + b.height && c >= b.left && c < b.left + b.width);
                if inside {
                    prop_assert_eq!(out.pixel(r, c), [1.0; 3]);
                } else {
                    prop_assert_eq!(out.pixel(r, c), img.pixel(r, c));
                }
            }
        }
    }

    #[test]
    fn corruptions_are_deterministic(img in image(12), sigma in 0.0..0.1f64, seed in any::<u64>()) {
        prop_assert_eq!(apply_gaussian_noise(&img, sigma, seed).unwrap(), apply_gaussian_noise(&img, sigma, seed).unwrap());
        prop_assert_eq!(apply_white_box(&img, 0.1, seed).unwrap(), apply_white_box(&img, 0.1, seed).unwrap());
    }

    #[test]
    fn correlations_ignore_positive_affine_maps(
        xy in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..50),
        a in 0.1..10.0f64, b in -5.0..5.0f64,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        prop_assume!(x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0]));
        let xt: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        prop_assert!((pearson(&x, &y).unwrap().coefficient - pearson(&xt, &y).unwrap().coefficient).abs() < 1e-12);
        prop_assert!((spearman(&x, &y).unwrap().coefficient - spearman(&xt, &y).unwrap().coefficient).abs() < 1e-12);
    }

    #[test]
    fn spearman_is_pearson_on_ranks(perm in Just((1..=30).map(f64::from).collect::<Vec<f64>>()).prop_shuffle()) {
        let x: Vec<f64> = (1..=30).map(f64::from).collect();
        prop_assert!((spearman(&x, &perm).unwrap().coefficient - pearson(&x, &perm).unwrap().coefficient).abs() < 1e-15);
    }

    #[test]
    fn p_values_fall_with_strength_and_size(r1 in 0.01..0.99f64, r2 in 0.01..0.99f64, n in 4..200usize) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(correlation_p_value(hi, n) <= correlation_p_value(lo, n));
        prop_assert!(correlation_p_value(lo, n + 1) <= correlation_p_value(lo, n));
    }

    #[test]
    fn pca_axes_are_uncorrelated(rows in points(8..40, 5), k in 1..5usize) {
        let set = set_from(&rows);
        let k = k.min(rows.len() - 1);
        let model = pca_fit(&set, k).unwrap();
        let ev = model.explained_variance();
        prop_assert!(ev.iter().all(|&v| v >= 0.0));
        prop_assert!(ev.windows(2).all(|w| w[0] >= w[1]));
        let coords: Vec<Vec<f64>> = set.iter().map(|z| pca_transform(&model, z).unwrap().into_values()).collect();
        let n = coords.len() as f64;
        for i in 0..k {
            for j in (i + 1)..k {
                let cov = coords.iter().map(|c| c[i] * c[j]).sum::<f64>() / (n - 1.0);
                prop_assert!(cov.abs() < 1e-8 * ev[0].max(1.0));
            }
        }
    }
}

#[test]
fn corruption_order_matters() {
    let img = ImageBuffer::filled(8, 8, [0.95; 3]).unwrap();
    let fog = CorruptionSpec::new(CorruptionKind::Fog, 0.01, 0).unwrap();
    let noise = CorruptionSpec::new(CorruptionKind::GaussianNoise, 0.2, 1).unwrap();
    let a = apply_pipeline(&img, &[fog, noise], None).unwrap();
    let b = apply_pipeline(&img, &[noise, fog], None).unwrap();
    assert_ne!(a, b);
}
