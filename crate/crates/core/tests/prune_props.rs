use colloc_core::cluster::{Assignment, Point};
use colloc_core::config::ClusterChoice;
use colloc_core::prune::{is_retained, percent};
use colloc_core::{
    analyze, emit_candidates, emit_excluded, prune, FeaturePoint, Label, MeasureVector,
    MixtureModel, PipelineConfig, StopList, Summary,
};
use proptest::prelude::*;

fn model(centroids: Vec<Point>) -> MixtureModel {
    let k = centroids.len();
    MixtureModel {
        k,
        seed: 0,
        weights: vec![1.0 / k as f64; k],
        variances: vec![[0.01; 3]; k],
        centroids,
        log_likelihood: 0.0,
        iterations: 0,
        variance_floor: 1e-6,
    }
}

fn unit() -> impl Strategy<Value = f64> {
    0.0..=1.0f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn retained_iff_max_reaches_threshold(c in [unit(), unit(), unit()], t in unit(), t2 in unit()) {
        let max = c[0].max(c[1]).max(c[2]);
        prop_assert_eq!(is_retained(&c, t), max >= t);
        let (lo, hi) = if t <= t2 { (t, t2) } else { (t2, t) };
        if is_retained(&c, hi) {
            prop_assert!(is_retained(&c, lo));
        }
        let v = prune(&model(vec![c]), t);
        prop_assert_eq!(v[0].retained, max >= t);
        prop_assert_eq!(v[0].id, 1);
    }

    #[test]
    fn two_way_percentages_sum_to_100(total in 1usize..1_000_000, frac in 0.0..=1.0f64) {
        let kept = ((total as f64) * frac) as usize;
        let s = Summary::from_counts(total, kept, total - kept, 0).unwrap();
        prop_assert!((s.retained_pct + s.excluded_pct - 100.0).abs() <= 0.01 + 1e-9);
    }
}

#[test]
fn centroid_examples() {
    assert!(is_retained(&[0.32, 0.05, 0.02], 0.30));
    assert!(!is_retained(&[0.29, 0.29, 0.29], 0.30));
    assert!(is_retained(&[0.0, 0.0, 0.0], 0.0));
    assert!(is_retained(&[0.30, 0.0, 0.0], 0.30));
}

#[test]
fn summary_rounding() {
    let s = Summary::from_counts(20247, 13241, 7006, 0).unwrap();
    assert_eq!(format!("{:.2}", s.retained_pct), "65.40");
    assert_eq!(format!("{:.2}", s.excluded_pct), "34.60");
    assert_eq!(percent(10, 10), 100.0);
    assert_eq!(percent(1, 8), 12.5);
    assert_eq!(percent(1, 3), 33.33);
    assert_eq!(percent(2, 3), 66.67);
    assert!(Summary::from_counts(0, 0, 0, 0).is_err());
    assert!(Summary::from_counts(10, 3, 3, 3).is_err());
}

fn point(w1: &str, w2: &str, llr: f64) -> FeaturePoint {
    FeaturePoint {
        bigram: (w1.to_owned(), w2.to_owned()),
        count: 1,
        raw: MeasureVector {
            mi: 0.0,
            t: 0.0,
            llr,
            t_degenerate: false,
        },
        coords: [0.5; 3],
    }
}

#[test]
fn rows_order_by_cluster_then_llr_then_bigram() {
    let points = vec![
        point("b", "x", 2.0),
        point("a", "y", 2.0),
        point("c", "z", 9.0),
        point("d", "d", 1.0),
    ];
    let assignment = Assignment {
        k: 2,
        labels: vec![
            Label::Cluster(2),
            Label::Cluster(2),
            Label::Noise,
            Label::Cluster(1),
        ],
        responsibilities: vec![0.0, 1.0, 0.0, 1.0, 0.5, 0.5, 1.0, 0.0],
        log_densities: vec![0.0; 4],
        noise_cut: None,
    };
    let verdicts = prune(&model(vec![[0.5; 3], [0.5; 3]]), 0.3);
    let rows = emit_candidates(&points, &assignment, &verdicts);
    let order: Vec<_> = rows.iter().map(|r| (r.label, r.w1.as_str())).collect();
    assert_eq!(
        order,
        [
            (Label::Cluster(1), "d"),
            (Label::Cluster(2), "a"),
            (Label::Cluster(2), "b"),
            (Label::Noise, "c")
        ]
    );
    assert!(emit_excluded(&points, &assignment, &verdicts).is_empty());

    let verdicts = prune(&model(vec![[0.1; 3], [0.5; 3]]), 0.3);
    let excluded = emit_excluded(&points, &assignment, &verdicts);
    assert_eq!(excluded.len(), 1);
    assert_eq!(excluded[0].w1, "d");
}

#[test]
fn candidates_and_excluded_partition_the_points() {
    let mut text = String::new();
    for i in 0..400 {
        text.push_str(&format!("w{} w{} ", i % 17, (i * 7) % 23));
        if i % 5 == 0 {
            text.push_str("new york ");
        }
    }
    let stops: StopList = ["w3"].into_iter().collect();
    let mut prev_excluded = 0;
    for t in [0.0, 0.1, 0.3, 0.6, 1.0] {
        let cfg = PipelineConfig {
            clusters: ClusterChoice::Fixed(4),
            threshold: t,
            ..Default::default()
        };
        let a = analyze(&text, &stops, &cfg).unwrap();
        let n = a.features.points.len();
        assert_eq!(a.candidates.len() + a.excluded.len(), n);
        let mut seen: Vec<_> = a
            .candidates
            .iter()
            .chain(&a.excluded)
            .map(|r| (r.w1.clone(), r.w2.clone()))
            .collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), n);
        assert_eq!(a.summary.candidate_count, a.candidates.len());
        assert_eq!(a.summary.excluded_count, a.excluded.len());
        if t == 0.0 {
            assert!(a.excluded.is_empty());
        }
        // Same fit at every threshold, so exclusions only grow.
        assert!(a.excluded.len() >= prev_excluded);
        prev_excluded = a.excluded.len();
    }
}
