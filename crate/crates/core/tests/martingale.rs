use hardylab_core::constants::cp_pow;
use hardylab_core::martingale::{
    extremal_ratio_exact, fuzz_maximal, limit_ratio, mean_matching_probabilities, random_simple_martingale,
    verify_maximal_inequality, ExtremalMartingale, MaximalVariant, SimpleMartingale, TreeShape,
};
use hardylab_core::{alpha_star, Error};
use proptest::prelude::*;

#[test]
fn extremal_zero_steps() {
    let em = ExtremalMartingale::new(-2.0, 0.1, 0).unwrap();
    assert_eq!(extremal_ratio_exact(&em, 4.0).unwrap(), 0.0);
}

#[test]
fn extremal_p4_reaches_constant() {
    let em = ExtremalMartingale::new(-2.0, 1e-4, 10_000).unwrap();
    assert!(em.growth_condition(4.0));
    let ratio = extremal_ratio_exact(&em, 4.0).unwrap();
    assert!((ratio - 3.0).abs() < 1e-2, "{ratio}");
    assert!(ratio < 3.0);
}

#[test]
fn extremal_approaches_limit_as_s_shrinks() {
    // (p, α) = (2, 1/4): the limit is 1, while the finite sum at s = 0.01,
    // n = 200 is still ≈ 0.655
    let limit = limit_ratio(0.25, 2.0).unwrap();
    assert!((limit - 1.0).abs() < 1e-15);
    let first = extremal_ratio_exact(&ExtremalMartingale::new(0.25, 0.01, 200).unwrap(), 2.0).unwrap();
    assert!((first - 0.655).abs() < 1e-3, "{first}");
    let mut gap = (first - limit).abs();
    for (s, n) in [(1e-3, 20_000), (1e-4, 1_000_000), (1e-6, 100_000_000)] {
        let r = extremal_ratio_exact(&ExtremalMartingale::new(0.25, s, n).unwrap(), 2.0).unwrap();
        let next = (r - limit).abs();
        assert!(next < gap / 5.0, "s = {s}: {next} vs {gap}");
        gap = next;
    }
    assert!(gap < 1e-5);
}

#[test]
fn extremal_monotone_in_n() {
    for alpha in [-3.0, -2.0, -0.5, 0.25] {
        for s in [1e-2, 1e-3] {
            let values: Vec<f64> = [1u64, 10, 100, 1000, 10_000]
                .iter()
                .map(|&n| extremal_ratio_exact(&ExtremalMartingale::new(alpha, s, n).unwrap(), 3.0).unwrap())
                .collect();
            assert!(values.windows(2).all(|w| w[0] <= w[1]), "{alpha} {s}: {values:?}");
        }
    }
}

#[test]
fn extremal_tree_matches_closed_law() {
    for (alpha, s, n, p) in [(-2.0, 0.05, 40, 4.0), (1.0 / 3.0, 0.1, 25, 1.5), (-0.7, 0.2, 12, 3.0)] {
        let em = ExtremalMartingale::new(alpha, s, n).unwrap();
        let tree = em.to_tree();
        tree.check_invariants().unwrap();
        let exact = extremal_ratio_exact(&em, p).unwrap();
        let report = verify_maximal_inequality(&tree, p, 10.0, MaximalVariant::Martingale, 0.0);
        assert!(
            (report.ratio.powf(p) - exact).abs() < 1e-10 * exact,
            "{} vs {exact}",
            report.ratio.powf(p)
        );
    }
    // small s pushes the tree ratio up toward C_4^4 = 3 from below
    let ratios: Vec<f64> = [(0.1, 30), (0.03, 120), (0.01, 400)]
        .iter()
        .map(|&(s, n)| {
            let tree = ExtremalMartingale::new(-2.0, s, n).unwrap().to_tree();
            verify_maximal_inequality(&tree, 4.0, 10.0, MaximalVariant::Martingale, 0.0)
                .ratio
                .powi(4)
        })
        .collect();
    assert!(ratios.windows(2).all(|w| w[0] < w[1]) && ratios[2] < 3.0, "{ratios:?}");
}

#[test]
fn extremal_rejects_bad_inputs() {
    assert!(ExtremalMartingale::new(-2.0, 0.0, 5).is_err());
    assert!(ExtremalMartingale::new(-2.0, 1.0, 5).is_err());
    let em = ExtremalMartingale::new(0.0, 0.1, 5).unwrap();
    assert!(matches!(extremal_ratio_exact(&em, 2.0), Err(Error::ParamDomain(_))));
}

#[test]
fn total_probability_telescopes() {
    for (alpha, s, n) in [(-2.0, 1e-4, 10_000), (0.25, 0.3, 50), (0.5, 0.999, 3)] {
        let em = ExtremalMartingale::new(alpha, s, n).unwrap();
        let total = em.total_probability();
        assert!((total - 1.0).abs() < 1e-14, "{total}");
        assert!((s * em.alpha + (1.0 - s) * em.beta - 1.0).abs() < 1e-14);
    }
}

#[test]
fn limit_ratio_examples() {
    for p in [1.5, 2.0, 4.0] {
        assert!((limit_ratio(0.0, p).unwrap() - 1.0 / (p - 1.0)).abs() < 1e-15);
    }
    assert!((limit_ratio(-2.0, 4.0).unwrap() - 3.0).abs() < 1e-10);
    assert!((limit_ratio(1.0 / 3.0, 1.5).unwrap() - 2f64.powf(1.5)).abs() < 1e-12);
    assert!(limit_ratio(1.0, 2.0).is_err());
}

#[test]
fn limit_ratio_bounded_by_constant() {
    for p in [1.2, 1.5, 1.9, 2.5, 3.0, 4.0, 6.0] {
        let cp = cp_pow(p).unwrap();
        let edge = (p - 1.0) / p;
        for i in 0..2000 {
            let alpha = edge - 10f64.powf(-6.0 + 9.0 * i as f64 / 1999.0);
            assert!(limit_ratio(alpha, p).unwrap() <= cp + 1e-9, "p = {p}, alpha = {alpha}");
        }
        assert!(limit_ratio(edge, p).unwrap() <= cp + 1e-9);
    }
}

#[test]
fn limit_ratio_sup_over_all_alpha_for_large_p() {
    for p in [2.5, 3.0, 4.0, 7.0] {
        let cp = cp_pow(p).unwrap();
        let alpha_p = alpha_star(p).unwrap();
        let scan = (0..200_001)
            .map(|i| -50.0 + 100.0 * i as f64 / 200_000.0)
            .filter(|&a| a != 1.0)
            .map(|a| limit_ratio(a, p).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(scan <= cp + 1e-9 && scan >= cp - 1e-6, "p = {p}: {scan} vs {cp}");
        assert!((limit_ratio(alpha_p, p).unwrap() - cp).abs() < 1e-9 * cp);
    }
}

#[test]
fn mean_matching_two_points() {
    let probs = mean_matching_probabilities(1.0, &[0.0, 2.0]).unwrap();
    assert_eq!(probs, vec![0.5, 0.5]);
    let sm = SimpleMartingale::one_step(1.0, &[0.0, 2.0]).unwrap();
    sm.check_invariants().unwrap();
    assert!(mean_matching_probabilities(1.0, &[2.0, 3.0]).is_err());
    assert!(mean_matching_probabilities(1.0, &[1.0, 3.0, 0.0]).is_err());
}

#[test]
fn random_tree_is_deterministic() {
    let a = random_simple_martingale(42, 5, 3, 1.0).unwrap();
    let b = random_simple_martingale(42, 5, 3, 1.0).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.depth(), 5);
    a.check_invariants().unwrap();
    // snapshot
    assert_eq!(a.node_count(), SNAPSHOT_NODES);
    assert_eq!(a.root.value, SNAPSHOT_ROOT);
    assert_ne!(a, random_simple_martingale(43, 5, 3, 1.0).unwrap());
}

const SNAPSHOT_NODES: usize = 213;
const SNAPSHOT_ROOT: f64 = 0.36379238461334285;

#[test]
fn tree_json_round_trip() {
    let tree = random_simple_martingale(7, 3, 4, 2.5).unwrap();
    let text = serde_json::to_string(&tree).unwrap();
    assert!(text.starts_with("{\"value\":"));
    let back: SimpleMartingale = serde_json::from_str(&text).unwrap();
    assert_eq!(back, tree);
    let broken = r#"{"value":1,"prob":1,"children":[{"value":0,"prob":0.4},{"value":2,"prob":0.6}]}"#;
    let tree: SimpleMartingale = serde_json::from_str(broken).unwrap();
    assert!(tree.check_invariants().is_err());
}

#[test]
fn random_tree_rejects_bad_shape() {
    assert!(random_simple_martingale(1, 0, 3, 1.0).is_err());
    assert!(random_simple_martingale(1, 3, 1, 1.0).is_err());
    assert!(random_simple_martingale(1, 3, 3, 0.0).is_err());
}

#[test]
fn constant_martingale_passes() {
    for c in [0.0, 1.0] {
        let report = verify_maximal_inequality(
            &SimpleMartingale::constant(3.5),
            2.0,
            c,
            MaximalVariant::Martingale,
            0.0,
        );
        assert_eq!(report.lhs, 0.0);
        assert!(report.violation.passed);
    }
}

#[test]
fn fuzzer_finds_no_violations() {
    for p in [1.5, 3.0] {
        let c = cp_pow(p).unwrap().powf(1.0 / p);
        let rows = fuzz_maximal(0..500, &TreeShape::default(), p, c, MaximalVariant::Martingale, 1e-12).unwrap();
        assert!(rows.iter().all(|r| r.passed));
        assert!(rows.iter().enumerate().all(|(i, r)| r.seed == i as u64));
    }
}

#[test]
fn abs_submartingale_variant_passes() {
    for p in [1.2, 1.5, 1.8, 2.0] {
        let c = cp_pow(p).unwrap().powf(1.0 / p);
        let rows = fuzz_maximal(
            0..300,
            &TreeShape::default(),
            p,
            c,
            MaximalVariant::AbsSubmartingale,
            1e-12,
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.passed), "p = {p}");
    }
}

#[test]
fn under_sized_constant_is_caught() {
    let tree = ExtremalMartingale::new(-2.0, 0.01, 400).unwrap().to_tree();
    let report = verify_maximal_inequality(&tree, 4.0, 1.0, MaximalVariant::Martingale, 1e-12);
    assert!(!report.violation.passed);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_trees_are_martingales(seed in any::<u64>(), depth in 1usize..5, branch in 2usize..5, scale in 0.01..100.0f64) {
        let tree = random_simple_martingale(seed, depth, branch, scale).unwrap();
        prop_assert!(tree.check_invariants().is_ok());
        prop_assert_eq!(tree.depth(), depth);
    }
}
