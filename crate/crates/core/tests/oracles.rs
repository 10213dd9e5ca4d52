//! Library results checked against the brute-force references.

use kakeya_core::geometry::{
    kakeya_family, overlap_area, overlap_sum, pair_count_table, Slab, Tube, TubeFamily,
};
use kakeya_core::measure::{
    exact_area, lemma11_check, lemma11_slab_indices, sampled_area, slice_length, MeasurePolicy,
};
use kakeya_core::oracle::{
    membership_average, overlap_numeric, pair_count_brute_force, point_in_family, raster_area, slice_tree_nodes,
    survival_brute_force,
};
use kakeya_core::percolation::{
    lyons_bound_check, random_subtree, resistance_network, resistance_recursive, survival_exact, survival_mc,
    Resistance, Subtree,
};
use kakeya_core::pointwise::{
    build_slice_tree, membership, membership_probability_exact, random_points, Point,
};
use kakeya_core::rational::{int, rat, to_f64};
use kakeya_core::sticky::{katz_example, StickyMap};
use kakeya_core::tree::TernaryString;
use kakeya_core::{Budget, Rational};
use num_traits::Zero;
use proptest::prelude::*;

fn ts(s: &str) -> TernaryString {
    s.parse().unwrap()
}

fn budget() -> Budget {
    Budget::default()
}

#[test]
fn full_depth_two_survival_by_enumeration() {
    let full = Subtree::full(2);
    assert_eq!(full.edge_count(), 12);
    let brute = survival_brute_force(&full, &budget()).unwrap();
    assert_eq!(brute, rat(3367, 4096));
    assert_eq!(survival_exact(&full), brute);
}

#[test]
fn monte_carlo_near_exact_values() {
    for (tree, exact) in [(Subtree::full(1), 7.0 / 8.0), (Subtree::chain(3), 1.0 / 8.0)] {
        let est = survival_mc(&tree, 100_000, 11).unwrap();
        assert!((est.estimate() - exact).abs() <= 4.0 * est.std_dev_at(exact), "{est:?}");
    }
}

#[test]
fn resistance_of_full_trees() {
    assert_eq!(resistance_recursive(&Subtree::full(2)), Resistance::Finite(rat(10, 9)));
    assert_eq!(resistance_network(&Subtree::full(2)).unwrap(), Resistance::Finite(rat(10, 9)));
    assert_eq!(
        resistance_recursive(&Subtree::full(3)),
        resistance_network(&Subtree::full(3)).unwrap()
    );
    // Layers in series: full trees stay below Σ 2^k / 3^k < 2.
    for n in 1..=6 {
        let r = resistance_recursive(&Subtree::full(n));
        assert!(r < Resistance::Finite(int(2)));
    }
}

fn bare(intercept: Rational, slope: Rational) -> Tube {
    Tube {
        source: TernaryString::ROOT,
        intercept,
        width: rat(1, 9),
        slope,
        t0: int(0),
        t1: int(1),
    }
}

#[test]
fn crossing_overlap_matches_numeric_integration() {
    let a = bare(int(0), rat(2, 3));
    let b = bare(rat(2, 9), int(0));
    let exact = overlap_area(&a, &b);
    assert_eq!(exact, rat(1, 54));
    assert!((overlap_numeric(&a, &b, 10_000) - to_f64(&exact)).abs() < 1e-8);
}

#[test]
fn overlaps_match_numeric_integration_on_random_maps() {
    for seed in 0..3 {
        let fam = kakeya_family(&StickyMap::sample(2, seed).unwrap()).restrict(&Slab::upper());
        for a in &fam.tubes {
            for b in &fam.tubes {
                let exact = to_f64(&overlap_area(a, b));
                assert!((overlap_numeric(a, b, 10_000) - exact).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn overlap_decays_with_source_gap() {
    // |P_{s1,j} ∩ P_{s2,j}| · 3^{n+j} |s1 − s2| stays below a small constant.
    let n = 3;
    let mut c = 0.0f64;
    for seed in 0..5 {
        for j in 1..=3 {
            let fam = kakeya_family(&StickyMap::sample(n, seed).unwrap()).restrict(&Slab::triadic(j));
            for a in &fam.tubes {
                for b in &fam.tubes {
                    if a.source != b.source {
                        let gap = to_f64(&(a.source.value() - b.source.value())).abs();
                        c = c.max(to_f64(&overlap_area(a, b)) * 3f64.powi((n as u32 + j) as i32) * gap);
                    }
                }
            }
        }
    }
    assert!(c > 0.0 && c <= 1.0, "constant {c}");
}

#[test]
fn overlap_sum_scales_with_slab() {
    let n = 4u8;
    for seed in 0..10 {
        let sigma = StickyMap::sample(n, seed).unwrap();
        for j in lemma11_slab_indices(n) {
            let sum = to_f64(&overlap_sum(&sigma, &Slab::triadic(j), &budget()).unwrap());
            let scaled = sum / (n as f64 * 3f64.powi(-2 * j as i32));
            assert!(scaled <= 5.0, "seed {seed}, j {j}: {scaled}");
        }
    }
}

#[test]
fn pair_counts_match_definition() {
    let b = budget();
    for n in 1..=3u8 {
        for j in 0..=n as u32 {
            let table = pair_count_table(n, j, &b).unwrap();
            for k in -(n as i32) - 1..=1 {
                let fast = table.iter().find(|(kk, _)| *kk == k).map_or(0, |(_, c)| *c);
                assert_eq!(fast, pair_count_brute_force(n, k, j, &b).unwrap(), "n={n} j={j} k={k}");
            }
        }
    }
}

#[test]
fn pair_counts_scale_as_two_n_plus_k_minus_two_j() {
    let b = Budget::new(u64::MAX);
    for n in 2..=6u8 {
        let mut worst = 0.0f64;
        for j in 1..=n as u32 {
            for (k, a) in pair_count_table(n, j, &b).unwrap() {
                worst = worst.max(a as f64 / 3f64.powi(2 * n as i32 + k - 2 * j as i32));
            }
        }
        assert!(worst <= 10.0, "n={n}: {worst}");
    }
    // Against 3^{n+k-2j} the same counts grow with n.
    let literal = |n: u8| {
        (1..=n as u32)
            .flat_map(|j| pair_count_table(n, j, &b).unwrap().into_iter().map(move |(k, a)| (j, k, a)))
            .map(|(j, k, a)| a as f64 / 3f64.powi(n as i32 + k - 2 * j as i32))
            .fold(0.0, f64::max)
    };
    assert!(literal(4) > 10.0);
    assert!(literal(5) > 2.5 * literal(4));
}

/// Length of the union of closed intervals, measured on a `3^{-12}` pixel
/// grid with the pixel-center rule.
fn raster_slice(family: &TubeFamily, t: &Rational) -> f64 {
    let h = 3f64.powi(-12);
    let mut rows: Vec<(i64, i64)> = family
        .tubes
        .iter()
        .map(|tb| {
            let lo = to_f64(&tb.lower_at(t));
            let hi = lo + to_f64(&tb.width);
            ((lo / h - 0.5).ceil() as i64, (hi / h - 0.5).floor() as i64)
        })
        .collect();
    rows.sort_unstable();
    let mut end = i64::MIN;
    let mut count = 0;
    for (a, b) in rows {
        let start = a.max(end);
        if b + 1 > start {
            count += b + 1 - start;
        }
        end = end.max(b + 1);
    }
    count as f64 * h
}

#[test]
fn slice_length_matches_rasterized_slice() {
    let h = 3f64.powi(-12);
    for seed in 0..5 {
        let fam = kakeya_family(&StickyMap::sample(2, seed).unwrap());
        let t = rat(1, 2);
        let exact = to_f64(&slice_length(&fam, &t).unwrap());
        let raster = raster_slice(&fam, &t);
        assert!((exact - raster).abs() <= 2.0 * fam.len() as f64 * h, "{exact} vs {raster}");
    }
}

#[test]
fn exact_area_matches_raster_area() {
    for n in 1..=3u8 {
        let fam = kakeya_family(&StickyMap::sample(n, 40 + n as u64).unwrap());
        let exact = to_f64(&exact_area(&fam, &Slab::unit(), &budget()).unwrap().value);
        let r = raster_area(&fam, &Slab::unit(), 12).unwrap();
        assert!((exact - r.area).abs() <= r.tolerance, "n={n}: {exact} vs {r:?}");
    }
}

#[test]
fn katz_slab_area_matches_sampling() {
    let fam = kakeya_family(&katz_example(2).unwrap()).restrict(&Slab::upper());
    let exact = exact_area(&fam, &Slab::upper(), &budget()).unwrap().value;
    let sampled = sampled_area(&fam, &Slab::upper(), 10_000).unwrap().value;
    assert!(to_f64(&((&exact - &sampled) / &exact)).abs() <= 1e-3);
}

#[test]
fn slab_measures_stay_above_floor() {
    let policy = MeasurePolicy::default();
    let katz = lemma11_check(&katz_example(3).unwrap(), &policy, &budget()).unwrap();
    assert!(katz.min_scaled > 0.1, "{}", katz.min_scaled);
    let floor = (0..50)
        .map(|seed| lemma11_check(&StickyMap::sample(5, seed).unwrap(), &policy, &budget()).unwrap().min_scaled)
        .fold(f64::INFINITY, f64::min);
    assert!(floor > 0.1, "{floor}");
}

#[test]
fn candidate_examples_by_interval_scan() {
    let p = Point::new(rat(1, 2), rat(1, 2)).unwrap();
    let nodes = slice_tree_nodes(1, &p, &budget()).unwrap();
    assert!(nodes.contains(&ts(".0")));
}

#[test]
fn slice_tree_node_sets_match_exhaustive_scan() {
    for n in 1..=6u8 {
        for p in random_points(if n <= 4 { 40 } else { 8 }, 21, n as u64) {
            let tree = build_slice_tree(n, &p).unwrap();
            let want = slice_tree_nodes(n, &p, &budget()).unwrap();
            assert_eq!(tree.subtree().nodes(), want.as_slice(), "n={n} at {p}");
            for (k, &c) in tree.level_counts().iter().enumerate() {
                assert!(c <= 4 << k);
            }
        }
    }
}

#[test]
fn exact_membership_equals_labeling_average() {
    for n in 1..=2u8 {
        for p in random_points(15, 5, 50 + n as u64) {
            assert_eq!(
                membership_probability_exact(n, &p).unwrap(),
                membership_average(n, &p, &budget()).unwrap(),
                "n={n} at {p}"
            );
        }
    }
}

#[test]
fn membership_agrees_with_tube_oracle() {
    for seed in 0..20 {
        let n = 1 + (seed % 4) as u8;
        let sigma = StickyMap::sample(n, seed).unwrap();
        let fam = kakeya_family(&sigma);
        for p in random_points(30, seed, 7) {
            assert_eq!(membership(&sigma, &p).unwrap(), point_in_family(&fam, p.t(), p.y()));
        }
    }
}

#[test]
fn membership_chain_of_bounds() {
    let c0 = kakeya_core::experiments::Constants::frozen().c0;
    for n in 4..=7u8 {
        for p in random_points(30, 9, n as u64) {
            let tree = build_slice_tree(n, &p).unwrap();
            let pn = membership_probability_exact(n, &p).unwrap();
            let v = lyons_bound_check(tree.subtree());
            assert!(pn <= v.survival && v.holds);
            if let Resistance::Finite(r) = &v.resistance {
                let weakest = 12.0 / (2.0 + c0 * n as f64);
                assert!(to_f64(&(int(12) / (int(2) + r))) <= weakest + 1e-12);
            } else {
                assert!(pn.is_zero());
            }
        }
    }
}

fn subset_of(tree: &Subtree, mask: u64) -> Subtree {
    let mut i = 0u32;
    tree.retain(|_| {
        i += 1;
        mask >> (i % 64) & 1 == 1
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn removing_nodes_lowers_survival_and_raises_resistance(
        n in 1u8..=6, keep in 0.4f64..0.95, seed in 0u64..1_000_000, mask in any::<u64>()
    ) {
        let big = random_subtree(n, keep, seed).unwrap();
        let small = subset_of(&big, mask);
        prop_assert!(small.nodes().iter().all(|s| big.contains(*s)));
        prop_assert!(survival_exact(&small) <= survival_exact(&big));
        prop_assert!(resistance_recursive(&small) >= resistance_recursive(&big));
        let p = survival_exact(&big);
        prop_assert!(p >= int(0) && p <= int(1));
    }

    #[test]
    fn survival_matches_enumeration_on_small_random_trees(n in 1u8..=4, keep in 0.3f64..0.9, seed in 0u64..1_000_000) {
        let t = random_subtree(n, keep, seed).unwrap().truncate_edges(10);
        prop_assert_eq!(survival_exact(&t), survival_brute_force(&t, &budget()).unwrap());
    }

    #[test]
    fn unions_of_cross_sections_are_bounded(n in 1u8..=4, seed in 0u64..1_000_000, num in 0i64..=1000) {
        let fam = kakeya_family(&StickyMap::sample(n, seed).unwrap());
        let len = slice_length(&fam, &rat(num, 1000)).unwrap();
        prop_assert!(len <= rat(1, 3));
        prop_assert!(len >= fam.tubes[0].width);
    }
}
