//! Brute-force reference computations. Each one takes the slow, obvious
//! route (full enumeration, rasterization, numeric integration) and shares
//! no code with the implementation it is used to check.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::budget::Budget;
use crate::error::{contract, Result};
use crate::geometry::{kakeya_family, Slab, Tube, TubeFamily};
use crate::percolation::Subtree;
use crate::pointwise::{slice_interval, Point};
use crate::rational::{int, to_f64, Rational};
use crate::sticky::{enumerate_all_labelings, CantorString, StickyMap};
use crate::tree::{triadic_distance, TernaryString};

/// Survival probability by enumerating all `2^E` open/closed patterns and
/// searching for an open root-to-level-`n` path in each.
pub fn survival_brute_force(tree: &Subtree, budget: &Budget) -> Result<Rational> {
    let edges = tree.edge_count();
    if edges > 40 {
        return contract(format!("{edges} edges is too many to enumerate"));
    }
    budget.check("edge configurations", 1u128 << edges)?;
    let nodes = tree.nodes();
    let n = tree.n();
    let parent: Vec<usize> = nodes
        .iter()
        .map(|s| s.parent().map_or(0, |p| nodes.binary_search(&p).expect("closed")))
        .collect();
    let mut good: u64 = 0;
    for mask in 0u64..(1u64 << edges) {
        // Edge into node i (i ≥ 1) is bit i − 1.
        let mut seen = vec![false; nodes.len()];
        seen[0] = true;
        let mut queue = VecDeque::from([0usize]);
        let mut hit = false;
        while let Some(v) = queue.pop_front() {
            if nodes[v].level() == n {
                hit = true;
                break;
            }
            for c in 1..nodes.len() {
                if parent[c] == v && !seen[c] && mask >> (c - 1) & 1 == 1 {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        good += hit as u64;
    }
    Ok(Rational::new(BigInt::from(good), BigInt::from(1u64) << edges))
}

/// Rasterized area of a family inside a slab.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RasterArea {
    pub area: f64,
    /// One raster row per tube boundary per column.
    pub tolerance: f64,
}

/// Area by counting pixels of side `3^{-exp}` whose centers lie in some
/// tube, column by column across the slab.
pub fn raster_area(family: &TubeFamily, slab: &Slab, exp: u32) -> Result<RasterArea> {
    let h = 3f64.powi(-(exp as i32));
    let (t0, t1) = (to_f64(&slab.t0), to_f64(&slab.t1));
    let columns = ((t1 - t0) / h).round() as u64;
    let tubes: Vec<[f64; 5]> = family
        .tubes
        .iter()
        .map(|tb| {
            [
                to_f64(&tb.intercept),
                to_f64(&tb.width),
                to_f64(&tb.slope),
                to_f64(&tb.t0),
                to_f64(&tb.t1),
            ]
        })
        .collect();
    let mut pixels: u64 = 0;
    let mut rows: Vec<(i64, i64)> = Vec::with_capacity(tubes.len());
    for c in 0..columns {
        let t = t0 + (c as f64 + 0.5) * h;
        rows.clear();
        for &[b, w, m, a0, a1] in &tubes {
            if t < a0 || t > a1 {
                continue;
            }
            let lo = b + m * t;
            let hi = lo + w;
            let r0 = (lo / h - 0.5).ceil() as i64;
            let r1 = (hi / h - 0.5).floor() as i64;
            if r0 <= r1 {
                rows.push((r0, r1));
            }
        }
        rows.sort_unstable();
        let mut end = i64::MIN;
        for &(r0, r1) in &rows {
            let start = r0.max(end);
            if r1 + 1 > start {
                pixels += (r1 + 1 - start) as u64;
            }
            end = end.max(r1 + 1);
        }
    }
    Ok(RasterArea {
        area: pixels as f64 * h * h,
        tolerance: 2.0 * family.len() as f64 * h * (t1 - t0),
    })
}

/// `|A ∩ B|` by the midpoint rule with `slices` columns over the common
/// time span, in floating point.
pub fn overlap_numeric(a: &Tube, b: &Tube, slices: u32) -> f64 {
    let lo = to_f64(&a.t0).max(to_f64(&b.t0));
    let hi = to_f64(&a.t1).min(to_f64(&b.t1));
    if hi <= lo {
        return 0.0;
    }
    let h = (hi - lo) / slices as f64;
    let section = |tb: &Tube, t: f64| {
        let y = to_f64(&tb.intercept) + to_f64(&tb.slope) * t;
        (y, y + to_f64(&tb.width))
    };
    (0..slices)
        .map(|i| {
            let t = lo + (i as f64 + 0.5) * h;
            let (a0, a1) = section(a, t);
            let (b0, b1) = section(b, t);
            (a1.min(b1) - a0.max(b0)).max(0.0)
        })
        .sum::<f64>()
        * h
}

/// Whether `(t, y)` lies in some tube of the family, by exact comparison
/// against every tube.
pub fn point_in_family(family: &TubeFamily, t: &Rational, y: &Rational) -> bool {
    family.tubes.iter().any(|tb| tb.contains(t, y))
}

/// Average of the membership indicator over every labeling of `T*_n`.
pub fn membership_average(n: u8, point: &Point, budget: &Budget) -> Result<Rational> {
    let all = enumerate_all_labelings(n, budget)?;
    let hits = all
        .iter()
        .filter(|l| {
            let family = kakeya_family(&StickyMap::new((*l).clone()));
            point_in_family(&family, point.t(), point.y())
        })
        .count();
    Ok(Rational::new(BigInt::from(hits), BigInt::from(all.len())))
}

/// Nodes `s` of levels `1..=n` for which some `c ∈ C_k` puts `y` in
/// `I_{s,c,t}`, by scanning all pairs.
pub fn slice_tree_nodes(n: u8, point: &Point, budget: &Budget) -> Result<Vec<TernaryString>> {
    let mut out = vec![TernaryString::ROOT];
    for k in 1..=n {
        let size = 3u64.pow(k as u32);
        budget.check("node-slope pairs", (size as u128) * (size as u128))?;
        let slopes: Vec<CantorString> = (0..size)
            .filter_map(|m| CantorString::new(TernaryString::from_index(k, m).ok()?).ok())
            .collect();
        for i in 0..size {
            let s = TernaryString::from_index(k, i)?;
            let hit = slopes.iter().any(|&c| {
                let (lo, hi) = slice_interval(s, c, point.t()).expect("same level");
                &lo <= point.y() && point.y() <= &hi
            });
            if hit {
                out.push(s);
            }
        }
    }
    Ok(out)
}

/// `A_{k,j}` from the definition with exact rationals: ordered pairs of
/// distinct `s1, s2 ∈ T_n` with `d(s1,s2) ≥ 3^j|s1 − s2|` and
/// `3^k ≤ 3^j|s1 − s2| < 3^{k+1}`.
pub fn pair_count_brute_force(n: u8, k: i32, j: u32, budget: &Budget) -> Result<u64> {
    let size = 3u64.pow(n as u32);
    budget.check("ordered pairs", (size as u128).pow(2))?;
    let three = int(3);
    let scale = three.pow(j as i32);
    let (band_lo, band_hi) = (three.pow(k), three.pow(k + 1));
    let strings: Vec<TernaryString> = (0..size).map(|i| TernaryString::from_index(n, i)).collect::<Result<_>>()?;
    let mut count = 0;
    for &a in &strings {
        for &b in &strings {
            if a == b {
                continue;
            }
            let gap = &scale * (a.value() - b.value()).abs();
            let d = triadic_distance(a, b)?;
            if d >= gap && band_lo <= gap && gap < band_hi {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::sticky::katz_example;

    #[test]
    fn brute_force_survival_small_cases() {
        let b = Budget::default();
        assert_eq!(survival_brute_force(&Subtree::full(1), &b).unwrap(), rat(7, 8));
        assert_eq!(survival_brute_force(&Subtree::chain(3), &b).unwrap(), rat(1, 8));
        assert_eq!(survival_brute_force(&Subtree::root_only(2), &b).unwrap(), int(0));
        assert_eq!(survival_brute_force(&Subtree::root_only(0), &b).unwrap(), int(1));
    }

    #[test]
    fn raster_of_one_tube() {
        let sigma = katz_example(1).unwrap();
        let fam = kakeya_family(&sigma);
        let r = raster_area(&fam, &Slab::unit(), 8).unwrap();
        assert!((r.area - 1.0 / 3.0).abs() <= r.tolerance, "{r:?}");
    }

    #[test]
    fn numeric_overlap_of_identical_tubes() {
        let sigma = katz_example(1).unwrap();
        let fam = kakeya_family(&sigma);
        let a = &fam.tubes[0];
        assert!((overlap_numeric(a, a, 1000) - 1.0 / 9.0).abs() < 1e-12);
    }
}
