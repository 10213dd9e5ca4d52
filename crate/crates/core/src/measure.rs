//! Lebesgue measure of tube unions, exact and sampled, plus the
//! uniformity inequality and the slab lower-bound check.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{contract, Result};
use crate::geometry::{family_overlap_sum, kakeya_family, Slab, TubeFamily};
use crate::rational::{fmt_rational, int, to_f64, Frac, Rational};
use crate::sticky::StickyMap;
use crate::sweep::{exact_union_area, slice_union_scaled, trapezoid_area, BandSet};

/// Default largest family measured exactly; larger ones are sampled.
pub const EXACT_TUBE_LIMIT: usize = 729;

/// Sorted, pairwise disjoint closed intervals; touching intervals merge.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IntervalUnion {
    intervals: Vec<(Rational, Rational)>,
}

impl IntervalUnion {
    pub fn new(mut raw: Vec<(Rational, Rational)>) -> IntervalUnion {
        raw.retain(|(a, b)| a <= b);
        raw.sort();
        let mut intervals: Vec<(Rational, Rational)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match intervals.last_mut() {
                Some((_, hi)) if a <= *hi => {
                    if b > *hi {
                        *hi = b;
                    }
                }
                _ => intervals.push((a, b)),
            }
        }
        IntervalUnion { intervals }
    }

    pub fn intervals(&self) -> &[(Rational, Rational)] {
        &self.intervals
    }

    pub fn length(&self) -> Rational {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        IntervalUnion::new(self.intervals.iter().chain(&other.intervals).cloned().collect())
    }

    pub fn intersection(&self, other: &IntervalUnion) -> IntervalUnion {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = &self.intervals[i];
            let (b0, b1) = &other.intervals[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo <= hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalUnion::new(out)
    }
}

/// Measure of the union of closed intervals.
pub fn union_length(intervals: &[(Rational, Rational)]) -> Rational {
    IntervalUnion::new(intervals.to_vec()).length()
}

/// `|{y : (t, y) ∈ ⋃ tubes}|`.
pub fn slice_length(family: &TubeFamily, t: &Rational) -> Result<Rational> {
    let set = BandSet::from_tubes(&family.tubes)?;
    let Some(tf) = Frac::from_rational(t) else {
        return contract("slice abscissa out of kernel range");
    };
    let scaled = slice_union_scaled(&set, tf, &mut Vec::new());
    Ok(Rational::from_integer(scaled.into()) / (int(set.unit) * int(tf.den)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaMode {
    Exact,
    Sampled,
}

impl fmt::Display for AreaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AreaMode::Exact => "exact",
            AreaMode::Sampled => "sampled",
        })
    }
}

impl std::str::FromStr for AreaMode {
    type Err = crate::error::KakeyaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(AreaMode::Exact),
            "sampled" => Ok(AreaMode::Sampled),
            _ => Err(crate::error::KakeyaError::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

/// An area over a slab. Sampled values are the exact rational value of the
/// composite trapezoid estimate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AreaReport {
    pub value: Rational,
    pub mode: AreaMode,
    pub slices: Option<u32>,
    pub slab: Slab,
}

impl AreaReport {
    pub fn as_f64(&self) -> f64 {
        to_f64(&self.value)
    }

    /// `n,seed,slab_t0,slab_t1,mode,slices,area_num,area_den`
    pub fn csv_row(&self, n: u8, seed: Option<u64>) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            n,
            seed.map(|s| s.to_string()).unwrap_or_default(),
            fmt_rational(&self.slab.t0),
            fmt_rational(&self.slab.t1),
            self.mode,
            self.slices.map(|m| m.to_string()).unwrap_or_default(),
            self.value.numer(),
            self.value.denom()
        )
    }
}

pub const AREA_CSV_HEADER: &str = "n,seed,slab_t0,slab_t1,mode,slices,area_num,area_den";

/// Exact `|⋃ F ∩ slab|` by event sweep.
pub fn exact_area(family: &TubeFamily, slab: &Slab, budget: &Budget) -> Result<AreaReport> {
    budget.check_with_hint("tubes", family.len() as u128, "; use sampled mode")?;
    let (lo, hi) = slab.fracs()?;
    let set = BandSet::from_tubes(&family.tubes)?;
    Ok(AreaReport {
        value: exact_union_area(&set, lo, hi, budget)?,
        mode: AreaMode::Exact,
        slices: None,
        slab: slab.clone(),
    })
}

/// Composite trapezoid of exact slice lengths at `m` equispaced abscissae.
pub fn sampled_area(family: &TubeFamily, slab: &Slab, m: u32) -> Result<AreaReport> {
    if m < 2 {
        return contract("sampled area needs at least 2 slices");
    }
    let (lo, hi) = slab.fracs()?;
    let set = BandSet::from_tubes(&family.tubes)?;
    Ok(AreaReport {
        value: trapezoid_area(&set, lo, hi, m),
        mode: AreaMode::Sampled,
        slices: Some(m),
        slab: slab.clone(),
    })
}

/// How to pick between the exact sweep and sampling.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MeasurePolicy {
    pub mode: Option<AreaMode>,
    pub exact_tube_limit: usize,
    pub slices: u32,
}

impl Default for MeasurePolicy {
    fn default() -> Self {
        MeasurePolicy {
            mode: None,
            exact_tube_limit: EXACT_TUBE_LIMIT,
            slices: 1000,
        }
    }
}

impl MeasurePolicy {
    pub fn area(&self, family: &TubeFamily, slab: &Slab, budget: &Budget) -> Result<AreaReport> {
        let mode = self.mode.unwrap_or(if family.len() <= self.exact_tube_limit {
            AreaMode::Exact
        } else {
            AreaMode::Sampled
        });
        match mode {
            AreaMode::Exact => exact_area(family, slab, budget),
            AreaMode::Sampled => sampled_area(family, slab, self.slices),
        }
    }
}

/// Outcome of checking `μ(⋃A_j) ≥ Kα/(16m)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniformityVerdict {
    pub k: usize,
    pub alpha: Rational,
    pub m: Rational,
    /// `Σ_j Σ_k μ(A_j ∩ A_k)`
    pub pair_sum: Rational,
    pub hypothesis_holds: bool,
    pub union_measure: Rational,
    pub bound: Rational,
    pub conclusion_holds: bool,
}

impl UniformityVerdict {
    /// A counterexample needs the hypothesis to hold and the conclusion to fail.
    pub fn violated(&self) -> bool {
        self.hypothesis_holds && !self.conclusion_holds
    }
}

pub fn uniformity_verdict(
    k: usize,
    alpha: Rational,
    pair_sum: Rational,
    union_measure: Rational,
    m: Rational,
) -> Result<UniformityVerdict> {
    if !m.is_positive() {
        return contract("m must be positive");
    }
    let kk = int(k as i64);
    let hypothesis_holds = pair_sum <= &kk * &m * &alpha;
    let bound = &kk * &alpha / (int(16) * &m);
    Ok(UniformityVerdict {
        k,
        conclusion_holds: union_measure >= bound,
        alpha,
        m,
        pair_sum,
        hypothesis_holds,
        union_measure,
        bound,
    })
}

/// The uniformity inequality for sets on the line.
pub fn verify_uniformity(sets: &[IntervalUnion], m: &Rational) -> Result<UniformityVerdict> {
    let Some(first) = sets.first() else {
        return contract("need at least one set");
    };
    let alpha = first.length();
    if !alpha.is_positive() {
        return contract("sets must have positive measure");
    }
    if let Some(bad) = sets.iter().find(|s| s.length() != alpha) {
        return contract(format!(
            "unequal measures {} and {}",
            fmt_rational(&alpha),
            fmt_rational(&bad.length())
        ));
    }
    let mut pair_sum = Rational::zero();
    for (i, a) in sets.iter().enumerate() {
        pair_sum += &alpha;
        for b in &sets[i + 1..] {
            pair_sum += a.intersection(b).length() * int(2);
        }
    }
    let union = sets.iter().fold(IntervalUnion::default(), |acc, s| acc.union(s));
    uniformity_verdict(sets.len(), alpha, pair_sum, union.length(), m.clone())
}

/// The uniformity inequality for the tubes of a family cut to a slab,
/// with intersections and the union measured exactly.
pub fn verify_uniformity_tubes(
    family: &TubeFamily,
    slab: &Slab,
    m: Option<&Rational>,
    budget: &Budget,
) -> Result<UniformityVerdict> {
    let cut = family.restrict(slab);
    let Some(first) = cut.tubes.first() else {
        return contract("no tube meets the slab");
    };
    let alpha = first.area();
    if cut.tubes.iter().any(|t| t.area() != alpha) || cut.len() != family.len() {
        return contract("tubes cut to the slab have unequal areas");
    }
    let pair_sum = family_overlap_sum(&cut, slab, budget)?;
    let k = cut.len();
    // Smallest m for which the hypothesis holds.
    let m = m.cloned().unwrap_or_else(|| &pair_sum / (int(k as i64) * &alpha));
    let union = exact_area(&cut, slab, budget)?.value;
    uniformity_verdict(k, alpha, pair_sum, union, m)
}

/// Per-slab lower-bound data for one sticky map.
#[derive(Clone, Debug)]
pub struct Lemma11Report {
    pub n: u8,
    /// `(j, slab, |K_σ ∩ slab|)` for each lower-bound slab.
    pub slabs: Vec<(u32, Slab, AreaReport)>,
    /// `min_j n·|K_σ ∩ S_j|`
    pub min_scaled: f64,
    /// `Σ_j |K_σ ∩ S_j|`
    pub total: f64,
    /// `log₃ n / n`
    pub reference: f64,
}

/// Index range of the lower-bound slabs: `S_j = [3^{-j}, 3^{1-j}]` for
/// `1 ≤ j ≤ ⌊log₃ n⌋ + 1`. (`S_0 = [1, 3]` meets the tubes only in the
/// line `t = 1`.)
pub fn lemma11_slab_indices(n: u8) -> std::ops::RangeInclusive<u32> {
    1..=floor_log3(n as u64) + 1
}

pub fn floor_log3(x: u64) -> u32 {
    assert!(x > 0);
    let mut k = 0;
    while 3u64.pow(k + 1) <= x {
        k += 1;
    }
    k
}

pub fn lemma11_check(sigma: &StickyMap, policy: &MeasurePolicy, budget: &Budget) -> Result<Lemma11Report> {
    let n = sigma.n();
    let family = kakeya_family(sigma);
    let slabs = lemma11_slab_indices(n)
        .map(|j| {
            let slab = Slab::triadic(j);
            let area = policy.area(&family.restrict(&slab), &slab, budget)?;
            Ok((j, slab, area))
        })
        .collect::<Result<Vec<_>>>()?;
    let min_scaled = slabs
        .iter()
        .map(|(_, _, a)| a.as_f64() * n as f64)
        .fold(f64::INFINITY, f64::min);
    let total = slabs.iter().map(|(_, _, a)| a.as_f64()).sum();
    Ok(Lemma11Report {
        n,
        slabs,
        min_scaled,
        total,
        reference: (n as f64).ln() / 3f64.ln() / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Tube;
    use crate::rational::rat;
    use crate::sticky::{katz_example, EdgeLabeling};
    use proptest::prelude::*;

    fn flat(n: u8) -> StickyMap {
        StickyMap::new(EdgeLabeling::from_labels(n, vec![0; crate::sticky::edge_count(n)]).unwrap())
    }

    #[test]
    fn union_lengths() {
        assert_eq!(union_length(&[(int(0), rat(1, 3)), (rat(1, 4), rat(1, 2))]), rat(1, 2));
        assert_eq!(union_length(&[]), int(0));
        assert_eq!(union_length(&[(int(0), rat(1, 9)), (rat(2, 9), rat(3, 9))]), rat(2, 9));
        let u = IntervalUnion::new(vec![(int(0), int(1)), (int(1), int(2))]);
        assert_eq!(u.intervals().len(), 1);
    }

    #[test]
    fn slices_at_origin_tile() {
        for n in 1..=4 {
            for seed in 0..3 {
                let fam = kakeya_family(&StickyMap::sample(n, seed).unwrap());
                assert_eq!(slice_length(&fam, &int(0)).unwrap(), rat(1, 3));
            }
        }
        let fam = kakeya_family(&flat(1));
        for t in [rat(1, 7), rat(1, 2), int(1)] {
            assert_eq!(slice_length(&fam, &t).unwrap(), rat(1, 3));
        }
    }

    #[test]
    fn exact_area_simple_cases() {
        let b = Budget::default();
        let fam = kakeya_family(&flat(1));
        assert_eq!(exact_area(&fam, &Slab::unit(), &b).unwrap().value, rat(1, 3));
        let single = TubeFamily {
            n: 2,
            tubes: vec![kakeya_family(&StickyMap::sample(2, 1).unwrap()).tubes[4].clone()],
        };
        for slab in [Slab::unit(), Slab::upper(), Slab::triadic(2)] {
            let want = &single.tubes[0].width * slab.width();
            assert_eq!(exact_area(&single.restrict(&slab), &slab, &b).unwrap().value, want);
        }
    }

    #[test]
    fn exact_area_two_crossing_tubes() {
        // Union = 2·(1/9) − overlap(1/54).
        let mk = |s: &str, c: Rational, m: Rational| Tube {
            source: s.parse().unwrap(),
            intercept: c,
            width: rat(1, 9),
            slope: m,
            t0: int(0),
            t1: int(1),
        };
        let fam = TubeFamily {
            n: 1,
            tubes: vec![mk(".0", int(0), rat(2, 3)), mk(".2", rat(2, 9), int(0))],
        };
        let area = exact_area(&fam, &Slab::unit(), &Budget::default()).unwrap();
        assert_eq!(area.value, rat(2, 9) - rat(1, 54));
    }

    #[test]
    fn sampled_is_exact_on_linear_integrands() {
        let fam = kakeya_family(&flat(2));
        for m in [2, 3, 17] {
            let s = sampled_area(&fam, &Slab::unit(), m).unwrap();
            assert_eq!(s.value, rat(1, 3));
            assert_eq!(s.slices, Some(m));
        }
        assert!(sampled_area(&fam, &Slab::unit(), 1).is_err());
    }

    #[test]
    fn exact_and_sampled_agree_for_katz() {
        let fam = kakeya_family(&katz_example(2).unwrap()).restrict(&Slab::upper());
        let e = exact_area(&fam, &Slab::upper(), &Budget::default()).unwrap();
        let s = sampled_area(&fam, &Slab::upper(), 10_000).unwrap();
        assert!((e.as_f64() - s.as_f64()).abs() <= 1e-3 * e.as_f64());
    }

    #[test]
    fn sampled_converges() {
        let sigma = StickyMap::sample(3, 8).unwrap();
        let fam = kakeya_family(&sigma).restrict(&Slab::upper());
        let exact = exact_area(&fam, &Slab::upper(), &Budget::default()).unwrap().as_f64();
        let mut prev_err = f64::INFINITY;
        for m in [101, 201, 401, 801, 1601] {
            let err = (sampled_area(&fam, &Slab::upper(), m).unwrap().as_f64() - exact).abs();
            assert!(err <= prev_err * 1.05 + 1e-12, "m={m}: {err} after {prev_err}");
            prev_err = err;
        }
        assert!(prev_err < 1e-4);
    }

    #[test]
    fn budget_refuses_large_exact_runs() {
        let fam = kakeya_family(&StickyMap::sample(4, 0).unwrap());
        let err = exact_area(&fam, &Slab::unit(), &Budget::new(50)).unwrap_err();
        assert!(err.to_string().contains("sampled"));
    }

    #[test]
    fn uniformity_trivial_cases() {
        let a = IntervalUnion::new(vec![(int(0), rat(1, 3))]);
        let copies = vec![a.clone(); 5];
        let v = verify_uniformity(&copies, &int(5)).unwrap();
        assert!(v.hypothesis_holds && v.conclusion_holds);
        assert_eq!(v.union_measure, rat(1, 3));

        let disjoint: Vec<_> = (0..4)
            .map(|i| IntervalUnion::new(vec![(int(i), int(i) + rat(1, 2))]))
            .collect();
        let v = verify_uniformity(&disjoint, &int(1)).unwrap();
        assert_eq!(v.pair_sum, int(2));
        assert_eq!(v.union_measure, int(2));
        assert!(v.conclusion_holds && !v.violated());

        let uneven = vec![a, IntervalUnion::new(vec![(int(0), int(1))])];
        assert!(verify_uniformity(&uneven, &int(1)).is_err());
    }

    #[test]
    fn uniformity_on_tube_slabs() {
        for seed in 0..5 {
            let fam = kakeya_family(&StickyMap::sample(3, seed).unwrap());
            let v = verify_uniformity_tubes(&fam, &Slab::upper(), None, &Budget::default()).unwrap();
            assert!(v.hypothesis_holds);
            assert!(v.conclusion_holds);
        }
    }

    #[test]
    fn lemma11_slabs() {
        assert_eq!(lemma11_slab_indices(3), 1..=2);
        assert_eq!(lemma11_slab_indices(8), 1..=2);
        assert_eq!(lemma11_slab_indices(9), 1..=3);
        let r = lemma11_check(&katz_example(3).unwrap(), &MeasurePolicy::default(), &Budget::default())
            .unwrap();
        assert_eq!(r.slabs.len(), 2);
        assert!(r.min_scaled > 0.0);
        for (_, slab, a) in &r.slabs {
            assert!(a.value <= slab.width() / int(3));
        }
    }

    fn interval() -> impl Strategy<Value = (Rational, Rational)> {
        (0i64..60, 0i64..20, 1i64..12).prop_map(|(a, len, q)| (rat(a, q), rat(a + len, q)))
    }

    proptest! {
        #[test]
        fn union_is_monotone_and_subadditive(
            a in prop::collection::vec(interval(), 0..8),
            b in prop::collection::vec(interval(), 0..8),
        ) {
            let ua = union_length(&a);
            let ub = union_length(&b);
            let both: Vec<_> = a.iter().chain(&b).cloned().collect();
            let uab = union_length(&both);
            prop_assert!(uab >= ua.clone() && uab >= ub.clone());
            prop_assert!(uab <= ua + ub);
        }

        #[test]
        fn exact_area_bounds(seed in 0u64..1000, n in 1u8..4) {
            let fam = kakeya_family(&StickyMap::sample(n, seed).unwrap());
            let a = exact_area(&fam, &Slab::unit(), &Budget::default()).unwrap().value;
            prop_assert!(a >= fam.tubes[0].area());
            prop_assert!(a <= rat(1, 3));
        }

        #[test]
        fn sampled_hits_exact_when_grid_contains_kinks(seed in 0u64..1000) {
            // All slopes equal: the union is a rigid translate, linear in t.
            let _ = seed;
            let fam = kakeya_family(&flat(2)).restrict(&Slab::upper());
            let e = exact_area(&fam, &Slab::upper(), &Budget::default()).unwrap();
            let s = sampled_area(&fam, &Slab::upper(), 2 + (seed % 50) as u32).unwrap();
            prop_assert_eq!(e.value, s.value);
        }
    }
}
