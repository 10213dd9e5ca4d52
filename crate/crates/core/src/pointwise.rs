//! Everything about one point `(t, y)`: candidate slopes `c_{t,y}(s)`,
//! the slice tree `T*_{n,t,y}`, and the exact probability that the point
//! lies in `K_σ`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::Serialize;

use crate::error::{contract, Result};
use crate::percolation::{resistance_recursive, survival_exact, Resistance, Subtree};
use crate::rational::{fmt_rational, int, parse_rational, pow3, rat, to_f64, Rational};
use crate::rng::{keyed_rng, DOMAIN_POINTS};
use crate::sticky::{CantorString, EdgeLabeling, StickyMap};
use crate::tree::{TernaryString, MAX_LEVEL};

/// A point with `1/3 < t < 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Point {
    t: Rational,
    y: Rational,
}

impl Point {
    pub fn new(t: Rational, y: Rational) -> Result<Point> {
        if t <= rat(1, 3) || t >= int(1) {
            return contract(format!("t = {} is not strictly between 1/3 and 1", fmt_rational(&t)));
        }
        Ok(Point { t, y })
    }

    pub fn parse(t: &str, y: &str) -> Result<Point> {
        Point::new(parse_rational(t)?, parse_rational(y)?)
    }

    pub fn t(&self) -> &Rational {
        &self.t
    }

    pub fn y(&self) -> &Rational {
        &self.y
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", fmt_rational(&self.t), fmt_rational(&self.y))
    }
}

/// `I_{s,c,t} = [s/3 + tc, s/3 + (1+3t)/3^{k+1} + tc]`.
pub fn slice_interval(s: TernaryString, c: CantorString, t: &Rational) -> Result<(Rational, Rational)> {
    if s.level() != c.level() {
        return contract(format!("levels differ: {s} vs {c}"));
    }
    let lo = s.value() / int(3) + t * c.value();
    let len = (int(1) + int(3) * t) / Rational::from_integer(BigInt::from(3u8).pow(s.level() as u32 + 1));
    Ok((lo.clone(), lo + len))
}

/// Integer form of the point used for candidate searches. Scaling every
/// comparison at level `k` by `3^{k+1}·yq·tq` leaves
/// `y ∈ I_{s,c,t}  ⇔  m·D ≤ B ≤ m·D + W` with `c = m/3^k`, `s = i/3^k`,
/// `B = 3^{k+1}·yp·tq − i·yq·tq`, `D = 3·tp·yq`, `W = (tq + 3tp)·yq`.
struct Scaled {
    yp_tq: BigInt,
    q: BigInt,
    d: BigInt,
    w: BigInt,
}

impl Scaled {
    fn new(p: &Point) -> Scaled {
        let (tp, tq) = (p.t.numer(), p.t.denom());
        let (yp, yq) = (p.y.numer(), p.y.denom());
        Scaled {
            yp_tq: yp * tq,
            q: yq * tq,
            d: BigInt::from(3) * tp * yq,
            w: (tq + BigInt::from(3) * tp) * yq,
        }
    }

    fn b(&self, s: TernaryString) -> BigInt {
        let scale = BigInt::from(3u8).pow(s.level() as u32 + 1);
        &self.yp_tq * scale - BigInt::from(s.index()) * &self.q
    }

    /// The Cantor index `m` with `y ∈ I_{s, m/3^k, t}`, if any.
    fn candidate(&self, s: TernaryString) -> Option<u64> {
        let b = self.b(s);
        let lo = (&b - &self.w).div_ceil(&self.d).max(BigInt::zero());
        let hi = b.div_floor(&self.d);
        let top = BigInt::from(pow3(s.level() as u32));
        let mut m = lo;
        let mut found = None;
        while m <= hi && m < top {
            let v: u64 = (&m).try_into().expect("below 3^level");
            if is_cantor_index(v, s.level()) {
                debug_assert!(found.is_none(), "two candidates for {s}");
                found = Some(v);
            }
            m += 1;
        }
        found
    }

    /// `y` in the closed cross-section of the width-`3^{-(k+1)}` tube of
    /// `s` with slope `m/3^k`.
    fn narrow_hit(&self, s: TernaryString, m: u64) -> bool {
        let b = self.b(s);
        let md = BigInt::from(m) * &self.d;
        b >= md && b <= md + &self.q
    }
}

fn is_cantor_index(mut m: u64, level: u8) -> bool {
    for _ in 0..level {
        if m % 3 == 1 {
            return false;
        }
        m /= 3;
    }
    m == 0
}

fn cantor(level: u8, m: u64) -> CantorString {
    CantorString::new(TernaryString::from_index_unchecked(level, m)).expect("Cantor index")
}

/// `c_{t,y}(s)`: the unique `c ∈ C_k` with `y ∈ I_{s,c,t}`.
pub fn candidate_slope(s: TernaryString, point: &Point) -> Option<CantorString> {
    if s.is_root() {
        return None;
    }
    Scaled::new(point).candidate(s).map(|m| cantor(s.level(), m))
}

/// `T*_{n,t,y}` with the data needed for membership: the candidate slope
/// of every node and, at level `n`, whether `y` lies in the node's own
/// tube cross-section.
#[derive(Clone, Debug)]
pub struct SliceTree {
    point: Point,
    tree: Subtree,
    candidates: Vec<Option<CantorString>>,
    narrow: Vec<bool>,
}

pub fn build_slice_tree(n: u8, point: &Point) -> Result<SliceTree> {
    if n > MAX_LEVEL {
        return contract(format!("depth {n} exceeds {MAX_LEVEL}"));
    }
    let scaled = Scaled::new(point);
    let mut nodes = vec![TernaryString::ROOT];
    let mut slopes = vec![None::<u64>];
    let mut narrow = vec![n == 0 && scaled.narrow_hit(TernaryString::ROOT, 0)];
    let mut frontier = vec![(TernaryString::ROOT, 0u64)];
    for _ in 0..n {
        let mut next = Vec::new();
        for &(s, m) in &frontier {
            for c in s.children() {
                if let Some(mc) = scaled.candidate(c) {
                    assert_eq!(mc / 3, m, "candidate of {c} does not extend its parent's");
                    next.push((c, mc));
                }
            }
        }
        for &(c, mc) in &next {
            nodes.push(c);
            slopes.push(Some(mc));
            narrow.push(c.level() == n && scaled.narrow_hit(c, mc));
        }
        frontier = next;
    }
    let tree = Subtree::new(n, nodes.iter().copied())?;
    debug_assert_eq!(tree.nodes(), nodes.as_slice());
    let candidates = nodes
        .iter()
        .zip(&slopes)
        .map(|(s, m)| m.map(|m| cantor(s.level(), m)))
        .collect();
    let built = SliceTree {
        point: point.clone(),
        tree,
        candidates,
        narrow,
    };
    Ok(built)
}

impl SliceTree {
    pub fn n(&self) -> u8 {
        self.tree.n()
    }

    pub fn point(&self) -> &Point {
        &self.point
    }

    pub fn subtree(&self) -> &Subtree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    /// `c_{t,y}(v)` for the `i`-th node in canonical order.
    pub fn candidate(&self, i: usize) -> Option<CantorString> {
        self.candidates[i]
    }

    /// `π_k(c_{t,y}(v))` for a non-root node at level `k`.
    pub fn req_digit(&self, i: usize) -> Option<u8> {
        self.candidates[i].map(|c| c.as_ternary().last_digit().expect("non-root"))
    }

    pub fn narrow_hit(&self, i: usize) -> bool {
        self.narrow[i]
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.tree.level_counts()
    }

    /// `max_k #(level k) / 2^k`.
    pub fn max_level_ratio(&self) -> Rational {
        self.level_counts()
            .iter()
            .enumerate()
            .map(|(k, &c)| Rational::new(BigInt::from(c), BigInt::one() << k))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// The slice tree with level-`n` leaves that miss their own tube
    /// removed.
    pub fn pruned(&self) -> Subtree {
        let n = self.n();
        let nodes = self
            .tree
            .nodes()
            .iter()
            .zip(&self.narrow)
            .filter(|(s, &hit)| s.level() < n || hit)
            .map(|(s, _)| *s);
        Subtree::new(n, nodes).expect("removing leaves keeps the tree root-connected")
    }
}

/// Point-in-tube scan over all `3^n` tubes of `K_σ`, given `σ`'s images in
/// lexicographic order.
pub fn membership_geometric(images: &[CantorString], point: &Point) -> bool {
    let scaled = Scaled::new(point);
    images.iter().enumerate().any(|(i, c)| {
        let s = TernaryString::from_index_unchecked(c.level(), i as u64);
        scaled.narrow_hit(s, c.as_ternary().index())
    })
}

/// Membership read off the slice tree: some narrow-hit leaf whose root path
/// carries, on every edge, the label equal to the node's required digit.
pub fn membership_tree(labeling: &EdgeLabeling, slice: &SliceTree) -> Result<bool> {
    if labeling.n() != slice.n() {
        return contract(format!("labeling depth {} vs slice tree depth {}", labeling.n(), slice.n()));
    }
    let tree = &slice.tree;
    let mut open = vec![false; tree.len()];
    open[0] = true;
    let mut hit = slice.n() == 0 && slice.narrow[0];
    for i in 1..tree.len() {
        let parent = tree.parent_index(i).expect("non-root");
        let s = tree.nodes()[i];
        open[i] = open[parent] && slice.req_digit(i) == Some(labeling.label_into(s));
        hit |= open[i] && slice.narrow[i];
    }
    Ok(hit)
}

/// Whether `point ∈ K_σ`, computed by the tube scan and by the slice tree;
/// a disagreement is reported as an error.
pub fn membership(sigma: &StickyMap, point: &Point) -> Result<bool> {
    let geometric = membership_geometric(&sigma.images(), point);
    let slice = build_slice_tree(sigma.n(), point)?;
    let tree = membership_tree(sigma.labeling(), &slice)?;
    if geometric != tree {
        return contract(format!(
            "membership of {point} disagrees: tube scan {geometric}, slice tree {tree}"
        ));
    }
    Ok(geometric)
}

/// `P_n(t, y)`: survival of the slice tree after dropping leaves that miss
/// their own tube. Each kept edge is open exactly when its fair label
/// equals the required digit.
pub fn membership_probability_exact(n: u8, point: &Point) -> Result<Rational> {
    Ok(survival_exact(&build_slice_tree(n, point)?.pruned()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma13Verdict {
    pub membership: Rational,
    pub survival: Rational,
    pub holds: bool,
}

/// `P_n(t,y) ≤ survival(T*_{n,t,y})`.
pub fn lemma13_check(n: u8, point: &Point) -> Result<Lemma13Verdict> {
    let slice = build_slice_tree(n, point)?;
    let membership = survival_exact(&slice.pruned());
    let survival = survival_exact(slice.subtree());
    Ok(Lemma13Verdict {
        holds: membership <= survival,
        membership,
        survival,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lemma22Verdict {
    pub n: u8,
    pub resistance: Resistance,
    /// `R/n`, infinite for a tree that never reaches level `n`.
    pub ratio: f64,
    pub floor: f64,
    pub holds: bool,
}

/// `R(T*_{n,t,y}) / n ≥ floor`.
pub fn lemma22_check(n: u8, point: &Point, floor: f64) -> Result<Lemma22Verdict> {
    if n == 0 {
        return contract("resistance ratio needs n ≥ 1");
    }
    let slice = build_slice_tree(n, point)?;
    let resistance = resistance_recursive(slice.subtree());
    let ratio = resistance.to_f64() / n as f64;
    Ok(Lemma22Verdict {
        n,
        holds: ratio >= floor,
        resistance,
        ratio,
        floor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Corollary23Report {
    pub n: u8,
    pub points: usize,
    /// `max n·P_n(t,y)` over the sample.
    pub max_scaled: f64,
    pub argmax: Option<(String, String)>,
}

pub fn corollary23_check(n: u8, points: &[Point]) -> Result<Corollary23Report> {
    let mut best = (Rational::zero(), None);
    for p in points {
        let scaled = membership_probability_exact(n, p)? * int(n as i64);
        if scaled > best.0 || best.1.is_none() {
            best = (scaled, Some((fmt_rational(p.t()), fmt_rational(p.y()))));
        }
    }
    Ok(Corollary23Report {
        n,
        points: points.len(),
        max_scaled: to_f64(&best.0),
        argmax: best.1,
    })
}

const POINT_BITS: u32 = 20;

/// `count` points on the midpoint grid of `(1/3, 1) × (0, 4/3)` with
/// `2^20` cells per side, chosen by `(seed, points)` stream `key`.
pub fn random_points(count: usize, seed: u64, key: u64) -> Vec<Point> {
    let mut rng = keyed_rng(seed, DOMAIN_POINTS, key);
    (0..count)
        .map(|_| {
            let u = (rng.next_u32() >> (32 - POINT_BITS)) as i64;
            let v = (rng.next_u32() >> (32 - POINT_BITS)) as i64;
            grid_point(u, v, POINT_BITS)
        })
        .collect()
}

/// Midpoint of cell `(u, v)` in the `2^bits × 2^bits` grid over
/// `(1/3, 1) × (0, 4/3)`.
pub fn grid_point(u: i64, v: i64, bits: u32) -> Point {
    let cells = 1i64 << (bits + 1);
    let t = rat(1, 3) + rat(2, 3) * rat(2 * u + 1, cells);
    let y = rat(4, 3) * rat(2 * v + 1, cells);
    Point::new(t, y).expect("grid midpoints are interior")
}

pub const SLICE_CSV_HEADER: &str = "n,t,y,tree_size,max_level_ratio,R,survival,P_exact";

/// One CSV row describing the slice tree at `point`.
pub fn slice_csv_row(n: u8, point: &Point) -> Result<String> {
    let slice = build_slice_tree(n, point)?;
    Ok(format!(
        "{},{},{},{},{},{},{},{}",
        n,
        fmt_rational(point.t()),
        fmt_rational(point.y()),
        slice.len(),
        fmt_rational(&slice.max_level_ratio()),
        resistance_recursive(slice.subtree()),
        fmt_rational(&survival_exact(slice.subtree())),
        fmt_rational(&survival_exact(&slice.pruned())),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sticky::katz_example;
    use proptest::prelude::*;

    fn ts(s: &str) -> TernaryString {
        s.parse().unwrap()
    }

    fn cs(s: &str) -> CantorString {
        CantorString::new(ts(s)).unwrap()
    }

    fn half() -> Point {
        Point::new(rat(1, 2), rat(1, 2)).unwrap()
    }

    #[test]
    fn points_reject_boundary_times() {
        assert!(Point::new(rat(1, 3), int(0)).is_err());
        assert!(Point::new(int(1), int(0)).is_err());
        assert!(Point::new(rat(1, 2), int(-5)).is_ok());
        assert!(Point::parse("2/3", "1/7").is_ok());
    }

    #[test]
    fn slice_interval_examples() {
        let t = rat(1, 2);
        assert_eq!(slice_interval(ts(".0"), cs(".2"), &t).unwrap(), (rat(1, 3), rat(11, 18)));
        assert_eq!(slice_interval(ts(".0"), cs(".0"), &t).unwrap(), (int(0), rat(5, 18)));
        let (a, b) = slice_interval(ts(".12"), cs(".20"), &t).unwrap();
        assert_eq!(b - a, rat(5, 54));
        assert!(slice_interval(ts(".1"), cs(".20"), &t).is_err());
    }

    #[test]
    fn candidate_examples() {
        assert_eq!(candidate_slope(ts(".0"), &half()), Some(cs(".2")));
        let far = Point::new(rat(1, 2), int(2)).unwrap();
        assert_eq!(candidate_slope(ts(".0"), &far), None);
        assert_eq!(build_slice_tree(4, &far).unwrap().len(), 1);
        let below = Point::new(rat(1, 2), rat(-1, 100)).unwrap();
        assert_eq!(build_slice_tree(5, &below).unwrap().len(), 1);
    }

    /// Brute force over all of `C_k` with the rational interval.
    fn candidate_by_scan(s: TernaryString, p: &Point) -> Option<CantorString> {
        let k = s.level();
        let hits: Vec<_> = (0..pow3(k as u32))
            .filter_map(|m| CantorString::new(TernaryString::from_index(k, m).unwrap()).ok())
            .filter(|&c| {
                let (lo, hi) = slice_interval(s, c, p.t()).unwrap();
                lo <= *p.y() && *p.y() <= hi
            })
            .collect();
        assert!(hits.len() <= 1);
        hits.first().copied()
    }

    #[test]
    fn candidates_match_scan_and_tree_is_complete() {
        for p in random_points(40, 3, 0) {
            let tree = build_slice_tree(4, &p).unwrap();
            for k in 1..=4u8 {
                for i in 0..pow3(k as u32) {
                    let s = TernaryString::from_index(k, i).unwrap();
                    let c = candidate_by_scan(s, &p);
                    assert_eq!(candidate_slope(s, &p), c);
                    assert_eq!(tree.subtree().contains(s), c.is_some(), "{s} at {p}");
                }
            }
        }
    }

    #[test]
    fn slice_tree_coherence_and_level_counts() {
        for p in random_points(200, 8, 0) {
            let tree = build_slice_tree(8, &p).unwrap();
            for (i, s) in tree.subtree().nodes().iter().enumerate().skip(1) {
                let c = tree.candidate(i).unwrap();
                let parent = tree.subtree().parent_index(i).unwrap();
                if parent > 0 {
                    assert_eq!(c.prefix(s.level() - 1).unwrap(), tree.candidate(parent).unwrap());
                }
            }
            for (k, &c) in tree.level_counts().iter().enumerate() {
                assert!(c <= 4 << k);
            }
        }
    }

    #[test]
    fn membership_examples() {
        // Center line of tube `.1` under the Katz labeling.
        let sigma = katz_example(2).unwrap();
        let s = ts(".11");
        let c = sigma.apply(s).unwrap();
        let t = rat(1, 2);
        let y = s.value() / int(3) + &t * c.value() + rat(1, 54);
        let p = Point::new(t.clone(), y).unwrap();
        assert!(membership(&sigma, &p).unwrap());
        let high = Point::new(t, rat(3, 2)).unwrap();
        assert!(!membership(&sigma, &high).unwrap());
    }

    #[test]
    fn chain_probability() {
        // A point on the lower boundary of tube `.000…` with slope `.000…`
        // has a single candidate chain.
        for n in 1..6u8 {
            let p = Point::new(rat(1, 2), Rational::zero()).unwrap();
            let tree = build_slice_tree(n, &p).unwrap();
            assert_eq!(tree.len(), n as usize + 1);
            assert_eq!(membership_probability_exact(n, &p).unwrap(), rat(1, 1 << n));
        }
    }

    #[test]
    fn no_narrow_hits_means_zero() {
        for p in random_points(200, 4, 1) {
            let tree = build_slice_tree(3, &p).unwrap();
            if (0..tree.len()).all(|i| !tree.narrow_hit(i)) {
                assert!(membership_probability_exact(3, &p).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn lemma13_and_corollary_examples() {
        let far = Point::new(rat(1, 2), int(3)).unwrap();
        let v = lemma13_check(4, &far).unwrap();
        assert!(v.holds && v.survival.is_zero() && v.membership.is_zero());
        let v = lemma22_check(4, &far, 1.0).unwrap();
        assert!(v.holds && v.resistance == Resistance::Infinite);
        let r = corollary23_check(4, &[far]).unwrap();
        assert_eq!(r.max_scaled, 0.0);
    }

    #[test]
    fn chain_resistance_ratio() {
        let p = Point::new(rat(1, 2), Rational::zero()).unwrap();
        let v = lemma22_check(6, &p, 2.0).unwrap();
        assert_eq!(v.resistance, Resistance::Finite(int(126)));
        assert!(v.holds);
    }

    #[test]
    fn csv_row_shape() {
        let row = slice_csv_row(3, &half()).unwrap();
        assert_eq!(row.split(',').count(), SLICE_CSV_HEADER.split(',').count());
        assert!(row.starts_with("3,1/2,1/2,"));
    }

    #[test]
    fn intervals_are_disjoint_for_fixed_node() {
        for (num, den) in [(2, 5), (1, 2), (7, 9), (99, 100), (34, 100)] {
            let t = rat(num, den);
            for k in 1..=5u8 {
                let s = TernaryString::from_index(k, pow3(k as u32) / 2).unwrap();
                let mut ivs: Vec<_> = (0..pow3(k as u32))
                    .filter_map(|m| CantorString::new(TernaryString::from_index(k, m).unwrap()).ok())
                    .map(|c| slice_interval(s, c, &t).unwrap())
                    .collect();
                ivs.sort();
                assert!(ivs.windows(2).all(|w| w[0].1 < w[1].0));
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tube_scan_agrees_with_slice_tree(seed in 0u64..1_000_000, n in 1u8..=5, key in 0u64..1000) {
            let sigma = StickyMap::sample(n, seed).unwrap();
            for p in random_points(20, seed, key) {
                prop_assert!(membership(&sigma, &p).is_ok());
            }
        }

        #[test]
        fn membership_below_survival(seed in 0u64..1_000_000, n in 1u8..=7) {
            for p in random_points(5, seed, 0) {
                prop_assert!(lemma13_check(n, &p).unwrap().holds);
            }
        }
    }
}
