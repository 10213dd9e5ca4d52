//! Integer kernels behind the exact measure computations.
//!
//! A tube family is rescaled by a common unit `U` so that every tube reads
//! `lower(t)·U = a + b·t`, `upper(t)·U = a + w + b·t` with small integers
//! `a, b, w`, active on `t ∈ [t0, t1]`. Between consecutive event
//! abscissae (where two endpoints cross, or a tube starts or stops) the
//! union length is a linear function of `t`, so areas are integrated
//! exactly piece by piece.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use crate::budget::Budget;
use crate::error::{contract, Result};
use crate::geometry::Tube;
use crate::rational::{Frac, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Band {
    pub a: i64,
    pub b: i64,
    pub w: i64,
    pub t0: Frac,
    pub t1: Frac,
}

impl Band {
    /// `lower(t) · U · t.den`.
    #[inline]
    pub fn lower_at(&self, t: Frac) -> i128 {
        self.a as i128 * t.den as i128 + self.b as i128 * t.num as i128
    }

    #[inline]
    pub fn width_at(&self, t: Frac) -> i128 {
        self.w as i128 * t.den as i128
    }
}

#[derive(Clone, Debug)]
pub(crate) struct BandSet {
    pub unit: i64,
    pub bands: Vec<Band>,
}

impl BandSet {
    pub fn from_tubes(tubes: &[Tube]) -> Result<BandSet> {
        let mut unit = BigInt::from(1u8);
        for t in tubes {
            for r in [&t.intercept, &t.width, &t.slope] {
                unit = unit.lcm(r.denom());
            }
        }
        let Some(unit_i) = unit.to_i64().filter(|u| *u < 1 << 40) else {
            return contract("tube coordinates have denominators too large for the sweep kernel");
        };
        let scale = |r: &Rational| -> Result<i64> {
            let v = r * Rational::from_integer(unit.clone());
            match v.to_integer().to_i64() {
                Some(x) if v.is_integer() && x.abs() < 1 << 50 => Ok(x),
                _ => contract("tube coordinate out of kernel range"),
            }
        };
        let frac = |r: &Rational| -> Result<Frac> {
            match Frac::from_rational(r) {
                Some(f) if f.den < 1 << 30 && f.num.abs() < 1 << 40 => Ok(f),
                _ => contract("tube span endpoint out of kernel range"),
            }
        };
        let bands = tubes
            .iter()
            .map(|t| {
                Ok(Band {
                    a: scale(&t.intercept)?,
                    b: scale(&t.slope)?,
                    w: scale(&t.width)?,
                    t0: frac(&t.t0)?,
                    t1: frac(&t.t1)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BandSet {
            unit: unit_i,
            bands,
        })
    }
}

/// Accumulates integrals of linear pieces `∫_{ta}^{tb} (α + βt) dt` exactly.
///
/// Each piece contributes `F(tb) − F(ta)` with `F(p/q) = (2αpq + βp²)/(2q²)`;
/// the numerators are bucketed by `q` so the big-rational sum at the end
/// only runs over distinct denominators.
#[derive(Default)]
pub(crate) struct PiecewiseIntegral {
    buckets: HashMap<i64, i128>,
    spill: Rational,
}

impl PiecewiseIntegral {
    pub fn add_linear(&mut self, alpha: i128, beta: i128, ta: Frac, tb: Frac) {
        if alpha == 0 && beta == 0 {
            return;
        }
        self.add_point(alpha, beta, tb, false);
        self.add_point(alpha, beta, ta, true);
    }

    fn add_point(&mut self, alpha: i128, beta: i128, t: Frac, negate: bool) {
        let (p, q) = (t.num as i128, t.den as i128);
        let term = alpha
            .checked_mul(2 * p * q)
            .and_then(|x| beta.checked_mul(p * p).and_then(|y| x.checked_add(y)))
            .map(|v| if negate { -v } else { v });
        if let Some(v) = term {
            let slot = self.buckets.entry(t.den).or_insert(0);
            if let Some(sum) = slot.checked_add(v) {
                *slot = sum;
                return;
            }
        }
        let f = Rational::new(
            BigInt::from(alpha) * BigInt::from(2 * p) * BigInt::from(q) + BigInt::from(beta) * BigInt::from(p * p),
            BigInt::from(2 * q * q),
        );
        if negate {
            self.spill -= f;
        } else {
            self.spill += f;
        }
    }

    /// The accumulated integral divided by `unit`.
    pub fn finish(self, unit: i64) -> Rational {
        let mut dens: Vec<_> = self.buckets.into_iter().filter(|(_, v)| *v != 0).collect();
        dens.sort_unstable();
        let mut total = self.spill;
        for (q, num) in dens {
            total += Rational::new(BigInt::from(num), BigInt::from(2 * q as i128 * q as i128));
        }
        total / Rational::from_integer(BigInt::from(unit))
    }
}

/// Union length of the active cross-sections at `t`, scaled by `U · t.den`.
pub(crate) fn slice_union_scaled(set: &BandSet, t: Frac, scratch: &mut Vec<(i128, i128)>) -> i128 {
    scratch.clear();
    scratch.extend(
        set.bands
            .iter()
            .filter(|b| b.t0 <= t && t <= b.t1)
            .map(|b| {
                let lo = b.lower_at(t);
                (lo, lo + b.width_at(t))
            }),
    );
    union_of_sorted(scratch)
}

fn union_of_sorted(ivs: &mut [(i128, i128)]) -> i128 {
    ivs.sort_unstable();
    let mut total = 0;
    let mut iter = ivs.iter();
    let Some(&(mut lo, mut hi)) = iter.next() else {
        return 0;
    };
    for &(l, h) in iter {
        if l > hi {
            total += hi - lo;
            lo = l;
            hi = h;
        } else if h > hi {
            hi = h;
        }
    }
    total + hi - lo
}

/// Clipped spans of the bands active somewhere inside `[lo, hi]`.
fn clip(set: &BandSet, lo: Frac, hi: Frac) -> Vec<(usize, Frac, Frac)> {
    set.bands
        .iter()
        .enumerate()
        .filter_map(|(i, b)| {
            let s0 = b.t0.max(lo);
            let s1 = b.t1.min(hi);
            (s0 < s1).then_some((i, s0, s1))
        })
        .collect()
}

/// Times strictly inside `(s0, s1)` at which an endpoint of `x` meets an
/// endpoint of `y`. Pairs that never touch on the span produce nothing.
fn crossings(x: &Band, y: &Band, s0: Frac, s1: Frac, out: &mut Vec<Frac>) {
    let db = x.b as i128 - y.b as i128;
    if db == 0 {
        return;
    }
    let da = x.a as i128 - y.a as i128;
    // D(t) = lower_x − lower_y; the intervals meet iff −w_x ≤ D ≤ w_y.
    let d0 = (da * s0.den as i128 + db * s0.num as i128, s0.den as i128);
    let d1 = (da * s1.den as i128 + db * s1.num as i128, s1.den as i128);
    let below = |d: (i128, i128)| d.0 < -(x.w as i128) * d.1;
    let above = |d: (i128, i128)| d.0 > y.w as i128 * d.1;
    if (below(d0) && below(d1)) || (above(d0) && above(d1)) {
        return;
    }
    let mut targets = [0i128, y.w as i128, -(x.w as i128), y.w as i128 - x.w as i128];
    targets.sort_unstable();
    let mut prev = None;
    for c in targets {
        if prev == Some(c) {
            continue;
        }
        prev = Some(c);
        let num = c - da;
        let g = num.gcd(&db).max(1);
        let (mut p, mut q) = (num / g, db / g);
        if q < 0 {
            p = -p;
            q = -q;
        }
        let (Ok(p), Ok(q)) = (i64::try_from(p), i64::try_from(q)) else {
            continue;
        };
        let t = Frac { num: p, den: q };
        if s0 < t && t < s1 {
            out.push(t);
        }
    }
}

/// Exact area of the union of the bands over `t ∈ [lo, hi]`.
pub(crate) fn exact_union_area(set: &BandSet, lo: Frac, hi: Frac, budget: &Budget) -> Result<Rational> {
    let clipped = clip(set, lo, hi);
    let mut events = vec![lo, hi];
    let mut span_marks = HashSet::new();
    for &(_, s0, s1) in &clipped {
        events.push(s0);
        events.push(s1);
        span_marks.insert(s0);
        span_marks.insert(s1);
    }
    for (x, &(i, s0, s1)) in clipped.iter().enumerate() {
        for &(j, u0, u1) in &clipped[x + 1..] {
            let c0 = s0.max(u0);
            let c1 = s1.min(u1);
            if c0 < c1 {
                crossings(&set.bands[i], &set.bands[j], c0, c1, &mut events);
            }
        }
        budget.check_with_hint(
            "sweep events",
            events.len() as u128,
            "; use sampled mode for this size",
        )?;
    }
    events.sort_unstable();
    events.dedup();

    let mut integral = PiecewiseIntegral::default();
    let mut order: Vec<usize> = Vec::new();
    let mut keys = vec![0i128; set.bands.len()];
    for w in events.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        if ta == events[0] || span_marks.contains(&ta) {
            order = clipped
                .iter()
                .filter(|&&(_, s0, s1)| s0 <= ta && tb <= s1)
                .map(|&(i, _, _)| i)
                .collect();
        }
        if order.is_empty() {
            continue;
        }
        let mid = ta.mid(tb);
        let (alpha, beta) = union_form(set, &mut order, &mut keys, mid);
        integral.add_linear(alpha, beta, ta, tb);
    }
    Ok(integral.finish(set.unit))
}

/// `(α, β)` with union length `· U = α + βt` on the gap containing `mid`.
/// `order` is re-sorted in place; it is nearly sorted from the previous
/// gap, so insertion sort is cheap.
fn union_form(set: &BandSet, order: &mut [usize], keys: &mut [i128], mid: Frac) -> (i128, i128) {
    for &i in order.iter() {
        keys[i] = set.bands[i].lower_at(mid);
    }
    for x in 1..order.len() {
        let cur = order[x];
        let mut y = x;
        while y > 0 && keys[order[y - 1]] > keys[cur] {
            order[y] = order[y - 1];
            y -= 1;
        }
        order[y] = cur;
    }
    let band = |i: usize| &set.bands[i];
    let first = band(order[0]);
    let (mut lo_a, mut lo_b) = (first.a as i128, first.b as i128);
    let (mut hi_a, mut hi_b) = (lo_a + first.w as i128, lo_b);
    let mut hi_key = keys[order[0]] + first.width_at(mid);
    let (mut alpha, mut beta) = (0i128, 0i128);
    for &i in &order[1..] {
        let b = band(i);
        if keys[i] > hi_key {
            alpha += hi_a - lo_a;
            beta += hi_b - lo_b;
            lo_a = b.a as i128;
            lo_b = b.b as i128;
            hi_a = lo_a + b.w as i128;
            hi_b = lo_b;
            hi_key = keys[i] + b.width_at(mid);
        } else {
            let up = keys[i] + b.width_at(mid);
            if up > hi_key {
                hi_a = b.a as i128 + b.w as i128;
                hi_b = b.b as i128;
                hi_key = up;
            }
        }
    }
    (alpha + hi_a - lo_a, beta + hi_b - lo_b)
}

/// Composite trapezoid over `m ≥ 2` equispaced slices of `[lo, hi]`,
/// each slice exact. Returns the estimate as an exact rational.
pub(crate) fn trapezoid_area(set: &BandSet, lo: Frac, hi: Frac, m: u32) -> Rational {
    assert!(m >= 2);
    let gaps = (m - 1) as i128;
    let common = (lo.den as i128).lcm(&(hi.den as i128)) * gaps;
    let q = i64::try_from(common).expect("slice grid denominator fits i64");
    let p_lo = lo.num as i128 * (common / lo.den as i128);
    let p_hi = hi.num as i128 * (common / hi.den as i128);
    let step = (p_hi - p_lo) / gaps;
    let mut scratch = Vec::new();
    let mut total2: i128 = 0;
    for i in 0..m as i128 {
        let t = Frac {
            num: i64::try_from(p_lo + i * step).expect("slice abscissa fits i64"),
            den: q,
        };
        let s = slice_union_scaled(set, t, &mut scratch);
        total2 += if i == 0 || i == gaps { s } else { 2 * s };
    }
    let span = hi.to_rational() - lo.to_rational();
    span * Rational::new(
        BigInt::from(total2),
        BigInt::from(2 * gaps) * BigInt::from(set.unit) * BigInt::from(q),
    )
}

/// `Σ_{i,j} |B_i ∩ B_j|` over `t ∈ [lo, hi]`, diagonal included.
pub(crate) fn pairwise_overlap_sum(set: &BandSet, lo: Frac, hi: Frac, budget: &Budget) -> Result<Rational> {
    let clipped = clip(set, lo, hi);
    budget.check("tube pairs", (clipped.len() as u128).pow(2))?;
    let mut integral = PiecewiseIntegral::default();
    let mut events = Vec::new();
    for (x, &(i, s0, s1)) in clipped.iter().enumerate() {
        let bi = &set.bands[i];
        integral.add_linear(bi.w as i128, 0, s0, s1);
        for &(j, u0, u1) in &clipped[x + 1..] {
            let bj = &set.bands[j];
            let c0 = s0.max(u0);
            let c1 = s1.min(u1);
            if c0 >= c1 {
                continue;
            }
            events.clear();
            events.push(c0);
            events.push(c1);
            crossings(bi, bj, c0, c1, &mut events);
            events.sort_unstable();
            events.dedup();
            for w in events.windows(2) {
                let mid = w[0].mid(w[1]);
                let (la, lb, lk) = {
                    let (ki, kj) = (bi.lower_at(mid), bj.lower_at(mid));
                    if ki >= kj {
                        (bi.a as i128, bi.b as i128, ki)
                    } else {
                        (bj.a as i128, bj.b as i128, kj)
                    }
                };
                let (ha, hb, hk) = {
                    let ui = bi.lower_at(mid) + bi.width_at(mid);
                    let uj = bj.lower_at(mid) + bj.width_at(mid);
                    if ui <= uj {
                        (bi.a as i128 + bi.w as i128, bi.b as i128, ui)
                    } else {
                        (bj.a as i128 + bj.w as i128, bj.b as i128, uj)
                    }
                };
                if hk > lk {
                    // Off-diagonal pairs count twice (ordered pairs).
                    integral.add_linear(2 * (ha - la), 2 * (hb - lb), w[0], w[1]);
                }
            }
        }
    }
    Ok(integral.finish(set.unit))
}
