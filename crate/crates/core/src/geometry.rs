//! Tubes `P_{σ,s}`, slabs, the family `K_σ`, and pairwise overlaps.

use std::io::Write;

use num_traits::{One, Signed, Zero};

use crate::budget::Budget;
use crate::error::{contract, Result};
use crate::rational::{fmt_rational, int, inv_pow3, rat, Frac, Rational};
use crate::sticky::StickyMap;
use crate::sweep::{pairwise_overlap_sum, BandSet};
use crate::tree::TernaryString;

/// A parallelogram with two vertical sides: for `t ∈ [t0, t1]` its
/// vertical cross-section is `[intercept + t·slope, intercept + width + t·slope]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tube {
    pub source: TernaryString,
    pub intercept: Rational,
    pub width: Rational,
    pub slope: Rational,
    pub t0: Rational,
    pub t1: Rational,
}

impl Tube {
    pub fn length(&self) -> Rational {
        &self.t1 - &self.t0
    }

    pub fn area(&self) -> Rational {
        &self.width * self.length()
    }

    /// Horizontal extent over vertical width.
    pub fn eccentricity(&self) -> Rational {
        self.length() / &self.width
    }

    pub fn lower_at(&self, t: &Rational) -> Rational {
        &self.intercept + t * &self.slope
    }

    /// Corners in the order (t0, low), (t0, high), (t1, low), (t1, high).
    pub fn corners(&self) -> [(Rational, Rational); 4] {
        let l0 = self.lower_at(&self.t0);
        let l1 = self.lower_at(&self.t1);
        [
            (self.t0.clone(), l0.clone()),
            (self.t0.clone(), l0 + &self.width),
            (self.t1.clone(), l1.clone()),
            (self.t1.clone(), l1 + &self.width),
        ]
    }

    /// Vertical slice at `t`; `None` outside the tube's span.
    pub fn cross_section(&self, t: &Rational) -> Option<(Rational, Rational)> {
        if *t < self.t0 || *t > self.t1 {
            return None;
        }
        let lo = self.lower_at(t);
        let hi = &lo + &self.width;
        Some((lo, hi))
    }

    /// Closed point membership.
    pub fn contains(&self, t: &Rational, y: &Rational) -> bool {
        self.cross_section(t)
            .is_some_and(|(lo, hi)| lo <= *y && *y <= hi)
    }

    /// `T ∩ slab`; `None` when they share no positive-length span.
    pub fn restrict(&self, slab: &Slab) -> Option<Tube> {
        let t0 = (&self.t0).max(&slab.t0).clone();
        let t1 = (&self.t1).min(&slab.t1).clone();
        (t0 < t1).then(|| Tube {
            t0,
            t1,
            ..self.clone()
        })
    }

    /// Dilation by 2 about the center: span and width both doubled around
    /// their midpoints, same slope and center line.
    pub fn double(&self) -> Tube {
        let half_len = self.length() / int(2);
        Tube {
            source: self.source,
            intercept: &self.intercept - &self.width / int(2),
            width: &self.width * int(2),
            slope: self.slope.clone(),
            t0: &self.t0 - &half_len,
            t1: &self.t1 + &half_len,
        }
    }

    pub fn center(&self) -> (Rational, Rational) {
        let t = (&self.t0 + &self.t1) / int(2);
        let y = self.lower_at(&t) + &self.width / int(2);
        (t, y)
    }
}

/// A vertical strip `[t0, t1] × ℝ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Slab {
    pub t0: Rational,
    pub t1: Rational,
}

impl Slab {
    pub fn new(t0: Rational, t1: Rational) -> Result<Slab> {
        if t0.is_negative() || t0 >= t1 {
            return contract(format!(
                "slab needs 0 <= t0 < t1, got [{}, {}]",
                fmt_rational(&t0),
                fmt_rational(&t1)
            ));
        }
        Ok(Slab { t0, t1 })
    }

    /// `S_j = [3^{-j}, 3^{1-j}]`.
    pub fn triadic(j: u32) -> Slab {
        let t0 = inv_pow3(j);
        let t1 = &t0 * int(3);
        Slab { t0, t1 }
    }

    pub fn unit() -> Slab {
        Slab {
            t0: Rational::zero(),
            t1: Rational::one(),
        }
    }

    /// `[1/3, 1]`, where the upper-bound tubes live.
    pub fn upper() -> Slab {
        Slab {
            t0: rat(1, 3),
            t1: Rational::one(),
        }
    }

    pub fn width(&self) -> Rational {
        &self.t1 - &self.t0
    }

    pub(crate) fn fracs(&self) -> Result<(Frac, Frac)> {
        match (Frac::from_rational(&self.t0), Frac::from_rational(&self.t1)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => contract("slab endpoints out of kernel range"),
        }
    }
}

/// One tube per `s ∈ T_n`, in lexicographic order of `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TubeFamily {
    pub n: u8,
    pub tubes: Vec<Tube>,
}

impl TubeFamily {
    pub fn len(&self) -> usize {
        self.tubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tubes.is_empty()
    }

    pub fn restrict(&self, slab: &Slab) -> TubeFamily {
        TubeFamily {
            n: self.n,
            tubes: self.tubes.iter().filter_map(|t| t.restrict(slab)).collect(),
        }
    }

    pub fn doubled(&self) -> TubeFamily {
        TubeFamily {
            n: self.n,
            tubes: self.tubes.iter().map(Tube::double).collect(),
        }
    }

    /// CSV with columns source, intercept, width, slope, t0, t1.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "source,intercept,width,slope,t0,t1")?;
        for t in &self.tubes {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                t.source,
                fmt_rational(&t.intercept),
                fmt_rational(&t.width),
                fmt_rational(&t.slope),
                fmt_rational(&t.t0),
                fmt_rational(&t.t1)
            )?;
        }
        Ok(())
    }
}

fn tube_from_image(n: u8, s: TernaryString, slope: Rational) -> Tube {
    Tube {
        source: s,
        intercept: s.value() / int(3),
        width: inv_pow3(n as u32 + 1),
        slope,
        t0: Rational::zero(),
        t1: Rational::one(),
    }
}

/// `P_{σ,s}`: corners `(0, s/3)`, `(0, s/3 + 3^{-(n+1)})`, `(1, s/3 + σ(s))`,
/// `(1, s/3 + 3^{-(n+1)} + σ(s))`.
pub fn tube(sigma: &StickyMap, s: TernaryString) -> Result<Tube> {
    let image = sigma.apply(s)?;
    Ok(tube_from_image(sigma.n(), s, image.value()))
}

/// `K_σ` as its tubes.
pub fn kakeya_family(sigma: &StickyMap) -> TubeFamily {
    let n = sigma.n();
    let tubes = sigma
        .images()
        .into_iter()
        .enumerate()
        .map(|(i, img)| {
            let s = TernaryString::from_index_unchecked(n, i as u64);
            tube_from_image(n, s, img.value())
        })
        .collect();
    TubeFamily { n, tubes }
}

pub fn cross_section(tube: &Tube, t: &Rational) -> Option<(Rational, Rational)> {
    tube.cross_section(t)
}

pub fn restrict(tube: &Tube, slab: &Slab) -> Option<Tube> {
    tube.restrict(slab)
}

pub fn double(tube: &Tube) -> Tube {
    tube.double()
}

/// The `N = 3^n` parallelograms `P_j` (tubes cut to `t ∈ [1/3, 1]`) and
/// their doubles `2P_j`.
pub fn theorem_tubes(sigma: &StickyMap) -> (TubeFamily, TubeFamily) {
    let upper = kakeya_family(sigma).restrict(&Slab::upper());
    let doubled = upper.doubled();
    (upper, doubled)
}

/// Exact `|T1 ∩ T2|`: the overlap length of the cross-sections is linear
/// between the abscissae where endpoints cross, so each piece is
/// integrated with the trapezoid rule, which is exact there.
pub fn overlap_area(a: &Tube, b: &Tube) -> Rational {
    let lo = (&a.t0).max(&b.t0).clone();
    let hi = (&a.t1).min(&b.t1).clone();
    if lo >= hi {
        return Rational::zero();
    }
    let mut cuts = vec![lo.clone(), hi.clone()];
    let ds = &a.slope - &b.slope;
    if !ds.is_zero() {
        let da = &a.intercept - &b.intercept;
        // lower_a − lower_b = da + ds·t equals each offset at a crossing.
        for offset in [Rational::zero(), b.width.clone(), -a.width.clone(), &b.width - &a.width] {
            let t = (offset - &da) / &ds;
            if lo < t && t < hi {
                cuts.push(t);
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    let overlap_at = |t: &Rational| -> Rational {
        let (al, ah) = a.cross_section(t).expect("t inside both spans");
        let (bl, bh) = b.cross_section(t).expect("t inside both spans");
        let v = ah.min(bh) - al.max(bl);
        if v.is_positive() {
            v
        } else {
            Rational::zero()
        }
    };
    let mut area = Rational::zero();
    let mut prev = overlap_at(&cuts[0]);
    for w in cuts.windows(2) {
        let next = overlap_at(&w[1]);
        area += (&w[1] - &w[0]) * (&prev + &next) / int(2);
        prev = next;
    }
    area
}

/// `Σ_{s1} Σ_{s2} |P_{σ,s1} ∩ P_{σ,s2} ∩ slab|` over ordered pairs,
/// diagonal included.
pub fn overlap_sum(sigma: &StickyMap, slab: &Slab, budget: &Budget) -> Result<Rational> {
    family_overlap_sum(&kakeya_family(sigma), slab, budget)
}

pub fn family_overlap_sum(family: &TubeFamily, slab: &Slab, budget: &Budget) -> Result<Rational> {
    let (lo, hi) = slab.fracs()?;
    let set = BandSet::from_tubes(&family.tubes)?;
    pairwise_overlap_sum(&set, lo, hi, budget)
}

/// `A_{k,j}`: ordered pairs `(s1, s2)` of `T_n` with
/// `d(s1,s2) ≥ 3^j |s1 − s2|` and `3^k ≤ 3^j |s1 − s2| < 3^{k+1}`.
pub fn pair_count_a(n: u8, k: i32, j: u32, budget: &Budget) -> Result<u64> {
    Ok(pair_count_table(n, j, budget)?
        .into_iter()
        .find(|&(kk, _)| kk == k)
        .map_or(0, |(_, c)| c))
}

/// All nonzero `(k, A_{k,j})` for one `j`, ascending in `k`.
pub fn pair_count_table(n: u8, j: u32, budget: &Budget) -> Result<Vec<(i32, u64)>> {
    let size = 3u64.pow(n as u32);
    budget.check("ordered pairs of T_n", (size as u128).pow(2))?;
    let pow = |e: u32| 3u128.pow(e);
    // With Δ = |i1 − i2| in units of 3^{-n}: 3^j|s1 − s2| = 3^{j-n}Δ.
    let mut counts = std::collections::BTreeMap::new();
    for i1 in 0..size {
        let s1 = TernaryString::from_index_unchecked(n, i1);
        for i2 in 0..size {
            if i1 == i2 {
                continue;
            }
            let delta = i1.abs_diff(i2) as u128;
            let l = s1.common_prefix_len(TernaryString::from_index_unchecked(n, i2)) as u32;
            // 3^{-l} ≥ 3^{j-n}Δ  ⇔  3^n ≥ 3^{j+l}Δ
            if pow(n as u32) < pow(j + l) * delta {
                continue;
            }
            // 3^{j}Δ lies in [3^{k+n}, 3^{k+n+1}); find k.
            let scaled = pow(j) * delta;
            let mut e = 0i32;
            while pow(e as u32 + 1) <= scaled {
                e += 1;
            }
            *counts.entry(e - n as i32).or_insert(0u64) += 1;
        }
    }
    Ok(counts.into_iter().collect())
}
