use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{contract, Result};
use crate::geometry::{kakeya_family, theorem_tubes, Slab};
use crate::measure::{lemma11_check, AreaReport, MeasurePolicy};
use crate::rational::{fmt_rational, int, rat, Rational};
use crate::rng::{keyed_rng, DOMAIN_POINTS};
use crate::sticky::StickyMap;

/// Per-slab lower-bound row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabRow {
    pub j: u32,
    pub t0: String,
    pub t1: String,
    pub area: String,
    /// `n·|K_σ ∩ S_j|`
    pub scaled: f64,
}

/// Measures of the selected map `σ*`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremReport {
    pub n: u8,
    /// `N = 3^n` tubes.
    pub big_n: u64,
    pub seeds: usize,
    pub best_seed: Option<u64>,
    pub mode: String,
    /// `|⋃P_j|`, the tubes cut to `[1/3, 1]`.
    pub upper: String,
    pub upper_value: f64,
    /// `|⋃2P_j|`
    pub lower: String,
    pub lower_value: f64,
    /// `|K_σ|` over `[0, 1]`.
    pub proxy: String,
    pub proxy_value: f64,
    /// `n·|⋃P_j|`
    pub upper_scaled: f64,
    /// `n·|⋃2P_j| / log₃ n`
    pub lower_scaled: f64,
    /// `|⋃P_j|·ln N`
    pub upper_log: f64,
    /// `|⋃2P_j|·ln N / ln ln N`
    pub lower_loglog: f64,
    pub lemma11: Vec<SlabRow>,
    pub lemma11_min_scaled: f64,
    pub lower_ge_upper: bool,
    pub doubles_contain_tubes: bool,
}

/// `|⋃P_j|` for one map.
pub fn upper_measure(sigma: &StickyMap, policy: &MeasurePolicy, budget: &Budget) -> Result<AreaReport> {
    let (p, _) = theorem_tubes(sigma);
    policy.area(&p, &Slab::upper(), budget)
}

/// The full report for one map; depends on nothing but `σ` and the policy.
pub fn theorem_report_for(
    sigma: &StickyMap,
    best_seed: Option<u64>,
    seeds: usize,
    policy: &MeasurePolicy,
    budget: &Budget,
) -> Result<TheoremReport> {
    let n = sigma.n();
    if n < 3 {
        return contract(format!("theorem runs need n ≥ 3, got {n}"));
    }
    let (p, doubled) = theorem_tubes(sigma);
    let upper = policy.area(&p, &Slab::upper(), budget)?;
    let lower = policy.area(&doubled, &Slab::new(int(0), rat(4, 3))?, budget)?;
    let proxy = policy.area(&kakeya_family(sigma), &Slab::unit(), budget)?;
    let l11 = lemma11_check(sigma, policy, budget)?;
    let big_n = 3u64.pow(n as u32);
    let ln_n = (big_n as f64).ln();
    let log3n = (n as f64).ln() / 3f64.ln();
    let (u, l) = (upper.as_f64(), lower.as_f64());
    Ok(TheoremReport {
        n,
        big_n,
        seeds,
        best_seed,
        mode: upper.mode.to_string(),
        upper: fmt_rational(&upper.value),
        upper_value: u,
        lower: fmt_rational(&lower.value),
        lower_value: l,
        proxy: fmt_rational(&proxy.value),
        proxy_value: proxy.as_f64(),
        upper_scaled: u * n as f64,
        lower_scaled: l * n as f64 / log3n,
        upper_log: u * ln_n,
        lower_loglog: l * ln_n / ln_n.ln(),
        lemma11: l11
            .slabs
            .iter()
            .map(|(j, slab, a)| SlabRow {
                j: *j,
                t0: fmt_rational(&slab.t0),
                t1: fmt_rational(&slab.t1),
                area: fmt_rational(&a.value),
                scaled: a.as_f64() * n as f64,
            })
            .collect(),
        lemma11_min_scaled: l11.min_scaled,
        lower_ge_upper: lower.value >= upper.value,
        doubles_contain_tubes: doubles_contain_tubes(sigma, 1000, 0),
    })
}

/// Samples points of each `P_j` and checks that `2P_j` contains them.
pub fn doubles_contain_tubes(sigma: &StickyMap, samples: usize, seed: u64) -> bool {
    let (p, doubled) = theorem_tubes(sigma);
    let mut rng = keyed_rng(seed, DOMAIN_POINTS, u64::MAX);
    let scale = int(1 << 20);
    (0..samples).all(|_| {
        let i = rng.next_u32() as usize % p.len();
        let tube = &p.tubes[i];
        let u = Rational::from_integer((rng.next_u32() >> 12).into()) / &scale;
        let v = Rational::from_integer((rng.next_u32() >> 12).into()) / &scale;
        let t = &tube.t0 + (&tube.t1 - &tube.t0) * u;
        let y = tube.lower_at(&t) + &tube.width * v;
        tube.contains(&t, &y) && doubled.tubes[i].contains(&t, &y)
    })
}

/// Per-seed upper measures and the report for the minimizing seed
/// (ties broken by the smaller seed).
pub fn cmd_theorem(
    n: u8,
    seeds: &[u64],
    policy: &MeasurePolicy,
    budget: &Budget,
) -> Result<(TheoremReport, Vec<(u64, Rational)>)> {
    if n < 3 {
        return contract(format!("theorem runs need n ≥ 3, got {n}"));
    }
    if seeds.is_empty() {
        return contract("need at least one seed");
    }
    let rows: Vec<(u64, Rational)> = seeds
        .par_iter()
        .map(|&s| Ok((s, upper_measure(&StickyMap::sample(n, s)?, policy, budget)?.value)))
        .collect::<Result<_>>()?;
    let (best, _) = rows
        .iter()
        .min_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("nonempty");
    let sigma = StickyMap::sample(n, *best)?;
    let report = theorem_report_for(&sigma, Some(*best), seeds.len(), policy, budget)?;
    Ok((report, rows))
}

pub const THEOREM_CSV_HEADER: &str = "n,seed,upper";

pub fn theorem_csv(n: u8, rows: &[(u64, Rational)]) -> String {
    let mut out = String::from(THEOREM_CSV_HEADER);
    out.push('\n');
    for (s, v) in rows {
        out.push_str(&format!("{n},{s},{}\n", fmt_rational(v)));
    }
    out
}
