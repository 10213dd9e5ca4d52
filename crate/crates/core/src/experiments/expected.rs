use rayon::prelude::*;
use serde::Serialize;

use crate::budget::Budget;
use crate::error::{KakeyaError, Result};
use crate::geometry::{kakeya_family, Slab};
use crate::measure::MeasurePolicy;
use crate::pointwise::{grid_point, membership_probability_exact, Point};
use crate::rational::{rat, to_f64};
use crate::sticky::StickyMap;

/// Two estimates of `E|K_{σ_n} ∩ ([1/3,1] × ℝ)|`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectedReport {
    pub n: u8,
    pub grid_points: usize,
    pub seeds: usize,
    /// Quasi-random integration of `P_n(t,y)` over `(1/3,1) × (0,4/3)`;
    /// absent when the budget does not cover it.
    pub grid_estimate: Option<f64>,
    /// Mean slab measure over the sampled maps.
    pub seed_estimate: f64,
    /// `|grid − seeds| / seeds`
    pub relative_gap: Option<f64>,
    /// `n·E`, from the seed average.
    pub scaled: f64,
    /// `E ≤ 2/9`
    pub within_trivial_bound: bool,
}

const GRID_BITS: u32 = 20;

/// The first `count` points of the additive recurrence with the plastic
/// number, snapped to the `2^20` midpoint grid.
pub fn quasi_random_points(count: usize) -> Vec<Point> {
    let g = 1.324_717_957_244_746_f64;
    let (a1, a2) = (1.0 / g, 1.0 / (g * g));
    let cells = (1u64 << GRID_BITS) as f64;
    (0..count)
        .map(|i| {
            let u = ((0.5 + i as f64 * a1).fract() * cells) as i64;
            let v = ((0.5 + i as f64 * a2).fract() * cells) as i64;
            grid_point(u, v, GRID_BITS)
        })
        .collect()
}

pub fn cmd_expected(
    n: u8,
    grid_points: usize,
    seeds: &[u64],
    policy: &MeasurePolicy,
    budget: &Budget,
) -> Result<ExpectedReport> {
    if seeds.is_empty() {
        return Err(KakeyaError::Usage("need at least one seed".into()));
    }
    let slab = Slab::upper();
    let areas: Vec<f64> = seeds
        .par_iter()
        .map(|&s| {
            let family = kakeya_family(&StickyMap::sample(n, s)?).restrict(&slab);
            Ok(policy.area(&family, &slab, budget)?.as_f64())
        })
        .collect::<Result<_>>()?;
    let seed_estimate = areas.iter().sum::<f64>() / areas.len() as f64;
    // Slice trees hold at most 4·2^k nodes per level.
    let nodes_per_point = 8u128 << n;
    let grid_estimate = match budget.check("slice-tree nodes", nodes_per_point * grid_points as u128) {
        Ok(()) if grid_points > 0 => {
            let probs: Vec<f64> = quasi_random_points(grid_points)
                .par_iter()
                .map(|p| Ok(to_f64(&membership_probability_exact(n, p)?)))
                .collect::<Result<_>>()?;
            Some(probs.iter().sum::<f64>() / grid_points as f64 * to_f64(&(rat(2, 3) * rat(4, 3))))
        }
        _ => None,
    };
    Ok(ExpectedReport {
        n,
        grid_points,
        seeds: seeds.len(),
        relative_gap: grid_estimate.map(|g| (g - seed_estimate).abs() / seed_estimate),
        grid_estimate,
        seed_estimate,
        scaled: seed_estimate * n as f64,
        within_trivial_bound: seed_estimate <= 2.0 / 9.0 && grid_estimate.map_or(true, |g| g <= 2.0 / 9.0),
    })
}
