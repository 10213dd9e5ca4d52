//! Desk-scale experiment drivers: map generation, the expected-measure
//! estimate, the selection of a good map, and the verification suites.

mod constants;
mod expected;
mod generate;
pub mod suites;
mod theorem;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use constants::{Constants, FROZEN_CONSTANTS};
pub use expected::{cmd_expected, quasi_random_points, ExpectedReport};
pub use generate::cmd_generate;
pub use theorem::{
    cmd_theorem, doubles_contain_tubes, theorem_csv, theorem_report_for, upper_measure, SlabRow, TheoremReport,
    THEOREM_CSV_HEADER,
};

use crate::budget::Budget;
use crate::error::{io_error, KakeyaError, Result};
use crate::measure::MeasurePolicy;
use crate::pointwise::{lemma22_check, random_points};
use crate::rational::{parse_rational, Rational};
use suites::*;

pub const DEFAULT_SEEDS: std::ops::Range<u64> = 0..200;

/// Seed for point and subtree streams in the suites and in calibration.
pub const SUITE_SEED: u64 = 0;

/// Re-runs the calibration of the frozen constants at `n = 4`:
/// `c0` is half the smallest `R/n` over 100 points, `C_upper` twice the
/// scaled upper measure of the selected map over seeds `0..200`, and
/// `c_lower` half the smaller of its scaled lower measure and its smallest
/// scaled slab measure.
pub fn calibrate(budget: &Budget) -> Result<Constants> {
    let n = 4;
    let mut min_ratio = f64::INFINITY;
    for p in random_points(100, SUITE_SEED, n as u64) {
        min_ratio = min_ratio.min(lemma22_check(n, &p, 0.0)?.ratio);
    }
    let seeds: Vec<u64> = DEFAULT_SEEDS.collect();
    let (r, _) = cmd_theorem(n, &seeds, &MeasurePolicy::default(), budget)?;
    Ok(Constants {
        version: 1,
        calibration_n: n,
        c_upper: 2.0 * r.upper_scaled,
        c_lower: 0.5 * r.lower_scaled.min(r.lemma11_min_scaled),
        c0: 0.5 * min_ratio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// The acceptance sizes.
    Full,
    /// Small sizes for smoke runs.
    Quick,
}

pub const SUITE_NAMES: [&str; 12] = [
    "percolation-oracle",
    "resistance-dual",
    "lyons-bound",
    "membership-bound",
    "level-counts",
    "resistance-growth",
    "membership-decay",
    "measure-oracle",
    "uniformity",
    "theorem-scaling",
    "membership-dual",
    "monte-carlo",
];

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub suites: Vec<String>,
    pub scale: Scale,
    pub seed: u64,
    pub lyons_constant: Rational,
    pub constants: Constants,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SuiteList {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFile {
    suites: SuiteList,
    scale: Option<Scale>,
    seed: Option<u64>,
    lyons_constant: Option<String>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suites: SUITE_NAMES.iter().map(|s| s.to_string()).collect(),
            scale: Scale::Full,
            seed: SUITE_SEED,
            lyons_constant: Rational::from_integer(crate::percolation::LYONS_CONSTANT.into()),
            constants: Constants::frozen(),
        }
    }
}

impl VerifyConfig {
    /// Reads a TOML config naming the suites to run (`"all"` for every
    /// suite). A config without suites is a usage error.
    pub fn parse(text: &str) -> Result<VerifyConfig> {
        let file: VerifyFile = toml::from_str(text).map_err(|e| KakeyaError::Usage(format!("bad verify config: {e}")))?;
        let suites = match file.suites {
            SuiteList::One(s) => vec![s],
            SuiteList::Many(v) => v,
        };
        if suites.is_empty() {
            return Err(KakeyaError::Usage("verify config names no suites".into()));
        }
        let mut config = VerifyConfig::default();
        if !suites.iter().any(|s| s == "all") {
            if let Some(bad) = suites.iter().find(|s| !SUITE_NAMES.contains(&s.as_str())) {
                return Err(KakeyaError::Usage(format!("unknown suite {bad:?}")));
            }
            config.suites = suites;
        }
        config.scale = file.scale.unwrap_or(Scale::Full);
        config.seed = file.seed.unwrap_or(SUITE_SEED);
        if let Some(c) = file.lyons_constant {
            config.lyons_constant = parse_rational(&c)?;
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<VerifyConfig> {
        VerifyConfig::parse(&std::fs::read_to_string(path).map_err(io_error(path))?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteVerdict>,
}

/// Runs the configured suites in order.
pub fn cmd_verify(config: &VerifyConfig, budget: &Budget) -> Result<VerifyReport> {
    let full = config.scale == Scale::Full;
    let pick = |full_size: usize, quick: usize| if full { full_size } else { quick };
    let seed = config.seed;
    let mut out = Vec::new();
    for name in &config.suites {
        let verdict = match name.as_str() {
            "percolation-oracle" => percolation_oracle(
                &PercolationOracleParams { exhaustive_max_n: if full { 2 } else { 1 }, random: pick(500, 50), max_edges: 12, seed },
                budget,
            )?,
            "resistance-dual" => resistance_dual(&ResistanceParams {
                full_max_n: 4,
                random: pick(1000, 100),
                random_max_n: 8,
                seed,
            })?,
            "lyons-bound" => lyons_bound(&LyonsParams {
                random: pick(1000, 100),
                max_n: if full { 10 } else { 7 },
                constant: config.lyons_constant.clone(),
                seed,
            })?,
            "membership-bound" => membership_bound(
                &MembershipBoundParams {
                    points: pick(100, 10),
                    n_range: 4..=if full { 8 } else { 5 },
                    exhaustive_max_n: 2,
                    exhaustive_points: pick(20, 3),
                    seed,
                },
                budget,
            )?,
            "level-counts" => level_counts(&LevelCountParams { points: pick(500, 50), max_n: 10, constant: 4, seed })?,
            "resistance-growth" => resistance_growth(&ResistanceGrowthParams {
                points: pick(100, 10),
                n_range: 4..=if full { 12 } else { 7 },
                c0: config.constants.c0,
                seed,
            })?,
            "membership-decay" => membership_decay(&MembershipDecayParams {
                points: pick(50, 50),
                n_range: 4..=if full { 9 } else { 6 },
                growth: 2.0,
                seed,
            })?,
            "measure-oracle" => measure_oracle(
                &MeasureOracleParams {
                    sigmas: pick(20, 4),
                    max_n: if full { 6 } else { 4 },
                    slices: 10_000,
                    rel_tol: 1e-3,
                    raster_max_n: if full { 3 } else { 2 },
                    raster_sigmas_per_n: pick(2, 1),
                    raster_exp: if full { 12 } else { 9 },
                    seed,
                },
                budget,
            )?,
            "uniformity" => uniformity(
                &UniformityParams { families: pick(500, 50), sigmas: pick(100, 5), sigma_n: 4, seed },
                budget,
            )?,
            "theorem-scaling" => theorem_scaling(
                &TheoremParams {
                    n_range: 4..=if full { 8 } else { 5 },
                    seeds: if full { DEFAULT_SEEDS.collect() } else { (0..20).collect() },
                    slices: 1000,
                    constants: config.constants.clone(),
                },
                budget,
            )?,
            "membership-dual" => membership_dual(&MembershipDualParams { pairs: pick(10_000, 500), max_n: 6, seed })?,
            "monte-carlo" => monte_carlo(&MonteCarloParams {
                subtrees: pick(50, 10),
                trials: if full { 100_000 } else { 10_000 },
                sigmas: 4.0,
                max_n: 5,
                seed,
                retry: true,
            })?,
            other => return Err(KakeyaError::Usage(format!("unknown suite {other:?}"))),
        };
        out.push(verdict);
    }
    Ok(VerifyReport {
        passed: out.iter().all(|v| v.passed),
        suites: out,
    })
}

/// A matplotlib script that plots the CSV files written by `theorem` and
/// `expected` in the same directory.
pub const PLOT_SCRIPT: &str = r#"import csv, glob, os
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))

def frac(s):
    p, q = s.split("/")
    return int(p) / int(q)

fig, ax = plt.subplots()
for path in sorted(glob.glob(os.path.join(here, "theorem_n*.csv"))):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    n = int(rows[0]["n"])
    ax.scatter([n] * len(rows), [n * frac(r["upper"]) for r in rows], s=4)
ax.set_xlabel("n")
ax.set_ylabel("n * |union of P_j|")
fig.savefig(os.path.join(here, "theorem.png"), dpi=150)

path = os.path.join(here, "expected.csv")
if os.path.exists(path):
    with open(path) as f:
        rows = list(csv.DictReader(f))
    fig, ax = plt.subplots()
    ns = [int(r["n"]) for r in rows]
    ax.plot(ns, [float(r["seed_estimate"]) * n for r, n in zip(rows, ns)], "o-", label="seed average")
    ax.plot(ns, [float(r["grid_estimate"] or "nan") * n for r, n in zip(rows, ns)], "s--", label="grid")
    ax.set_xlabel("n")
    ax.set_ylabel("n * E")
    ax.legend()
    fig.savefig(os.path.join(here, "expected.png"), dpi=150)
"#;

pub fn write_plot_script(dir: &Path) -> Result<()> {
    let path = dir.join("plot.py");
    std::fs::write(&path, PLOT_SCRIPT).map_err(io_error(&path))
}
