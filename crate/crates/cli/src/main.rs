use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kakeya_core::experiments::{
    calibrate, cmd_expected, cmd_generate, cmd_theorem, cmd_verify, theorem_csv, theorem_report_for, write_plot_script,
    Constants, Scale, VerifyConfig, SUITE_NAMES,
};
use kakeya_core::geometry::{kakeya_family, theorem_tubes, Slab};
use kakeya_core::measure::{AreaMode, MeasurePolicy, AREA_CSV_HEADER};
use kakeya_core::percolation::{
    lyons_bound_check, random_subtree, resistance_network, resistance_recursive, survival_exact, survival_mc, Subtree,
};
use kakeya_core::pointwise::{build_slice_tree, membership, slice_csv_row, Point, SLICE_CSV_HEADER};
use kakeya_core::rational::{fmt_rational, parse_rational};
use kakeya_core::sticky::{EdgeLabeling, StickyMap};
use kakeya_core::{Budget, KakeyaError, Result};
use serde_json::json;

/// Sticky random Kakeya sets with Cantor directions.
#[derive(Parser)]
#[command(name = "kakeya", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write sticky-map JSON files.
    Generate(GenerateArgs),
    /// Measure a tube family inside a slab.
    Measure(MeasureArgs),
    /// Survival and resistance of a subtree.
    Percolate(PercolateArgs),
    /// Slice tree and membership probability at one point.
    Slice(SliceArgs),
    /// Expected slab measure, estimated two ways.
    Expected(ExpectedArgs),
    /// Select the best map over seeds and report its measures.
    Theorem(TheoremArgs),
    /// Run the property suites.
    Verify(VerifyArgs),
    /// Recompute the acceptance constants.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct MapArgs {
    /// Tree depth.
    #[arg(long)]
    n: Option<u8>,
    /// Seed of the random labeling.
    #[arg(long)]
    seed: Option<u64>,
    /// Read the labeling from a JSON file instead.
    #[arg(long)]
    sigma: Option<PathBuf>,
}

impl MapArgs {
    fn load(&self) -> Result<(StickyMap, Option<u64>)> {
        match (&self.sigma, self.n) {
            (Some(path), _) => {
                let l = EdgeLabeling::load(path)?;
                let seed = l.seed();
                Ok((StickyMap::new(l), seed))
            }
            (None, Some(n)) => {
                let seed = self.seed.unwrap_or(0);
                Ok((StickyMap::sample(n, seed)?, Some(seed)))
            }
            (None, None) => Err(KakeyaError::Usage("give --n (with --seed) or --sigma FILE".into())),
        }
    }
}

#[derive(Args)]
struct MeasureOpts {
    /// exact or sampled; chosen by tube count when absent.
    #[arg(long)]
    mode: Option<AreaMode>,
    /// Slices for sampled mode.
    #[arg(long, default_value_t = 1000)]
    slices: u32,
}

impl MeasureOpts {
    fn policy(&self) -> MeasurePolicy {
        MeasurePolicy {
            mode: self.mode,
            slices: self.slices,
            ..MeasurePolicy::default()
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: u8,
    /// Seeds as `a..b`, `s1,s2,…`, or a count `k` meaning `0..k`.
    #[arg(long, default_value = "0..200")]
    seeds: String,
    /// Write every labeling of the tree instead of sampled ones.
    #[arg(long)]
    enumerate: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    map: MapArgs,
    #[command(flatten)]
    opts: MeasureOpts,
    /// Slab as `t0:t1`.
    #[arg(long, default_value = "0:1")]
    slab: String,
    /// kakeya (all tubes), upper (tubes cut to [1/3,1]) or doubled.
    #[arg(long, default_value = "kakeya")]
    family: String,
    /// Also write the family as CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PercolateArgs {
    /// Subtree JSON file.
    #[arg(long)]
    tree: Option<PathBuf>,
    /// Depth of a random subtree.
    #[arg(long)]
    n: Option<u8>,
    /// Keep probability of a random subtree.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exact survival (the default).
    #[arg(long, conflicts_with = "mc")]
    exact: bool,
    /// Monte Carlo survival.
    #[arg(long)]
    mc: bool,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
}

#[derive(Args)]
struct SliceArgs {
    #[arg(long)]
    n: u8,
    /// Time coordinate as `p/q`, strictly between 1/3 and 1.
    #[arg(long)]
    t: String,
    #[arg(long)]
    y: String,
    /// Also decide membership for the map with this seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ExpectedArgs {
    #[arg(long)]
    n: u8,
    #[arg(long, default_value = "0..200")]
    seeds: String,
    /// Number of quasi-random points.
    #[arg(long, default_value_t = 1000)]
    grid: usize,
    #[command(flatten)]
    opts: MeasureOpts,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TheoremArgs {
    #[arg(long)]
    n: Option<u8>,
    #[arg(long, default_value = "0..200")]
    seeds: String,
    /// Report on a stored map instead of searching seeds.
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[command(flatten)]
    opts: MeasureOpts,
    /// Constants file to judge against (defaults to the frozen one).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// TOML file: `suites = ["all"]`, optional `scale`, `seed`, `lyons_constant`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// full or quick.
    #[arg(long)]
    scale: Option<String>,
    /// Run only these suites.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Override the Lyons constant, as `p/q`.
    #[arg(long)]
    lyons_constant: Option<String>,
    /// Constants file (defaults to the frozen one).
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Directory for verify.json and counterexample dumps.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Write the constants here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    let bad = || KakeyaError::Usage(format!("cannot read seeds {text:?}"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        (num(a)?..num(b)?).collect()
    } else if text.contains(',') {
        text.split(',').map(num).collect::<Result<_>>()?
    } else {
        (0..num(text)?).collect()
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

fn parse_slab(text: &str) -> Result<Slab> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| KakeyaError::Usage(format!("slab {text:?} is not t0:t1")))?;
    Slab::new(parse_rational(a)?, parse_rational(b)?)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| KakeyaError::Io { path: dir.to_owned(), source })?;
    }
    std::fs::write(path, text).map_err(|source| KakeyaError::Io { path: path.to_owned(), source })
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializes") + "\n"
}

/// Exit status 1 marks a property violation.
fn run(cli: Cli) -> Result<bool> {
    let budget = Budget::from_env()?;
    let mut stdout = std::io::stdout().lock();
    let mut say = |s: &str| {
        let _ = stdout.write_all(s.as_bytes());
    };
    match cli.command {
        Command::Generate(a) => {
            let paths = cmd_generate(a.n, &parse_seeds(&a.seeds)?, a.enumerate, &a.out, &budget)?;
            for p in paths {
                say(&format!("{}\n", p.display()));
            }
            Ok(true)
        }
        Command::Measure(a) => {
            let (sigma, seed) = a.map.load()?;
            let slab = parse_slab(&a.slab)?;
            let family = match a.family.as_str() {
                "kakeya" => kakeya_family(&sigma),
                "upper" => theorem_tubes(&sigma).0,
                "doubled" => theorem_tubes(&sigma).1,
                other => return Err(KakeyaError::Usage(format!("unknown family {other:?}"))),
            };
            let cut = family.restrict(&slab);
            if let Some(path) = &a.out {
                let mut buf = Vec::new();
                family.write_csv(&mut buf).expect("writes to memory");
                write_file(path, &String::from_utf8(buf).expect("utf-8"))?;
            }
            let report = a.opts.policy().area(&cut, &slab, &budget)?;
            say(&format!("{AREA_CSV_HEADER}\n{}\n", report.csv_row(sigma.n(), seed)));
            Ok(true)
        }
        Command::Percolate(a) => {
            let tree = match (&a.tree, a.n) {
                (Some(path), _) => Subtree::load(path)?,
                (None, Some(n)) => random_subtree(n, a.p, a.seed)?,
                (None, None) => return Err(KakeyaError::Usage("give --tree FILE or --n".into())),
            };
            let recursive = resistance_recursive(&tree);
            let network = resistance_network(&tree)?;
            let lyons = lyons_bound_check(&tree);
            let mut out = json!({
                "n": tree.n(),
                "nodes": tree.len(),
                "resistance_recursive": recursive.to_string(),
                "resistance_network": network.to_string(),
                "lyons_bound": fmt_rational(&lyons.bound),
                "lyons_holds": lyons.holds,
            });
            if a.mc {
                let est = survival_mc(&tree, a.trials, a.seed)?;
                out["survival_mc"] = json!(est.estimate());
                out["trials"] = json!(est.trials);
                out["survivors"] = json!(est.survivors);
            } else {
                out["survival_exact"] = json!(fmt_rational(&survival_exact(&tree)));
            }
            say(&pretty(&out));
            Ok(recursive == network && lyons.holds)
        }
        Command::Slice(a) => {
            let point = Point::parse(&a.t, &a.y)?;
            say(&format!("{SLICE_CSV_HEADER}\n{}\n", slice_csv_row(a.n, &point)?));
            let tree = build_slice_tree(a.n, &point)?;
            let ok = tree.level_counts().iter().enumerate().all(|(k, &c)| c as u64 <= 4 << k);
            if let Some(seed) = a.seed {
                let inside = membership(&StickyMap::sample(a.n, seed)?, &point)?;
                eprintln!("seed {seed}: point {} K_sigma", if inside { "in" } else { "not in" });
            }
            Ok(ok)
        }
        Command::Expected(a) => {
            let seeds = parse_seeds(&a.seeds)?;
            let r = cmd_expected(a.n, a.grid, &seeds, &a.opts.policy(), &budget)?;
            if let Some(dir) = &a.out {
                let path = dir.join("expected.csv");
                let header = "n,grid_points,seeds,grid_estimate,seed_estimate,relative_gap\n";
                let mut text = std::fs::read_to_string(&path).unwrap_or_else(|_| header.to_string());
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.n,
                    r.grid_points,
                    r.seeds,
                    r.grid_estimate.map_or(String::new(), |g| g.to_string()),
                    r.seed_estimate,
                    r.relative_gap.map_or(String::new(), |g| g.to_string()),
                ));
                write_file(&path, &text)?;
                write_plot_script(dir)?;
            }
            say(&pretty(&r));
            Ok(r.within_trivial_bound)
        }
        Command::Theorem(a) => {
            let constants = match &a.config {
                Some(p) => Constants::load(p)?,
                None => Constants::frozen(),
            };
            let policy = a.opts.policy();
            let (report, rows) = match (&a.sigma, a.n) {
                (Some(path), _) => {
                    let l = EdgeLabeling::load(path)?;
                    let seed = l.seed();
                    (theorem_report_for(&StickyMap::new(l), seed, 1, &policy, &budget)?, Vec::new())
                }
                (None, Some(n)) => cmd_theorem(n, &parse_seeds(&a.seeds)?, &policy, &budget)?,
                (None, None) => return Err(KakeyaError::Usage("give --n or --sigma FILE".into())),
            };
            if let Some(dir) = &a.out {
                write_file(&dir.join(format!("theorem_n{}.json", report.n)), &pretty(&report))?;
                if !rows.is_empty() {
                    write_file(&dir.join(format!("theorem_n{}.csv", report.n)), &theorem_csv(report.n, &rows))?;
                }
                if let Some(seed) = report.best_seed {
                    let best = StickyMap::sample(report.n, seed)?;
                    write_file(&dir.join(format!("sigma_star_n{}.json", report.n)), &(best.labeling().to_json() + "\n"))?;
                }
                write_plot_script(dir)?;
            }
            say(&pretty(&report));
            Ok(report.upper_scaled <= constants.c_upper
                && report.lower_scaled >= constants.c_lower
                && report.lemma11_min_scaled >= constants.c_lower
                && report.lower_ge_upper
                && report.doubles_contain_tubes)
        }
        Command::Verify(a) => {
            let mut config = match &a.config {
                Some(p) => VerifyConfig::load(p)?,
                None => VerifyConfig::default(),
            };
            if let Some(s) = &a.scale {
                config.scale = match s.as_str() {
                    "full" => Scale::Full,
                    "quick" => Scale::Quick,
                    other => return Err(KakeyaError::Usage(format!("unknown scale {other:?}"))),
                };
            }
            if !a.suites.is_empty() {
                if let Some(bad) = a.suites.iter().find(|s| !SUITE_NAMES.contains(&s.as_str())) {
                    return Err(KakeyaError::Usage(format!("unknown suite {bad:?}")));
                }
                config.suites = a.suites.clone();
            }
            if let Some(c) = &a.lyons_constant {
                config.lyons_constant = parse_rational(c)?;
            }
            if let Some(p) = &a.constants {
                config.constants = Constants::load(p)?;
            }
            let report = cmd_verify(&config, &budget)?;
            for v in &report.suites {
                eprintln!(
                    "{:<20} {} ({} checked, {} violations, {:.1}s) {}",
                    v.name,
                    if v.passed { "PASS" } else { "FAIL" },
                    v.checked,
                    v.violations,
                    v.seconds,
                    v.summary
                );
            }
            if let Some(dir) = &a.out {
                write_file(&dir.join("verify.json"), &pretty(&report))?;
                for v in report.suites.iter().filter(|v| !v.passed) {
                    if let Some(c) = &v.counterexample {
                        write_file(&dir.join(format!("counterexample_{}.json", v.name)), &pretty(c))?;
                    }
                }
            } else {
                say(&pretty(&report));
            }
            Ok(report.passed)
        }
        Command::Calibrate(a) => {
            let c = calibrate(&budget)?;
            match &a.out {
                Some(path) => write_file(path, &c.to_toml())?,
                None => say(&c.to_toml()),
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
