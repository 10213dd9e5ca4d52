use std::path::{Path, PathBuf};

use crate::budget::Budget;
use crate::error::{io_error, Result};
use crate::sticky::{enumerate_all_labelings, sample_edge_labels_with, EdgeLabeling};

/// Writes one sticky-map JSON file per seed, or per labeling of `T*_n`
/// when `enumerate` is set. Returns the paths in order.
pub fn cmd_generate(n: u8, seeds: &[u64], enumerate: bool, out: &Path, budget: &Budget) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(io_error(out))?;
    let named: Vec<(String, EdgeLabeling)> = if enumerate {
        enumerate_all_labelings(n, budget)?
            .into_iter()
            .enumerate()
            .map(|(i, l)| (format!("sigma_n{n}_all{i:05}.json"), l))
            .collect()
    } else {
        seeds
            .iter()
            .map(|&s| Ok((format!("sigma_n{n}_seed{s}.json"), sample_edge_labels_with(n, s, budget)?)))
            .collect::<Result<_>>()?
    };
    named
        .into_iter()
        .map(|(name, labeling)| {
            let path = out.join(name);
            std::fs::write(&path, labeling.to_json() + "\n").map_err(io_error(&path))?;
            Ok(path)
        })
        .collect()
}
