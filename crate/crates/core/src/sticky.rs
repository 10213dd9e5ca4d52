//! Edge labelings `r_{t,a} ∈ {0,2}` and the sticky maps `σ: T_n → C_n`
//! they induce.

use std::fmt;
use std::path::Path;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{contract, KakeyaError, Result};
use crate::rational::{pow3, Rational};
use crate::rng::{keyed_rng, DOMAIN_LABELS};
use crate::tree::{Digit, TernaryString, MAX_LEVEL};

/// A node whose digits all lie in {0, 2}: a stage of the Cantor set.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CantorString(TernaryString);

impl CantorString {
    pub fn new(s: TernaryString) -> Result<CantorString> {
        if (1..=s.level()).any(|j| s.digit_unchecked(j) == 1) {
            return contract(format!("{s} has a digit 1, not in the Cantor set"));
        }
        Ok(CantorString(s))
    }

    pub fn as_ternary(self) -> TernaryString {
        self.0
    }

    pub fn value(self) -> Rational {
        self.0.value()
    }

    pub fn level(self) -> u8 {
        self.0.level()
    }

    pub fn prefix(self, j: u8) -> Result<CantorString> {
        Ok(CantorString(self.0.prefix(j)?))
    }
}

impl fmt::Display for CantorString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for CantorString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The edge `e_{t,a}` from `parent` to its `child_digit`-th child.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EdgeId {
    pub parent: TernaryString,
    pub child_digit: Digit,
}

impl EdgeId {
    pub fn into_child(child: TernaryString) -> Option<EdgeId> {
        Some(EdgeId {
            parent: child.parent()?,
            child_digit: child.last_digit()?,
        })
    }

    pub fn child(self) -> TernaryString {
        self.parent.child(self.child_digit)
    }

    /// Position in canonical edge order: breadth-first by level,
    /// lexicographic inside a level, child digits 0, 1, 2.
    pub fn canonical_index(self) -> usize {
        (self.child().bfs_index() - 1) as usize
    }
}

/// Number of edges of `T*_n`: `3 + 9 + … + 3^n`.
pub fn edge_count(n: u8) -> usize {
    ((pow3(n as u32 + 1) - 3) / 2) as usize
}

/// One label in {0, 2} per edge of `T*_n`, stored in canonical edge order.
#[derive(Clone, PartialEq, Eq)]
pub struct EdgeLabeling {
    n: u8,
    seed: Option<u64>,
    labels: Vec<Digit>,
}

impl fmt::Debug for EdgeLabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EdgeLabeling")
            .field("n", &self.n)
            .field("seed", &self.seed)
            .field("labels", &self.labels_string())
            .finish()
    }
}

impl EdgeLabeling {
    pub fn from_labels(n: u8, labels: Vec<Digit>) -> Result<EdgeLabeling> {
        if n > MAX_LEVEL {
            return contract(format!("depth {n} exceeds {MAX_LEVEL}"));
        }
        if labels.len() != edge_count(n) {
            return contract(format!(
                "depth {n} has {} edges, got {} labels",
                edge_count(n),
                labels.len()
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l != 0 && l != 2) {
            return contract(format!("label {bad} is not 0 or 2"));
        }
        Ok(EdgeLabeling {
            n,
            seed: None,
            labels,
        })
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn edge_count(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Digit] {
        &self.labels
    }

    pub fn label(&self, edge: EdgeId) -> Result<Digit> {
        if edge.parent.level() >= self.n {
            return contract(format!("edge below {} is outside T*_{}", edge.parent, self.n));
        }
        Ok(self.labels[edge.canonical_index()])
    }

    /// Label of the edge entering non-root node `child`.
    pub(crate) fn label_into(&self, child: TernaryString) -> Digit {
        self.labels[(child.bfs_index() - 1) as usize]
    }

    pub fn labels_string(&self) -> String {
        self.labels.iter().map(|&d| (b'0' + d) as char).collect()
    }

    pub fn to_file(&self) -> LabelingFile {
        LabelingFile {
            n: self.n,
            seed: self.seed,
            labels: self.labels_string(),
        }
    }

    pub fn from_file(file: &LabelingFile) -> Result<EdgeLabeling> {
        let labels = file
            .labels
            .bytes()
            .map(|b| match b {
                b'0' => Ok(0),
                b'2' => Ok(2),
                _ => Err(KakeyaError::Parse(format!("label byte {:?} is not '0' or '2'", b as char))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut labeling = EdgeLabeling::from_labels(file.n, labels)?;
        labeling.seed = file.seed;
        Ok(labeling)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("labeling serializes")
    }

    pub fn from_json(text: &str) -> Result<EdgeLabeling> {
        EdgeLabeling::from_file(&serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<EdgeLabeling> {
        let text = std::fs::read_to_string(path).map_err(|source| KakeyaError::Io {
            path: path.to_owned(),
            source,
        })?;
        EdgeLabeling::from_json(&text)
    }

    /// Recovers the labeling from the images of every `s ∈ T_n`, given in
    /// lexicographic order. Fails unless the map is sticky.
    pub fn from_images(n: u8, images: &[CantorString]) -> Result<EdgeLabeling> {
        if !is_sticky(n, images)? {
            return contract("map is not sticky");
        }
        let mut labels = vec![0; edge_count(n)];
        for (i, img) in images.iter().enumerate() {
            let s = TernaryString::from_index_unchecked(n, i as u64);
            for j in 1..=n {
                labels[(s.prefix_unchecked(j).bfs_index() - 1) as usize] =
                    img.0.digit_unchecked(j);
            }
        }
        EdgeLabeling::from_labels(n, labels)
    }
}

/// On-disk form of a labeling: labels in canonical edge order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelingFile {
    pub n: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub labels: String,
}

/// Draws every edge label as an independent fair bit. Label `i` in
/// canonical order is word `i` of the `(seed, labels)` stream.
pub fn sample_edge_labels(n: u8, seed: u64) -> Result<EdgeLabeling> {
    sample_edge_labels_with(n, seed, &Budget::default())
}

pub fn sample_edge_labels_with(n: u8, seed: u64, budget: &Budget) -> Result<EdgeLabeling> {
    if n == 0 {
        return contract("sampling needs depth n >= 1");
    }
    if n > MAX_LEVEL {
        return contract(format!("depth {n} exceeds {MAX_LEVEL}"));
    }
    budget.check("edge labels", edge_count(n) as u128)?;
    let mut rng = keyed_rng(seed, DOMAIN_LABELS, 0);
    let labels = (0..edge_count(n))
        .map(|_| if rng.next_u32() & 1 == 1 { 2 } else { 0 })
        .collect();
    Ok(EdgeLabeling {
        n,
        seed: Some(seed),
        labels,
    })
}

/// The labeling used in the original counterexample: every edge into a
/// 0- or 1-child is labeled 0, every edge into a 2-child is labeled 2.
pub fn katz_example(n: u8) -> Result<StickyMap> {
    if n == 0 {
        return contract("depth n >= 1 required");
    }
    let labels = (0..edge_count(n)).map(|i| if i % 3 == 2 { 2 } else { 0 }).collect();
    Ok(StickyMap::new(EdgeLabeling::from_labels(n, labels)?))
}

/// Every labeling of `T*_n`, in order of the labels read as a binary
/// counter (edge 0 is the least significant bit).
pub fn enumerate_all_labelings(n: u8, budget: &Budget) -> Result<Vec<EdgeLabeling>> {
    let edges = edge_count(n);
    if edges >= 64 {
        return Err(KakeyaError::Budget {
            what: "labelings",
            needed: u128::MAX,
            budget: budget.items,
            hint: "",
        });
    }
    budget.check("labelings", 1u128 << edges)?;
    Ok((0u64..1 << edges)
        .map(|mask| EdgeLabeling {
            n,
            seed: None,
            labels: (0..edges)
                .map(|e| if mask >> e & 1 == 1 { 2 } else { 0 })
                .collect(),
        })
        .collect())
}

/// `σ: T_n → C_n` backed by its edge labeling; images are computed on
/// demand by reading labels along the root path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StickyMap {
    labeling: EdgeLabeling,
}

impl StickyMap {
    pub fn new(labeling: EdgeLabeling) -> StickyMap {
        StickyMap { labeling }
    }

    pub fn sample(n: u8, seed: u64) -> Result<StickyMap> {
        Ok(StickyMap::new(sample_edge_labels(n, seed)?))
    }

    pub fn n(&self) -> u8 {
        self.labeling.n
    }

    pub fn labeling(&self) -> &EdgeLabeling {
        &self.labeling
    }

    /// `σ(s)`: digit j is the label of the edge from `π^{j-1}(s)` toward
    /// digit `π_j(s)`.
    pub fn apply(&self, s: TernaryString) -> Result<CantorString> {
        if s.level() != self.n() {
            return contract(format!("{s} is not in T_{}", self.n()));
        }
        let mut index = 0u64;
        for j in 1..=s.level() {
            index = index * 3 + self.labeling.label_into(s.prefix_unchecked(j)) as u64;
        }
        Ok(CantorString(TernaryString::from_index_unchecked(s.level(), index)))
    }

    /// Images of all of `T_n` in lexicographic order, built level by level.
    pub fn images(&self) -> Vec<CantorString> {
        let n = self.n();
        let mut level = vec![0u64];
        for k in 1..=n {
            let offset = (pow3(k as u32) - 1) / 2 - 1;
            let mut next = Vec::with_capacity(level.len() * 3);
            for (p, img) in level.iter().enumerate() {
                for d in 0..3u64 {
                    let child = p as u64 * 3 + d;
                    let label = self.labeling.labels[(offset + child) as usize] as u64;
                    next.push(img * 3 + label);
                }
            }
            level = next;
        }
        level
            .into_iter()
            .map(|i| CantorString(TernaryString::from_index_unchecked(n, i)))
            .collect()
    }
}

pub fn apply(sigma: &StickyMap, s: TernaryString) -> Result<CantorString> {
    sigma.apply(s)
}

/// Checks stickiness of an arbitrary map `T_n → C_n` given as its images
/// in lexicographic order: digit j of the image may depend only on the
/// first j digits of the argument.
pub fn is_sticky(n: u8, images: &[CantorString]) -> Result<bool> {
    if images.len() as u64 != pow3(n as u32) {
        return contract(format!("expected {} images, got {}", pow3(n as u32), images.len()));
    }
    if let Some(bad) = images.iter().find(|c| c.level() != n) {
        return contract(format!("image {bad} is not in C_{n}"));
    }
    for j in 1..=n {
        // Arguments sharing their first j digits form blocks of 3^{n-j}.
        let block = pow3((n - j) as u32) as usize;
        for chunk in images.chunks(block) {
            let want = chunk[0].0.digit_unchecked(j);
            if chunk.iter().any(|c| c.0.digit_unchecked(j) != want) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::enumerate_level;
    use std::collections::HashSet;

    fn ts(s: &str) -> TernaryString {
        s.parse().unwrap()
    }

    fn cs(s: &str) -> CantorString {
        CantorString::new(ts(s)).unwrap()
    }

    #[test]
    fn cantor_strings_reject_digit_one() {
        assert!(CantorString::new(ts(".021")).is_err());
        assert!(CantorString::new(ts(".020")).is_ok());
    }

    #[test]
    fn sampled_shapes() {
        let l1 = sample_edge_labels(1, 7).unwrap();
        assert_eq!(l1.edge_count(), 3);
        assert!(l1.labels().iter().all(|&d| d == 0 || d == 2));
        assert_eq!(sample_edge_labels(2, 7).unwrap().edge_count(), 12);
        assert_eq!(sample_edge_labels(3, 7).unwrap(), sample_edge_labels(3, 7).unwrap());
        assert!(sample_edge_labels(0, 7).is_err());
    }

    #[test]
    fn sequential_and_addressed_bits_agree() {
        let l = sample_edge_labels(3, 99).unwrap();
        for (i, &label) in l.labels().iter().enumerate() {
            let bit = crate::rng::bit_at(99, DOMAIN_LABELS, 0, i as u64);
            assert_eq!(label == 2, bit);
        }
    }

    #[test]
    fn label_frequencies_are_fair() {
        // 10^4 seeds at n = 2; every edge should be 2 about half the time.
        let seeds = 10_000;
        let mut twos = vec![0u32; edge_count(2)];
        for seed in 0..seeds {
            for (c, &l) in twos.iter_mut().zip(sample_edge_labels(2, seed).unwrap().labels()) {
                *c += (l == 2) as u32;
            }
        }
        for c in twos {
            let f = c as f64 / seeds as f64;
            assert!((f - 0.5).abs() <= 0.02, "frequency {f}");
        }
    }

    #[test]
    fn apply_reads_root_path() {
        let labeling = EdgeLabeling::from_labels(1, vec![2, 0, 2]).unwrap();
        let sigma = StickyMap::new(labeling);
        assert_eq!(sigma.apply(ts(".1")).unwrap(), cs(".0"));
        assert_eq!(sigma.apply(ts(".0")).unwrap(), cs(".2"));
        assert!(sigma.apply(ts(".01")).is_err());

        let sigma = StickyMap::sample(2, 5).unwrap();
        let first = sigma.labeling().label(EdgeId { parent: ts("."), child_digit: 0 }).unwrap();
        for s in [".00", ".01", ".02"] {
            assert_eq!(sigma.apply(ts(s)).unwrap().as_ternary().digit(1).unwrap(), first);
        }
    }

    #[test]
    fn images_match_apply() {
        let sigma = StickyMap::sample(5, 11).unwrap();
        let all = enumerate_level(5, &Budget::default()).unwrap();
        let imgs = sigma.images();
        for (s, img) in all.iter().zip(&imgs) {
            assert_eq!(sigma.apply(*s).unwrap(), *img);
        }
    }

    #[test]
    fn stickiness_checks() {
        for n in 1..=4 {
            for seed in 0..5 {
                let sigma = StickyMap::sample(n, seed).unwrap();
                assert!(is_sticky(n, &sigma.images()).unwrap());
            }
        }
        // f(.00) = .00 and f(.01) = .20 disagree on digit 1 under prefix .0
        let mut imgs = StickyMap::new(EdgeLabeling::from_labels(2, vec![0; 12]).unwrap()).images();
        imgs[1] = cs(".20");
        assert!(!is_sticky(2, &imgs).unwrap());

        // every map T_1 -> C_1 is sticky
        for a in [".0", ".2"] {
            for b in [".0", ".2"] {
                for c in [".0", ".2"] {
                    assert!(is_sticky(1, &[cs(a), cs(b), cs(c)]).unwrap());
                }
            }
        }
    }

    #[test]
    fn katz_rule() {
        let k1 = katz_example(1).unwrap();
        assert_eq!(k1.apply(ts(".0")).unwrap(), cs(".0"));
        assert_eq!(k1.apply(ts(".1")).unwrap(), cs(".0"));
        assert_eq!(k1.apply(ts(".2")).unwrap(), cs(".2"));
        assert_eq!(katz_example(2).unwrap().apply(ts(".21")).unwrap(), cs(".20"));
        for n in 1..=4 {
            assert!(is_sticky(n, &katz_example(n).unwrap().images()).unwrap());
        }
    }

    #[test]
    fn enumeration_counts() {
        let b = Budget::default();
        let one = enumerate_all_labelings(1, &b).unwrap();
        assert_eq!(one.len(), 8);
        let two = enumerate_all_labelings(2, &b).unwrap();
        assert_eq!(two.len(), 4096);
        let distinct: HashSet<_> = two.iter().map(|l| l.labels_string()).collect();
        assert_eq!(distinct.len(), 4096);
        assert!(enumerate_all_labelings(3, &b).is_err());
    }

    #[test]
    fn depth_one_labelings_are_exactly_the_sticky_maps() {
        let maps: HashSet<Vec<CantorString>> = enumerate_all_labelings(1, &Budget::default())
            .unwrap()
            .into_iter()
            .map(|l| StickyMap::new(l).images())
            .collect();
        assert_eq!(maps.len(), 8);
        // All 2^3 maps T_1 -> C_1.
        for mask in 0..8u8 {
            let f: Vec<_> = (0..3)
                .map(|i| if mask >> i & 1 == 1 { cs(".2") } else { cs(".0") })
                .collect();
            assert!(maps.contains(&f));
        }
    }

    #[test]
    fn reconstruct_from_images_round_trips() {
        for n in 1..=4 {
            let l = sample_edge_labels(n, 3).unwrap();
            let back = EdgeLabeling::from_images(n, &StickyMap::new(l.clone()).images()).unwrap();
            assert_eq!(back.labels(), l.labels());
        }
    }

    #[test]
    fn json_round_trip() {
        let l = sample_edge_labels(3, 42).unwrap();
        let text = l.to_json();
        assert!(text.starts_with("{\"n\":3,\"seed\":42,\"labels\":\""));
        let back = EdgeLabeling::from_json(&text).unwrap();
        assert_eq!(back, l);
        assert_eq!(back.to_json(), text);
        assert!(EdgeLabeling::from_json(r#"{"n":1,"labels":"021"}"#).is_err());
        assert!(EdgeLabeling::from_json(r#"{"n":1,"labels":"02"}"#).is_err());
    }
}
