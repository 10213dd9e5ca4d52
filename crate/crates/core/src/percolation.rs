//! Bernoulli(1/2) edge percolation and the resistor network on subtrees of
//! `T*_n`.
//!
//! A level-`k` edge (from level `k−1` to level `k`) carries resistance
//! `2^k`; the battery spans the root and the level-`n` leaves.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::Budget;
use crate::error::{contract, KakeyaError, Result};
use crate::rational::{fmt_rational, int, to_f64, Rational};
use crate::rng::{keyed_rng, DOMAIN_PERCOLATION, DOMAIN_SUBTREE};
use crate::tree::{TernaryString, MAX_LEVEL};

const NONE: u32 = u32::MAX;

/// A root-connected subtree of `T*_n`. Nodes are kept in canonical
/// (breadth-first, lexicographic) order, so parents precede children.
#[derive(Clone, PartialEq, Eq)]
pub struct Subtree {
    n: u8,
    nodes: Vec<TernaryString>,
    parent: Vec<u32>,
    children: Vec<[u32; 3]>,
}

impl fmt::Debug for Subtree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Subtree")
            .field("n", &self.n)
            .field("nodes", &self.nodes)
            .finish()
    }
}

impl Subtree {
    pub fn new(n: u8, nodes: impl IntoIterator<Item = TernaryString>) -> Result<Subtree> {
        if n > MAX_LEVEL {
            return contract(format!("depth {n} exceeds {MAX_LEVEL}"));
        }
        let mut nodes: Vec<_> = nodes.into_iter().collect();
        nodes.sort_unstable();
        nodes.dedup();
        if nodes.first() != Some(&TernaryString::ROOT) {
            return contract("subtree must contain the root");
        }
        if let Some(deep) = nodes.iter().find(|s| s.level() > n) {
            return contract(format!("node {deep} lies below level {n}"));
        }
        let index: HashMap<TernaryString, u32> =
            nodes.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let mut parent = vec![NONE; nodes.len()];
        let mut children = vec![[NONE; 3]; nodes.len()];
        for (i, s) in nodes.iter().enumerate().skip(1) {
            let p = s.parent().expect("non-root");
            let Some(&pi) = index.get(&p) else {
                return contract(format!("node {s} is present but its parent {p} is not"));
            };
            parent[i] = pi;
            children[pi as usize][s.last_digit().expect("non-root") as usize] = i as u32;
        }
        Ok(Subtree {
            n,
            nodes,
            parent,
            children,
        })
    }

    /// All of `T*_n`.
    pub fn full(n: u8) -> Subtree {
        let nodes = (0..=n).flat_map(|l| {
            (0..3u64.pow(l as u32)).map(move |i| TernaryString::from_index_unchecked(l, i))
        });
        Subtree::new(n, nodes).expect("full tree is valid")
    }

    /// The single path `.0`, `.00`, … down to level `n`.
    pub fn chain(n: u8) -> Subtree {
        Subtree::new(n, (0..=n).map(|l| TernaryString::from_index_unchecked(l, 0)))
            .expect("chain is valid")
    }

    pub fn root_only(n: u8) -> Subtree {
        Subtree::new(n, [TernaryString::ROOT]).expect("root is valid")
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn nodes(&self) -> &[TernaryString] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn contains(&self, s: TernaryString) -> bool {
        self.nodes.binary_search(&s).is_ok()
    }

    pub fn leaves(&self) -> impl Iterator<Item = TernaryString> + '_ {
        self.nodes.iter().copied().filter(move |s| s.level() == self.n)
    }

    /// Node counts per level `0..=n`.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n as usize + 1];
        for s in &self.nodes {
            counts[s.level() as usize] += 1;
        }
        counts
    }

    pub(crate) fn parent_index(&self, i: usize) -> Option<usize> {
        (self.parent[i] != NONE).then_some(self.parent[i] as usize)
    }

    pub(crate) fn child_indices(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[i].iter().filter(|&&c| c != NONE).map(|&c| c as usize)
    }

    /// Keeps only nodes for which `keep` holds, then the root component.
    pub fn retain(&self, mut keep: impl FnMut(TernaryString) -> bool) -> Subtree {
        let mut alive = vec![false; self.nodes.len()];
        alive[0] = true;
        for i in 1..self.nodes.len() {
            alive[i] = alive[self.parent[i] as usize] && keep(self.nodes[i]);
        }
        let nodes = self.nodes.iter().zip(&alive).filter(|(_, &a)| a).map(|(s, _)| *s);
        Subtree::new(self.n, nodes).expect("root component is valid")
    }

    /// The first `max_edges + 1` nodes in canonical order.
    pub fn truncate_edges(&self, max_edges: usize) -> Subtree {
        let nodes = self.nodes.iter().copied().take(max_edges + 1);
        Subtree::new(self.n, nodes).expect("a canonical prefix is root-connected")
    }

    pub fn to_file(&self) -> SubtreeFile {
        SubtreeFile {
            n: self.n,
            nodes: self.nodes.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("subtree serializes")
    }

    pub fn from_json(text: &str) -> Result<Subtree> {
        let file: SubtreeFile = serde_json::from_str(text)?;
        Subtree::new(file.n, file.nodes)
    }

    pub fn load(path: &Path) -> Result<Subtree> {
        let text = std::fs::read_to_string(path).map_err(|source| KakeyaError::Io {
            path: path.to_owned(),
            source,
        })?;
        Subtree::from_json(&text)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtreeFile {
    pub n: u8,
    pub nodes: Vec<TernaryString>,
}

/// Every root-connected subtree of `T*_n`, each once.
pub fn all_subtrees(n: u8, budget: &Budget) -> Result<Vec<Subtree>> {
    // Count first: f(0) = 1, f(k+1) = (1 + f(k))^3 for subtrees rooted at a node.
    let mut count: u128 = 1;
    for _ in 0..n {
        count = (1 + count).saturating_pow(3);
    }
    budget.check("subtrees", count)?;
    fn grow(node: TernaryString, n: u8) -> Vec<Vec<TernaryString>> {
        if node.level() == n {
            return vec![vec![node]];
        }
        let mut acc: Vec<Vec<TernaryString>> = vec![vec![node]];
        for c in node.children() {
            let options = grow(c, n);
            let mut next = Vec::with_capacity(acc.len() * (options.len() + 1));
            for base in &acc {
                next.push(base.clone());
                for opt in &options {
                    let mut joined = base.clone();
                    joined.extend_from_slice(opt);
                    next.push(joined);
                }
            }
            acc = next;
        }
        acc
    }
    grow(TernaryString::ROOT, n)
        .into_iter()
        .map(|nodes| Subtree::new(n, nodes))
        .collect()
}

/// Keeps each child edge with probability `p` and returns the root
/// component.
pub fn random_subtree(n: u8, p: f64, seed: u64) -> Result<Subtree> {
    if !(p > 0.0 && p <= 1.0) {
        return contract(format!("keep probability {p} outside (0, 1]"));
    }
    let mut rng = keyed_rng(seed, DOMAIN_SUBTREE, 0);
    let mut nodes = vec![TernaryString::ROOT];
    let mut frontier = vec![TernaryString::ROOT];
    for _ in 0..n {
        let mut next = Vec::new();
        for s in frontier {
            for c in s.children() {
                if rng.gen_bool(p) {
                    next.push(c);
                }
            }
        }
        nodes.extend_from_slice(&next);
        frontier = next;
    }
    Subtree::new(n, nodes)
}

/// `num / 2^exp`.
#[derive(Clone, Debug)]
struct Dyadic {
    num: BigInt,
    exp: u64,
}

impl Dyadic {
    fn zero() -> Dyadic {
        Dyadic {
            num: BigInt::zero(),
            exp: 0,
        }
    }

    fn one() -> Dyadic {
        Dyadic {
            num: BigInt::one(),
            exp: 0,
        }
    }

    fn to_rational(&self) -> Rational {
        Rational::new(self.num.clone(), BigInt::one() << self.exp)
    }
}

/// Exact survival probability: `P(v) = 1 − Π_c (1 − P(c)/2)` over present
/// children, `1` at level `n`, `0` at a dead end above level `n`.
pub fn survival_exact(tree: &Subtree) -> Rational {
    let mut p: Vec<Dyadic> = vec![Dyadic::zero(); tree.len()];
    for i in (0..tree.len()).rev() {
        if tree.nodes[i].level() == tree.n {
            p[i] = Dyadic::one();
            continue;
        }
        // Π (1 − P_c/2) = Π (2^{e+1} − N) / 2^{e+1}
        let mut prod = Dyadic::one();
        let mut any = false;
        for c in tree.child_indices(i) {
            any = true;
            let pc = &p[c];
            let factor = (BigInt::one() << (pc.exp + 1)) - &pc.num;
            prod.num *= factor;
            prod.exp += pc.exp + 1;
        }
        if any {
            p[i] = Dyadic {
                num: (BigInt::one() << prod.exp) - prod.num,
                exp: prod.exp,
            };
        }
    }
    p.swap_remove(0).to_rational()
}

/// Outcome of a Monte Carlo survival estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub trials: u64,
    pub survivors: u64,
}

impl McEstimate {
    pub fn estimate(&self) -> f64 {
        self.survivors as f64 / self.trials as f64
    }

    /// Binomial standard deviation of the estimate under probability `p`.
    pub fn std_dev_at(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Fraction of trials with an open root-to-bottom path. Trial `i` reads
/// its edge bits from stream `i` of `(seed, percolation)`, in canonical
/// edge order.
pub fn survival_mc(tree: &Subtree, trials: u64, seed: u64) -> Result<McEstimate> {
    if trials == 0 {
        return contract("need at least one trial");
    }
    let survivors = (0..trials)
        .into_par_iter()
        .map_init(
            || vec![false; tree.len()],
            |alive, trial| survives_once(tree, seed, trial, alive) as u64,
        )
        .sum();
    Ok(McEstimate { trials, survivors })
}

fn survives_once(tree: &Subtree, seed: u64, trial: u64, alive: &mut [bool]) -> bool {
    let mut rng = keyed_rng(seed, DOMAIN_PERCOLATION, trial);
    let edges = tree.edge_count();
    let mut open = Vec::with_capacity(edges);
    let mut word = 0u64;
    for e in 0..edges {
        if e % 64 == 0 {
            word = rng.next_u64();
        }
        open.push(word >> (e % 64) & 1 == 1);
    }
    for i in (0..tree.len()).rev() {
        alive[i] = tree.nodes[i].level() == tree.n
            || tree.child_indices(i).any(|c| open[c - 1] && alive[c]);
    }
    alive[0]
}

/// A resistance that may be infinite (an open circuit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Resistance {
    Finite(Rational),
    Infinite,
}

impl Resistance {
    pub fn zero() -> Resistance {
        Resistance::Finite(Rational::zero())
    }

    pub fn series(&self, other: &Resistance) -> Resistance {
        match (self, other) {
            (Resistance::Finite(a), Resistance::Finite(b)) => Resistance::Finite(a + b),
            _ => Resistance::Infinite,
        }
    }

    pub fn parallel(&self, other: &Resistance) -> Resistance {
        match (self, other) {
            (Resistance::Infinite, x) | (x, Resistance::Infinite) => x.clone(),
            (Resistance::Finite(a), Resistance::Finite(b)) => {
                if a.is_zero() || b.is_zero() {
                    Resistance::zero()
                } else {
                    Resistance::Finite(a * b / (a + b))
                }
            }
        }
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Resistance::Finite(r) => Some(r),
            Resistance::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Resistance::Finite(r) => to_f64(r),
            Resistance::Infinite => f64::INFINITY,
        }
    }
}

impl PartialOrd for Resistance {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        Some(match (self, other) {
            (Resistance::Infinite, Resistance::Infinite) => Equal,
            (Resistance::Infinite, _) => Greater,
            (_, Resistance::Infinite) => Less,
            (Resistance::Finite(a), Resistance::Finite(b)) => a.cmp(b),
        })
    }
}

impl fmt::Display for Resistance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Resistance::Finite(r) => f.write_str(&fmt_rational(r)),
            Resistance::Infinite => f.write_str("inf"),
        }
    }
}

/// Resistance by the self-similar recursion
/// `1/R(T) = Σ_j 1/(2 + 2R_j)` over the subtrees hanging off the root,
/// with `R = 0` for a tree of depth 0 and `R = ∞` for a missing subtree.
pub fn resistance_recursive(tree: &Subtree) -> Resistance {
    let mut r: Vec<Resistance> = vec![Resistance::Infinite; tree.len()];
    for i in (0..tree.len()).rev() {
        if tree.nodes[i].level() == tree.n {
            r[i] = Resistance::zero();
            continue;
        }
        let mut conductance = Rational::zero();
        for c in tree.child_indices(i) {
            if let Resistance::Finite(rc) = &r[c] {
                conductance += (int(2) + int(2) * rc).recip();
            }
        }
        if conductance.is_positive() {
            r[i] = Resistance::Finite(conductance.recip());
        }
    }
    r.swap_remove(0)
}

/// Resistance by explicit series-parallel reduction of the resistor
/// network: leaves are merged into one terminal, dangling branches are
/// dropped, parallel edges combined, and degree-2 nodes eliminated until a
/// single root–terminal edge remains.
pub fn resistance_network(tree: &Subtree) -> Result<Resistance> {
    if tree.n == 0 {
        return Ok(Resistance::zero());
    }
    let sink = tree.len();
    let node_of = |i: usize| if tree.nodes[i].level() == tree.n { sink } else { i };
    let mut net = Network::default();
    for i in 1..tree.len() {
        let p = tree.parent[i] as usize;
        let r = Rational::from_integer(BigInt::one() << tree.nodes[i].level() as usize);
        net.add_edge(node_of(p), node_of(i), r);
    }
    net.reduce(0, sink)
}

#[derive(Default)]
struct Network {
    edges: Vec<Option<(usize, usize, Rational)>>,
    incident: HashMap<usize, Vec<usize>>,
}

impl Network {
    fn add_edge(&mut self, u: usize, v: usize, r: Rational) {
        let id = self.edges.len();
        self.edges.push(Some((u, v, r)));
        self.incident.entry(u).or_default().push(id);
        self.incident.entry(v).or_default().push(id);
    }

    fn remove_edge(&mut self, id: usize) -> (usize, usize, Rational) {
        let (u, v, r) = self.edges[id].take().expect("live edge");
        for w in [u, v] {
            if let Some(list) = self.incident.get_mut(&w) {
                list.retain(|&e| e != id);
            }
        }
        (u, v, r)
    }

    fn other(&self, id: usize, w: usize) -> usize {
        let (u, v, _) = self.edges[id].as_ref().expect("live edge");
        if *u == w {
            *v
        } else {
            *u
        }
    }

    fn reduce(mut self, source: usize, sink: usize) -> Result<Resistance> {
        loop {
            let mut changed = false;
            let nodes: Vec<usize> = self.incident.keys().copied().collect();
            for w in nodes {
                if w == source || w == sink {
                    continue;
                }
                let list = self.incident.get(&w).cloned().unwrap_or_default();
                match list.len() {
                    0 => {
                        self.incident.remove(&w);
                    }
                    1 => {
                        self.remove_edge(list[0]);
                        self.incident.remove(&w);
                        changed = true;
                    }
                    2 => {
                        let (a, b) = (self.other(list[0], w), self.other(list[1], w));
                        let (_, _, ra) = self.remove_edge(list[0]);
                        let (_, _, rb) = self.remove_edge(list[1]);
                        self.incident.remove(&w);
                        self.add_edge(a, b, ra + rb);
                        changed = true;
                    }
                    _ => {}
                }
            }
            // Merge parallel edges.
            let mut by_pair: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
            for (id, e) in self.edges.iter().enumerate() {
                if let Some((u, v, _)) = e {
                    by_pair.entry(((*u).min(*v), (*u).max(*v))).or_default().push(id);
                }
            }
            let mut groups: Vec<_> = by_pair.into_iter().filter(|(_, ids)| ids.len() > 1).collect();
            groups.sort();
            for ((u, v), ids) in groups {
                let mut total = Resistance::Infinite;
                for id in ids {
                    let (_, _, r) = self.remove_edge(id);
                    total = total.parallel(&Resistance::Finite(r));
                }
                if let Resistance::Finite(r) = total {
                    self.add_edge(u, v, r);
                }
                changed = true;
            }
            // Self-loops carry no current.
            let loops: Vec<usize> = self
                .edges
                .iter()
                .enumerate()
                .filter_map(|(id, e)| e.as_ref().filter(|(u, v, _)| u == v).map(|_| id))
                .collect();
            for id in loops {
                self.remove_edge(id);
                changed = true;
            }
            if !changed {
                break;
            }
        }
        let live: Vec<&(usize, usize, Rational)> = self.edges.iter().flatten().collect();
        match live.as_slice() {
            [] => Ok(Resistance::Infinite),
            [(u, v, r)] if (*u, *v) == (source, sink) || (*v, *u) == (source, sink) => {
                Ok(Resistance::Finite(r.clone()))
            }
            _ => contract("network is not series-parallel reducible"),
        }
    }
}

/// Outcome of checking `P(T) ≤ C / (2 + R(T))`.
#[derive(Clone, Debug, PartialEq)]
pub struct LyonsVerdict {
    pub survival: Rational,
    pub resistance: Resistance,
    pub constant: Rational,
    /// `C / (2 + R)`; zero when `R` is infinite.
    pub bound: Rational,
    pub holds: bool,
}

impl LyonsVerdict {
    /// `P · (2 + R)`, the smallest constant that would still work here.
    pub fn ratio(&self) -> f64 {
        match &self.resistance {
            Resistance::Finite(r) => to_f64(&(&self.survival * (int(2) + r))),
            Resistance::Infinite => 0.0,
        }
    }
}

pub const LYONS_CONSTANT: i64 = 12;

pub fn lyons_bound_check(tree: &Subtree) -> LyonsVerdict {
    lyons_bound_check_with(tree, &int(LYONS_CONSTANT))
}

pub fn lyons_bound_check_with(tree: &Subtree, constant: &Rational) -> LyonsVerdict {
    let survival = survival_exact(tree);
    let resistance = resistance_recursive(tree);
    let bound = match &resistance {
        Resistance::Finite(r) => constant / (int(2) + r),
        Resistance::Infinite => Rational::zero(),
    };
    LyonsVerdict {
        holds: survival <= bound,
        survival,
        resistance,
        constant: constant.clone(),
        bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn ts(s: &str) -> TernaryString {
        s.parse().unwrap()
    }

    #[test]
    fn subtree_validation() {
        assert!(Subtree::new(2, [ts(".0")]).is_err());
        assert!(Subtree::new(2, [ts("."), ts(".01")]).is_err());
        assert!(Subtree::new(1, [ts("."), ts(".01")]).is_err());
        let t = Subtree::new(2, [ts(".01"), ts("."), ts(".0")]).unwrap();
        assert_eq!(t.nodes(), &[ts("."), ts(".0"), ts(".01")]);
        assert_eq!(Subtree::full(2).len(), 13);
        assert_eq!(Subtree::full(2).level_counts(), vec![1, 3, 9]);
    }

    #[test]
    fn survival_examples() {
        assert_eq!(survival_exact(&Subtree::full(1)), rat(7, 8));
        for n in 0..8 {
            assert_eq!(survival_exact(&Subtree::chain(n)), rat(1, 1 << n));
        }
        assert_eq!(survival_exact(&Subtree::full(2)), rat(3367, 4096));
        assert_eq!(survival_exact(&Subtree::root_only(3)), int(0));
        assert_eq!(survival_exact(&Subtree::root_only(0)), int(1));
    }

    #[test]
    fn resistance_examples() {
        assert_eq!(resistance_recursive(&Subtree::full(1)), Resistance::Finite(rat(2, 3)));
        assert_eq!(resistance_recursive(&Subtree::full(2)), Resistance::Finite(rat(10, 9)));
        for n in 0..8u8 {
            let want = Resistance::Finite(int((1 << (n + 1)) - 2));
            assert_eq!(resistance_recursive(&Subtree::chain(n)), want);
            assert_eq!(resistance_network(&Subtree::chain(n)).unwrap(), want);
        }
        assert_eq!(resistance_network(&Subtree::chain(2)).unwrap(), Resistance::Finite(int(6)));
        let two = Subtree::new(1, [ts("."), ts(".0"), ts(".2")]).unwrap();
        assert_eq!(resistance_network(&two).unwrap(), Resistance::Finite(int(1)));
        assert_eq!(resistance_recursive(&Subtree::root_only(2)), Resistance::Infinite);
        assert_eq!(resistance_network(&Subtree::root_only(2)).unwrap(), Resistance::Infinite);
        assert_eq!(resistance_recursive(&Subtree::root_only(0)), Resistance::zero());
        for n in 0..=4 {
            let t = Subtree::full(n);
            assert_eq!(resistance_recursive(&t), resistance_network(&t).unwrap());
        }
    }

    #[test]
    fn dead_branches_do_not_conduct() {
        // .1 stops at level 1 in a depth-2 tree.
        let t = Subtree::new(2, [ts("."), ts(".0"), ts(".00"), ts(".1")]).unwrap();
        assert_eq!(resistance_recursive(&t), Resistance::Finite(int(6)));
        assert_eq!(resistance_network(&t).unwrap(), Resistance::Finite(int(6)));
        assert_eq!(survival_exact(&t), rat(1, 4));
    }

    #[test]
    fn resistance_arithmetic() {
        let two = Resistance::Finite(int(2));
        assert_eq!(two.parallel(&Resistance::Infinite), two);
        assert_eq!(two.series(&Resistance::Infinite), Resistance::Infinite);
        assert_eq!(two.parallel(&two), Resistance::Finite(int(1)));
        assert!(Resistance::Infinite > two);
        assert_eq!(Resistance::Infinite.to_string(), "inf");
    }

    #[test]
    fn lyons_examples() {
        let v = lyons_bound_check(&Subtree::full(1));
        assert_eq!(v.survival, rat(7, 8));
        assert_eq!(v.bound, rat(9, 2));
        assert!(v.holds);
        for n in 0..10 {
            assert!(lyons_bound_check(&Subtree::chain(n)).holds);
        }
        let v = lyons_bound_check(&Subtree::root_only(3));
        assert!(v.holds && v.bound.is_zero());
        assert!(!lyons_bound_check_with(&Subtree::full(1), &rat(1, 1)).holds);
    }

    #[test]
    fn random_subtrees() {
        assert_eq!(random_subtree(3, 1.0, 9).unwrap(), Subtree::full(3));
        assert_eq!(random_subtree(5, 0.6, 9).unwrap(), random_subtree(5, 0.6, 9).unwrap());
        let roots = (0..50)
            .filter(|&s| random_subtree(6, 0.05, s).unwrap().len() == 1)
            .count();
        assert!(roots > 30);
        assert!(random_subtree(3, 0.0, 1).is_err());
        assert!(random_subtree(3, 1.5, 1).is_err());
    }

    #[test]
    fn enumeration_of_small_subtrees() {
        let b = Budget::default();
        assert_eq!(all_subtrees(0, &b).unwrap().len(), 1);
        assert_eq!(all_subtrees(1, &b).unwrap().len(), 8);
        let two = all_subtrees(2, &b).unwrap();
        assert_eq!(two.len(), 729);
        let distinct: std::collections::HashSet<_> = two.iter().map(|t| t.nodes().to_vec()).collect();
        assert_eq!(distinct.len(), 729);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_close() {
        let t = Subtree::full(1);
        let a = survival_mc(&t, 20_000, 5).unwrap();
        assert_eq!(a, survival_mc(&t, 20_000, 5).unwrap());
        let p = 7.0 / 8.0;
        assert!((a.estimate() - p).abs() <= 4.0 * a.std_dev_at(p));
        let chain = survival_mc(&Subtree::chain(3), 20_000, 1).unwrap();
        assert!((chain.estimate() - 0.125).abs() <= 4.0 * chain.std_dev_at(0.125));
        assert_eq!(survival_mc(&Subtree::root_only(2), 100, 1).unwrap().survivors, 0);
        assert!(survival_mc(&t, 0, 1).is_err());
    }

    #[test]
    fn retain_and_truncate() {
        let full = Subtree::full(2);
        let pruned = full.retain(|s| s.last_digit() != Some(1));
        assert_eq!(pruned.len(), 1 + 2 + 4);
        assert_eq!(full.truncate_edges(4).len(), 5);
        let json = pruned.to_json();
        assert_eq!(Subtree::from_json(&json).unwrap(), pruned);
        assert!(json.starts_with("{\"n\":2,\"nodes\":[\".\",\".0\",\".2\","));
    }
}
