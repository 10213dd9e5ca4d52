//! The rooted ternary tree `T*_n`: nodes as base-3 digit strings, their
//! triadic intervals, and the triadic distance between same-level nodes.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::budget::Budget;
use crate::error::{contract, KakeyaError, Result};
use crate::rational::{inv_pow3, pow3, Rational};

/// Deepest level representable in the packed form (`3^40 < 2^64`).
pub const MAX_LEVEL: u8 = 40;

pub type Digit = u8;

/// A node of `T*_n`: a string `.a_1 a_2 … a_level` of digits in {0,1,2}.
///
/// Packed as the integer `a_1 3^{level-1} + … + a_level`, so that the
/// derived ordering (level first, then index) is breadth-first with
/// lexicographic order inside each level.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TernaryString {
    level: u8,
    index: u64,
}

impl TernaryString {
    pub const ROOT: TernaryString = TernaryString { level: 0, index: 0 };

    pub fn from_digits(digits: &[Digit]) -> Result<TernaryString> {
        if digits.len() > MAX_LEVEL as usize {
            return contract(format!("level {} exceeds {}", digits.len(), MAX_LEVEL));
        }
        let mut index = 0u64;
        for &d in digits {
            if d > 2 {
                return contract(format!("digit {d} is not ternary"));
            }
            index = index * 3 + d as u64;
        }
        Ok(TernaryString {
            level: digits.len() as u8,
            index,
        })
    }

    /// Node at `level` whose digits spell `index` in base 3.
    pub fn from_index(level: u8, index: u64) -> Result<TernaryString> {
        if level > MAX_LEVEL {
            return contract(format!("level {level} exceeds {MAX_LEVEL}"));
        }
        if (index as u128) >= 3u128.pow(level as u32) {
            return contract(format!("index {index} out of range at level {level}"));
        }
        Ok(TernaryString { level, index })
    }

    pub(crate) fn from_index_unchecked(level: u8, index: u64) -> TernaryString {
        debug_assert!((index as u128) < 3u128.pow(level as u32));
        TernaryString { level, index }
    }

    pub fn level(self) -> u8 {
        self.level
    }

    /// The digits read as a base-3 integer, i.e. `value() * 3^level`.
    pub fn index(self) -> u64 {
        self.index
    }

    pub fn is_root(self) -> bool {
        self.level == 0
    }

    pub fn digits(self) -> Vec<Digit> {
        (1..=self.level).map(|j| self.digit_unchecked(j)).collect()
    }

    /// `π_j`: the j-th digit, 1-based.
    pub fn digit(self, j: u8) -> Result<Digit> {
        if j == 0 || j > self.level {
            return contract(format!("digit index {j} outside 1..={}", self.level));
        }
        Ok(self.digit_unchecked(j))
    }

    pub(crate) fn digit_unchecked(self, j: u8) -> Digit {
        ((self.index / pow3((self.level - j) as u32)) % 3) as Digit
    }

    pub fn last_digit(self) -> Option<Digit> {
        (self.level > 0).then_some((self.index % 3) as Digit)
    }

    /// `π^j`: the level-j ancestor.
    pub fn prefix(self, j: u8) -> Result<TernaryString> {
        if j > self.level {
            return contract(format!("prefix length {j} exceeds level {}", self.level));
        }
        Ok(self.prefix_unchecked(j))
    }

    pub(crate) fn prefix_unchecked(self, j: u8) -> TernaryString {
        TernaryString {
            level: j,
            index: self.index / pow3((self.level - j) as u32),
        }
    }

    pub fn parent(self) -> Option<TernaryString> {
        (self.level > 0).then(|| self.prefix_unchecked(self.level - 1))
    }

    /// Child in direction `d`.
    pub fn child(self, d: Digit) -> TernaryString {
        assert!(d <= 2 && self.level < MAX_LEVEL);
        TernaryString {
            level: self.level + 1,
            index: self.index * 3 + d as u64,
        }
    }

    pub fn children(self) -> [TernaryString; 3] {
        [self.child(0), self.child(1), self.child(2)]
    }

    /// The triadic rational `a_1/3 + … + a_j/3^j`.
    pub fn value(self) -> Rational {
        Rational::new(BigInt::from(self.index), BigInt::from(3u8).pow(self.level as u32))
    }

    /// `I(s) = [s, s + 3^{-level}]`.
    pub fn interval(self) -> TriadicInterval {
        TriadicInterval {
            left: self.value(),
            length: inv_pow3(self.level as u32),
        }
    }

    /// True iff `self` is a (non-strict) ancestor of `s`.
    pub fn is_ancestor_of(self, s: TernaryString) -> bool {
        self.level <= s.level && s.prefix_unchecked(self.level) == self
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(self, other: TernaryString) -> u8 {
        let (mut a, mut b) = (self, other);
        while a.level > b.level {
            a = a.prefix_unchecked(a.level - 1);
        }
        while b.level > a.level {
            b = b.prefix_unchecked(b.level - 1);
        }
        while a != b {
            a = a.prefix_unchecked(a.level - 1);
            b = b.prefix_unchecked(b.level - 1);
        }
        a.level
    }

    /// Position in breadth-first canonical order of `T*`: the root is 0,
    /// then the level-1 nodes, and so on.
    pub fn bfs_index(self) -> u64 {
        (pow3(self.level as u32) - 1) / 2 + self.index
    }
}

pub fn digit(s: TernaryString, j: u8) -> Result<Digit> {
    s.digit(j)
}

pub fn prefix(s: TernaryString, j: u8) -> Result<TernaryString> {
    s.prefix(j)
}

pub fn value(s: TernaryString) -> Rational {
    s.value()
}

pub fn interval(s: TernaryString) -> TriadicInterval {
    s.interval()
}

pub fn is_ancestor(t: TernaryString, s: TernaryString) -> bool {
    t.is_ancestor_of(s)
}

/// `d(s1, s2) = 3^{-k}` with `k` the longest common prefix. `d(s, s)` is
/// `3^{-level}`.
pub fn triadic_distance(s1: TernaryString, s2: TernaryString) -> Result<Rational> {
    if s1.level != s2.level {
        return contract(format!(
            "triadic distance needs equal levels, got {} and {}",
            s1.level, s2.level
        ));
    }
    Ok(inv_pow3(s1.common_prefix_len(s2) as u32))
}

/// All of `T_n` in lexicographic order.
pub fn enumerate_level(n: u8, budget: &Budget) -> Result<Vec<TernaryString>> {
    if n > MAX_LEVEL {
        return contract(format!("level {n} exceeds {MAX_LEVEL}"));
    }
    budget.check("nodes of T_n", 3u128.pow(n as u32))?;
    Ok((0..pow3(n as u32))
        .map(|index| TernaryString { level: n, index })
        .collect())
}

/// `I(s)` as an exact left endpoint and length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriadicInterval {
    pub left: Rational,
    pub length: Rational,
}

impl TriadicInterval {
    pub fn right(&self) -> Rational {
        &self.left + &self.length
    }

    pub fn contains(&self, other: &TriadicInterval) -> bool {
        self.left <= other.left && other.right() <= self.right()
    }
}

impl fmt::Display for TernaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(".")?;
        for d in self.digits() {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for TernaryString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for TernaryString {
    type Err = KakeyaError;

    fn from_str(s: &str) -> Result<Self> {
        let rest = s
            .strip_prefix('.')
            .ok_or_else(|| KakeyaError::Parse(format!("node {s:?} must start with '.'")))?;
        let digits = rest
            .bytes()
            .map(|b| match b {
                b'0'..=b'2' => Ok(b - b'0'),
                _ => Err(KakeyaError::Parse(format!("bad digit in node {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        TernaryString::from_digits(&digits)
    }
}

impl Serialize for TernaryString {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TernaryString {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use num_traits::Signed;
    use proptest::prelude::*;

    fn ts(s: &str) -> TernaryString {
        s.parse().unwrap()
    }

    #[test]
    fn digits_and_prefixes() {
        assert_eq!(digit(ts(".102"), 2).unwrap(), 0);
        assert_eq!(digit(ts(".2"), 1).unwrap(), 2);
        assert_eq!(digit(ts(".000"), 3).unwrap(), 0);
        assert!(digit(ts(".01"), 3).is_err());
        assert!(digit(ts(".01"), 0).is_err());

        assert_eq!(prefix(ts(".102"), 1).unwrap(), ts(".1"));
        assert_eq!(prefix(ts(".102"), 0).unwrap(), TernaryString::ROOT);
        assert_eq!(prefix(ts(".02"), 2).unwrap(), ts(".02"));
        assert!(prefix(ts(".02"), 3).is_err());
    }

    #[test]
    fn values_and_intervals() {
        assert_eq!(value(ts(".02")), rat(2, 9));
        assert_eq!(value(TernaryString::ROOT), int(0));
        assert_eq!(value(ts(".21")), rat(7, 9));

        let i = interval(ts(".1"));
        assert_eq!((i.left.clone(), i.right()), (rat(1, 3), rat(2, 3)));
        let i = interval(ts("."));
        assert_eq!((i.left.clone(), i.right()), (int(0), int(1)));
        let i = interval(ts(".20"));
        assert_eq!((i.left.clone(), i.right()), (rat(2, 3), rat(7, 9)));
    }

    #[test]
    fn ancestry() {
        assert!(is_ancestor(ts(".1"), ts(".102")));
        assert!(!is_ancestor(ts(".2"), ts(".102")));
        assert!(is_ancestor(ts(".102"), ts(".102")));
        assert!(is_ancestor(ts("."), ts(".102")));
        assert!(!is_ancestor(ts(".102"), ts(".1")));
    }

    #[test]
    fn distances() {
        assert_eq!(triadic_distance(ts(".00"), ts(".02")).unwrap(), rat(1, 3));
        assert_eq!(triadic_distance(ts(".00"), ts(".20")).unwrap(), int(1));
        assert_eq!(triadic_distance(ts(".012"), ts(".012")).unwrap(), rat(1, 27));
        assert!(triadic_distance(ts(".0"), ts(".01")).is_err());
    }

    #[test]
    fn enumeration() {
        let b = Budget::default();
        assert_eq!(enumerate_level(0, &b).unwrap(), vec![TernaryString::ROOT]);
        assert_eq!(
            enumerate_level(1, &b).unwrap(),
            vec![ts(".0"), ts(".1"), ts(".2")]
        );
        let l2 = enumerate_level(2, &b).unwrap();
        assert_eq!(l2.len(), 9);
        assert_eq!(l2[0], ts(".00"));
        assert_eq!(l2[8], ts(".22"));
        assert!(l2.windows(2).all(|w| w[0] < w[1]));
        assert!(enumerate_level(5, &Budget::new(100)).is_err());
    }

    #[test]
    fn text_form() {
        assert_eq!(ts(".102").to_string(), ".102");
        assert_eq!(TernaryString::ROOT.to_string(), ".");
        assert!("102".parse::<TernaryString>().is_err());
        assert!(".13".parse::<TernaryString>().is_err());
        assert_eq!(ts(".").bfs_index(), 0);
        assert_eq!(ts(".2").bfs_index(), 3);
        assert_eq!(ts(".00").bfs_index(), 4);
    }

    fn node(max_level: u8) -> impl Strategy<Value = TernaryString> {
        prop::collection::vec(0u8..3, 0..=max_level as usize)
            .prop_map(|d| TernaryString::from_digits(&d).unwrap())
    }

    fn same_level_triple() -> impl Strategy<Value = (TernaryString, TernaryString, TernaryString)> {
        (1u8..8).prop_flat_map(|l| {
            let n = pow3(l as u32);
            (0..n, 0..n, 0..n).prop_map(move |(a, b, c)| {
                (
                    TernaryString::from_index(l, a).unwrap(),
                    TernaryString::from_index(l, b).unwrap(),
                    TernaryString::from_index(l, c).unwrap(),
                )
            })
        })
    }

    proptest! {
        #[test]
        fn children_tile_parent(s in node(10)) {
            let parent = s.interval();
            let kids: Vec<_> = s.children().iter().map(|c| c.interval()).collect();
            prop_assert!(kids.iter().all(|k| parent.contains(k)));
            prop_assert_eq!(&kids[0].left, &parent.left);
            prop_assert_eq!(kids[0].right(), kids[1].left.clone());
            prop_assert_eq!(kids[1].right(), kids[2].left.clone());
            prop_assert_eq!(kids[2].right(), parent.right());
        }

        #[test]
        fn digits_round_trip(s in node(12)) {
            prop_assert_eq!(TernaryString::from_digits(&s.digits()).unwrap(), s);
            prop_assert_eq!(s.to_string().parse::<TernaryString>().unwrap(), s);
            for j in 0..=s.level() {
                prop_assert!(s.prefix(j).unwrap().is_ancestor_of(s));
            }
        }

        #[test]
        fn distance_is_ultrametric((a, b, c) in same_level_triple()) {
            let ab = triadic_distance(a, b).unwrap();
            let bc = triadic_distance(b, c).unwrap();
            let ac = triadic_distance(a, c).unwrap();
            prop_assert!(ac <= ab.clone().max(bc));
            let gap = (a.value() - b.value()).abs();
            prop_assert!(gap < ab * int(3));
        }
    }

}
