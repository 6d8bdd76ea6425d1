//! Bitmask set algebra over description indices and enumeration of the
//! superset-closed families that index message-sharing rate constraints.

use crate::error::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// Maximum number of descriptions supported by the bitmask representation.
pub const MAX_L: usize = 16;

/// A subset of the description indices `{1..L}`.
///
/// The empty set is representable; operations that require a nonempty set
/// reject it explicitly.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DescSet {
    bits: u16,
    l: u8,
}

impl DescSet {
    pub fn empty(l: usize) -> Self {
        assert!(l >= 1 && l <= MAX_L, "L must be in 1..=16");
        DescSet { bits: 0, l: l as u8 }
    }

    pub fn full(l: usize) -> Self {
        let mut s = Self::empty(l);
        s.bits = ((1u32 << l) - 1) as u16;
        s
    }

    pub fn singleton(l: usize, idx: usize) -> Self {
        Self::from_indices(l, &[idx])
    }

    /// Builds a set from 1-based description indices.
    pub fn from_indices(l: usize, indices: &[usize]) -> Self {
        let mut s = Self::empty(l);
        for &i in indices {
            assert!(i >= 1 && i <= l, "index {i} outside 1..={l}");
            s.bits |= 1 << (i - 1);
        }
        s
    }

    pub fn from_bits(l: usize, bits: u16) -> Self {
        let mut s = Self::empty(l);
        assert_eq!(bits & !(((1u32 << l) - 1) as u16), 0, "bits above L");
        s.bits = bits;
        s
    }

    pub fn bits(&self) -> u16 {
        self.bits
    }

    pub fn l(&self) -> usize {
        self.l as usize
    }

    pub fn card(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn contains(&self, idx: usize) -> bool {
        idx >= 1 && idx <= self.l() && self.bits & (1 << (idx - 1)) != 0
    }

    pub fn is_subset_of(&self, other: &DescSet) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn is_strict_superset_of(&self, other: &DescSet) -> bool {
        other.bits & !self.bits == 0 && self.bits != other.bits
    }

    pub fn intersects(&self, other: &DescSet) -> bool {
        self.bits & other.bits != 0
    }

    pub fn union(&self, other: &DescSet) -> DescSet {
        debug_assert_eq!(self.l, other.l);
        DescSet { bits: self.bits | other.bits, l: self.l }
    }

    pub fn intersection(&self, other: &DescSet) -> DescSet {
        debug_assert_eq!(self.l, other.l);
        DescSet { bits: self.bits & other.bits, l: self.l }
    }

    /// 1-based indices in ascending order.
    pub fn indices(&self) -> Vec<usize> {
        (1..=self.l()).filter(|&i| self.contains(i)).collect()
    }

    /// All subsets of this set, including empty and itself.
    pub fn subsets(&self) -> Vec<DescSet> {
        let mut out = Vec::with_capacity(1 << self.card());
        let mut sub = self.bits;
        loop {
            out.push(DescSet { bits: sub, l: self.l });
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & self.bits;
        }
        out.reverse();
        out
    }

    /// Text form: one character per index, `'1'..'9'` then `'a'..'g'` for
    /// indices 10..16, ascending. The empty set prints as the empty string.
    pub fn digits(&self) -> String {
        self.indices()
            .into_iter()
            .map(|i| {
                if i <= 9 {
                    (b'0' + i as u8) as char
                } else {
                    (b'a' + (i - 10) as u8) as char
                }
            })
            .collect()
    }

    /// Parses the `digits` text form.
    pub fn parse(l: usize, s: &str) -> Result<Self> {
        let mut set = Self::empty(l);
        for ch in s.chars() {
            let idx = match ch {
                '1'..='9' => (ch as u8 - b'0') as usize,
                'a'..='g' => (ch as u8 - b'a') as usize + 10,
                _ => {
                    return Err(Error::Invalid(format!(
                        "invalid description index character {ch:?} in {s:?}"
                    )))
                }
            };
            if idx > l {
                return Err(Error::Invalid(format!("index {idx} exceeds L={l} in {s:?}")));
            }
            set.bits |= 1 << (idx - 1);
        }
        Ok(set)
    }

    /// Canonical ordering key: cardinality descending, then bitmask ascending.
    pub(crate) fn canonical_key(&self) -> u32 {
        (((self.l as u32) - self.card() as u32) << 16) | self.bits as u32
    }
}

impl fmt::Display for DescSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            write!(f, "{{}}")
        } else {
            write!(f, "{}", self.digits())
        }
    }
}

impl fmt::Debug for DescSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DescSet({self}, L={})", self.l)
    }
}

impl Serialize for DescSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.digits())
    }
}

/// Deserialization needs L from context, so DescSet deserializes through a
/// string and the caller re-binds L; see `IndexFamily` documents.
impl<'de> Deserialize<'de> for DescSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        DescSet::parse(MAX_L, &s).map_err(D::Error::custom)
    }
}

/// An ordered list of distinct subsets sharing one L, kept in canonical
/// order (cardinality descending, then bitmask ascending) so constraint
/// systems and serialized outputs are byte-stable.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct IndexFamily {
    l: usize,
    members: Vec<DescSet>,
}

impl IndexFamily {
    pub fn new(l: usize, mut members: Vec<DescSet>) -> Self {
        for m in &members {
            assert_eq!(m.l(), l, "family member has mismatched L");
        }
        members.sort_by_key(|m| m.canonical_key());
        members.dedup();
        IndexFamily { l, members }
    }

    pub fn empty(l: usize) -> Self {
        IndexFamily { l, members: Vec::new() }
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn members(&self) -> &[DescSet] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, k: &DescSet) -> bool {
        self.members.binary_search_by_key(&k.canonical_key(), |m| m.canonical_key()).is_ok()
    }

    pub fn union(&self, other: &IndexFamily) -> IndexFamily {
        assert_eq!(self.l, other.l);
        let mut v = self.members.clone();
        v.extend_from_slice(&other.members);
        IndexFamily::new(self.l, v)
    }

    pub fn intersection(&self, other: &IndexFamily) -> IndexFamily {
        assert_eq!(self.l, other.l);
        let v = self.members.iter().copied().filter(|m| other.contains(m)).collect();
        IndexFamily::new(self.l, v)
    }

    pub fn iter(&self) -> impl Iterator<Item = &DescSet> {
        self.members.iter()
    }
}

/// Which index family to build; mirrors the five families used by the
/// rate-constraint machinery.
#[derive(Clone, Copy, Debug)]
pub enum FamilyKind {
    /// All `K` with `|K| = w`.
    Card { w: usize },
    /// All `K` with `|K| > w`.
    CardAbove { w: usize },
    /// All `K` with `|K| = w` and `base ⊆ K`.
    CardWith { w: usize, base: DescSet },
    /// All `K` with `|K| > w` and `base ⊆ K`.
    CardAboveWith { w: usize, base: DescSet },
    /// All nonempty `K` with `K ∩ base ≠ ∅`.
    Meets { base: DescSet },
}

/// Builds one of the standard index families over subsets of `{1..l}`.
pub fn index_family(l: usize, kind: FamilyKind) -> Result<IndexFamily> {
    let check_w = |w: usize| -> Result<()> {
        if w < 1 || w > l {
            Err(Error::InvalidCardinality { w, l })
        } else {
            Ok(())
        }
    };
    let check_base = |base: &DescSet| -> Result<()> {
        if base.is_empty() {
            Err(Error::EmptyBase)
        } else {
            Ok(())
        }
    };
    let mut members = Vec::new();
    for bits in 1u32..(1 << l) {
        let k = DescSet::from_bits(l, bits as u16);
        let keep = match kind {
            FamilyKind::Card { w } => {
                check_w(w)?;
                k.card() == w
            }
            FamilyKind::CardAbove { w } => {
                check_w(w)?;
                k.card() > w
            }
            FamilyKind::CardWith { w, base } => {
                check_w(w)?;
                check_base(&base)?;
                k.card() == w && base.is_subset_of(&k)
            }
            FamilyKind::CardAboveWith { w, base } => {
                check_w(w)?;
                check_base(&base)?;
                k.card() > w && base.is_subset_of(&k)
            }
            FamilyKind::Meets { base } => {
                check_base(&base)?;
                k.intersects(&base)
            }
        };
        if keep {
            members.push(k);
        }
    }
    Ok(IndexFamily::new(l, members))
}

/// Strict supersets of `k`: the family `{A : A ⊃ K}`.
pub fn strict_supersets(k: &DescSet) -> IndexFamily {
    if k.card() == k.l() {
        return IndexFamily::empty(k.l());
    }
    index_family(k.l(), FamilyKind::CardAboveWith { w: k.card(), base: *k })
        .expect("valid by construction")
}

/// True iff every member's strict supersets are all members (the closure
/// property the shared-rate constraints are indexed by).
pub fn is_qstar(l: usize, members: &[DescSet]) -> bool {
    let fam = IndexFamily::new(l, members.to_vec());
    let closed = fam.iter().all(|k| strict_supersets(k).iter().all(|s| fam.contains(s)));
    closed
}

/// A family of nonempty subsets closed under taking strict supersets.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct QFamily {
    family: IndexFamily,
}

impl QFamily {
    pub fn new(l: usize, members: Vec<DescSet>) -> Result<Self> {
        let family = IndexFamily::new(l, members);
        if family.iter().any(|m| m.is_empty()) {
            return Err(Error::Invalid("Q members must be nonempty".into()));
        }
        for k in family.iter() {
            for s in strict_supersets(k).iter() {
                if !family.contains(s) {
                    return Err(Error::NotClosed { missing: s.digits() });
                }
            }
        }
        Ok(QFamily { family })
    }

    pub fn empty(l: usize) -> Self {
        QFamily { family: IndexFamily::empty(l) }
    }

    pub fn l(&self) -> usize {
        self.family.l()
    }

    pub fn family(&self) -> &IndexFamily {
        &self.family
    }

    pub fn members(&self) -> &[DescSet] {
        self.family.members()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    pub fn union(&self, other: &QFamily) -> QFamily {
        QFamily { family: self.family.union(&other.family) }
    }

    pub fn intersection(&self, other: &QFamily) -> QFamily {
        QFamily { family: self.family.intersection(&other.family) }
    }

    /// The singleton members of the family.
    pub fn q1_part(&self) -> IndexFamily {
        q1_part(self)
    }

    /// The non-singleton members, in canonical order.
    pub fn non_singletons(&self) -> Vec<DescSet> {
        self.family.iter().filter(|k| k.card() >= 2).copied().collect()
    }
}

/// Exactly the singleton members of `q`.
pub fn q1_part(q: &QFamily) -> IndexFamily {
    IndexFamily::new(q.l(), q.family.iter().filter(|k| k.card() == 1).copied().collect())
}

fn family_sort_key(members: &[DescSet]) -> (usize, Vec<u32>) {
    (members.len(), members.iter().map(|m| m.canonical_key()).collect())
}

/// Exhaustive enumeration over all `2^(2^L - 1)` candidate subfamilies.
pub fn enumerate_qstar_exhaustive(l: usize) -> Result<Vec<QFamily>> {
    const EXHAUSTIVE_MAX_L: usize = 4;
    if l > EXHAUSTIVE_MAX_L {
        return Err(Error::TooLarge { l, max: EXHAUSTIVE_MAX_L });
    }
    let nonempty: Vec<DescSet> =
        (1u32..(1 << l)).map(|bits| DescSet::from_bits(l, bits as u16)).collect();
    let m = nonempty.len();
    let mut out = Vec::new();
    for pick in 0u32..(1 << m) {
        let members: Vec<DescSet> =
            (0..m).filter(|i| pick & (1 << i) != 0).map(|i| nonempty[i]).collect();
        if is_qstar(l, &members) {
            out.push(QFamily { family: IndexFamily::new(l, members) });
        }
    }
    out.sort_by_key(|q| family_sort_key(q.members()));
    Ok(out)
}

/// Streams every superset-closed family without materializing the list.
///
/// Sets are decided in cardinality-descending order; a set may join only
/// when all of its strict supersets already joined, so every leaf of the
/// search is a valid family and nothing is revisited.
pub fn for_each_qstar<F: FnMut(&[DescSet])>(l: usize, mut f: F) {
    let mut order: Vec<DescSet> =
        (1u32..(1 << l)).map(|bits| DescSet::from_bits(l, bits as u16)).collect();
    order.sort_by_key(|m| m.canonical_key());

    fn rec<F: FnMut(&[DescSet])>(
        order: &[DescSet],
        pos: usize,
        chosen: &mut Vec<DescSet>,
        chosen_bits: &mut Vec<u16>,
        f: &mut F,
    ) {
        if pos == order.len() {
            f(chosen);
            return;
        }
        let k = order[pos];
        // Excluding k is always closure-preserving.
        rec(order, pos + 1, chosen, chosen_bits, f);
        let all_supersets_in = strict_supersets(&k)
            .iter()
            .all(|s| chosen_bits.contains(&s.bits()));
        if all_supersets_in {
            chosen.push(k);
            chosen_bits.push(k.bits());
            rec(order, pos + 1, chosen, chosen_bits, f);
            chosen.pop();
            chosen_bits.pop();
        }
    }
    rec(&order, 0, &mut Vec::new(), &mut Vec::new(), &mut f);
}

/// Counts superset-closed families (including the empty one) without
/// building them.
pub fn count_qstar(l: usize) -> u128 {
    let mut n: u128 = 0;
    for_each_qstar(l, |_| n += 1);
    n
}

/// All superset-closed families over nonempty subsets of `{1..l}`,
/// including the empty family, in canonical order.
///
/// Uses the exhaustive candidate scan for `l <= 4` and the lazy up-set
/// search above that; both produce the same canonical listing.
pub fn enumerate_qstar(l: usize) -> Result<Vec<QFamily>> {
    if l <= 4 {
        return enumerate_qstar_exhaustive(l);
    }
    let mut out = Vec::new();
    for_each_qstar(l, |members| {
        out.push(QFamily { family: IndexFamily::new(l, members.to_vec()) });
    });
    out.sort_by_key(|q| family_sort_key(q.members()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(l: usize, idx: &[usize]) -> DescSet {
        DescSet::from_indices(l, idx)
    }

    #[test]
    fn digits_round_trip() {
        let s = ds(3, &[1, 3]);
        assert_eq!(s.digits(), "13");
        assert_eq!(DescSet::parse(3, "13").unwrap(), s);
        assert_eq!(DescSet::parse(3, "31").unwrap(), s);
        assert_eq!(DescSet::parse(3, "").unwrap(), DescSet::empty(3));
        let wide = DescSet::from_indices(12, &[2, 10, 12]);
        assert_eq!(wide.digits(), "2ac");
        assert_eq!(DescSet::parse(12, "2ac").unwrap(), wide);
        assert!(DescSet::parse(3, "4").is_err());
        assert!(DescSet::parse(3, "x").is_err());
    }

    #[test]
    fn subset_algebra() {
        let a = ds(3, &[1, 2]);
        let b = ds(3, &[1, 2, 3]);
        assert!(a.is_subset_of(&b));
        assert!(b.is_strict_superset_of(&a));
        assert!(!a.is_strict_superset_of(&a));
        assert_eq!(a.union(&ds(3, &[3])), b);
        assert_eq!(b.intersection(&a), a);
        assert_eq!(ds(3, &[2]).subsets().len(), 2);
        assert_eq!(b.subsets().len(), 8);
    }

    #[test]
    fn meets_family_matches_membership_definition() {
        let fam = index_family(3, FamilyKind::Meets { base: ds(3, &[1]) }).unwrap();
        let expect: Vec<DescSet> =
            vec![ds(3, &[1, 2, 3]), ds(3, &[1, 2]), ds(3, &[1, 3]), ds(3, &[1])];
        assert_eq!(fam.members(), expect.as_slice());
    }

    #[test]
    fn strict_supersets_above_pair() {
        let fam =
            index_family(3, FamilyKind::CardAboveWith { w: 2, base: ds(3, &[1, 2]) }).unwrap();
        assert_eq!(fam.members(), &[ds(3, &[1, 2, 3])]);
    }

    #[test]
    fn meets_full_base_is_all_nonempty() {
        for l in 1..=4 {
            let fam = index_family(l, FamilyKind::Meets { base: DescSet::full(l) }).unwrap();
            assert_eq!(fam.len(), (1 << l) - 1);
        }
    }

    #[test]
    fn family_errors() {
        assert!(matches!(
            index_family(3, FamilyKind::Card { w: 0 }),
            Err(Error::InvalidCardinality { .. })
        ));
        assert!(matches!(
            index_family(3, FamilyKind::Card { w: 4 }),
            Err(Error::InvalidCardinality { .. })
        ));
        assert!(matches!(
            index_family(3, FamilyKind::Meets { base: DescSet::empty(3) }),
            Err(Error::EmptyBase)
        ));
    }

    #[test]
    fn q1_part_examples() {
        let q = QFamily::new(2, vec![ds(2, &[1, 2]), ds(2, &[1]), ds(2, &[2])]).unwrap();
        assert_eq!(q.q1_part().members(), &[ds(2, &[1]), ds(2, &[2])]);

        let q = QFamily::new(3, vec![ds(3, &[1, 2, 3]), ds(3, &[1, 2])]).unwrap();
        assert!(q.q1_part().is_empty());

        let q = QFamily::new(
            3,
            vec![ds(3, &[1]), ds(3, &[1, 2]), ds(3, &[1, 3]), ds(3, &[1, 2, 3])],
        )
        .unwrap();
        assert_eq!(q.q1_part().members(), &[ds(3, &[1])]);
    }

    #[test]
    fn is_qstar_examples() {
        assert!(is_qstar(2, &[ds(2, &[1]), ds(2, &[1, 2])]));
        assert!(!is_qstar(2, &[ds(2, &[1]), ds(2, &[2])]));
        assert!(is_qstar(3, &[ds(3, &[1, 2]), ds(3, &[1, 2, 3])]));
        assert!(QFamily::new(2, vec![ds(2, &[1])]).is_err());
    }

    /// Brute force over all subfamilies, independent of `enumerate_qstar`'s
    /// search structure: closure is re-checked from the raw definition.
    fn brute_force_count(l: usize) -> usize {
        let nonempty: Vec<u16> = (1u16..(1 << l)).collect();
        let mut count = 0usize;
        'outer: for pick in 0u32..(1 << nonempty.len()) {
            let chosen: Vec<u16> = nonempty
                .iter()
                .enumerate()
                .filter(|(i, _)| pick & (1 << i) != 0)
                .map(|(_, &b)| b)
                .collect();
            for &k in &chosen {
                for sup in 1u16..(1 << l) {
                    if sup & k == k && sup != k && !chosen.contains(&sup) {
                        continue 'outer;
                    }
                }
            }
            count += 1;
        }
        count
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(enumerate_qstar(1).unwrap().len(), 2);
        assert_eq!(enumerate_qstar(2).unwrap().len(), 5);
        assert_eq!(enumerate_qstar(3).unwrap().len(), 19);
        for l in 1..=3 {
            assert_eq!(enumerate_qstar(l).unwrap().len(), brute_force_count(l));
        }
    }

    #[test]
    fn enumerate_l2_listing() {
        let fams = enumerate_qstar(2).unwrap();
        let listed: Vec<Vec<String>> = fams
            .iter()
            .map(|q| q.members().iter().map(|m| m.digits()).collect())
            .collect();
        let expect: Vec<Vec<String>> = vec![
            vec![],
            vec!["12".into()],
            vec!["12".into(), "1".into()],
            vec!["12".into(), "2".into()],
            vec!["12".into(), "1".into(), "2".into()],
        ];
        assert_eq!(listed, expect);
    }

    #[test]
    fn lazy_path_matches_exhaustive() {
        for l in 1..=4 {
            let mut lazy = Vec::new();
            for_each_qstar(l, |members| lazy.push(members.to_vec()));
            lazy.sort_by_key(|m| family_sort_key(m));
            let exhaustive: Vec<Vec<DescSet>> = enumerate_qstar_exhaustive(l)
                .unwrap()
                .into_iter()
                .map(|q| q.members().to_vec())
                .collect();
            assert_eq!(lazy, exhaustive);
        }
        assert_eq!(count_qstar(4), 167);
        assert!(matches!(enumerate_qstar_exhaustive(5), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn lattice_closure_of_valid_families() {
        for l in 1..=3 {
            let fams = enumerate_qstar(l).unwrap();
            for a in &fams {
                for b in &fams {
                    let u = a.union(b);
                    let i = a.intersection(b);
                    assert!(is_qstar(l, u.members()));
                    assert!(is_qstar(l, i.members()));
                }
            }
        }
    }

    #[test]
    fn enumerated_members_pass_is_qstar_and_failures_are_absent() {
        for l in 1..=3 {
            let fams = enumerate_qstar(l).unwrap();
            for q in &fams {
                assert!(is_qstar(l, q.members()));
            }
            let keys: Vec<_> = fams.iter().map(|q| family_sort_key(q.members())).collect();
            let nonempty: Vec<DescSet> =
                (1u32..(1 << l)).map(|b| DescSet::from_bits(l, b as u16)).collect();
            for pick in 0u32..(1 << nonempty.len()) {
                let members: Vec<DescSet> = nonempty
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| pick & (1 << i) != 0)
                    .map(|(_, &s)| s)
                    .collect();
                let fam = IndexFamily::new(l, members);
                let present = keys.contains(&family_sort_key(fam.members()));
                assert_eq!(present, is_qstar(l, fam.members()));
            }
        }
    }
}
