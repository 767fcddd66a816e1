//! Structural predicates and exhaustive enumeration of secondary structures.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::strand::{complementary, BasePair, BaseRef, Flattening, SecondaryStructure, StrandOrdering, StrandSystem};

/// Which structures count as members of the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StructureSpace {
    pub allow_pseudoknots: bool,
    pub require_connected: bool,
    /// Minimum number of bases a pair must enclose when both ends lie on
    /// the same strand.
    pub min_hairpin: usize,
}

impl StructureSpace {
    /// Every set of complementary pairs, crossings included.
    pub const UNRESTRICTED: Self = Self { allow_pseudoknots: true, require_connected: false, min_hairpin: 0 };

    /// Pseudoknot-free under some circular strand ordering.
    pub const UNPSEUDOKNOTTED: Self = Self { allow_pseudoknots: false, require_connected: false, min_hairpin: 0 };

    /// The nearest-neighbour ensemble: pseudoknot-free, connected, hairpins
    /// of at least three bases.
    pub const NEAREST_NEIGHBOUR: Self = Self { allow_pseudoknots: false, require_connected: true, min_hairpin: 3 };

    pub fn with_min_hairpin(mut self, m: usize) -> Self {
        self.min_hairpin = m;
        self
    }
}

/// Default cap on the number of candidate complementary pairs.
pub const DEFAULT_PAIR_BUDGET: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    OutOfRange(BaseRef),
    NotComplementary,
    SelfPair,
    BaseReused(BaseRef),
}

/// First offending pair found by [`validate_structure`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub pair: BasePair,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ViolationKind::OutOfRange(r) => write!(f, "pair {} references missing base {r}", self.pair),
            ViolationKind::NotComplementary => write!(f, "pair {} is not complementary", self.pair),
            ViolationKind::SelfPair => write!(f, "pair {} pairs a base with itself", self.pair),
            ViolationKind::BaseReused(r) => write!(f, "pair {} reuses base {r}", self.pair),
        }
    }
}

impl From<Violation> for Error {
    fn from(v: Violation) -> Self {
        Error::InvalidStructure(v.to_string())
    }
}

/// Checks ranges, complementarity and that no base is paired twice.
pub fn validate_structure(sys: &StrandSystem, s: &SecondaryStructure) -> Result<(), Violation> {
    let mut seen = std::collections::BTreeSet::new();
    for &pair in s.pairs() {
        for r in [pair.left, pair.right] {
            if !sys.contains(r) {
                return Err(Violation { pair, kind: ViolationKind::OutOfRange(r) });
            }
        }
        if pair.left == pair.right {
            return Err(Violation { pair, kind: ViolationKind::SelfPair });
        }
        if !complementary(sys.base(pair.left), sys.base(pair.right)) {
            return Err(Violation { pair, kind: ViolationKind::NotComplementary });
        }
        for r in [pair.left, pair.right] {
            if !seen.insert(r) {
                return Err(Violation { pair, kind: ViolationKind::BaseReused(r) });
            }
        }
    }
    Ok(())
}

/// No two pairs cross when bases are read in identity order
/// (strand 1 first, then strand 2, ...).
pub fn is_unpseudoknotted_single(s: &SecondaryStructure) -> bool {
    let intervals: Vec<(BaseRef, BaseRef)> = s.pairs().map(|p| (p.left, p.right)).collect();
    noncrossing(intervals)
}

/// No two pairs of `s` cross in the layout `flat`.
pub fn is_noncrossing_in(flat: &Flattening, s: &SecondaryStructure) -> bool {
    noncrossing(s.pairs().map(|p| flat.pair_positions(p)).collect())
}

fn noncrossing<K: Ord + Copy>(mut intervals: Vec<(K, K)>) -> bool {
    intervals.sort();
    // events in position order; a close must match the innermost open pair
    let mut events: Vec<(K, bool, usize)> = Vec::with_capacity(intervals.len() * 2);
    for (idx, &(a, b)) in intervals.iter().enumerate() {
        events.push((a, true, idx));
        events.push((b, false, idx));
    }
    events.sort_by(|x, y| x.0.cmp(&y.0));
    let mut stack = Vec::new();
    for (_, open, idx) in events {
        if open {
            stack.push(idx);
        } else if stack.pop() != Some(idx) {
            return false;
        }
    }
    true
}

/// Searches all `(c-1)!` circular orderings for one under which `s` has no
/// crossings, returning the first (lexicographic) witness.
pub fn is_unpseudoknotted_multi(sys: &StrandSystem, s: &SecondaryStructure) -> Option<StrandOrdering> {
    StrandOrdering::all(sys.strand_count())
        .into_iter()
        .find(|o| is_noncrossing_in(&sys.flatten(o), s))
}

/// The strand graph (one edge per inter-strand pair) is connected.
pub fn is_connected(sys: &StrandSystem, s: &SecondaryStructure) -> bool {
    let c = sys.strand_count();
    let mut parent: Vec<usize> = (0..=c).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    let mut components = c;
    for pair in s.pairs() {
        let a = find(&mut parent, pair.left.strand);
        let b = find(&mut parent, pair.right.strand);
        if a != b {
            parent[a] = b;
            components -= 1;
        }
    }
    components == 1
}

struct Candidate {
    pair: BasePair,
    /// identity-order indices of the two bases (0-based)
    a: usize,
    b: usize,
    /// flattened positions under each tracked ordering
    positions: Vec<(usize, usize)>,
}

/// Exhaustive structure enumerator over the sorted candidate-pair list.
///
/// Structures come out in lexicographic order of their sorted pair lists,
/// the empty structure first.
pub struct Enumerator<'a> {
    sys: &'a StrandSystem,
    space: StructureSpace,
    candidates: Vec<Candidate>,
    orderings: usize,
}

impl<'a> Enumerator<'a> {
    pub fn new(sys: &'a StrandSystem, space: StructureSpace, pair_budget: usize) -> Result<Self> {
        let refs = sys.base_refs();
        let orderings = if space.allow_pseudoknots {
            Vec::new()
        } else {
            StrandOrdering::all(sys.strand_count())
        };
        let flats: Vec<Flattening> = orderings.iter().map(|o| sys.flatten(o)).collect();
        let mut candidates = Vec::new();
        for (a, &ra) in refs.iter().enumerate() {
            for (b, &rb) in refs.iter().enumerate().skip(a + 1) {
                if !complementary(sys.base(ra), sys.base(rb)) {
                    continue;
                }
                if ra.strand == rb.strand && rb.index - ra.index - 1 < space.min_hairpin {
                    continue;
                }
                let pair = BasePair::new(ra, rb);
                let positions = flats.iter().map(|f| f.pair_positions(&pair)).collect();
                candidates.push(Candidate { pair, a, b, positions });
            }
        }
        if candidates.len() > pair_budget {
            return Err(Error::BudgetExceeded {
                what: "structure enumeration (candidate pairs)",
                limit: pair_budget,
                needed: candidates.len(),
            });
        }
        Ok(Self { sys, space, candidates, orderings: orderings.len() })
    }

    pub fn candidate_pairs(&self) -> Vec<BasePair> {
        self.candidates.iter().map(|c| c.pair).collect()
    }

    /// Number of disjoint partitions: the empty structure, then one per
    /// candidate pair (structures whose smallest pair is that candidate).
    pub fn partition_count(&self) -> usize {
        self.candidates.len() + 1
    }

    /// Visits every structure of the space in deterministic order.
    pub fn for_each(&self, mut f: impl FnMut(&SecondaryStructure)) {
        for part in 0..self.partition_count() {
            self.for_each_in_partition(part, &mut f);
        }
    }

    /// Visits the structures of one partition (see [`Self::partition_count`]).
    pub fn for_each_in_partition(&self, part: usize, f: &mut impl FnMut(&SecondaryStructure)) {
        let alive: Vec<usize> = (0..self.orderings).collect();
        if part == 0 {
            self.emit(&[], f);
            return;
        }
        let first = part - 1;
        let mut used = vec![false; self.sys.len()];
        let mut chosen = Vec::new();
        self.extend(first, &alive, &mut used, &mut chosen, f);
    }

    fn extend(
        &self,
        idx: usize,
        alive: &[usize],
        used: &mut [bool],
        chosen: &mut Vec<usize>,
        f: &mut impl FnMut(&SecondaryStructure),
    ) {
        let cand = &self.candidates[idx];
        if used[cand.a] || used[cand.b] {
            return;
        }
        let still_alive: Vec<usize> = if self.space.allow_pseudoknots {
            Vec::new()
        } else {
            let alive: Vec<usize> = alive
                .iter()
                .copied()
                .filter(|&o| {
                    let (i, j) = cand.positions[o];
                    chosen.iter().all(|&c| {
                        let (k, l) = self.candidates[c].positions[o];
                        !crosses(i, j, k, l)
                    })
                })
                .collect();
            if alive.is_empty() {
                return;
            }
            alive
        };
        used[cand.a] = true;
        used[cand.b] = true;
        chosen.push(idx);
        self.emit(chosen, f);
        for next in idx + 1..self.candidates.len() {
            self.extend(next, &still_alive, used, chosen, f);
        }
        chosen.pop();
        used[cand.a] = false;
        used[cand.b] = false;
    }

    fn emit(&self, chosen: &[usize], f: &mut impl FnMut(&SecondaryStructure)) {
        let s = SecondaryStructure::from_pairs(chosen.iter().map(|&c| self.candidates[c].pair));
        if self.space.require_connected && !is_connected(self.sys, &s) {
            return;
        }
        f(&s);
    }
}

fn crosses(i: usize, j: usize, k: usize, l: usize) -> bool {
    (i < k && k < j && j < l) || (k < i && i < l && l < j)
}

/// Collects every structure of `space` in deterministic order.
pub fn enumerate_structures(
    sys: &StrandSystem,
    space: StructureSpace,
    pair_budget: usize,
) -> Result<Vec<SecondaryStructure>> {
    let e = Enumerator::new(sys, space, pair_budget)?;
    let mut out = Vec::new();
    e.for_each(|s| out.push(s.clone()));
    Ok(out)
}

/// Exact number of structures in `space`.
pub fn count_structures(sys: &StrandSystem, space: StructureSpace, pair_budget: usize) -> Result<BigInt> {
    let e = Enumerator::new(sys, space, pair_budget)?;
    let mut count = BigInt::zero();
    e.for_each(|_| count += BigInt::one());
    Ok(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_examples() {
        let sys = StrandSystem::single("ACGT").unwrap();
        assert!(validate_structure(&sys, &SecondaryStructure::single(&[(1, 4), (2, 3)])).is_ok());
        let ggcc = StrandSystem::single("GGCC").unwrap();
        let reused = validate_structure(&ggcc, &SecondaryStructure::single(&[(1, 4), (1, 3)])).unwrap_err();
        assert_eq!(reused.kind, ViolationKind::BaseReused(BaseRef::new(1, 1)));
        let bad = validate_structure(&sys, &SecondaryStructure::single(&[(1, 2)])).unwrap_err();
        assert_eq!(bad.kind, ViolationKind::NotComplementary);
        let oob = validate_structure(&sys, &SecondaryStructure::single(&[(1, 9)])).unwrap_err();
        assert!(matches!(oob.kind, ViolationKind::OutOfRange(_)));
    }

    #[test]
    fn single_strand_crossings() {
        assert!(is_unpseudoknotted_single(&SecondaryStructure::single(&[(1, 4), (2, 3)])));
        assert!(!is_unpseudoknotted_single(&SecondaryStructure::single(&[(1, 3), (2, 4)])));
        assert!(is_unpseudoknotted_single(&SecondaryStructure::empty()));
        assert!(is_unpseudoknotted_single(&SecondaryStructure::single(&[(1, 2), (3, 4)])));
    }

    fn pair(a: (usize, usize), b: (usize, usize)) -> BasePair {
        BasePair::new(BaseRef::new(a.0, a.1), BaseRef::new(b.0, b.1))
    }

    #[test]
    fn four_strand_reordering() {
        // Pairs chaining 1-2, 2-3, 3-4, 4-1 around the circle 1234; laid out
        // as 1324 they cross.
        let sys = StrandSystem::from_sequences(&["GC", "GC", "GC", "GC"]).unwrap();
        let s = SecondaryStructure::from_pairs([
            pair((1, 2), (2, 1)),
            pair((2, 2), (3, 1)),
            pair((3, 2), (4, 1)),
            pair((4, 2), (1, 1)),
        ]);
        let bad = StrandOrdering::new(vec![1, 3, 2, 4]).unwrap();
        assert!(!is_noncrossing_in(&sys.flatten(&bad), &s));
        assert_eq!(is_unpseudoknotted_multi(&sys, &s), Some(StrandOrdering::identity(4)));
    }

    #[test]
    fn two_strands_forced_crossing() {
        // Strand 1 = GGCC, strand 2 = GC; the only circular ordering is 12.
        let sys = StrandSystem::from_sequences(&["GGCC", "GC"]).unwrap();
        let s = SecondaryStructure::from_pairs([pair((1, 1), (1, 3)), pair((1, 2), (1, 4))]);
        assert_eq!(is_unpseudoknotted_multi(&sys, &s), None);
        let s = SecondaryStructure::from_pairs([pair((1, 1), (2, 2)), pair((1, 3), (2, 1)), pair((1, 2), (1, 4))]);
        assert_eq!(is_unpseudoknotted_multi(&sys, &s), None);
    }

    #[test]
    fn connectivity() {
        let two = StrandSystem::from_sequences(&["GC", "GC"]).unwrap();
        assert!(!is_connected(&two, &SecondaryStructure::empty()));
        assert!(is_connected(&StrandSystem::single("GC").unwrap(), &SecondaryStructure::empty()));
        assert!(is_connected(&two, &SecondaryStructure::from_pairs([pair((1, 1), (2, 2))])));
    }

    #[test]
    fn enumeration_examples() {
        let aaaa = StrandSystem::single("AAAA").unwrap();
        for space in [StructureSpace::UNRESTRICTED, StructureSpace::UNPSEUDOKNOTTED, StructureSpace::NEAREST_NEIGHBOUR] {
            assert_eq!(enumerate_structures(&aaaa, space, 64).unwrap(), vec![SecondaryStructure::empty()]);
        }
        let acgt = StrandSystem::single("ACGT").unwrap();
        assert_eq!(
            enumerate_structures(&acgt, StructureSpace::UNRESTRICTED, 64).unwrap(),
            vec![
                SecondaryStructure::empty(),
                SecondaryStructure::single(&[(1, 4)]),
                SecondaryStructure::single(&[(1, 4), (2, 3)]),
                SecondaryStructure::single(&[(2, 3)]),
            ]
        );
        let ggcc = StrandSystem::single("GGCC").unwrap();
        assert_eq!(count_structures(&ggcc, StructureSpace::UNRESTRICTED, 64).unwrap(), BigInt::from(7));
        assert_eq!(count_structures(&ggcc, StructureSpace::UNPSEUDOKNOTTED, 64).unwrap(), BigInt::from(6));
        // (1,4) encloses only two bases
        assert_eq!(count_structures(&acgt, StructureSpace::NEAREST_NEIGHBOUR, 64).unwrap(), BigInt::from(1));
    }

    #[test]
    fn budget_guard() {
        let sys = StrandSystem::single("GGGGCCCC").unwrap();
        assert!(matches!(
            Enumerator::new(&sys, StructureSpace::UNRESTRICTED, 15),
            Err(Error::BudgetExceeded { needed: 16, .. })
        ));
    }
}
