//! Strands, multi-stranded systems, base pairs and strand orderings.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Base {
    A,
    C,
    G,
    T,
    U,
}

impl Base {
    pub fn from_char(c: char) -> Result<Self> {
        match c.to_ascii_uppercase() {
            'A' => Ok(Base::A),
            'C' => Ok(Base::C),
            'G' => Ok(Base::G),
            'T' => Ok(Base::T),
            'U' => Ok(Base::U),
            _ => Err(Error::InvalidBase(c)),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Base::A => 'A',
            Base::C => 'C',
            Base::G => 'G',
            Base::T => 'T',
            Base::U => 'U',
        }
    }

    /// `U` folded onto `T`; used for parameter lookups.
    pub fn dna(self) -> Base {
        if self == Base::U {
            Base::T
        } else {
            self
        }
    }
}

/// Watson-Crick complementarity: A-T, A-U and C-G. No wobble pairs.
pub fn complementary(a: Base, b: Base) -> bool {
    use Base::*;
    matches!(
        (a, b),
        (A, T) | (T, A) | (A, U) | (U, A) | (C, G) | (G, C)
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Strand {
    pub id: usize,
    pub seq: Vec<Base>,
}

impl Strand {
    pub fn new(id: usize, seq: Vec<Base>) -> Result<Self> {
        if seq.is_empty() {
            return Err(Error::EmptyStrand(id));
        }
        Ok(Self { id, seq })
    }

    pub fn len(&self) -> usize {
        self.seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seq.is_empty()
    }

    /// 1-based access.
    pub fn base(&self, index: usize) -> Base {
        self.seq[index - 1]
    }

    pub fn sequence_string(&self) -> String {
        self.seq.iter().map(|b| b.symbol()).collect()
    }
}

/// An ordered collection of strands with ids `1..=c` in input order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StrandSystem {
    strands: Vec<Strand>,
}

impl StrandSystem {
    /// Builds a system from sequences; ids are assigned `1..=c`.
    pub fn from_sequences<S: AsRef<str>>(seqs: &[S]) -> Result<Self> {
        let strands = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let seq = s
                    .as_ref()
                    .chars()
                    .map(Base::from_char)
                    .collect::<Result<Vec<_>>>()?;
                Strand::new(i + 1, seq)
            })
            .collect::<Result<Vec<_>>>()?;
        if strands.is_empty() {
            return Err(Error::InvalidArgument("a system needs at least one strand".into()));
        }
        Ok(Self { strands })
    }

    /// Single-strand convenience constructor.
    pub fn single(seq: &str) -> Result<Self> {
        Self::from_sequences(&[seq])
    }

    /// Parses the line-oriented strand format: one strand per line,
    /// `#` starts a comment, blank lines are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seqs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(bad) = content.chars().find(|c| Base::from_char(*c).is_err()) {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("invalid base {bad:?}"),
                });
            }
            seqs.push(content.to_string());
        }
        if seqs.is_empty() {
            return Err(Error::Parse { line: 0, msg: "no strands".into() });
        }
        Self::from_sequences(&seqs)
    }

    /// Inverse of [`StrandSystem::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.strands {
            out.push_str(&s.sequence_string());
            out.push('\n');
        }
        out
    }

    pub fn strands(&self) -> &[Strand] {
        &self.strands
    }

    pub fn strand(&self, id: usize) -> &Strand {
        &self.strands[id - 1]
    }

    /// Number of strands, `c`.
    pub fn strand_count(&self) -> usize {
        self.strands.len()
    }

    /// Total number of bases, `n`.
    pub fn len(&self) -> usize {
        self.strands.iter().map(Strand::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn base(&self, r: BaseRef) -> Base {
        self.strand(r.strand).base(r.index)
    }

    pub fn contains(&self, r: BaseRef) -> bool {
        r.strand >= 1 && r.strand <= self.strands.len() && r.index >= 1 && r.index <= self.strand(r.strand).len()
    }

    /// All bases in identity order (strand 1 first).
    pub fn base_refs(&self) -> Vec<BaseRef> {
        self.strands
            .iter()
            .flat_map(|s| (1..=s.len()).map(move |i| BaseRef::new(s.id, i)))
            .collect()
    }

    pub fn flatten(&self, ordering: &StrandOrdering) -> Flattening {
        Flattening::new(self, ordering)
    }
}

impl fmt::Display for StrandSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.strands.iter().map(Strand::sequence_string).collect();
        write!(f, "{}", parts.join("+"))
    }
}

impl FromStr for StrandSystem {
    type Err = Error;

    /// `ACGT` or `AC+GT` (strands joined by `+`).
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split('+').map(str::trim).collect();
        Self::from_sequences(&parts)
    }
}

/// A base addressed by strand id and 1-based index within that strand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BaseRef {
    pub strand: usize,
    pub index: usize,
}

impl BaseRef {
    pub const fn new(strand: usize, index: usize) -> Self {
        Self { strand, index }
    }
}

impl fmt::Display for BaseRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.strand, self.index)
    }
}

/// Canonical base pair: `left < right` in identity order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasePair {
    pub left: BaseRef,
    pub right: BaseRef,
}

impl BasePair {
    pub fn new(a: BaseRef, b: BaseRef) -> Self {
        if a <= b {
            Self { left: a, right: b }
        } else {
            Self { left: b, right: a }
        }
    }

    /// Pair on strand 1 with 1-based indices.
    pub fn single(i: usize, j: usize) -> Self {
        Self::new(BaseRef::new(1, i), BaseRef::new(1, j))
    }

    pub fn touches(&self, r: BaseRef) -> bool {
        self.left == r || self.right == r
    }
}

impl fmt::Display for BasePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.left, self.right)
    }
}

/// A set of base pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SecondaryStructure {
    pairs: BTreeSet<BasePair>,
}

impl SecondaryStructure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = BasePair>>(pairs: I) -> Self {
        Self { pairs: pairs.into_iter().collect() }
    }

    /// Single-strand structure from 1-based `(i, j)` tuples.
    pub fn single(pairs: &[(usize, usize)]) -> Self {
        Self::from_pairs(pairs.iter().map(|&(i, j)| BasePair::single(i, j)))
    }

    pub fn pairs(&self) -> impl Iterator<Item = &BasePair> + '_ {
        self.pairs.iter()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, p: &BasePair) -> bool {
        self.pairs.contains(p)
    }

    pub fn insert(&mut self, p: BasePair) -> bool {
        self.pairs.insert(p)
    }

    /// Renders as `{(1:1,1:4),(1:2,1:3)}`.
    pub fn render(&self) -> String {
        let inner: Vec<String> = self.pairs.iter().map(ToString::to_string).collect();
        format!("{{{}}}", inner.join(","))
    }
}

/// A circular permutation of strand ids, stored rotated so the smallest id
/// comes first; two orderings equal up to rotation compare equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StrandOrdering {
    ids: Vec<usize>,
}

impl StrandOrdering {
    pub fn new(ids: Vec<usize>) -> Result<Self> {
        let c = ids.len();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if c == 0 || sorted != (1..=c).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument(format!("{ids:?} is not a permutation of 1..={c}")));
        }
        let start = ids.iter().position(|&x| x == 1).unwrap_or(0);
        let mut ids = ids;
        ids.rotate_left(start);
        Ok(Self { ids })
    }

    pub fn identity(c: usize) -> Self {
        Self { ids: (1..=c).collect() }
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// All `(c-1)!` circular orderings, lexicographic with strand 1 first.
    pub fn all(c: usize) -> Vec<StrandOrdering> {
        let mut out = Vec::new();
        let mut rest: Vec<usize> = (2..=c).collect();
        permute(&mut rest, 0, &mut |p| {
            let mut ids = vec![1];
            ids.extend_from_slice(p);
            out.push(StrandOrdering { ids });
        });
        out.sort();
        out
    }

    /// Ordering rotated left by `k` positions (not re-canonicalized).
    fn rotated_ids(&self, k: usize) -> Vec<usize> {
        let mut ids = self.ids.clone();
        let len = ids.len().max(1);
        ids.rotate_left(k % len);
        ids
    }

    /// Highest rotational symmetry degree `v(pi)` of this ordering for the
    /// system's sequences: the largest `r` dividing `c` such that rotating
    /// by `c/r` positions maps every strand onto one with an identical
    /// sequence.
    pub fn symmetry_degree(&self, sys: &StrandSystem) -> usize {
        let c = self.ids.len();
        let seqs: Vec<&[Base]> = self.ids.iter().map(|&id| sys.strand(id).seq.as_slice()).collect();
        (1..=c)
            .rev()
            .filter(|r| c % r == 0)
            .find(|&r| {
                let shift = c / r;
                (0..c).all(|p| seqs[p] == seqs[(p + shift) % c])
            })
            .unwrap_or(1)
    }

    /// The strand moved into ordering position `p` by a rotation of
    /// `shift` positions, as a map from strand id to strand id.
    pub fn rotation_map(&self, shift: usize) -> Vec<usize> {
        let c = self.ids.len();
        let rotated = self.rotated_ids(shift);
        let mut map = vec![0; c + 1];
        for p in 0..c {
            map[self.ids[p]] = rotated[p];
        }
        map
    }
}

impl fmt::Display for StrandOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ids.iter().map(ToString::to_string).collect();
        write!(f, "{}", parts.join(""))
    }
}

fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k >= v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Positions of every base in the single long strand obtained by laying the
/// strands out in a given ordering. Positions are 1-based.
#[derive(Debug, Clone)]
pub struct Flattening {
    bases: Vec<Base>,
    refs: Vec<BaseRef>,
    /// `offset[id]` = position of base 1 of strand `id`, minus one.
    offset: Vec<usize>,
    /// `nick_after[p]` is true when a strand ends at position `p` (`p < n`).
    nick_after: Vec<bool>,
}

impl Flattening {
    fn new(sys: &StrandSystem, ordering: &StrandOrdering) -> Self {
        let n = sys.len();
        let mut bases = vec![Base::A; n + 1];
        let mut refs = vec![BaseRef::new(0, 0); n + 1];
        let mut offset = vec![0; sys.strand_count() + 1];
        let mut nick_after = vec![false; n + 1];
        let mut pos = 0;
        for &id in ordering.ids() {
            offset[id] = pos;
            let s = sys.strand(id);
            for i in 1..=s.len() {
                pos += 1;
                bases[pos] = s.base(i);
                refs[pos] = BaseRef::new(id, i);
            }
            if pos < n {
                nick_after[pos] = true;
            }
        }
        Self { bases, refs, offset, nick_after }
    }

    pub fn len(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn position(&self, r: BaseRef) -> usize {
        self.offset[r.strand] + r.index
    }

    pub fn base_at(&self, p: usize) -> Base {
        self.bases[p]
    }

    pub fn ref_at(&self, p: usize) -> BaseRef {
        self.refs[p]
    }

    /// Whether a nick sits between positions `p` and `p + 1`.
    pub fn nick_after(&self, p: usize) -> bool {
        p < self.nick_after.len() && self.nick_after[p]
    }

    /// Pair positions `(i, j)` with `i < j` in this layout.
    pub fn pair_positions(&self, p: &BasePair) -> (usize, usize) {
        let a = self.position(p.left);
        let b = self.position(p.right);
        (a.min(b), a.max(b))
    }

    /// `partner[p]` = paired position or 0.
    pub fn partner_table(&self, s: &SecondaryStructure) -> Vec<usize> {
        let mut partner = vec![0; self.len() + 1];
        for p in s.pairs() {
            let (i, j) = self.pair_positions(p);
            partner[i] = j;
            partner[j] = i;
        }
        partner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complementarity() {
        assert!(complementary(Base::A, Base::T));
        assert!(complementary(Base::U, Base::A));
        assert!(complementary(Base::G, Base::C));
        assert!(!complementary(Base::A, Base::A));
        assert!(!complementary(Base::G, Base::T));
        assert!(!complementary(Base::G, Base::U));
    }

    #[test]
    fn parses_text_format() {
        let sys = StrandSystem::parse("# two strands\nACGT\n\n  gc  # trailing\n").unwrap();
        assert_eq!(sys.strand_count(), 2);
        assert_eq!(sys.len(), 6);
        assert_eq!(sys.strand(2).sequence_string(), "GC");
        assert_eq!(sys.to_text(), "ACGT\nGC\n");
        assert!(matches!(StrandSystem::parse("ACGX"), Err(Error::Parse { line: 1, .. })));
        assert!(StrandSystem::parse("# nothing\n").is_err());
        assert_eq!("AC+GT".parse::<StrandSystem>().unwrap().strand_count(), 2);
    }

    #[test]
    fn orderings_are_circular() {
        assert_eq!(StrandOrdering::all(1).len(), 1);
        assert_eq!(StrandOrdering::all(3).len(), 2);
        assert_eq!(StrandOrdering::all(4).len(), 6);
        assert_eq!(
            StrandOrdering::new(vec![3, 1, 2]).unwrap(),
            StrandOrdering::new(vec![1, 2, 3]).unwrap()
        );
        assert!(StrandOrdering::new(vec![1, 1]).is_err());
    }

    #[test]
    fn flattening_nicks() {
        let sys = StrandSystem::from_sequences(&["AC", "G", "TT"]).unwrap();
        let f = sys.flatten(&StrandOrdering::new(vec![1, 3, 2]).unwrap());
        assert_eq!(f.len(), 5);
        assert_eq!(f.position(BaseRef::new(3, 1)), 3);
        assert_eq!(f.position(BaseRef::new(2, 1)), 5);
        let nicks: Vec<usize> = (1..5).filter(|&p| f.nick_after(p)).collect();
        assert_eq!(nicks, vec![2, 4]);
    }

    #[test]
    fn symmetry_degree_of_orderings() {
        let sys = StrandSystem::from_sequences(&["AT", "AT"]).unwrap();
        assert_eq!(StrandOrdering::identity(2).symmetry_degree(&sys), 2);
        let sys = StrandSystem::from_sequences(&["AT", "GC"]).unwrap();
        assert_eq!(StrandOrdering::identity(2).symmetry_degree(&sys), 1);
        let sys = StrandSystem::from_sequences(&["A", "C", "A", "C"]).unwrap();
        assert_eq!(StrandOrdering::identity(4).symmetry_degree(&sys), 2);
        assert_eq!(StrandOrdering::new(vec![1, 3, 2, 4]).unwrap().symmetry_degree(&sys), 1);
    }
}
