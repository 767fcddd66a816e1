use crate::error::{Error, Result};
use crate::strand::{BasePair, BaseRef, Flattening, SecondaryStructure, StrandOrdering, StrandSystem};
use crate::structure::{is_connected, is_noncrossing_in, validate_structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoopKind {
    Hairpin,
    Stack,
    Bulge,
    Interior,
    Multiloop,
    Exterior,
}

/// One face of the polymer graph. Positions refer to the flattening the
/// decomposition was computed in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loop {
    pub kind: LoopKind,
    /// Pair closing the loop from outside; `None` only for the outermost
    /// exterior loop.
    pub closing: Option<(usize, usize)>,
    /// Pairs bordering the loop from inside, left to right.
    pub inner: Vec<(usize, usize)>,
    /// Unpaired bases on the loop's border.
    pub unpaired: usize,
}

impl Loop {
    /// Number of bases on the loop's border.
    pub fn border_bases(&self) -> usize {
        self.unpaired + 2 * self.inner.len() + if self.closing.is_some() { 2 } else { 0 }
    }

    /// Pairs bordering the loop, the closing pair included.
    pub fn pair_count(&self) -> usize {
        self.inner.len() + usize::from(self.closing.is_some())
    }
}

/// Walks the face between `lo` and `hi` (exclusive) and returns
/// (inner pairs, unpaired count, nick count).
fn walk(flat: &Flattening, partner: &[usize], lo: usize, hi: usize) -> (Vec<(usize, usize)>, usize, usize) {
    let mut inner = Vec::new();
    let mut unpaired = 0;
    let mut nicks = 0;
    // backbone edge (lo, lo+1) belongs to the face when lo is a closing base
    if lo > 0 && flat.nick_after(lo) {
        nicks += 1;
    }
    let mut p = lo + 1;
    while p < hi {
        if partner[p] > p {
            inner.push((p, partner[p]));
            p = partner[p];
        } else {
            unpaired += 1;
        }
        if flat.nick_after(p) {
            nicks += 1;
        }
        p += 1;
    }
    (inner, unpaired, nicks)
}

/// Face decomposition of a connected structure that is crossing-free in
/// the given ordering.
pub fn decompose_loops(sys: &StrandSystem, ordering: &StrandOrdering, s: &SecondaryStructure) -> Result<Vec<Loop>> {
    validate_structure(sys, s)?;
    let flat = sys.flatten(ordering);
    if !is_noncrossing_in(&flat, s) {
        return Err(Error::Pseudoknotted);
    }
    if !is_connected(sys, s) {
        return Err(Error::Disconnected);
    }
    Ok(decompose_flat(&flat, s))
}

pub(crate) fn decompose_flat(flat: &Flattening, s: &SecondaryStructure) -> Vec<Loop> {
    let n = flat.len();
    let partner = flat.partner_table(s);
    let mut loops = Vec::with_capacity(s.len() + 1);
    let (inner, unpaired, _) = walk(flat, &partner, 0, n + 1);
    loops.push(Loop { kind: LoopKind::Exterior, closing: None, inner, unpaired });
    for i in 1..=n {
        let j = partner[i];
        if j <= i {
            continue;
        }
        let (inner, unpaired, nicks) = walk(flat, &partner, i, j);
        let kind = if nicks > 0 {
            LoopKind::Exterior
        } else {
            match inner.as_slice() {
                [] => LoopKind::Hairpin,
                [(d, e)] => {
                    let l1 = d - i - 1;
                    let l2 = j - e - 1;
                    match (l1, l2) {
                        (0, 0) => LoopKind::Stack,
                        (0, _) | (_, 0) => LoopKind::Bulge,
                        _ => LoopKind::Interior,
                    }
                }
                _ => LoopKind::Multiloop,
            }
        };
        loops.push(Loop { kind, closing: Some((i, j)), inner, unpaired });
    }
    loops
}

/// Largest divisor `r` of the ordering's symmetry degree such that the
/// rotation by `c/r` strand positions maps `s` onto itself.
pub fn rotational_symmetry(sys: &StrandSystem, ordering: &StrandOrdering, s: &SecondaryStructure) -> usize {
    let c = ordering.len();
    let v = ordering.symmetry_degree(sys);
    (1..=v)
        .rev()
        .filter(|r| v % r == 0)
        .find(|&r| {
            if r == 1 {
                return true;
            }
            let map = ordering.rotation_map(c / r);
            let image = SecondaryStructure::from_pairs(s.pairs().map(|p| {
                BasePair::new(
                    BaseRef::new(map[p.left.strand], p.left.index),
                    BaseRef::new(map[p.right.strand], p.right.index),
                )
            }));
            &image == s
        })
        .unwrap_or(1)
}
