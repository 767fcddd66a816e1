//! Candidate energy levels: finite supersets of the occupied levels.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::energy::{Energy, EnergyModel, ModelKind, NNParams};
use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Scalar};
use crate::strand::{complementary, Flattening, StrandOrdering, StrandSystem};

/// A sorted set of energies in quanta of `delta`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelSet {
    pub delta: BigRational,
    pub levels: BTreeSet<Energy>,
}

impl LevelSet {
    pub fn new(delta: BigRational, levels: impl IntoIterator<Item = Energy>) -> Self {
        Self { delta, levels: levels.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn contains(&self, e: Energy) -> bool {
        self.levels.contains(&e)
    }

    /// Levels from most favorable (lowest) upward.
    pub fn ascending(&self) -> Vec<Energy> {
        self.levels.iter().copied().collect()
    }

    pub fn union(mut self, other: &LevelSet) -> Result<LevelSet> {
        check_delta(&self.delta, &other.delta)?;
        self.levels.extend(other.levels.iter().copied());
        Ok(self)
    }

    pub fn is_superset_of(&self, other: impl IntoIterator<Item = Energy>) -> bool {
        other.into_iter().all(|e| self.levels.contains(&e))
    }

    /// Every level multiplied by `j`.
    pub fn magnified(&self, j: i64) -> Result<LevelSet> {
        let levels = self.levels.iter().map(|e| e.checked_mul(j)).collect::<Result<_>>()?;
        Ok(LevelSet { delta: self.delta.clone(), levels })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("level set serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }
}

impl Serialize for LevelSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("delta", &self.delta.render())?;
        let levels: Vec<String> = self.levels.iter().map(|e| e.0.to_string()).collect();
        map.serialize_entry("levels", &levels)?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for LevelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw {
            delta: String,
            levels: Vec<String>,
        }
        let raw = Raw::deserialize(d)?;
        let delta = parse_rational(&raw.delta).map_err(D::Error::custom)?;
        let levels = raw
            .levels
            .iter()
            .map(|l| l.parse::<i64>().map(Energy).map_err(D::Error::custom))
            .collect::<std::result::Result<BTreeSet<_>, _>>()?;
        Ok(LevelSet { delta, levels })
    }
}

fn check_delta(a: &BigRational, b: &BigRational) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!("quantum mismatch: {} vs {}", a.render(), b.render())));
    }
    Ok(())
}

/// `{0, -1, ..., -floor(n/2)}`.
pub fn levels_bpm(n: usize) -> LevelSet {
    LevelSet::new(BigRational::one(), (0..=(n / 2) as i64).map(|k| Energy(-k)))
}

/// Same range as the pair count: a structure never has more stacked pairs
/// than pairs.
pub fn levels_bps(n: usize) -> LevelSet {
    levels_bpm(n)
}

/// Smallest difference between two levels, in energy units; `delta` for
/// fewer than two levels.
pub fn min_gap(levels: &LevelSet) -> BigRational {
    let v = levels.ascending();
    match v.windows(2).map(|w| w[1].0 - w[0].0).min() {
        Some(g) => &levels.delta * BigInt::from(g),
        None => levels.delta.clone(),
    }
}

/// Sorted, deduplicated set of quanta, or `None` for the empty marker.
pub type Cell = Option<Vec<i64>>;

/// Elementwise sums; the empty marker absorbs.
pub fn sumset(a: &Cell, b: &Cell) -> Cell {
    let (a, b) = (a.as_ref()?, b.as_ref()?);
    let mut out: Vec<i64> = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            out.push(x + y);
        }
    }
    out.sort_unstable();
    out.dedup();
    Some(out)
}

/// Sumset of two level sets with matching quanta.
pub fn sumset_levels(a: &LevelSet, b: &LevelSet) -> Result<LevelSet> {
    check_delta(&a.delta, &b.delta)?;
    let mut out = BTreeSet::new();
    for x in &a.levels {
        for y in &b.levels {
            out.insert(*x + *y);
        }
    }
    Ok(LevelSet { delta: a.delta.clone(), levels: out })
}

fn shift(c: &Cell, by: i64) -> Cell {
    c.as_ref().map(|v| v.iter().map(|x| x + by).collect())
}

/// In-place union; the empty marker is the identity.
fn union_into(target: &mut Cell, add: Cell) {
    let Some(add) = add else { return };
    match target {
        None => *target = Some(add),
        Some(v) => {
            v.extend(add);
            v.sort_unstable();
            v.dedup();
        }
    }
}

/// Every quantum between the most and least favorable totals any structure
/// could reach: `n` loops each at the extreme single-loop energy, the
/// association penalty and the largest symmetry term.
pub fn levels_nn_grid(sys: &StrandSystem, params: &NNParams) -> LevelSet {
    let n = sys.len();
    let c = sys.strand_count() as i64;
    let (lo, hi) = params.loop_energy_range(n);
    let assoc = params.assoc.0 * (c - 1);
    let sym = (1..=sys.strand_count()).map(|r| params.symmetry_quanta(r).0).max().unwrap_or(0).max(0);
    let bottom = n as i64 * lo.0.min(0) + assoc;
    let top = n as i64 * hi.0.max(0) + assoc + sym;
    LevelSet::new(params.delta.clone(), (bottom..=top).map(Energy))
}

struct Nicks {
    prefix: Vec<usize>,
}

impl Nicks {
    fn new(flat: &Flattening) -> Self {
        let n = flat.len();
        let mut prefix = vec![0; n + 1];
        for p in 1..=n {
            prefix[p] = prefix[p - 1] + usize::from(flat.nick_after(p));
        }
        Self { prefix }
    }

    /// Nicks after positions `a..=b` (none when `b < a`).
    fn between(&self, a: usize, b: usize) -> usize {
        if b < a {
            0
        } else {
            self.prefix[b] - self.prefix[a - 1]
        }
    }

    fn after(&self, p: usize) -> bool {
        self.between(p, p) > 0
    }
}

/// Occupied levels, rotational symmetry ignored, of the connected
/// structures that are crossing-free in `ordering`, by dynamic programming
/// over sets of energies instead of sums of weights.
pub fn levels_nn_dp(
    sys: &StrandSystem,
    ordering: &StrandOrdering,
    params: &NNParams,
    min_hairpin: usize,
) -> Result<LevelSet> {
    let flat = sys.flatten(ordering);
    let n = flat.len();
    let eta = Nicks::new(&flat);
    let c = sys.strand_count() as i64;
    // tables indexed [i][j] for 1 <= i <= n + 1, i - 1 <= j <= n
    let mut g: Vec<Vec<Cell>> = vec![vec![None; n + 1]; n + 2];
    let mut gb = g.clone();
    let mut gm = g.clone();
    for (i, row) in g.iter_mut().enumerate().skip(1) {
        row[i - 1] = Some(vec![0]);
    }
    let get = |t: &Vec<Vec<Cell>>, i: usize, j: usize| -> Cell {
        if j + 1 < i {
            None
        } else {
            t[i][j].clone()
        }
    };
    let bp = params.multi_bp.0;
    let nt = params.multi_nt.0;
    let init = params.multi_init.0;

    for l in 0..n {
        for i in 1..=n - l {
            let j = i + l;
            // paired cell
            let mut b: Cell = None;
            if j > i && complementary(flat.base_at(i), flat.base_at(j)) {
                if eta.between(i, j - 1) == 0 && j - i - 1 >= min_hairpin {
                    union_into(&mut b, Some(vec![params.hairpin_energy(&flat, i, j)?.0]));
                }
                for d in i + 1..j {
                    for e in d + 1..j {
                        if gb[d][e].is_none() {
                            continue;
                        }
                        if eta.between(i, d - 1) == 0 && eta.between(e, j - 1) == 0 {
                            let loop_e = params.two_pair_energy(&flat, i, d, e, j)?.0;
                            union_into(&mut b, shift(&gb[d][e], loop_e));
                        }
                        if eta.between(e, j - 1) == 0 && !eta.after(i) && !eta.after(d - 1) && d >= i + 2 {
                            let free = (j - e - 1) as i64;
                            let inner = sumset(&get(&gm, i + 1, d - 1), &gb[d][e]);
                            union_into(&mut b, shift(&inner, init + 2 * bp + free * nt));
                        }
                    }
                }
                for x in i..j {
                    if !eta.after(x) {
                        continue;
                    }
                    if (x == i || !eta.after(i)) && (x == j - 1 || !eta.after(j - 1)) {
                        union_into(&mut b, sumset(&get(&g, i + 1, x), &get(&g, x + 1, j - 1)));
                    }
                }
            }
            gb[i][j] = b;

            let mut m: Cell = None;
            let mut open: Cell = if eta.between(i, j - 1) == 0 { Some(vec![0]) } else { None };
            for d in i..=j {
                for e in d + 1..=j {
                    if gb[d][e].is_none() || eta.between(e, j - 1) != 0 {
                        continue;
                    }
                    if eta.between(i, d - 1) == 0 {
                        let free = (d - i + j - e) as i64;
                        union_into(&mut m, shift(&gb[d][e], bp + free * nt));
                    }
                    if d > i && !eta.after(d - 1) {
                        let free = (j - e) as i64;
                        union_into(&mut m, shift(&sumset(&get(&gm, i, d - 1), &gb[d][e]), bp + free * nt));
                    }
                    if d == i || !eta.after(d - 1) {
                        union_into(&mut open, sumset(&get(&g, i, d - 1), &gb[d][e]));
                    }
                }
            }
            gm[i][j] = m;
            g[i][j] = open;
        }
    }
    let top = if n == 0 { Some(vec![0]) } else { g[1][n].clone() };
    let assoc = params.assoc.0 * (c - 1);
    Ok(LevelSet::new(
        params.delta.clone(),
        top.unwrap_or_default().into_iter().map(|q| Energy(q + assoc)),
    ))
}

/// Union of [`levels_nn_dp`] over every circular ordering.
pub fn levels_nn_dp_all(sys: &StrandSystem, params: &NNParams, min_hairpin: usize) -> Result<LevelSet> {
    let mut out = LevelSet::new(params.delta.clone(), []);
    for o in StrandOrdering::all(sys.strand_count()) {
        out = out.union(&levels_nn_dp(sys, &o, params, min_hairpin)?)?;
    }
    Ok(out)
}

/// Adds `l + k_B T ln R` (rounded) for every level `l` and every divisor
/// `R > 1` of the ordering's symmetry degree.
pub fn augment_symmetry(levels: &LevelSet, sys: &StrandSystem, ordering: &StrandOrdering, params: &NNParams) -> LevelSet {
    let v = ordering.symmetry_degree(sys);
    let mut out = levels.clone();
    for r in (2..=v).filter(|r| v % r == 0) {
        let t = params.symmetry_quanta(r);
        out.levels.extend(levels.levels.iter().map(|&l| l + t));
    }
    out
}

/// Symmetry-augmented DP levels, united over all orderings.
pub fn levels_nn_dp_symmetric(sys: &StrandSystem, params: &NNParams, min_hairpin: usize) -> Result<LevelSet> {
    let mut out = LevelSet::new(params.delta.clone(), []);
    for o in StrandOrdering::all(sys.strand_count()) {
        let base = levels_nn_dp(sys, &o, params, min_hairpin)?;
        out = out.union(&augment_symmetry(&base, sys, &o, params))?;
    }
    Ok(out)
}

/// The default candidate set for a model (before magnification): closed
/// forms for the counting models, the symmetry-augmented DP for NN.
pub fn candidate_levels(sys: &StrandSystem, model: &EnergyModel, min_hairpin: usize) -> Result<LevelSet> {
    match &model.kind {
        ModelKind::Bpm => Ok(levels_bpm(sys.len())),
        ModelKind::Bps => Ok(levels_bps(sys.len())),
        ModelKind::Nn(p) => levels_nn_dp_symmetric(sys, p, min_hairpin),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[i64]) -> LevelSet {
        LevelSet::new(BigRational::one(), v.iter().map(|&q| Energy(q)))
    }

    #[test]
    fn closed_forms() {
        assert_eq!(levels_bpm(7), set(&[0, -1, -2, -3]));
        assert_eq!(levels_bpm(1), set(&[0]));
        assert_eq!(levels_bps(4), set(&[0, -1, -2]));
        assert_eq!(levels_bpm(12).len(), 7);
    }

    #[test]
    fn gaps() {
        assert_eq!(min_gap(&levels_bpm(7)), BigRational::one());
        assert_eq!(min_gap(&set(&[0, -2, -5])), BigRational::from_integer(2.into()));
        let tenth = BigRational::new(1.into(), 10.into());
        assert_eq!(min_gap(&LevelSet::new(tenth.clone(), [Energy(3)])), tenth);
    }

    #[test]
    fn sumset_rules() {
        assert_eq!(sumset(&Some(vec![-1, 0]), &Some(vec![-2, 0])), Some(vec![-3, -2, -1, 0]));
        assert_eq!(sumset(&Some(vec![-1, 3]), &Some(vec![0])), Some(vec![-1, 3]));
        assert_eq!(sumset(&Some(vec![-1, 3]), &None), None);
        let mut c = None;
        union_into(&mut c, Some(vec![2]));
        union_into(&mut c, None);
        assert_eq!(c, Some(vec![2]));
        assert!(sumset_levels(&set(&[0]), &LevelSet::new(BigRational::new(1.into(), 2.into()), [])).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = set(&[0, -1, -2]);
        assert_eq!(s.to_json(), r#"{"delta":"1/1","levels":["-2","-1","0"]}"#);
        assert_eq!(LevelSet::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn dp_small_cases() {
        let p = NNParams::parse("[global]\nkbt = 1\n[stack]\ndefault = -1\n[hairpin]\ndefault = 1\n[mismatch]\ndefault = 0\n").unwrap();
        let aaa = StrandSystem::single("AAA").unwrap();
        assert_eq!(levels_nn_dp(&aaa, &StrandOrdering::identity(1), &p, 3).unwrap(), set(&[0]));
        let acgt = StrandSystem::single("ACGT").unwrap();
        assert_eq!(levels_nn_dp(&acgt, &StrandOrdering::identity(1), &p, 3).unwrap(), set(&[0]));
        let full = NNParams::parse(
            "[global]\nkbt = 1\n[stack]\ndefault = -2\n[hairpin]\ndefault = 1\n[bulge]\ndefault = 1\n\
             [interior.size]\ndefault = 1\n[interior.asym]\ndefault = 0\n[mismatch]\ndefault = 0\n",
        )
        .unwrap();
        let stem = StrandSystem::single("GGGAAAACCC").unwrap();
        let model = EnergyModel::nn(full.clone());
        let dos = crate::oracle::dos_brute(&stem, model.default_space(), &model, 64).unwrap();
        let dp = levels_nn_dp(&stem, &StrandOrdering::identity(1), &full, 3).unwrap();
        assert_eq!(dp.ascending(), dos.levels().collect::<Vec<_>>());
    }

    #[test]
    fn symmetry_augmentation() {
        let p = NNParams::parse("[global]\nkbt = 3\n").unwrap();
        let at = StrandSystem::from_sequences(&["AT", "AT"]).unwrap();
        let o = StrandOrdering::identity(2);
        assert_eq!(augment_symmetry(&set(&[0, -2]), &at, &o, &p), set(&[0, -2, 2, 0]));
        let mixed = StrandSystem::from_sequences(&["AT", "GC"]).unwrap();
        assert_eq!(augment_symmetry(&set(&[0, -2]), &mixed, &o, &p), set(&[0, -2]));
    }

    #[test]
    fn grid_examples() {
        let p = NNParams::zero();
        assert_eq!(levels_nn_grid(&StrandSystem::single("GGGCCC").unwrap(), &p), set(&[0]));
        let p = NNParams::parse("[stack]\ndefault = -1\n[hairpin]\ndefault = 0\n[multi]\ninit = 0\n").unwrap();
        assert_eq!(levels_nn_grid(&StrandSystem::single("GGGCCC").unwrap(), &p), set(&[0, -1, -2, -3, -4, -5, -6]));
    }
}
