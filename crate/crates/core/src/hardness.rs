//! Instance generators for the counting-hardness chain
//! #3DM -> #4-PARTITION -> #BPS, plus exhaustive counters used to check that
//! each step preserves solution counts up to a computable factor.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::exact::factorial;
use crate::strand::{complementary, Base, Strand, StrandSystem};
use crate::structure::{Enumerator, StructureSpace};

/// Largest 4-PARTITION instance the exhaustive counter accepts by default.
pub const DEFAULT_PART_BUDGET: usize = 40;
/// Memo entries allowed per branch of the stacking counter.
pub const DEFAULT_BPS_STATES: usize = 4_000_000;
/// Largest `|X|` for the matching counter.
pub const DEFAULT_3DM_BUDGET: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreeDMInstance {
    #[serde(rename = "X")]
    pub x: Vec<u64>,
    #[serde(rename = "Y")]
    pub y: Vec<u64>,
    #[serde(rename = "Z")]
    pub z: Vec<u64>,
    #[serde(rename = "T")]
    pub triples: Vec<(u64, u64, u64)>,
}

fn distinct_sorted(v: &[u64], name: &str) -> Result<Vec<u64>> {
    let set: BTreeSet<u64> = v.iter().copied().collect();
    if set.len() != v.len() {
        return Err(Error::InvalidInstance(format!("{name} has repeated elements")));
    }
    Ok(set.into_iter().collect())
}

impl ThreeDMInstance {
    pub fn new(x: Vec<u64>, y: Vec<u64>, z: Vec<u64>, triples: Vec<(u64, u64, u64)>) -> Result<Self> {
        let inst = Self { x, y, z, triples };
        inst.validate()?;
        Ok(inst)
    }

    /// `X = Y = Z = {1..q}`.
    pub fn uniform(q: u64, triples: Vec<(u64, u64, u64)>) -> Result<Self> {
        let e: Vec<u64> = (1..=q).collect();
        Self::new(e.clone(), e.clone(), e, triples)
    }

    pub fn validate(&self) -> Result<()> {
        let x = distinct_sorted(&self.x, "X")?;
        let y = distinct_sorted(&self.y, "Y")?;
        let z = distinct_sorted(&self.z, "Z")?;
        if x.len() != y.len() || y.len() != z.len() {
            return Err(Error::InvalidInstance("X, Y and Z must have equal size".into()));
        }
        let mut seen = BTreeSet::new();
        for &(a, b, c) in &self.triples {
            if x.binary_search(&a).is_err() || y.binary_search(&b).is_err() || z.binary_search(&c).is_err() {
                return Err(Error::InvalidInstance(format!("triple ({a},{b},{c}) uses an unknown element")));
            }
            if !seen.insert((a, b, c)) {
                return Err(Error::InvalidInstance(format!("triple ({a},{b},{c}) repeated")));
            }
        }
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.x.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        inst.validate()?;
        Ok(inst)
    }

    /// 1-based rank of each element inside its own set.
    fn ranks(&self) -> [BTreeMap<u64, u64>; 3] {
        let rank = |v: &[u64]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.into_iter().zip(1..).collect::<BTreeMap<_, _>>()
        };
        [rank(&self.x), rank(&self.y), rank(&self.z)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FourPartitionInstance {
    pub weights: Vec<u64>,
    #[serde(rename = "B")]
    pub bound: u64,
}

#[derive(Deserialize)]
struct RawFourPartition {
    weights: Vec<u64>,
    #[serde(rename = "B")]
    bound: u64,
}

impl FourPartitionInstance {
    /// Checks `k = 0 mod 4` and `B/5 < w < B/3` for every weight. The total
    /// need not equal `B k / 4`; such instances simply have no solution.
    pub fn new(weights: Vec<u64>, bound: u64) -> Result<Self> {
        if bound == 0 {
            return Err(Error::InvalidInstance("B must be positive".into()));
        }
        if weights.len() % 4 != 0 {
            return Err(Error::InvalidInstance(format!("{} elements is not a multiple of 4", weights.len())));
        }
        for &w in &weights {
            let five = w.checked_mul(5).ok_or(Error::Overflow("4-partition weight"))?;
            let three = w.checked_mul(3).ok_or(Error::Overflow("4-partition weight"))?;
            if five <= bound || three >= bound {
                return Err(Error::InvalidInstance(format!(
                    "weight {w} is not strictly between B/5 and B/3 for B = {bound}"
                )));
            }
        }
        Ok(Self { weights, bound })
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn total(&self) -> u128 {
        self.weights.iter().map(|&w| w as u128).sum()
    }

    pub fn is_balanced(&self) -> bool {
        self.total() == self.bound as u128 * (self.k() / 4) as u128
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawFourPartition = serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        Self::new(raw.weights, raw.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BPSInstance {
    pub strand: Strand,
    pub k: u64,
}

impl BPSInstance {
    pub fn sequence(&self) -> String {
        self.strand.sequence_string()
    }

    pub fn system(&self) -> StrandSystem {
        StrandSystem::single(&self.sequence()).expect("generated strand is valid")
    }

    pub fn to_json(&self) -> String {
        json!({ "strand": self.sequence(), "K": self.k }).to_string()
    }
}

fn checked(
    terms: &[(u64, u64)],
    constant: i128,
) -> Result<u64> {
    let mut acc = constant;
    for &(coef, val) in terms {
        acc += coef as i128 * val as i128;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow("3DM weight encoding"))
}

/// Radix encoding of a 3DM instance as 4-PARTITION together with the factor
/// `alpha = prod (N(a) - 1)!` relating the two solution counts.
///
/// With `r = 32 q`, element `a` occurring in `N(a)` triples yields one
/// "actual" and `N(a) - 1` "dummy" copies, and each triple `(x_i, y_j, z_k)`
/// yields `u = 10r^4 - k r^3 - j r^2 - i r + 8`. A 4-tuple reaches
/// `B = 40 r^4 + 15` only as a triple with all-actual or all-dummy partners.
/// An element in no triple still emits its actual copy (padded with copies of
/// itself to a multiple of four), which keeps the count at zero.
pub fn gen_4part_from_3dm(inst: &ThreeDMInstance) -> Result<(FourPartitionInstance, BigInt)> {
    inst.validate()?;
    let q = inst.q() as u64;
    let r = 32 * q;
    let r2 = r.checked_mul(r).ok_or(Error::Overflow("3DM radix"))?;
    let r3 = r2.checked_mul(r).ok_or(Error::Overflow("3DM radix"))?;
    let r4 = r3.checked_mul(r).ok_or(Error::Overflow("3DM radix"))?;
    let [rx, ry, rz] = inst.ranks();

    let mut occurrences = [BTreeMap::new(), BTreeMap::new(), BTreeMap::new()];
    for &(a, b, c) in &inst.triples {
        *occurrences[0].entry(rx[&a]).or_insert(0u64) += 1;
        *occurrences[1].entry(ry[&b]).or_insert(0u64) += 1;
        *occurrences[2].entry(rz[&c]).or_insert(0u64) += 1;
    }

    // (actual r^4 coefficient, dummy r^4 coefficient, radix power, residue)
    let coords = [(10u64, 11u64, r, 1i128), (10, 11, r2, 2), (10, 8, r3, 4)];
    let mut weights = Vec::new();
    let mut orphans = Vec::new();
    let mut alpha = BigInt::one();
    for (axis, &(act, dum, radix, residue)) in coords.iter().enumerate() {
        for idx in 1..=q {
            let n = occurrences[axis].get(&idx).copied().unwrap_or(0);
            let actual = checked(&[(act, r4), (idx, radix)], residue)?;
            if n == 0 {
                orphans.push(actual);
                weights.push(actual);
                continue;
            }
            weights.push(actual);
            let dummy = checked(&[(dum, r4), (idx, radix)], residue)?;
            weights.extend(std::iter::repeat_n(dummy, (n - 1) as usize));
            alpha *= factorial(n - 1);
        }
    }
    for &(a, b, c) in &inst.triples {
        let u = 10 * r4 as i128 - (rz[&c] * r3) as i128 - (ry[&b] * r2) as i128 - (rx[&a] * r) as i128 + 8;
        weights.push(u64::try_from(u).map_err(|_| Error::Overflow("3DM weight encoding"))?);
    }
    if let Some(&pad) = orphans.first() {
        while weights.len() % 4 != 0 {
            weights.push(pad);
        }
    }
    let bound = checked(&[(40, r4)], 15)?;
    Ok((FourPartitionInstance::new(weights, bound)?, alpha))
}

/// Number of perfect matchings, by depth-first search over the triples that
/// cover the lowest uncovered `x`.
pub fn count_3dm_brute(inst: &ThreeDMInstance, budget: usize) -> Result<BigInt> {
    inst.validate()?;
    if inst.q() > budget {
        return Err(Error::BudgetExceeded { what: "3DM matching count", limit: budget, needed: inst.q() });
    }
    let [rx, ry, rz] = inst.ranks();
    let q = inst.q();
    let mut by_x: Vec<Vec<(usize, usize)>> = vec![Vec::new(); q];
    for &(a, b, c) in &inst.triples {
        by_x[rx[&a] as usize - 1].push((ry[&b] as usize - 1, rz[&c] as usize - 1));
    }
    fn go(i: usize, by_x: &[Vec<(usize, usize)>], used_y: u64, used_z: u64) -> u64 {
        if i == by_x.len() {
            return 1;
        }
        by_x[i]
            .iter()
            .filter(|&&(y, z)| used_y >> y & 1 == 0 && used_z >> z & 1 == 0)
            .map(|&(y, z)| go(i + 1, by_x, used_y | 1 << y, used_z | 1 << z))
            .sum()
    }
    if q > 63 {
        return Err(Error::BudgetExceeded { what: "3DM matching count", limit: 63, needed: q });
    }
    Ok(BigInt::from(go(0, &by_x, 0, 0)))
}

/// Number of partitions of the (labelled) elements into unordered 4-groups
/// each summing to `B`.
///
/// Elements of equal weight are interchangeable, so the search runs over
/// multiplicity vectors: the lowest remaining element picks the weight classes
/// of its three partners and the labelled choices contribute binomials.
pub fn count_4part_brute(inst: &FourPartitionInstance, budget: usize) -> Result<BigInt> {
    if inst.k() > budget {
        return Err(Error::BudgetExceeded { what: "4-partition count", limit: budget, needed: inst.k() });
    }
    if !inst.is_balanced() {
        return Ok(BigInt::zero());
    }
    let mut classes: BTreeMap<u64, u32> = BTreeMap::new();
    for &w in &inst.weights {
        *classes.entry(w).or_insert(0) += 1;
    }
    let weights: Vec<u64> = classes.keys().copied().collect();
    let counts: Vec<u32> = classes.values().copied().collect();
    let ctx = PartCtx { weights, bound: inst.bound };
    let first = match counts.iter().position(|&c| c > 0) {
        Some(f) => f,
        None => return Ok(BigInt::one()),
    };
    let branches = ctx.partner_choices(first, &counts);
    let total = branches
        .into_par_iter()
        .map(|(next, ways)| {
            let mut memo = HashMap::new();
            ways * ctx.count(next, &mut memo)
        })
        .reduce(BigInt::zero, |a, b| a + b);
    Ok(total)
}

struct PartCtx {
    weights: Vec<u64>,
    bound: u64,
}

fn binom(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

impl PartCtx {
    /// Removes one element of class `first` and lists every way to pick its
    /// three partners: (remaining multiplicities, labelled choices).
    fn partner_choices(&self, first: usize, counts: &[u32]) -> Vec<(Vec<u32>, BigInt)> {
        let mut rest = counts.to_vec();
        rest[first] -= 1;
        let need = match self.bound.checked_sub(self.weights[first]) {
            Some(n) => n,
            None => return Vec::new(),
        };
        let m = self.weights.len();
        let mut out = Vec::new();
        for a in first..m {
            for b in a..m {
                let wab = self.weights[a] + self.weights[b];
                if wab >= need {
                    break;
                }
                let Ok(c) = self.weights.binary_search(&(need - wab)) else { continue };
                if c < b {
                    continue;
                }
                let mut take: BTreeMap<usize, u32> = BTreeMap::new();
                for cls in [a, b, c] {
                    *take.entry(cls).or_insert(0) += 1;
                }
                if take.iter().any(|(&cls, &t)| rest[cls] < t) {
                    continue;
                }
                let mut ways = BigInt::one();
                let mut next = rest.clone();
                for (&cls, &t) in &take {
                    ways *= binom(rest[cls], t);
                    next[cls] -= t;
                }
                out.push((next, ways));
            }
        }
        out
    }

    fn count(&self, counts: Vec<u32>, memo: &mut HashMap<Vec<u32>, BigInt>) -> BigInt {
        let Some(first) = counts.iter().position(|&c| c > 0) else {
            return BigInt::one();
        };
        if let Some(v) = memo.get(&counts) {
            return v.clone();
        }
        let mut total = BigInt::zero();
        for (next, ways) in self.partner_choices(first, &counts) {
            total += ways * self.count(next, memo);
        }
        memo.insert(counts, total.clone());
        total
    }
}

/// The single strand `C^{w1} A C^{w2} A ... A C^{wk} AAA (G^B A)^{k/4-1} G^B`
/// with target `K = sum w - k`, the stacking count reached exactly when the
/// C-blocks split into groups that fill whole G-blocks. When the weights do
/// not total `B k / 4` no such split exists, and the target is raised to
/// `K + 1`, which no structure reaches.
pub fn gen_bps_from_4part(inst: &FourPartitionInstance) -> BPSInstance {
    let mut seq = String::new();
    for (i, &w) in inst.weights.iter().enumerate() {
        if i > 0 {
            seq.push('A');
        }
        seq.extend(std::iter::repeat_n('C', w as usize));
    }
    seq.push_str("AAA");
    let blocks = inst.k() / 4;
    for b in 0..blocks {
        if b > 0 {
            seq.push('A');
        }
        seq.extend(std::iter::repeat_n('G', inst.bound as usize));
    }
    let total: u64 = inst.weights.iter().sum();
    let mut k = total - inst.k() as u64;
    if !inst.is_balanced() {
        k += 1;
    }
    let bases = seq.chars().map(|c| Base::from_char(c).expect("generated alphabet")).collect();
    BPSInstance { strand: Strand::new(1, bases).expect("nonempty strand"), k }
}

/// `(k/4)! (4!)^{k/4}`.
pub fn bps_multiplier(k: usize) -> BigInt {
    let blocks = (k / 4) as u64;
    factorial(blocks) * num_traits::pow(BigInt::from(24), blocks as usize)
}

/// Number of structures (pseudoknots allowed) on a single strand with
/// exactly `target` stacked pairs.
///
/// Scans positions left to right; a free position stays unpaired or opens a
/// pair with a later free partner. States are memoized and cut off as soon
/// as the remaining stack potential cannot reach the target. `max_states`
/// caps the memo of each top-level branch.
pub fn count_bps_brute(strand: &Strand, target: u64, max_states: usize) -> Result<BigInt> {
    let n = strand.len();
    if n > 128 {
        return Err(Error::BudgetExceeded { what: "stacking count strand length", limit: 128, needed: n });
    }
    let Ok(target) = u32::try_from(target) else {
        return Ok(BigInt::zero());
    };
    let mut partners = vec![0u128; n];
    let (mut opens, mut closes) = (0u128, 0u128);
    for i in 0..n {
        for j in i + 1..n {
            if complementary(strand.seq[i], strand.seq[j]) {
                partners[i] |= 1 << j;
                opens |= 1 << i;
                closes |= 1 << j;
            }
        }
    }
    let ctx = BpsCtx { n, partners, opens, closes, max_states };
    if n == 0 {
        return Ok(BigInt::from(u8::from(target == 0)));
    }
    if target > ctx.bound(0, 0, None) {
        return Ok(BigInt::zero());
    }
    // top-level branches: leave position 0 unpaired, or pair it with each j
    let mut branches: Vec<Option<usize>> = vec![None];
    branches.extend((1..n).filter(|&j| ctx.partners[0] >> j & 1 == 1).map(Some));
    branches
        .into_par_iter()
        .map(|b| {
            let mut memo = HashMap::new();
            match b {
                None => ctx.count(1, 0, None, target, &mut memo),
                Some(j) => ctx.count(1, 1 << j, Some(j), target, &mut memo),
            }
        })
        .try_reduce(BigInt::zero, |a, b| Ok(a + b))
}

struct BpsCtx {
    n: usize,
    partners: Vec<u128>,
    /// positions with a complementary partner to the right / left
    opens: u128,
    closes: u128,
    max_states: usize,
}

type BpsKey = (u8, u128, u8, u32);

impl BpsCtx {
    fn above(cur: usize) -> u128 {
        if cur >= 128 {
            0
        } else {
            !0u128 << cur
        }
    }

    /// Stacks still obtainable from position `cur` on. Every future stack
    /// needs an inner left end `p` whose predecessor is still open, and
    /// an inner right end `q` whose successor is still open.
    fn bound(&self, cur: usize, taken: u128, prev: Option<usize>) -> u32 {
        let free = !taken & Self::above(cur);
        let open = self.opens & free;
        let mut left = (open & (open << 1)).count_ones();
        if prev.is_some() && open >> cur & 1 == 1 {
            left += 1;
        }
        let close = self.closes & free;
        let mut right = (close & (close >> 1) & Self::above(cur + 1)).count_ones();
        if let Some(j) = prev {
            if j >= 1 && j - 1 > cur && close >> (j - 1) & 1 == 1 {
                right += 1;
            }
        }
        left.min(right)
    }

    fn count(
        &self,
        cur: usize,
        taken: u128,
        prev: Option<usize>,
        need: u32,
        memo: &mut HashMap<BpsKey, BigInt>,
    ) -> Result<BigInt> {
        if cur == self.n {
            return Ok(BigInt::from(u8::from(need == 0)));
        }
        if need > self.bound(cur, taken, prev) {
            return Ok(BigInt::zero());
        }
        let taken = taken & Self::above(cur);
        let key = (cur as u8, taken, prev.map_or(u8::MAX, |p| p as u8), need);
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let result = if taken >> cur & 1 == 1 {
            self.count(cur + 1, taken, None, need, memo)?
        } else {
            let mut acc = self.count(cur + 1, taken, None, need, memo)?;
            let mut cands = self.partners[cur] & !taken;
            while cands != 0 {
                let j = cands.trailing_zeros() as usize;
                cands &= cands - 1;
                let gain = u32::from(prev == Some(j + 1));
                if gain > need {
                    continue;
                }
                acc += self.count(cur + 1, taken | 1 << j, Some(j), need - gain, memo)?;
            }
            acc
        };
        if memo.len() >= self.max_states {
            return Err(Error::BudgetExceeded { what: "stacking count states", limit: self.max_states, needed: memo.len() + 1 });
        }
        memo.insert(key, result.clone());
        Ok(result)
    }
}

/// Unpseudoknotted structures of `sys` with exactly `pairs` base pairs.
pub fn count_multi_pkf_brute(sys: &StrandSystem, pairs: usize, pair_budget: usize) -> Result<BigInt> {
    Ok(multi_pkf_histogram(sys, pair_budget)?.get(&pairs).cloned().unwrap_or_default())
}

/// Unpseudoknotted structure counts keyed by number of pairs.
pub fn multi_pkf_histogram(sys: &StrandSystem, pair_budget: usize) -> Result<BTreeMap<usize, BigInt>> {
    let en = Enumerator::new(sys, StructureSpace::UNPSEUDOKNOTTED, pair_budget)?;
    let mut hist: BTreeMap<usize, BigInt> = BTreeMap::new();
    en.for_each(|s| *hist.entry(s.len()).or_default() += 1);
    Ok(hist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Mismatch,
    /// A counter ran out of budget; nothing was verified.
    Skipped,
}

/// Outcome of checking `target_count = factor * source_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsimonyReport {
    pub check: &'static str,
    pub status: CheckStatus,
    pub source_count: Option<BigInt>,
    pub factor: BigInt,
    pub target_count: Option<BigInt>,
    pub note: Option<String>,
}

impl ParsimonyReport {
    fn build(check: &'static str, factor: BigInt, source: Result<BigInt>, target: Result<BigInt>) -> Result<Self> {
        let mut note = None;
        let mut unwrap = |r: Result<BigInt>| match r {
            Ok(v) => Ok(Some(v)),
            Err(e @ Error::BudgetExceeded { .. }) => {
                note = Some(e.to_string());
                Ok(None)
            }
            Err(e) => Err(e),
        };
        let source_count = unwrap(source)?;
        let target_count = unwrap(target)?;
        let status = match (&source_count, &target_count) {
            (Some(s), Some(t)) if *t == &factor * s => CheckStatus::Pass,
            (Some(_), Some(_)) => CheckStatus::Mismatch,
            _ => CheckStatus::Skipped,
        };
        Ok(Self { check, status, source_count, factor, target_count, note })
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    pub fn to_json(&self) -> String {
        let s = |v: &Option<BigInt>| v.as_ref().map(|x| x.to_string());
        json!({
            "check": self.check,
            "status": self.status,
            "source_count": s(&self.source_count),
            "factor": self.factor.to_string(),
            "target_count": s(&self.target_count),
            "note": self.note,
        })
        .to_string()
    }

    /// `target = source * factor`, with `?` for a skipped side.
    pub fn summary(&self) -> String {
        let s = |v: &Option<BigInt>| v.as_ref().map_or("?".to_string(), |x| x.to_string());
        format!(
            "{}: {} = {} * {} [{}]",
            self.check,
            s(&self.target_count),
            s(&self.source_count),
            self.factor,
            serde_json::to_value(self.status).expect("status").as_str().unwrap_or_default()
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HardnessBudget {
    pub part_elements: usize,
    pub bps_states: usize,
    pub dm_elements: usize,
}

impl Default for HardnessBudget {
    fn default() -> Self {
        Self { part_elements: DEFAULT_PART_BUDGET, bps_states: DEFAULT_BPS_STATES, dm_elements: DEFAULT_3DM_BUDGET }
    }
}

/// Structures at the target stacking count versus 4-partitions.
pub fn verify_parsimony_bps(inst: &FourPartitionInstance, budget: HardnessBudget) -> Result<ParsimonyReport> {
    let bps = gen_bps_from_4part(inst);
    ParsimonyReport::build(
        "bps-from-4part",
        bps_multiplier(inst.k()),
        count_4part_brute(inst, budget.part_elements),
        count_bps_brute(&bps.strand, bps.k, budget.bps_states),
    )
}

/// 4-partitions of the encoded instance versus perfect matchings.
pub fn verify_parsimony_4part(inst: &ThreeDMInstance, budget: HardnessBudget) -> Result<ParsimonyReport> {
    let (part, alpha) = gen_4part_from_3dm(inst)?;
    ParsimonyReport::build(
        "4part-from-3dm",
        alpha,
        count_3dm_brute(inst, budget.dm_elements),
        count_4part_brute(&part, budget.part_elements),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::dos_brute;
    use crate::energy::{Energy, EnergyModel};
    use crate::structure::DEFAULT_PAIR_BUDGET;

    fn strand(s: &str) -> Strand {
        StrandSystem::single(s).unwrap().strand(1).clone()
    }

    #[test]
    fn three_dm_counts() {
        let one = ThreeDMInstance::uniform(1, vec![(1, 1, 1)]).unwrap();
        assert_eq!(count_3dm_brute(&one, 8).unwrap(), BigInt::from(1));
        let mut all = Vec::new();
        for a in 1..=2 {
            for b in 1..=2 {
                for c in 1..=2 {
                    all.push((a, b, c));
                }
            }
        }
        let full = ThreeDMInstance::uniform(2, all).unwrap();
        assert_eq!(count_3dm_brute(&full, 8).unwrap(), BigInt::from(4));
        let none = ThreeDMInstance::uniform(1, vec![]).unwrap();
        assert_eq!(count_3dm_brute(&none, 8).unwrap(), BigInt::from(0));
        assert!(ThreeDMInstance::uniform(1, vec![(1, 1, 1), (1, 1, 1)]).is_err());
        assert!(ThreeDMInstance::uniform(1, vec![(1, 2, 1)]).is_err());
        assert!(ThreeDMInstance::new(vec![1], vec![1, 2], vec![1], vec![]).is_err());
    }

    #[test]
    fn four_partition_counts() {
        let p = FourPartitionInstance::new(vec![2, 2, 2, 2], 8).unwrap();
        assert_eq!(count_4part_brute(&p, 24).unwrap(), BigInt::from(1));
        let p = FourPartitionInstance::new(vec![5; 8], 20).unwrap();
        assert_eq!(count_4part_brute(&p, 24).unwrap(), BigInt::from(35));
        assert!(FourPartitionInstance::new(vec![2, 2, 2, 3], 9).is_err());
        assert!(FourPartitionInstance::new(vec![5, 5, 5], 20).is_err());
        let unbalanced = FourPartitionInstance::new(vec![5, 5, 5, 6], 20).unwrap();
        assert_eq!(count_4part_brute(&unbalanced, 24).unwrap(), BigInt::from(0));
        assert!(count_4part_brute(&FourPartitionInstance::new(vec![5; 12], 20).unwrap(), 8).is_err());
    }

    #[test]
    fn encoding_small() {
        let one = ThreeDMInstance::uniform(1, vec![(1, 1, 1)]).unwrap();
        let (p, alpha) = gen_4part_from_3dm(&one).unwrap();
        assert_eq!(p.k(), 4);
        assert_eq!(alpha, BigInt::from(1));
        assert_eq!(count_4part_brute(&p, 24).unwrap(), BigInt::from(1));

        let two = ThreeDMInstance::uniform(1, vec![]).unwrap();
        let (p, alpha) = gen_4part_from_3dm(&two).unwrap();
        assert_eq!(p.k(), 4);
        assert_eq!(alpha, BigInt::from(1));
        assert_eq!(count_4part_brute(&p, 24).unwrap(), BigInt::from(0));
    }

    #[test]
    fn encoding_alpha_factor() {
        // x1 in three triples contributes 2!
        let inst = ThreeDMInstance::uniform(3, vec![(1, 1, 1), (1, 2, 2), (1, 3, 3), (2, 2, 3), (3, 3, 2)]).unwrap();
        let (_, alpha) = gen_4part_from_3dm(&inst).unwrap();
        // N: x1=3, x2=1, x3=1, y1=1, y2=2, y3=2, z1=1, z2=2, z3=2
        assert_eq!(alpha, BigInt::from(2));
        let r = verify_parsimony_4part(&inst, HardnessBudget::default()).unwrap();
        assert!(r.passed(), "{}", r.summary());
    }

    #[test]
    fn full_cube_parsimony() {
        let mut all = Vec::new();
        for a in 1..=2 {
            for b in 1..=2 {
                for c in 1..=2 {
                    all.push((a, b, c));
                }
            }
        }
        let inst = ThreeDMInstance::uniform(2, all).unwrap();
        let r = verify_parsimony_4part(&inst, HardnessBudget::default()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.factor, BigInt::from(6).pow(6));
        assert_eq!(r.source_count, Some(BigInt::from(4)));
    }

    #[test]
    fn strand_grammar() {
        let p = FourPartitionInstance::new(vec![2, 2, 2, 2], 8).unwrap();
        let b = gen_bps_from_4part(&p);
        assert_eq!(b.sequence(), "CCACCACCACCAAAGGGGGGGG");
        assert_eq!(b.k, 4);
        let p = FourPartitionInstance::new(vec![5; 4], 20).unwrap();
        let b = gen_bps_from_4part(&p);
        assert_eq!(b.sequence(), format!("CCCCCACCCCCACCCCCACCCCCAAA{}", "G".repeat(20)));
        assert_eq!(b.k, 16);
        let p = FourPartitionInstance::new(vec![5; 8], 20).unwrap();
        let s = gen_bps_from_4part(&p).sequence();
        assert!(s.ends_with(&format!("AAA{g}A{g}", g = "G".repeat(20))));
    }

    #[test]
    fn stacking_counter_small() {
        assert_eq!(count_bps_brute(&strand("GGCC"), 1, 1000).unwrap(), BigInt::from(1));
        assert_eq!(count_bps_brute(&strand("GGCC"), 0, 1000).unwrap(), BigInt::from(6));
        assert_eq!(count_bps_brute(&strand("AAAA"), 0, 1000).unwrap(), BigInt::from(1));
        assert_eq!(count_bps_brute(&strand("AAAA"), 1, 1000).unwrap(), BigInt::from(0));
    }

    #[test]
    fn stacking_counter_matches_enumeration() {
        for seq in ["GGGCCC", "GCGCAT", "CCACCAGGGG", "ATATGC", "GGAUCC"] {
            let sys = StrandSystem::single(seq).unwrap();
            let dos = dos_brute(&sys, StructureSpace::UNRESTRICTED, &EnergyModel::bps(), DEFAULT_PAIR_BUDGET).unwrap();
            for k in 0..4 {
                let expect = dos.count(Energy(-(k as i64)));
                assert_eq!(count_bps_brute(sys.strand(1), k, 100_000).unwrap(), expect, "{seq} K={k}");
            }
        }
    }

    #[test]
    fn parsimony_bps_examples() {
        let r = verify_parsimony_bps(&FourPartitionInstance::new(vec![2, 2, 2, 2], 8).unwrap(), HardnessBudget::default())
            .unwrap();
        assert!(r.passed());
        assert_eq!(r.target_count, Some(BigInt::from(24)));
        let r = verify_parsimony_bps(&FourPartitionInstance::new(vec![5; 4], 20).unwrap(), HardnessBudget::default())
            .unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.target_count, Some(BigInt::from(24)));
        let zero = FourPartitionInstance::new(vec![5, 5, 5, 6], 20).unwrap();
        let r = verify_parsimony_bps(&zero, HardnessBudget::default()).unwrap();
        assert!(r.passed());
        assert_eq!(r.target_count, Some(BigInt::from(0)));
    }

    #[test]
    fn parsimony_bps_two_blocks() {
        let p = FourPartitionInstance::new(vec![5; 8], 20).unwrap();
        let r = verify_parsimony_bps(&p, HardnessBudget::default()).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert_eq!(r.target_count, Some(BigInt::from(40320)));
    }

    #[test]
    fn skipped_on_budget() {
        let p = FourPartitionInstance::new(vec![5; 8], 20).unwrap();
        let tight = HardnessBudget { bps_states: 10, ..HardnessBudget::default() };
        let r = verify_parsimony_bps(&p, tight).unwrap();
        assert_eq!(r.status, CheckStatus::Skipped);
        assert!(r.target_count.is_none());
        assert!(r.to_json().contains("\"status\":\"skipped\""));
    }

    #[test]
    fn pkf_counts() {
        let sys = StrandSystem::single("ACGT").unwrap();
        assert_eq!(count_multi_pkf_brute(&sys, 2, 64).unwrap(), BigInt::from(1));
        assert_eq!(count_multi_pkf_brute(&sys, 0, 64).unwrap(), BigInt::from(1));
        let two = StrandSystem::from_sequences(&["AC", "GT"]).unwrap();
        let hist = multi_pkf_histogram(&two, 64).unwrap();
        let total: BigInt = hist.values().sum();
        assert_eq!(total, crate::structure::count_structures(&two, StructureSpace::UNPSEUDOKNOTTED, 64).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let p = FourPartitionInstance::new(vec![2, 2, 2, 2], 8).unwrap();
        assert_eq!(p.to_json(), r#"{"weights":[2,2,2,2],"B":8}"#);
        assert_eq!(FourPartitionInstance::from_json(&p.to_json()).unwrap(), p);
        assert!(FourPartitionInstance::from_json(r#"{"weights":[2,2,2,3],"B":9}"#).is_err());
        let t = ThreeDMInstance::uniform(1, vec![(1, 1, 1)]).unwrap();
        assert_eq!(t.to_json(), r#"{"X":[1],"Y":[1],"Z":[1],"T":[[1,1,1]]}"#);
        assert_eq!(ThreeDMInstance::from_json(&t.to_json()).unwrap(), t);
        assert_eq!(
            gen_bps_from_4part(&p).to_json(),
            r#"{"K":4,"strand":"CCACCACCACCAAAGGGGGGGG"}"#
        );
    }
}
