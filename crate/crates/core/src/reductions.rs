//! Polynomial-time reductions between the five problems, each run against
//! an arbitrary [`ThermoOracle`] and logged call by call.

use std::cell::RefCell;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::energy::Energy;
use crate::error::{Error, Result};
use crate::exact::{factorial, solve_vandermonde};
use crate::levels::LevelSet;
use crate::oracle::{DensityOfStates, ThermoOracle, Weighting};
use crate::scalar::Scalar;

/// One oracle query.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Call {
    pub problem: &'static str,
    pub input: String,
    pub output: String,
}

/// Audit log of a reduction run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionTranscript {
    pub reduction: &'static str,
    pub budget: u64,
    pub call_count: u64,
    pub calls: Vec<Call>,
    pub answer: String,
}

impl ReductionTranscript {
    pub fn within_budget(&self) -> bool {
        self.call_count <= self.budget
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transcript serializes")
    }
}

#[derive(Debug, Clone)]
pub struct Outcome<A> {
    pub answer: A,
    pub transcript: ReductionTranscript,
}

/// Forwards every query to `inner` and records it.
pub struct Recorder<'a, O: ThermoOracle> {
    inner: &'a O,
    calls: RefCell<Vec<Call>>,
}

impl<'a, O: ThermoOracle> Recorder<'a, O> {
    pub fn new(inner: &'a O) -> Self {
        Self { inner, calls: RefCell::new(Vec::new()) }
    }

    fn log(&self, problem: &'static str, input: String, output: String) {
        self.calls.borrow_mut().push(Call { problem, input, output });
    }

    pub fn call_count(&self) -> u64 {
        self.calls.borrow().len() as u64
    }

    fn finish<A>(self, reduction: &'static str, budget: u64, answer: A, render: impl Fn(&A) -> String) -> Result<Outcome<A>> {
        let calls = self.calls.into_inner();
        let transcript = ReductionTranscript {
            reduction,
            budget,
            call_count: calls.len() as u64,
            calls,
            answer: render(&answer),
        };
        if !transcript.within_budget() {
            return Err(Error::BudgetExceeded {
                what: reduction,
                limit: budget as usize,
                needed: transcript.call_count as usize,
            });
        }
        Ok(Outcome { answer, transcript })
    }
}

fn render_weighting<T: Scalar>(w: &Weighting<T>) -> String {
    match w {
        Weighting::Scaled(j) => format!("j={j}"),
        Weighting::PerQuantum(b) => format!("B={}", b.render()),
    }
}

impl<O: ThermoOracle> ThermoOracle for Recorder<'_, O> {
    type Value = O::Value;

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn delta(&self) -> BigRational {
        self.inner.delta()
    }

    fn base(&self) -> &O::Value {
        self.inner.base()
    }

    fn mfe(&self, j: u64) -> Result<Energy> {
        let r = self.inner.mfe(j)?;
        self.log("mfe", format!("j={j}"), r.to_string());
        Ok(r)
    }

    fn dmfe(&self, j: u64, k: Energy) -> Result<bool> {
        let r = self.inner.dmfe(j, k)?;
        self.log("dmfe", format!("j={j} k={k}"), r.to_string());
        Ok(r)
    }

    fn ssel(&self, j: u64, k: Energy) -> Result<BigInt> {
        let r = self.inner.ssel(j, k)?;
        self.log("ssel", format!("j={j} k={k}"), r.to_string());
        Ok(r)
    }

    fn pf(&self, w: &Weighting<O::Value>) -> Result<O::Value> {
        let r = self.inner.pf(w)?;
        self.log("pf", render_weighting(w), r.render());
        Ok(r)
    }

    fn dpf(&self, w: &Weighting<O::Value>, k: &O::Value) -> Result<bool> {
        let r = self.inner.dpf(w, k)?;
        self.log("dpf", format!("{} k={}", render_weighting(w), k.render()), r.to_string());
        Ok(r)
    }
}

/// `ceil(log2 x)` for `x >= 1`.
pub fn ceil_log2(x: &BigInt) -> u64 {
    if *x <= BigInt::one() {
        0
    } else {
        (x - 1u8).bits()
    }
}

/// Per-quantum base for the huge magnification: `max(n!, 3)`, which is
/// strictly larger than the number of structures of any `n`-base system.
pub fn separation_base(n: usize) -> BigInt {
    factorial(n as u64).max(BigInt::from(3))
}

fn levels_of(levels: &LevelSet) -> Result<Vec<Energy>> {
    let v = levels.ascending();
    if v.is_empty() {
        return Err(Error::InvalidArgument("empty candidate level set".into()));
    }
    Ok(v)
}

/// Whether the MFE is at most `k` (quanta, may be fractional): one mfe call.
pub fn dmfe_via_mfe<O: ThermoOracle>(oracle: &O, k: &BigRational) -> Result<Outcome<bool>> {
    let rec = Recorder::new(oracle);
    let mfe = rec.mfe(1)?;
    let answer = BigRational::from_integer(mfe.0.into()) <= *k;
    rec.finish("dmfe-via-mfe", 1, answer, bool::to_string)
}

/// Whether the PF is at least `k`: one pf call.
pub fn dpf_via_pf<O: ThermoOracle>(oracle: &O, k: &O::Value) -> Result<Outcome<bool>> {
    let rec = Recorder::new(oracle);
    let answer = rec.pf(&Weighting::Scaled(1))? >= *k;
    rec.finish("dpf-via-pf", 1, answer, bool::to_string)
}

/// Binary search for the lowest candidate level `g` with `MFE <= g`.
pub fn mfe_via_dmfe<O: ThermoOracle>(oracle: &O, levels: &LevelSet) -> Result<Outcome<Energy>> {
    let v = levels_of(levels)?;
    let budget = ceil_log2(&BigInt::from(v.len())) + 1;
    let rec = Recorder::new(oracle);
    let mut answers: Vec<(usize, bool)> = Vec::new();
    let (mut lo, mut hi) = (0, v.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let a = rec.dmfe(1, v[mid])?;
        answers.push((mid, a));
        if a {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if !answers.iter().any(|&(i, a)| i == lo && a) {
        let a = rec.dmfe(1, v[lo])?;
        answers.push((lo, a));
        if !a {
            return Err(Error::OracleInconsistent(format!(
                "MFE above every candidate level (highest {})",
                v[lo]
            )));
        }
    }
    check_monotone(&answers)?;
    rec.finish("mfe-via-dmfe", budget, v[lo], Energy::to_string)
}

fn check_monotone(answers: &[(usize, bool)]) -> Result<()> {
    for &(i, a) in answers {
        for &(j, b) in answers {
            if i < j && a && !b {
                return Err(Error::OracleInconsistent(format!(
                    "dmfe true at level index {i} but false at {j}"
                )));
            }
        }
    }
    Ok(())
}

/// Linear scan from the most favorable level for a nonzero count.
pub fn mfe_via_ssel<O: ThermoOracle>(oracle: &O, levels: &LevelSet) -> Result<Outcome<Energy>> {
    let v = levels_of(levels)?;
    let rec = Recorder::new(oracle);
    for &g in &v {
        if !rec.ssel(1, g)?.is_zero() {
            return rec.finish("mfe-via-ssel", v.len() as u64, g, Energy::to_string);
        }
    }
    Err(Error::OracleInconsistent("every candidate level is empty".into()))
}

/// `sum_g ssel(g) * b^(-g)` over the candidate levels.
pub fn pf_via_ssel<O: ThermoOracle>(oracle: &O, levels: &LevelSet) -> Result<Outcome<O::Value>> {
    let v = levels_of(levels)?;
    let rec = Recorder::new(oracle);
    let mut acc = O::Value::zero();
    for &g in &v {
        let c = rec.ssel(1, g)?;
        acc = acc + O::Value::from_bigint(&c) * rec.base().int_pow(-g.0)?;
    }
    rec.finish("pf-via-ssel", v.len() as u64, acc, Scalar::render)
}

fn integral_count<T: Scalar>(x: &T, g: Energy) -> Result<BigInt> {
    match x.to_integer() {
        Some(c) if !c.is_negative() => Ok(c),
        _ => Err(Error::OracleInconsistent(format!(
            "level {g} reconstructed as {}, not a count",
            x.render()
        ))),
    }
}

/// Recovers the whole density of states from `N` magnified PF values by
/// solving a Vandermonde system with nodes `b^(-g_i)`.
pub fn dos_via_pf<O: ThermoOracle>(oracle: &O, levels: &LevelSet) -> Result<Outcome<DensityOfStates>> {
    let v = levels_of(levels)?;
    let rec = Recorder::new(oracle);
    let base = rec.base().clone();
    let nodes = v.iter().map(|g| base.int_pow(-g.0)).collect::<Result<Vec<_>>>()?;
    let rhs = (1..=v.len() as u64)
        .map(|j| rec.pf(&Weighting::Scaled(j)))
        .collect::<Result<Vec<_>>>()?;
    let x = solve_vandermonde(nodes, rhs)?;
    let mut dos = DensityOfStates::new(rec.delta());
    for (g, c) in v.iter().zip(&x) {
        dos.add(*g, integral_count(c, *g)?);
    }
    rec.finish("dos-via-pf", v.len() as u64, dos, DensityOfStates::to_json)
}

/// Number of structures at level `k` via [`dos_via_pf`]; zero for levels
/// outside the candidate set.
pub fn ssel_via_pf<O: ThermoOracle>(oracle: &O, levels: &LevelSet, k: Energy) -> Result<Outcome<BigInt>> {
    let Outcome { answer: dos, mut transcript } = dos_via_pf(oracle, levels)?;
    transcript.reduction = "ssel-via-pf";
    let answer = dos.count(k);
    transcript.answer = answer.to_string();
    Ok(Outcome { answer, transcript })
}

/// Decides `MFE <= k` with one PF threshold query at per-quantum base
/// `B = max(n!, 3)`: with `x` the highest candidate level not above `k`,
/// `PF_B >= B^(-x)` exactly when some structure sits at or below `x`.
pub fn dmfe_via_dpf<O: ThermoOracle>(oracle: &O, levels: &LevelSet, k: &BigRational) -> Result<Outcome<bool>> {
    let v = levels_of(levels)?;
    let rec = Recorder::new(oracle);
    let x = v.iter().rev().find(|g| BigRational::from_integer(g.0.into()) <= *k).copied();
    let Some(x) = x else {
        return rec.finish("dmfe-via-dpf", 1, false, bool::to_string);
    };
    let b = O::Value::from_bigint(&separation_base(rec.n()));
    let threshold = b.int_pow(-x.0)?;
    let answer = rec.dpf(&Weighting::PerQuantum(b), &threshold)?;
    rec.finish("dmfe-via-dpf", 1, answer, bool::to_string)
}

/// Reads the level counts off `PF_B` as base-`B` digits, most favorable
/// level first, each by binary search on dPF thresholds.
pub fn dos_via_dpf<O: ThermoOracle>(oracle: &O, levels: &LevelSet) -> Result<Outcome<DensityOfStates>> {
    let v = levels_of(levels)?;
    let rec = Recorder::new(oracle);
    let big_b = separation_base(rec.n());
    let budget = v.len() as u64 * ceil_log2(&big_b);
    let b = O::Value::from_bigint(&big_b);
    let w = Weighting::PerQuantum(b.clone());
    let mut prefix = O::Value::zero();
    let mut total = BigInt::zero();
    let mut dos = DensityOfStates::new(rec.delta());
    for &g in &v {
        let unit = b.int_pow(-g.0)?;
        let (mut lo, mut hi) = (BigInt::zero(), &big_b - 1u8);
        while lo < hi {
            let mid: BigInt = (&lo + &hi + 1u8) / 2u8;
            let probe = prefix.clone() + O::Value::from_bigint(&mid) * unit.clone();
            if rec.dpf(&w, &probe)? {
                lo = mid;
            } else {
                hi = mid - 1u8;
            }
        }
        prefix = prefix + O::Value::from_bigint(&lo) * unit;
        total += &lo;
        dos.add(g, lo);
    }
    if total >= big_b {
        return Err(Error::OracleInconsistent(format!("recovered {total} structures, base is {big_b}")));
    }
    rec.finish("dos-via-dpf", budget, dos, DensityOfStates::to_json)
}

/// The PF at the oracle's own base, from [`dos_via_dpf`].
pub fn pf_via_dpf<O: ThermoOracle>(oracle: &O, levels: &LevelSet) -> Result<Outcome<O::Value>> {
    let Outcome { answer: dos, mut transcript } = dos_via_dpf(oracle, levels)?;
    let pf = dos.pf(oracle.base())?;
    transcript.reduction = "pf-via-dpf";
    transcript.answer = pf.render();
    Ok(Outcome { answer: pf, transcript })
}

/// An oracle whose PF answers are themselves computed from per-level ssel
/// queries against `inner`; all other problems pass through.
pub struct PfFromSsel<'a, O: ThermoOracle> {
    pub inner: &'a O,
    pub levels: LevelSet,
}

impl<O: ThermoOracle> ThermoOracle for PfFromSsel<'_, O> {
    type Value = O::Value;

    fn n(&self) -> usize {
        self.inner.n()
    }

    fn delta(&self) -> BigRational {
        self.inner.delta()
    }

    fn base(&self) -> &O::Value {
        self.inner.base()
    }

    fn mfe(&self, j: u64) -> Result<Energy> {
        self.inner.mfe(j)
    }

    fn dmfe(&self, j: u64, k: Energy) -> Result<bool> {
        self.inner.dmfe(j, k)
    }

    fn ssel(&self, j: u64, k: Energy) -> Result<BigInt> {
        self.inner.ssel(j, k)
    }

    fn pf(&self, w: &Weighting<O::Value>) -> Result<O::Value> {
        let b = match w {
            Weighting::Scaled(j) => {
                let j = j.to_i64().ok_or(Error::Overflow("magnification"))?;
                self.inner.base().int_pow(j)?
            }
            Weighting::PerQuantum(b) => b.clone(),
        };
        let mut acc = O::Value::zero();
        for g in &self.levels.levels {
            let c = self.inner.ssel(1, *g)?;
            acc = acc + O::Value::from_bigint(&c) * b.int_pow(-g.0)?;
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::EnergyModel;
    use crate::levels::{levels_bpm, levels_bps};
    use crate::oracle::{make_oracle, BruteOracle};
    use crate::strand::StrandSystem;
    use crate::structure::StructureSpace;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn oracle(seq: &str, model: EnergyModel, space: StructureSpace, b: i64) -> BruteOracle<BigRational> {
        make_oracle(&StrandSystem::single(seq).unwrap(), space, &model, q(b), 64).unwrap()
    }

    fn acgt(b: i64) -> BruteOracle<BigRational> {
        oracle("ACGT", EnergyModel::bpm(), StructureSpace::UNPSEUDOKNOTTED, b)
    }

    fn ggcc(b: i64) -> BruteOracle<BigRational> {
        oracle("GGCC", EnergyModel::bps(), StructureSpace::UNRESTRICTED, b)
    }

    #[test]
    fn straightforward_arrows() {
        let o = acgt(2);
        assert!(dmfe_via_mfe(&o, &q(-2)).unwrap().answer);
        assert!(dmfe_via_mfe(&o, &q(1)).unwrap().answer);
        assert!(!dmfe_via_mfe(&o, &q(-3)).unwrap().answer);
        assert!(dpf_via_pf(&o, &q(9)).unwrap().answer);
        assert!(!dpf_via_pf(&o, &q(10)).unwrap().answer);
        assert!(dpf_via_pf(&o, &q(1)).unwrap().answer);
        assert_eq!(pf_via_ssel(&o, &levels_bpm(4)).unwrap().answer, q(9));
        assert_eq!(pf_via_ssel(&ggcc(3), &levels_bps(4)).unwrap().answer, q(9));
        let aaaa = oracle("AAAA", EnergyModel::bpm(), StructureSpace::UNPSEUDOKNOTTED, 2);
        assert_eq!(pf_via_ssel(&aaaa, &levels_bpm(4)).unwrap().answer, q(1));
    }

    #[test]
    fn mfe_searches() {
        let lv = levels_bpm(4);
        let out = mfe_via_dmfe(&acgt(2), &lv).unwrap();
        assert_eq!(out.answer, Energy(-2));
        assert!(out.transcript.call_count <= 2);
        assert_eq!(mfe_via_ssel(&acgt(2), &lv).unwrap().answer, Energy(-2));
        let aaaa = oracle("AAAA", EnergyModel::bpm(), StructureSpace::UNPSEUDOKNOTTED, 2);
        let zero = LevelSet::new(BigRational::one(), [Energy(0)]);
        assert_eq!(mfe_via_dmfe(&aaaa, &zero).unwrap().answer, Energy(0));
        assert_eq!(mfe_via_ssel(&aaaa, &zero).unwrap().answer, Energy(0));
        assert_eq!(mfe_via_dmfe(&ggcc(2), &levels_bps(4)).unwrap().answer, Energy(-1));
        assert_eq!(mfe_via_ssel(&ggcc(2), &levels_bps(4)).unwrap().answer, Energy(-1));
        // a level set missing the MFE level is caught
        let bad = LevelSet::new(BigRational::one(), [Energy(-5), Energy(-4)]);
        assert!(matches!(mfe_via_dmfe(&acgt(2), &bad), Err(Error::OracleInconsistent(_))));
    }

    #[test]
    fn vandermonde_reconstruction() {
        let out = ssel_via_pf(&acgt(2), &levels_bpm(4), Energy(-1)).unwrap();
        assert_eq!(out.answer, BigInt::from(2));
        let rhs: Vec<&str> = out.transcript.calls.iter().map(|c| c.output.as_str()).collect();
        assert_eq!(rhs, vec!["9/1", "25/1", "81/1"]);
        let wide = LevelSet::new(BigRational::one(), (-4..=0).map(Energy));
        assert_eq!(ssel_via_pf(&acgt(2), &wide, Energy(-3)).unwrap().answer, BigInt::zero());
        assert_eq!(ssel_via_pf(&ggcc(2), &levels_bps(4), Energy(0)).unwrap().answer, BigInt::from(6));
    }

    #[test]
    fn huge_magnification() {
        let lv = levels_bpm(4);
        let o = acgt(2);
        let out = dmfe_via_dpf(&o, &lv, &q(-1)).unwrap();
        assert!(out.answer);
        assert_eq!(out.transcript.calls[0].input, "B=24/1 k=24/1");
        assert_eq!(out.transcript.calls[0].output, "true");
        assert!(dmfe_via_dpf(&o, &lv, &q(-2)).unwrap().answer);
        let out = dmfe_via_dpf(&o, &lv, &BigRational::new((-5).into(), 2.into())).unwrap();
        assert!(!out.answer);
        assert_eq!(out.transcript.call_count, 0);
    }

    #[test]
    fn digit_extraction() {
        let out = pf_via_dpf(&acgt(2), &levels_bpm(4)).unwrap();
        assert_eq!(out.answer, q(9));
        assert!(out.transcript.within_budget());
        let aaaa = oracle("AAAA", EnergyModel::bpm(), StructureSpace::UNPSEUDOKNOTTED, 2);
        assert_eq!(pf_via_dpf(&aaaa, &LevelSet::new(BigRational::one(), [Energy(0)])).unwrap().answer, q(1));
        let dos = dos_via_dpf(&ggcc(3), &levels_bps(4)).unwrap().answer;
        assert_eq!(dos.count(Energy(0)), BigInt::from(6));
        assert_eq!(dos.count(Energy(-1)), BigInt::from(1));
        assert_eq!(pf_via_dpf(&ggcc(3), &levels_bps(4)).unwrap().answer, q(9));
    }

    #[test]
    fn composition_is_identity() {
        let o = ggcc(2);
        let lv = levels_bps(4);
        let composed = PfFromSsel { inner: &o, levels: lv.clone() };
        let dos = dos_via_pf(&composed, &lv).unwrap().answer;
        assert_eq!(dos, o.dos);
    }

    #[test]
    fn log2_helper() {
        assert_eq!(ceil_log2(&BigInt::from(1)), 0);
        assert_eq!(ceil_log2(&BigInt::from(2)), 1);
        assert_eq!(ceil_log2(&BigInt::from(3)), 2);
        assert_eq!(ceil_log2(&BigInt::from(24)), 5);
        assert_eq!(ceil_log2(&BigInt::from(32)), 5);
    }
}
