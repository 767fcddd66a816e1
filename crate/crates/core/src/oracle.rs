//! Exhaustive reference oracles for the five thermodynamic problems.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize};

use crate::energy::{Energy, EnergyModel};
use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Scalar};
use crate::strand::StrandSystem;
use crate::structure::{Enumerator, StructureSpace};

/// Number of structures at each occupied energy level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityOfStates {
    pub delta: BigRational,
    pub counts: BTreeMap<Energy, BigInt>,
}

impl DensityOfStates {
    pub fn new(delta: BigRational) -> Self {
        Self { delta, counts: BTreeMap::new() }
    }

    pub fn add(&mut self, e: Energy, count: BigInt) {
        if count.is_zero() {
            return;
        }
        *self.counts.entry(e).or_insert_with(BigInt::zero) += count;
    }

    pub fn merge(mut self, other: DensityOfStates) -> DensityOfStates {
        for (e, c) in other.counts {
            self.add(e, c);
        }
        self
    }

    pub fn total(&self) -> BigInt {
        self.counts.values().sum()
    }

    /// Most favorable occupied level.
    pub fn mfe(&self) -> Option<Energy> {
        self.counts.keys().next().copied()
    }

    pub fn count(&self, e: Energy) -> BigInt {
        self.counts.get(&e).cloned().unwrap_or_default()
    }

    pub fn levels(&self) -> impl Iterator<Item = Energy> + '_ {
        self.counts.keys().copied()
    }

    /// Histogram of the `j`-magnified model: keys scale, counts stay.
    pub fn magnified(&self, j: i64) -> Result<DensityOfStates> {
        if j <= 0 {
            return Err(Error::InvalidArgument(format!("magnification must be positive, got {j}")));
        }
        let mut out = DensityOfStates::new(self.delta.clone());
        for (e, c) in &self.counts {
            out.add(e.checked_mul(j)?, c.clone());
        }
        Ok(out)
    }

    /// `sum_g counts(g) * base^(-g)`.
    pub fn pf<T: Scalar>(&self, base: &T) -> Result<T> {
        let mut acc = T::zero();
        for (e, c) in &self.counts {
            acc = acc + T::from_bigint(c) * base.int_pow(-e.0)?;
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("density of states serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse { line: e.line(), msg: e.to_string() })
    }
}

struct Counts<'a>(&'a BTreeMap<Energy, BigInt>);

impl Serialize for Counts<'_> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (e, c) in self.0 {
            map.serialize_entry(&e.0.to_string(), &c.to_string())?;
        }
        map.end()
    }
}

impl Serialize for DensityOfStates {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(2))?;
        map.serialize_entry("delta", &self.delta.render())?;
        map.serialize_entry("counts", &Counts(&self.counts))?;
        map.end()
    }
}

impl<'de> Deserialize<'de> for DensityOfStates {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Raw {
            delta: String,
            counts: BTreeMap<String, String>,
        }
        let raw = Raw::deserialize(d)?;
        let delta = parse_rational(&raw.delta).map_err(D::Error::custom)?;
        let mut dos = DensityOfStates::new(delta);
        for (k, v) in raw.counts {
            let e: i64 = k.parse().map_err(D::Error::custom)?;
            let c: BigInt = v.parse().map_err(D::Error::custom)?;
            dos.add(Energy(e), c);
        }
        Ok(dos)
    }
}

/// Exact energy histogram over every structure of `space`.
///
/// The enumeration is split by smallest pair and the partial histograms are
/// merged, so the result does not depend on the thread count.
pub fn dos_brute(
    sys: &StrandSystem,
    space: StructureSpace,
    model: &EnergyModel,
    pair_budget: usize,
) -> Result<DensityOfStates> {
    let en = Enumerator::new(sys, space, pair_budget)?;
    let delta = model.delta();
    (0..en.partition_count())
        .into_par_iter()
        .map(|part| {
            let mut local: BTreeMap<Energy, u64> = BTreeMap::new();
            let mut err = None;
            en.for_each_in_partition(part, &mut |s| {
                if err.is_some() {
                    return;
                }
                match model.energy(sys, s) {
                    Ok(e) => *local.entry(e).or_default() += 1,
                    Err(e) => err = Some(e),
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            let mut dos = DensityOfStates::new(delta.clone());
            for (e, c) in local {
                dos.add(e, BigInt::from(c));
            }
            Ok(dos)
        })
        .try_reduce(|| DensityOfStates::new(delta.clone()), |a, b| Ok(a.merge(b)))
}

pub fn mfe_brute(sys: &StrandSystem, space: StructureSpace, model: &EnergyModel, budget: usize) -> Result<Energy> {
    Ok(dos_brute(sys, space, model, budget)?.mfe().unwrap_or(Energy::ZERO))
}

pub fn pf_exact<T: Scalar>(dos: &DensityOfStates, base: &T) -> Result<T> {
    dos.pf(base)
}

pub fn ssel_brute(
    sys: &StrandSystem,
    space: StructureSpace,
    model: &EnergyModel,
    k: Energy,
    budget: usize,
) -> Result<BigInt> {
    Ok(dos_brute(sys, space, model, budget)?.count(k))
}

pub fn dmfe_brute(
    sys: &StrandSystem,
    space: StructureSpace,
    model: &EnergyModel,
    k: Energy,
    budget: usize,
) -> Result<bool> {
    Ok(mfe_brute(sys, space, model, budget)? <= k)
}

pub fn dpf_brute<T: Scalar>(
    sys: &StrandSystem,
    space: StructureSpace,
    model: &EnergyModel,
    base: &T,
    k: &T,
    budget: usize,
) -> Result<bool> {
    Ok(dos_brute(sys, space, model, budget)?.pf(base)? >= *k)
}

/// How structure weights are formed for a partition-function query.
#[derive(Debug, Clone, PartialEq)]
pub enum Weighting<T> {
    /// The `j`-magnified model at the oracle's own base: weight
    /// `b^(-j g)`.
    Scaled(u64),
    /// An explicit per-quantum base `B`: weight `B^(-g)`. This is how a
    /// magnification by a non-integer factor is realized exactly.
    PerQuantum(T),
}

/// The five problems, answerable under any integer magnification.
pub trait ThermoOracle {
    type Value: Scalar;

    /// Total base count of the instance.
    fn n(&self) -> usize;

    fn delta(&self) -> BigRational;

    /// The oracle's Boltzmann base per quantum.
    fn base(&self) -> &Self::Value;

    fn mfe(&self, j: u64) -> Result<Energy>;

    fn dmfe(&self, j: u64, k: Energy) -> Result<bool>;

    fn ssel(&self, j: u64, k: Energy) -> Result<BigInt>;

    fn pf(&self, w: &Weighting<Self::Value>) -> Result<Self::Value>;

    fn dpf(&self, w: &Weighting<Self::Value>, k: &Self::Value) -> Result<bool> {
        Ok(self.pf(w)? >= *k)
    }
}

/// Oracle answering from a precomputed density of states.
#[derive(Debug, Clone)]
pub struct BruteOracle<T> {
    pub dos: DensityOfStates,
    pub base: T,
    pub n: usize,
}

impl<T: Scalar> BruteOracle<T> {
    pub fn from_dos(dos: DensityOfStates, base: T, n: usize) -> Result<Self> {
        if base <= T::zero() || base == T::one() {
            return Err(Error::InvalidArgument(format!(
                "Boltzmann base must be positive and not 1, got {}",
                base.render()
            )));
        }
        Ok(Self { dos, base, n })
    }
}

impl<T: Scalar> ThermoOracle for BruteOracle<T> {
    type Value = T;

    fn n(&self) -> usize {
        self.n
    }

    fn delta(&self) -> BigRational {
        self.dos.delta.clone()
    }

    fn base(&self) -> &T {
        &self.base
    }

    fn mfe(&self, j: u64) -> Result<Energy> {
        self.dos.mfe().unwrap_or(Energy::ZERO).checked_mul(j as i64)
    }

    fn dmfe(&self, j: u64, k: Energy) -> Result<bool> {
        Ok(self.mfe(j)? <= k)
    }

    fn ssel(&self, j: u64, k: Energy) -> Result<BigInt> {
        if j == 0 {
            return Ok(if k == Energy::ZERO { self.dos.total() } else { BigInt::zero() });
        }
        let j = j as i64;
        if k.0 % j != 0 {
            return Ok(BigInt::zero());
        }
        Ok(self.dos.count(Energy(k.0 / j)))
    }

    fn pf(&self, w: &Weighting<T>) -> Result<T> {
        match w {
            Weighting::Scaled(j) => {
                let b = self.base.int_pow(*j as i64)?;
                self.dos.pf(&b)
            }
            Weighting::PerQuantum(b) => self.dos.pf(b),
        }
    }
}

/// Enumerates once and wraps the histogram as an oracle.
pub fn make_oracle<T: Scalar>(
    sys: &StrandSystem,
    space: StructureSpace,
    model: &EnergyModel,
    base: T,
    budget: usize,
) -> Result<BruteOracle<T>> {
    let dos = dos_brute(sys, space, model, budget)?;
    BruteOracle::from_dos(dos, base, sys.len())
}

/// Sum of `base^(-quanta)` directly over the enumerated structures, without
/// grouping by level.
pub fn pf_direct<T: Scalar>(
    sys: &StrandSystem,
    space: StructureSpace,
    model: &EnergyModel,
    base: &T,
    budget: usize,
) -> Result<T> {
    let en = Enumerator::new(sys, space, budget)?;
    let mut acc = T::zero();
    let mut err = None;
    en.for_each(|s| {
        if err.is_some() {
            return;
        }
        match model.energy(sys, s).and_then(|e| base.int_pow(-e.0)) {
            Ok(w) => acc = acc.clone() + w,
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(acc),
    }
}
