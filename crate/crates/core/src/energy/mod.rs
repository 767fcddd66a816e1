//! Energy functions: base-pair counting, stacking counting and the
//! loop-based nearest-neighbour model, plus uniform magnification.

mod loops;
mod nn;

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strand::{BasePair, BaseRef, SecondaryStructure, StrandSystem};
use crate::structure::{self, StructureSpace};

pub use loops::{decompose_loops, rotational_symmetry, Loop, LoopKind};
pub use nn::{energy_nn, energy_nn_detailed, NNEnergy, NNParams, Table};

/// An energy as a whole number of quanta; the quantum itself lives with the
/// model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Energy(pub i64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub fn quanta(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, other: Energy) -> Result<Energy> {
        self.0.checked_add(other.0).map(Energy).ok_or(Error::Overflow("energy sum"))
    }

    pub fn checked_mul(self, k: i64) -> Result<Energy> {
        self.0.checked_mul(k).map(Energy).ok_or(Error::Overflow("energy product"))
    }

    /// Value in energy units.
    pub fn value(self, delta: &BigRational) -> BigRational {
        delta * BigInt::from(self.0)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0.checked_add(rhs.0).expect("energy overflow"))
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        *self = *self + rhs;
    }
}

impl Sub for Energy {
    type Output = Energy;
    fn sub(self, rhs: Energy) -> Energy {
        Energy(self.0.checked_sub(rhs.0).expect("energy overflow"))
    }
}

impl Neg for Energy {
    type Output = Energy;
    fn neg(self) -> Energy {
        Energy(-self.0)
    }
}

impl Mul<i64> for Energy {
    type Output = Energy;
    fn mul(self, k: i64) -> Energy {
        Energy(self.0.checked_mul(k).expect("energy overflow"))
    }
}

impl std::iter::Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

/// `-|S|`.
pub fn energy_bpm(s: &SecondaryStructure) -> Energy {
    Energy(-(s.len() as i64))
}

/// Minus the number of pairs `(i, j)` for which `(i+1, j-1)` is also a
/// pair, with neighbours taken along each base's own strand.
pub fn energy_bps(s: &SecondaryStructure) -> Energy {
    let stacked = s
        .pairs()
        .filter(|p| {
            let (l, r) = (p.left, p.right);
            if r.index < 2 {
                return false;
            }
            let inner_l = BaseRef::new(l.strand, l.index + 1);
            let inner_r = BaseRef::new(r.strand, r.index - 1);
            inner_l < inner_r && s.contains(&BasePair::new(inner_l, inner_r))
        })
        .count();
    Energy(-(stacked as i64))
}

/// `T / alpha`: the temperature at which a temperature-independent model
/// behaves like its `alpha`-magnified version.
pub fn temp_magnify(t: &BigRational, alpha: &BigRational) -> Result<BigRational> {
    if !t.is_positive() || !alpha.is_positive() {
        return Err(Error::InvalidArgument("temperature and magnification must be positive".into()));
    }
    Ok(t / alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    Bpm,
    Bps,
    Nn(Box<NNParams>),
}

/// An energy function together with a magnification factor `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    pub kind: ModelKind,
    pub magnification: BigRational,
}

impl EnergyModel {
    pub fn bpm() -> Self {
        Self { kind: ModelKind::Bpm, magnification: BigRational::one() }
    }

    pub fn bps() -> Self {
        Self { kind: ModelKind::Bps, magnification: BigRational::one() }
    }

    pub fn nn(params: NNParams) -> Self {
        Self { kind: ModelKind::Nn(Box::new(params)), magnification: BigRational::one() }
    }

    pub fn magnified(mut self, alpha: BigRational) -> Result<Self> {
        if !alpha.is_positive() {
            return Err(Error::InvalidArgument(format!("magnification must be positive, got {alpha}")));
        }
        self.magnification = alpha;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ModelKind::Bpm => "bpm",
            ModelKind::Bps => "bps",
            ModelKind::Nn(_) => "nn",
        }
    }

    /// Energy granularity: 1 for the counting models, the parameter set's
    /// quantum for NN.
    pub fn delta(&self) -> BigRational {
        match &self.kind {
            ModelKind::Nn(p) => p.delta.clone(),
            _ => BigRational::one(),
        }
    }

    pub fn params(&self) -> Option<&NNParams> {
        match &self.kind {
            ModelKind::Nn(p) => Some(p),
            _ => None,
        }
    }

    /// The ensemble the model is normally evaluated over.
    pub fn default_space(&self) -> StructureSpace {
        match self.kind {
            ModelKind::Bpm => StructureSpace::UNPSEUDOKNOTTED,
            ModelKind::Bps => StructureSpace::UNRESTRICTED,
            ModelKind::Nn(_) => StructureSpace::NEAREST_NEIGHBOUR,
        }
    }

    /// Energy before magnification.
    pub fn base_energy(&self, sys: &StrandSystem, s: &SecondaryStructure) -> Result<Energy> {
        match &self.kind {
            ModelKind::Bpm => Ok(energy_bpm(s)),
            ModelKind::Bps => Ok(energy_bps(s)),
            ModelKind::Nn(p) => {
                let ordering = structure::is_unpseudoknotted_multi(sys, s).ok_or(Error::Pseudoknotted)?;
                energy_nn(sys, &ordering, s, p)
            }
        }
    }

    /// `alpha` times the base energy; fails unless the product is a whole
    /// number of quanta.
    pub fn energy(&self, sys: &StrandSystem, s: &SecondaryStructure) -> Result<Energy> {
        self.magnify(self.base_energy(sys, s)?)
    }

    pub fn magnify(&self, e: Energy) -> Result<Energy> {
        if self.magnification.is_one() {
            return Ok(e);
        }
        let scaled = &self.magnification * BigInt::from(e.0);
        if !scaled.is_integer() {
            return Err(Error::NonIntegralMagnification(format!(
                "{} * {} quanta",
                self.magnification, e.0
            )));
        }
        scaled.to_integer().to_i64().map(Energy).ok_or(Error::Overflow("magnified energy"))
    }

    /// Whether this model's magnification is a positive integer.
    pub fn integral_magnification(&self) -> Option<u64> {
        self.magnification.is_integer().then(|| self.magnification.to_integer().to_u64()).flatten()
    }
}

impl Zero for Energy {
    fn zero() -> Self {
        Energy::ZERO
    }
    fn is_zero(&self) -> bool {
        self.0 == 0
    }
}
