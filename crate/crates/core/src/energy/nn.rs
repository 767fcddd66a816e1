use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::loops::{decompose_flat, rotational_symmetry, Loop, LoopKind};
use super::Energy;
use crate::error::{Error, Result};
use crate::scalar::parse_rational;
use crate::strand::{Flattening, SecondaryStructure, StrandOrdering, StrandSystem};
use crate::structure::{is_connected, is_noncrossing_in, validate_structure};

/// Growth coefficient of the logarithmic size extrapolation.
const EXTRAPOLATION_COEFF: f64 = 1.75;

/// A lookup table with an optional fallback entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table<K: Ord> {
    pub entries: BTreeMap<K, Energy>,
    pub default: Option<Energy>,
}

impl<K: Ord> Default for Table<K> {
    fn default() -> Self {
        Self { entries: BTreeMap::new(), default: None }
    }
}

impl<K: Ord + std::fmt::Display> Table<K> {
    pub fn get(&self, key: &K, section: &str) -> Result<Energy> {
        self.entries
            .get(key)
            .copied()
            .or(self.default)
            .ok_or_else(|| Error::MissingParameter(format!("[{section}] {key}")))
    }

    pub fn try_get(&self, key: &K) -> Option<Energy> {
        self.entries.get(key).copied().or(self.default)
    }

    fn values(&self) -> impl Iterator<Item = Energy> + '_ {
        self.entries.values().copied().chain(self.default)
    }
}

/// Nearest-neighbour parameter set. All energies are stored in quanta of
/// `delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct NNParams {
    pub delta: BigRational,
    /// Kelvin.
    pub temperature: BigRational,
    /// `k_B T` in energy units.
    pub kb_t: BigRational,
    pub assoc: Energy,
    pub multi_init: Energy,
    pub multi_bp: Energy,
    pub multi_nt: Energy,
    /// Keyed `"XY/ZW"`: outer pair `X-Y`, inner pair `Z-W` one step in.
    pub stack: Table<String>,
    pub hairpin: Table<usize>,
    pub bulge: Table<usize>,
    pub interior_size: Table<usize>,
    pub interior_asym: Table<usize>,
    /// Keyed `(l1, l2)`, used for small loops before the generic formula.
    pub interior_special: Table<SizePair>,
    /// Keyed `"XY/ZW"`: pair `X-Y` and the two bases just inside it.
    pub mismatch: Table<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SizePair(pub usize, pub usize);

impl std::fmt::Display for SizePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.0, self.1)
    }
}

/// Energy of one structure under [`NNParams`], with the symmetry term split
/// out.
#[derive(Debug, Clone, PartialEq)]
pub struct NNEnergy {
    pub total: Energy,
    /// Loop sum plus association penalty.
    pub symmetry_free: Energy,
    pub symmetry: usize,
    /// `k_B T ln R` rounded to the nearest quantum.
    pub symmetry_term: Energy,
    /// The same term before rounding, in quanta.
    pub symmetry_exact: f64,
}

impl NNParams {
    /// Every table entry zero, `delta = 1`.
    pub fn zero() -> Self {
        fn z<K: Ord>() -> Table<K> {
            Table { entries: BTreeMap::new(), default: Some(Energy::ZERO) }
        }
        Self {
            delta: BigRational::one(),
            temperature: BigRational::from_integer(310.into()),
            kb_t: BigRational::zero(),
            assoc: Energy::ZERO,
            multi_init: Energy::ZERO,
            multi_bp: Energy::ZERO,
            multi_nt: Energy::ZERO,
            stack: z(),
            hairpin: z(),
            bulge: z(),
            interior_size: z(),
            interior_asym: z(),
            interior_special: z(),
            mismatch: z(),
        }
    }

    /// Bundled parameter sets by name: `toy-fine` (quantum 1/10) and
    /// `toy-coarse` (quantum 1).
    pub fn builtin(name: &str) -> Option<Self> {
        let text = match name {
            "toy-fine" => include_str!("../../data/toy_fine.params"),
            "toy-coarse" => include_str!("../../data/toy_coarse.params"),
            _ => return None,
        };
        Some(Self::parse(text).expect("bundled parameters parse"))
    }

    /// Parses the sectioned `key = value` format. Values are rationals in
    /// energy units and must be whole multiples of `delta`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut raw: Vec<(usize, String, String, BigRational)> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse { line: lineno, msg: "unterminated section header".into() })?;
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: lineno, msg: format!("expected key = value, got {line:?}") })?;
            let value = parse_rational(value).map_err(|e| Error::Parse { line: lineno, msg: e.to_string() })?;
            if section.is_empty() {
                return Err(Error::Parse { line: lineno, msg: "entry outside any section".into() });
            }
            raw.push((lineno, section.clone(), key.trim().to_string(), value));
        }

        let global = |name: &str| {
            raw.iter()
                .find(|(_, s, k, _)| s == "global" && k == name)
                .map(|(_, _, _, v)| v.clone())
        };
        let delta = global("delta").unwrap_or_else(BigRational::one);
        if !delta.is_positive() {
            return Err(Error::Parse { line: 0, msg: "delta must be positive".into() });
        }
        let temperature = global("temperature").unwrap_or_else(|| BigRational::from_integer(310.into()));
        // Boltzmann constant in kcal/(mol K), rounded to a rational
        let kb_t = global("kbt").unwrap_or_else(|| &temperature * BigRational::new(19872.into(), 10_000_000.into()));

        let mut p = NNParams {
            delta: delta.clone(),
            temperature,
            kb_t,
            assoc: Energy::ZERO,
            multi_init: Energy::ZERO,
            multi_bp: Energy::ZERO,
            multi_nt: Energy::ZERO,
            stack: Table::default(),
            hairpin: Table::default(),
            bulge: Table::default(),
            interior_size: Table::default(),
            interior_asym: Table::default(),
            interior_special: Table::default(),
            mismatch: Table::default(),
        };

        for (line, section, key, value) in &raw {
            let err = |msg: String| Error::Parse { line: *line, msg };
            let quanta = || -> Result<Energy> {
                let q = value / &delta;
                if !q.is_integer() {
                    return Err(err(format!("{key} = {value} is not a multiple of delta {delta}")));
                }
                q.to_integer().to_i64().map(Energy).ok_or_else(|| err("value out of range".into()))
            };
            let size_key = || key.parse::<usize>().map_err(|_| err(format!("expected a loop size, got {key:?}")));
            match section.as_str() {
                "global" => match key.as_str() {
                    "delta" | "temperature" | "kbt" => {}
                    "assoc" => p.assoc = quanta()?,
                    _ => return Err(err(format!("unknown global key {key:?}"))),
                },
                "multi" => match key.as_str() {
                    "init" => p.multi_init = quanta()?,
                    "bp" => p.multi_bp = quanta()?,
                    "nt" => p.multi_nt = quanta()?,
                    _ => return Err(err(format!("unknown multiloop key {key:?}"))),
                },
                "stack" | "mismatch" => {
                    let table = if section == "stack" { &mut p.stack } else { &mut p.mismatch };
                    if key == "default" {
                        table.default = Some(quanta()?);
                    } else {
                        let k = normalize_quad(key).ok_or_else(|| err(format!("bad base quadruple {key:?}")))?;
                        table.entries.insert(k, quanta()?);
                    }
                }
                "hairpin" | "bulge" | "interior.size" | "interior.asym" => {
                    let table = match section.as_str() {
                        "hairpin" => &mut p.hairpin,
                        "bulge" => &mut p.bulge,
                        "interior.size" => &mut p.interior_size,
                        _ => &mut p.interior_asym,
                    };
                    if key == "default" {
                        table.default = Some(quanta()?);
                    } else {
                        table.entries.insert(size_key()?, quanta()?);
                    }
                }
                "interior.special" => {
                    if key == "default" {
                        p.interior_special.default = Some(quanta()?);
                    } else {
                        let (a, b) = key
                            .split_once('x')
                            .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                            .ok_or_else(|| err(format!("expected l1xl2, got {key:?}")))?;
                        p.interior_special.entries.insert(SizePair(a, b), quanta()?);
                    }
                }
                other => return Err(err(format!("unknown section [{other}]"))),
            }
        }
        Ok(p)
    }

    /// Serializes back to the text format (canonical order).
    pub fn to_text(&self) -> String {
        let v = |e: &Energy| {
            let x = e.value(&self.delta);
            format!("{}/{}", x.numer(), x.denom())
        };
        let mut out = String::new();
        let _ = writeln!(out, "[global]");
        let _ = writeln!(out, "delta = {}/{}", self.delta.numer(), self.delta.denom());
        let _ = writeln!(out, "temperature = {}/{}", self.temperature.numer(), self.temperature.denom());
        let _ = writeln!(out, "kbt = {}/{}", self.kb_t.numer(), self.kb_t.denom());
        let _ = writeln!(out, "assoc = {}", v(&self.assoc));
        let _ = writeln!(out, "[multi]\ninit = {}\nbp = {}\nnt = {}", v(&self.multi_init), v(&self.multi_bp), v(&self.multi_nt));
        fn section<K: Ord + std::fmt::Display>(out: &mut String, name: &str, t: &Table<K>, v: &dyn Fn(&Energy) -> String) {
            let _ = writeln!(out, "[{name}]");
            for (k, e) in &t.entries {
                let _ = writeln!(out, "{k} = {}", v(e));
            }
            if let Some(d) = &t.default {
                let _ = writeln!(out, "default = {}", v(d));
            }
        }
        section(&mut out, "stack", &self.stack, &v);
        section(&mut out, "hairpin", &self.hairpin, &v);
        section(&mut out, "bulge", &self.bulge, &v);
        section(&mut out, "interior.size", &self.interior_size, &v);
        section(&mut out, "interior.asym", &self.interior_asym, &v);
        section(&mut out, "interior.special", &self.interior_special, &v);
        section(&mut out, "mismatch", &self.mismatch, &v);
        out
    }

    /// Fills the per-size hairpin, bulge and interior tables up to `max`
    /// by extending each from its largest entry with
    /// `G(m) = G(m0) + 1.75 kT ln(m/m0)`, rounded to whole quanta.
    /// Tables with a default entry or no entries are left alone.
    pub fn extrapolated(mut self, max: usize) -> Self {
        let kt = self.kb_t.to_f64().unwrap_or(0.0);
        let delta = self.delta.to_f64().unwrap_or(1.0);
        for table in [&mut self.hairpin, &mut self.bulge, &mut self.interior_size] {
            if table.default.is_some() {
                continue;
            }
            let Some((&m0, &g0)) = table.entries.iter().next_back() else { continue };
            for m in m0 + 1..=max {
                let extra = EXTRAPOLATION_COEFF * kt * (m as f64 / m0 as f64).ln() / delta;
                table.entries.insert(m, g0 + Energy(extra.round() as i64));
            }
        }
        self
    }

    fn quad(&self, flat: &Flattening, a: usize, b: usize, c: usize, d: usize) -> String {
        [a, b, c, d]
            .iter()
            .enumerate()
            .fold(String::with_capacity(5), |mut s, (k, &p)| {
                if k == 2 {
                    s.push('/');
                }
                s.push(flat.base_at(p).dna().symbol());
                s
            })
    }

    fn mismatch_at(&self, flat: &Flattening, a: usize, b: usize, c: usize, d: usize) -> Result<Energy> {
        self.mismatch.get(&self.quad(flat, a, b, c, d), "mismatch")
    }

    /// Hairpin closed by flattened positions `(i, j)`.
    pub fn hairpin_energy(&self, flat: &Flattening, i: usize, j: usize) -> Result<Energy> {
        let m = j - i - 1;
        let base = self.hairpin.get(&m, "hairpin")?;
        if m <= 4 {
            Ok(base)
        } else {
            base.checked_add(self.mismatch_at(flat, i, j, i + 1, j - 1)?)
        }
    }

    /// Two-pair loop (stack, bulge or interior) with outer pair `(i, j)`
    /// and inner pair `(d, e)`.
    pub fn two_pair_energy(&self, flat: &Flattening, i: usize, d: usize, e: usize, j: usize) -> Result<Energy> {
        let l1 = d - i - 1;
        let l2 = j - e - 1;
        match (l1, l2) {
            (0, 0) => self.stack.get(&self.quad(flat, i, j, d, e), "stack"),
            (0, m) | (m, 0) => self.bulge.get(&m, "bulge"),
            _ => {
                if l1 <= 3 || l2 <= 3 {
                    if let Some(e) = self.interior_special.try_get(&SizePair(l1, l2)) {
                        return Ok(e);
                    }
                }
                let m = l1 + l2;
                let sigma = l1.abs_diff(l2);
                let parts = [
                    self.interior_size.get(&m, "interior.size")?,
                    self.interior_asym.get(&sigma, "interior.asym")?,
                    self.mismatch_at(flat, i, j, i + 1, j - 1)?,
                    self.mismatch_at(flat, e, d, e + 1, d - 1)?,
                ];
                parts.into_iter().try_fold(Energy::ZERO, Energy::checked_add)
            }
        }
    }

    /// Linear multiloop energy for `pairs` bordering pairs and `free`
    /// unpaired bases.
    pub fn multiloop_energy(&self, pairs: usize, free: usize) -> Result<Energy> {
        self.multi_init
            .checked_add(self.multi_bp.checked_mul(pairs as i64)?)?
            .checked_add(self.multi_nt.checked_mul(free as i64)?)
    }

    pub fn loop_energy(&self, flat: &Flattening, l: &Loop) -> Result<Energy> {
        match l.kind {
            LoopKind::Exterior => Ok(Energy::ZERO),
            LoopKind::Hairpin => {
                let (i, j) = l.closing.expect("hairpin has a closing pair");
                self.hairpin_energy(flat, i, j)
            }
            LoopKind::Stack | LoopKind::Bulge | LoopKind::Interior => {
                let (i, j) = l.closing.expect("two-pair loop has a closing pair");
                let (d, e) = l.inner[0];
                self.two_pair_energy(flat, i, d, e, j)
            }
            LoopKind::Multiloop => self.multiloop_energy(l.pair_count(), l.unpaired),
        }
    }

    /// `k_B T ln R` in quanta, unrounded.
    pub fn symmetry_exact(&self, r: usize) -> f64 {
        if r <= 1 {
            return 0.0;
        }
        let kt = self.kb_t.to_f64().unwrap_or(0.0);
        let delta = self.delta.to_f64().unwrap_or(1.0);
        kt * (r as f64).ln() / delta
    }

    /// `k_B T ln R` rounded to the nearest quantum.
    pub fn symmetry_quanta(&self, r: usize) -> Energy {
        Energy(self.symmetry_exact(r).round() as i64)
    }

    /// Smallest and largest single-loop energies reachable with loops of at
    /// most `n` bases: used for level-grid bounds.
    pub fn loop_energy_range(&self, n: usize) -> (Energy, Energy) {
        let mut lo = Energy::ZERO;
        let mut hi = Energy::ZERO;
        let mut see = |e: Energy| {
            lo = lo.min(e);
            hi = hi.max(e);
        };
        for t in [&self.hairpin, &self.bulge] {
            t.values().for_each(&mut see);
        }
        self.stack.values().for_each(&mut see);
        self.interior_special.values().for_each(&mut see);
        let size_min = self.interior_size.values().min().unwrap_or_default();
        let size_max = self.interior_size.values().max().unwrap_or_default();
        let asym_min = self.interior_asym.values().min().unwrap_or_default();
        let asym_max = self.interior_asym.values().max().unwrap_or_default();
        let mm_min = self.mismatch.values().min().unwrap_or_default();
        let mm_max = self.mismatch.values().max().unwrap_or_default();
        see(size_min + asym_min + mm_min * 2);
        see(size_max + asym_max + mm_max * 2);
        let hp_min = self.hairpin.values().min().unwrap_or_default();
        let hp_max = self.hairpin.values().max().unwrap_or_default();
        see(hp_min + mm_min);
        see(hp_max + mm_max);
        for b in 3..=(n / 2).max(3) {
            for free in [0, n] {
                if let Ok(e) = self.multiloop_energy(b, free) {
                    see(e);
                }
            }
        }
        (lo, hi)
    }
}

/// `"gc/Gc"` or `"GCGC"` to `"GC/GC"`, with U read as T.
fn normalize_quad(key: &str) -> Option<String> {
    let letters: Vec<char> = key.chars().filter(|c| !c.is_whitespace() && *c != '/').collect();
    if letters.len() != 4 {
        return None;
    }
    let mut out = String::with_capacity(5);
    for (k, c) in letters.into_iter().enumerate() {
        if k == 2 {
            out.push('/');
        }
        out.push(crate::strand::Base::from_char(c).ok()?.dna().symbol());
    }
    Some(out)
}

/// Full NN energy of `s` laid out in `ordering`.
pub fn energy_nn(sys: &StrandSystem, ordering: &StrandOrdering, s: &SecondaryStructure, p: &NNParams) -> Result<Energy> {
    energy_nn_detailed(sys, ordering, s, p).map(|e| e.total)
}

pub fn energy_nn_detailed(
    sys: &StrandSystem,
    ordering: &StrandOrdering,
    s: &SecondaryStructure,
    p: &NNParams,
) -> Result<NNEnergy> {
    validate_structure(sys, s)?;
    let flat = sys.flatten(ordering);
    if !is_noncrossing_in(&flat, s) {
        return Err(Error::Pseudoknotted);
    }
    if !is_connected(sys, s) {
        return Err(Error::Disconnected);
    }
    let mut sum = Energy::ZERO;
    for l in decompose_flat(&flat, s) {
        sum = sum.checked_add(p.loop_energy(&flat, &l)?)?;
    }
    let c = sys.strand_count() as i64;
    let symmetry_free = sum.checked_add(p.assoc.checked_mul(c - 1)?)?;
    let r = rotational_symmetry(sys, ordering, s);
    let symmetry_term = p.symmetry_quanta(r);
    Ok(NNEnergy {
        total: symmetry_free.checked_add(symmetry_term)?,
        symmetry_free,
        symmetry: r,
        symmetry_term,
        symmetry_exact: p.symmetry_exact(r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strand::{BasePair, BaseRef};

    const TOY: &str = "
[global]
delta = 1
assoc = 2
kbt = 3
[stack]
default = -1
[hairpin]
3 = 2
4 = 1
5 = 2
[mismatch]
default = 0
";

    #[test]
    fn parses_and_round_trips() {
        let p = NNParams::parse(TOY).unwrap();
        assert_eq!(p.assoc, Energy(2));
        assert_eq!(p.hairpin.get(&4, "hairpin").unwrap(), Energy(1));
        assert!(p.hairpin.get(&9, "hairpin").is_err());
        let again = NNParams::parse(&p.to_text()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn rejects_off_grid_values() {
        let text = "[global]\ndelta = 1/10\n[stack]\nGC/GC = -1/20\n";
        assert!(matches!(NNParams::parse(text), Err(Error::Parse { line: 4, .. })));
        assert!(NNParams::parse("[nope]\nx = 1\n").is_err());
        assert!(NNParams::parse("[stack]\nGX/GC = 1\n").is_err());
    }

    #[test]
    fn stem_energy() {
        let p = NNParams::parse(TOY).unwrap();
        let sys = StrandSystem::single("GGGAAAACCC").unwrap();
        let s = SecondaryStructure::single(&[(1, 10), (2, 9), (3, 8)]);
        assert_eq!(energy_nn(&sys, &StrandOrdering::identity(1), &s, &p).unwrap(), Energy(-1));
        let acgt = StrandSystem::single("ACGT").unwrap();
        assert_eq!(
            energy_nn(&acgt, &StrandOrdering::identity(1), &SecondaryStructure::empty(), &p).unwrap(),
            Energy(0)
        );
    }

    #[test]
    fn symmetric_dimer() {
        let p = NNParams::parse(TOY).unwrap();
        let sys = StrandSystem::from_sequences(&["AT", "AT"]).unwrap();
        let s = SecondaryStructure::from_pairs([
            BasePair::new(BaseRef::new(1, 1), BaseRef::new(2, 2)),
            BasePair::new(BaseRef::new(2, 1), BaseRef::new(1, 2)),
        ]);
        let e = energy_nn_detailed(&sys, &StrandOrdering::identity(2), &s, &p).unwrap();
        // one stack, two exterior loops, one association
        assert_eq!(e.symmetry_free, Energy(-1 + 2));
        assert_eq!(e.symmetry, 2);
        // 3 ln 2 = 2.079...
        assert_eq!(e.symmetry_term, Energy(2));
        assert_eq!(e.total, Energy(3));
        assert!((e.symmetry_exact - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn zero_params_give_zero() {
        let p = NNParams::zero();
        let sys = StrandSystem::single("GGGAAAACCC").unwrap();
        let s = SecondaryStructure::single(&[(1, 10), (2, 9)]);
        assert_eq!(energy_nn(&sys, &StrandOrdering::identity(1), &s, &p).unwrap(), Energy(0));
    }

    #[test]
    fn extrapolation_extends_tables() {
        let p = NNParams::parse(TOY).unwrap().extrapolated(10);
        // 2 + round(1.75 * 3 * ln(10/5)) = 2 + round(3.64)
        assert_eq!(p.hairpin.get(&10, "hairpin").unwrap(), Energy(6));
        assert_eq!(p.hairpin.get(&4, "hairpin").unwrap(), Energy(1));
    }
}
