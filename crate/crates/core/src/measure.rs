//! Purely atomic measure spaces with exact rational weights.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::atom::AtomId;
use crate::error::{Error, Result};
use crate::rational::{self, int, powi, Rational};
use crate::transform::Transformation;

/// Closed-form infinite spaces shipped with the library.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// Atoms `(i,0)`, `i ∈ ℤ`, of weight `3^-|i|` together with `(n,j)`,
    /// `n,j ≥ 1`, of weight `3^-(n-j)` below the diagonal and `1` on or above it.
    /// The map sends `(i,0) ↦ (i+2,0)` and `(n,j) ↦ (n,j-1)`.
    Comb,
    /// Atoms `n ≥ 1` with weight `r^n`, `τ(n) = n + 1`.
    UnilateralShift {
        #[serde(with = "rational::serde_q")]
        r: Rational,
    },
    /// Atoms `i ∈ ℤ` with weight `r^i`, `τ(i) = i + 1`.
    BilateralShift {
        #[serde(with = "rational::serde_q")]
        r: Rational,
    },
    /// Atoms `i ∈ ℤ` with weight `r^|i|`, `τ(i) = i + 1`.
    BilateralValley {
        #[serde(with = "rational::serde_q")]
        r: Rational,
    },
}

impl Family {
    fn validate(&self) -> Result<()> {
        match self {
            Family::Comb => Ok(()),
            Family::UnilateralShift { r } => {
                if !r.is_positive() {
                    return Err(Error::InvalidFamily(format!(
                        "base {} must be positive",
                        rational::format_rational(r)
                    )));
                }
                Ok(())
            }
            Family::BilateralShift { r } | Family::BilateralValley { r } => {
                if !r.is_positive() {
                    return Err(Error::InvalidFamily(format!(
                        "base {} must be positive",
                        rational::format_rational(r)
                    )));
                }
                if r.is_one() {
                    return Err(Error::InvalidFamily("bilateral families need a base other than 1".into()));
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Layout {
    Finite(BTreeMap<AtomId, Rational>),
    Structured(Family),
}

/// Serialises as `"n/d"` or `"inf"`.
#[derive(Clone, Debug, PartialEq)]
pub enum TotalMass {
    Finite(Rational),
    Infinite,
}

impl Serialize for TotalMass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TotalMass::Finite(m) => s.serialize_str(&rational::format_rational(m)),
            TotalMass::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TotalMass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        if text == "inf" {
            return Ok(TotalMass::Infinite);
        }
        rational::parse_rational(&text).map(TotalMass::Finite).map_err(serde::de::Error::custom)
    }
}

impl TotalMass {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            TotalMass::Finite(m) => Some(m),
            TotalMass::Infinite => None,
        }
    }
}

/// A countable measure space in which every point is an atom of positive weight.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureSpace {
    layout: Layout,
}

/// A finite set of atoms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MeasurableSet(BTreeSet<AtomId>);

impl MeasurableSet {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn singleton(a: AtomId) -> Self {
        Self(BTreeSet::from([a]))
    }

    pub fn atoms(&self) -> impl Iterator<Item = &AtomId> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, a: &AtomId) -> bool {
        self.0.contains(a)
    }

    pub fn insert(&mut self, a: AtomId) -> bool {
        self.0.insert(a)
    }

    pub fn union(&self, other: &MeasurableSet) -> MeasurableSet {
        Self(self.0.union(&other.0).copied().collect())
    }

    pub fn is_disjoint(&self, other: &MeasurableSet) -> bool {
        self.0.is_disjoint(&other.0)
    }
}

impl FromIterator<AtomId> for MeasurableSet {
    fn from_iter<I: IntoIterator<Item = AtomId>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// The first `size` atoms of a space in canonical order, with a bound on the
/// mass left outside (`None` when that mass is infinite).
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceWindow {
    pub size: usize,
    pub atoms: Vec<AtomId>,
    pub omitted_mass: Option<Rational>,
}

impl MeasureSpace {
    pub fn finite(entries: impl IntoIterator<Item = (AtomId, Rational)>) -> Result<Self> {
        let mut weights = BTreeMap::new();
        for (atom, w) in entries {
            if !w.is_positive() {
                return Err(Error::NonPositiveWeight(atom));
            }
            if weights.insert(atom, w).is_some() {
                return Err(Error::DuplicateAtom(atom));
            }
        }
        if weights.is_empty() {
            return Err(Error::EmptySpace);
        }
        Ok(Self { layout: Layout::Finite(weights) })
    }

    pub fn structured(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(Self { layout: Layout::Structured(family) })
    }

    /// A built-in family together with its canonical transformation.
    pub fn builtin(family: Family) -> Result<(Self, Transformation)> {
        let tau = match family {
            Family::Comb => Transformation::Comb,
            _ => Transformation::Shift(1),
        };
        Ok((Self::structured(family)?, tau))
    }

    pub fn family(&self) -> Option<&Family> {
        match &self.layout {
            Layout::Structured(f) => Some(f),
            Layout::Finite(_) => None,
        }
    }

    pub fn is_finite_explicit(&self) -> bool {
        matches!(self.layout, Layout::Finite(_))
    }

    pub fn atom_count(&self) -> Option<usize> {
        match &self.layout {
            Layout::Finite(w) => Some(w.len()),
            Layout::Structured(_) => None,
        }
    }

    pub fn contains(&self, a: &AtomId) -> bool {
        match (&self.layout, a) {
            (Layout::Finite(w), _) => w.contains_key(a),
            (Layout::Structured(Family::Comb), AtomId::Pair(i, j)) => *j == 0 || (*i >= 1 && *j >= 1),
            (Layout::Structured(Family::UnilateralShift { .. }), AtomId::Int(n)) => *n >= 1,
            (Layout::Structured(Family::BilateralShift { .. } | Family::BilateralValley { .. }), AtomId::Int(_)) => {
                true
            }
            _ => false,
        }
    }

    /// Weight of a singleton, `None` outside the atom universe.
    pub fn weight(&self, a: &AtomId) -> Option<Rational> {
        if !self.contains(a) {
            return None;
        }
        Some(match (&self.layout, *a) {
            (Layout::Finite(w), _) => w[a].clone(),
            (Layout::Structured(Family::Comb), AtomId::Pair(i, 0)) => powi(&int(3), -(i.unsigned_abs() as i64)),
            (Layout::Structured(Family::Comb), AtomId::Pair(n, j)) => {
                if j < n {
                    powi(&int(3), -(n - j))
                } else {
                    Rational::one()
                }
            }
            (Layout::Structured(Family::UnilateralShift { r }), AtomId::Int(n)) => powi(r, n),
            (Layout::Structured(Family::BilateralShift { r }), AtomId::Int(i)) => powi(r, i),
            (Layout::Structured(Family::BilateralValley { r }), AtomId::Int(i)) => powi(r, i.unsigned_abs() as i64),
            _ => unreachable!("contains() admitted an atom of the wrong shape"),
        })
    }

    pub fn total_mass(&self) -> TotalMass {
        match &self.layout {
            Layout::Finite(w) => TotalMass::Finite(w.values().sum()),
            Layout::Structured(Family::UnilateralShift { r }) if *r < Rational::one() => {
                TotalMass::Finite(r / (Rational::one() - r))
            }
            Layout::Structured(Family::BilateralValley { r }) if *r < Rational::one() => {
                TotalMass::Finite((Rational::one() + r) / (Rational::one() - r))
            }
            Layout::Structured(_) => TotalMass::Infinite,
        }
    }

    /// Atoms in canonical order; infinite for structured spaces.
    pub fn atoms(&self) -> Box<dyn Iterator<Item = AtomId> + '_> {
        match &self.layout {
            Layout::Finite(w) => Box::new(w.keys().copied()),
            Layout::Structured(Family::UnilateralShift { .. }) => Box::new((1..).map(AtomId::Int)),
            Layout::Structured(Family::BilateralShift { .. } | Family::BilateralValley { .. }) => Box::new(
                std::iter::once(AtomId::Int(0)).chain((1i64..).flat_map(|k| [AtomId::Int(k), AtomId::Int(-k)])),
            ),
            Layout::Structured(Family::Comb) => {
                Box::new(std::iter::once(AtomId::Pair(0, 0)).chain((1i64..).flat_map(|s| {
                    std::iter::once(AtomId::Pair(-s, 0))
                        .chain((1..s).map(move |n| AtomId::Pair(n, s - n)))
                        .chain(std::iter::once(AtomId::Pair(s, 0)))
                })))
            }
        }
    }

    /// Upper bound on the mass outside the first `size` atoms; `None` is `+∞`.
    pub fn tail_bound(&self, size: usize) -> Option<Rational> {
        let total = self.total_mass();
        let total = total.finite()?;
        let head: Rational = self.atoms().take(size).map(|a| self.weight(&a).unwrap()).sum();
        Some(total - head)
    }

    pub fn window(&self, size: usize) -> Result<SpaceWindow> {
        if size == 0 {
            return Err(Error::EmptyWindow);
        }
        let atoms: Vec<AtomId> = self.atoms().take(size).collect();
        let omitted_mass = self.tail_bound(size);
        Ok(SpaceWindow { size: atoms.len(), atoms, omitted_mass })
    }

    pub fn measure_of(&self, set: &MeasurableSet) -> Result<Rational> {
        let mut total = Rational::zero();
        for a in set.atoms() {
            total += self.weight(a).ok_or(Error::AtomNotInSpace(*a))?;
        }
        Ok(total)
    }

    pub(crate) fn measure_unchecked(&self, set: &MeasurableSet) -> Rational {
        set.atoms().map(|a| self.weight(a).expect("atom outside space")).sum()
    }

    pub fn check_set(&self, set: &MeasurableSet) -> Result<()> {
        match set.atoms().find(|a| !self.contains(a)) {
            Some(a) => Err(Error::AtomNotInSpace(*a)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn example24() -> MeasureSpace {
        MeasureSpace::structured(Family::Comb).unwrap()
    }

    #[test]
    fn finite_space_totals_weights() {
        let s = MeasureSpace::finite([
            (AtomId::Int(0), ratio(1, 2)),
            (AtomId::Int(1), ratio(1, 3)),
            (AtomId::Int(2), ratio(1, 6)),
        ])
        .unwrap();
        assert_eq!(s.total_mass(), TotalMass::Finite(int(1)));
        assert_eq!(s.tail_bound(3), Some(int(0)));
        assert_eq!(s.tail_bound(1), Some(ratio(1, 2)));
    }

    #[test]
    fn finite_space_rejects_bad_entries() {
        let dup = MeasureSpace::finite([(AtomId::Int(0), ratio(1, 2)), (AtomId::Int(0), ratio(1, 3))]);
        assert_eq!(dup, Err(Error::DuplicateAtom(AtomId::Int(0))));
        let zero = MeasureSpace::finite([(AtomId::Int(0), int(0))]);
        assert_eq!(zero, Err(Error::NonPositiveWeight(AtomId::Int(0))));
        assert_eq!(MeasureSpace::finite([]), Err(Error::EmptySpace));
    }

    #[test]
    fn example24_weights() {
        let s = example24();
        assert_eq!(s.weight(&AtomId::Pair(0, 0)), Some(int(1)));
        assert_eq!(s.weight(&AtomId::Pair(-2, 0)), Some(ratio(1, 9)));
        assert_eq!(s.weight(&AtomId::Pair(2, 1)), Some(ratio(1, 3)));
        assert_eq!(s.weight(&AtomId::Pair(1, 1)), Some(int(1)));
        assert_eq!(s.weight(&AtomId::Pair(0, 1)), None);
        assert_eq!(s.total_mass(), TotalMass::Infinite);
    }

    #[test]
    fn example24_measures() {
        let s = example24();
        let set: MeasurableSet = [AtomId::Pair(-1, 0), AtomId::Pair(1, 1)].into_iter().collect();
        assert_eq!(s.measure_of(&set).unwrap(), ratio(4, 3));
        assert_eq!(s.measure_of(&MeasurableSet::empty()).unwrap(), int(0));
        let outside = MeasurableSet::singleton(AtomId::Int(3));
        assert_eq!(s.measure_of(&outside), Err(Error::AtomNotInSpace(AtomId::Int(3))));
    }

    #[test]
    fn example24_enumeration_is_canonical_and_complete() {
        let s = example24();
        let atoms: Vec<AtomId> = s.atoms().take(200).collect();
        let mut sorted = atoms.clone();
        sorted.sort();
        assert_eq!(atoms, sorted);
        assert!(atoms.iter().all(|a| s.contains(a)));
        let unique: BTreeSet<_> = atoms.iter().collect();
        assert_eq!(unique.len(), atoms.len());
        assert!(atoms.contains(&AtomId::Pair(-1, 0)) && atoms.contains(&AtomId::Pair(1, 1)));
    }

    #[test]
    fn shift_family_totals() {
        let uni = MeasureSpace::structured(Family::UnilateralShift { r: ratio(1, 2) }).unwrap();
        assert_eq!(uni.total_mass(), TotalMass::Finite(int(1)));
        let bi = MeasureSpace::structured(Family::BilateralShift { r: ratio(1, 2) }).unwrap();
        assert_eq!(bi.total_mass(), TotalMass::Infinite);
        assert_eq!(bi.tail_bound(10), None);
        let valley = MeasureSpace::structured(Family::BilateralValley { r: ratio(1, 2) }).unwrap();
        assert_eq!(valley.total_mass(), TotalMass::Finite(int(3)));
    }

    #[test]
    fn tail_bounds_shrink() {
        let uni = MeasureSpace::structured(Family::UnilateralShift { r: ratio(1, 2) }).unwrap();
        let mut prev = uni.tail_bound(1).unwrap();
        for size in 2..40 {
            let next = uni.tail_bound(size).unwrap();
            assert!(next <= prev);
            assert_eq!(next, powi(&ratio(1, 2), size as i64));
            prev = next;
        }
    }

    #[test]
    fn bilateral_rejects_unit_base() {
        assert!(matches!(MeasureSpace::builtin(Family::BilateralShift { r: int(1) }), Err(Error::InvalidFamily(_))));
        assert!(MeasureSpace::builtin(Family::UnilateralShift { r: int(0) }).is_err());
    }

    #[test]
    fn bilateral_enumeration_order() {
        let bi = MeasureSpace::structured(Family::BilateralShift { r: ratio(1, 2) }).unwrap();
        let w = bi.window(5).unwrap();
        assert_eq!(w.atoms, [0, 1, -1, 2, -2].map(AtomId::Int).to_vec());
    }
}
