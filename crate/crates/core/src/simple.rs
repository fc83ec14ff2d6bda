//! Finitely supported nonnegative functions on atoms.

use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::atom::AtomId;
use crate::error::{Error, Result};
use crate::measure::{MeasurableSet, MeasureSpace};
use crate::rational::{self, Rational};

/// The modulus `|g|` of a simple function; atoms not listed carry `0`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SimpleFunction {
    values: BTreeMap<AtomId, Rational>,
}

impl SimpleFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Zero values are dropped; negative ones are rejected.
    pub fn new(entries: impl IntoIterator<Item = (AtomId, Rational)>) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (atom, v) in entries {
            if v.is_negative() {
                return Err(Error::NegativeValue(atom));
            }
            if values.contains_key(&atom) {
                return Err(Error::DuplicateAtom(atom));
            }
            if !v.is_zero() {
                values.insert(atom, v);
            }
        }
        Ok(Self { values })
    }

    pub fn indicator(set: &MeasurableSet) -> Self {
        Self::scaled_indicator(set, Rational::from_integer(1.into()))
    }

    pub fn scaled_indicator(set: &MeasurableSet, c: Rational) -> Self {
        if !c.is_positive() {
            return Self::zero();
        }
        Self { values: set.atoms().map(|a| (*a, c.clone())).collect() }
    }

    pub fn value(&self, a: &AtomId) -> Rational {
        self.values.get(a).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&AtomId, &Rational)> {
        self.values.iter()
    }

    pub fn support(&self) -> MeasurableSet {
        self.values.keys().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_value(&self) -> Option<&Rational> {
        self.values.values().max()
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if !c.is_positive() {
            return Self::zero();
        }
        Self { values: self.values.iter().map(|(a, v)| (*a, v * c)).collect() }
    }

    /// Pointwise sum.
    pub fn add(&self, other: &SimpleFunction) -> Self {
        let mut values = self.values.clone();
        for (a, v) in &other.values {
            *values.entry(*a).or_insert_with(Rational::zero) += v;
        }
        Self { values }
    }

    /// Distinct values in decreasing order with their level sets.
    pub fn level_sets(&self) -> Vec<(Rational, MeasurableSet)> {
        let mut levels: BTreeMap<&Rational, MeasurableSet> = BTreeMap::new();
        for (a, v) in &self.values {
            levels.entry(v).or_default().insert(*a);
        }
        levels.into_iter().rev().map(|(v, s)| (v.clone(), s)).collect()
    }

    pub fn check_in(&self, space: &MeasureSpace) -> Result<()> {
        match self.values.keys().find(|a| !space.contains(a)) {
            Some(a) => Err(Error::AtomNotInSpace(*a)),
            None => Ok(()),
        }
    }

    pub(crate) fn from_map(values: BTreeMap<AtomId, Rational>) -> Self {
        Self { values: values.into_iter().filter(|(_, v)| v.is_positive()).collect() }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    atom: AtomId,
    #[serde(with = "rational::serde_q")]
    value: Rational,
}

impl Serialize for SimpleFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries: Vec<Entry> = self.values.iter().map(|(a, v)| Entry { atom: *a, value: v.clone() }).collect();
        entries.serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimpleFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        SimpleFunction::new(entries.into_iter().map(|e| (e.atom, e.value))).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn zeros_are_dropped_and_negatives_rejected() {
        let g = SimpleFunction::new([(AtomId::Int(0), int(0)), (AtomId::Int(1), int(2))]).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.value(&AtomId::Int(0)), int(0));
        let bad = SimpleFunction::new([(AtomId::Int(0), ratio(-1, 2))]);
        assert_eq!(bad, Err(Error::NegativeValue(AtomId::Int(0))));
    }

    #[test]
    fn level_sets_descend() {
        let g = SimpleFunction::new([(AtomId::Int(0), int(3)), (AtomId::Int(1), int(1)), (AtomId::Int(2), int(3))])
            .unwrap();
        let levels = g.level_sets();
        assert_eq!(levels.len(), 2);
        assert_eq!(levels[0].0, int(3));
        assert_eq!(levels[0].1.len(), 2);
        assert_eq!(levels[1].0, int(1));
    }

    #[test]
    fn json_round_trip() {
        let g = SimpleFunction::new([(AtomId::Pair(1, 0), ratio(3, 4)), (AtomId::Int(2), int(5))]).unwrap();
        let text = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<SimpleFunction>(&text).unwrap(), g);
    }
}
