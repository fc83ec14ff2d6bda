//! Composition and multiplication operators acting on simple functions.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::atom::AtomId;
use crate::error::{Error, Result};
use crate::measure::{MeasurableSet, MeasureSpace, SpaceWindow};
use crate::norm::{lorentz_norm, step_norm, CertifiedReal, LorentzIndex};
use crate::rational::{self, format_rational, pow_real, powi, to_f64, Rational};
use crate::rearrangement::StepFunction;
use crate::sequence::SetOrbit;
use crate::simple::SimpleFunction;
use crate::transform::{preimage_n, Transformation};

/// Tolerance for a sample to count as lying on the unit sphere.
pub const SPHERE_TOLERANCE: f64 = 1e-9;

/// `C_τ g = g ∘ τ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositionOperator {
    space: MeasureSpace,
    tau: Transformation,
}

impl CompositionOperator {
    pub fn new(space: MeasureSpace, tau: Transformation) -> Result<Self> {
        tau.check_compatible(&space)?;
        Ok(Self { space, tau })
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn tau(&self) -> &Transformation {
        &self.tau
    }
}

/// The modulus of a multiplier: listed atoms plus a default for the rest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Multiplier {
    values: BTreeMap<AtomId, Rational>,
    default: Rational,
}

impl Multiplier {
    pub fn new(values: impl IntoIterator<Item = (AtomId, Rational)>, default: Rational) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (a, v) in values {
            if v.is_negative() {
                return Err(Error::NegativeValue(a));
            }
            if map.insert(a, v).is_some() {
                return Err(Error::DuplicateAtom(a));
            }
        }
        if default.is_negative() {
            return Err(Error::InvalidFamily("multiplier default must be nonnegative".into()));
        }
        Ok(Self { values: map, default })
    }

    pub fn constant(c: Rational) -> Result<Self> {
        Self::new([], c)
    }

    pub fn at(&self, a: &AtomId) -> &Rational {
        self.values.get(a).unwrap_or(&self.default)
    }

    pub fn default_value(&self) -> &Rational {
        &self.default
    }

    pub fn listed(&self) -> impl Iterator<Item = (&AtomId, &Rational)> {
        self.values.iter()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMultiplier {
    #[serde(with = "rational::serde_q")]
    default: Rational,
    #[serde(default)]
    values: Vec<RawValue>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawValue {
    atom: AtomId,
    #[serde(with = "rational::serde_q")]
    value: Rational,
}

impl Serialize for Multiplier {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMultiplier {
            default: self.default.clone(),
            values: self.values.iter().map(|(a, v)| RawValue { atom: *a, value: v.clone() }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Multiplier {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMultiplier::deserialize(d)?;
        Multiplier::new(raw.values.into_iter().map(|v| (v.atom, v.value)), raw.default)
            .map_err(serde::de::Error::custom)
    }
}

/// `M_θ g = θ·g`.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicationOperator {
    space: MeasureSpace,
    theta: Multiplier,
}

impl MultiplicationOperator {
    pub fn new(space: MeasureSpace, theta: Multiplier) -> Result<Self> {
        if let Some((a, _)) = theta.listed().find(|(a, _)| !space.contains(a)) {
            return Err(Error::AtomNotInSpace(*a));
        }
        Ok(Self { space, theta })
    }

    pub fn space(&self) -> &MeasureSpace {
        &self.space
    }

    pub fn theta(&self) -> &Multiplier {
        &self.theta
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Operator {
    Composition(CompositionOperator),
    Multiplication(MultiplicationOperator),
}

impl Operator {
    pub fn space(&self) -> &MeasureSpace {
        match self {
            Operator::Composition(c) => &c.space,
            Operator::Multiplication(m) => &m.space,
        }
    }

    pub fn apply(&self, g: &SimpleFunction, n: usize) -> Result<SimpleFunction> {
        match self {
            Operator::Composition(c) => compose_apply(c, g, n),
            Operator::Multiplication(m) => multiply_apply(m, g, n),
        }
    }
}

/// `C_τ^n g`, transported level set by level set.
pub fn compose_apply(op: &CompositionOperator, g: &SimpleFunction, n: usize) -> Result<SimpleFunction> {
    g.check_in(&op.space)?;
    let mut out = BTreeMap::new();
    for (v, level) in g.level_sets() {
        for a in preimage_n(&op.space, &op.tau, &level, n).atoms() {
            out.insert(*a, v.clone());
        }
    }
    Ok(SimpleFunction::from_map(out))
}

/// `M_θ^n g`.
pub fn multiply_apply(op: &MultiplicationOperator, g: &SimpleFunction, n: usize) -> Result<SimpleFunction> {
    g.check_in(&op.space)?;
    let out = g.entries().map(|(a, v)| (*a, v * powi(op.theta.at(a), n as i64))).collect::<BTreeMap<_, _>>();
    Ok(SimpleFunction::from_map(out))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub n: usize,
    /// Measure of the support of the `n`-th iterate.
    #[serde(with = "rational::serde_q")]
    pub measure: Rational,
    /// Measure carried by each level of the starting vector, in the order of
    /// [`OrbitTrace::level_values`].
    #[serde(with = "rational::serde_q::vec")]
    pub level_measures: Vec<Rational>,
    pub norm: CertifiedReal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitTrace {
    pub horizon: usize,
    pub index: LorentzIndex,
    /// Distinct values of the starting vector, decreasing.
    #[serde(with = "rational::serde_q::vec")]
    pub level_values: Vec<Rational>,
    pub entries: Vec<OrbitEntry>,
}

impl OrbitTrace {
    pub fn norms(&self) -> impl Iterator<Item = &CertifiedReal> {
        self.entries.iter().map(|e| &e.norm)
    }

    pub fn initial_norm(&self) -> &CertifiedReal {
        &self.entries[0].norm
    }
}

/// Norms of `Tⁿg` for `n = 0..=horizon` together with exact level measures.
pub fn orbit_trace(op: &Operator, g: &SimpleFunction, idx: &LorentzIndex, horizon: usize) -> Result<OrbitTrace> {
    if horizon < 1 {
        return Err(Error::HorizonTooShort { min: 1, got: horizon });
    }
    if g.is_zero() {
        return Err(Error::ZeroFunction);
    }
    g.check_in(op.space())?;
    let levels = g.level_sets();
    let level_values: Vec<Rational> = levels.iter().map(|(v, _)| v.clone()).collect();
    let entries = match op {
        Operator::Composition(c) => composition_entries(c, &levels, idx, horizon),
        Operator::Multiplication(m) => multiplication_entries(m, g, &levels, idx, horizon)?,
    };
    Ok(OrbitTrace { horizon, index: idx.clone(), level_values, entries })
}

fn composition_entries(
    op: &CompositionOperator,
    levels: &[(Rational, MeasurableSet)],
    idx: &LorentzIndex,
    horizon: usize,
) -> Vec<OrbitEntry> {
    let orbits: Vec<SetOrbit> =
        levels.iter().map(|(_, set)| SetOrbit::preimages(&op.space, &op.tau, set, horizon)).collect();
    let mut cache: HashMap<Vec<Rational>, CertifiedReal> = HashMap::new();
    (0..=horizon)
        .map(|n| {
            let level_measures: Vec<Rational> = orbits.iter().map(|o| o.measures[n].clone()).collect();
            let norm = *cache.entry(level_measures.clone()).or_insert_with(|| {
                let step = StepFunction::from_levels(levels.iter().map(|(v, _)| v).zip(&level_measures));
                step_norm(&step, idx)
            });
            OrbitEntry { n, measure: level_measures.iter().sum(), level_measures, norm }
        })
        .collect()
}

fn multiplication_entries(
    op: &MultiplicationOperator,
    g: &SimpleFunction,
    levels: &[(Rational, MeasurableSet)],
    idx: &LorentzIndex,
    horizon: usize,
) -> Result<Vec<OrbitEntry>> {
    let mut current = g.clone();
    let mut entries = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        if n > 0 {
            current = multiply_apply(op, &current, 1)?;
        }
        let level_measures = levels
            .iter()
            .map(|(_, set)| {
                set.atoms().filter(|a| !current.value(a).is_zero()).map(|a| op.space.weight(a).unwrap()).sum()
            })
            .collect::<Vec<Rational>>();
        entries.push(OrbitEntry {
            n,
            measure: level_measures.iter().sum(),
            level_measures,
            norm: lorentz_norm(&op.space, &current, idx)?,
        });
    }
    Ok(entries)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    Regular,
    SemiIrregularAtHorizon,
    IrregularAtHorizon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitClass {
    pub classification: Classification,
    pub min_norm: CertifiedReal,
    pub max_norm: CertifiedReal,
    pub argmin: usize,
    pub argmax: usize,
}

/// Multiples of `‖g‖` used as the dip and spike levels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { low: 1e-6, high: 1e6 }
    }
}

impl Thresholds {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low >= 0.0 && low < high && high.is_finite()) {
            return Err(Error::InvalidThresholds);
        }
        Ok(Self { low, high })
    }
}

/// Classifies a trace against absolute levels. A dip needs the upper end of
/// the smallest norm at or below `low`; a spike needs the lower end of the
/// largest norm at or above `high`.
pub fn classify_orbit(trace: &OrbitTrace, low: f64, high: f64) -> Result<OrbitClass> {
    if !(low < high) {
        return Err(Error::InvalidThresholds);
    }
    let (mut argmin, mut argmax) = (0, 0);
    for (n, norm) in trace.norms().enumerate() {
        if norm.value < trace.entries[argmin].norm.value {
            argmin = n;
        }
        if norm.value > trace.entries[argmax].norm.value {
            argmax = n;
        }
    }
    let min_norm = trace.entries[argmin].norm;
    let max_norm = trace.entries[argmax].norm;
    let dips = min_norm.upper() <= low;
    let classification = if dips && max_norm.lower() >= high {
        Classification::IrregularAtHorizon
    } else if dips && max_norm.lower() >= 0.5 * trace.initial_norm().value {
        Classification::SemiIrregularAtHorizon
    } else {
        Classification::Regular
    };
    Ok(OrbitClass { classification, min_norm, max_norm, argmin, argmax })
}

/// [`classify_orbit`] with levels given as multiples of the starting norm.
pub fn classify_relative(trace: &OrbitTrace, thresholds: Thresholds) -> Result<OrbitClass> {
    let base = trace.initial_norm().value;
    classify_orbit(trace, thresholds.low * base, thresholds.high * base)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionBound {
    /// `max μ(τ⁻¹{a}) / μ({a})` over the window.
    #[serde(with = "rational::serde_q")]
    pub ratio: Rational,
    pub atom: AtomId,
    /// `ratio^{1/p}`, a bound on `‖C_τ‖`.
    pub operator_bound: CertifiedReal,
}

pub fn composition_bound(
    space: &MeasureSpace,
    tau: &Transformation,
    idx: &LorentzIndex,
    window: &SpaceWindow,
) -> Result<CompositionBound> {
    let mut best: Option<(Rational, AtomId)> = None;
    for a in &window.atoms {
        let fiber: MeasurableSet = tau.fiber(space, a).into_iter().collect();
        let r = space.measure_unchecked(&fiber) / space.weight(a).ok_or(Error::AtomNotInSpace(*a))?;
        if best.as_ref().is_none_or(|(m, _)| r > *m) {
            best = Some((r, *a));
        }
    }
    let (ratio, atom) = best.ok_or(Error::EmptyWindow)?;
    let inv_p = to_f64(&idx.p().recip());
    let operator_bound = if ratio.is_zero() {
        CertifiedReal::zero()
    } else if ratio.is_one() || inv_p == 0.0 {
        CertifiedReal::exact(1.0)
    } else {
        let v = pow_real(&ratio, inv_p);
        CertifiedReal::new(v, v * 8.0 * f64::EPSILON * (1.0 + rational::ln_positive(&ratio).abs()))
    };
    Ok(CompositionBound { ratio, atom, operator_bound })
}

/// A simple function scaled to unit norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSample {
    pub vector: SimpleFunction,
    pub norm: CertifiedReal,
}

impl SphereSample {
    /// Accepts `vector` if its norm is within [`SPHERE_TOLERANCE`] of one.
    pub fn new(space: &MeasureSpace, vector: SimpleFunction, idx: &LorentzIndex) -> Result<Self> {
        let norm = lorentz_norm(space, &vector, idx)?;
        if (norm.value - 1.0).abs() > SPHERE_TOLERANCE + norm.abs_error {
            return Err(Error::NotNormalized { norm: norm.value });
        }
        Ok(Self { vector, norm })
    }

    /// Rescales `g` by a rational close to `1/‖g‖`.
    pub fn normalize(space: &MeasureSpace, g: &SimpleFunction, idx: &LorentzIndex) -> Result<Self> {
        if g.is_zero() {
            return Err(Error::ZeroFunction);
        }
        let norm = lorentz_norm(space, g, idx)?;
        let c = rational::from_f64(1.0 / norm.value).ok_or(Error::NotNormalized { norm: norm.value })?;
        Self::new(space, g.scale(&c), idx)
    }
}

impl std::fmt::Display for CompositionBound {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "M = {} at {}, ‖C_τ‖ ≤ {}", format_rational(&self.ratio), self.atom, self.operator_bound)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Family;
    use crate::norm::indicator_norm;
    use crate::rational::{int, ratio};

    fn composition(family: Family) -> CompositionOperator {
        let (s, t) = MeasureSpace::builtin(family).unwrap();
        CompositionOperator::new(s, t).unwrap()
    }

    fn p2q2() -> LorentzIndex {
        LorentzIndex::finite(int(2), int(2)).unwrap()
    }

    #[test]
    fn compose_example24_level_set() {
        let op = composition(Family::Comb);
        let g = SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Pair(1, 0)));
        let out = compose_apply(&op, &g, 1).unwrap();
        let expected: MeasurableSet = [AtomId::Pair(-1, 0), AtomId::Pair(1, 1)].into_iter().collect();
        assert_eq!(out, SimpleFunction::indicator(&expected));
        assert_eq!(compose_apply(&op, &g, 0).unwrap(), g);
    }

    #[test]
    fn multiply_powers() {
        let s = MeasureSpace::finite([(AtomId::Int(0), int(1)), (AtomId::Int(1), int(1))]).unwrap();
        let theta = Multiplier::new([(AtomId::Int(1), int(0))], ratio(1, 2)).unwrap();
        let op = MultiplicationOperator::new(s, theta).unwrap();
        let g = SimpleFunction::new([(AtomId::Int(0), int(4)), (AtomId::Int(1), int(4))]).unwrap();
        let out = multiply_apply(&op, &g, 3).unwrap();
        assert_eq!(out.value(&AtomId::Int(0)), ratio(1, 2));
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn bilateral_trace_doubles() {
        let op = Operator::Composition(composition(Family::BilateralShift { r: ratio(1, 2) }));
        let g = SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Int(0)));
        let trace = orbit_trace(&op, &g, &p2q2(), 10).unwrap();
        for e in &trace.entries {
            assert_eq!(e.measure, powi(&int(2), e.n as i64));
            let sq = e.norm.value * e.norm.value;
            let expected = 2.0 * 2f64.powi(e.n as i32);
            assert!((sq - expected).abs() <= 3.0 * e.norm.abs_error * e.norm.value + 1e-12 * expected);
        }
    }

    #[test]
    fn unilateral_trace_dies() {
        let op = Operator::Composition(composition(Family::UnilateralShift { r: ratio(1, 2) }));
        let g = SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Int(5)));
        let trace = orbit_trace(&op, &g, &p2q2(), 8).unwrap();
        assert_eq!(trace.entries[4].measure, ratio(1, 2));
        assert!(trace.entries[5..].iter().all(|e| e.measure.is_zero() && e.norm == CertifiedReal::zero()));
        let class = classify_relative(&trace, Thresholds::default()).unwrap();
        assert_eq!(class.classification, Classification::SemiIrregularAtHorizon);
        assert_eq!((class.argmax, class.argmin), (4, 5));
    }

    #[test]
    fn identity_multiplier_trace_is_constant() {
        let s = MeasureSpace::finite([(AtomId::Int(0), ratio(1, 3))]).unwrap();
        let op =
            Operator::Multiplication(MultiplicationOperator::new(s, Multiplier::constant(int(1)).unwrap()).unwrap());
        let g = SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Int(0)));
        let trace = orbit_trace(&op, &g, &p2q2(), 5).unwrap();
        assert!(trace.norms().all(|n| n == trace.initial_norm()));
        assert_eq!(classify_relative(&trace, Thresholds::default()).unwrap().classification, Classification::Regular);
    }

    #[test]
    fn classification_thresholds() {
        let mk = |values: &[f64]| OrbitTrace {
            horizon: values.len() - 1,
            index: p2q2(),
            level_values: vec![int(1)],
            entries: values
                .iter()
                .enumerate()
                .map(|(n, v)| OrbitEntry {
                    n,
                    measure: int(1),
                    level_measures: vec![int(1)],
                    norm: CertifiedReal::exact(*v),
                })
                .collect(),
        };
        let irregular = classify_orbit(&mk(&[1.0, 1e-8, 1e7]), 1e-6, 1e6).unwrap();
        assert_eq!(irregular.classification, Classification::IrregularAtHorizon);
        assert_eq!(classify_orbit(&mk(&[1.0, 1.0]), 1e-6, 1e6).unwrap().classification, Classification::Regular);
        assert!(classify_orbit(&mk(&[1.0]), 2.0, 1.0).is_err());
    }

    #[test]
    fn bounds() {
        let idx = p2q2();
        let (s, t) = MeasureSpace::builtin(Family::BilateralShift { r: ratio(1, 2) }).unwrap();
        let b = composition_bound(&s, &t, &idx, &s.window(20).unwrap()).unwrap();
        assert_eq!(b.ratio, int(2));
        assert!((b.operator_bound.value - 2f64.sqrt()).abs() <= b.operator_bound.abs_error + 1e-16);
        let id = composition_bound(&s, &Transformation::Identity, &idx, &s.window(20).unwrap()).unwrap();
        assert_eq!(id.ratio, int(1));
        let (e, t) = MeasureSpace::builtin(Family::Comb).unwrap();
        let b = composition_bound(&e, &t, &idx, &e.window(10).unwrap()).unwrap();
        assert!(b.ratio >= int(4));
    }

    #[test]
    fn sphere_samples() {
        let idx = p2q2();
        let (s, _) = MeasureSpace::builtin(Family::BilateralShift { r: ratio(1, 2) }).unwrap();
        let g = SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Int(3)));
        let unit = SphereSample::normalize(&s, &g, &idx).unwrap();
        assert!((unit.norm.value - 1.0).abs() <= SPHERE_TOLERANCE);
        let half = indicator_norm(&ratio(1, 8), &idx).unwrap().value;
        let c = rational::from_f64(0.5 / half).unwrap();
        let err = SphereSample::new(&s, g.scale(&c), &idx).unwrap_err();
        assert!(matches!(err, Error::NotNormalized { norm } if (norm - 0.5).abs() < 1e-12));
    }
}
