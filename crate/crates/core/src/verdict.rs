//! Finite-horizon verdicts and the replayable evidence attached to them.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::atom::AtomId;
use crate::measure::{MeasurableSet, MeasureSpace};
use crate::rational::{self, format_rational, Rational};
use crate::sequence::{Direction, SetOrbit, Trend};
use crate::transform::Transformation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Confirmed,
    Refuted,
    InconclusiveAtHorizon,
}

/// How a recorded sequence is derived from the measures `m_n` of a set orbit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    /// `m_n`.
    Measure,
    /// `m_n / m_0`.
    Ratio,
    /// `max_{k<n} m_k / m_n`, with `0` at `n = 0`.
    PriorMaxRatio,
}

impl SequenceKind {
    pub fn derive(self, orbit: &SetOrbit) -> Vec<Rational> {
        match self {
            SequenceKind::Measure => orbit.measures.clone(),
            SequenceKind::Ratio => orbit.ratios(),
            SequenceKind::PriorMaxRatio => prior_max_ratios(&orbit.measures),
        }
    }
}

/// `max_{k<n} v_k / v_n` for `n ≥ 1`, `0` at `n = 0` and wherever `v_n = 0`.
pub fn prior_max_ratios(values: &[Rational]) -> Vec<Rational> {
    let mut out = Vec::with_capacity(values.len());
    let mut best: Option<&Rational> = None;
    for v in values {
        out.push(match best {
            Some(b) if !v.is_zero() => b / v,
            _ => Rational::zero(),
        });
        if best.is_none_or(|b| v > b) {
            best = Some(v);
        }
    }
    out
}

/// An exact sequence derived from the orbit of `sets[set]` for `n = 0..values.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasureSequence {
    pub label: String,
    /// Index into [`Witness::sets`].
    pub set: usize,
    pub direction: Direction,
    pub kind: SequenceKind,
    #[serde(with = "rational::serde_q::vec")]
    pub values: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    #[serde(with = "rational::serde_q")]
    pub value: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Collision {
    pub first: AtomId,
    pub second: AtomId,
    pub image: AtomId,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub sets: Vec<MeasurableSet>,
    pub sequences: Vec<MeasureSequence>,
    pub scalars: Vec<NamedValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub collision: Option<Collision>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub horizon: usize,
    pub summary: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trend: Option<Trend>,
}

/// First disagreement found while replaying a witness.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplayMismatch {
    pub what: String,
}

impl std::fmt::Display for ReplayMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.what)
    }
}

impl Witness {
    pub fn add_set(&mut self, set: MeasurableSet) -> usize {
        if let Some(i) = self.sets.iter().position(|s| *s == set) {
            return i;
        }
        self.sets.push(set);
        self.sets.len() - 1
    }

    pub fn add_orbit(&mut self, label: impl Into<String>, orbit: &SetOrbit, kind: SequenceKind) {
        let set = self.add_set(orbit.sets[0].clone());
        self.sequences.push(MeasureSequence {
            label: label.into(),
            set,
            direction: orbit.direction,
            kind,
            values: kind.derive(orbit),
        });
    }

    pub fn sequence(&self, label: &str) -> Option<&MeasureSequence> {
        self.sequences.iter().find(|s| s.label == label)
    }

    pub fn scalar(&mut self, name: impl Into<String>, value: Rational) {
        self.scalars.push(NamedValue { name: name.into(), value });
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn scalar_value(&self, name: &str) -> Option<&Rational> {
        self.scalars.iter().find(|s| s.name == name).map(|s| &s.value)
    }

    /// Recomputes every recorded sequence and collision from the sets alone.
    pub fn replay(&self, space: &MeasureSpace, tau: &Transformation) -> Result<(), ReplayMismatch> {
        for set in &self.sets {
            if let Err(e) = space.check_set(set) {
                return Err(ReplayMismatch { what: e.to_string() });
            }
        }
        for seq in &self.sequences {
            let base = self.sets.get(seq.set).ok_or_else(|| ReplayMismatch {
                what: format!("sequence {:?} points at missing set {}", seq.label, seq.set),
            })?;
            if seq.values.is_empty() {
                continue;
            }
            let horizon = seq.values.len() - 1;
            let orbit = SetOrbit::compute(space, tau, base, seq.direction, horizon);
            let fresh = seq.kind.derive(&orbit);
            if let Some(n) = (0..=horizon).find(|&n| fresh[n] != seq.values[n]) {
                return Err(ReplayMismatch {
                    what: format!(
                        "sequence {:?} at n={n}: recorded {}, recomputed {}",
                        seq.label,
                        format_rational(&seq.values[n]),
                        format_rational(&fresh[n])
                    ),
                });
            }
        }
        if let Some(c) = &self.collision {
            let (a, b) = (tau.apply(&c.first), tau.apply(&c.second));
            if c.first == c.second || a != c.image || b != c.image {
                return Err(ReplayMismatch { what: format!("collision {} / {} does not replay", c.first, c.second) });
            }
        }
        Ok(())
    }
}

impl Verdict {
    pub fn new(status: Status, horizon: usize, summary: impl Into<String>) -> Self {
        Self { status, horizon, summary: summary.into(), witness: None, trend: None }
    }

    pub fn with_witness(mut self, witness: Witness) -> Self {
        self.witness = Some(witness);
        self
    }

    pub fn with_trend(mut self, trend: Option<Trend>) -> Self {
        self.trend = trend;
        self
    }

    pub fn is(&self, status: Status) -> bool {
        self.status == status
    }
}
