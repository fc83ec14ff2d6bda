//! Exact set orbits `τ^{∓n}(A)` and the tail certificates read off them.
//!
//! Three kinds of evidence are recognised, from strongest to weakest:
//! an empty iterate (every later preimage is empty too), an exactly repeated
//! iterate (the whole sequence is periodic from there on), and a geometric
//! trend, i.e. at least [`MIN_TREND_RUN`] consecutive equal ratios between
//! successive values.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::measure::{MeasurableSet, MeasureSpace};
use crate::rational::{self, Rational};
use crate::transform::Transformation;

pub const MIN_TREND_RUN: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `τ^{-n}(A)`, the level-set transport of `C_τ^n`.
    Preimage,
    /// `τ^n(A)`.
    Image,
}

/// A constant ratio between consecutive values over `run` steps starting at `start`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trend {
    #[serde(with = "rational::serde_q")]
    pub ratio: Rational,
    pub start: usize,
    pub run: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub start: usize,
    pub period: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    /// The iterate at `from` is empty, hence so is every later one.
    ExactZero {
        from: usize,
    },
    /// Iterate `start + period` equals iterate `start`.
    Periodic(Cycle),
    Geometric(Trend),
    Unresolved,
}

#[derive(Clone, Debug)]
pub struct SetOrbit {
    pub direction: Direction,
    pub sets: Vec<MeasurableSet>,
    pub measures: Vec<Rational>,
    pub zero_from: Option<usize>,
    pub cycle: Option<Cycle>,
}

impl SetOrbit {
    /// Iterates `0..=horizon`. Once a cycle is found the remaining sets are
    /// filled in from it instead of being recomputed.
    pub fn compute(
        space: &MeasureSpace,
        tau: &Transformation,
        base: &MeasurableSet,
        direction: Direction,
        horizon: usize,
    ) -> Self {
        let mut sets: Vec<MeasurableSet> = Vec::with_capacity(horizon + 1);
        let mut measures: Vec<Rational> = Vec::with_capacity(horizon + 1);
        let mut seen: HashMap<MeasurableSet, usize> = HashMap::new();
        let mut cycle = None;
        let mut current = base.clone();
        for n in 0..=horizon {
            if let Some(c) = cycle {
                let Cycle { start, period } = c;
                let k = start + (n - start) % period;
                sets.push(sets[k].clone());
                measures.push(measures[k].clone());
                continue;
            }
            if let Some(&m) = seen.get(&current) {
                cycle = Some(Cycle { start: m, period: n - m });
                sets.push(sets[m].clone());
                measures.push(measures[m].clone());
                continue;
            }
            measures.push(space.measure_unchecked(&current));
            seen.insert(current.clone(), n);
            let next = match direction {
                Direction::Preimage => tau.preimage(space, &current),
                Direction::Image => tau.image(&current),
            };
            sets.push(std::mem::replace(&mut current, next));
        }
        let zero_from = sets.iter().position(|s| s.is_empty());
        Self { direction, sets, measures, zero_from, cycle }
    }

    pub fn preimages(space: &MeasureSpace, tau: &Transformation, base: &MeasurableSet, horizon: usize) -> Self {
        Self::compute(space, tau, base, Direction::Preimage, horizon)
    }

    pub fn images(space: &MeasureSpace, tau: &Transformation, base: &MeasurableSet, horizon: usize) -> Self {
        Self::compute(space, tau, base, Direction::Image, horizon)
    }

    pub fn horizon(&self) -> usize {
        self.measures.len() - 1
    }

    /// `μ(τ^{∓n}A) / μ(A)`.
    pub fn ratios(&self) -> Vec<Rational> {
        let base = &self.measures[0];
        if base.is_zero() {
            return vec![Rational::zero(); self.measures.len()];
        }
        self.measures.iter().map(|m| m / base).collect()
    }

    pub fn tail(&self) -> Tail {
        if let Some(from) = self.zero_from {
            return Tail::ExactZero { from };
        }
        if let Some(c) = self.cycle {
            return Tail::Periodic(c);
        }
        match terminal_trend(&self.measures) {
            Some(t) => Tail::Geometric(t),
            None => Tail::Unresolved,
        }
    }

    /// Minimum over one full period, when the orbit is exactly periodic.
    pub fn periodic_min(&self) -> Option<Rational> {
        let c = self.cycle?;
        self.measures[c.start..c.start + c.period].iter().min().cloned()
    }
}

fn step_ratio(values: &[Rational], k: usize) -> Option<Rational> {
    let prev = &values[k - 1];
    if prev.is_zero() || values[k].is_zero() {
        return None;
    }
    Some(&values[k] / prev)
}

/// Longest run of equal consecutive ratios ending at the last value.
pub fn terminal_trend(values: &[Rational]) -> Option<Trend> {
    let last = values.len().checked_sub(1)?;
    if last == 0 {
        return None;
    }
    let ratio = step_ratio(values, last)?;
    let mut k = last;
    while k >= 1 && step_ratio(values, k).as_ref() == Some(&ratio) {
        k -= 1;
    }
    let run = last - k;
    (run >= MIN_TREND_RUN).then_some(Trend { ratio, start: k, run })
}

/// Longest run of equal consecutive ratios anywhere whose ratio satisfies
/// `keep`; earliest wins ties.
pub fn longest_run(values: &[Rational], keep: impl Fn(&Rational) -> bool) -> Option<Trend> {
    let mut best: Option<Trend> = None;
    let mut k = 1;
    while k < values.len() {
        let Some(ratio) = step_ratio(values, k) else {
            k += 1;
            continue;
        };
        let start = k - 1;
        let mut end = k;
        while end + 1 < values.len() && step_ratio(values, end + 1).as_ref() == Some(&ratio) {
            end += 1;
        }
        let run = end - start;
        if keep(&ratio) && best.as_ref().is_none_or(|b| run > b.run) {
            best = Some(Trend { ratio, start, run });
        }
        k = end + 1;
    }
    best.filter(|t| t.run >= MIN_TREND_RUN)
}

/// Recognises a terminal run of the form `v_n = L + c·ρ^n` with `|ρ| < 1`
/// (equal ratios between successive differences) and returns `L`.
pub fn affine_geometric_limit(values: &[Rational]) -> Option<(Rational, Trend)> {
    let diffs: Vec<Rational> = values.windows(2).map(|w| &w[1] - &w[0]).collect();
    let trend = terminal_trend(&diffs)?;
    if trend.ratio.abs() >= Rational::one() {
        return None;
    }
    let last = values.last()?;
    let step = diffs.last()?;
    let limit = last + step * &trend.ratio / (Rational::one() - &trend.ratio);
    Some((limit, trend))
}

/// First `d` with `values[d] ≤ budget`, followed by the first later `s`
/// with `values[s] ≥ level`.
pub fn dip_then_recover(values: &[Rational], budget: &Rational, level: &Rational) -> Option<(usize, usize)> {
    let d = values.iter().position(|v| v <= budget)?;
    let s = values[d + 1..].iter().position(|v| v >= level)? + d + 1;
    Some((d, s))
}
