//! Distribution functions, decreasing rearrangements and maximal averages.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::MeasureSpace;
use crate::rational::{self, Rational};
use crate::simple::SimpleFunction;

/// A nonincreasing step function on `[0, ∞)`: value `values[k]` on
/// `[breakpoints[k], breakpoints[k+1])` and zero after the last breakpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepFunction {
    #[serde(with = "rational::serde_q::vec")]
    breakpoints: Vec<Rational>,
    #[serde(with = "rational::serde_q::vec")]
    values: Vec<Rational>,
}

impl Default for StepFunction {
    fn default() -> Self {
        Self { breakpoints: vec![Rational::zero()], values: Vec::new() }
    }
}

impl StepFunction {
    /// Builds the rearrangement of a distribution given as `(value, mass)`
    /// pairs. Values may come in any order and repeat; zero masses and zero
    /// values are skipped.
    pub fn from_levels<'a>(levels: impl IntoIterator<Item = (&'a Rational, &'a Rational)>) -> Self {
        let mut pairs: Vec<(Rational, Rational)> = levels
            .into_iter()
            .filter(|(v, m)| v.is_positive() && m.is_positive())
            .map(|(v, m)| (v.clone(), m.clone()))
            .collect();
        pairs.sort_by(|a, b| b.0.cmp(&a.0));
        let mut step = Self::default();
        let mut end = Rational::zero();
        for (v, m) in pairs {
            end += m;
            if step.values.last() == Some(&v) {
                *step.breakpoints.last_mut().unwrap() = end.clone();
            } else {
                step.values.push(v);
                step.breakpoints.push(end.clone());
            }
        }
        step
    }

    /// Unchecked constructor for callers that build plateaus themselves.
    pub(crate) fn from_parts(breakpoints: Vec<Rational>, values: Vec<Rational>) -> Self {
        debug_assert_eq!(breakpoints.len(), values.len() + 1);
        Self { breakpoints, values }
    }

    /// `0 = t_0 < t_1 < … < t_m`.
    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    /// Plateau values `v_1 > … > v_m`.
    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn plateau_count(&self) -> usize {
        self.values.len()
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    /// Plateau lengths `t_k - t_{k-1}`.
    pub fn lengths(&self) -> impl Iterator<Item = Rational> + '_ {
        self.breakpoints.windows(2).map(|w| &w[1] - &w[0])
    }

    /// Measure of the support.
    pub fn support_length(&self) -> &Rational {
        self.breakpoints.last().unwrap()
    }

    /// `g*(t)` for `t ≥ 0`.
    pub fn eval(&self, t: &Rational) -> Rational {
        let k = self.breakpoints[1..].partition_point(|b| b <= t);
        self.values.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    /// Lebesgue measure of `{t : g*(t) > λ}`.
    pub fn distribution(&self, lambda: &Rational) -> Rational {
        let k = self.values.partition_point(|v| v > lambda);
        self.breakpoints[k].clone()
    }

    /// `∫₀ᵗ g*`.
    pub fn integral_to(&self, t: &Rational) -> Rational {
        let mut total = Rational::zero();
        for (k, v) in self.values.iter().enumerate() {
            let (a, b) = (&self.breakpoints[k], &self.breakpoints[k + 1]);
            if t <= a {
                break;
            }
            let right = if t < b { t } else { b };
            total += v * (right - a);
        }
        total
    }

    /// Running integrals `S_k = ∫₀^{t_k} g*`, starting with `S_0 = 0`.
    pub fn cumulative_integrals(&self) -> Vec<Rational> {
        let mut out = vec![Rational::zero()];
        for (v, len) in self.values.iter().zip(self.lengths()) {
            let next = out.last().unwrap() + v * len;
            out.push(next);
        }
        out
    }
}

/// `μ({x : |g(x)| > λ})`.
pub fn distribution_function(space: &MeasureSpace, g: &SimpleFunction, lambda: &Rational) -> Result<Rational> {
    if lambda.is_negative() {
        return Err(Error::NonPositiveTime);
    }
    g.check_in(space)?;
    Ok(g.entries().filter(|(_, v)| *v > lambda).map(|(a, _)| space.weight(a).unwrap()).sum())
}

pub fn decreasing_rearrangement(space: &MeasureSpace, g: &SimpleFunction) -> Result<StepFunction> {
    g.check_in(space)?;
    let levels: Vec<(Rational, Rational)> =
        g.level_sets().into_iter().map(|(v, set)| (v, space.measure_unchecked(&set))).collect();
    Ok(StepFunction::from_levels(levels.iter().map(|(v, m)| (v, m))))
}

/// `g**(t) = (1/t) ∫₀ᵗ g*`.
pub fn maximal_average(rearr: &StepFunction, t: &Rational) -> Result<Rational> {
    if !t.is_positive() {
        return Err(Error::NonPositiveTime);
    }
    Ok(rearr.integral_to(t) / t)
}
