//! Lorentz norms `‖g‖_{pq}` built from the maximal average `g**`.
//!
//! On the `k`-th plateau of `g*` the primitive `∫₀ᵗ g*` is affine, `B_k + v_k t`,
//! so for integer `q` every segment integral expands binomially into powers of
//! `t`. Other `q` fall back to double-exponential quadrature on those
//! segments in the variable `u = ln t`. The first plateau and the tail past
//! the support always have closed forms.
//!
//! Inputs are exact rationals; the real arithmetic is `f64` with an explicit
//! rounding bound carried in [`CertifiedReal::abs_error`].

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::measure::MeasureSpace;
use crate::rational::{self, format_rational, int, ln_positive, pow_real, to_f64, Rational};
use crate::rearrangement::{decreasing_rearrangement, StepFunction};
use crate::simple::SimpleFunction;

/// Relative accuracy requested from quadrature when `q` is not an integer.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Largest integer `q` handled by the binomial expansion.
const MAX_BINOMIAL_Q: u32 = 64;

/// A real with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedReal {
    pub value: f64,
    pub abs_error: f64,
}

impl CertifiedReal {
    pub fn new(value: f64, abs_error: f64) -> Self {
        Self { value, abs_error }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, abs_error: 0.0 }
    }

    pub fn zero() -> Self {
        Self::exact(0.0)
    }

    pub fn lower(&self) -> f64 {
        self.value - self.abs_error
    }

    pub fn upper(&self) -> f64 {
        self.value + self.abs_error
    }

    /// Whether the two enclosures overlap.
    pub fn agrees_with(&self, other: &CertifiedReal) -> bool {
        (self.value - other.value).abs() <= self.abs_error + other.abs_error
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            value: self.value * c,
            abs_error: self.abs_error * c.abs() + (self.value * c).abs() * 2.0 * f64::EPSILON,
        }
    }
}

impl fmt::Display for CertifiedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ± {:.1e}", self.value, self.abs_error)
    }
}

/// A Lorentz exponent: a rational or `∞`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Exponent {
    Finite(Rational),
    Infinite,
}

impl Exponent {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Exponent::Finite(r) => Some(r),
            Exponent::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Finite(r) => to_f64(r),
            Exponent::Infinite => f64::INFINITY,
        }
    }

    /// `1/e`, with `1/∞ = 0`.
    pub fn recip(&self) -> Rational {
        match self {
            Exponent::Finite(r) => r.recip(),
            Exponent::Infinite => Rational::zero(),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(r) => f.write_str(&format_rational(r)),
            Exponent::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinite),
            other => rational::parse_rational(other).map(Exponent::Finite),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// A valid pair `(p, q)` with `1 < p ≤ ∞`, `1 ≤ q ≤ ∞`, and `q = ∞` whenever `p = ∞`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawIndex", into = "RawIndex")]
pub struct LorentzIndex {
    p: Exponent,
    q: Exponent,
    p_conj: Exponent,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIndex {
    p: Exponent,
    q: Exponent,
}

impl TryFrom<RawIndex> for LorentzIndex {
    type Error = Error;

    fn try_from(raw: RawIndex) -> Result<Self> {
        LorentzIndex::new(raw.p, raw.q)
    }
}

impl From<LorentzIndex> for RawIndex {
    fn from(idx: LorentzIndex) -> Self {
        RawIndex { p: idx.p, q: idx.q }
    }
}

impl LorentzIndex {
    pub fn new(p: Exponent, q: Exponent) -> Result<Self> {
        if let Exponent::Finite(p) = &p {
            if *p <= Rational::one() {
                return Err(Error::InvalidIndex(format!("p = {} must exceed 1", format_rational(p))));
            }
        }
        if let Exponent::Finite(q) = &q {
            if *q < Rational::one() {
                return Err(Error::InvalidIndex(format!("q = {} must be at least 1", format_rational(q))));
            }
        }
        if p.is_infinite() && !q.is_infinite() {
            return Err(Error::InvalidIndex("p = inf requires q = inf".into()));
        }
        let p_conj = match &p {
            Exponent::Finite(p) => Exponent::Finite(p / (p - Rational::one())),
            Exponent::Infinite => Exponent::Finite(Rational::one()),
        };
        Ok(Self { p, q, p_conj })
    }

    /// Finite `(p, q)` from rationals.
    pub fn finite(p: Rational, q: Rational) -> Result<Self> {
        Self::new(Exponent::Finite(p), Exponent::Finite(q))
    }

    /// `(p, ∞)`.
    pub fn weak(p: Rational) -> Result<Self> {
        Self::new(Exponent::Finite(p), Exponent::Infinite)
    }

    pub fn p(&self) -> &Exponent {
        &self.p
    }

    pub fn q(&self) -> &Exponent {
        &self.q
    }

    /// `p′` with `1/p + 1/p′ = 1`.
    pub fn p_conj(&self) -> &Rational {
        self.p_conj.finite().expect("conjugate exponent of p > 1 is finite")
    }

    /// `q/p`.
    fn q_over_p(&self) -> Option<Rational> {
        Some(self.q.finite()? * self.p.recip())
    }

    fn integer_q(&self) -> Option<u32> {
        let q = self.q.finite()?;
        if !q.is_integer() {
            return None;
        }
        q.to_integer().to_u32().filter(|&q| q <= MAX_BINOMIAL_Q)
    }

    /// The binomial index `j` at which `q/p - q + j = 0`, if any.
    fn log_term(&self, q: u32) -> Option<u32> {
        let j = int(q as i64) - self.q_over_p()?;
        if j.is_integer() && !j.is_negative() && j <= int(q as i64) {
            j.to_integer().to_u32()
        } else {
            None
        }
    }
}

impl fmt::Display for LorentzIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={})", self.p, self.q)
    }
}

/// One plateau of a normalised rearrangement: `g*` equals `value` on
/// `[start, start + len)` and `∫₀ᵗ g* = base + value·t` there.
#[derive(Clone, Copy, Debug)]
struct Segment {
    start: f64,
    len: f64,
    value: f64,
    base: f64,
}

/// A rearrangement rescaled to `v_1 = 1` and total length `1`; the norm of
/// the original is `exp(ln_scale)` times the norm of this profile.
#[derive(Clone, Debug)]
struct Profile {
    segments: Vec<Segment>,
    /// `ln v_1 + (ln t_m)/p`, and the rounding error of that sum.
    ln_scale: f64,
    ln_scale_err: f64,
    /// Largest `|ln t_k|` over the breakpoints.
    max_ln_t: f64,
}

impl Profile {
    fn from_step(step: &StepFunction, idx: &LorentzIndex) -> Option<Self> {
        let v1 = step.values().first()?.clone();
        let total = step.support_length().clone();
        let integrals = step.cumulative_integrals();
        let mut segments = Vec::with_capacity(step.plateau_count());
        let mut max_ln_t: f64 = 0.0;
        for (k, (v, len)) in step.values().iter().zip(step.lengths()).enumerate() {
            let start = &step.breakpoints()[k];
            let base = &integrals[k] - v * start;
            let norm_t = &step.breakpoints()[k + 1] / &total;
            max_ln_t = max_ln_t.max(ln_positive(&norm_t).abs());
            segments.push(Segment {
                start: to_f64(&(start / &total)),
                len: to_f64(&(len / &total)),
                value: to_f64(&(v / &v1)),
                base: to_f64(&(base / (&v1 * &total))),
            });
        }
        let (ln_v, ln_t) = (ln_positive(&v1), ln_positive(&total));
        let inv_p = to_f64(&idx.p.recip());
        Some(Self {
            segments,
            ln_scale: ln_v + ln_t * inv_p,
            ln_scale_err: (ln_v.abs() + ln_t.abs() + 1.0) * 4.0 * f64::EPSILON,
            max_ln_t,
        })
    }

    fn from_levels(levels: &[(f64, f64)], idx: &LorentzIndex) -> Option<Self> {
        let mut pairs: Vec<(f64, f64)> = levels.iter().copied().filter(|(v, m)| *v > 0.0 && *m > 0.0).collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let v1 = pairs.first()?.0;
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        let mut segments: Vec<Segment> = Vec::with_capacity(pairs.len());
        let (mut start, mut integral) = (0.0, 0.0);
        for (v, m) in pairs {
            let (value, len) = (v / v1, m / total);
            match segments.last_mut() {
                Some(last) if last.value == value => last.len += len,
                _ => segments.push(Segment { start, len, value, base: integral - value * start }),
            }
            start += len;
            integral += value * len;
        }
        let inv_p = to_f64(&idx.p.recip());
        Some(Self { segments, ln_scale: v1.ln() + total.ln() * inv_p, ln_scale_err: 0.0, max_ln_t: 0.0 })
    }

    /// Returns the normalised norm and its relative error bound.
    fn norm(&self, idx: &LorentzIndex, tolerance: f64) -> (f64, f64) {
        match (idx.q.finite(), idx.integer_q()) {
            (None, _) => self.sup_norm(idx),
            (Some(_), Some(q)) => self.binomial_norm(idx, q),
            (Some(q), None) => self.quadrature_norm(idx, to_f64(q), tolerance),
        }
    }

    /// `sup_t t^{1/p} g**(t)`. On each plateau `t^{1/p-1}(B + v t)` has a single
    /// interior critical point, a minimum, so the maximum sits at a breakpoint.
    fn sup_norm(&self, idx: &LorentzIndex) -> (f64, f64) {
        if idx.p.is_infinite() {
            return (1.0, 2.0 * f64::EPSILON);
        }
        let e = to_f64(&idx.p.recip()) - 1.0;
        let best = self
            .segments
            .iter()
            .map(|s| {
                let end = s.start + s.len;
                (s.base + s.value * end) * end.powf(e)
            })
            .fold(0.0, f64::max);
        (best, (8.0 + self.max_ln_t + self.segments.len() as f64) * f64::EPSILON)
    }

    fn binomial_norm(&self, idx: &LorentzIndex, q: u32) -> (f64, f64) {
        let alpha = to_f64(&idx.q_over_p().unwrap());
        let qf = q as f64;
        let log_j = idx.log_term(q);
        let binom = binomials(q);
        let first = &self.segments[0];
        let mut total = first.len.powf(alpha);
        let mut err = total * (4.0 + alpha * (1.0 + self.max_ln_t)) * f64::EPSILON;
        for s in &self.segments[1..] {
            let ln_ratio = (s.len / s.start).ln_1p();
            let ln_a = s.start.ln();
            for j in 0..=q {
                let coef = binom[j as usize] * s.base.powi((q - j) as i32) * s.value.powi(j as i32);
                if coef == 0.0 {
                    continue;
                }
                let e = alpha - qf + j as f64;
                let piece = if Some(j) == log_j { ln_ratio } else { (e * ln_a).exp() * (e * ln_ratio).exp_m1() / e };
                let term = alpha * coef * piece;
                total += term;
                err += term.abs() * (16.0 + 2.0 * qf + 2.0 * e.abs() * (ln_a.abs() + ln_ratio + 1.0)) * f64::EPSILON;
            }
        }
        let tail = self.tail(alpha, qf);
        total += tail;
        err += tail * (8.0 + 2.0 * qf) * f64::EPSILON;
        err += total * (2.0 * qf + self.segments.len() as f64) * f64::EPSILON;
        let norm = total.powf(1.0 / qf);
        (norm, err / total / qf + 2.0 * f64::EPSILON)
    }

    fn quadrature_norm(&self, idx: &LorentzIndex, q: f64, tolerance: f64) -> (f64, f64) {
        let alpha = to_f64(&idx.q_over_p().unwrap());
        let first = &self.segments[0];
        let closed = first.len.powf(alpha) + self.tail(alpha, q);
        let target = 1e-3 * tolerance * closed / self.segments.len() as f64;
        let mut total = closed;
        let mut err = closed * (8.0 + 2.0 * q * (1.0 + self.max_ln_t)) * f64::EPSILON;
        for s in &self.segments[1..] {
            let (lo, hi) = (s.start.ln(), (s.start + s.len).ln());
            let f = |u: f64| alpha * (alpha * u).exp() * (s.base * (-u).exp() + s.value).powf(q);
            let out = quadrature::integrate(f, lo, hi, target);
            total += out.integral;
            err += 10.0 * out.error_estimate + out.integral.abs() * (16.0 + 4.0 * q) * f64::EPSILON;
        }
        let norm = total.powf(1.0 / q);
        (norm, err / total / q + 2.0 * f64::EPSILON)
    }

    /// `(q/p)∫_{t_m}^∞ t^{q/p-q-1} S^q dt` with `t_m = 1`.
    fn tail(&self, alpha: f64, q: f64) -> f64 {
        let last = self.segments.last().unwrap();
        let s = last.base + last.value * (last.start + last.len);
        alpha / (q - alpha) * s.powf(q)
    }
}

fn binomials(q: u32) -> Vec<f64> {
    let mut row = vec![1.0f64; q as usize + 1];
    for j in 1..q as usize {
        row[j] = row[j - 1] * (q as usize - j + 1) as f64 / j as f64;
    }
    row
}

/// Norm of a rearrangement with an explicit quadrature tolerance.
pub fn step_norm_with_tolerance(step: &StepFunction, idx: &LorentzIndex, tolerance: f64) -> CertifiedReal {
    let Some(profile) = Profile::from_step(step, idx) else {
        return CertifiedReal::zero();
    };
    let (unit, rel) = profile.norm(idx, tolerance);
    let value = unit * profile.ln_scale.exp();
    let rel = rel + profile.ln_scale_err + 2.0 * f64::EPSILON;
    CertifiedReal::new(value, value * rel * 4.0)
}

pub fn step_norm(step: &StepFunction, idx: &LorentzIndex) -> CertifiedReal {
    step_norm_with_tolerance(step, idx, DEFAULT_TOLERANCE)
}

/// `‖g‖_{pq}`.
pub fn lorentz_norm(space: &MeasureSpace, g: &SimpleFunction, idx: &LorentzIndex) -> Result<CertifiedReal> {
    Ok(step_norm(&decreasing_rearrangement(space, g)?, idx))
}

pub fn lorentz_norm_with_tolerance(
    space: &MeasureSpace,
    g: &SimpleFunction,
    idx: &LorentzIndex,
    tolerance: f64,
) -> Result<CertifiedReal> {
    Ok(step_norm_with_tolerance(&decreasing_rearrangement(space, g)?, idx, tolerance))
}

/// Floating-point norm of a function given by its `(value, mass)` levels,
/// without error tracking. Used by search loops that re-verify exactly.
pub fn levels_norm_f64(levels: &[(f64, f64)], idx: &LorentzIndex) -> f64 {
    match Profile::from_levels(levels, idx) {
        Some(profile) => profile.norm(idx, DEFAULT_TOLERANCE).0 * profile.ln_scale.exp(),
        None => 0.0,
    }
}

/// `‖χ_A‖_{pq} = (p′)^{1/q} μ(A)^{1/p}`, or `μ(A)^{1/p}` when `q = ∞`.
pub fn indicator_norm(measure: &Rational, idx: &LorentzIndex) -> Result<CertifiedReal> {
    if !measure.is_positive() {
        return Err(Error::NonPositiveMeasure);
    }
    let inv_p = to_f64(&idx.p.recip());
    let ln_mu = ln_positive(measure);
    let ln_conj = match idx.q.finite() {
        Some(q) => ln_positive(idx.p_conj()) / to_f64(q),
        None => 0.0,
    };
    let value = (ln_conj + ln_mu * inv_p).exp();
    if measure.is_one() && ln_conj == 0.0 {
        return Ok(CertifiedReal::exact(1.0));
    }
    let rel = (ln_conj.abs() + ln_mu.abs() * inv_p + 4.0) * 4.0 * f64::EPSILON;
    Ok(CertifiedReal::new(value, value * rel))
}

/// `‖χ_A‖_{pq}^q = p′ μ(A)^{q/p}` for finite `q`.
pub fn indicator_norm_power(measure: &Rational, idx: &LorentzIndex) -> Option<f64> {
    let q = idx.q.finite()?;
    Some(to_f64(idx.p_conj()) * pow_real(measure, to_f64(q) * to_f64(&idx.p.recip())))
}
