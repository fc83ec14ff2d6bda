//! Slow, direct re-implementations used to check the analytic paths.
//!
//! Nothing here shares code with the rearrangement, norm or analyzer
//! modules beyond the basic data types.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::atom::AtomId;
use crate::error::{Error, Result};
use crate::expansivity::positively_expansive;
use crate::measure::{MeasurableSet, MeasureSpace};
use crate::norm::{lorentz_norm, CertifiedReal, LorentzIndex};
use crate::operators::{compose_apply, Classification, CompositionOperator, Thresholds};
use crate::rational::{format_rational, to_f64, Rational};
use crate::rearrangement::StepFunction;
use crate::simple::SimpleFunction;
use crate::transform::Transformation;
use crate::verdict::Status;

/// Largest number of subsets [`criterion_by_definition`] will enumerate.
pub const SUBSET_GUARD: u128 = 10_000;
pub const MAX_SET_SIZE: usize = 4;
pub const MIN_MESH: usize = 64;

/// One comparison between an analytic quantity and its oracle counterpart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub analytic: String,
    pub oracle: String,
    pub discrepancy: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl OracleReport {
    fn exact(quantity: impl Into<String>, analytic: &Rational, oracle: &Rational) -> Self {
        let diff = to_f64(&(analytic - oracle)).abs();
        Self {
            quantity: quantity.into(),
            analytic: format_rational(analytic),
            oracle: format_rational(oracle),
            discrepancy: diff,
            tolerance: 0.0,
            pass: analytic == oracle,
        }
    }

    fn real(quantity: impl Into<String>, analytic: CertifiedReal, oracle: CertifiedReal) -> Self {
        let discrepancy = (analytic.value - oracle.value).abs();
        let tolerance = analytic.abs_error + oracle.abs_error;
        Self {
            quantity: quantity.into(),
            analytic: analytic.to_string(),
            oracle: oracle.to_string(),
            discrepancy,
            tolerance,
            pass: discrepancy <= tolerance,
        }
    }
}

/// `g*` by sorting the support atoms by value, largest first, and
/// accumulating weights.
pub fn rearrangement_by_sort(space: &MeasureSpace, g: &SimpleFunction) -> Result<StepFunction> {
    let mut atoms: Vec<(AtomId, Rational, Rational)> = Vec::with_capacity(g.len());
    for (a, v) in g.entries() {
        let w = space.weight(a).ok_or(Error::AtomNotInSpace(*a))?;
        atoms.push((*a, v.clone(), w));
    }
    atoms.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    let mut breakpoints = vec![Rational::zero()];
    let mut values: Vec<Rational> = Vec::new();
    let mut t = Rational::zero();
    for (_, v, w) in atoms {
        t += w;
        if values.last() == Some(&v) {
            *breakpoints.last_mut().unwrap() = t.clone();
        } else {
            values.push(v);
            breakpoints.push(t.clone());
        }
    }
    Ok(StepFunction::from_parts(breakpoints, values))
}

/// Composite Simpson sum of `f` over `[a, b]` with `n` (even) panels.
fn simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|k| f(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + inner + f(b)) * h / 3.0
}

/// Simpson value with a Richardson error estimate from the half mesh.
fn simpson_with_error(f: &impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (f64, f64) {
    let fine = simpson(f, a, b, n);
    let coarse = simpson(f, a, b, n / 2);
    let rounding = fine.abs() * n as f64 * f64::EPSILON;
    (fine, 10.0 * (fine - coarse).abs() / 15.0 + rounding)
}

/// `‖g‖_{pq}` for finite `q` by integrating `(q/p)(t^{1/p} g**(t))^q dt/t`
/// numerically on each plateau, `mesh` panels per plateau.
///
/// On the first plateau the substitution `t = u^b` with `b = 4p/q` turns the
/// integrand into a cubic. Later plateaus are integrated in `ln t`. The part
/// after the support is integrated in closed form.
pub fn norm_by_quadrature(
    space: &MeasureSpace,
    g: &SimpleFunction,
    idx: &LorentzIndex,
    mesh: usize,
) -> Result<CertifiedReal> {
    let p = idx.p().finite().ok_or_else(|| Error::InvalidIndex("quadrature needs finite p".into()))?;
    let q = idx.q().finite().ok_or_else(|| Error::InvalidIndex("quadrature needs finite q".into()))?;
    if mesh < MIN_MESH {
        return Err(Error::InvalidIndex(format!("mesh {mesh} is below {MIN_MESH}")));
    }
    let mesh = mesh + mesh % 2;
    let step = rearrangement_by_sort(space, g)?;
    if step.is_zero() {
        return Ok(CertifiedReal::zero());
    }
    let (p, q) = (to_f64(p), to_f64(q));
    let breaks: Vec<f64> = step.breakpoints().iter().map(to_f64).collect();
    let values: Vec<f64> = step.values().iter().map(to_f64).collect();

    let (mut total, mut error) = (0.0f64, 0.0f64);
    // First plateau: g** = v_1, integrand (q/p) v_1^q t^{q/p-1}.
    let b = 4.0 * p / q;
    let first = |u: f64| (q / p) * values[0].powf(q) * b * u.powi(3);
    let (s, e) = simpson_with_error(&first, 0.0, breaks[1].powf(1.0 / b), mesh);
    total += s;
    error += e;
    // Later plateaus: g**(t) = (S_{k-1} + v_k (t - t_{k-1})) / t.
    let mut integral = values[0] * breaks[1];
    for k in 1..values.len() {
        let (start, v, base) = (breaks[k], values[k], integral);
        let f = |u: f64| {
            let t = u.exp();
            let avg = (base + v * (t - start)) / t;
            (q / p) * (t.powf(1.0 / p) * avg).powf(q)
        };
        let (s, e) = simpson_with_error(&f, start.ln(), breaks[k + 1].ln(), mesh);
        total += s;
        error += e;
        integral += v * (breaks[k + 1] - start);
    }
    // After the support g** = S/t.
    let end = *breaks.last().unwrap();
    let tail = (q / p) * integral.powf(q) * end.powf(q / p - q) / (q - q / p);
    total += tail;
    error += tail * 8.0 * f64::EPSILON;

    let norm = total.powf(1.0 / q);
    let abs_error = norm * (error / total / q + 8.0 * f64::EPSILON);
    Ok(CertifiedReal::new(norm, abs_error))
}

/// Norm comparison in report form.
pub fn compare_norms(
    space: &MeasureSpace,
    g: &SimpleFunction,
    idx: &LorentzIndex,
    mesh: usize,
) -> Result<OracleReport> {
    let analytic = lorentz_norm(space, g, idx)?;
    let oracle = norm_by_quadrature(space, g, idx, mesh)?;
    Ok(OracleReport::real(format!("norm {idx}"), analytic, oracle))
}

/// Rearrangement comparison in report form: breakpoints and values must match exactly.
pub fn compare_rearrangements(space: &MeasureSpace, g: &SimpleFunction) -> Result<Vec<OracleReport>> {
    let analytic = crate::rearrangement::decreasing_rearrangement(space, g)?;
    let oracle = rearrangement_by_sort(space, g)?;
    if analytic.plateau_count() != oracle.plateau_count() {
        return Ok(vec![OracleReport::exact(
            "plateau count",
            &Rational::from_integer(analytic.plateau_count().into()),
            &Rational::from_integer(oracle.plateau_count().into()),
        )]);
    }
    let breaks = analytic
        .breakpoints()
        .iter()
        .zip(oracle.breakpoints())
        .enumerate()
        .map(|(k, (a, o))| OracleReport::exact(format!("breakpoint {k}"), a, o));
    let values = analytic
        .values()
        .iter()
        .zip(oracle.values())
        .enumerate()
        .map(|(k, (a, o))| OracleReport::exact(format!("value {}", k + 1), a, o));
    Ok(breaks.chain(values).collect())
}

/// `Cⁿg` for `n = 0..=horizon` by evaluating `g(τⁿ(a))` for each of the
/// first `scan` atoms. Only atoms inside the scan carry values.
pub fn direct_orbit(
    space: &MeasureSpace,
    tau: &Transformation,
    g: &SimpleFunction,
    horizon: usize,
    scan: usize,
) -> Result<Vec<SimpleFunction>> {
    tau.check_compatible(space)?;
    g.check_in(space)?;
    let atoms = space.window(scan)?.atoms;
    let mut points = atoms.clone();
    let mut out = Vec::with_capacity(horizon + 1);
    for n in 0..=horizon {
        if n > 0 {
            points.iter_mut().for_each(|x| *x = tau.apply(x));
        }
        let entries = atoms.iter().zip(&points).map(|(a, x)| (*a, g.value(x)));
        out.push(SimpleFunction::new(entries)?);
    }
    Ok(out)
}

/// `(value, measure of the level set)` pairs, largest value first.
pub fn level_measures(space: &MeasureSpace, g: &SimpleFunction) -> Result<Vec<(Rational, Rational)>> {
    let mut levels: Vec<(Rational, Rational)> = Vec::new();
    for (a, v) in g.entries() {
        let w = space.weight(a).ok_or(Error::AtomNotInSpace(*a))?;
        match levels.iter_mut().find(|(x, _)| x == v) {
            Some((_, m)) => *m += w,
            None => levels.push((v.clone(), w)),
        }
    }
    levels.sort_by(|x, y| y.0.cmp(&x.0));
    Ok(levels)
}

/// Orbit norms of `M_θ^n χ_A` as natural logarithms, for atoms with
/// weights `weights` and multipliers `theta` (entries of `A` only).
/// Values are rescaled at each step so that nothing under- or overflows.
pub fn multiplication_log_norms(weights: &[f64], theta: &[f64], idx: &LorentzIndex, horizon: usize) -> Vec<f64> {
    (0..=horizon)
        .map(|n| {
            let logs: Vec<f64> = theta.iter().map(|t| if n == 0 { 0.0 } else { n as f64 * t.ln() }).collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if top == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            let levels: Vec<(f64, f64)> = logs.iter().zip(weights).map(|(l, w)| ((l - top).exp(), *w)).collect();
            top + crate::norm::levels_norm_f64(&levels, idx).ln()
        })
        .collect()
}

/// The rule of [`crate::operators::classify_relative`], applied to log norms.
pub fn classify_log_norms(log_norms: &[f64], thresholds: Thresholds) -> Classification {
    let base = log_norms[0];
    let min = log_norms.iter().copied().fold(f64::INFINITY, f64::min);
    let max = log_norms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dips = min <= base + thresholds.low.ln();
    if dips && max >= base + thresholds.high.ln() {
        Classification::IrregularAtHorizon
    } else if dips && max >= base + 0.5f64.ln() {
        Classification::SemiIrregularAtHorizon
    } else {
        Classification::Regular
    }
}

/// What a directly computed orbit of norms shows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitEvidence {
    /// The vector repeats exactly or becomes zero.
    Bounded,
    /// The last five steps multiply the norm by the same factor above one.
    Grows,
    Undecided,
}

fn binomial_sum(n: usize, k: usize) -> u128 {
    let mut total = 0u128;
    let mut c = 1u128;
    for j in 1..=k.min(n) {
        c = c * (n - j + 1) as u128 / j as u128;
        total += c;
    }
    total
}

fn subsets_up_to(atoms: &[AtomId], k: usize) -> Vec<MeasurableSet> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    let mut all = Vec::new();
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &out {
            let from = s.last().map_or(0, |l| l + 1);
            for i in from..atoms.len() {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        all.extend(next.iter().map(|s| s.iter().map(|&i| atoms[i]).collect::<MeasurableSet>()));
        out = next;
    }
    all
}

/// Orbits of normalized indicators of every subset of the first `window`
/// atoms with at most `max_set_size` elements, iterated directly, checked
/// against [`positively_expansive`].
///
/// A report fails when the analyzer confirmed expansivity but an orbit is
/// provably bounded.
/// When the analyzer refuted it, the check fails only if every orbit grows.
pub fn criterion_by_definition(
    space: &MeasureSpace,
    tau: &Transformation,
    idx: &LorentzIndex,
    max_set_size: usize,
    horizon: usize,
    window: usize,
) -> Result<Vec<OracleReport>> {
    if max_set_size > MAX_SET_SIZE {
        return Err(Error::SetSizeTooLarge { size: max_set_size, max: MAX_SET_SIZE });
    }
    let atoms = space.window(window)?.atoms;
    let count = binomial_sum(atoms.len(), max_set_size);
    if count > SUBSET_GUARD {
        return Err(Error::SubsetExplosion { count, limit: SUBSET_GUARD });
    }
    let verdict = positively_expansive(space, tau, horizon, window)?;
    let op = CompositionOperator::new(space.clone(), tau.clone())?;

    let mut evidence = Vec::new();
    for set in subsets_up_to(&atoms, max_set_size) {
        let chi = SimpleFunction::indicator(&set);
        let scale = lorentz_norm(space, &chi, idx)?.value;
        let mut norms = Vec::with_capacity(horizon + 1);
        let mut seen: Vec<SimpleFunction> = Vec::new();
        let mut bounded = false;
        for n in 0..=horizon {
            let g = compose_apply(&op, &chi, n)?;
            if g.is_zero() || seen.contains(&g) {
                bounded = true;
                break;
            }
            norms.push(lorentz_norm(space, &g, idx)?.value / scale);
            seen.push(g);
        }
        let grows = !bounded && norms.len() > 5 && {
            let tail = &norms[norms.len() - 6..];
            let f = tail[1] / tail[0];
            f > 1.0 + 1e-9 && tail.windows(2).all(|w| ((w[1] / w[0]) / f - 1.0).abs() < 1e-9)
        };
        let ev = if bounded {
            OrbitEvidence::Bounded
        } else if grows {
            OrbitEvidence::Grows
        } else {
            OrbitEvidence::Undecided
        };
        evidence.push((set, ev, norms));
    }

    let all_grow = evidence.iter().all(|(_, e, _)| *e == OrbitEvidence::Grows);
    let status = format!("{:?}", verdict.status);
    Ok(evidence
        .into_iter()
        .map(|(set, ev, norms)| {
            let contradicted = match verdict.status {
                Status::Confirmed => ev == OrbitEvidence::Bounded,
                Status::Refuted => all_grow,
                Status::InconclusiveAtHorizon => false,
            };
            let factor = match norms.as_slice() {
                [.., a, b] if *a > 0.0 => b / a,
                _ => f64::NAN,
            };
            let names: Vec<String> = set.atoms().map(|a| a.to_string()).collect();
            OracleReport {
                quantity: format!("orbit of normalized indicator of {{{}}}", names.join(", ")),
                analytic: status.clone(),
                oracle: format!("{ev:?}, last step factor {factor:.6}"),
                discrepancy: if contradicted { 1.0 } else { 0.0 },
                tolerance: 0.0,
                pass: !contradicted,
            }
        })
        .collect())
}

/// `true` when every report passes.
pub fn all_pass(reports: &[OracleReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
