//! Positive, uniform and two-sided expansivity of composition operators,
//! decided from the exact preimage and image measures of single atoms.
//!
//! For a set `A` the ratio `μ(τ^{-n}A)/μ(A)` is a weighted average of the
//! ratios of its atoms, so suprema and infima over all sets of finite
//! positive measure are attained on atoms.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::atom::AtomId;
use crate::error::{Error, Result};
use crate::measure::{MeasurableSet, MeasureSpace};
use crate::norm::LorentzIndex;
use crate::operators::{orbit_trace, Operator, SphereSample, SPHERE_TOLERANCE};
use crate::rational::{self, int, Rational};
use crate::sequence::{affine_geometric_limit, terminal_trend, Cycle, Direction, SetOrbit, Trend};
use crate::transform::Transformation;
use crate::verdict::{SequenceKind, Status, Verdict, Witness};

/// Atoms recorded in a confirming witness.
const WITNESS_ATOMS: usize = 8;

/// Long-run behaviour of one ratio sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Growth {
    Diverges {
        trend: Trend,
    },
    Vanishes {
        from: usize,
    },
    Periodic {
        cycle: Cycle,
    },
    /// Geometric with ratio at most one.
    Shrinks {
        trend: Trend,
    },
    Converges {
        #[serde(with = "rational::serde_q")]
        limit: Rational,
    },
    Unresolved,
}

impl Growth {
    pub fn of(orbit: &SetOrbit) -> Growth {
        if let Some(from) = orbit.zero_from {
            return Growth::Vanishes { from };
        }
        if let Some(cycle) = orbit.cycle {
            return Growth::Periodic { cycle };
        }
        Self::of_values(&orbit.measures)
    }

    pub fn of_values(values: &[Rational]) -> Growth {
        if let Some(trend) = terminal_trend(values) {
            return if trend.ratio > Rational::one() { Growth::Diverges { trend } } else { Growth::Shrinks { trend } };
        }
        if values.last().is_some_and(|v| v.is_zero()) {
            return Growth::Vanishes { from: values.iter().rposition(|v| !v.is_zero()).map_or(0, |k| k + 1) };
        }
        match affine_geometric_limit(values) {
            Some((limit, _)) => Growth::Converges { limit },
            None => Growth::Unresolved,
        }
    }

    pub fn diverges(&self) -> bool {
        matches!(self, Growth::Diverges { .. })
    }

    pub fn bounded(&self) -> bool {
        !matches!(self, Growth::Diverges { .. } | Growth::Unresolved)
    }

    pub fn trend(&self) -> Option<&Trend> {
        match self {
            Growth::Diverges { trend } | Growth::Shrinks { trend } => Some(trend),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            Growth::Diverges { trend } => format!("grows by {} per step", rational::format_rational(&trend.ratio)),
            Growth::Vanishes { from } => format!("is empty from n = {from}"),
            Growth::Periodic { cycle } => format!("repeats with period {} from n = {}", cycle.period, cycle.start),
            Growth::Shrinks { trend } => format!("changes by {} per step", rational::format_rational(&trend.ratio)),
            Growth::Converges { limit } => format!("converges to {}", rational::format_rational(limit)),
            Growth::Unresolved => "is undecided".into(),
        }
    }
}

/// Atoms examined by the per-atom analyses. On infinite spaces the window
/// is capped at half the horizon so that every examined atom has time to
/// show its asymptotic trend.
pub fn examined_atoms(space: &MeasureSpace, window: usize, horizon: usize) -> Result<Vec<AtomId>> {
    let size = match space.atom_count() {
        Some(n) => window.min(n),
        None => window.min((horizon / 2).max(1)),
    };
    Ok(space.window(size)?.atoms)
}

fn require_horizon(horizon: usize) -> Result<()> {
    if horizon < 4 {
        return Err(Error::HorizonTooShort { min: 4, got: horizon });
    }
    Ok(())
}

fn require_inverse(space: &MeasureSpace, tau: &Transformation) -> Result<()> {
    if tau.is_invertible(space) {
        Ok(())
    } else {
        Err(Error::NotInvertible)
    }
}

/// Exact ratio sequences of one atom, `n = 1..=horizon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub atom: AtomId,
    /// `μ(τ^{-n}{a}) / μ({a})`.
    #[serde(with = "rational::serde_q::vec")]
    pub forward: Vec<Rational>,
    /// `μ(τⁿ{a}) / μ({a})`, when `τ` is invertible.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_vec")]
    pub backward: Option<Vec<Rational>>,
    pub forward_growth: Growth,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backward_growth: Option<Growth>,
}

mod opt_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::rational::{format_rational, parse_rational, Rational};

    pub fn serialize<S: Serializer>(v: &Option<Vec<Rational>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.iter().map(format_rational).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Rational>>, D::Error> {
        let texts = Option::<Vec<String>>::deserialize(d)?;
        texts.map(|v| v.iter().map(|t| parse_rational(t).map_err(serde::de::Error::custom)).collect()).transpose()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomClassTable {
    pub horizon: usize,
    pub records: Vec<AtomRecord>,
}

impl AtomClassTable {
    /// Builds the table over `atoms`; backward ratios need `τ` invertible.
    pub fn build(space: &MeasureSpace, tau: &Transformation, atoms: &[AtomId], horizon: usize, backward: bool) -> Self {
        let records = atoms
            .iter()
            .map(|a| {
                let set = MeasurableSet::singleton(*a);
                let fwd = SetOrbit::preimages(space, tau, &set, horizon);
                let bwd = backward.then(|| SetOrbit::images(space, tau, &set, horizon));
                AtomRecord {
                    atom: *a,
                    forward: fwd.ratios()[1..].to_vec(),
                    backward: bwd.as_ref().map(|o| o.ratios()[1..].to_vec()),
                    forward_growth: Growth::of(&fwd),
                    backward_growth: bwd.as_ref().map(Growth::of),
                }
            })
            .collect();
        Self { horizon, records }
    }

    pub fn get(&self, atom: &AtomId) -> Option<&AtomRecord> {
        self.records.iter().find(|r| r.atom == *atom)
    }
}

fn atom_orbit(space: &MeasureSpace, tau: &Transformation, a: AtomId, direction: Direction, horizon: usize) -> SetOrbit {
    SetOrbit::compute(space, tau, &MeasurableSet::singleton(a), direction, horizon)
}

/// Per-atom verdict shared by the positive and two-sided analyses.
fn per_atom_verdict(
    space: &MeasureSpace,
    tau: &Transformation,
    atoms: &[AtomId],
    horizon: usize,
    two_sided: bool,
) -> Verdict {
    let table = AtomClassTable::build(space, tau, atoms, horizon, two_sided);
    let diverges =
        |r: &AtomRecord| r.forward_growth.diverges() || r.backward_growth.as_ref().is_some_and(Growth::diverges);
    let bounded = |r: &AtomRecord| {
        r.forward_growth.bounded() && (!two_sided || r.backward_growth.as_ref().is_some_and(Growth::bounded))
    };
    let what = if two_sided { "μ(τ^{-n}{a}) over n ∈ ℤ" } else { "μ(τ^{-n}{a})" };

    if let Some(r) = table.records.iter().find(|r| bounded(r)) {
        let mut w = Witness::default();
        w.add_orbit(
            "preimage_ratio",
            &atom_orbit(space, tau, r.atom, Direction::Preimage, horizon),
            SequenceKind::Ratio,
        );
        if two_sided {
            w.add_orbit("image_ratio", &atom_orbit(space, tau, r.atom, Direction::Image, horizon), SequenceKind::Ratio);
        }
        if let Growth::Vanishes { from } = r.forward_growth {
            w.scalar("empty_from", int(from as i64));
        }
        let mut summary =
            format!("{what} stays bounded for atom {}: preimages {}", r.atom, r.forward_growth.describe());
        if let Some(g) = &r.backward_growth {
            summary.push_str(&format!(", images {}", g.describe()));
        }
        return Verdict::new(Status::Refuted, horizon, summary)
            .with_witness(w)
            .with_trend(r.forward_growth.trend().cloned());
    }
    if table.records.iter().all(diverges) {
        let mut w = Witness::default();
        for r in table.records.iter().take(WITNESS_ATOMS) {
            let dir = if r.forward_growth.diverges() { Direction::Preimage } else { Direction::Image };
            let label = format!("{}_ratio_{}", if dir == Direction::Preimage { "preimage" } else { "image" }, r.atom);
            w.add_orbit(label, &atom_orbit(space, tau, r.atom, dir, horizon), SequenceKind::Ratio);
        }
        w.scalar("atoms_checked", int(table.records.len() as i64));
        let slowest = table
            .records
            .iter()
            .filter_map(|r| r.forward_growth.trend().filter(|_| r.forward_growth.diverges()))
            .map(|t| t.ratio.clone())
            .min();
        if let Some(s) = &slowest {
            w.scalar("slowest_forward_ratio", s.clone());
        }
        let trend = table.records[0].forward_growth.trend().filter(|t| t.ratio > Rational::one()).cloned();
        return Verdict::new(
            Status::Confirmed,
            horizon,
            format!("{what} diverges geometrically for all {} examined atoms", table.records.len()),
        )
        .with_witness(w)
        .with_trend(trend);
    }
    let undecided = table.records.iter().filter(|r| !diverges(r)).count();
    Verdict::new(
        Status::InconclusiveAtHorizon,
        horizon,
        format!("{undecided} of {} atoms show neither divergence nor an exact bound", table.records.len()),
    )
}

/// `sup_n μ(τ^{-n}A) = ∞` for every set of positive measure, `n ∈ ℕ`.
pub fn positively_expansive(
    space: &MeasureSpace,
    tau: &Transformation,
    horizon: usize,
    window: usize,
) -> Result<Verdict> {
    tau.check_compatible(space)?;
    require_horizon(horizon)?;
    let atoms = examined_atoms(space, window, horizon)?;
    Ok(per_atom_verdict(space, tau, &atoms, horizon, false))
}

/// The two-sided version over `n ∈ ℤ`, using forward images for negative `n`.
pub fn expansive_invertible(
    space: &MeasureSpace,
    tau: &Transformation,
    horizon: usize,
    window: usize,
) -> Result<Verdict> {
    tau.check_compatible(space)?;
    require_inverse(space, tau)?;
    require_horizon(horizon)?;
    let atoms = examined_atoms(space, window, horizon)?;
    Ok(per_atom_verdict(space, tau, &atoms, horizon, true))
}

/// Pointwise minimum of the ratio sequences of `atoms`, `n = 0..=horizon`,
/// with the atom attaining it at the last step.
fn lower_bound(
    space: &MeasureSpace,
    tau: &Transformation,
    atoms: &[AtomId],
    direction: Direction,
    horizon: usize,
) -> (Vec<Rational>, Option<AtomId>) {
    let mut bound: Vec<Option<Rational>> = vec![None; horizon + 1];
    let mut last_argmin = None;
    for a in atoms {
        let ratios = atom_orbit(space, tau, *a, direction, horizon).ratios();
        for (n, r) in ratios.into_iter().enumerate() {
            if bound[n].as_ref().is_none_or(|b| r < *b) {
                if n == horizon {
                    last_argmin = Some(*a);
                }
                bound[n] = Some(r);
            }
        }
    }
    (bound.into_iter().map(|b| b.unwrap_or_else(Rational::zero)).collect(), last_argmin)
}

fn record_bound(w: &mut Witness, prefix: &str, bound: &[Rational]) {
    for (n, r) in bound.iter().enumerate().skip(1) {
        w.scalar(format!("{prefix}[{n}]"), r.clone());
    }
}

/// `μ(τ^{-n}A)/μ(A) → ∞` uniformly over sets of finite positive measure.
///
/// The infimum is taken over a window of `max(window, 2·horizon + 2)` atoms,
/// large enough to contain the atoms that contract at each step on the
/// built-in families.
pub fn uniformly_positively_expansive(
    space: &MeasureSpace,
    tau: &Transformation,
    horizon: usize,
    window: usize,
) -> Result<Verdict> {
    tau.check_compatible(space)?;
    require_horizon(horizon)?;
    let examined = examined_atoms(space, window, horizon)?;
    let pointwise = per_atom_verdict(space, tau, &examined, horizon, false);
    if pointwise.is(Status::Refuted) {
        let mut v = pointwise;
        v.summary = format!("not even positively expansive: {}", v.summary);
        return Ok(v);
    }
    let wide = space.window(window.max(2 * horizon + 2))?.atoms;
    let (bound, argmin) = lower_bound(space, tau, &wide, Direction::Preimage, horizon);
    let growth = Growth::of_values(&bound);
    let mut w = Witness::default();
    if let Some(a) = argmin {
        w.add_orbit(
            "argmin_preimage_ratio",
            &atom_orbit(space, tau, a, Direction::Preimage, horizon),
            SequenceKind::Ratio,
        );
    }
    w.scalar("atoms_in_infimum", int(wide.len() as i64));
    record_bound(&mut w, "lower_bound", &bound);
    let last = rational::format_rational(bound.last().unwrap());
    let (status, summary) = match &growth {
        Growth::Diverges { trend } => (
            Status::Confirmed,
            format!(
                "infimum of atom ratios grows by {} per step, reaching {last}",
                rational::format_rational(&trend.ratio)
            ),
        ),
        g if g.bounded() => {
            (Status::Refuted, format!("infimum of atom ratios {}; at the horizon it is {last}", g.describe()))
        }
        _ => {
            (Status::InconclusiveAtHorizon, format!("infimum of atom ratios is undecided; at the horizon it is {last}"))
        }
    };
    Ok(Verdict::new(status, horizon, summary).with_witness(w).with_trend(growth.trend().cloned()))
}

/// Atoms split into a forward-divergent and a backward-divergent class,
/// each with one common lower-bound sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitCertificate {
    /// Atoms whose images grow: `μ(τⁿ{a})/μ({a}) → ∞` uniformly.
    pub class_b: MeasurableSet,
    /// Atoms whose preimages grow: `μ(τ^{-n}{a})/μ({a}) → ∞` uniformly.
    pub class_c: MeasurableSet,
    #[serde(with = "rational::serde_q::vec")]
    pub bound_b: Vec<Rational>,
    #[serde(with = "rational::serde_q::vec")]
    pub bound_c: Vec<Rational>,
    pub trend_b: Option<Trend>,
    pub trend_c: Option<Trend>,
}

impl SplitCertificate {
    /// Recomputes both lower-bound sequences and their trends.
    pub fn replay(&self, space: &MeasureSpace, tau: &Transformation) -> std::result::Result<(), String> {
        for (set, dir, bound, trend, name) in [
            (&self.class_b, Direction::Image, &self.bound_b, &self.trend_b, "B"),
            (&self.class_c, Direction::Preimage, &self.bound_c, &self.trend_c, "C"),
        ] {
            if set.is_empty() {
                continue;
            }
            let atoms: Vec<AtomId> = set.atoms().copied().collect();
            let horizon = bound.len().saturating_sub(1);
            let (fresh, _) = lower_bound(space, tau, &atoms, dir, horizon);
            if fresh != *bound {
                return Err(format!("class {name} lower bound does not replay"));
            }
            if terminal_trend(&fresh) != *trend {
                return Err(format!("class {name} trend does not replay"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitAnalysis {
    pub verdict: Verdict,
    pub table: AtomClassTable,
    pub certificate: Option<SplitCertificate>,
}

/// Worst ratio over `n ≥ 1`, the quantity that decides which class an atom
/// joins when it diverges in both directions.
fn worst(ratios: &[Rational]) -> Option<&Rational> {
    ratios.iter().min()
}

/// Splits the atoms into a class where images grow uniformly and one where
/// preimages grow uniformly.
///
/// An atom divergent in both directions joins the class whose ratio
/// sequence has the larger minimum; ties go to the image class.
pub fn uniformly_expansive_split(
    space: &MeasureSpace,
    tau: &Transformation,
    horizon: usize,
    window: usize,
) -> Result<SplitAnalysis> {
    tau.check_compatible(space)?;
    require_inverse(space, tau)?;
    require_horizon(horizon)?;
    let atoms = examined_atoms(space, window, horizon)?;
    let table = AtomClassTable::build(space, tau, &atoms, horizon, true);

    let mut class_b = MeasurableSet::empty();
    let mut class_c = MeasurableSet::empty();
    let mut undecided = Vec::new();
    for r in &table.records {
        let back = r.backward.as_deref().unwrap_or_default();
        let back_div = r.backward_growth.as_ref().is_some_and(Growth::diverges);
        match (r.forward_growth.diverges(), back_div) {
            (true, true) => {
                if worst(&r.forward) > worst(back) {
                    class_c.insert(r.atom);
                } else {
                    class_b.insert(r.atom);
                }
            }
            (true, false) => {
                class_c.insert(r.atom);
            }
            (false, true) => {
                class_b.insert(r.atom);
            }
            (false, false) => undecided.push(r),
        }
    }

    if let Some(r) =
        undecided.iter().find(|r| r.forward_growth.bounded() && r.backward_growth.as_ref().is_some_and(Growth::bounded))
    {
        let mut w = Witness::default();
        w.add_orbit(
            "preimage_ratio",
            &atom_orbit(space, tau, r.atom, Direction::Preimage, horizon),
            SequenceKind::Ratio,
        );
        w.add_orbit("image_ratio", &atom_orbit(space, tau, r.atom, Direction::Image, horizon), SequenceKind::Ratio);
        let summary = format!(
            "atom {} diverges in neither direction: preimages {}, images {}",
            r.atom,
            r.forward_growth.describe(),
            r.backward_growth.as_ref().map(Growth::describe).unwrap_or_default()
        );
        return Ok(SplitAnalysis {
            verdict: Verdict::new(Status::Refuted, horizon, summary).with_witness(w),
            table,
            certificate: None,
        });
    }

    let bound_of = |set: &MeasurableSet, dir| {
        let atoms: Vec<AtomId> = set.atoms().copied().collect();
        if atoms.is_empty() {
            Vec::new()
        } else {
            lower_bound(space, tau, &atoms, dir, horizon).0
        }
    };
    let bound_b = bound_of(&class_b, Direction::Image);
    let bound_c = bound_of(&class_c, Direction::Preimage);
    let certificate = SplitCertificate {
        trend_b: terminal_trend(&bound_b),
        trend_c: terminal_trend(&bound_c),
        class_b,
        class_c,
        bound_b,
        bound_c,
    };
    let uniform = |set: &MeasurableSet, t: &Option<Trend>| {
        set.is_empty() || t.as_ref().is_some_and(|t| t.ratio > Rational::one())
    };
    let mut w = Witness::default();
    w.add_set(certificate.class_b.clone());
    w.add_set(certificate.class_c.clone());
    record_bound(&mut w, "bound_b", &certificate.bound_b);
    record_bound(&mut w, "bound_c", &certificate.bound_c);
    w.note("sets: class B (images grow), class C (preimages grow)");
    let counts = format!("|B| = {}, |C| = {}", certificate.class_b.len(), certificate.class_c.len());
    let verdict = if undecided.is_empty()
        && uniform(&certificate.class_b, &certificate.trend_b)
        && uniform(&certificate.class_c, &certificate.trend_c)
    {
        let trend = certificate.trend_c.clone().or_else(|| certificate.trend_b.clone());
        Verdict::new(Status::Confirmed, horizon, format!("both classes diverge uniformly; {counts}"))
            .with_witness(w)
            .with_trend(trend)
    } else {
        Verdict::new(
            Status::InconclusiveAtHorizon,
            horizon,
            format!("{} atoms unclassified, uniform bounds not certified; {counts}", undecided.len()),
        )
        .with_witness(w)
    };
    Ok(SplitAnalysis { verdict, table, certificate: Some(certificate) })
}

/// Default divergence threshold for the sphere probe.
pub const DIVERGENCE_THRESHOLD: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub threshold: f64,
    pub horizon: usize,
    /// First `n` with `‖Tⁿx‖ ≥ threshold` (within the certified error), per sample.
    pub first_passage: Vec<Option<usize>>,
    pub min_passage: Option<usize>,
    pub max_passage: Option<usize>,
    /// Every sample passed within the horizon.
    pub all_passed: bool,
}

/// First passage of unit-norm samples above `threshold`.
pub fn sphere_divergence_probe(
    op: &Operator,
    idx: &LorentzIndex,
    samples: &[SphereSample],
    horizon: usize,
    threshold: f64,
) -> Result<ProbeReport> {
    if samples.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let mut first_passage = Vec::with_capacity(samples.len());
    for s in samples {
        let trace = orbit_trace(op, &s.vector, idx, horizon.max(1))?;
        let n0 = trace.initial_norm();
        if (n0.value - 1.0).abs() > SPHERE_TOLERANCE + n0.abs_error {
            return Err(Error::NotNormalized { norm: n0.value });
        }
        first_passage.push(trace.norms().take(horizon + 1).position(|n| n.upper() >= threshold));
    }
    let passed: Vec<usize> = first_passage.iter().flatten().copied().collect();
    Ok(ProbeReport {
        threshold,
        horizon,
        all_passed: passed.len() == first_passage.len(),
        min_passage: passed.iter().min().copied(),
        max_passage: if passed.len() == first_passage.len() { passed.iter().max().copied() } else { None },
        first_passage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Family;
    use crate::operators::CompositionOperator;
    use crate::rational::{powi, ratio};
    use crate::simple::SimpleFunction;

    fn builtin(f: Family) -> (MeasureSpace, Transformation) {
        MeasureSpace::builtin(f).unwrap()
    }

    #[test]
    fn bilateral_shift_is_positively_expansive() {
        let (s, t) = builtin(Family::BilateralShift { r: ratio(1, 2) });
        let v = positively_expansive(&s, &t, 20, 64).unwrap();
        assert_eq!(v.status, Status::Confirmed);
        assert_eq!(v.trend.unwrap().ratio, int(2));
        let w = v.witness.unwrap();
        assert_eq!(w.sequences[0].values[3], int(8));
        w.replay(&s, &t).unwrap();
    }

    #[test]
    fn unilateral_shift_refuted_at_atom_one() {
        let (s, t) = builtin(Family::UnilateralShift { r: ratio(1, 2) });
        let v = positively_expansive(&s, &t, 20, 64).unwrap();
        assert_eq!(v.status, Status::Refuted);
        let w = v.witness.unwrap();
        assert_eq!(w.sets, vec![MeasurableSet::singleton(AtomId::Int(1))]);
        assert_eq!(w.scalar_value("empty_from"), Some(&int(1)));
        assert!(expansive_invertible(&s, &t, 20, 64).is_err());
    }

    #[test]
    fn identity_is_never_expansive() {
        let (s, _) = builtin(Family::BilateralShift { r: ratio(1, 2) });
        let id = Transformation::Identity;
        assert_eq!(positively_expansive(&s, &id, 10, 16).unwrap().status, Status::Refuted);
        assert_eq!(uniformly_positively_expansive(&s, &id, 10, 16).unwrap().status, Status::Refuted);
        assert_eq!(expansive_invertible(&s, &id, 10, 16).unwrap().status, Status::Refuted);
        assert_eq!(uniformly_expansive_split(&s, &id, 10, 16).unwrap().verdict.status, Status::Refuted);
    }

    #[test]
    fn uniform_bound_on_bilateral_shift() {
        let (s, t) = builtin(Family::BilateralShift { r: ratio(1, 2) });
        let v = uniformly_positively_expansive(&s, &t, 12, 16).unwrap();
        assert_eq!(v.status, Status::Confirmed);
        let w = v.witness.unwrap();
        for n in 1..=12 {
            assert_eq!(w.scalar_value(&format!("lower_bound[{n}]")), Some(&powi(&int(2), n)));
        }
    }

    #[test]
    fn valley_is_not_uniformly_positively_expansive() {
        let (s, t) = builtin(Family::BilateralValley { r: int(2) });
        let v = uniformly_positively_expansive(&s, &t, 10, 16).unwrap();
        assert_eq!(v.status, Status::Refuted, "{}", v.summary);
        assert_eq!(v.witness.unwrap().scalar_value("lower_bound[10]"), Some(&powi(&int(2), -10)));
        assert_eq!(expansive_invertible(&s, &t, 40, 64).unwrap().status, Status::Confirmed);
    }

    #[test]
    fn valley_split() {
        let (s, t) = builtin(Family::BilateralValley { r: int(2) });
        let split = uniformly_expansive_split(&s, &t, 20, 64).unwrap();
        assert_eq!(split.verdict.status, Status::Confirmed, "{}", split.verdict.summary);
        let cert = split.certificate.unwrap();
        assert!(cert.class_c.atoms().all(|a| matches!(a, AtomId::Int(i) if *i < 0)));
        assert!(cert.class_b.atoms().all(|a| matches!(a, AtomId::Int(i) if *i >= 0)));
        assert_eq!(cert.class_b.len() + cert.class_c.len(), 10);
        for n in 0..=20 {
            assert_eq!(cert.bound_b[n], powi(&int(2), n as i64));
            assert_eq!(cert.bound_c[n], powi(&int(2), n as i64));
        }
        cert.replay(&s, &t).unwrap();
    }

    #[test]
    fn bilateral_split_is_all_forward() {
        let (s, t) = builtin(Family::BilateralShift { r: ratio(1, 2) });
        let cert = uniformly_expansive_split(&s, &t, 12, 64).unwrap().certificate.unwrap();
        assert!(cert.class_b.is_empty());
        assert_eq!(cert.class_c.len(), 6);
    }

    #[test]
    fn probe_first_passage() {
        let (s, t) = builtin(Family::BilateralShift { r: ratio(1, 2) });
        let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
        let op = Operator::Composition(CompositionOperator::new(s.clone(), t).unwrap());
        let samples: Vec<SphereSample> = [0, 1, -1, 2]
            .into_iter()
            .map(|i| {
                SphereSample::normalize(&s, &SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Int(i))), &idx)
                    .unwrap()
            })
            .collect();
        let report = sphere_divergence_probe(&op, &idx, &samples, 10, DIVERGENCE_THRESHOLD).unwrap();
        assert_eq!(report.first_passage, vec![Some(2); 4]);
        let id = Operator::Composition(CompositionOperator::new(s.clone(), Transformation::Identity).unwrap());
        let report = sphere_divergence_probe(&id, &idx, &samples, 10, DIVERGENCE_THRESHOLD).unwrap();
        assert!(report.first_passage.iter().all(Option::is_none));
        let half = SphereSample {
            vector: SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Int(3))),
            norm: crate::norm::CertifiedReal::exact(0.5),
        };
        assert!(matches!(sphere_divergence_probe(&op, &idx, &[half], 10, 2.0), Err(Error::NotNormalized { .. })));
    }
}
