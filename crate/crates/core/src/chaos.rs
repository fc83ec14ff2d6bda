//! Li-Yorke criteria for composition operators, rendered at finite horizon,
//! and the impossibility certificate for multiplication operators.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::atom::AtomId;
use crate::error::{Error, Result};
use crate::measure::{MeasurableSet, MeasureSpace, SpaceWindow, TotalMass};
use crate::norm::{levels_norm_f64, LorentzIndex};
use crate::operators::{
    classify_relative, orbit_trace, Classification, CompositionOperator, MultiplicationOperator, Operator, OrbitClass,
    Thresholds,
};
use crate::rational::{self, from_f64, int, powi, ratio, to_f64, Rational};
use crate::sequence::{affine_geometric_limit, dip_then_recover, longest_run, terminal_trend, Cycle, SetOrbit, Trend};
use crate::simple::SimpleFunction;
use crate::transform::{first_collision, forward_image_n, Transformation};
use crate::verdict::{prior_max_ratios, Collision, SequenceKind, Status, Verdict, Witness};

/// Largest finite space whose subsets are all used as probes.
pub const EXHAUSTIVE_PROBE_ATOMS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChaosSettings {
    /// Number of canonical atoms used for default candidates and guards.
    pub window: usize,
    /// Decay level, relative to the starting measure or norm.
    #[serde(with = "rational::serde_q")]
    pub low: Rational,
    /// Growth level, relative to the starting measure or norm.
    #[serde(with = "rational::serde_q")]
    pub high: Rational,
}

impl Default for ChaosSettings {
    fn default() -> Self {
        Self { window: 64, low: ratio(1, 1_000_000), high: int(1_000_000) }
    }
}

impl ChaosSettings {
    pub fn thresholds(&self) -> Thresholds {
        Thresholds { low: to_f64(&self.low), high: to_f64(&self.high) }
    }

    fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::EmptyWindow);
        }
        if !(self.low >= Rational::zero() && self.low < self.high) {
            return Err(Error::InvalidThresholds);
        }
        Ok(())
    }
}

/// What the measures `μ(τ^{∓n}A)` do in the long run, as far as exact
/// evidence shows.
#[derive(Clone, Debug, PartialEq)]
pub enum Decay {
    /// The iterate at `from` is empty: a proof.
    Vanishes {
        from: usize,
    },
    /// Geometric decay below the low threshold.
    Decays(Trend),
    /// Exactly periodic with a positive minimum: a proof that the limit
    /// inferior is positive.
    Periodic {
        cycle: Cycle,
        min: Rational,
    },
    /// A geometric trend that does not decay, or convergence to a positive limit.
    Persists {
        limit: Option<Rational>,
        trend: Trend,
    },
    Unresolved,
}

impl Decay {
    pub fn classify(orbit: &SetOrbit, low: &Rational) -> Decay {
        if let Some(from) = orbit.zero_from {
            return Decay::Vanishes { from };
        }
        if let (Some(cycle), Some(min)) = (orbit.cycle, orbit.periodic_min()) {
            return Decay::Periodic { cycle, min };
        }
        let base = &orbit.measures[0];
        let last = orbit.measures.last().unwrap();
        if let Some(trend) = terminal_trend(&orbit.measures) {
            if trend.ratio >= Rational::one() {
                return Decay::Persists { limit: None, trend };
            }
            return if *last <= low * base { Decay::Decays(trend) } else { Decay::Unresolved };
        }
        if let Some((limit, trend)) = affine_geometric_limit(&orbit.measures) {
            if limit > Rational::zero() {
                return Decay::Persists { limit: Some(limit), trend };
            }
        }
        Decay::Unresolved
    }

    /// `Some(true)` when the measures reach zero in the limit inferior,
    /// `Some(false)` when they stay away from zero, `None` if undecided.
    pub fn reaches_zero(&self) -> Option<bool> {
        match self {
            Decay::Vanishes { .. } | Decay::Decays(_) => Some(true),
            Decay::Periodic { .. } | Decay::Persists { .. } => Some(false),
            Decay::Unresolved => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Decay::Vanishes { .. } | Decay::Periodic { .. })
    }

    pub fn trend(&self) -> Option<Trend> {
        match self {
            Decay::Decays(t) | Decay::Persists { trend: t, .. } => Some(t.clone()),
            _ => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            Decay::Vanishes { from } => format!("empty from n = {from}"),
            Decay::Decays(t) => format!("geometric decay, ratio {}", rational::format_rational(&t.ratio)),
            Decay::Periodic { cycle, min } => format!(
                "periodic from n = {} with period {}, minimum {}",
                cycle.start,
                cycle.period,
                rational::format_rational(min)
            ),
            Decay::Persists { limit: Some(l), .. } => format!("converges to {}", rational::format_rational(l)),
            Decay::Persists { trend, .. } => {
                format!("geometric trend with ratio {}", rational::format_rational(&trend.ratio))
            }
            Decay::Unresolved => "undecided at this horizon".into(),
        }
    }

    fn record(&self, witness: &mut Witness, prefix: &str) {
        match self {
            Decay::Vanishes { from } => witness.scalar(format!("{prefix}vanishes_from"), int(*from as i64)),
            Decay::Periodic { cycle, min } => {
                witness.scalar(format!("{prefix}cycle_start"), int(cycle.start as i64));
                witness.scalar(format!("{prefix}cycle_period"), int(cycle.period as i64));
                witness.scalar(format!("{prefix}periodic_min"), min.clone());
            }
            Decay::Decays(t) => witness.scalar(format!("{prefix}decay_ratio"), t.ratio.clone()),
            Decay::Persists { limit, trend } => {
                witness.scalar(format!("{prefix}trend_ratio"), trend.ratio.clone());
                if let Some(l) = limit {
                    witness.scalar(format!("{prefix}limit"), l.clone());
                }
            }
            Decay::Unresolved => {}
        }
    }
}

fn require_horizon(horizon: usize, min: usize) -> Result<()> {
    if horizon < min {
        return Err(Error::HorizonTooShort { min, got: horizon });
    }
    Ok(())
}

fn check_sets(space: &MeasureSpace, sets: &[MeasurableSet]) -> Result<()> {
    if sets.is_empty() || sets.iter().any(|s| s.is_empty()) {
        return Err(Error::EmptyCandidates);
    }
    sets.iter().try_for_each(|s| space.check_set(s))
}

fn default_candidates(space: &MeasureSpace, window: usize) -> Result<Vec<MeasurableSet>> {
    Ok(space.window(window)?.atoms.into_iter().map(MeasurableSet::singleton).collect())
}

/// Maximum of `values[1..]` and its first index.
fn max_after_start(values: &[Rational]) -> Option<(Rational, usize)> {
    let mut best: Option<(Rational, usize)> = None;
    for (n, v) in values.iter().enumerate().skip(1) {
        if best.as_ref().is_none_or(|(b, _)| v > b) {
            best = Some((v.clone(), n));
        }
    }
    best
}

struct Candidate {
    orbit: SetOrbit,
    decay: Decay,
    ratios: Vec<Rational>,
}

/// Two-condition criterion over a family of candidate sets: (i) the measures
/// `μ(τ^{-n}A)` tend to zero along a subsequence, and (ii) the ratios
/// `μ(τ^{-n}A)/μ(A)` are unbounded over the family.
///
/// Candidates default to the singletons of the first `settings.window` atoms.
/// A refutation is relative to the candidates examined.
pub fn li_yorke_criterion(
    space: &MeasureSpace,
    tau: &Transformation,
    horizon: usize,
    candidates: Option<&[MeasurableSet]>,
    settings: &ChaosSettings,
) -> Result<Verdict> {
    tau.check_compatible(space)?;
    require_horizon(horizon, 4)?;
    settings.validate()?;
    let candidates = match candidates {
        Some(sets) => {
            check_sets(space, sets)?;
            sets.to_vec()
        }
        None => default_candidates(space, settings.window)?,
    };
    let evaluated: Vec<Candidate> = candidates
        .iter()
        .map(|set| {
            let orbit = SetOrbit::preimages(space, tau, set, horizon);
            let decay = Decay::classify(&orbit, &settings.low);
            let ratios = orbit.ratios();
            Candidate { orbit, decay, ratios }
        })
        .collect();

    for c in evaluated.iter().filter(|c| c.decay.reaches_zero() == Some(true)) {
        let Some((max, at)) = max_after_start(&c.ratios) else { continue };
        if max < settings.high {
            continue;
        }
        let Some(growth) = longest_run(&c.ratios, |r| *r > Rational::one()) else { continue };
        let mut w = Witness::default();
        w.add_orbit("preimage_ratio", &c.orbit, SequenceKind::Ratio);
        w.scalar("max_ratio", max.clone());
        w.scalar("max_ratio_at", int(at as i64));
        c.decay.record(&mut w, "");
        let summary = format!(
            "{} satisfies (i) ({}) and reaches ratio {} at n = {at}",
            describe_set(&c.orbit.sets[0]),
            c.decay.describe(),
            short(&max)
        );
        return Ok(Verdict::new(Status::Confirmed, horizon, summary).with_witness(w).with_trend(Some(growth)));
    }

    let unresolved = evaluated.iter().filter(|c| c.decay.reaches_zero().is_none()).count();
    let family: Vec<&Candidate> = evaluated.iter().filter(|c| c.decay.reaches_zero() == Some(true)).collect();
    let sup = family.iter().filter_map(|c| max_after_start(&c.ratios).map(|(m, at)| (m, at, *c))).fold(
        None::<(Rational, usize, &Candidate)>,
        |best, item| match best {
            Some(b) if b.0 >= item.0 => Some(b),
            _ => Some(item),
        },
    );
    let mut w = Witness::default();
    for c in &family {
        w.add_set(c.orbit.sets[0].clone());
    }
    w.scalar("family_size", int(family.len() as i64));
    w.scalar("excluded", int((evaluated.len() - family.len() - unresolved) as i64));
    w.scalar("unresolved", int(unresolved as i64));
    if let Some((m, at, c)) = &sup {
        w.add_orbit("sup_member_ratio", &c.orbit, SequenceKind::Ratio);
        w.scalar("sup_ratio", m.clone());
        w.scalar("sup_ratio_at", int(*at as i64));
    }
    let bounded = sup.as_ref().is_none_or(|(m, _, _)| *m < settings.high);
    if unresolved == 0 && bounded {
        w.note("refutation covers the candidate sets examined");
        let trend = sup.as_ref().and_then(|(_, _, c)| c.decay.trend());
        let summary = match &sup {
            Some((m, at, c)) => format!(
                "{} of {} candidates satisfy (i); their ratios are bounded by {} (attained by {} at n = {at})",
                family.len(),
                evaluated.len(),
                short(m),
                describe_set(&c.orbit.sets[0])
            ),
            None => format!("none of the {} candidates satisfies (i)", evaluated.len()),
        };
        return Ok(Verdict::new(Status::Refuted, horizon, summary).with_witness(w).with_trend(trend));
    }
    let summary = format!(
        "{} candidates: {} satisfy (i), {} undecided; no ratio certified above {}",
        evaluated.len(),
        family.len(),
        unresolved,
        short(&settings.high)
    );
    Ok(Verdict::new(Status::InconclusiveAtHorizon, horizon, summary).with_witness(w))
}

/// Conditions (a) and (b) for a single set, and their combination.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryReport {
    pub a: Verdict,
    pub b: Verdict,
    pub combined: Verdict,
}

/// (a) `liminf μ(τ^{-n}A) = 0` and (b) `sup_{n<m} μ(τⁿA)/μ(τᵐA) = ∞`,
/// evaluated without checking injectivity.
pub fn corollary_conditions(
    space: &MeasureSpace,
    tau: &Transformation,
    set: &MeasurableSet,
    horizon: usize,
    settings: &ChaosSettings,
) -> Result<CorollaryReport> {
    tau.check_compatible(space)?;
    require_horizon(horizon, 4)?;
    settings.validate()?;
    check_sets(space, std::slice::from_ref(set))?;

    let pre = SetOrbit::preimages(space, tau, set, horizon);
    let decay = Decay::classify(&pre, &settings.low);
    let mut wa = Witness::default();
    wa.add_orbit("preimage_measure", &pre, SequenceKind::Measure);
    decay.record(&mut wa, "");
    let status = match decay.reaches_zero() {
        Some(true) => Status::Confirmed,
        Some(false) => Status::Refuted,
        None => Status::InconclusiveAtHorizon,
    };
    let a = Verdict::new(status, horizon, format!("preimage measures: {}", decay.describe()))
        .with_witness(wa)
        .with_trend(decay.trend());

    let img = SetOrbit::images(space, tau, set, horizon);
    let prior = prior_max_ratios(&img.measures);
    let mut wb = Witness::default();
    wb.add_orbit("image_prior_max_ratio", &img, SequenceKind::PriorMaxRatio);
    let sup = max_after_start(&prior);
    if let Some((m, at)) = &sup {
        wb.scalar("sup_ratio", m.clone());
        wb.scalar("sup_ratio_at", int(*at as i64));
    }
    let growth = longest_run(&prior, |r| *r > Rational::one());
    let image_trend = terminal_trend(&img.measures);
    let b = match (&sup, growth, img.cycle) {
        (_, _, Some(cycle)) => {
            wb.scalar("cycle_start", int(cycle.start as i64));
            wb.scalar("cycle_period", int(cycle.period as i64));
            Verdict::new(Status::Refuted, horizon, "forward images are periodic, so the ratios are bounded")
                .with_witness(wb)
        }
        (Some((m, at)), Some(run), None) if *m >= settings.high => {
            Verdict::new(Status::Confirmed, horizon, format!("ratio μ(τⁿA)/μ(τᵐA) reaches {} at m = {at}", short(m)))
                .with_witness(wb)
                .with_trend(Some(run))
        }
        _ => match image_trend {
            Some(t) if t.ratio >= Rational::one() => {
                wb.scalar("image_trend_ratio", t.ratio.clone());
                Verdict::new(Status::Refuted, horizon, "forward image measures do not shrink")
                    .with_witness(wb)
                    .with_trend(Some(t))
            }
            _ => match affine_geometric_limit(&img.measures) {
                Some((limit, t)) if limit > Rational::zero() => {
                    wb.scalar("image_limit", limit);
                    Verdict::new(Status::Refuted, horizon, "forward image measures converge to a positive limit")
                        .with_witness(wb)
                        .with_trend(Some(t))
                }
                _ => {
                    Verdict::new(Status::InconclusiveAtHorizon, horizon, "ratio growth not certified").with_witness(wb)
                }
            },
        },
    };

    let status = if a.is(Status::Refuted) || b.is(Status::Refuted) {
        Status::Refuted
    } else if a.is(Status::Confirmed) && b.is(Status::Confirmed) {
        Status::Confirmed
    } else {
        Status::InconclusiveAtHorizon
    };
    let mut wc = Witness::default();
    wc.add_set(set.clone());
    wc.note("(a) and (b) imply chaos only when τ is injective");
    let combined = Verdict::new(status, horizon, format!("(a) {:?}, (b) {:?}", a.status, b.status)).with_witness(wc);
    Ok(CorollaryReport { a, b, combined })
}

/// Atoms of the window together with every atom met by the orbits of `set`.
fn guard_atoms(
    space: &MeasureSpace,
    tau: &Transformation,
    set: &MeasurableSet,
    horizon: usize,
    window: usize,
) -> Result<SpaceWindow> {
    let mut atoms: MeasurableSet = space.window(window)?.atoms.into_iter().collect();
    for orbit in [SetOrbit::preimages(space, tau, set, horizon), SetOrbit::images(space, tau, set, horizon)] {
        for s in &orbit.sets {
            atoms = atoms.union(s);
        }
    }
    let atoms: Vec<AtomId> = atoms.atoms().copied().collect();
    Ok(SpaceWindow { size: atoms.len(), atoms, omitted_mass: None })
}

fn require_injective(
    space: &MeasureSpace,
    tau: &Transformation,
    set: &MeasurableSet,
    horizon: usize,
    window: usize,
) -> Result<()> {
    match first_collision(tau, &guard_atoms(space, tau, set, horizon, window)?) {
        Some(Collision { first, second, image }) => Err(Error::NotInjective { first, second, image }),
        None => Ok(()),
    }
}

/// [`corollary_conditions`] behind an injectivity guard on the window and
/// on every atom the orbits of `set` touch.
pub fn injective_li_yorke_criterion(
    space: &MeasureSpace,
    tau: &Transformation,
    set: &MeasurableSet,
    horizon: usize,
    settings: &ChaosSettings,
) -> Result<CorollaryReport> {
    tau.check_compatible(space)?;
    check_sets(space, std::slice::from_ref(set))?;
    settings.validate()?;
    require_injective(space, tau, set, horizon, settings.window)?;
    corollary_conditions(space, tau, set, horizon, settings)
}

/// The conditions of the finite-measure equivalences that admit a
/// finite-horizon rendering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Ii,
    Iii,
    Iv,
    V,
    Vi,
    Vii,
}

impl Condition {
    pub const ALL: [Condition; 6] =
        [Condition::Ii, Condition::Iii, Condition::Iv, Condition::V, Condition::Vi, Condition::Vii];

    pub fn statement(self) -> &'static str {
        match self {
            Condition::Ii => "some g ≠ 0 has liminf ‖C_τⁿ g‖ = 0",
            Condition::Iii => "some A has μ(τ⁻ⁿA) → 0",
            Condition::Iv => "some A has μ(τⁿA) → 0",
            Condition::V => "some A has liminf μ(τ⁻ⁿA) = 0 and liminf μ(τⁿA) = 0",
            Condition::Vi => "some A has liminf μ(τ⁻ⁿA) = 0 and limsup μ(τ⁻ⁿA) > 0",
            Condition::Vii => "some characteristic function is semi-irregular",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceMatrix {
    pub conditions: Vec<ConditionVerdict>,
    /// No condition is confirmed while another is refuted.
    pub consistent: bool,
    pub probes: usize,
}

impl EquivalenceMatrix {
    pub fn get(&self, c: Condition) -> &Verdict {
        &self.conditions.iter().find(|v| v.condition == c).expect("all conditions are evaluated").verdict
    }
}

/// Outcome of one condition on one probe.
enum ProbeOutcome {
    Holds(Witness, Option<Trend>),
    Fails(Witness, Option<Trend>),
    Unresolved,
}

fn outcome_from_decay(decay: &Decay, orbit: &SetOrbit, label: &str) -> ProbeOutcome {
    let mut w = Witness::default();
    w.add_orbit(label, orbit, SequenceKind::Measure);
    decay.record(&mut w, "");
    match decay.reaches_zero() {
        Some(true) => ProbeOutcome::Holds(w, decay.trend()),
        Some(false) => ProbeOutcome::Fails(w, decay.trend()),
        None => ProbeOutcome::Unresolved,
    }
}

/// `A ∪ τ^{n_1}A ∪ τ^{n_2}A ∪ …` with each offset the smallest one that
/// leaves a time between consecutive spikes where the preimage measure of
/// the union is at most `budget`. Needs `τ` injective.
pub fn spike_union(
    space: &MeasureSpace,
    tau: &Transformation,
    base: &MeasurableSet,
    horizon: usize,
    budget: &Rational,
) -> Option<(MeasurableSet, Vec<usize>)> {
    let images = SetOrbit::images(space, tau, base, horizon).measures;
    let mut union = base.clone();
    let mut current = SetOrbit::preimages(space, tau, &union, horizon).measures;
    let mut offsets = vec![0usize];
    loop {
        let last = *offsets.last().unwrap();
        // τ^{-d}(τ^s A) = τ^{s-d}A for d ≤ s, so the union's measure at d is
        // at most current[d] + images[s - d].
        let next = (last + 2..=horizon).find(|&s| (last + 1..s).any(|d| &current[d] + &images[s - d] <= *budget));
        let Some(s) = next else { break };
        offsets.push(s);
        union = union.union(&forward_image_n(tau, base, s));
        current = SetOrbit::preimages(space, tau, &union, horizon).measures;
    }
    (offsets.len() >= 2).then_some((union, offsets))
}

/// Enumerates every nonempty subset of a small finite space.
fn all_subsets(space: &MeasureSpace) -> Vec<MeasurableSet> {
    let atoms: Vec<AtomId> = space.atoms().collect();
    let mut out: Vec<MeasurableSet> = (1u32..(1 << atoms.len()))
        .map(|mask| atoms.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, a)| *a).collect())
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    out
}

/// Evaluates conditions (ii)–(vii) on the probe sets. Finite spaces with at
/// most [`EXHAUSTIVE_PROBE_ATOMS`] atoms are probed with every subset as well.
pub fn finite_measure_equivalences(
    space: &MeasureSpace,
    tau: &Transformation,
    idx: &LorentzIndex,
    horizon: usize,
    probe_sets: &[MeasurableSet],
    settings: &ChaosSettings,
) -> Result<EquivalenceMatrix> {
    tau.check_compatible(space)?;
    require_horizon(horizon, 4)?;
    settings.validate()?;
    if let TotalMass::Infinite = space.total_mass() {
        return Err(Error::InfiniteMass);
    }
    check_sets(space, probe_sets)?;
    let window = match space.atom_count() {
        Some(n) => n,
        None => settings.window,
    };
    for set in probe_sets {
        require_injective(space, tau, set, horizon, window)?;
    }
    let mut probes: Vec<MeasurableSet> = probe_sets.to_vec();
    if space.atom_count().is_some_and(|n| n <= EXHAUSTIVE_PROBE_ATOMS) {
        for s in all_subsets(space) {
            if !probes.contains(&s) {
                probes.push(s);
            }
        }
    }

    let op = Operator::Composition(CompositionOperator::new(space.clone(), tau.clone())?);
    let thresholds = settings.thresholds();
    let p_finite = idx.p().finite().cloned();
    let norm_budget_factor =
        p_finite.as_ref().and_then(|p| from_f64(thresholds.low.powf(to_f64(p)))).unwrap_or_else(Rational::zero);

    let mut outcomes: Vec<Vec<ProbeOutcome>> = (0..6).map(|_| Vec::with_capacity(probes.len())).collect();
    for probe in &probes {
        let mu = space.measure_unchecked(probe);
        let pre = SetOrbit::preimages(space, tau, probe, horizon);
        let img = SetOrbit::images(space, tau, probe, horizon);
        let pre_decay = Decay::classify(&pre, &settings.low);
        let img_decay = Decay::classify(&img, &settings.low);

        // (ii): the indicator's orbit norms.
        let ii = match pre_decay.reaches_zero() {
            Some(true) => {
                let trace = orbit_trace(&op, &SimpleFunction::indicator(probe), idx, horizon)?;
                let base = trace.initial_norm().value;
                let min = trace.norms().map(|n| n.upper()).fold(f64::INFINITY, f64::min);
                if min <= thresholds.low * base {
                    let mut w = Witness::default();
                    w.add_orbit("preimage_measure", &pre, SequenceKind::Measure);
                    pre_decay.record(&mut w, "");
                    w.note(format!("smallest orbit norm of the indicator: {min:.3e}"));
                    ProbeOutcome::Holds(w, pre_decay.trend())
                } else {
                    ProbeOutcome::Unresolved
                }
            }
            _ => outcome_from_decay(&pre_decay, &pre, "preimage_measure"),
        };
        outcomes[0].push(ii);
        outcomes[1].push(outcome_from_decay(&pre_decay, &pre, "preimage_measure"));
        outcomes[2].push(outcome_from_decay(&img_decay, &img, "image_measure"));

        // (v): both liminfs vanish.
        let v = match (pre_decay.reaches_zero(), img_decay.reaches_zero()) {
            (Some(true), Some(true)) => {
                let mut w = Witness::default();
                w.add_orbit("preimage_measure", &pre, SequenceKind::Measure);
                w.add_orbit("image_measure", &img, SequenceKind::Measure);
                pre_decay.record(&mut w, "preimage_");
                img_decay.record(&mut w, "image_");
                ProbeOutcome::Holds(w, img_decay.trend())
            }
            (Some(false), _) => outcome_from_decay(&pre_decay, &pre, "preimage_measure"),
            (_, Some(false)) => outcome_from_decay(&img_decay, &img, "image_measure"),
            _ => ProbeOutcome::Unresolved,
        };
        outcomes[3].push(v);

        // (vi): a dip followed by a return to μ(A).
        let budget = &settings.low * &mu;
        let vi = match pre_decay.reaches_zero() {
            Some(false) => outcome_from_decay(&pre_decay, &pre, "preimage_measure"),
            None => ProbeOutcome::Unresolved,
            Some(true) => {
                let built = if dip_then_recover(&pre.measures, &budget, &mu).is_some() {
                    Some((probe.clone(), vec![0]))
                } else {
                    spike_union(space, tau, probe, horizon, &budget)
                };
                match built {
                    Some((set, offsets)) => {
                        let orbit = SetOrbit::preimages(space, tau, &set, horizon);
                        match dip_then_recover(&orbit.measures, &budget, &mu) {
                            Some((d, s)) => {
                                let mut w = Witness::default();
                                w.add_set(probe.clone());
                                w.add_orbit("union_preimage_measure", &orbit, SequenceKind::Measure);
                                w.scalar("dip_at", int(d as i64));
                                w.scalar("recovery_at", int(s as i64));
                                w.scalar("dip_budget", budget.clone());
                                w.note(format!("spike offsets {offsets:?}"));
                                ProbeOutcome::Holds(w, None)
                            }
                            None => ProbeOutcome::Unresolved,
                        }
                    }
                    None => ProbeOutcome::Unresolved,
                }
            }
        };
        outcomes[4].push(vi);

        // (vii): the indicator of the probe or of its spike union is semi-irregular.
        let vii = match (&p_finite, pre_decay.reaches_zero()) {
            (_, Some(false)) => outcome_from_decay(&pre_decay, &pre, "preimage_measure"),
            (None, _) | (_, None) => ProbeOutcome::Unresolved,
            (Some(_), Some(true)) => {
                let semi = |set: &MeasurableSet| -> Result<Option<(OrbitClass, SetOrbit)>> {
                    let trace = orbit_trace(&op, &SimpleFunction::indicator(set), idx, horizon)?;
                    let class = classify_relative(&trace, thresholds)?;
                    Ok((class.classification != Classification::Regular)
                        .then(|| (class, SetOrbit::preimages(space, tau, set, horizon))))
                };
                let mut found = semi(probe)?;
                if found.is_none() {
                    let budget = &norm_budget_factor * &mu;
                    if let Some((set, _)) = spike_union(space, tau, probe, horizon, &budget) {
                        found = semi(&set)?;
                    }
                }
                match found {
                    Some((class, orbit)) => {
                        let mut w = Witness::default();
                        w.add_set(probe.clone());
                        w.add_orbit("indicator_preimage_measure", &orbit, SequenceKind::Measure);
                        w.scalar("dip_at", int(class.argmin as i64));
                        w.scalar("spike_at", int(class.argmax as i64));
                        w.note(format!(
                            "{:?}: min norm {}, max norm {}",
                            class.classification, class.min_norm, class.max_norm
                        ));
                        ProbeOutcome::Holds(w, None)
                    }
                    None => ProbeOutcome::Unresolved,
                }
            }
        };
        outcomes[5].push(vii);
    }

    let conditions: Vec<ConditionVerdict> = Condition::ALL
        .iter()
        .zip(outcomes)
        .map(|(&condition, results)| ConditionVerdict {
            condition,
            verdict: merge_probe_outcomes(condition, results, &probes, horizon, p_finite.is_none()),
        })
        .collect();
    let any = |s: Status| conditions.iter().any(|c| c.verdict.is(s));
    let consistent = !(any(Status::Confirmed) && any(Status::Refuted));
    Ok(EquivalenceMatrix { conditions, consistent, probes: probes.len() })
}

fn merge_probe_outcomes(
    condition: Condition,
    results: Vec<ProbeOutcome>,
    probes: &[MeasurableSet],
    horizon: usize,
    infinite_p: bool,
) -> Verdict {
    let total = results.len();
    let mut failed: Vec<(usize, Witness, Option<Trend>)> = Vec::new();
    let mut unresolved = 0;
    for (i, outcome) in results.into_iter().enumerate() {
        match outcome {
            ProbeOutcome::Holds(mut w, trend) => {
                w.add_set(probes[i].clone());
                let summary = format!("{}: holds for {}", condition.statement(), describe_set(&probes[i]));
                return Verdict::new(Status::Confirmed, horizon, summary).with_witness(w).with_trend(trend);
            }
            ProbeOutcome::Fails(w, trend) => failed.push((i, w, trend)),
            ProbeOutcome::Unresolved => unresolved += 1,
        }
    }
    if unresolved == 0 && !failed.is_empty() {
        let (_, mut w, trend) = failed.swap_remove(0);
        for (i, _, _) in &failed {
            w.add_set(probes[*i].clone());
        }
        w.note(format!("fails on all {total} probes"));
        let summary = format!("{}: fails on every probe", condition.statement());
        return Verdict::new(Status::Refuted, horizon, summary).with_witness(w).with_trend(trend);
    }
    let mut v = Verdict::new(
        Status::InconclusiveAtHorizon,
        horizon,
        format!("{}: {unresolved} of {total} probes undecided", condition.statement()),
    );
    if infinite_p && condition == Condition::Vii {
        let mut w = Witness::default();
        w.note("characteristic functions have norm 0 or 1 when p = inf; (vii) is evaluated for finite p only");
        v = v.with_witness(w);
    }
    v
}

/// Per-term record of a constructed vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchTerm {
    pub atom: AtomId,
    #[serde(with = "rational::serde_q")]
    pub coefficient: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSettings {
    pub window: usize,
    pub max_terms: usize,
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<AtomId>>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { window: 64, max_terms: 6, thresholds: Thresholds::default(), candidates: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrregularSearch {
    /// `Confirmed` when the certified dip-then-spike ratio reaches the target.
    pub status: Status,
    pub vector: SimpleFunction,
    pub terms: Vec<SearchTerm>,
    pub class: OrbitClass,
    /// Certified lower bound on `‖Tˢg‖ / ‖Tᵈg‖` for the chosen dip `d` below
    /// `‖g‖` and later spike `s` above it; zero when there is none.
    pub dip_spike_ratio: f64,
    pub dip_at: usize,
    pub spike_at: usize,
}

/// Best dip followed by a spike: the dip `d` must lie strictly below the
/// starting norm and the later spike `s` strictly above it. Norms are given
/// as `(lower, upper)` enclosures. Returns the ratio `lower_s / upper_d`, the
/// balanced score `min(lower_s / upper_0, lower_0 / upper_d)`, and `d`, `s`.
fn dip_then_spike(norms: &[(f64, f64)]) -> Option<(f64, f64, usize, usize)> {
    let (lo0, up0) = norms[0];
    let mut best: Option<(f64, f64, usize, usize)> = None;
    let mut dip: Option<(f64, usize)> = None;
    for (s, &(lo, up)) in norms.iter().enumerate().skip(1) {
        if let Some((dip_up, d)) = dip {
            if lo > up0 {
                let ratio = lo / dip_up;
                let balanced = (lo / up0).min(lo0 / dip_up);
                if best.is_none_or(|b| balanced > b.1) {
                    best = Some((ratio, balanced, d, s));
                }
            }
        }
        if up > 0.0 && up < lo0 && dip.is_none_or(|(u, _)| up < u) {
            dip = Some((up, s));
        }
    }
    best
}

/// Search score: the balanced dip-then-spike score, then plain growth.
fn search_score(norms: &[f64]) -> (f64, f64) {
    let pairs: Vec<(f64, f64)> = norms.iter().map(|&n| (n, n)).collect();
    let balanced = dip_then_spike(&pairs).map_or(0.0, |b| b.1);
    let growth = norms.iter().copied().fold(0.0, f64::max) / norms[0];
    (balanced, growth)
}

/// Greedy construction of a vector whose orbit dips and then spikes.
///
/// The vector is a combination `Σ c_k χ_{a_k}` of atom indicators with
/// power-of-two coefficients. Preimages of distinct atoms are disjoint, so
/// each iterate's distribution is just `{(c_k, μ(τ^{-n}a_k))}`; the search
/// scores candidates in floating point and the chosen vector is then traced
/// exactly.
pub fn irregular_vector_search(
    space: &MeasureSpace,
    tau: &Transformation,
    idx: &LorentzIndex,
    horizon: usize,
    ratio_target: f64,
    settings: &SearchSettings,
) -> Result<IrregularSearch> {
    tau.check_compatible(space)?;
    if !(ratio_target > 1.0) {
        return Err(Error::InvalidTarget);
    }
    require_horizon(horizon, 8)?;
    let atoms: Vec<AtomId> = match &settings.candidates {
        Some(list) if list.is_empty() => return Err(Error::EmptyCandidates),
        Some(list) => {
            list.iter().try_for_each(|a| space.check_set(&MeasurableSet::singleton(*a)))?;
            list.clone()
        }
        None => space.window(settings.window)?.atoms,
    };
    let profiles: Vec<(AtomId, Vec<f64>)> = atoms
        .iter()
        .map(|a| {
            let orbit = SetOrbit::preimages(space, tau, &MeasurableSet::singleton(*a), horizon);
            (*a, orbit.measures.iter().map(to_f64).collect::<Vec<f64>>())
        })
        .collect();
    let eligible: Vec<&(AtomId, Vec<f64>)> = profiles.iter().filter(|(_, m)| m.iter().any(|x| *x != m[0])).collect();

    let norms_of = |terms: &[(usize, i32)]| -> Vec<f64> {
        (0..=horizon)
            .map(|n| {
                let levels: Vec<(f64, f64)> = terms.iter().map(|&(k, e)| (2f64.powi(e), eligible[k].1[n])).collect();
                levels_norm_f64(&levels, idx)
            })
            .collect()
    };
    let better = |a: (f64, f64), b: (f64, f64)| a.0 > b.0 * (1.0 + 1e-9) || (a.0 >= b.0 && a.1 > b.1 * (1.0 + 1e-9));

    let mut chosen: Vec<(usize, i32)> = Vec::new();
    let mut current = (0.0, 0.0);
    while chosen.len() < settings.max_terms.max(1) {
        let mut best: Option<((f64, f64), (usize, i32))> = None;
        for k in (0..eligible.len()).filter(|k| chosen.iter().all(|c| c.0 != *k)) {
            let ladder: Vec<i32> = if chosen.is_empty() { vec![0] } else { (-20..=20).map(|j| 4 * j).collect() };
            let mut local: Option<((f64, f64), i32)> = None;
            let try_exp = |e: i32, local: &mut Option<((f64, f64), i32)>| {
                let mut terms = chosen.clone();
                terms.push((k, e));
                let score = search_score(&norms_of(&terms));
                if local.is_none_or(|(s, _)| better(score, s)) {
                    *local = Some((score, e));
                }
            };
            for &e in &ladder {
                try_exp(e, &mut local);
            }
            if !chosen.is_empty() {
                let centre = local.unwrap().1;
                for delta in [-3, -2, -1, 1, 2, 3] {
                    try_exp(centre + delta, &mut local);
                }
            }
            let (score, e) = local.unwrap();
            if best.is_none_or(|(s, _)| better(score, s)) {
                best = Some((score, (k, e)));
            }
        }
        let Some((score, term)) = best else { break };
        if !chosen.is_empty() && !better(score, current) {
            break;
        }
        chosen.push(term);
        current = score;
        let pairs: Vec<(f64, f64)> = norms_of(&chosen).into_iter().map(|n| (n, n)).collect();
        if dip_then_spike(&pairs).is_some_and(|b| b.0 >= ratio_target) {
            break;
        }
    }

    let terms: Vec<SearchTerm> = if chosen.is_empty() {
        vec![SearchTerm { atom: atoms[0], coefficient: Rational::one() }]
    } else {
        chosen.iter().map(|&(k, e)| SearchTerm { atom: eligible[k].0, coefficient: powi(&int(2), e as i64) }).collect()
    };
    let vector = SimpleFunction::new(terms.iter().map(|t| (t.atom, t.coefficient.clone())))?;
    let op = Operator::Composition(CompositionOperator::new(space.clone(), tau.clone())?);
    let trace = orbit_trace(&op, &vector, idx, horizon)?;
    let class = classify_relative(&trace, settings.thresholds)?;
    let enclosures: Vec<(f64, f64)> = trace.norms().map(|n| (n.lower(), n.upper())).collect();
    let best = dip_then_spike(&enclosures).map_or((0.0, 0, 0), |(r, _, d, s)| (r, d, s));
    let status = if best.0 >= ratio_target { Status::Confirmed } else { Status::InconclusiveAtHorizon };
    Ok(IrregularSearch { status, vector, terms, class, dip_spike_ratio: best.0, dip_at: best.1, spike_at: best.2 })
}

/// Atoms of `M_θ` split by `|θ| < 1`, `= 1`, `> 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTable {
    pub contracting: MeasurableSet,
    pub neutral: MeasurableSet,
    pub expanding: MeasurableSet,
    /// Whether atoms outside the table exist (structured spaces).
    pub partial: bool,
}

pub fn multiplier_table(op: &MultiplicationOperator, window: usize) -> Result<MultiplierTable> {
    let space = op.space();
    let atoms: Vec<AtomId> = match space.atom_count() {
        Some(_) => space.atoms().collect(),
        None => space.window(window)?.atoms,
    };
    let mut table = MultiplierTable {
        contracting: MeasurableSet::empty(),
        neutral: MeasurableSet::empty(),
        expanding: MeasurableSet::empty(),
        partial: space.atom_count().is_none(),
    };
    for a in atoms {
        let theta = op.theta().at(&a);
        let class = match theta.cmp(&Rational::one()) {
            std::cmp::Ordering::Less => &mut table.contracting,
            std::cmp::Ordering::Equal => &mut table.neutral,
            std::cmp::Ordering::Greater => &mut table.expanding,
        };
        class.insert(a);
    }
    Ok(table)
}

/// Multiplication operators are never Li-Yorke chaotic.
///
/// A vector whose orbit has norm liminf zero must vanish on `{|θ| ≥ 1}`,
/// since there `|θⁿg| ≥ |g|` pointwise. On `{|θ| < 1}` the operator does not
/// increase `g**`, so the orbit norms are nonincreasing and cannot have a
/// positive limsup. Hence no semi-irregular vector exists.
pub fn multiplication_li_yorke(op: &MultiplicationOperator, window: usize) -> Result<Verdict> {
    let table = multiplier_table(op, window)?;
    let mut w = Witness::default();
    w.add_set(table.contracting.clone());
    w.add_set(table.neutral.clone());
    w.add_set(table.expanding.clone());
    w.scalar("default_theta", op.theta().default_value().clone());
    w.scalar("contracting_atoms", int(table.contracting.len() as i64));
    w.scalar("neutral_atoms", int(table.neutral.len() as i64));
    w.scalar("expanding_atoms", int(table.expanding.len() as i64));
    w.note("sets: atoms with |θ| < 1, = 1, > 1");
    w.note(
        "argument restructured: liminf 0 forces the vector to vanish where |θ| ≥ 1; \
         on |θ| < 1 the orbit norms are nonincreasing, so limsup is 0",
    );
    if table.partial {
        w.note("atoms outside the listed window take the default θ");
    }
    Ok(Verdict::new(
        Status::Refuted,
        0,
        format!(
            "no semi-irregular vector: {} contracting, {} neutral, {} expanding atoms",
            table.contracting.len(),
            table.neutral.len(),
            table.expanding.len()
        ),
    )
    .with_witness(w))
}

fn describe_set(set: &MeasurableSet) -> String {
    let atoms: Vec<String> = set.atoms().take(6).map(|a| a.to_string()).collect();
    let more = if set.len() > 6 { ", …" } else { "" };
    format!("{{{}{more}}}", atoms.join(", "))
}

fn short(r: &Rational) -> String {
    let text = rational::format_rational(r);
    if text.len() <= 24 {
        text
    } else {
        format!("{:.6e}", to_f64(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Family;
    use crate::operators::Multiplier;

    fn builtin(f: Family) -> (MeasureSpace, Transformation) {
        MeasureSpace::builtin(f).unwrap()
    }

    fn left_tail() -> Vec<MeasurableSet> {
        (0..6).map(|k| MeasurableSet::singleton(AtomId::Pair(-k, 0))).collect()
    }

    #[test]
    fn example24_left_tail_is_refuted_with_one_ninth() {
        let (s, t) = builtin(Family::Comb);
        let v = li_yorke_criterion(&s, &t, 40, Some(&left_tail()), &ChaosSettings::default()).unwrap();
        assert_eq!(v.status, Status::Refuted);
        let w = v.witness.unwrap();
        assert_eq!(w.scalar_value("sup_ratio"), Some(&ratio(1, 9)));
        assert_eq!(w.scalar_value("sup_ratio_at"), Some(&int(1)));
        assert_eq!(v.trend.unwrap().ratio, ratio(1, 9));
    }

    #[test]
    fn example24_default_candidates_are_refuted() {
        let (s, t) = builtin(Family::Comb);
        let v = li_yorke_criterion(&s, &t, 64, None, &ChaosSettings::default()).unwrap();
        assert_eq!(v.status, Status::Refuted, "{}", v.summary);
        assert_eq!(v.witness.unwrap().scalar_value("sup_ratio"), Some(&ratio(1, 9)));
    }

    #[test]
    fn unilateral_shift_is_confirmed() {
        let (s, t) = builtin(Family::UnilateralShift { r: ratio(1, 2) });
        let v = li_yorke_criterion(&s, &t, 40, None, &ChaosSettings::default()).unwrap();
        assert_eq!(v.status, Status::Confirmed);
        let w = v.witness.as_ref().unwrap();
        assert_eq!(w.sets, vec![MeasurableSet::singleton(AtomId::Int(21))]);
        assert_eq!(w.scalar_value("vanishes_from"), Some(&int(21)));
        assert_eq!(v.trend.as_ref().unwrap().ratio, int(2));
        w.replay(&s, &t).unwrap();
    }

    #[test]
    fn identity_is_refuted() {
        let (s, _) = builtin(Family::UnilateralShift { r: ratio(1, 2) });
        let v = li_yorke_criterion(&s, &Transformation::Identity, 10, None, &ChaosSettings::default()).unwrap();
        assert_eq!(v.status, Status::Refuted);
        assert!(li_yorke_criterion(&s, &Transformation::Identity, 10, Some(&[]), &ChaosSettings::default()).is_err());
        assert!(li_yorke_criterion(&s, &Transformation::Identity, 3, None, &ChaosSettings::default()).is_err());
    }

    #[test]
    fn example24_corollary_conditions_hold_but_guard_refuses() {
        let (s, t) = builtin(Family::Comb);
        let a = MeasurableSet::singleton(AtomId::Pair(0, 0));
        let report = corollary_conditions(&s, &t, &a, 30, &ChaosSettings::default()).unwrap();
        assert_eq!(report.a.status, Status::Confirmed);
        assert_eq!(report.b.status, Status::Confirmed);
        let err = injective_li_yorke_criterion(&s, &t, &a, 30, &ChaosSettings::default()).unwrap_err();
        assert!(matches!(err, Error::NotInjective { .. }));
    }

    #[test]
    fn unilateral_corollary() {
        let (s, t) = builtin(Family::UnilateralShift { r: ratio(1, 2) });
        let a = MeasurableSet::singleton(AtomId::Int(5));
        let report = injective_li_yorke_criterion(&s, &t, &a, 30, &ChaosSettings::default()).unwrap();
        assert_eq!(report.a.witness.as_ref().unwrap().scalar_value("vanishes_from"), Some(&int(5)));
        assert_eq!(report.b.status, Status::Confirmed);
        assert_eq!(report.b.trend.as_ref().unwrap().ratio, int(2));
        assert_eq!(report.combined.status, Status::Confirmed);
        report.b.witness.as_ref().unwrap().replay(&s, &t).unwrap();
    }

    #[test]
    fn spike_union_offsets_for_unilateral() {
        let (s, t) = builtin(Family::UnilateralShift { r: ratio(1, 2) });
        let a = MeasurableSet::singleton(AtomId::Int(5));
        let budget = ratio(1, 1_000_000) * ratio(1, 32);
        let (set, offsets) = spike_union(&s, &t, &a, 64, &budget).unwrap();
        assert_eq!(offsets, vec![0, 25, 50]);
        assert_eq!(set, [5, 30, 55].map(AtomId::Int).into_iter().collect());
    }

    #[test]
    fn unilateral_equivalences() {
        let (s, t) = builtin(Family::UnilateralShift { r: ratio(1, 2) });
        let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
        let probes = [MeasurableSet::singleton(AtomId::Int(5))];
        let m = finite_measure_equivalences(&s, &t, &idx, 64, &probes, &ChaosSettings::default()).unwrap();
        for c in Condition::ALL {
            assert_eq!(m.get(c).status, Status::Confirmed, "{c:?}: {}", m.get(c).summary);
        }
        assert!(m.consistent);
    }

    #[test]
    fn permutation_equivalences_are_refuted() {
        let s = MeasureSpace::finite((0..4).map(|i| (AtomId::Int(i), ratio(1, 4)))).unwrap();
        let t = Transformation::table(&s, (0..4).map(|i| (AtomId::Int(i), AtomId::Int((i + 1) % 4)))).unwrap();
        let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
        let probes = [MeasurableSet::singleton(AtomId::Int(0))];
        let m = finite_measure_equivalences(&s, &t, &idx, 16, &probes, &ChaosSettings::default()).unwrap();
        assert_eq!(m.probes, 15);
        for c in Condition::ALL {
            assert_eq!(m.get(c).status, Status::Refuted, "{c:?}");
        }
        assert!(m.consistent);
        assert!(finite_measure_equivalences(&s, &t, &idx, 16, &[], &ChaosSettings::default()).is_err());
    }

    #[test]
    fn equivalences_need_finite_mass() {
        let (s, t) = builtin(Family::BilateralShift { r: ratio(1, 2) });
        let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
        let probes = [MeasurableSet::singleton(AtomId::Int(0))];
        let err = finite_measure_equivalences(&s, &t, &idx, 16, &probes, &ChaosSettings::default()).unwrap_err();
        assert_eq!(err, Error::InfiniteMass);
    }

    #[test]
    fn search_on_identity_is_best_effort() {
        let (s, _) = builtin(Family::UnilateralShift { r: ratio(1, 2) });
        let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
        let r =
            irregular_vector_search(&s, &Transformation::Identity, &idx, 16, 1e6, &SearchSettings::default()).unwrap();
        assert_eq!(r.status, Status::InconclusiveAtHorizon);
        assert_eq!(r.class.classification, Classification::Regular);
        assert!(
            irregular_vector_search(&s, &Transformation::Identity, &idx, 16, 1.0, &SearchSettings::default()).is_err()
        );
    }

    #[test]
    fn multiplication_table_classes() {
        let s = MeasureSpace::finite((0..3).map(|i| (AtomId::Int(i), int(1)))).unwrap();
        let theta = Multiplier::new([(AtomId::Int(1), int(1)), (AtomId::Int(2), int(3))], ratio(1, 2)).unwrap();
        let op = MultiplicationOperator::new(s, theta).unwrap();
        let v = multiplication_li_yorke(&op, 10).unwrap();
        assert_eq!(v.status, Status::Refuted);
        let sets = &v.witness.unwrap().sets;
        assert_eq!(sets[0], MeasurableSet::singleton(AtomId::Int(0)));
        assert_eq!(sets[2], MeasurableSet::singleton(AtomId::Int(2)));
    }
}
