use lorentz_core::chaos::{
    finite_measure_equivalences, irregular_vector_search, li_yorke_criterion, ChaosSettings, SearchSettings,
};
use lorentz_core::expansivity::{
    positively_expansive, sphere_divergence_probe, uniformly_expansive_split, uniformly_positively_expansive,
    DIVERGENCE_THRESHOLD,
};
use lorentz_core::norm::lorentz_norm;
use lorentz_core::operators::{
    compose_apply, composition_bound, multiply_apply, orbit_trace, CompositionOperator, MultiplicationOperator,
    Multiplier, Operator, SphereSample,
};
use lorentz_core::oracle::{compare_norms, criterion_by_definition, rearrangement_by_sort};
use lorentz_core::rational::{int, powi, ratio};
use lorentz_core::rearrangement::{decreasing_rearrangement, distribution_function, maximal_average};
use lorentz_core::sequence::SetOrbit;
use lorentz_core::transform::preimage_n;
use lorentz_core::*;
use num_traits::Zero;
use proptest::prelude::*;

fn rational_in(
    num: std::ops::RangeInclusive<i64>,
    den: std::ops::RangeInclusive<i64>,
) -> impl Strategy<Value = Rational> {
    (num, den).prop_map(|(n, d)| ratio(n, d))
}

/// A finite space on atoms `0..n` with random positive rational weights.
fn finite_space(max_atoms: usize) -> impl Strategy<Value = MeasureSpace> {
    prop::collection::vec(rational_in(1..=20, 1..=12), 1..=max_atoms).prop_map(|weights| {
        MeasureSpace::finite(weights.into_iter().enumerate().map(|(i, w)| (AtomId::Int(i as i64), w))).unwrap()
    })
}

/// A space together with a simple function on it.
fn space_and_function(max_atoms: usize) -> impl Strategy<Value = (MeasureSpace, SimpleFunction)> {
    finite_space(max_atoms).prop_flat_map(|space| {
        let n = space.atom_count().unwrap();
        (Just(space), prop::collection::vec(rational_in(0..=9, 1..=4), n)).prop_map(|(space, values)| {
            let g =
                SimpleFunction::new(values.into_iter().enumerate().map(|(i, v)| (AtomId::Int(i as i64), v))).unwrap();
            (space, g)
        })
    })
}

fn subset_of(n: usize) -> impl Strategy<Value = MeasurableSet> {
    prop::collection::vec(any::<bool>(), n)
        .prop_map(|mask| mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| AtomId::Int(i as i64)).collect())
}

/// A finite space with a random self-map given as a table.
fn space_with_map(max_atoms: usize) -> impl Strategy<Value = (MeasureSpace, Transformation)> {
    finite_space(max_atoms).prop_flat_map(|space| {
        let n = space.atom_count().unwrap();
        (Just(space), prop::collection::vec(0..n as i64, n)).prop_map(|(space, targets)| {
            let pairs = targets.into_iter().enumerate().map(|(i, j)| (AtomId::Int(i as i64), AtomId::Int(j)));
            let tau = Transformation::table(&space, pairs).unwrap();
            (space, tau)
        })
    })
}

/// A finite space with a random permutation.
fn space_with_permutation(max_atoms: usize) -> impl Strategy<Value = (MeasureSpace, Transformation)> {
    finite_space(max_atoms).prop_flat_map(|space| {
        let n = space.atom_count().unwrap();
        (Just(space), Just((0..n as i64).collect::<Vec<_>>()).prop_shuffle()).prop_map(|(space, perm)| {
            let pairs = perm.into_iter().enumerate().map(|(i, j)| (AtomId::Int(i as i64), AtomId::Int(j)));
            let tau = Transformation::table(&space, pairs).unwrap();
            (space, tau)
        })
    })
}

fn index() -> impl Strategy<Value = LorentzIndex> {
    (
        prop::sample::select(vec![ratio(3, 2), int(2), ratio(5, 2), int(3), int(4)]),
        prop::sample::select(vec![int(1), ratio(3, 2), int(2), int(3)]),
    )
        .prop_map(|(p, q)| LorentzIndex::finite(p, q).unwrap())
}

fn half() -> Rational {
    ratio(1, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn measure_is_additive(space in finite_space(10), mask in prop::collection::vec(0u8..3, 10)) {
        let n = space.atom_count().unwrap();
        let pick = |k: u8| -> MeasurableSet {
            (0..n).filter(|&i| mask[i] == k).map(|i| AtomId::Int(i as i64)).collect()
        };
        let (a, b) = (pick(0), pick(1));
        prop_assert_eq!(space.measure_of(&a.union(&b)).unwrap(), space.measure_of(&a).unwrap() + space.measure_of(&b).unwrap());
        prop_assert_eq!(space.measure_of(&a).unwrap().is_zero(), a.is_empty());
    }

    #[test]
    fn fibers_contain_their_atoms((space, tau) in space_with_map(10)) {
        for a in space.atoms() {
            prop_assert!(tau.preimage(&space, &MeasurableSet::singleton(tau.apply(&a))).contains(&a));
        }
    }

    #[test]
    fn preimages_compose((space, tau) in space_with_map(8), n in 0usize..6, m in 0usize..6, mask in subset_of(8)) {
        let set: MeasurableSet = mask.atoms().filter(|a| space.contains(a)).copied().collect();
        let direct = preimage_n(&space, &tau, &set, n + m);
        let staged = preimage_n(&space, &tau, &preimage_n(&space, &tau, &set, m), n);
        prop_assert_eq!(direct, staged);
    }

    #[test]
    fn example24_preimages_compose(n in 0usize..6, m in 0usize..6, i in -4i64..4) {
        let (space, tau) = MeasureSpace::builtin(Family::Comb).unwrap();
        let set = MeasurableSet::singleton(AtomId::Pair(i, 0));
        prop_assert_eq!(
            preimage_n(&space, &tau, &set, n + m),
            preimage_n(&space, &tau, &preimage_n(&space, &tau, &set, m), n)
        );
    }

    #[test]
    fn bilateral_shift_doubles(atoms in prop::collection::btree_set(-20i64..20, 1..6), n in 0usize..=30) {
        let (space, tau) = MeasureSpace::builtin(Family::BilateralShift { r: half() }).unwrap();
        let set: MeasurableSet = atoms.into_iter().map(AtomId::Int).collect();
        let pre = preimage_n(&space, &tau, &set, n);
        prop_assert_eq!(space.measure_of(&pre).unwrap(), powi(&int(2), n as i64) * space.measure_of(&set).unwrap());
    }

    #[test]
    fn rearrangement_is_equimeasurable((space, g) in space_and_function(12)) {
        let step = decreasing_rearrangement(&space, &g).unwrap();
        for v in step.values().iter().chain(std::iter::once(&Rational::zero())) {
            prop_assert_eq!(distribution_function(&space, &g, v).unwrap(), step.distribution(v));
        }
    }

    #[test]
    fn norm_is_homogeneous((space, g) in space_and_function(8), idx in index(), c in rational_in(1..=50, 1..=7)) {
        prop_assume!(!g.is_zero());
        let a = lorentz_norm(&space, &g.scale(&c), &idx).unwrap();
        let b = lorentz_norm(&space, &g, &idx).unwrap().scale(rational::to_f64(&c));
        prop_assert!((a.value - b.value).abs() <= 2.0 * (a.abs_error + b.abs_error), "{a} vs {b}");
    }

    #[test]
    fn norm_is_monotone((space, g) in space_and_function(8), idx in index(), bumps in prop::collection::vec(rational_in(0..=3, 1..=2), 8)) {
        let h = g.add(&SimpleFunction::new(space.atoms().zip(bumps)).unwrap());
        let (ng, nh) = (lorentz_norm(&space, &g, &idx).unwrap(), lorentz_norm(&space, &h, &idx).unwrap());
        prop_assert!(ng.value <= nh.value + ng.abs_error + nh.abs_error);
    }

    #[test]
    fn maximal_average_dominates((space, g) in space_and_function(10), t in rational_in(1..=100, 1..=30)) {
        let step = decreasing_rearrangement(&space, &g).unwrap();
        prop_assert!(maximal_average(&step, &t).unwrap() >= step.eval(&t));
    }

    #[test]
    fn indicators_are_transported((space, tau) in space_with_map(8), mask in subset_of(8), n in 0usize..=20) {
        let set: MeasurableSet = mask.atoms().filter(|a| space.contains(a)).copied().collect();
        let op = CompositionOperator::new(space.clone(), tau.clone()).unwrap();
        let moved = compose_apply(&op, &SimpleFunction::indicator(&set), n).unwrap();
        prop_assert_eq!(moved, SimpleFunction::indicator(&preimage_n(&space, &tau, &set, n)));
    }

    #[test]
    fn distributions_are_transported((space, tau) in space_with_map(8), values in prop::collection::vec(0i64..5, 8), lambda in 0i64..5) {
        let g = SimpleFunction::new(space.atoms().zip(values.into_iter().map(int))).unwrap();
        let op = CompositionOperator::new(space.clone(), tau.clone()).unwrap();
        let moved = compose_apply(&op, &g, 1).unwrap();
        let level: MeasurableSet = g.entries().filter(|(_, v)| **v > int(lambda)).map(|(a, _)| *a).collect();
        prop_assert_eq!(
            distribution_function(&space, &moved, &int(lambda)).unwrap(),
            space.measure_of(&tau.preimage(&space, &level)).unwrap()
        );
    }

    #[test]
    fn composition_respects_its_bound(entries in prop::collection::btree_map(-10i64..10, rational_in(1..=9, 1..=3), 1..6), idx in index()) {
        let (space, tau) = MeasureSpace::builtin(Family::BilateralShift { r: half() }).unwrap();
        let g = SimpleFunction::new(entries.into_iter().map(|(i, v)| (AtomId::Int(i), v))).unwrap();
        let bound = composition_bound(&space, &tau, &idx, &space.window(64).unwrap()).unwrap();
        let op = CompositionOperator::new(space.clone(), tau).unwrap();
        let before = lorentz_norm(&space, &g, &idx).unwrap();
        let after = lorentz_norm(&space, &compose_apply(&op, &g, 1).unwrap(), &idx).unwrap();
        let limit = bound.operator_bound.upper() * before.upper();
        prop_assert!(after.value <= limit + 2.0 * after.abs_error, "{after} > {limit}");
    }

    #[test]
    fn contractive_multipliers_do_not_increase_norms((space, g) in space_and_function(8), thetas in prop::collection::vec(rational_in(0..=8, 8..=8), 8), idx in index()) {
        let theta = Multiplier::new(space.atoms().zip(thetas), int(1)).unwrap();
        let op = MultiplicationOperator::new(space.clone(), theta).unwrap();
        let before = lorentz_norm(&space, &g, &idx).unwrap();
        let after = lorentz_norm(&space, &multiply_apply(&op, &g, 1).unwrap(), &idx).unwrap();
        prop_assert!(after.value <= before.value + 2.0 * (before.abs_error + after.abs_error));
    }

    #[test]
    fn traces_match_iterated_application((space, tau) in space_with_map(8), values in prop::collection::vec(0i64..4, 8), n in 1usize..8) {
        let g = SimpleFunction::new(space.atoms().zip(values.into_iter().map(int))).unwrap();
        prop_assume!(!g.is_zero());
        let op = CompositionOperator::new(space.clone(), tau).unwrap();
        let trace = orbit_trace(&Operator::Composition(op.clone()), &g, &LorentzIndex::finite(int(2), int(2)).unwrap(), n).unwrap();
        let mut iterate = g.clone();
        for _ in 0..n {
            iterate = compose_apply(&op, &iterate, 1).unwrap();
        }
        let levels: Vec<Rational> = trace
            .level_values
            .iter()
            .map(|v| space.measure_of(&iterate.entries().filter(|(_, x)| *x == v).map(|(a, _)| *a).collect()).unwrap())
            .collect();
        prop_assert_eq!(&trace.entries[n].level_measures, &levels);
    }

    #[test]
    fn atom_ratios_bound_set_ratios(atoms in prop::collection::btree_set(-8i64..8, 1..5), n in 0usize..=10) {
        let (space, tau) = MeasureSpace::builtin(Family::BilateralValley { r: int(2) }).unwrap();
        let set: MeasurableSet = atoms.iter().map(|i| AtomId::Int(*i)).collect();
        let ratio_of = |s: &MeasurableSet| space.measure_of(&preimage_n(&space, &tau, s, n)).unwrap() / space.measure_of(s).unwrap();
        let atom_ratios: Vec<Rational> = set.atoms().map(|a| ratio_of(&MeasurableSet::singleton(*a))).collect();
        let r = ratio_of(&set);
        prop_assert!(atom_ratios.iter().min().unwrap() <= &r && &r <= atom_ratios.iter().max().unwrap());
    }

    #[test]
    fn mirrored_shifts_agree(num in 1i64..6, den in 1i64..6) {
        prop_assume!(num != den);
        let r = ratio(num, den);
        let (s1, t1) = MeasureSpace::builtin(Family::BilateralShift { r: r.clone() }).unwrap();
        let s2 = MeasureSpace::structured(Family::BilateralShift { r: r.recip() }).unwrap();
        let forward = positively_expansive(&s1, &t1, 16, 32).unwrap().status;
        let mirrored = positively_expansive(&s2, &Transformation::Shift(-1), 16, 32).unwrap().status;
        prop_assert_eq!(forward == Status::Confirmed, mirrored == Status::Confirmed);
    }

    #[test]
    fn equivalence_matrix_is_consistent((space, tau) in space_with_permutation(5), idx in index()) {
        let probes = [MeasurableSet::singleton(AtomId::Int(0))];
        let m = finite_measure_equivalences(&space, &tau, &idx, 12, &probes, &ChaosSettings::default()).unwrap();
        prop_assert!(m.consistent);
    }

    #[test]
    fn exhaustive_orbits_never_contradict_the_analyzer((space, tau) in space_with_map(6)) {
        let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
        let reports = criterion_by_definition(&space, &tau, &idx, 2, 12, 6).unwrap();
        prop_assert!(reports.iter().all(|r| r.pass), "{:?}", reports.iter().find(|r| !r.pass));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn sort_oracle_matches_rearrangement((space, g) in space_and_function(12)) {
        prop_assert_eq!(decreasing_rearrangement(&space, &g).unwrap(), rearrangement_by_sort(&space, &g).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quadrature_oracle_matches_norm((space, g) in space_and_function(8), p in prop::sample::select(vec![ratio(3, 2), int(2), int(3)]), q in 1i64..=3) {
        let idx = LorentzIndex::finite(p, int(q)).unwrap();
        let report = compare_norms(&space, &g, &idx, 512).unwrap();
        prop_assert!(report.pass, "{report:?}");
    }
}

#[test]
fn example24_measures_are_powers_of_ninth() {
    let (space, tau) = MeasureSpace::builtin(Family::Comb).unwrap();
    let orbit = SetOrbit::preimages(&space, &tau, &MeasurableSet::singleton(AtomId::Pair(0, 0)), 15);
    for n in 1..=15 {
        assert_eq!(orbit.measures[n], powi(&ratio(1, 9), n as i64));
    }
    let ratios = orbit.ratios();
    let sup = ratios[1..].iter().max().unwrap();
    assert_eq!(*sup, ratio(1, 9));
    assert_eq!(ratios.iter().skip(1).position(|r| r == sup), Some(0));
}

#[test]
fn confirmed_criteria_admit_irregular_vectors() {
    let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
    for r in [ratio(1, 2), ratio(1, 3), ratio(2, 3)] {
        let (space, tau) = MeasureSpace::builtin(Family::UnilateralShift { r }).unwrap();
        let v = li_yorke_criterion(&space, &tau, 128, None, &ChaosSettings::default()).unwrap();
        assert_eq!(v.status, Status::Confirmed, "{}", v.summary);
        v.witness.as_ref().unwrap().replay(&space, &tau).unwrap();
        let settings = SearchSettings { window: 128, ..SearchSettings::default() };
        let found = irregular_vector_search(&space, &tau, &idx, 128, 1e4, &settings).unwrap();
        assert_eq!(found.status, Status::Confirmed, "ratio {}", found.dip_spike_ratio);
    }
}

#[test]
fn uniform_verdicts_agree_with_the_sphere_probe() {
    let idx = LorentzIndex::finite(int(2), int(2)).unwrap();
    let (space, tau) = MeasureSpace::builtin(Family::BilateralShift { r: half() }).unwrap();
    let v = uniformly_positively_expansive(&space, &tau, 16, 32).unwrap();
    assert_eq!(v.status, Status::Confirmed);
    let samples: Vec<SphereSample> = space
        .window(50)
        .unwrap()
        .atoms
        .into_iter()
        .map(|a| {
            SphereSample::normalize(&space, &SimpleFunction::indicator(&MeasurableSet::singleton(a)), &idx).unwrap()
        })
        .collect();
    let op = Operator::Composition(CompositionOperator::new(space.clone(), tau).unwrap());
    let probe = sphere_divergence_probe(&op, &idx, &samples, 16, DIVERGENCE_THRESHOLD).unwrap();
    assert!(probe.all_passed);
    assert_eq!(probe.max_passage, Some(2));
}

#[test]
fn split_certificates_replay() {
    for family in [
        Family::BilateralValley { r: int(2) },
        Family::BilateralShift { r: half() },
        Family::BilateralShift { r: int(3) },
    ] {
        let (space, tau) = MeasureSpace::builtin(family).unwrap();
        let split = uniformly_expansive_split(&space, &tau, 20, 64).unwrap();
        assert_eq!(split.verdict.status, Status::Confirmed);
        split.certificate.unwrap().replay(&space, &tau).unwrap();
    }
}
