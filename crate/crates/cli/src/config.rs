//! The analysis config document and its translation into core objects.

use std::path::PathBuf;

use lorentz_core::chaos::{ChaosSettings, SearchSettings};
use lorentz_core::expansivity::DIVERGENCE_THRESHOLD;
use lorentz_core::operators::{CompositionOperator, MultiplicationOperator, Multiplier, Operator, Thresholds};
use lorentz_core::rational::{self, int, ratio, to_f64};
use lorentz_core::{
    AtomId, Family, LorentzIndex, MeasurableSet, MeasureSpace, Rational, SimpleFunction, Transformation,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_HORIZON: usize = 64;
pub const DEFAULT_WINDOW: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub space: SpaceSpec,
    #[serde(default)]
    pub map: MapSpec,
    #[serde(default = "default_indices")]
    pub indices: Vec<LorentzIndex>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub thresholds: ThresholdConfig,
    pub analyses: Vec<Analysis>,
    #[serde(default)]
    pub inputs: Inputs,
    #[serde(default)]
    pub outputs: Outputs,
}

fn default_indices() -> Vec<LorentzIndex> {
    vec![LorentzIndex::finite(int(2), int(2)).expect("(2, 2) is a valid index")]
}

fn default_horizon() -> usize {
    DEFAULT_HORIZON
}

fn default_window() -> usize {
    DEFAULT_WINDOW
}

/// Either a built-in family or an explicit list of weighted atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceSpec {
    Explicit { atoms: Vec<WeightedAtom> },
    Family(Family),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedAtom {
    pub atom: AtomId,
    #[serde(with = "rational::serde_q")]
    pub weight: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    /// The family's own map.
    #[default]
    Builtin,
    Identity,
    Shift {
        by: i64,
    },
    Table {
        pairs: Vec<(AtomId, AtomId)>,
    },
    Multiplier {
        theta: Multiplier,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdConfig {
    #[serde(with = "rational::serde_q")]
    pub low: Rational,
    #[serde(with = "rational::serde_q")]
    pub high: Rational,
    pub divergence: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self { low: ratio(1, 1_000_000), high: int(1_000_000), divergence: DIVERGENCE_THRESHOLD }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    CheckInjective,
    LiYorkeCriterion,
    CorollaryConditions,
    InjectiveLiYorkeCriterion,
    FiniteMeasureEquivalences,
    IrregularVectorSearch,
    MultiplicationLiYorke,
    PositivelyExpansive,
    UniformlyPositivelyExpansive,
    ExpansiveInvertible,
    UniformlyExpansiveSplit,
    AtomClassTable,
    SphereDivergenceProbe,
    CompositionBound,
}

impl Analysis {
    /// Analyses evaluated once per Lorentz index.
    pub fn per_index(self) -> bool {
        matches!(
            self,
            Analysis::FiniteMeasureEquivalences
                | Analysis::IrregularVectorSearch
                | Analysis::SphereDivergenceProbe
                | Analysis::CompositionBound
        )
    }
}

/// Optional inputs for individual analyses.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    /// Candidate family for the Li-Yorke criterion; window singletons if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<MeasurableSet>>,
    /// Sets for the corollary conditions, equivalence probes and sphere samples.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sets: Option<Vec<MeasurableSet>>,
    /// Vector traced by `orbit` and `norm`; the first atom's indicator if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<SimpleFunction>,
    #[serde(default)]
    pub search: SearchConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub target: f64,
    pub max_terms: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<AtomId>>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { target: 1e6, max_terms: 6, atoms: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    /// Directory receiving one orbit CSV per index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orbit_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_table_csv: Option<PathBuf>,
}

/// Default number of sphere samples and corollary sets when none are given.
const DEFAULT_SAMPLE_ATOMS: usize = 16;

/// A config resolved into a space and an operator.
#[derive(Clone, Debug)]
pub struct Setup {
    pub space: MeasureSpace,
    pub operator: Operator,
}

impl Setup {
    /// The composition map, if the operator is one.
    pub fn tau(&self) -> Option<&Transformation> {
        match &self.operator {
            Operator::Composition(c) => Some(c.tau()),
            Operator::Multiplication(_) => None,
        }
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let config: AnalysisConfig = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let fail = |msg: &str| Err(CliError::Schema(msg.to_string()));
        if self.indices.is_empty() {
            return fail("at least one Lorentz index is required");
        }
        if self.horizon == 0 {
            return fail("horizon must be positive");
        }
        if self.window == 0 {
            return fail("window must be positive");
        }
        let t = &self.thresholds;
        if !(t.low >= int(0) && t.low < t.high) {
            return fail("thresholds must satisfy 0 <= low < high");
        }
        if !(t.divergence.is_finite() && t.divergence > 0.0) {
            return fail("divergence threshold must be positive and finite");
        }
        if !(self.inputs.search.target > 1.0 && self.inputs.search.target.is_finite()) {
            return fail("search target must be a finite number above 1");
        }
        Ok(())
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let schema = |e: lorentz_core::Error| CliError::Schema(e.to_string());
        let (space, builtin) = match &self.space {
            SpaceSpec::Family(f) => {
                let (s, t) = MeasureSpace::builtin(f.clone()).map_err(schema)?;
                (s, Some(t))
            }
            SpaceSpec::Explicit { atoms } => {
                (MeasureSpace::finite(atoms.iter().map(|a| (a.atom, a.weight.clone()))).map_err(schema)?, None)
            }
        };
        let tau = match &self.map {
            MapSpec::Builtin => {
                builtin.ok_or_else(|| CliError::Schema("explicit spaces need an explicit map".into()))?
            }
            MapSpec::Identity => Transformation::Identity,
            MapSpec::Shift { by } => Transformation::Shift(*by),
            MapSpec::Table { pairs } => Transformation::table(&space, pairs.iter().copied()).map_err(schema)?,
            MapSpec::Multiplier { theta } => {
                let op = MultiplicationOperator::new(space.clone(), theta.clone()).map_err(schema)?;
                return Ok(Setup { space, operator: Operator::Multiplication(op) });
            }
        };
        let op = CompositionOperator::new(space.clone(), tau).map_err(schema)?;
        Ok(Setup { space, operator: Operator::Composition(op) })
    }

    pub fn chaos_settings(&self) -> ChaosSettings {
        ChaosSettings { window: self.window, low: self.thresholds.low.clone(), high: self.thresholds.high.clone() }
    }

    pub fn search_settings(&self) -> SearchSettings {
        SearchSettings {
            window: self.window,
            max_terms: self.inputs.search.max_terms,
            thresholds: Thresholds { low: to_f64(&self.thresholds.low), high: to_f64(&self.thresholds.high) },
            candidates: self.inputs.search.atoms.clone(),
        }
    }

    /// Sets given in the config, or singletons of the first atoms.
    pub fn sets_or_singletons(&self, space: &MeasureSpace) -> Result<Vec<MeasurableSet>, lorentz_core::Error> {
        match &self.inputs.sets {
            Some(sets) => Ok(sets.clone()),
            None => Ok(space
                .window(self.window.min(DEFAULT_SAMPLE_ATOMS))?
                .atoms
                .into_iter()
                .map(MeasurableSet::singleton)
                .collect()),
        }
    }

    /// The configured vector, or the indicator of the first canonical atom.
    pub fn vector(&self, space: &MeasureSpace) -> Result<SimpleFunction, lorentz_core::Error> {
        match &self.inputs.vector {
            Some(v) => Ok(v.clone()),
            None => {
                let first = space.window(1)?.atoms[0];
                Ok(SimpleFunction::indicator(&MeasurableSet::singleton(first)))
            }
        }
    }
}
