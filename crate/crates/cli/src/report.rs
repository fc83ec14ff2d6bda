//! Orchestration of the requested analyses into a versioned report.

use std::path::PathBuf;

use lorentz_core::chaos::{
    corollary_conditions, finite_measure_equivalences, injective_li_yorke_criterion, irregular_vector_search,
    li_yorke_criterion, multiplication_li_yorke, multiplier_table, CorollaryReport, EquivalenceMatrix, IrregularSearch,
    MultiplierTable,
};
use lorentz_core::expansivity::{
    examined_atoms, expansive_invertible, positively_expansive, sphere_divergence_probe, uniformly_expansive_split,
    uniformly_positively_expansive, AtomClassTable, ProbeReport, SplitAnalysis,
};
use lorentz_core::operators::{composition_bound, orbit_trace, CompositionBound, Operator, SphereSample};
use lorentz_core::transform::check_injective;
use lorentz_core::{LorentzIndex, MeasurableSet, SimpleFunction, Transformation, Verdict};
use serde::{Deserialize, Serialize};

use crate::config::{Analysis, AnalysisConfig, Setup};
use crate::error::CliError;
use crate::export::{export_class_table_csv, export_orbit_csv};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "lorentz-dyn";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self { name: TOOL_NAME.into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub config: AnalysisConfig,
    pub results: Vec<AnalysisResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub orbit_traces: Vec<TraceFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisResult {
    pub analysis: Analysis,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<LorentzIndex>,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Verdict {
        verdict: Verdict,
    },
    Corollary {
        set: MeasurableSet,
        report: CorollaryReport,
    },
    Equivalences {
        matrix: EquivalenceMatrix,
    },
    Search {
        search: IrregularSearch,
    },
    Multiplication {
        verdict: Verdict,
        table: MultiplierTable,
    },
    Split {
        split: SplitAnalysis,
    },
    ClassTable {
        table: AtomClassTable,
    },
    Probe {
        samples: Vec<SimpleFunction>,
        report: ProbeReport,
    },
    Bound {
        bound: CompositionBound,
    },
    /// A precondition of the analysis failed; the run went on.
    Error {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub index: LorentzIndex,
    pub path: PathBuf,
    pub rows: usize,
}

impl Report {
    /// Analyses whose preconditions failed.
    pub fn failures(&self) -> impl Iterator<Item = &AnalysisResult> {
        self.results.iter().filter(|r| matches!(r.outcome, Outcome::Error { .. }))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("reports serialize");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Schema(format!("report: {e}")))
    }
}

fn composition(setup: &Setup) -> Result<&Transformation, lorentz_core::Error> {
    setup.tau().ok_or_else(|| lorentz_core::Error::IncompatibleMap("this analysis needs a composition operator".into()))
}

fn sphere_samples(
    config: &AnalysisConfig,
    setup: &Setup,
    idx: &LorentzIndex,
) -> lorentz_core::Result<Vec<SphereSample>> {
    config
        .sets_or_singletons(&setup.space)?
        .iter()
        .map(|s| SphereSample::normalize(&setup.space, &SimpleFunction::indicator(s), idx))
        .collect()
}

/// Runs one analysis, once or per set. Core errors become `Outcome::Error`.
fn evaluate(config: &AnalysisConfig, setup: &Setup, analysis: Analysis, idx: &LorentzIndex) -> Vec<Outcome> {
    let space = &setup.space;
    let horizon = config.horizon;
    let window = config.window;
    let settings = config.chaos_settings();
    let verdict = |v: lorentz_core::Result<Verdict>| v.map(|verdict| vec![Outcome::Verdict { verdict }]);

    let result: lorentz_core::Result<Vec<Outcome>> = (|| match analysis {
        Analysis::CheckInjective => verdict(check_injective(composition(setup)?, &space.window(window)?)),
        Analysis::LiYorkeCriterion => verdict(li_yorke_criterion(
            space,
            composition(setup)?,
            horizon,
            config.inputs.candidates.as_deref(),
            &settings,
        )),
        Analysis::CorollaryConditions | Analysis::InjectiveLiYorkeCriterion => {
            let tau = composition(setup)?;
            config
                .sets_or_singletons(space)?
                .into_iter()
                .map(|set| {
                    let report = if analysis == Analysis::CorollaryConditions {
                        corollary_conditions(space, tau, &set, horizon, &settings)?
                    } else {
                        injective_li_yorke_criterion(space, tau, &set, horizon, &settings)?
                    };
                    Ok(Outcome::Corollary { set, report })
                })
                .collect()
        }
        Analysis::FiniteMeasureEquivalences => {
            let probes = config.sets_or_singletons(space)?;
            let matrix = finite_measure_equivalences(space, composition(setup)?, idx, horizon, &probes, &settings)?;
            Ok(vec![Outcome::Equivalences { matrix }])
        }
        Analysis::IrregularVectorSearch => {
            let search = irregular_vector_search(
                space,
                composition(setup)?,
                idx,
                horizon,
                config.inputs.search.target,
                &config.search_settings(),
            )?;
            Ok(vec![Outcome::Search { search }])
        }
        Analysis::MultiplicationLiYorke => match &setup.operator {
            Operator::Multiplication(op) => Ok(vec![Outcome::Multiplication {
                verdict: multiplication_li_yorke(op, window)?,
                table: multiplier_table(op, window)?,
            }]),
            Operator::Composition(_) => {
                Err(lorentz_core::Error::IncompatibleMap("this analysis needs a multiplication operator".into()))
            }
        },
        Analysis::PositivelyExpansive => verdict(positively_expansive(space, composition(setup)?, horizon, window)),
        Analysis::UniformlyPositivelyExpansive => {
            verdict(uniformly_positively_expansive(space, composition(setup)?, horizon, window))
        }
        Analysis::ExpansiveInvertible => verdict(expansive_invertible(space, composition(setup)?, horizon, window)),
        Analysis::UniformlyExpansiveSplit => {
            Ok(vec![Outcome::Split { split: uniformly_expansive_split(space, composition(setup)?, horizon, window)? }])
        }
        Analysis::AtomClassTable => {
            let tau = composition(setup)?;
            let atoms = examined_atoms(space, window, horizon)?;
            let table = AtomClassTable::build(space, tau, &atoms, horizon, tau.is_invertible(space));
            Ok(vec![Outcome::ClassTable { table }])
        }
        Analysis::SphereDivergenceProbe => {
            let samples = sphere_samples(config, setup, idx)?;
            let report =
                sphere_divergence_probe(&setup.operator, idx, &samples, horizon, config.thresholds.divergence)?;
            Ok(vec![Outcome::Probe { samples: samples.into_iter().map(|s| s.vector).collect(), report }])
        }
        Analysis::CompositionBound => {
            let bound = composition_bound(space, composition(setup)?, idx, &space.window(window)?)?;
            Ok(vec![Outcome::Bound { bound }])
        }
    })();
    result.unwrap_or_else(|e| vec![Outcome::Error { message: e.to_string() }])
}

/// Runs the requested analyses in order. Configured CSV outputs are written
/// as a side effect and referenced from the report.
pub fn run(config: &AnalysisConfig) -> Result<Report, CliError> {
    config.validate()?;
    let setup = config.setup()?;
    let mut results = Vec::new();
    for &analysis in &config.analyses {
        if analysis.per_index() {
            for idx in &config.indices {
                for outcome in evaluate(config, &setup, analysis, idx) {
                    results.push(AnalysisResult { analysis, index: Some(idx.clone()), outcome });
                }
            }
        } else {
            for outcome in evaluate(config, &setup, analysis, &config.indices[0]) {
                results.push(AnalysisResult { analysis, index: None, outcome });
            }
        }
    }

    let mut orbit_traces = Vec::new();
    if let Some(dir) = &config.outputs.orbit_dir {
        let g = config.vector(&setup.space)?;
        for (k, idx) in config.indices.iter().enumerate() {
            let trace = orbit_trace(&setup.operator, &g, idx, config.horizon)?;
            let path = dir.join(format!("orbit_{k}.csv"));
            export_orbit_csv(&trace, &path)?;
            orbit_traces.push(TraceFile { index: idx.clone(), path, rows: trace.entries.len() });
        }
    }
    if let Some(path) = &config.outputs.class_table_csv {
        let table = results.iter().find_map(|r| match &r.outcome {
            Outcome::ClassTable { table } => Some(table),
            Outcome::Split { split } => Some(&split.table),
            _ => None,
        });
        if let Some(table) = table {
            export_class_table_csv(table, path)?;
        }
    }

    Ok(Report {
        schema_version: SCHEMA_VERSION,
        tool: ToolInfo::current(),
        config: config.clone(),
        results,
        orbit_traces,
    })
}
