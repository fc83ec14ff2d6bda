//! Replays every witness quantity recorded in a report.

use lorentz_core::chaos::multiplier_table;
use lorentz_core::expansivity::{sphere_divergence_probe, AtomClassTable};
use lorentz_core::operators::{composition_bound, orbit_trace, Operator, SphereSample};
use lorentz_core::rational::parse_rational;
use lorentz_core::{AtomId, CertifiedReal, MeasureSpace, Transformation, Verdict};
use serde::Deserialize;

use crate::config::Setup;
use crate::error::CliError;
use crate::report::{Outcome, Report, TraceFile};

fn replay_verdict(label: &str, v: &Verdict, space: &MeasureSpace, tau: &Transformation, out: &mut Vec<String>) {
    if let Some(w) = &v.witness {
        if let Err(e) = w.replay(space, tau) {
            out.push(format!("{label}: {e}"));
        }
    }
}

fn check_table(label: &str, table: &AtomClassTable, space: &MeasureSpace, tau: &Transformation, out: &mut Vec<String>) {
    let atoms: Vec<AtomId> = table.records.iter().map(|r| r.atom).collect();
    let backward = table.records.iter().any(|r| r.backward.is_some());
    if backward && !tau.is_invertible(space) {
        out.push(format!("{label}: backward ratios recorded for a map without inverse"));
        return;
    }
    let fresh = AtomClassTable::build(space, tau, &atoms, table.horizon, backward);
    if let Some((r, _)) = table.records.iter().zip(&fresh.records).find(|(r, f)| r != f) {
        out.push(format!("{label}: ratios of atom {} do not replay", r.atom));
    }
}

#[derive(Deserialize)]
struct Row {
    n: usize,
    measure_num: String,
    measure_den: String,
    norm: f64,
    norm_abs_error: f64,
}

fn check_trace_file(
    file: &TraceFile,
    op: &Operator,
    g: &lorentz_core::SimpleFunction,
    horizon: usize,
    out: &mut Vec<String>,
) {
    let label = format!("orbit file {}", file.path.display());
    let trace = match orbit_trace(op, g, &file.index, horizon) {
        Ok(t) => t,
        Err(e) => return out.push(format!("{label}: {e}")),
    };
    let mut reader = match csv::Reader::from_path(&file.path) {
        Ok(r) => r,
        Err(e) => return out.push(format!("{label}: {e}")),
    };
    let rows: Vec<Row> = match reader.deserialize().collect() {
        Ok(rows) => rows,
        Err(e) => return out.push(format!("{label}: {e}")),
    };
    if rows.len() != file.rows || rows.len() != trace.entries.len() {
        return out.push(format!("{label}: {} rows, expected {}", rows.len(), trace.entries.len()));
    }
    for (row, e) in rows.iter().zip(&trace.entries) {
        let measure = parse_rational(&format!("{}/{}", row.measure_num, row.measure_den));
        if row.n != e.n || measure.as_ref().ok() != Some(&e.measure) {
            return out.push(format!("{label}: measure at n={} does not replay", e.n));
        }
        if !CertifiedReal::new(row.norm, row.norm_abs_error).agrees_with(&e.norm) {
            return out.push(format!("{label}: norm at n={} does not replay", e.n));
        }
    }
}

/// Every mismatch found, empty when the report replays.
pub fn verify(report: &Report) -> Result<Vec<String>, CliError> {
    let config = &report.config;
    config.validate()?;
    let setup: Setup = config.setup()?;
    let space = &setup.space;
    let tau = setup.tau().cloned().unwrap_or(Transformation::Identity);
    let mut out = Vec::new();

    for (i, r) in report.results.iter().enumerate() {
        let label = format!("result {i} ({})", serde_json::to_string(&r.analysis).unwrap_or_default());
        let idx = r.index.clone().unwrap_or_else(|| config.indices[0].clone());
        match &r.outcome {
            Outcome::Verdict { verdict } => replay_verdict(&label, verdict, space, &tau, &mut out),
            Outcome::Corollary { set, report } => {
                if let Some(w) = &report.a.witness {
                    if w.sets.first() != Some(set) {
                        out.push(format!("{label}: condition (a) is about a different set"));
                    }
                }
                for (name, v) in [("a", &report.a), ("b", &report.b), ("combined", &report.combined)] {
                    replay_verdict(&format!("{label} ({name})"), v, space, &tau, &mut out);
                }
            }
            Outcome::Equivalences { matrix } => {
                for c in &matrix.conditions {
                    replay_verdict(&format!("{label} {:?}", c.condition), &c.verdict, space, &tau, &mut out);
                }
            }
            Outcome::Search { search } => match orbit_trace(&setup.operator, &search.vector, &idx, config.horizon) {
                Err(e) => out.push(format!("{label}: {e}")),
                Ok(trace) => {
                    let norms: Vec<&CertifiedReal> = trace.norms().collect();
                    let class = &search.class;
                    if !norms[class.argmin].agrees_with(&class.min_norm)
                        || !norms[class.argmax].agrees_with(&class.max_norm)
                    {
                        out.push(format!("{label}: extreme orbit norms do not replay"));
                    }
                    if search.dip_spike_ratio > 0.0 {
                        let bound = norms[search.spike_at].lower() / norms[search.dip_at].upper();
                        if search.dip_spike_ratio > bound * (1.0 + 1e-12) {
                            out.push(format!("{label}: dip-to-spike ratio exceeds the replayed bound {bound:e}"));
                        }
                    }
                    let rebuilt = search.terms.iter().all(|t| search.vector.value(&t.atom) == t.coefficient)
                        && search.terms.len() == search.vector.len();
                    if !rebuilt {
                        out.push(format!("{label}: terms do not match the vector"));
                    }
                }
            },
            Outcome::Multiplication { verdict, table } => {
                replay_verdict(&label, verdict, space, &tau, &mut out);
                match &setup.operator {
                    Operator::Multiplication(op) => match multiplier_table(op, config.window) {
                        Ok(fresh) if fresh == *table => {}
                        Ok(_) => out.push(format!("{label}: multiplier classes do not replay")),
                        Err(e) => out.push(format!("{label}: {e}")),
                    },
                    Operator::Composition(_) => out.push(format!("{label}: recorded for a composition operator")),
                }
            }
            Outcome::Split { split } => {
                replay_verdict(&label, &split.verdict, space, &tau, &mut out);
                check_table(&label, &split.table, space, &tau, &mut out);
                if let Some(cert) = &split.certificate {
                    if let Err(e) = cert.replay(space, &tau) {
                        out.push(format!("{label}: {e}"));
                    }
                }
            }
            Outcome::ClassTable { table } => check_table(&label, table, space, &tau, &mut out),
            Outcome::Probe { samples, report: probe } => {
                let fresh = samples
                    .iter()
                    .map(|g| SphereSample::new(space, g.clone(), &idx))
                    .collect::<lorentz_core::Result<Vec<_>>>()
                    .and_then(|s| sphere_divergence_probe(&setup.operator, &idx, &s, probe.horizon, probe.threshold));
                match fresh {
                    Ok(fresh) if fresh == *probe => {}
                    Ok(_) => out.push(format!("{label}: first passages do not replay")),
                    Err(e) => out.push(format!("{label}: {e}")),
                }
            }
            Outcome::Bound { bound } => {
                let fresh = space.window(config.window).and_then(|w| composition_bound(space, &tau, &idx, &w));
                match fresh {
                    Ok(f)
                        if f.ratio == bound.ratio
                            && f.atom == bound.atom
                            && f.operator_bound.agrees_with(&bound.operator_bound) => {}
                    Ok(_) => out.push(format!("{label}: composition bound does not replay")),
                    Err(e) => out.push(format!("{label}: {e}")),
                }
            }
            Outcome::Error { .. } => {}
        }
    }

    if !report.orbit_traces.is_empty() {
        let g = config.vector(space)?;
        for file in &report.orbit_traces {
            check_trace_file(file, &setup.operator, &g, config.horizon, &mut out);
        }
    }
    Ok(out)
}
