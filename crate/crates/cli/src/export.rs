//! CSV handoff for plotting.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use lorentz_core::expansivity::AtomClassTable;
use lorentz_core::operators::OrbitTrace;
use lorentz_core::rational::format_rational;

use crate::error::CliError;

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// Writes `n,measure_num,measure_den,norm,norm_abs_error`, one row per iterate.
pub fn write_orbit_csv<W: Write>(trace: &OrbitTrace, out: W) -> Result<(), CliError> {
    if trace.entries.is_empty() {
        return Err(CliError::EmptyTrace);
    }
    let mut w = writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["n", "measure_num", "measure_den", "norm", "norm_abs_error"]).map_err(io)?;
    for e in &trace.entries {
        w.write_record([
            e.n.to_string(),
            e.measure.numer().to_string(),
            e.measure.denom().to_string(),
            e.norm.value.to_string(),
            format!("{:e}", e.norm.abs_error),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn export_orbit_csv(trace: &OrbitTrace, path: &Path) -> Result<(), CliError> {
    if path.as_os_str().is_empty() {
        return Err(CliError::EmptyPath);
    }
    if trace.entries.is_empty() {
        return Err(CliError::EmptyTrace);
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_orbit_csv(trace, file)
}

/// One row per atom, direction and step: `atom,direction,n,ratio`.
pub fn write_class_table_csv<W: Write>(table: &AtomClassTable, out: W) -> Result<(), CliError> {
    let mut w = writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["atom", "direction", "n", "ratio"]).map_err(io)?;
    for r in &table.records {
        let atom = r.atom.to_string();
        let sides = [("preimage", Some(&r.forward)), ("image", r.backward.as_ref())];
        for (direction, ratios) in sides {
            for (k, ratio) in ratios.into_iter().flatten().enumerate() {
                w.write_record([atom.as_str(), direction, &(k + 1).to_string(), &format_rational(ratio)])
                    .map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}

pub fn export_class_table_csv(table: &AtomClassTable, path: &Path) -> Result<(), CliError> {
    if path.as_os_str().is_empty() {
        return Err(CliError::EmptyPath);
    }
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_class_table_csv(table, file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lorentz_core::operators::{orbit_trace, CompositionOperator, Operator};
    use lorentz_core::rational::{int, ratio};
    use lorentz_core::{AtomId, Family, LorentzIndex, MeasurableSet, MeasureSpace, SimpleFunction};

    fn bilateral_trace(horizon: usize) -> OrbitTrace {
        let (s, t) = MeasureSpace::builtin(Family::BilateralShift { r: ratio(1, 2) }).unwrap();
        let op = Operator::Composition(CompositionOperator::new(s, t).unwrap());
        let g = SimpleFunction::indicator(&MeasurableSet::singleton(AtomId::Int(0)));
        orbit_trace(&op, &g, &LorentzIndex::finite(int(2), int(2)).unwrap(), horizon).unwrap()
    }

    #[test]
    fn one_row_per_iterate_with_doubling_measures() {
        let mut buf = Vec::new();
        write_orbit_csv(&bilateral_trace(3), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,measure_num,measure_den,norm,norm_abs_error");
        assert_eq!(lines.len(), 5);
        assert!(!text.contains('\r'));
        let measures: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
        assert_eq!(measures, ["1", "2", "4", "8"]);
    }

    #[test]
    fn empty_path_is_rejected() {
        assert!(matches!(export_orbit_csv(&bilateral_trace(3), Path::new("")), Err(CliError::EmptyPath)));
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let err = export_orbit_csv(&bilateral_trace(3), Path::new("/nonexistent-dir/x/orbit.csv")).unwrap_err();
        assert!(matches!(err, CliError::Io(_)));
    }
}
