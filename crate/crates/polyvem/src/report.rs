//! CSV tables of convergence rows and JSON geometry reports.

use std::io::{self, Write};

use polyvem_core::{ConvergenceRow, GeometryReport};

pub const CSV_HEADER: [&str; 10] =
    ["level", "h", "ndof", "energy_err", "eoc_energy", "h1proj_err", "eoc_h1", "stab_kind", "family", "case"];

/// Rates that are not defined (first level, linear cases) print as `n/a`.
fn rate(r: Option<f64>) -> String {
    r.map_or_else(|| "n/a".into(), |v| format!("{v:.6}"))
}

/// Shortest round-trip decimal, so equal inputs give equal bytes.
fn float(v: f64) -> String {
    format!("{v:e}")
}

pub fn write_csv(rows: &[ConvergenceRow], w: impl Write) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in rows {
        out.write_record([
            r.level.to_string(),
            float(r.h),
            r.ndof.to_string(),
            float(r.energy_err),
            rate(r.eoc_energy),
            float(r.h1proj_err),
            rate(r.eoc_h1),
            r.stab_kind.name().to_string(),
            r.family.clone(),
            r.case.clone(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[ConvergenceRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("CSV output is UTF-8")
}

pub fn write_json(report: &GeometryReport, mut w: impl Write) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report)?;
    writeln!(w)
}

/// Aligned plain-text table for terminals.
pub fn format_table(rows: &[ConvergenceRow]) -> String {
    let mut s = format!(
        "{:>5} {:>10} {:>7} {:>12} {:>8} {:>12} {:>8}  {}\n",
        "level", "h", "ndof", "energy_err", "eoc", "h1proj_err", "eoc", "stab"
    );
    for r in rows {
        s += &format!(
            "{:>5} {:>10.4e} {:>7} {:>12.4e} {:>8} {:>12.4e} {:>8}  {}\n",
            r.level,
            r.h,
            r.ndof,
            r.energy_err,
            rate(r.eoc_energy),
            r.h1proj_err,
            rate(r.eoc_h1),
            r.stab_kind
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use polyvem_core::Stabilization;

    fn row(level: usize, eoc: Option<f64>) -> ConvergenceRow {
        ConvergenceRow {
            level,
            h: 0.125,
            ndof: 144,
            energy_err: 1.5e-3,
            eoc_energy: eoc,
            h1proj_err: 2.0e-2,
            eoc_h1: eoc,
            stab_kind: Stabilization::Patch,
            family: "uniform".into(),
            case: "sinsin".into(),
        }
    }

    #[test]
    fn csv_schema() {
        let text = csv_string(&[row(0, None), row(1, Some(1.0))]);
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("level,h,ndof,energy_err,eoc_energy,h1proj_err,eoc_h1,stab_kind,family,case"));
        assert_eq!(lines.next(), Some("0,1.25e-1,144,1.5e-3,n/a,2e-2,n/a,patch,uniform,sinsin"));
        assert_eq!(lines.next(), Some("1,1.25e-1,144,1.5e-3,1.000000,2e-2,1.000000,patch,uniform,sinsin"));
    }
}
