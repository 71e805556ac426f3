//! CSV artifacts. Floating-point values are written with 17 significant
//! digits so that reading them back gives the same `f64`.

use std::path::Path;

use mona_core::integrator::{ConvergenceTable, TransientResult};

use crate::error::{CliError, CliResult};

pub const AUDIT_COLUMNS: [&str; 10] = [
    "t",
    "dH_dt",
    "resistive_loss",
    "eddy_loss",
    "source_power_I",
    "source_power_V",
    "eps_H",
    "eps_H_rel",
    "newton_iters",
    "newton_residual",
];

pub const EOC_COLUMNS: [&str; 4] = ["tau", "eps_tau", "eoc", "max_eps_H"];

pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::output(path, e))?;
    w.write_record(header).map_err(|e| CliError::output(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::output(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

/// Columns `t`, one per probe, `H` and `eps_H`; one row per step.
pub fn write_trace(path: &Path, result: &TransientResult) -> CliResult<()> {
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain(result.probes.iter().map(|p| p.name.clone()))
        .chain(["H".to_string(), "eps_H".to_string()])
        .collect();
    let rows = result.records.iter().enumerate().map(|(k, r)| {
        std::iter::once(r.t)
            .chain(result.series.iter().map(|s| s[k]))
            .chain([r.energy, r.audit.residual])
            .map(fmt_value)
            .collect()
    });
    write_rows(path, &header, rows)
}

/// Per-step power balance; `eps_H_rel` is relative to the run's peak
/// supplied power.
pub fn write_audit(path: &Path, result: &TransientResult) -> CliResult<()> {
    let header: Vec<String> = AUDIT_COLUMNS.iter().map(|s| s.to_string()).collect();
    let peak = result.peak_supplied_power();
    let rows = result.records.iter().map(|r| {
        let a = &r.audit;
        let rel = if peak > 0.0 { a.residual / peak } else { f64::NAN };
        let mut row: Vec<String> = [
            r.t,
            a.dh_dt,
            a.resistive_loss,
            a.eddy_loss,
            a.source_power_i,
            a.source_power_v,
            a.residual,
            rel,
        ]
        .into_iter()
        .map(fmt_value)
        .collect();
        row.push(r.newton_iters.to_string());
        row.push(fmt_value(r.newton_residual));
        row
    });
    write_rows(path, &header, rows)
}

/// One row per step size; `eoc` is empty on the coarsest row.
pub fn write_eoc(path: &Path, table: &ConvergenceTable) -> CliResult<()> {
    let header: Vec<String> = EOC_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows = table.rows.iter().map(|r| {
        vec![
            fmt_value(r.tau),
            fmt_value(r.eps_tau),
            r.eoc.map(fmt_value).unwrap_or_default(),
            fmt_value(r.max_eps_h),
        ]
    });
    write_rows(path, &header, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mona_core::demo::series_rlc;
    use mona_core::integrator::{run_transient, NewtonConfig, Probe, TimeGrid};

    fn rlc_run(probes: &[&str]) -> TransientResult {
        let sys = series_rlc().unwrap();
        let probes = Probe::parse_list(probes, &sys).unwrap();
        let grid = TimeGrid::new(0.0, 0.05, 0.01).unwrap();
        run_transient(&sys, &grid, &probes, &NewtonConfig::default()).unwrap()
    }

    fn read(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
        let mut r = csv::Reader::from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.unwrap().iter().map(String::from).collect())
            .collect();
        (header, rows)
    }

    #[test]
    fn empty_probe_list_gives_time_energy_and_defect() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace(&path, &rlc_run(&[])).unwrap();
        let (header, rows) = read(&path);
        assert_eq!(header, ["t", "H", "eps_H"]);
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn probe_series_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let result = rlc_run(&["vc=v(c)", "i=i(l)"]);
        write_trace(&path, &result).unwrap();
        let (header, rows) = read(&path);
        assert_eq!(header, ["t", "vc", "i", "H", "eps_H"]);
        for (k, row) in rows.iter().enumerate() {
            let t: f64 = row[0].parse().unwrap();
            assert_eq!(t.to_bits(), result.records[k].t.to_bits());
            for p in 0..2 {
                let v: f64 = row[1 + p].parse().unwrap();
                assert_eq!(v.to_bits(), result.series[p][k].to_bits());
            }
        }
        let times: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn audit_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.csv");
        let result = rlc_run(&[]);
        write_audit(&path, &result).unwrap();
        let (header, rows) = read(&path);
        assert_eq!(header, AUDIT_COLUMNS);
        assert!(rows.iter().all(|r| r.len() == AUDIT_COLUMNS.len()));
        let iters: usize = rows[0][8].parse().unwrap();
        assert_eq!(iters, result.records[0].newton_iters);
    }

    #[test]
    fn identical_runs_write_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        write_audit(&a, &rlc_run(&["q=q(c)"])).unwrap();
        write_audit(&b, &rlc_run(&["q=q(c)"])).unwrap();
        assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    }

    #[test]
    fn unwritable_path_names_the_path() {
        let err = write_trace(Path::new("/nonexistent/dir/trace.csv"), &rlc_run(&[])).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/trace.csv"));
        assert_eq!(err.exit_code(), 2);
    }
}
