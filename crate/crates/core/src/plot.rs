//! Gnuplot emission for the result CSVs: one data block per solver plus a
//! ready-to-run script (log-scale y for SER curves, linear for timings).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sim::SolverTag;

/// Which family of plot to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// SER vs SNR or vs user count, log-scale y.
    Ser,
    /// Mean solve time vs user count, linear axes.
    Time,
}

struct Csv {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<Csv> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Schema {
        expected: "a header row".into(),
        found: "an empty file".into(),
    })?;
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.trim().to_string()).collect())
        .collect();
    Ok(Csv { columns, rows })
}

fn column_index(csv: &Csv, candidates: &[&str]) -> Option<(usize, String)> {
    for &c in candidates {
        if let Some(i) = csv.columns.iter().position(|col| col == c) {
            return Some((i, c.to_string()));
        }
    }
    None
}

/// Emit `<stem>.dat` (whitespace-separated blocks, one per solver) and a
/// `<stem>.gp` gnuplot script next to the CSV. Returns (data, script) paths.
pub fn emit_plot_data(csv_path: &Path, kind: PlotKind) -> Result<(PathBuf, PathBuf)> {
    let csv = read_csv(csv_path)?;
    let (y_candidates, x_candidates): (&[&str], &[&str]) = match kind {
        PlotKind::Ser => (&["ser"], &["snr_db", "users"]),
        PlotKind::Time => (&["mean_time_s"], &["users", "n_antennas", "snr_db"]),
    };
    let expected = format!(
        "solver, one of ({}), one of ({})",
        x_candidates.join("|"),
        y_candidates.join("|")
    );
    let found = csv.columns.join(", ");
    let schema_err = || Error::Schema {
        expected: expected.clone(),
        found: found.clone(),
    };
    let solver_col = column_index(&csv, &["solver"]).ok_or_else(schema_err)?.0;
    let (x_col, x_name) = column_index(&csv, x_candidates).ok_or_else(schema_err)?;
    let (y_col, _) = column_index(&csv, y_candidates).ok_or_else(schema_err)?;

    // Group rows by solver, preserving first-appearance order.
    let mut order: Vec<String> = Vec::new();
    for row in &csv.rows {
        let tag = &row[solver_col];
        if !order.contains(tag) {
            order.push(tag.clone());
        }
    }
    if order.is_empty() {
        return Err(Error::Schema {
            expected,
            found: "no data rows".into(),
        });
    }

    let mut dat = String::new();
    for (k, tag) in order.iter().enumerate() {
        if k > 0 {
            dat.push_str("\n\n");
        }
        let _ = writeln!(dat, "# solver: {tag}");
        for row in csv.rows.iter().filter(|r| &r[solver_col] == tag) {
            let _ = writeln!(dat, "{} {}", row[x_col], row[y_col]);
        }
    }

    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("plot");
    let dat_path = csv_path.with_file_name(format!("{stem}.dat"));
    let gp_path = csv_path.with_file_name(format!("{stem}.gp"));
    std::fs::write(&dat_path, &dat)?;

    let mut gp = String::new();
    let _ = writeln!(gp, "# generated by ceprecode plot");
    let _ = writeln!(gp, "set grid");
    let _ = writeln!(gp, "set key bottom left");
    match kind {
        PlotKind::Ser => {
            let xlabel = if x_name == "snr_db" { "SNR (dB)" } else { "users M" };
            let _ = writeln!(gp, "set xlabel \"{xlabel}\"");
            let _ = writeln!(gp, "set ylabel \"SER\"");
            let _ = writeln!(gp, "set logscale y");
        }
        PlotKind::Time => {
            let _ = writeln!(gp, "set xlabel \"users M\"");
            let _ = writeln!(gp, "set ylabel \"mean solve time (s)\"");
        }
    }
    let _ = write!(gp, "plot");
    for (k, tag) in order.iter().enumerate() {
        let title = SolverTag::parse(tag)
            .map(|t| t.display_name().to_string())
            .unwrap_or_else(|_| tag.clone());
        let sep = if k == 0 { " " } else { ", " };
        let _ = write!(
            gp,
            "{sep}\\\n  '{stem}.dat' index {k} using 1:2 with linespoints title '{title}'"
        );
    }
    gp.push('\n');
    std::fs::write(&gp_path, &gp)?;
    Ok((dat_path, gp_path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ser_csv_becomes_indexed_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("ser_vs_snr.csv");
        std::fs::write(
            &csv,
            "# schema\nsolver,snr_db,n_symbols,errors,ser,ci_feasible_fraction,mean_iters\nrcg-ci,4,100,10,0.1,1,50\nrcg-ci,6,100,5,0.05,1,50\ngd-ir,4,100,20,0.2,0,50\n",
        )
        .unwrap();
        let (dat, gp) = emit_plot_data(&csv, PlotKind::Ser).unwrap();
        let data = std::fs::read_to_string(dat).unwrap();
        assert!(data.contains("# solver: rcg-ci"));
        assert!(data.contains("# solver: gd-ir"));
        assert_eq!(data.matches("\n\n\n").count(), 1, "one block separator");
        let script = std::fs::read_to_string(gp).unwrap();
        assert!(script.contains("set logscale y"));
        assert!(script.contains("index 1"));
        assert!(script.contains("RCG-CI"));
    }

    #[test]
    fn timing_csv_uses_linear_axes() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("timing_times.csv");
        std::fs::write(
            &csv,
            "solver,users,mean_time_s,std_time_s,mean_per_iteration_s\nrcg-ci,12,0.001,0.0001,1e-05\n",
        )
        .unwrap();
        let (_, gp) = emit_plot_data(&csv, PlotKind::Time).unwrap();
        let script = std::fs::read_to_string(gp).unwrap();
        assert!(!script.contains("logscale"));
    }

    #[test]
    fn empty_or_mismatched_csv_is_a_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("empty.csv");
        std::fs::write(&csv, "").unwrap();
        assert!(matches!(
            emit_plot_data(&csv, PlotKind::Ser),
            Err(Error::Schema { .. })
        ));
        std::fs::write(&csv, "a,b,c\n1,2,3\n").unwrap();
        match emit_plot_data(&csv, PlotKind::Ser) {
            Err(Error::Schema { expected, found }) => {
                assert!(expected.contains("ser"));
                assert!(found.contains("a, b, c"));
            }
            other => panic!("{other:?}"),
        }
    }
}
