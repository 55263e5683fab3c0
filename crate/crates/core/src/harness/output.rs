//! File emission: CSV tables, the JSON run manifest, and a plot script.
//!
//! Every file embeds the canonical experiment spec, so any result is
//! reproducible from its own header. Reruns of the same spec produce
//! byte-identical CSVs.

use super::{ExperimentSpec, Mode, Report};
use crate::Result;
use std::fs;
use std::path::{Path, PathBuf};

/// Write the manifest, all tables, a summary, and (for scaling runs) a
/// gnuplot script into `dir`. Returns the paths written.
pub fn write_outputs(spec: &ExperimentSpec, report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let manifest_path = dir.join("manifest.json");
    let manifest = serde_json::to_string_pretty(&spec.canonical()).expect("spec serializes");
    fs::write(&manifest_path, manifest + "\n")?;
    written.push(manifest_path);

    let header_line = format!("# gridlock-manifest: {}", spec.header_json());
    for table in &report.tables {
        let path = dir.join(format!("{}.csv", table.name));
        let mut text = String::new();
        text.push_str(&header_line);
        text.push('\n');
        text.push_str(&table.header);
        text.push('\n');
        for row in &table.rows {
            text.push_str(row);
            text.push('\n');
        }
        fs::write(&path, text)?;
        written.push(path);
    }

    let summary_path = dir.join("summary.txt");
    fs::write(&summary_path, report.render())?;
    written.push(summary_path);

    if spec.mode == Mode::Scaling {
        let path = dir.join("scaling_plot.gp");
        fs::write(&path, scaling_plot_script())?;
        written.push(path);
    }
    Ok(written)
}

fn scaling_plot_script() -> &'static str {
    "# gnuplot script: log-log journey-length scaling\n\
     set datafile separator \",\"\n\
     set datafile commentschars \"#\"\n\
     set logscale xy\n\
     set xlabel \"t\"\n\
     set ylabel \"E[tau wedge t]\"\n\
     set key left top\n\
     fit a*x + b 'scaling.csv' every ::1 using (log($1)):(log($2)) via a, b\n\
     plot 'scaling.csv' every ::1 using 1:2:3 with yerrorlines title \"estimate\", \\\n\
     \t exp(b)*x**a title sprintf(\"slope %.3f\", a)\n"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Check, Table};

    #[test]
    fn outputs_are_reproducible_and_complete() {
        let spec = ExperimentSpec::new(Mode::Scaling, 0.5, vec![4, 8], 3, 42);
        let mut report = Report::new("scaling");
        report.checks.push(Check::pass("slope", "0.75", true));
        report.tables.push(Table {
            name: "scaling".into(),
            header: "t,mean,stderr,replicas,cone_exact".into(),
            rows: vec!["4,1.5,0.1,3,true".into(), "8,2.5,0.2,3,true".into()],
        });
        let dir1 = std::env::temp_dir().join("gridlock-test-out-1");
        let dir2 = std::env::temp_dir().join("gridlock-test-out-2");
        let _ = fs::remove_dir_all(&dir1);
        let _ = fs::remove_dir_all(&dir2);
        write_outputs(&spec, &report, &dir1).unwrap();
        write_outputs(&spec, &report, &dir2).unwrap();
        for name in ["manifest.json", "scaling.csv", "summary.txt", "scaling_plot.gp"] {
            let a = fs::read(dir1.join(name)).unwrap();
            let b = fs::read(dir2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between reruns");
        }
        let csv = fs::read_to_string(dir1.join("scaling.csv")).unwrap();
        assert!(csv.starts_with("# gridlock-manifest: "));
        // The manifest round-trips into the same spec.
        let manifest = fs::read_to_string(dir1.join("manifest.json")).unwrap();
        let parsed = ExperimentSpec::from_manifest_json(&manifest).unwrap();
        assert_eq!(parsed, spec.canonical());
        let _ = fs::remove_dir_all(&dir1);
        let _ = fs::remove_dir_all(&dir2);
    }
}
