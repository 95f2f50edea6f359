//! Report persistence: CSV(s), summary block, and a gnuplot script that
//! references the CSV by relative path.

use std::path::{Path, PathBuf};

use geomid::report::ExperimentReport;

fn io_err(path: &Path, e: std::io::Error) -> geomid::Error {
    geomid::Error::invalid(format!("cannot write {}: {e}", path.display()))
}

fn with_suffix(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}{suffix}"))
}

/// Writes a raw CSV body to the output path.
pub fn write_named(out: &Path, csv: &str) -> geomid::Result<()> {
    std::fs::write(out, csv).map_err(|e| io_err(out, e))
}

/// Writes `<out>` (primary CSV), `<stem>.<track>.csv` for auxiliary tracks,
/// `<stem>.summary.txt`, and `<stem>.gnuplot`.
pub fn write_report(report: &ExperimentReport, out: &Path) -> geomid::Result<()> {
    if !report.rows.is_empty() {
        write_named(out, &report.to_csv())?;
    }
    for (name, csv) in report.aux_csvs() {
        let path = with_suffix(out, &format!(".{name}.csv"));
        write_named(&path, &csv)?;
    }
    let summary_path = with_suffix(out, ".summary.txt");
    std::fs::write(&summary_path, report.summary_block()).map_err(|e| io_err(&summary_path, e))?;

    let csv_name = out
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("report.csv")
        .to_string();
    let plot_path = with_suffix(out, ".gnuplot");
    let script = format!(
        "# gnuplot script for the {} report\n\
         set datafile separator ','\n\
         set datafile commentschars '#'\n\
         set logscale y\n\
         set xlabel 'n'\n\
         set ylabel 'sup distance'\n\
         set key autotitle columnhead\n\
         plot '{csv_name}' using 1:2 with linespoints\n",
        report.name
    );
    std::fs::write(&plot_path, script).map_err(|e| io_err(&plot_path, e))
}
