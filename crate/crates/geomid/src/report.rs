//! Experiment reports: per-n rows, fitted rates, verdicts, and the CSV /
//! summary-block serializations consumed by the CLI.

use std::fmt::Write as _;

use crate::numerics::RateFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub n: u64,
    pub sup_distance: f64,
    pub argmax_t: f64,
    pub ks: Option<f64>,
    pub pass: bool,
}

/// Outcome of one experiment: a distance track, optional auxiliary tracks,
/// an optional fitted rate, metrics for the summary block, and the verdict.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub name: String,
    pub schedule: Option<String>,
    pub rows: Vec<ReportRow>,
    pub aux_tracks: Vec<(String, Vec<ReportRow>)>,
    pub fitted: Option<RateFit>,
    pub verdict: Verdict,
    pub tolerances: Vec<(String, f64)>,
    pub metrics: Vec<(String, f64)>,
    pub notes: Vec<String>,
    pub seed: Option<u64>,
    /// Full run configuration, embedded as `#` comment lines in every CSV.
    pub config: Vec<(String, String)>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentReport {
            name: name.into(),
            schedule: None,
            rows: Vec::new(),
            aux_tracks: Vec::new(),
            fitted: None,
            verdict: Verdict::Inconclusive,
            tolerances: Vec::new(),
            metrics: Vec::new(),
            notes: Vec::new(),
            seed: None,
            config: Vec::new(),
        }
    }

    fn csv_header(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# experiment={}", self.name);
        if let Some(s) = &self.schedule {
            let _ = writeln!(out, "# schedule={s}");
        }
        if let Some(seed) = self.seed {
            let _ = writeln!(out, "# seed={seed}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(out, "# {k}={v}");
        }
        for (k, v) in &self.tolerances {
            let _ = writeln!(out, "# tolerance.{k}={v}");
        }
        out
    }

    fn rows_csv(&self, rows: &[ReportRow]) -> String {
        let mut out = self.csv_header();
        out.push_str("n,sup_distance,ks,verdict\n");
        for r in rows {
            let ks = r.ks.map(|k| k.to_string()).unwrap_or_default();
            let verdict = if r.pass { "pass" } else { "fail" };
            let _ = writeln!(out, "{},{},{},{}", r.n, r.sup_distance, ks, verdict);
        }
        out
    }

    /// Primary-track CSV: `n,sup_distance,ks,verdict`, with the run
    /// configuration as `#` comment lines.
    pub fn to_csv(&self) -> String {
        self.rows_csv(&self.rows)
    }

    /// CSVs for the auxiliary tracks, keyed by track name.
    pub fn aux_csvs(&self) -> Vec<(String, String)> {
        self.aux_tracks.iter().map(|(name, rows)| (name.clone(), self.rows_csv(rows))).collect()
    }

    /// Human-readable summary: a verdict line plus one `metric: value` line
    /// per criterion.
    pub fn summary_block(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "verdict: {}", self.verdict);
        if let Some(fit) = &self.fitted {
            let _ = writeln!(out, "fitted_order: {}", fit.order);
            let _ = writeln!(out, "fit_r_squared: {}", fit.r_squared);
        }
        for (k, v) in &self.metrics {
            let _ = writeln!(out, "{k}: {v}");
        }
        for (k, v) in &self.tolerances {
            let _ = writeln!(out, "tolerance.{k}: {v}");
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}
