use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CohesionReport, SimulationResult, PERCENTILE_LEVELS};
use crate::error::{Error, Result};

/// One method's cohesion at one question count.
#[derive(Debug, Clone)]
pub struct CohesionRow {
    pub method: String,
    pub questions: usize,
    pub report: CohesionReport,
}

pub fn cohesion_tsv(rows: &[CohesionRow]) -> String {
    let mut out = String::from("method\tquestions\tmean\tci_low\tci_high\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.3}\t{:.3}\t{:.3}",
            r.method, r.questions, r.report.mean, r.report.ci_low, r.report.ci_high
        );
    }
    out
}

pub fn recall_tsv(results: &[SimulationResult]) -> String {
    let mut out = String::from("method\tk\tusers\tmean");
    for p in PERCENTILE_LEVELS {
        let _ = write!(out, "\tp{p}");
    }
    out.push('\n');
    for r in results {
        let _ = write!(out, "{}\t{}\t{}\t{:.5}", r.method, r.k, r.recalls.len(), r.summary.mean);
        for (_, v) in &r.summary.percentiles {
            let _ = write!(out, "\t{v:.5}");
        }
        out.push('\n');
    }
    out
}

pub fn text_summary(cohesion: &[CohesionRow], recall: &[SimulationResult], excluded_users: usize) -> String {
    let mut out = String::new();
    if !cohesion.is_empty() {
        out.push_str("Cohesion (mean [95% CI])\n");
        for r in cohesion {
            let _ = writeln!(
                out,
                "  {:<18} {:>3} qs  {:.3} [{:.3}, {:.3}]",
                r.method, r.questions, r.report.mean, r.report.ci_low, r.report.ci_high
            );
        }
    }
    if !recall.is_empty() {
        let k = recall[0].k;
        let _ = writeln!(
            out,
            "Recall@{k} over {} test users ({excluded_users} excluded for short histories)",
            recall[0].recalls.len()
        );
        for r in recall {
            let pcts: Vec<String> = r
                .summary
                .percentiles
                .iter()
                .map(|(p, v)| format!("p{p}={v:.4}"))
                .collect();
            let _ = writeln!(out, "  {:<18} mean={:.5}  {}", r.method, r.summary.mean, pcts.join(" "));
        }
    }
    out
}

/// Writes cohesion.tsv, recall.tsv and summary.txt into `dir`.
pub fn write_reports(
    dir: &Path,
    cohesion: &[CohesionRow],
    recall: &[SimulationResult],
    excluded_users: usize,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, body: String| {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))
    };
    write("cohesion.tsv", cohesion_tsv(cohesion))?;
    write("recall.tsv", recall_tsv(recall))?;
    write("summary.txt", text_summary(cohesion, recall, excluded_users))
}
