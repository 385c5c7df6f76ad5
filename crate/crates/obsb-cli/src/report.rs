//! Report bundle and CSV trace emission.
//!
//! Bundles are self-contained: they echo the parsed scenario so a run can be
//! reproduced from its own report, and they contain no wall-clock data, so a
//! fixed seed yields byte-identical output.

use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use obsb::dobrushin::BatteryReport;
use obsb::ergodicity::{
    DecayBoundReport, DoeblinCertificate, DoeblinSearch, ErgodicityReport, ImplicationChainReport,
    LStrongReport, LWeakReport, StrongLimitCertificates, UniformReport, WeakReport,
};
use obsb::operators::MarkovOperator;

use crate::scenario::Scenario;

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisOutcome {
    Uniform {
        report: UniformReport,
    },
    Weak {
        report: WeakReport,
    },
    LWeak {
        report: LWeakReport,
    },
    LStrong {
        report: LStrongReport,
    },
    DoeblinCheck {
        certificate: DoeblinCertificate,
    },
    DoeblinSearch {
        searches: Vec<DoeblinSearch>,
    },
    CoefficientBattery {
        reports: Vec<BatteryReport>,
        pass: bool,
    },
    ImplicationChain {
        report: ImplicationChainReport,
    },
    DecayBound {
        report: DecayBoundReport,
    },
    StrongLimitCertificate {
        report: StrongLimitCertificates,
    },
}

#[derive(Serialize)]
pub struct RuntimeMeta {
    pub version: String,
    pub analyses_run: usize,
    pub csv_files: Vec<String>,
}

#[derive(Serialize)]
pub struct ReportBundle {
    pub version: String,
    pub scenario: Scenario,
    pub chain_label: String,
    /// One-step operator at the earliest analyzed start index, as a labeled
    /// dense matrix; makes the bundle self-describing.
    pub sample_step: MarkovOperator,
    pub analyses: Vec<AnalysisOutcome>,
    pub summary: ErgodicityReport,
    pub runtime: RuntimeMeta,
}

#[derive(Clone, Debug)]
pub struct CsvRow {
    pub k: usize,
    pub n: usize,
    pub value: f64,
    pub mode: String,
}

/// Writes trace rows with the fixed schema `k,n,value,mode`: header row,
/// UTF-8, LF line endings, decimal point, 17 significant digits.
pub fn write_csv(path: &Path, rows: &[CsvRow]) -> io::Result<()> {
    let mut out = String::with_capacity(32 + rows.len() * 48);
    out.push_str("k,n,value,mode\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.16e},{}\n",
            row.k, row.n, row.value, row.mode
        ));
    }
    fs::write(path, out)
}

pub fn write_report(path: &Path, bundle: &ReportBundle) -> io::Result<()> {
    let mut body = serde_json::to_string_pretty(bundle)?;
    body.push('\n');
    fs::write(path, body)
}
