//! Scenario execution: builds the space and chain, runs the analyses in
//! listed order, and writes the report bundle plus per-analysis CSV traces.

use std::path::{Path, PathBuf};

use obsb::dobrushin;
use obsb::ergodicity::{
    self, DoeblinCondition, DoeblinRequest, ErgodicityReport, Thresholds, Verdict,
};
use obsb::gallery;
use obsb::probes;
use obsb::space::Vector;
use obsb::Error;

use crate::report::{AnalysisOutcome, CsvRow, ReportBundle, RuntimeMeta};
use crate::scenario::{parse_scenario, AnalysisBlock, Scenario, DEFAULT_DELTA_BUDGET};

/// Run failure classified for the exit code: scenario parse errors exit 2,
/// other input errors exit 2, numeric/solver/io failures exit 3.
#[derive(Debug)]
pub enum RunFailure {
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    Input(String),
    Numeric {
        analysis: String,
        message: String,
    },
}

impl RunFailure {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunFailure::Parse { .. } | RunFailure::Input(_) => 2,
            RunFailure::Numeric { .. } => 3,
        }
    }
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunFailure::Parse {
                line,
                column,
                message,
            } => write!(f, "parse error at line {line}, column {column}: {message}"),
            RunFailure::Input(message) => write!(f, "input error: {message}"),
            RunFailure::Numeric { analysis, message } => {
                write!(f, "numeric failure in analysis '{analysis}': {message}")
            }
        }
    }
}

fn classify(analysis: &str, error: Error) -> RunFailure {
    match error {
        Error::Numeric { .. } => RunFailure::Numeric {
            analysis: analysis.to_string(),
            message: error.to_string(),
        },
        other => RunFailure::Input(format!("analysis '{analysis}': {other}")),
    }
}

pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub budget: Option<usize>,
    pub tol_overrides: Vec<(String, String)>,
}

pub struct RunSummary {
    pub report_path: PathBuf,
    pub csv_paths: Vec<PathBuf>,
    pub verdicts: Vec<(String, Verdict)>,
}

pub fn run(scenario_path: &Path, options: &RunOptions) -> Result<RunSummary, RunFailure> {
    let text = std::fs::read_to_string(scenario_path)
        .map_err(|e| RunFailure::Input(format!("cannot read {}: {e}", scenario_path.display())))?;
    let scenario = parse_scenario(&text).map_err(|f| RunFailure::Parse {
        line: f.line,
        column: f.column,
        message: f.message,
    })?;
    run_parsed(&scenario, scenario_path, options)
}

pub fn run_parsed(
    scenario: &Scenario,
    scenario_path: &Path,
    options: &RunOptions,
) -> Result<RunSummary, RunFailure> {
    let space_block = scenario
        .space
        .as_ref()
        .map(|b| b.build())
        .transpose()
        .map_err(|e| RunFailure::Input(e.to_string()))?;
    let built = scenario
        .chain
        .build(space_block.as_ref(), scenario.seed)
        .map_err(|e| RunFailure::Input(e.to_string()))?;
    let spec = &built.spec;

    let mut tolerances = scenario.tolerances.clone().unwrap_or_default();
    for (key, value) in &options.tol_overrides {
        tolerances
            .set(key, value)
            .map_err(|e| RunFailure::Input(e.to_string()))?;
    }
    let thresholds = tolerances.apply(Thresholds::default());
    let budget = options.budget.unwrap_or(DEFAULT_DELTA_BUDGET);

    let mut summary = ErgodicityReport::new(spec.label());
    let mut analyses = Vec::new();
    let mut csv_sets: Vec<(String, Vec<CsvRow>)> = Vec::new();

    for (index, block) in scenario.analyses.iter().enumerate() {
        let id = format!("a{index}_{}", block.kind);
        let outcome = run_analysis(
            block,
            spec,
            &built,
            scenario.seed,
            budget,
            &thresholds,
            &mut summary,
            &mut csv_sets,
            &id,
        )
        .map_err(|e| classify(&id, e))?;
        analyses.push(outcome);
    }

    // output paths
    let stem = scenario_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    let out_dir = options
        .out_dir
        .clone()
        .or_else(|| {
            scenario
                .output
                .as_ref()
                .and_then(|o| o.dir.as_ref().map(PathBuf::from))
        })
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| RunFailure::Input(format!("cannot create output dir: {e}")))?;
    let report_name = scenario
        .output
        .as_ref()
        .and_then(|o| o.report.clone())
        .unwrap_or_else(|| format!("{stem}_report.json"));
    let write_csv = scenario.output.as_ref().and_then(|o| o.csv).unwrap_or(true);

    let mut csv_paths = Vec::new();
    let mut csv_files = Vec::new();
    if write_csv {
        for (name, rows) in &csv_sets {
            let file = format!("{stem}_{name}.csv");
            let path = out_dir.join(&file);
            crate::report::write_csv(&path, rows).map_err(|e| RunFailure::Numeric {
                analysis: name.clone(),
                message: format!("csv write failed: {e}"),
            })?;
            csv_paths.push(path);
            csv_files.push(file);
        }
    }

    let verdicts: Vec<(String, Verdict)> = summary
        .verdicts
        .iter()
        .map(|(k, v)| (k.clone(), *v))
        .collect();
    let first_k = scenario
        .analyses
        .iter()
        .flat_map(|a| a.k.into_iter().chain(a.ks.iter().flatten().copied()))
        .min()
        .unwrap_or(0);
    let bundle = ReportBundle {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: scenario.clone(),
        chain_label: spec.label().to_string(),
        sample_step: spec.step(first_k),
        analyses,
        summary,
        runtime: RuntimeMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            analyses_run: scenario.analyses.len(),
            csv_files,
        },
    };
    let report_path = out_dir.join(report_name);
    crate::report::write_report(&report_path, &bundle).map_err(|e| RunFailure::Numeric {
        analysis: "report".to_string(),
        message: format!("report write failed: {e}"),
    })?;

    Ok(RunSummary {
        report_path,
        csv_paths,
        verdicts,
    })
}

fn probe_set(spec: &obsb::NdmcSpec, seed: u64, random_count: Option<usize>) -> Vec<Vector> {
    match random_count {
        None => probes::default_probes(spec.space(), seed),
        Some(n) => {
            let mut set = probes::base_samples(spec.space(), n, seed);
            if let Ok(ext) = spec.space().base_extreme_points(probes::PROBE_EXTREME_CAP) {
                set.extend(ext.points);
            }
            set
        }
    }
}

fn require<T: Copy>(value: Option<T>, what: &str, kind: &str) -> obsb::Result<T> {
    value.ok_or_else(|| Error::input(format!("analysis '{kind}' needs `{what}`")))
}

#[allow(clippy::too_many_arguments)]
fn run_analysis(
    block: &AnalysisBlock,
    spec: &obsb::NdmcSpec,
    built: &crate::scenario::BuiltChain,
    seed: u64,
    budget: usize,
    thresholds: &Thresholds,
    summary: &mut ErgodicityReport,
    csv_sets: &mut Vec<(String, Vec<CsvRow>)>,
    id: &str,
) -> obsb::Result<AnalysisOutcome> {
    let kind = block.kind.as_str();
    let block_budget = block.budget.unwrap_or(budget);
    match kind {
        "uniform" => {
            let n_max = require(block.n_max, "n_max", kind)?;
            let op = spec.composite(0, 1)?.with_label(spec.label().to_string());
            let report = ergodicity::uniform_ergodicity(&op, n_max, block_budget, thresholds)?;
            summary.absorb_uniform(&report);
            let mut rows: Vec<CsvRow> = report
                .delta_trace
                .iter()
                .map(|p| CsvRow {
                    k: p.k,
                    n: p.n,
                    value: p.value,
                    mode: format!("delta_{}", p.mode.as_str()),
                })
                .collect();
            rows.extend(report.norm_trace.iter().map(|p| CsvRow {
                k: 0,
                n: p.n,
                value: p.value,
                mode: "norm".to_string(),
            }));
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::Uniform { report })
        }
        "weak" => {
            let ks = block.ks.clone().unwrap_or_else(|| vec![0]);
            let n_max = require(block.n_max, "n_max", kind)?;
            let report = ergodicity::weak_ergodicity(spec, &ks, n_max, block_budget, thresholds)?;
            summary.absorb_weak(&report);
            let rows: Vec<CsvRow> = report
                .per_k
                .iter()
                .flat_map(|t| t.points.iter())
                .map(|p| CsvRow {
                    k: p.k,
                    n: p.n,
                    value: p.value,
                    mode: format!("delta_{}", p.mode.as_str()),
                })
                .collect();
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::Weak { report })
        }
        "l_weak" => {
            let ks = block.ks.clone().unwrap_or_else(|| vec![0]);
            let n_max = require(block.n_max, "n_max", kind)?;
            let points = probe_set(spec, seed, block.pairs.map(|p| 2 * p));
            let pairs: Vec<(Vector, Vector)> = points
                .chunks(2)
                .filter(|c| c.len() == 2 && c[0].max_abs_diff(&c[1]) > 1e-12)
                .map(|c| (c[0].clone(), c[1].clone()))
                .collect();
            let report = ergodicity::l_weak_ergodicity(spec, &ks, &pairs, n_max, thresholds)?;
            summary.absorb_l_weak(&report);
            let rows: Vec<CsvRow> = report
                .traces
                .iter()
                .flat_map(|t| {
                    t.points.iter().map(move |p| CsvRow {
                        k: t.k,
                        n: p.n,
                        value: p.value,
                        mode: t.pair.clone(),
                    })
                })
                .collect();
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::LWeak { report })
        }
        "l_strong" => {
            let ks = block.ks.clone().unwrap_or_else(|| vec![0]);
            let n_max = require(block.n_max, "n_max", kind)?;
            let points = probe_set(spec, seed, block.probes);
            let mut report =
                ergodicity::l_strong_ergodicity(spec, &ks, &points, n_max, thresholds)?;
            if let Some(params) = &built.grid_params {
                annotate_grid_sensitivity(&mut report, params, n_max, thresholds)?;
            }
            summary.absorb_l_strong(&report);
            let rows: Vec<CsvRow> = report
                .trajectories
                .iter()
                .flat_map(|t| {
                    t.trace.iter().map(move |p| CsvRow {
                        k: t.k,
                        n: p.n,
                        value: p.value,
                        mode: t.probe.clone(),
                    })
                })
                .collect();
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::LStrong { report })
        }
        "doeblin_check" => {
            let k = require(block.k, "k", kind)?;
            let lambda = require(block.lambda, "lambda", kind)?;
            let condition = match block.condition.as_deref() {
                Some("D") => DoeblinCondition::D,
                Some("D1") | None => DoeblinCondition::D1,
                Some("D2") => DoeblinCondition::D2,
                Some(other) => return Err(Error::input(format!("unknown condition '{other}'"))),
            };
            let points = probe_set(spec, seed, block.probes);
            let z_source = block
                .z
                .as_ref()
                .ok_or_else(|| Error::input("doeblin_check needs `z`"))?;
            let z = z_source.build(spec.space(), built.kernel_params.as_ref(), k, &points)?;
            let request = DoeblinRequest {
                condition,
                k,
                z,
                lambda,
                n_k: block.n_k,
                horizon: block.horizon,
            };
            let certificate = ergodicity::doeblin_check(spec, &request, &points, thresholds)?;
            let mut rows: Vec<CsvRow> = Vec::new();
            if let Some(traces) = &certificate.residual_traces {
                for t in traces {
                    rows.extend(t.points.iter().map(|p| CsvRow {
                        k,
                        n: p.n,
                        value: p.value,
                        mode: t.probe.clone(),
                    }));
                }
            } else {
                rows.extend(certificate.residuals.iter().map(|(probe, r)| CsvRow {
                    k,
                    n: certificate.n_k.unwrap_or(k),
                    value: *r,
                    mode: probe.clone(),
                }));
            }
            csv_sets.push((id.to_string(), rows));
            summary.bound_checks.push(ergodicity::BoundCheck {
                name: format!("doeblin_{:?}_k{}", certificate.condition, k),
                pass: certificate.pass,
                detail: format!(
                    "lambda={} mu={} sampled={}",
                    certificate.lambda, certificate.mu, certificate.sampled
                ),
            });
            Ok(AnalysisOutcome::DoeblinCheck { certificate })
        }
        "doeblin_search" => {
            let ks = block.ks.clone().unwrap_or_else(|| vec![0]);
            let horizon = require(block.horizon, "horizon", kind)?;
            let points = probe_set(spec, seed, block.probes);
            let mut searches = Vec::with_capacity(ks.len());
            let mut rows = Vec::new();
            for &k in &ks {
                let search = ergodicity::doeblin_search(spec, k, horizon, &points, thresholds)?;
                rows.extend(search.residual_trace.iter().map(|p| CsvRow {
                    k,
                    n: p.n,
                    value: p.value,
                    mode: "worst_residual".to_string(),
                }));
                summary.bound_checks.push(ergodicity::BoundCheck {
                    name: format!("doeblin_search_k{k}"),
                    pass: search.certificate.is_some(),
                    detail: match &search.certificate {
                        Some(c) => format!("window n_k={}", c.n_k.unwrap_or(0)),
                        None => "no window within the horizon".to_string(),
                    },
                });
                searches.push(search);
            }
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::DoeblinSearch { searches })
        }
        "coefficient_battery" => {
            let count = block.count.unwrap_or(10);
            if count < 1 {
                return Err(Error::input("`count` must be >= 1"));
            }
            let space = spec.space();
            if space.kind_name() != "simplex" {
                return Err(Error::input(
                    "the coefficient battery runs on simplex chains",
                ));
            }
            let mut reports = Vec::with_capacity(count);
            let mut pass = true;
            for i in 0..count {
                let t = gallery::matrix_gallery(
                    "random_stochastic",
                    space.dimension(),
                    seed ^ (2 * i as u64 + 1),
                )?;
                let s = gallery::matrix_gallery(
                    "random_stochastic",
                    space.dimension(),
                    seed ^ (2 * i as u64 + 2),
                )?;
                let (t, s) = (t.operator().unwrap().clone(), s.operator().unwrap().clone());
                let y = probes::base_samples(space, 2, seed ^ (i as u64));
                let h = obsb::MarkovOperator::rank_one(space.clone(), &y[0])?.matrix()
                    - obsb::MarkovOperator::rank_one(space.clone(), &y[1])?.matrix();
                let report = dobrushin::property_battery(&t, &s, &h, block_budget)?;
                pass &= report.pass;
                reports.push(report);
            }
            summary.bound_checks.push(ergodicity::BoundCheck {
                name: "coefficient_battery".to_string(),
                pass,
                detail: format!("{count} operator pairs"),
            });
            Ok(AnalysisOutcome::CoefficientBattery { reports, pass })
        }
        "implication_chain" => {
            let ks = block.ks.clone().unwrap_or_else(|| vec![0]);
            let horizon = require(block.horizon, "horizon", kind)?;
            let points = probe_set(spec, seed, block.probes);
            let report =
                ergodicity::check_implication_chain(spec, &ks, horizon, &points, thresholds)?;
            summary.absorb_implications(&report);
            let rows: Vec<CsvRow> = report
                .gamma_trace
                .iter()
                .map(|(k, gamma)| CsvRow {
                    k: *k,
                    n: *k,
                    value: *gamma,
                    mode: "gamma".to_string(),
                })
                .collect();
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::ImplicationChain { report })
        }
        "decay_bound" => {
            let k = require(block.k, "k", kind)?;
            let alpha = require(block.alpha, "alpha", kind)?;
            let n_max = require(block.n_max, "n_max", kind)?;
            let spacing = block.spacing.unwrap_or(1);
            let points = probe_set(spec, seed, block.probes);
            let report =
                ergodicity::decay_bound_check(spec, k, alpha, &points, n_max, spacing, thresholds)?;
            summary.absorb_decay(&report);
            let rows: Vec<CsvRow> = report
                .worst_trace
                .iter()
                .map(|p| CsvRow {
                    k,
                    n: k + p.n,
                    value: p.value,
                    mode: "worst_ratio".to_string(),
                })
                .collect();
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::DecayBound { report })
        }
        "strong_limit_certificate" => {
            let ks = block.ks.clone().unwrap_or_else(|| vec![0]);
            let horizon = require(block.horizon, "horizon", kind)?;
            let points = probe_set(spec, seed, block.probes);
            let report =
                ergodicity::certificate_from_strong_limit(spec, &ks, &points, horizon, thresholds)?;
            summary.bound_checks.push(ergodicity::BoundCheck {
                name: "strong_limit_certificate".to_string(),
                pass: report.verdict == Verdict::Pass,
                detail: format!("verdict {:?}", report.verdict),
            });
            let mut rows = Vec::new();
            for cert in &report.certificates {
                if let Some(traces) = &cert.residual_traces {
                    for t in traces {
                        rows.extend(t.points.iter().map(|p| CsvRow {
                            k: cert.k,
                            n: p.n,
                            value: p.value,
                            mode: t.probe.clone(),
                        }));
                    }
                }
            }
            csv_sets.push((id.to_string(), rows));
            Ok(AnalysisOutcome::StrongLimitCertificate { report })
        }
        other => Err(Error::input(format!("unknown analysis kind '{other}'"))),
    }
}

/// Fixed-grid strong limits exist, but the convergence horizon grows under
/// grid refinement; record that next to the verdict.
fn annotate_grid_sensitivity(
    report: &mut obsb::ergodicity::LStrongReport,
    params: &gallery::GridChainParams,
    n_max: usize,
    thresholds: &Thresholds,
) -> obsb::Result<()> {
    let mut sizes: Vec<usize> = [5usize, 9, 17, 33]
        .into_iter()
        .filter(|s| *s < params.grid_size)
        .collect();
    sizes.push(params.grid_size);
    let horizons = gallery::grid_refinement_horizons(
        params,
        &sizes,
        params.start_index,
        4 * n_max,
        3,
        0x5eed,
        thresholds,
    )?;
    let described: Vec<String> = horizons
        .iter()
        .map(|(size, h)| match h {
            Some(n) => format!("{size} nodes -> n={n}"),
            None => format!("{size} nodes -> beyond horizon"),
        })
        .collect();
    let growing = horizons.windows(2).all(|w| match (w[0].1, w[1].1) {
        (Some(a), Some(b)) => a <= b,
        (Some(_), None) => true,
        _ => false,
    });
    if growing && horizons.len() > 1 {
        report.notes.push(format!(
            "discretization-sensitive: convergence horizon grows under grid refinement ({})",
            described.join(", ")
        ));
    } else {
        report.notes.push(format!(
            "grid refinement horizons: {}",
            described.join(", ")
        ));
    }
    Ok(())
}
