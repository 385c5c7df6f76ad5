//! Ergodicity classification of homogeneous and nonhomogeneous chains, and
//! the Doeblin-type minorization certificates that explain it.
//!
//! Verdicts are numerical evidence at a finite horizon, not theorems: a
//! `Pass` means the monitored quantity crossed the configured threshold, a
//! `Fail` means it stalled visibly away from zero, anything else is
//! `Inconclusive`. Every verdict carries its trace so it can be audited.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dobrushin::{delta_linear, DeltaMode};
use crate::error::{Error, Result};
use crate::operators::{apply_matrix, matrix_operator_norm, MarkovOperator, NdmcSpec};
use crate::space::{SpaceDescriptor, Vector};

/// Verdict thresholds and solver tolerances. The defaults implement the
/// documented artifact choices; all of them are configurable from scenario
/// files.
#[derive(Clone, Debug, Serialize)]
pub struct Thresholds {
    /// A trace passes once it falls below this value.
    pub weak_pass: f64,
    /// A trace fails if it stays above this value over the last half horizon.
    pub stall_floor: f64,
    /// Final-residual requirement for vanishing-slack certificates.
    pub vanish_tail: f64,
    /// Steps ignored before monotonicity of vanishing slacks is enforced.
    pub vanish_burn_in: usize,
    /// Agreement tolerance for limit vectors across probes and start times.
    pub strong_agree: f64,
    /// `delta < 1 - uniform_gap` detects a contracting power.
    pub uniform_gap: f64,
    /// Residual above which the direct fixed-point solve is considered
    /// singular and power iteration takes over.
    pub singular_fallback: f64,
    /// Cone membership tolerance.
    pub cone_tol: f64,
    /// Slack added to minorization residual comparisons.
    pub residual_slack: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            weak_pass: 1e-4,
            stall_floor: 1e-2,
            vanish_tail: 1e-6,
            vanish_burn_in: 5,
            strong_agree: 1e-4,
            uniform_gap: 1e-6,
            singular_fallback: 1e-10,
            cone_tol: 1e-9,
            residual_slack: 1e-9,
        }
    }
}

/// Probe membership tolerance: inputs to certificates must sit in the base.
pub const PROBE_BASE_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TracePoint {
    pub n: usize,
    pub value: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DeltaTracePoint {
    pub k: usize,
    pub n: usize,
    pub value: f64,
    pub mode: DeltaMode,
}

/// Exponential envelope `value <= c * exp(-alpha * n)` fitted by log-linear
/// regression.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FittedRate {
    pub c: f64,
    pub alpha: f64,
    pub r2: f64,
}

/// Least-squares fit of `ln(value)` against `n`, ignoring values below the
/// floor; `None` when fewer than two usable points remain.
pub fn fit_log_linear(points: &[(usize, f64)], floor: f64) -> Option<FittedRate> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, v)| *v > floor)
        .map(|(n, v)| (*n as f64, v.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let n = usable.len() as f64;
    let mean_x = usable.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y = usable.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in &usable {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = usable
        .iter()
        .map(|(x, y)| {
            let p = intercept + slope * x;
            (y - p) * (y - p)
        })
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Some(FittedRate {
        c: intercept.exp(),
        alpha: -slope,
        r2,
    })
}

fn trace_verdict(values: &[f64], thresholds: &Thresholds) -> Verdict {
    match values.last() {
        None => Verdict::Inconclusive,
        Some(&last) => {
            if last <= thresholds.weak_pass {
                Verdict::Pass
            } else {
                let half = values.len() / 2;
                let tail_min = values[half..].iter().fold(f64::INFINITY, |a, &v| a.min(v));
                if tail_min > thresholds.stall_floor {
                    Verdict::Fail
                } else {
                    Verdict::Inconclusive
                }
            }
        }
    }
}

fn aggregate(verdicts: impl Iterator<Item = Verdict>) -> Verdict {
    let mut all_pass = true;
    let mut saw_any = false;
    for v in verdicts {
        saw_any = true;
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Inconclusive => all_pass = false,
            Verdict::Pass => {}
        }
    }
    if saw_any && all_pass {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    }
}

fn probe_id(i: usize) -> String {
    format!("p{i}")
}

fn check_probes(space: &SpaceDescriptor, probes: &[Vector]) -> Result<()> {
    if probes.is_empty() {
        return Err(Error::input("probe set must be nonempty"));
    }
    for (i, p) in probes.iter().enumerate() {
        if !space.in_base(p, PROBE_BASE_TOL)? {
            return Err(Error::input(format!(
                "probe {} is not a base element",
                probe_id(i)
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// uniform ergodicity of a homogeneous chain
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct UniformReport {
    pub label: String,
    pub verdict: Verdict,
    /// Smallest power with coefficient bounded away from one.
    pub n0: Option<usize>,
    /// Coefficient of that power.
    pub rho: Option<f64>,
    pub y0: Option<Vector>,
    pub delta_trace: Vec<DeltaTracePoint>,
    /// `||T^n - T_{y0}||` per n.
    pub norm_trace: Vec<TracePoint>,
    /// Whether `||T^n - T_{y0}|| <= 2 rho^{floor(n / n0)}` held on the whole
    /// horizon.
    pub bound_ok: Option<bool>,
    pub fitted_rate: Option<FittedRate>,
}

/// Uniform-ergodicity analysis of the homogeneous chain `{T^n}`: finds a
/// contracting power, solves for the fixed base point, checks the geometric
/// envelope on `||T^n - T_{y0}||` and fits its decay rate.
pub fn uniform_ergodicity(
    op: &MarkovOperator,
    n_max: usize,
    budget: usize,
    thresholds: &Thresholds,
) -> Result<UniformReport> {
    if n_max < 2 {
        return Err(Error::input("n_max must be >= 2"));
    }
    let space = op.space();
    let d = space.dimension();
    let mut delta_trace = Vec::with_capacity(n_max);
    let mut power = DMatrix::<f64>::identity(d, d);
    let mut found: Option<(usize, f64)> = None;
    for n in 1..=n_max {
        power = op.matrix() * power;
        let dr = delta_linear(space, &power, budget)?;
        delta_trace.push(DeltaTracePoint {
            k: 0,
            n,
            value: dr.value,
            mode: dr.mode,
        });
        if found.is_none() && dr.value < 1.0 - thresholds.uniform_gap {
            found = Some((n, dr.value));
        }
    }
    let Some((n0, rho)) = found else {
        return Ok(UniformReport {
            label: op.label().to_string(),
            verdict: Verdict::Fail,
            n0: None,
            rho: None,
            y0: None,
            delta_trace,
            norm_trace: Vec::new(),
            bound_ok: None,
            fitted_rate: None,
        });
    };

    let y0 = fixed_point(op, thresholds)?;
    let projector = MarkovOperator::rank_one(space.clone(), &y0)?;
    let mut norm_trace = Vec::with_capacity(n_max);
    let mut bound_ok = true;
    let mut power = DMatrix::<f64>::identity(d, d);
    for n in 1..=n_max {
        power = op.matrix() * power;
        let gap = &power - projector.matrix();
        let estimate = matrix_operator_norm(space, &gap, budget)?;
        norm_trace.push(TracePoint {
            n,
            value: estimate.value,
        });
        let envelope = 2.0 * rho.powi((n / n0) as i32);
        if estimate.value > envelope + 1e-9 {
            bound_ok = false;
        }
    }
    let fit_points: Vec<(usize, f64)> = norm_trace.iter().map(|p| (p.n, p.value)).collect();
    let fitted_rate = fit_log_linear(&fit_points, 1e-14);
    let degenerate_zero = norm_trace.iter().all(|p| p.value <= 1e-14);
    let verdict = if bound_ok && (degenerate_zero || fitted_rate.is_some_and(|f| f.alpha > 0.0)) {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Ok(UniformReport {
        label: op.label().to_string(),
        verdict,
        n0: Some(n0),
        rho: Some(rho),
        y0: Some(y0),
        delta_trace,
        norm_trace,
        bound_ok: Some(bound_ok),
        fitted_rate,
    })
}

/// Fixed base point of a Markov operator: solves `(T - I) y = 0, f(y) = 1`
/// by stacked least squares, falling back to power iteration when the solve
/// is singular beyond the configured tolerance.
pub fn fixed_point(op: &MarkovOperator, thresholds: &Thresholds) -> Result<Vector> {
    let space = op.space();
    let d = space.dimension();
    let f = space.functional_coefficients();
    let m = op.matrix();

    let mut stacked = DMatrix::<f64>::zeros(d + 1, d);
    for i in 0..d {
        for j in 0..d {
            stacked[(i, j)] = m[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..d {
        stacked[(d, j)] = f[j];
    }
    let mut rhs = DVector::<f64>::zeros(d + 1);
    rhs[d] = 1.0;
    let svd = stacked.svd(true, true);
    if let Ok(y) = svd.solve(&rhs, 1e-13) {
        let coords: Vec<f64> = y.iter().copied().collect();
        let image = apply_matrix(m, &coords);
        let mut residual = coords
            .iter()
            .zip(&image)
            .fold(0.0_f64, |a, (y, ty)| a.max((ty - y).abs()));
        let fy: f64 = coords.iter().zip(&f).map(|(y, c)| y * c).sum();
        residual = residual.max((fy - 1.0).abs());
        if residual <= thresholds.singular_fallback.max(1e-12) * 1e2
            && space.cone_violation_raw(&coords) <= 1e-7
        {
            return space.vector(coords);
        }
    }

    // power iteration fallback
    let start = space.base_extreme_points(2)?.points[0].clone();
    let mut y = start.into_coords();
    let mut last_diff = f64::INFINITY;
    for _ in 0..200_000 {
        let mut next = apply_matrix(m, &y);
        let fy: f64 = next.iter().zip(&f).map(|(v, c)| v * c).sum();
        if fy.abs() < 1e-300 {
            return Err(Error::numeric("fixed_point normalization", fy));
        }
        for v in &mut next {
            *v /= fy;
        }
        last_diff = y
            .iter()
            .zip(&next)
            .fold(0.0_f64, |a, (p, q)| a.max((p - q).abs()));
        y = next;
        if last_diff <= 5e-15 {
            break;
        }
    }
    if last_diff > 1e-11 {
        return Err(Error::numeric("fixed_point power iteration", last_diff));
    }
    if space.cone_violation_raw(&y) > 1e-7 {
        return Err(Error::numeric(
            "fixed_point cone membership",
            space.cone_violation_raw(&y),
        ));
    }
    space.vector(y)
}

// ---------------------------------------------------------------------------
// weak ergodicity (coefficient traces)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct KDeltaTrace {
    pub k: usize,
    pub points: Vec<DeltaTracePoint>,
    pub verdict: Verdict,
    pub fitted_rate: Option<FittedRate>,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeakReport {
    pub label: String,
    pub per_k: Vec<KDeltaTrace>,
    pub verdict: Verdict,
    pub fitted_rate: Option<FittedRate>,
}

/// Coefficient trace `delta(T^{k,n})` per start time; pass when every trace
/// falls below the weak threshold by the horizon.
pub fn weak_ergodicity(
    spec: &NdmcSpec,
    ks: &[usize],
    n_max: usize,
    budget: usize,
    thresholds: &Thresholds,
) -> Result<WeakReport> {
    if ks.is_empty() {
        return Err(Error::input("at least one start index is required"));
    }
    let space = spec.space();
    let mut per_k = Vec::with_capacity(ks.len());
    for &k in ks {
        if n_max <= k {
            return Err(Error::input(format!(
                "horizon {n_max} does not reach past start index {k}"
            )));
        }
        let mut walker = spec.walker(k);
        let mut points = Vec::with_capacity(n_max - k);
        while walker.n() < n_max {
            walker.advance();
            let dr = delta_linear(space, walker.matrix(), budget)?;
            points.push(DeltaTracePoint {
                k,
                n: walker.n(),
                value: dr.value,
                mode: dr.mode,
            });
        }
        let values: Vec<f64> = points.iter().map(|p| p.value).collect();
        let fit_points: Vec<(usize, f64)> = points.iter().map(|p| (p.n, p.value)).collect();
        let fitted_rate = fit_log_linear(&fit_points, 1e-14);
        // a passing trace must actually decay
        let mut verdict = trace_verdict(&values, thresholds);
        if verdict == Verdict::Pass {
            if let Some(fit) = fitted_rate {
                if fit.alpha <= 0.0 {
                    verdict = Verdict::Inconclusive;
                }
            }
        }
        per_k.push(KDeltaTrace {
            k,
            points,
            verdict,
            fitted_rate,
        });
    }
    let verdict = aggregate(per_k.iter().map(|t| t.verdict));
    let fitted_rate = per_k.iter().find_map(|t| t.fitted_rate);
    Ok(WeakReport {
        label: spec.label().to_string(),
        per_k,
        verdict,
        fitted_rate,
    })
}

// ---------------------------------------------------------------------------
// L-weak ergodicity (per-pair traces)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct PairTrace {
    pub k: usize,
    pub pair: String,
    pub points: Vec<TracePoint>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct LWeakReport {
    pub label: String,
    pub traces: Vec<PairTrace>,
    pub verdict: Verdict,
}

/// Pairwise trace `||T^{k,n} x - T^{k,n} y||` per start time and probe pair.
pub fn l_weak_ergodicity(
    spec: &NdmcSpec,
    ks: &[usize],
    pairs: &[(Vector, Vector)],
    n_max: usize,
    thresholds: &Thresholds,
) -> Result<LWeakReport> {
    if ks.is_empty() || pairs.is_empty() {
        return Err(Error::input("need at least one start index and one pair"));
    }
    let space = spec.space();
    for (i, (x, y)) in pairs.iter().enumerate() {
        if !space.in_base(x, PROBE_BASE_TOL)? || !space.in_base(y, PROBE_BASE_TOL)? {
            return Err(Error::input(format!("pair {i} leaves the base")));
        }
    }
    let diffs: Vec<Vec<f64>> = pairs
        .iter()
        .map(|(x, y)| {
            x.coords()
                .iter()
                .zip(y.coords())
                .map(|(a, b)| a - b)
                .collect()
        })
        .collect();
    let mut traces = Vec::new();
    for &k in ks {
        if n_max <= k {
            return Err(Error::input(format!(
                "horizon {n_max} does not reach past start index {k}"
            )));
        }
        // evolve the difference vectors step by step; going through the
        // composite matrix would cancel catastrophically once the true
        // difference is small
        let mut states = diffs.clone();
        let mut per_pair: Vec<Vec<TracePoint>> = vec![Vec::new(); pairs.len()];
        for n in k..n_max {
            let step = spec.step(n);
            for (p, state) in states.iter_mut().enumerate() {
                *state = apply_matrix(step.matrix(), state);
                let value = space.base_norm_raw(state)?;
                per_pair[p].push(TracePoint { n: n + 1, value });
            }
        }
        for (p, points) in per_pair.into_iter().enumerate() {
            let values: Vec<f64> = points.iter().map(|q| q.value).collect();
            let verdict = trace_verdict(&values, thresholds);
            traces.push(PairTrace {
                k,
                pair: format!("pair{p}"),
                points,
                verdict,
            });
        }
    }
    let verdict = aggregate(traces.iter().map(|t| t.verdict));
    Ok(LWeakReport {
        label: spec.label().to_string(),
        traces,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// L-strong ergodicity (limit vectors)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct StrongTrajectory {
    pub k: usize,
    pub probe: String,
    pub limit: Option<Vector>,
    pub converged: bool,
    /// Spread of the late-horizon window around the limit estimate.
    pub tail_spread: f64,
    /// `||T^{k,n} u - limit||` per n.
    pub trace: Vec<TracePoint>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LStrongReport {
    pub label: String,
    pub trajectories: Vec<StrongTrajectory>,
    /// Pairwise distances between trajectory limits.
    pub limit_disagreement: Vec<(String, String, f64)>,
    pub max_disagreement: f64,
    pub y0: Option<Vector>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Convergence of `T^{k,n} u` to a single base element across probes and
/// start times, estimated by late-horizon averaging.
pub fn l_strong_ergodicity(
    spec: &NdmcSpec,
    ks: &[usize],
    probes: &[Vector],
    n_max: usize,
    thresholds: &Thresholds,
) -> Result<LStrongReport> {
    if ks.is_empty() {
        return Err(Error::input("at least one start index is required"));
    }
    let space = spec.space();
    check_probes(space, probes)?;
    let d = space.dimension();

    let mut trajectories = Vec::new();
    for &k in ks {
        if n_max <= k {
            return Err(Error::input(format!(
                "horizon {n_max} does not reach past start index {k}"
            )));
        }
        let mut states: Vec<Vec<f64>> = probes.iter().map(|p| p.coords().to_vec()).collect();
        let mut paths: Vec<Vec<Vec<f64>>> = vec![Vec::new(); probes.len()];
        for n in k..n_max {
            let step = spec.step(n);
            for (p, state) in states.iter_mut().enumerate() {
                *state = apply_matrix(step.matrix(), state);
                paths[p].push(state.clone());
            }
        }
        let window = (paths[0].len() / 5).max(2).min(paths[0].len());
        for (p, path) in paths.into_iter().enumerate() {
            let mut mean = vec![0.0; d];
            for state in &path[path.len() - window..] {
                for (m, v) in mean.iter_mut().zip(state) {
                    *m += v;
                }
            }
            for m in &mut mean {
                *m /= window as f64;
            }
            let mut tail_spread = 0.0_f64;
            let mut trace = Vec::with_capacity(path.len());
            for (idx, state) in path.iter().enumerate() {
                let gap: Vec<f64> = state.iter().zip(&mean).map(|(a, b)| a - b).collect();
                let value = space.base_norm_raw(&gap)?;
                trace.push(TracePoint {
                    n: k + 1 + idx,
                    value,
                });
                if idx >= path.len() - window {
                    tail_spread = tail_spread.max(value);
                }
            }
            let converged = tail_spread <= thresholds.strong_agree;
            let limit = space.vector(mean).ok();
            trajectories.push(StrongTrajectory {
                k,
                probe: probe_id(p),
                limit,
                converged,
                tail_spread,
                trace,
            });
        }
    }

    let mut limit_disagreement = Vec::new();
    let mut max_disagreement = 0.0_f64;
    let all_converged = trajectories
        .iter()
        .all(|t| t.converged && t.limit.is_some());
    if all_converged {
        for i in 0..trajectories.len() {
            for j in (i + 1)..trajectories.len() {
                let li = trajectories[i].limit.as_ref().unwrap();
                let lj = trajectories[j].limit.as_ref().unwrap();
                let gap: Vec<f64> = li
                    .coords()
                    .iter()
                    .zip(lj.coords())
                    .map(|(a, b)| a - b)
                    .collect();
                let dist = space.base_norm_raw(&gap)?;
                max_disagreement = max_disagreement.max(dist);
                limit_disagreement.push((
                    format!("k{}:{}", trajectories[i].k, trajectories[i].probe),
                    format!("k{}:{}", trajectories[j].k, trajectories[j].probe),
                    dist,
                ));
            }
        }
    }

    let (verdict, y0) = if !all_converged {
        (Verdict::Inconclusive, None)
    } else if max_disagreement <= thresholds.strong_agree {
        let mut grand = vec![0.0; d];
        for t in &trajectories {
            for (g, v) in grand.iter_mut().zip(t.limit.as_ref().unwrap().coords()) {
                *g += v;
            }
        }
        let f = space.functional_raw(&grand);
        for g in &mut grand {
            *g /= f;
        }
        (Verdict::Pass, space.vector(grand).ok())
    } else {
        (Verdict::Fail, None)
    };

    Ok(LStrongReport {
        label: spec.label().to_string(),
        trajectories,
        limit_disagreement,
        max_disagreement,
        y0,
        verdict,
        notes: Vec::new(),
    })
}

// ---------------------------------------------------------------------------
// Doeblin-type minorization certificates
// ---------------------------------------------------------------------------

/// Which minorization condition a certificate claims: uniform over the base
/// (`D`), per-pair at one window (`D1`), or with vanishing slack over every
/// window (`D2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DoeblinCondition {
    D,
    D1,
    D2,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualTrace {
    pub probe: String,
    pub points: Vec<TracePoint>,
}

/// Witness data for a minorization `T^{k,n} x + phi >= lambda z` on a probe
/// set: the reference base element `z`, the mass constant `lambda`, the
/// window, and the slack norms per probe.
#[derive(Clone, Debug, Serialize)]
pub struct DoeblinCertificate {
    pub condition: DoeblinCondition,
    pub k: usize,
    pub z: Vector,
    pub lambda: f64,
    /// Absolute composite target (the window is `[k, n_k)`); absent for the
    /// vanishing-slack condition.
    pub n_k: Option<usize>,
    /// Final (or single-window) slack norm per probe.
    pub residuals: Vec<(String, f64)>,
    /// Per-probe slack traces for vanishing-slack certificates.
    pub residual_traces: Option<Vec<ResidualTrace>>,
    pub pass: bool,
    /// Contraction estimate `1 - lambda/2` implied by a passing certificate.
    pub mu: f64,
    /// True when the certificate only rests on sampled probes rather than a
    /// complete extreme-point cover of the base.
    pub sampled: bool,
}

/// Certificate request: everything except the probe set.
#[derive(Clone, Debug)]
pub struct DoeblinRequest {
    pub condition: DoeblinCondition,
    pub k: usize,
    pub z: Vector,
    pub lambda: f64,
    pub n_k: Option<usize>,
    pub horizon: Option<usize>,
}

// phi = pos part of (lambda z - T x); then T x + phi - lambda z is the
// neg part, which lies in the cone by construction.
fn slack_norm(space: &SpaceDescriptor, image: &[f64], z_scaled: &[f64]) -> Result<f64> {
    let want: Vec<f64> = z_scaled.iter().zip(image).map(|(z, t)| z - t).collect();
    let (pos, _, _) = space.decompose_raw(&want)?;
    Ok(space.functional_raw(&pos))
}

fn minorization_residual(
    space: &SpaceDescriptor,
    matrix: &DMatrix<f64>,
    probe: &Vector,
    z_scaled: &[f64],
) -> Result<f64> {
    slack_norm(space, &apply_matrix(matrix, probe.coords()), z_scaled)
}

fn probes_cover_extremes(space: &SpaceDescriptor, probes: &[Vector]) -> bool {
    match space.base_extreme_points(crate::operators::CERTIFICATE_POINTS) {
        Ok(ext) if ext.complete => ext
            .points
            .iter()
            .all(|e| probes.iter().any(|p| p.max_abs_diff(e) <= 1e-12)),
        _ => false,
    }
}

/// Evaluates a claimed minorization certificate on a probe set by computing
/// the minimal slack `phi` per probe from the decomposition of
/// `lambda z - T^{k,n} x`.
pub fn doeblin_check(
    spec: &NdmcSpec,
    request: &DoeblinRequest,
    probes: &[Vector],
    thresholds: &Thresholds,
) -> Result<DoeblinCertificate> {
    let space = spec.space();
    if !space.in_base(&request.z, PROBE_BASE_TOL)? {
        return Err(Error::precondition("z must be a base element"));
    }
    if !(request.lambda > 0.0 && request.lambda <= 2.0) {
        return Err(Error::precondition(format!(
            "lambda must lie in (0, 2], got {}",
            request.lambda
        )));
    }
    check_probes(space, probes)?;
    let z_scaled: Vec<f64> = request
        .z
        .coords()
        .iter()
        .map(|v| v * request.lambda)
        .collect();
    let sampled = !probes_cover_extremes(space, probes);
    let mu = 1.0 - request.lambda / 2.0;

    match request.condition {
        DoeblinCondition::D | DoeblinCondition::D1 => {
            let n_k = request
                .n_k
                .ok_or_else(|| Error::input("single-window conditions need n_k"))?;
            if n_k <= request.k {
                return Err(Error::input("window must satisfy n_k > k"));
            }
            let composite = spec.composite(request.k, n_k)?;
            let mut residuals = Vec::with_capacity(probes.len());
            let mut pass = true;
            for (i, probe) in probes.iter().enumerate() {
                let r = minorization_residual(space, composite.matrix(), probe, &z_scaled)?;
                if r > request.lambda / 4.0 + thresholds.residual_slack {
                    pass = false;
                }
                residuals.push((probe_id(i), r));
            }
            Ok(DoeblinCertificate {
                condition: request.condition,
                k: request.k,
                z: request.z.clone(),
                lambda: request.lambda,
                n_k: Some(n_k),
                residuals,
                residual_traces: None,
                pass,
                mu,
                sampled,
            })
        }
        DoeblinCondition::D2 => {
            let horizon = request
                .horizon
                .ok_or_else(|| Error::input("vanishing-slack condition needs a horizon"))?;
            if horizon <= request.k + thresholds.vanish_burn_in {
                return Err(Error::input("horizon must reach past the burn-in window"));
            }
            let mut states: Vec<Vec<f64>> = probes.iter().map(|p| p.coords().to_vec()).collect();
            let mut traces: Vec<Vec<TracePoint>> = vec![Vec::new(); probes.len()];
            // n = k is the identity composite; the trace starts at the raw
            // probe.
            for n in request.k..=horizon {
                for (i, state) in states.iter().enumerate() {
                    let r = slack_norm(space, state, &z_scaled)?;
                    traces[i].push(TracePoint { n, value: r });
                }
                if n < horizon {
                    let step = spec.step(n);
                    for state in &mut states {
                        *state = apply_matrix(step.matrix(), state);
                    }
                }
            }
            let mut residuals = Vec::with_capacity(probes.len());
            let mut pass = true;
            for (i, trace) in traces.iter().enumerate() {
                let last = trace.last().map(|p| p.value).unwrap_or(f64::INFINITY);
                let mut monotone = true;
                let mut prev: Option<f64> = None;
                for point in trace.iter() {
                    if point.n >= request.k + thresholds.vanish_burn_in {
                        if let Some(p) = prev {
                            if point.value > p + 1e-12 {
                                monotone = false;
                            }
                        }
                        prev = Some(point.value);
                    }
                }
                if last > thresholds.vanish_tail || !monotone {
                    pass = false;
                }
                residuals.push((probe_id(i), last));
            }
            let residual_traces = traces
                .into_iter()
                .enumerate()
                .map(|(i, points)| ResidualTrace {
                    probe: probe_id(i),
                    points,
                })
                .collect();
            Ok(DoeblinCertificate {
                condition: DoeblinCondition::D2,
                k: request.k,
                z: request.z.clone(),
                lambda: request.lambda,
                n_k: None,
                residuals,
                residual_traces: Some(residual_traces),
                pass,
                mu,
                sampled,
            })
        }
    }
}

/// Search outcome: the first window at which the reference construction
/// `lambda = 1, z = T^{k,n} y0` brings every probe's slack under 1/4.
#[derive(Clone, Debug, Serialize)]
pub struct DoeblinSearch {
    pub k: usize,
    pub certificate: Option<DoeblinCertificate>,
    /// Worst probe residual per window.
    pub residual_trace: Vec<TracePoint>,
}

/// Scans windows `n = k+1..=horizon` for the first one where
/// `||(T^{k,n} x - T^{k,n} y0)_-|| <= 1/4` across all probes, with `y0` the
/// first probe; a passing window yields a per-pair certificate with
/// `lambda = 1` and `z = T^{k,n} y0`.
pub fn doeblin_search(
    spec: &NdmcSpec,
    k: usize,
    horizon: usize,
    probes: &[Vector],
    thresholds: &Thresholds,
) -> Result<DoeblinSearch> {
    let space = spec.space();
    check_probes(space, probes)?;
    if horizon <= k {
        return Err(Error::input("horizon must reach past the start index"));
    }
    let sampled = !probes_cover_extremes(space, probes);
    let mut states: Vec<Vec<f64>> = probes.iter().map(|p| p.coords().to_vec()).collect();
    let mut residual_trace = Vec::new();
    for n in k + 1..=horizon {
        let step = spec.step(n - 1);
        for state in &mut states {
            *state = apply_matrix(step.matrix(), state);
        }
        let image0 = states[0].clone();
        let mut worst = 0.0_f64;
        let mut residuals = Vec::with_capacity(probes.len());
        for (i, image) in states.iter().enumerate() {
            let diff: Vec<f64> = image.iter().zip(&image0).map(|(a, b)| a - b).collect();
            let (_, neg, _) = space.decompose_raw(&diff)?;
            let r = space.functional_raw(&neg);
            worst = worst.max(r);
            residuals.push((probe_id(i), r));
        }
        residual_trace.push(TracePoint { n, value: worst });
        if worst <= 0.25 + thresholds.residual_slack {
            let z = space.vector(image0)?;
            return Ok(DoeblinSearch {
                k,
                certificate: Some(DoeblinCertificate {
                    condition: DoeblinCondition::D1,
                    k,
                    z,
                    lambda: 1.0,
                    n_k: Some(n),
                    residuals,
                    residual_traces: None,
                    pass: true,
                    mu: 0.5,
                    sampled,
                }),
                residual_trace,
            });
        }
    }
    Ok(DoeblinSearch {
        k,
        certificate: None,
        residual_trace,
    })
}

// ---------------------------------------------------------------------------
// implication-chain consistency
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct ContractionStage {
    pub n_k: usize,
    pub lambda: f64,
    pub gamma_max: f64,
    pub mu_bound: f64,
    pub ok: bool,
    pub qualified_pairs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImplicationStage {
    pub k: usize,
    /// Vanishing-slack certificate verdict; `None` when no converged limit
    /// was available to test against.
    pub d2: Option<bool>,
    pub d1: bool,
    pub contraction: Option<ContractionStage>,
    pub l_weak: Verdict,
    pub violations: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ImplicationChainReport {
    pub label: String,
    pub strong: Verdict,
    pub strong_implies_d2_ok: Option<bool>,
    pub stages: Vec<ImplicationStage>,
    pub gamma_trace: Vec<(usize, f64)>,
    pub violations: Vec<String>,
    pub pass: bool,
}

/// Cross-checks the implication chain between the minorization conditions and
/// the ergodicity notions on a probe set: a passing vanishing-slack
/// certificate must come with a passing single-window search, a passing
/// search must produce contraction factors below `1 - lambda/2`, contraction
/// must show up in the pair traces, and a strong limit must yield a
/// vanishing-slack certificate. Violations are reported, never suppressed.
pub fn check_implication_chain(
    spec: &NdmcSpec,
    ks: &[usize],
    horizon: usize,
    probes: &[Vector],
    thresholds: &Thresholds,
) -> Result<ImplicationChainReport> {
    let space = spec.space();
    check_probes(space, probes)?;
    let strong = l_strong_ergodicity(spec, ks, probes, horizon, thresholds)?;

    let mut pairs: Vec<(Vector, Vector)> = Vec::new();
    for w in probes.windows(2) {
        if w[0].max_abs_diff(&w[1]) > 1e-9 {
            pairs.push((w[0].clone(), w[1].clone()));
        }
        if pairs.len() >= 12 {
            break;
        }
    }
    if pairs.is_empty() {
        return Err(Error::input("need at least two distinct probes"));
    }
    let l_weak = l_weak_ergodicity(spec, ks, &pairs, horizon, thresholds)?;

    let mut stages = Vec::new();
    let mut violations: Vec<String> = Vec::new();
    let mut gamma_trace = Vec::new();
    let mut all_d2 = true;

    for &k in ks {
        let mut stage_violations = Vec::new();

        // vanishing slack against the converged limit of the first probe
        let d2 = strong
            .trajectories
            .iter()
            .find(|t| t.k == k && t.probe == "p0" && t.converged)
            .and_then(|t| t.limit.clone())
            .and_then(|limit| {
                let f = space.functional_raw(limit.coords());
                if f.abs() < 1e-9 {
                    return None;
                }
                let z = limit.scale(1.0 / f);
                if !space.in_base(&z, 1e-5).unwrap_or(false) {
                    return None;
                }
                doeblin_check(
                    spec,
                    &DoeblinRequest {
                        condition: DoeblinCondition::D2,
                        k,
                        z,
                        lambda: 1.0,
                        n_k: None,
                        horizon: Some(horizon),
                    },
                    probes,
                    thresholds,
                )
                .ok()
                .map(|cert| cert.pass)
            });
        if d2 != Some(true) {
            all_d2 = false;
        }

        let search = doeblin_search(spec, k, horizon, probes, thresholds)?;
        let d1 = search.certificate.is_some();
        if d2 == Some(true) && !d1 {
            stage_violations.push(format!(
                "k={k}: vanishing slack passed but window search failed"
            ));
        }

        let contraction = if let Some(cert) = &search.certificate {
            let n_k = cert.n_k.expect("search certificates carry a window");
            let composite = spec.composite(k, n_k)?;
            let z_scaled: Vec<f64> = cert.z.coords().iter().map(|v| v * cert.lambda).collect();
            let mut gamma_max = 0.0_f64;
            let mut qualified = 0usize;
            for (x, y) in &pairs {
                let Ok((u, v)) = space.base_split(x, y) else {
                    continue;
                };
                let ru = minorization_residual(space, composite.matrix(), &u, &z_scaled)?;
                let rv = minorization_residual(space, composite.matrix(), &v, &z_scaled)?;
                if ru > cert.lambda / 4.0 + thresholds.residual_slack
                    || rv > cert.lambda / 4.0 + thresholds.residual_slack
                {
                    continue;
                }
                qualified += 1;
                let diff: Vec<f64> = x
                    .coords()
                    .iter()
                    .zip(y.coords())
                    .map(|(a, b)| a - b)
                    .collect();
                let denom = space.base_norm_raw(&diff)?;
                if denom < 1e-12 {
                    continue;
                }
                let image = apply_matrix(composite.matrix(), &diff);
                let gamma = space.base_norm_raw(&image)? / denom;
                gamma_max = gamma_max.max(gamma);
            }
            let ok = qualified == 0 || gamma_max <= cert.mu + 1e-6;
            if !ok {
                stage_violations.push(format!(
                    "k={k}: contraction factor {gamma_max:.6} exceeds mu={:.6}",
                    cert.mu
                ));
            }
            gamma_trace.push((k, gamma_max));
            Some(ContractionStage {
                n_k,
                lambda: cert.lambda,
                gamma_max,
                mu_bound: cert.mu,
                ok,
                qualified_pairs: qualified,
            })
        } else {
            None
        };

        let k_weak = aggregate(l_weak.traces.iter().filter(|t| t.k == k).map(|t| t.verdict));
        if let Some(c) = &contraction {
            if c.ok && c.qualified_pairs > 0 && k_weak == Verdict::Fail {
                stage_violations.push(format!("k={k}: contraction certified but pair traces fail"));
            }
        }

        violations.extend(stage_violations.iter().cloned());
        stages.push(ImplicationStage {
            k,
            d2,
            d1,
            contraction,
            l_weak: k_weak,
            violations: stage_violations,
        });
    }

    let strong_implies_d2_ok = if strong.verdict == Verdict::Pass {
        if !all_d2 {
            violations.push("strong limit exists but vanishing slack failed".to_string());
        }
        Some(all_d2)
    } else {
        None
    };

    let pass = violations.is_empty();
    Ok(ImplicationChainReport {
        label: spec.label().to_string(),
        strong: strong.verdict,
        strong_implies_d2_ok,
        stages,
        gamma_trace,
        violations,
        pass,
    })
}

// ---------------------------------------------------------------------------
// decay envelope
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct DecayBoundReport {
    pub k: usize,
    pub alpha: f64,
    pub spacing: usize,
    /// Smallest constant with
    /// `||T^{k,n}x - T^{k,n}y|| <= c (1 - alpha/2)^{(n-k)/spacing} ||x - y||`
    /// on the computed traces.
    pub c: f64,
    pub envelope_slope: f64,
    pub fitted: Option<FittedRate>,
    pub n_points: usize,
    /// Worst pair ratio per window offset `n - k`.
    pub worst_trace: Vec<TracePoint>,
}

/// Fits the smallest envelope constant for the geometric decay bound implied
/// by minorization constants with `liminf lambda = alpha`.
pub fn decay_bound_check(
    spec: &NdmcSpec,
    k: usize,
    alpha: f64,
    probes: &[Vector],
    n_max: usize,
    spacing: usize,
    _thresholds: &Thresholds,
) -> Result<DecayBoundReport> {
    if !(alpha > 0.0) {
        return Err(Error::precondition("alpha must be positive"));
    }
    if spacing < 1 {
        return Err(Error::input("spacing must be >= 1"));
    }
    let space = spec.space();
    check_probes(space, probes)?;
    if probes.len() < 2 {
        return Err(Error::input("need at least two probes"));
    }
    if n_max <= k {
        return Err(Error::input("horizon must reach past the start index"));
    }
    let rate = 1.0 - alpha / 2.0;

    let mut diffs = Vec::new();
    for w in probes.windows(2) {
        let diff: Vec<f64> = w[0]
            .coords()
            .iter()
            .zip(w[1].coords())
            .map(|(a, b)| a - b)
            .collect();
        let denom = space.base_norm_raw(&diff)?;
        if denom > 1e-12 {
            diffs.push((diff, denom));
        }
    }
    if diffs.is_empty() {
        return Err(Error::input("all probe pairs coincide"));
    }

    let mut states: Vec<Vec<f64>> = diffs.iter().map(|(d, _)| d.clone()).collect();
    let mut c = 0.0_f64;
    let mut worst_per_n: Vec<(usize, f64)> = Vec::new();
    let mut n_points = 0usize;
    for n in k + 1..=n_max {
        let step = spec.step(n - 1);
        let envelope = rate.powf((n - k) as f64 / spacing as f64);
        let mut worst_ratio = 0.0_f64;
        for (state, (_, denom)) in states.iter_mut().zip(&diffs) {
            *state = apply_matrix(step.matrix(), state);
            let ratio = space.base_norm_raw(state)? / denom;
            worst_ratio = worst_ratio.max(ratio);
            if ratio > 1e-300 {
                c = c.max(ratio / envelope);
            }
            n_points += 1;
        }
        worst_per_n.push((n - k, worst_ratio));
    }
    let fitted = fit_log_linear(&worst_per_n, 1e-14);
    let worst_trace = worst_per_n
        .iter()
        .map(|&(n, value)| TracePoint { n, value })
        .collect();
    Ok(DecayBoundReport {
        k,
        alpha,
        spacing,
        c,
        envelope_slope: rate.ln() / spacing as f64,
        fitted,
        n_points,
        worst_trace,
    })
}

// ---------------------------------------------------------------------------
// strong limit -> vanishing slack
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct StrongLimitCertificates {
    pub strong: LStrongReport,
    pub certificates: Vec<DoeblinCertificate>,
    pub verdict: Verdict,
}

/// Builds vanishing-slack certificates with `z = y0, lambda = 1` from an
/// established strong limit; inconclusive (with the full trajectory traces)
/// when the chain does not exhibit one.
pub fn certificate_from_strong_limit(
    spec: &NdmcSpec,
    ks: &[usize],
    probes: &[Vector],
    horizon: usize,
    thresholds: &Thresholds,
) -> Result<StrongLimitCertificates> {
    let strong = l_strong_ergodicity(spec, ks, probes, horizon, thresholds)?;
    if strong.verdict != Verdict::Pass {
        return Ok(StrongLimitCertificates {
            strong,
            certificates: Vec::new(),
            verdict: Verdict::Inconclusive,
        });
    }
    let y0 = strong
        .y0
        .clone()
        .ok_or_else(|| Error::numeric("strong limit missing after pass", f64::NAN))?;
    let mut certificates = Vec::with_capacity(ks.len());
    let mut all_pass = true;
    for &k in ks {
        let cert = doeblin_check(
            spec,
            &DoeblinRequest {
                condition: DoeblinCondition::D2,
                k,
                z: y0.clone(),
                lambda: 1.0,
                n_k: None,
                horizon: Some(horizon),
            },
            probes,
            thresholds,
        )?;
        all_pass &= cert.pass;
        certificates.push(cert);
    }
    Ok(StrongLimitCertificates {
        strong,
        certificates,
        verdict: if all_pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        },
    })
}

// ---------------------------------------------------------------------------
// aggregated report
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// One chain's aggregated analysis payload, assembled from the per-notion
/// fragments.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ErgodicityReport {
    pub chain_id: String,
    pub verdicts: BTreeMap<String, Verdict>,
    pub delta_trace: Vec<DeltaTracePoint>,
    pub pair_traces: Vec<PairTrace>,
    pub fitted_rate: Option<FittedRate>,
    pub bound_checks: Vec<BoundCheck>,
    pub gamma_trace: Vec<(usize, f64)>,
}

impl ErgodicityReport {
    pub fn new(chain_id: impl Into<String>) -> Self {
        ErgodicityReport {
            chain_id: chain_id.into(),
            ..Default::default()
        }
    }

    pub fn absorb_uniform(&mut self, report: &UniformReport) {
        self.verdicts.insert("uniform".into(), report.verdict);
        self.delta_trace.extend(report.delta_trace.iter().copied());
        if self.fitted_rate.is_none() {
            self.fitted_rate = report.fitted_rate;
        }
        if let Some(ok) = report.bound_ok {
            self.bound_checks.push(BoundCheck {
                name: "uniform_geometric_envelope".into(),
                pass: ok,
                detail: format!("n0={:?} rho={:?}", report.n0, report.rho),
            });
        }
    }

    pub fn absorb_weak(&mut self, report: &WeakReport) {
        self.verdicts.insert("weak".into(), report.verdict);
        if self.fitted_rate.is_none() {
            self.fitted_rate = report.fitted_rate;
        }
        for t in &report.per_k {
            self.delta_trace.extend(t.points.iter().copied());
        }
    }

    pub fn absorb_l_weak(&mut self, report: &LWeakReport) {
        self.verdicts.insert("l_weak".into(), report.verdict);
        self.pair_traces.extend(report.traces.iter().cloned());
    }

    pub fn absorb_l_strong(&mut self, report: &LStrongReport) {
        self.verdicts.insert("l_strong".into(), report.verdict);
    }

    pub fn absorb_implications(&mut self, report: &ImplicationChainReport) {
        self.gamma_trace.extend(report.gamma_trace.iter().copied());
        self.bound_checks.push(BoundCheck {
            name: "implication_chain".into(),
            pass: report.pass,
            detail: if report.violations.is_empty() {
                "no violations".into()
            } else {
                report.violations.join("; ")
            },
        });
    }

    pub fn absorb_decay(&mut self, report: &DecayBoundReport) {
        self.bound_checks.push(BoundCheck {
            name: "decay_envelope".into(),
            pass: report.c.is_finite(),
            detail: format!(
                "c={:.6e} envelope_slope={:.6e}",
                report.c, report.envelope_slope
            ),
        });
        if self.fitted_rate.is_none() {
            self.fitted_rate = report.fitted;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::MarkovOperator;
    use crate::space::SpaceDescriptor;

    fn two_state() -> MarkovOperator {
        let space = SpaceDescriptor::simplex(2).unwrap();
        MarkovOperator::from_rows(space, &[vec![0.9, 0.2], vec![0.1, 0.8]], "two_state").unwrap()
    }

    fn swap() -> MarkovOperator {
        let space = SpaceDescriptor::simplex(2).unwrap();
        MarkovOperator::from_rows(space, &[vec![0.0, 1.0], vec![1.0, 0.0]], "swap").unwrap()
    }

    #[test]
    fn fixed_point_of_two_state() {
        let y = fixed_point(&two_state(), &Thresholds::default()).unwrap();
        assert!((y.coords()[0] - 2.0 / 3.0).abs() < 1e-10);
        assert!((y.coords()[1] - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn uniform_two_state_passes_with_rate() {
        let report = uniform_ergodicity(&two_state(), 40, 1000, &Thresholds::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.n0, Some(1));
        assert!((report.rho.unwrap() - 0.7).abs() < 1e-12);
        assert_eq!(report.bound_ok, Some(true));
        let fit = report.fitted_rate.unwrap();
        assert!((fit.alpha - (-0.7f64.ln())).abs() < 0.05 * 0.7f64.ln().abs());
    }

    #[test]
    fn uniform_swap_fails() {
        let report = uniform_ergodicity(&swap(), 20, 1000, &Thresholds::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
        assert!(report.n0.is_none());
        assert!(report
            .delta_trace
            .iter()
            .all(|p| (p.value - 1.0).abs() < 1e-12));
    }

    #[test]
    fn uniform_rank_one_trivial() {
        let space = SpaceDescriptor::simplex(3).unwrap();
        let y = space.vector(vec![0.1, 0.6, 0.3]).unwrap();
        let t = MarkovOperator::rank_one(space, &y).unwrap();
        let report = uniform_ergodicity(&t, 10, 1000, &Thresholds::default()).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert_eq!(report.n0, Some(1));
        assert!(report.norm_trace.iter().all(|p| p.value <= 1e-12));
    }

    #[test]
    fn weak_verdicts_split_families() {
        let th = Thresholds::default();
        let good = NdmcSpec::homogeneous(two_state());
        let report = weak_ergodicity(&good, &[0, 1], 60, 1000, &th).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);

        let bad = NdmcSpec::homogeneous(swap());
        let report = weak_ergodicity(&bad, &[0], 60, 1000, &th).unwrap();
        assert_eq!(report.verdict, Verdict::Fail);
    }

    #[test]
    fn l_weak_equal_probes_are_zero() {
        let th = Thresholds::default();
        let spec = NdmcSpec::homogeneous(two_state());
        let space = spec.space().clone();
        let x = space.vector(vec![0.5, 0.5]).unwrap();
        let report = l_weak_ergodicity(&spec, &[0], &[(x.clone(), x)], 20, &th).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        assert!(report.traces[0].points.iter().all(|p| p.value == 0.0));
    }

    #[test]
    fn l_strong_collects_common_limit() {
        let th = Thresholds::default();
        let spec = NdmcSpec::homogeneous(two_state());
        let space = spec.space().clone();
        let probes = vec![
            space.vector(vec![1.0, 0.0]).unwrap(),
            space.vector(vec![0.0, 1.0]).unwrap(),
            space.vector(vec![0.5, 0.5]).unwrap(),
        ];
        let report = l_strong_ergodicity(&spec, &[0, 2], &probes, 200, &th).unwrap();
        assert_eq!(report.verdict, Verdict::Pass);
        let y0 = report.y0.unwrap();
        assert!((y0.coords()[0] - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn doeblin_check_validates_inputs() {
        let th = Thresholds::default();
        let spec = NdmcSpec::homogeneous(two_state());
        let space = spec.space().clone();
        let z = space.vector(vec![0.5, 0.5]).unwrap();
        let probes = vec![space.vector(vec![1.0, 0.0]).unwrap()];
        let bad_z = space.vector(vec![0.9, 0.3]).unwrap();
        let request = DoeblinRequest {
            condition: DoeblinCondition::D1,
            k: 0,
            z: bad_z,
            lambda: 1.0,
            n_k: Some(1),
            horizon: None,
        };
        assert!(matches!(
            doeblin_check(&spec, &request, &probes, &th),
            Err(Error::Precondition(_))
        ));
        let request = DoeblinRequest {
            condition: DoeblinCondition::D1,
            k: 0,
            z: z.clone(),
            lambda: 0.0,
            n_k: Some(1),
            horizon: None,
        };
        assert!(matches!(
            doeblin_check(&spec, &request, &probes, &th),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn doeblin_exact_match_has_zero_residual() {
        let th = Thresholds::default();
        let spec = NdmcSpec::homogeneous(two_state());
        let space = spec.space().clone();
        let probe = space.vector(vec![1.0, 0.0]).unwrap();
        // z exactly the image of the probe
        let z = spec.composite(0, 1).unwrap().apply(&probe).unwrap();
        let request = DoeblinRequest {
            condition: DoeblinCondition::D1,
            k: 0,
            z,
            lambda: 1.0,
            n_k: Some(1),
            horizon: None,
        };
        let cert = doeblin_check(&spec, &request, &[probe], &th).unwrap();
        assert!(cert.pass);
        assert!(cert.residuals[0].1 <= 1e-12);
    }

    #[test]
    fn search_contracting_vs_permutation() {
        let th = Thresholds::default();
        let space = SpaceDescriptor::simplex(2).unwrap();
        let probes = vec![
            space.vector(vec![0.5, 0.5]).unwrap(),
            space.vector(vec![1.0, 0.0]).unwrap(),
            space.vector(vec![0.0, 1.0]).unwrap(),
        ];
        let good = NdmcSpec::homogeneous(two_state());
        let found = doeblin_search(&good, 0, 50, &probes, &th).unwrap();
        assert!(found.certificate.is_some());

        let bad = NdmcSpec::homogeneous(swap());
        let missing = doeblin_search(&bad, 0, 50, &probes, &th).unwrap();
        assert!(missing.certificate.is_none());
        assert!(missing.residual_trace.iter().all(|p| p.value > 0.25));
    }

    #[test]
    fn implication_chain_consistent_on_both_families() {
        let th = Thresholds::default();
        let space = SpaceDescriptor::simplex(2).unwrap();
        let probes = vec![
            space.vector(vec![0.5, 0.5]).unwrap(),
            space.vector(vec![1.0, 0.0]).unwrap(),
            space.vector(vec![0.0, 1.0]).unwrap(),
            space.vector(vec![0.25, 0.75]).unwrap(),
        ];
        let good = NdmcSpec::homogeneous(two_state());
        let report = check_implication_chain(&good, &[0, 1], 120, &probes, &th).unwrap();
        assert!(report.pass, "{:?}", report.violations);
        assert_eq!(report.strong, Verdict::Pass);
        assert_eq!(report.strong_implies_d2_ok, Some(true));

        let bad = NdmcSpec::homogeneous(swap());
        let report = check_implication_chain(&bad, &[0], 60, &probes, &th).unwrap();
        // everything fails, consistently: no violations
        assert!(report.pass, "{:?}", report.violations);
        assert_eq!(report.strong, Verdict::Inconclusive);
        assert!(report.stages.iter().all(|s| !s.d1));
    }

    #[test]
    fn decay_bound_on_contraction() {
        let th = Thresholds::default();
        let spec = NdmcSpec::homogeneous(two_state());
        let space = spec.space().clone();
        let probes = vec![
            space.vector(vec![1.0, 0.0]).unwrap(),
            space.vector(vec![0.0, 1.0]).unwrap(),
        ];
        // delta = 0.7 corresponds to lambda = 2 (1 - 0.7) = 0.6
        let report = decay_bound_check(&spec, 0, 0.6, &probes, 60, 1, &th).unwrap();
        assert!(report.c.is_finite() && report.c > 0.0);
        // per-step contraction 0.7 equals the envelope with alpha = 0.6
        assert!(report.c <= 1.0 + 1e-9);
        assert!(matches!(
            decay_bound_check(&spec, 0, 0.0, &probes, 60, 1, &th),
            Err(Error::Precondition(_))
        ));

        // a rank-one chain zeroes every pair trace, so any constant works and
        // the smallest reported one is 0
        let y = space.vector(vec![0.25, 0.75]).unwrap();
        let collapse =
            NdmcSpec::homogeneous(crate::operators::MarkovOperator::rank_one(space, &y).unwrap());
        let report = decay_bound_check(&collapse, 0, 0.6, &probes, 20, 1, &th).unwrap();
        assert_eq!(report.c, 0.0);
    }

    #[test]
    fn strong_limit_yields_vanishing_slack() {
        let th = Thresholds::default();
        let spec = NdmcSpec::homogeneous(two_state());
        let space = spec.space().clone();
        let probes = vec![
            space.vector(vec![1.0, 0.0]).unwrap(),
            space.vector(vec![0.0, 1.0]).unwrap(),
        ];
        let out = certificate_from_strong_limit(&spec, &[0, 1], &probes, 200, &th).unwrap();
        assert_eq!(out.verdict, Verdict::Pass);
        assert!(out.certificates.iter().all(|c| c.pass));

        let bad = NdmcSpec::homogeneous(swap());
        let out = certificate_from_strong_limit(&bad, &[0], &probes, 60, &th).unwrap();
        assert_eq!(out.verdict, Verdict::Inconclusive);
        assert!(out.certificates.is_empty());
    }
}
