//! Randomized invariant suites over the space, operator, and coefficient
//! layers. The CLI `properties` command runs them and exits nonzero on any
//! violation, echoing the seed that produced it.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dobrushin::{self, DeltaMode};
use crate::error::{Error, Result};
use crate::gallery;
use crate::operators::{matrix_operator_norm, MarkovOperator, NdmcSpec};
use crate::probes;
use crate::space::{midpoint_quadrature, SpaceDescriptor, SpaceKind};

#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub suite: String,
    pub seed: u64,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub checks: usize,
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl SuiteOutcome {
    fn new(suite: &str) -> Self {
        SuiteOutcome {
            suite: suite.to_string(),
            checks: 0,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, seed: u64, ok: bool, message: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(Violation {
                suite: self.suite.clone(),
                seed,
                message: message(),
            });
        }
    }
}

/// Two delta routes agree when they differ by at most the route tolerance.
pub fn delta_routes_agree(exact: f64, estimate: f64, tol: f64) -> bool {
    (exact - estimate).abs() <= tol
}

fn test_spaces() -> Vec<SpaceDescriptor> {
    let (_, w16) = midpoint_quadrature(16);
    vec![
        SpaceDescriptor::simplex(2).unwrap(),
        SpaceDescriptor::simplex(5).unwrap(),
        SpaceDescriptor::uniform_grid(3).unwrap(),
        SpaceDescriptor::uniform_grid(7).unwrap(),
        SpaceDescriptor::lorentz(2.0, 6).unwrap(),
        SpaceDescriptor::lorentz_quadrature(2.0, w16).unwrap(),
        SpaceDescriptor::sequence_lp(1.0, 5).unwrap(),
        SpaceDescriptor::sequence_lp(2.0, 5).unwrap(),
    ]
}

/// Space-layer invariants: decomposition reconstruction and minimality, norm
/// homogeneity, the norm-functional identity on the cone, and the base-split
/// identity. Also cross-checks the linear-programming route against the
/// coordinatewise and Lorentz routes where both exist.
pub fn space_suite(seed: u64, trials: usize) -> Result<SuiteOutcome> {
    let mut outcome = SuiteOutcome::new("space");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for space in test_spaces() {
        let name = space.kind_name();
        let d = space.dimension();
        let samples = probes::space_samples(&space, trials, seed ^ 0x11);
        let cone = probes::cone_samples(&space, trials, seed ^ 0x22);
        let base = probes::base_samples(&space, 2 * trials, seed ^ 0x33);

        let mut ratio_lo = f64::INFINITY;
        let mut ratio_hi = 0.0_f64;
        for x in &samples {
            let jd = space.jordan_decompose(x)?;
            let rebuilt = jd.pos.sub(&jd.neg)?;
            outcome.check(seed, rebuilt.max_abs_diff(x) <= 1e-9, || {
                format!("{name}(d={d}): decomposition does not reconstruct")
            });
            let value = space.functional(&jd.pos)? + space.functional(&jd.neg)?;
            outcome.check(seed, (value - jd.norm).abs() <= 1e-7, || {
                format!("{name}(d={d}): norm certificate mismatch")
            });

            let norm = jd.norm;
            outcome.check(seed, norm > 0.0 || x.is_zero(), || {
                format!("{name}(d={d}): nonzero vector with zero norm")
            });
            let lambda: f64 = rng.random_range(-3.0..3.0);
            let scaled = space.base_norm(&x.scale(lambda))?;
            outcome.check(
                seed,
                (scaled - lambda.abs() * norm).abs() <= 1e-9 * norm.max(1.0),
                || format!("{name}(d={d}): homogeneity violated"),
            );

            // sampled minimality: no perturbed feasible decomposition beats
            // the certificate
            for _ in 0..3 {
                let noise = probes::space_samples(&space, 1, rng.random()).remove(0);
                let y = jd.pos.add(&noise.scale(0.1))?;
                let z = y.sub(x)?;
                if space.cone_violation(&y)? <= 1e-12 && space.cone_violation(&z)? <= 1e-12 {
                    let alt = space.functional(&y)? + space.functional(&z)?;
                    outcome.check(seed, alt >= norm - 1e-7, || {
                        format!("{name}(d={d}): perturbed decomposition beats the minimum")
                    });
                }
            }
            let w = probes::cone_samples(&space, 1, rng.random()).remove(0);
            let y = jd.pos.add(&w)?;
            let z = jd.neg.add(&w)?;
            let alt = space.functional(&y)? + space.functional(&z)?;
            outcome.check(seed, alt >= norm - 1e-7, || {
                format!("{name}(d={d}): shifted decomposition beats the minimum")
            });

            if matches!(space.kind(), SpaceKind::GridFunction { .. }) {
                let sup = x.coords().iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                if sup > 0.0 {
                    ratio_lo = ratio_lo.min(norm / sup);
                    ratio_hi = ratio_hi.max(norm / sup);
                }
            }
        }
        let zero = space.zero_vector();
        outcome.check(seed, space.base_norm(&zero)? == 0.0, || {
            format!("{name}(d={d}): zero vector has nonzero norm")
        });

        for c in &cone {
            let norm = space.base_norm(c)?;
            let f = space.functional(c)?;
            outcome.check(seed, (norm - f).abs() <= 1e-9 * f.max(1.0), || {
                format!("{name}(d={d}): cone norm differs from functional")
            });
        }

        for pair in base.chunks(2) {
            if pair.len() < 2 || pair[0].max_abs_diff(&pair[1]) <= 1e-12 {
                continue;
            }
            let (u, v) = space.base_split(&pair[0], &pair[1])?;
            outcome.check(
                seed,
                space.in_base(&u, 1e-7)? && space.in_base(&v, 1e-7)?,
                || format!("{name}(d={d}): split leaves the base"),
            );
            let diff = pair[0].sub(&pair[1])?;
            let half_norm = space.base_norm(&diff)? / 2.0;
            let rebuilt = u.sub(&v)?.scale(half_norm);
            outcome.check(seed, rebuilt.max_abs_diff(&diff) <= 1e-9, || {
                format!("{name}(d={d}): split does not reconstruct the difference")
            });
        }

        // cross-route checks
        match space.kind() {
            SpaceKind::Simplex => {
                for x in samples.iter().take(trials.min(50)) {
                    let lp = space.jordan_decompose_lp(x)?;
                    let l1: f64 = x.coords().iter().map(|v| v.abs()).sum();
                    outcome.check(seed, (lp.norm - l1).abs() <= 1e-7, || {
                        format!("simplex(d={d}): LP route differs from coordinatewise value")
                    });
                }
            }
            SpaceKind::SequenceLpCone { p } | SpaceKind::LorentzLp { p, .. } if *p == 1.0 => {
                for x in samples.iter().take(trials.min(50)) {
                    let lp = space.jordan_decompose_lp(x)?;
                    let head = x.coords()[0];
                    let tail = space_tail_l1(&space, x.coords());
                    let closed = head.abs().max(tail);
                    outcome.check(seed, (lp.norm - closed).abs() <= 1e-7, || {
                        format!("{name}(d={d}): LP route differs from the two-term value")
                    });
                }
            }
            _ => {}
        }

        if ratio_hi > 0.0 {
            outcome.notes.push(format!(
                "grid(d={d}): base/sup norm ratio observed in [{ratio_lo:.6}, {ratio_hi:.6}]"
            ));
            outcome.check(seed, ratio_lo > 0.0 && ratio_hi.is_finite(), || {
                format!("grid(d={d}): norm equivalence constants degenerate")
            });
        }
    }
    Ok(outcome)
}

fn space_tail_l1(space: &SpaceDescriptor, coords: &[f64]) -> f64 {
    match space.kind() {
        SpaceKind::LorentzLp {
            quadrature_weights: Some(w),
            ..
        } => coords[1..].iter().zip(w).map(|(v, w)| w * v.abs()).sum(),
        _ => coords[1..].iter().map(|v| v.abs()).sum(),
    }
}

fn random_operator<R: Rng>(space: &SpaceDescriptor, rng: &mut R) -> MarkovOperator {
    let d = space.dimension();
    let mut matrix = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut col: Vec<f64> = (0..d)
            .map(|_| -(rng.random::<f64>().max(1e-300)).ln())
            .collect();
        let total: f64 = col.iter().sum();
        for (i, v) in col.iter_mut().enumerate() {
            matrix[(i, j)] = *v / total;
        }
    }
    MarkovOperator::new(space.clone(), matrix, "random").unwrap()
}

/// Operator-layer invariants: Markovianity under composition and convex
/// combination, functional preservation, the composite chain law, the
/// perturbation contract, and the rank-one projection laws.
pub fn operator_suite(seed: u64, trials: usize) -> Result<SuiteOutcome> {
    let mut outcome = SuiteOutcome::new("operators");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x09);
    for d in [2usize, 3, 5] {
        let space = SpaceDescriptor::simplex(d)?;
        for _ in 0..trials.div_ceil(3).max(1) {
            let a = random_operator(&space, &mut rng);
            let b = random_operator(&space, &mut rng);

            let composed = a.compose(&b)?;
            outcome.check(seed, composed.is_markov(1e-9)?.pass, || {
                format!("d={d}: composition lost Markovianity")
            });
            let w: f64 = rng.random_range(0.0..1.0);
            let mix = MarkovOperator::new(
                space.clone(),
                a.matrix().scale(w) + b.matrix().scale(1.0 - w),
                "mix",
            )?;
            outcome.check(seed, mix.is_markov(1e-9)?.pass, || {
                format!("d={d}: convex combination lost Markovianity")
            });

            let x = probes::space_samples(&space, 1, rng.random()).remove(0);
            let fx = space.functional(&x)?;
            let fax = space.functional(&a.apply(&x)?)?;
            outcome.check(seed, (fx - fax).abs() <= 1e-9 * fx.abs().max(1.0), || {
                format!("d={d}: functional not preserved")
            });

            let chain = NdmcSpec::cycle(vec![a.clone(), b.clone()], "ab")?;
            let whole = chain.composite(0, 5)?;
            let glued = chain.composite(3, 5)?.compose(&chain.composite(0, 3)?)?;
            let scale = whole.matrix().abs().max().max(1e-300);
            outcome.check(
                seed,
                (whole.matrix() - glued.matrix()).abs().max() <= 1e-12 * scale,
                || format!("d={d}: chain law violated"),
            );

            let phi = probes::base_samples(&space, 1, rng.random()).remove(0);
            for eps in [0.1, 0.5, 1.0] {
                let perturbed = a.perturb(&phi, eps)?;
                let dp = dobrushin::delta(&perturbed, 10_000)?;
                outcome.check(seed, dp.value <= 1.0 - eps / 2.0 + 1e-9, || {
                    format!("d={d}: perturbed coefficient exceeds 1 - eps/2")
                });
                let gap = a.matrix() - perturbed.matrix();
                let norm = matrix_operator_norm(&space, &gap, 10_000)?;
                outcome.check(seed, norm.value < eps, || {
                    format!("d={d}: perturbation moved farther than eps")
                });
            }

            let y = probes::base_samples(&space, 1, rng.random()).remove(0);
            let projector = MarkovOperator::rank_one(space.clone(), &y)?;
            let u = probes::base_samples(&space, 1, rng.random()).remove(0);
            outcome.check(seed, projector.apply(&u)?.max_abs_diff(&y) <= 1e-12, || {
                format!("d={d}: rank-one image differs from target")
            });
            let twice = projector.compose(&projector)?;
            outcome.check(
                seed,
                (twice.matrix() - projector.matrix()).abs().max() <= 1e-12,
                || format!("d={d}: rank-one not idempotent"),
            );
        }
    }

    // grid steps stay Markov under composition as well
    let params = gallery::GridChainParams {
        grid_size: 5,
        start_index: 1,
        constant_c: 0.25,
    };
    let spec = gallery::build_grid_chain(&params)?;
    let composite = spec.composite(1, 4)?;
    outcome.check(seed, composite.is_markov(1e-9)?.pass, || {
        "grid composite lost Markovianity".to_string()
    });
    Ok(outcome)
}

/// Coefficient-layer invariants: the power inequality, permutation
/// invariance, lower bounds never exceeding exact values, norm continuity,
/// and the full property battery including the two-route agreement.
pub fn dobrushin_suite(seed: u64, trials: usize) -> Result<SuiteOutcome> {
    let mut outcome = SuiteOutcome::new("dobrushin");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd0);
    for d in [2usize, 3, 4, 6] {
        let space = SpaceDescriptor::simplex(d)?;
        for _ in 0..trials.div_ceil(4).max(1) {
            let t = random_operator(&space, &mut rng);
            let s = random_operator(&space, &mut rng);

            let dt = dobrushin::delta(&t, 10_000)?;
            outcome.check(seed, dt.mode == DeltaMode::Exact, || {
                format!("d={d}: simplex coefficient not exact")
            });
            let mut power = t.clone();
            for n in 2..=20usize {
                power = power.compose(&t)?;
                let dp = dobrushin::delta(&power, 10_000)?;
                outcome.check(seed, dp.value <= dt.value.powi(n as i32) + 1e-9, || {
                    format!("d={d}: power inequality violated at n={n}")
                });
            }

            // conjugation by a cyclic relabeling
            let perm =
                DMatrix::<f64>::from_fn(d, d, |i, j| if i == (j + 1) % d { 1.0 } else { 0.0 });
            let conjugated = MarkovOperator::new(
                space.clone(),
                &perm * t.matrix() * perm.transpose(),
                "conjugated",
            )?;
            let dc = dobrushin::delta(&conjugated, 10_000)?;
            outcome.check(seed, (dc.value - dt.value).abs() <= 1e-12, || {
                format!("d={d}: relabeling changed the coefficient")
            });

            // with budget 2 the pair sweep is out of reach for d >= 3
            let sampled = dobrushin::delta(&t, 2)?;
            outcome.check(
                seed,
                sampled.value <= dt.value + 1e-9
                    && (d < 3 || sampled.mode == DeltaMode::LowerBound),
                || format!("d={d}: sampled mode exceeded the exact value"),
            );

            let ds = dobrushin::delta(&s, 10_000)?;
            let gap = matrix_operator_norm(&space, &(t.matrix() - s.matrix()), 10_000)?;
            outcome.check(
                seed,
                (dt.value - ds.value).abs() <= gap.value + 1e-9,
                || format!("d={d}: coefficient not 1-Lipschitz in the operator norm"),
            );

            let y = probes::base_samples(&space, 1, rng.random()).remove(0);
            let z = probes::base_samples(&space, 1, rng.random()).remove(0);
            let h = MarkovOperator::rank_one(space.clone(), &y)?.matrix()
                - MarkovOperator::rank_one(space.clone(), &z)?.matrix();
            let battery = dobrushin::property_battery(&t, &s, &h, 10_000)?;
            outcome.check(seed, battery.exact && battery.pass, || {
                let failing: Vec<&str> = battery
                    .checks
                    .iter()
                    .filter(|c| !c.pass)
                    .map(|c| c.name.as_str())
                    .collect();
                format!("d={d}: battery failed: {failing:?}")
            });

            // route agreement must be sensitive enough to catch a factor-two
            // mutation of the exact value
            let estimate = dobrushin::delta_via_nullspace(&t, 24, seed)?;
            outcome.check(
                seed,
                delta_routes_agree(dt.value, estimate, dobrushin::ROUTE_AGREEMENT_TOL),
                || format!("d={d}: delta routes disagree"),
            );
            if dt.value > 1e-3 {
                outcome.check(
                    seed,
                    !delta_routes_agree(2.0 * dt.value, estimate, dobrushin::ROUTE_AGREEMENT_TOL),
                    || format!("d={d}: doubled coefficient not detected"),
                );
            }
        }
    }
    Ok(outcome)
}

/// Runs every suite. `trials` scales the per-check sample counts.
pub fn run_all(seed: u64, trials: usize) -> Result<Vec<SuiteOutcome>> {
    if trials < 1 {
        return Err(Error::input("trials must be >= 1"));
    }
    Ok(vec![
        space_suite(seed, trials)?,
        operator_suite(seed, trials)?,
        dobrushin_suite(seed, trials)?,
    ])
}
