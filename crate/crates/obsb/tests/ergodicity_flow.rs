//! Cross-cutting ergodicity checks: the contracting-power criterion against
//! the uniform verdict, weak implying pairwise convergence, and the
//! search/verdict equivalence across the gallery.

use obsb::dobrushin::delta;
use obsb::ergodicity::{
    check_implication_chain, doeblin_search, l_weak_ergodicity, uniform_ergodicity,
    weak_ergodicity, Thresholds, Verdict,
};
use obsb::gallery::matrix_gallery;
use obsb::operators::NdmcSpec;
use obsb::probes;

const HOMOGENEOUS: [&str; 4] = [
    "random_stochastic",
    "permutation_cycle",
    "lazy_permutation",
    "rank_one_random",
];

#[test]
fn contracting_power_iff_uniform_pass() {
    let th = Thresholds::default();
    for name in HOMOGENEOUS {
        for d in [3usize, 4] {
            let op = matrix_gallery(name, d, 7)
                .unwrap()
                .operator()
                .unwrap()
                .clone();
            let mut power = op.clone();
            let mut contracting = false;
            for _ in 1..=30 {
                if delta(&power, 10_000).unwrap().value < 1.0 - 1e-6 {
                    contracting = true;
                    break;
                }
                power = power.compose(&op).unwrap();
            }
            let report = uniform_ergodicity(&op, 30, 10_000, &th).unwrap();
            assert_eq!(contracting, report.verdict == Verdict::Pass, "{name} d={d}");
        }
    }
}

#[test]
fn weak_pass_implies_pairwise_pass() {
    let th = Thresholds::default();
    for name in ["random_stochastic", "lazy_permutation", "alternating_pair"] {
        let spec = matrix_gallery(name, 4, 9).unwrap().into_chain();
        let weak = weak_ergodicity(&spec, &[0, 1], 200, 10_000, &th).unwrap();
        assert_eq!(weak.verdict, Verdict::Pass, "{name}");
        let points = probes::default_probes(spec.space(), 3);
        let pairs: Vec<_> = points
            .windows(2)
            .filter(|w| w[0].max_abs_diff(&w[1]) > 1e-9)
            .map(|w| (w[0].clone(), w[1].clone()))
            .collect();
        let pairwise = l_weak_ergodicity(&spec, &[0, 1], &pairs, 200, &th).unwrap();
        assert_eq!(pairwise.verdict, Verdict::Pass, "{name}");
    }
}

#[test]
fn search_equivalence_on_gallery() {
    let th = Thresholds::default();
    for name in HOMOGENEOUS {
        let spec = matrix_gallery(name, 3, 11).unwrap().into_chain();
        let points = probes::default_probes(spec.space(), 1);
        let weak = weak_ergodicity(&spec, &[0], 200, 10_000, &th).unwrap();
        let search = doeblin_search(&spec, 0, 200, &points, &th).unwrap();
        assert_eq!(
            weak.verdict == Verdict::Pass,
            search.certificate.is_some(),
            "{name}"
        );
    }
}

#[test]
fn contraction_sandwich_on_two_state() {
    let th = Thresholds::default();
    let space = obsb::SpaceDescriptor::simplex(2).unwrap();
    let op = obsb::MarkovOperator::from_rows(
        space.clone(),
        &[vec![0.9, 0.2], vec![0.1, 0.8]],
        "two_state",
    )
    .unwrap();
    let spec = NdmcSpec::homogeneous(op);
    let points = probes::default_probes(&space, 0);
    let report = check_implication_chain(&spec, &[0, 1], 150, &points, &th).unwrap();
    assert!(report.pass, "{:?}", report.violations);
    for stage in &report.stages {
        let c = stage.contraction.as_ref().expect("search succeeds");
        assert!(c.qualified_pairs > 0);
        assert!(c.gamma_max <= c.mu_bound + 1e-6);
        // the per-window contraction of this chain is exactly delta(T)^offset
        assert!(c.gamma_max <= 0.7_f64.powi((c.n_k - stage.k) as i32) + 1e-9);
    }
}
