//! End-to-end checks of the two built-in chain families against their
//! defining inequalities.

use obsb::ergodicity::{
    doeblin_check, l_weak_ergodicity, DoeblinCondition, DoeblinRequest, Thresholds, Verdict,
};
use obsb::gallery::{
    build_grid_chain, build_kernel_chain, check_grid_doeblin, kernel_minorant, GridChainParams,
    KernelChainParams,
};
use obsb::probes;

fn grid_params(grid_size: usize) -> GridChainParams {
    GridChainParams {
        grid_size,
        start_index: 1,
        constant_c: 0.25,
    }
}

#[test]
fn grid_inequalities_agree_with_certificate_slack() {
    // the direct grid inequality with constant c equals the minorization
    // with z the constant-one base element and lambda = c: both say
    // composite(k, k+N+1) x dominates c
    let params = grid_params(9);
    let spec = build_grid_chain(&params).unwrap();
    let space = spec.space().clone();
    let ones = space.vector(vec![1.0; 9]).unwrap();
    let th = Thresholds::default();
    let k = 1;
    let points = probes::base_samples(&space, 200, 17);
    let mut compared = 0;
    for (idx, pair) in points.chunks(2).enumerate() {
        let n_steps = idx % 7;
        let direct = check_grid_doeblin(&params, k, n_steps, &pair[0], &pair[1]).unwrap();
        // boundary margin of the direct inequality, to skip knife-edge cases
        let grid = space.grid().unwrap();
        let m = obsb::gallery::grid_composite_exponent(k, n_steps);
        let bound = 2.0 * (1.0 - params.constant_c);
        let margin = pair
            .iter()
            .map(|v| {
                grid.iter()
                    .zip(v.coords())
                    .map(|(&t, &x)| (t.powi(m as i32) * x - 1.0).abs())
                    .fold(0.0_f64, f64::max)
            })
            .fold(0.0_f64, f64::max)
            - bound;
        if margin.abs() <= 1e-7 {
            continue;
        }
        let cert = doeblin_check(
            &spec,
            &DoeblinRequest {
                condition: DoeblinCondition::D1,
                k,
                z: ones.clone(),
                lambda: params.constant_c,
                n_k: Some(k + n_steps + 1),
                horizon: None,
            },
            pair,
            &th,
        )
        .unwrap();
        let zero_slack = cert.residuals.iter().all(|(_, r)| *r <= 1e-9);
        assert_eq!(direct, zero_slack, "pair {idx}, n_steps {n_steps}");
        compared += 1;
    }
    assert!(compared >= 80, "only {compared} informative pairs");
}

#[test]
fn grid_chain_is_l_weak_on_fixed_grids() {
    let th = Thresholds::default();
    for nodes in [9usize, 17] {
        let spec = build_grid_chain(&grid_params(nodes)).unwrap();
        let points = probes::base_samples(spec.space(), 8, 5);
        let pairs: Vec<_> = points
            .chunks(2)
            .map(|c| (c[0].clone(), c[1].clone()))
            .collect();
        let report = l_weak_ergodicity(&spec, &[1, 2, 3], &pairs, 60, &th).unwrap();
        assert_eq!(report.verdict, Verdict::Pass, "{nodes} nodes");
    }
}

#[test]
fn kernel_steps_certify_markov_by_sampling() {
    let spec = build_kernel_chain(&KernelChainParams::boundary(2.0, 32)).unwrap();
    for k in 0..=6 {
        let cert = spec.step(k).is_markov(1e-9).unwrap();
        assert!(!cert.exact, "Lorentz bases are sampled");
        assert!(cert.pass, "step {k}: worst {}", cert.worst_violation);
    }
}

#[test]
fn kernel_one_step_minorization_has_zero_slack() {
    let params = KernelChainParams::boundary(2.0, 64);
    let spec = build_kernel_chain(&params).unwrap();
    let space = spec.space().clone();
    let th = Thresholds::default();
    let probes = probes::base_samples(&space, 50, 23);
    for k in 0..=5 {
        let z = kernel_minorant(&params, k).unwrap();
        assert!(space.in_base(&z, 1e-9).unwrap());
        let cert = doeblin_check(
            &spec,
            &DoeblinRequest {
                condition: DoeblinCondition::D1,
                k,
                z,
                lambda: 0.5,
                n_k: Some(k + 1),
                horizon: None,
            },
            &probes,
            &th,
        )
        .unwrap();
        assert!(cert.pass, "k={k}");
        let worst = cert
            .residuals
            .iter()
            .map(|(_, r)| *r)
            .fold(0.0_f64, f64::max);
        assert!(worst <= 1e-12, "k={k}: worst residual {worst}");
        // slack construction sanity: T x + phi - lambda z stays in the cone
        let composite = spec.composite(k, k + 1).unwrap();
        for probe in probes.iter().take(5) {
            let image = composite.apply(probe).unwrap();
            let shortfall = cert.z.scale(cert.lambda).sub(&image).unwrap();
            let decomposition = space.jordan_decompose(&shortfall).unwrap();
            let adjusted = image
                .add(&decomposition.pos)
                .unwrap()
                .sub(&cert.z.scale(cert.lambda))
                .unwrap();
            assert!(space.cone_violation(&adjusted).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn kernel_chain_is_l_weak() {
    let spec = build_kernel_chain(&KernelChainParams::boundary(2.0, 64)).unwrap();
    let th = Thresholds::default();
    let points = probes::base_samples(spec.space(), 8, 31);
    let pairs: Vec<_> = points
        .chunks(2)
        .map(|c| (c[0].clone(), c[1].clone()))
        .collect();
    let report = l_weak_ergodicity(&spec, &[0, 1], &pairs, 100, &th).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
}
