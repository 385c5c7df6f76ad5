//! Decomposition oracles: the linear-programming route against independently
//! derived closed forms, plus randomized norm axioms.

use proptest::prelude::*;

use obsb::probes;
use obsb::space::{midpoint_quadrature, SpaceDescriptor};

/// Independent value of the grid-function base norm, derived from the cone
/// inequalities: with `s = f(pos)` the per-node feasibility intervals
/// `[-s, 3s]` and `[x_i - (s - x_L), x_i + 3(s - x_L)]` intersect iff
/// `s >= (3 x_L - x_i)/4` and `s >= (x_i + x_L)/4`, so the minimal `s` is the
/// max of those bounds together with `s >= max(0, x_L)`, and the norm is
/// `2 s - x_L`.
fn grid_norm_oracle(coords: &[f64]) -> f64 {
    let last = coords.len() - 1;
    let x_l = coords[last];
    let mut s = x_l.max(0.0);
    for &x in &coords[..last] {
        s = s.max((3.0 * x_l - x) / 4.0).max((x + x_l) / 4.0);
    }
    2.0 * s - x_l
}

#[test]
fn grid_lp_matches_interval_oracle() {
    for nodes in [2usize, 3, 5, 9, 17] {
        let space = SpaceDescriptor::uniform_grid(nodes).unwrap();
        for (i, x) in probes::space_samples(&space, 200, 42).iter().enumerate() {
            let lp = space.jordan_decompose_lp(x).unwrap();
            let oracle = grid_norm_oracle(x.coords());
            assert!(
                (lp.norm - oracle).abs() <= 1e-7 * oracle.max(1.0),
                "nodes={nodes} sample={i}: lp={} oracle={}",
                lp.norm,
                oracle
            );
        }
    }
    // a point mass away from the functional node
    let space = SpaceDescriptor::uniform_grid(3).unwrap();
    let x = space.vector(vec![1.0, 0.0, 0.0]).unwrap();
    let lp = space.jordan_decompose_lp(&x).unwrap();
    assert!((lp.norm - 0.5).abs() <= 1e-9);
    assert!((space.base_norm(&x).unwrap() - 0.5).abs() <= 1e-9);
}

#[test]
fn grid_lp_is_stable_across_scales() {
    let space = SpaceDescriptor::uniform_grid(7).unwrap();
    for scale in [1e-8, 1e-3, 1.0, 1e3, 1e8] {
        for x in probes::space_samples(&space, 40, 19) {
            let scaled = x.scale(scale);
            let lp = space.jordan_decompose_lp(&scaled).unwrap();
            let oracle = grid_norm_oracle(scaled.coords());
            assert!(
                (lp.norm - oracle).abs() <= 1e-7 * oracle.max(1e-12),
                "scale={scale}: lp={} oracle={}",
                lp.norm,
                oracle
            );
        }
    }
}

#[test]
fn sequence_l1_lp_matches_two_term_form() {
    let space = SpaceDescriptor::sequence_lp(1.0, 6).unwrap();
    for x in probes::space_samples(&space, 300, 7) {
        let lp = space.jordan_decompose_lp(&x).unwrap();
        let tail: f64 = x.coords()[1..].iter().map(|v| v.abs()).sum();
        let expected = x.coords()[0].abs().max(tail);
        assert!((lp.norm - expected).abs() <= 1e-7 * expected.max(1.0));
    }
}

#[test]
fn simplex_lp_matches_coordinatewise() {
    for d in [2usize, 4, 8] {
        let space = SpaceDescriptor::simplex(d).unwrap();
        for x in probes::space_samples(&space, 200, 3) {
            let lp = space.jordan_decompose_lp(&x).unwrap();
            let l1: f64 = x.coords().iter().map(|v| v.abs()).sum();
            assert!((lp.norm - l1).abs() <= 1e-7 * l1.max(1.0));
        }
    }
}

fn all_spaces() -> Vec<SpaceDescriptor> {
    let (_, w) = midpoint_quadrature(8);
    vec![
        SpaceDescriptor::simplex(4).unwrap(),
        SpaceDescriptor::uniform_grid(5).unwrap(),
        SpaceDescriptor::lorentz(2.0, 5).unwrap(),
        SpaceDescriptor::lorentz(3.0, 4).unwrap(),
        SpaceDescriptor::lorentz_quadrature(2.0, w.clone()).unwrap(),
        SpaceDescriptor::lorentz_quadrature(1.5, w).unwrap(),
        SpaceDescriptor::sequence_lp(1.0, 5).unwrap(),
        SpaceDescriptor::sequence_lp(2.0, 5).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triangle_inequality_and_homogeneity(seed in 0u64..10_000, lambda in -4.0f64..4.0) {
        for space in all_spaces() {
            let mut samples = probes::space_samples(&space, 2, seed);
            let y = samples.pop().unwrap();
            let x = samples.pop().unwrap();
            let nx = space.base_norm(&x).unwrap();
            let ny = space.base_norm(&y).unwrap();
            let nxy = space.base_norm(&x.add(&y).unwrap()).unwrap();
            prop_assert!(nxy <= nx + ny + 1e-9 * (nx + ny).max(1.0));
            let ns = space.base_norm(&x.scale(lambda)).unwrap();
            prop_assert!((ns - lambda.abs() * nx).abs() <= 1e-9 * nx.max(1.0));
        }
    }

    #[test]
    fn split_reconstructs_equal_functional_differences(seed in 0u64..10_000) {
        for space in all_spaces() {
            let samples = probes::base_samples(&space, 2, seed);
            if samples[0].max_abs_diff(&samples[1]) <= 1e-12 {
                continue;
            }
            let (u, v) = space.base_split(&samples[0], &samples[1]).unwrap();
            prop_assert!(space.in_base(&u, 1e-7).unwrap());
            prop_assert!(space.in_base(&v, 1e-7).unwrap());
            let diff = samples[0].sub(&samples[1]).unwrap();
            let half = space.base_norm(&diff).unwrap() / 2.0;
            let rebuilt = u.sub(&v).unwrap().scale(half);
            prop_assert!(rebuilt.max_abs_diff(&diff) <= 1e-9);
        }
    }

    #[test]
    fn cone_members_norm_equals_functional(seed in 0u64..10_000) {
        for space in all_spaces() {
            for c in probes::cone_samples(&space, 4, seed) {
                let norm = space.base_norm(&c).unwrap();
                let f = space.functional(&c).unwrap();
                prop_assert!((norm - f).abs() <= 1e-9 * f.max(1.0));
            }
        }
    }
}
