//! Deterministic probe generation: pseudo-random base points, cone samples,
//! and mixed-sign samples for property checks.
//!
//! Sup-based ergodicity notions need adversarial coverage, so the default
//! probe set mixes pseudo-random base points with extreme points of the base.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::space::{standard_normal, SpaceDescriptor, SpaceKind, Vector};

/// Number of pseudo-random base points in the default probe set.
pub const DEFAULT_RANDOM_PROBES: usize = 8;

/// Cap on extreme points mixed into the default probe set.
pub const PROBE_EXTREME_CAP: usize = 16;

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Pseudo-random points of the base `K`.
pub fn base_samples(space: &SpaceDescriptor, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = rng_for(seed, 0xba5e);
    (0..count)
        .map(|_| random_base_point(space, &mut rng))
        .collect()
}

pub(crate) fn random_base_point<R: Rng>(space: &SpaceDescriptor, rng: &mut R) -> Vector {
    let d = space.dimension();
    let coords = match space.kind() {
        SpaceKind::Simplex => {
            let mut c: Vec<f64> = (0..d)
                .map(|_| -(rng.random::<f64>().max(1e-300)).ln())
                .collect();
            let total: f64 = c.iter().sum();
            for v in &mut c {
                *v /= total;
            }
            c
        }
        SpaceKind::GridFunction { .. } => {
            let mut c: Vec<f64> = (0..d - 1).map(|_| rng.random_range(-1.0..3.0)).collect();
            c.push(1.0);
            c
        }
        SpaceKind::LorentzLp { .. } | SpaceKind::SequenceLpCone { .. } => {
            let tail_len = d - 1;
            let mut tail: Vec<f64> = (0..tail_len).map(|_| standard_normal(rng)).collect();
            let norm = space.tail_norm(&tail);
            // radius spread over the unit ball of the tail norm
            let radius: f64 = rng.random::<f64>().powf(1.0 / tail_len as f64);
            if norm > 1e-12 {
                for v in &mut tail {
                    *v *= radius / norm;
                }
            } else {
                tail.fill(0.0);
            }
            let mut c = Vec::with_capacity(d);
            c.push(1.0);
            c.extend(tail);
            c
        }
    };
    space
        .vector(coords)
        .expect("sampled base point is well-formed")
}

/// Pseudo-random cone members (scaled base points, including occasional
/// boundary scalings toward zero).
pub fn cone_samples(space: &SpaceDescriptor, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = rng_for(seed, 0xc0e5);
    (0..count)
        .map(|_| {
            let base = random_base_point(space, &mut rng);
            base.scale(rng.random_range(0.0..3.0))
        })
        .collect()
}

/// Pseudo-random vectors of the ambient space (mixed signs).
pub fn space_samples(space: &SpaceDescriptor, count: usize, seed: u64) -> Vec<Vector> {
    let mut rng = rng_for(seed, 0x5a3e);
    let d = space.dimension();
    (0..count)
        .map(|_| {
            let coords = (0..d).map(|_| standard_normal(&mut rng)).collect();
            space
                .vector(coords)
                .expect("sampled coordinates are finite")
        })
        .collect()
}

/// Default probe set: pseudo-random base points plus extreme points of the
/// base, capped.
pub fn default_probes(space: &SpaceDescriptor, seed: u64) -> Vec<Vector> {
    let mut probes = base_samples(space, DEFAULT_RANDOM_PROBES, seed);
    if let Ok(ext) = space.base_extreme_points(PROBE_EXTREME_CAP) {
        probes.extend(ext.points);
    }
    probes
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_live_where_promised() {
        for space in [
            SpaceDescriptor::simplex(4).unwrap(),
            SpaceDescriptor::uniform_grid(5).unwrap(),
            SpaceDescriptor::lorentz(2.0, 5).unwrap(),
            SpaceDescriptor::sequence_lp(1.0, 4).unwrap(),
        ] {
            for x in base_samples(&space, 32, 7) {
                assert!(space.in_base(&x, 1e-9).unwrap());
            }
            for x in cone_samples(&space, 32, 7) {
                assert!(space.cone_contains(&x, 1e-9).unwrap());
            }
        }
    }

    #[test]
    fn probes_are_deterministic() {
        let space = SpaceDescriptor::simplex(3).unwrap();
        let a = default_probes(&space, 42);
        let b = default_probes(&space, 42);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.coords(), y.coords());
        }
    }
}
