//! Concrete ordered Banach spaces with a base.
//!
//! A space here is a finite coordinate representation of a cone `X+`, a
//! strictly positive linear functional `f`, and the base
//! `K = { x in X+ : f(x) = 1 }`. The base norm is computed as the value of a
//! minimal decomposition `x = pos - neg` with `pos, neg in X+` minimizing
//! `f(pos) + f(neg)`; for polyhedral cones that minimization is a linear
//! program, for the Lorentz-type cones it is a small convex program with a
//! closed-form optimality certificate.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Default absolute tolerance for cone membership.
pub const CONE_TOL: f64 = 1e-9;

/// Acceptance slack for solver-produced decompositions.
pub const SOLVER_SLACK: f64 = 1e-7;

/// Vertex-enumeration cap for the grid-function cone.
pub const GRID_VERTEX_CAP: usize = 1 << 20;

/// Fixed seed for the deterministic boundary sampling of non-polyhedral bases.
const EXTREME_SAMPLE_SEED: u64 = 0x0b5b_90de;

/// Cone family of a space, together with its per-family parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SpaceKind {
    /// Nonnegative orthant, `f(x) = sum_i x_i`; the base is the probability
    /// simplex.
    Simplex,
    /// Vectors `(alpha, x)` with `||x||_p <= alpha`, `f(alpha, x) = alpha`.
    /// With quadrature weights the p-norm is weighted, i.e. the tail
    /// discretizes `L_p[0, 1]`.
    LorentzLp {
        p: f64,
        quadrature_weights: Option<Vec<f64>>,
    },
    /// Grid discretization of continuous functions on `[0, 1]`: the cone is
    /// `max_i |x_i - x_last| <= 2 x_last` and `f(x) = x_last` (the node at
    /// `t = 1`).
    GridFunction { grid: Vec<f64> },
    /// Sequence cone `x_0 >= (sum_{i>=1} |x_i|^p)^{1/p}`, `f(x) = x_0`.
    SequenceLpCone { p: f64 },
}

/// Descriptor of a concrete space: cone family plus coordinate dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpaceDescriptor {
    kind: SpaceKind,
    dimension: usize,
}

/// A point of a space, in canonical coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vector {
    space: SpaceDescriptor,
    coords: Vec<f64>,
}

/// Minimal positive/negative split of a vector with its norm certificate:
/// `pos - neg` reconstructs the vector and `f(pos) + f(neg)` equals the base
/// norm.
#[derive(Clone, Debug, Serialize)]
pub struct ConeDecomposition {
    pub pos: Vector,
    pub neg: Vector,
    pub norm: f64,
}

/// Extreme points of the base, or a deterministic boundary sample when the
/// base is not polyhedral (or too large to enumerate).
#[derive(Clone, Debug, Serialize)]
pub struct ExtremePoints {
    pub points: Vec<Vector>,
    pub complete: bool,
}

/// Composite midpoint rule on `[0, 1]`: nodes `(j + 1/2)/count` with uniform
/// weights `1/count`.
pub fn midpoint_quadrature(count: usize) -> (Vec<f64>, Vec<f64>) {
    let m = count.max(1);
    let nodes = (0..m).map(|j| (j as f64 + 0.5) / m as f64).collect();
    let weights = vec![1.0 / m as f64; m];
    (nodes, weights)
}

fn check_p(p: f64) -> Result<()> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::input(format!(
            "p must be a finite real >= 1, got {p}"
        )));
    }
    Ok(())
}

impl SpaceDescriptor {
    /// Standard simplex space of the given coordinate dimension.
    pub fn simplex(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::input("dimension must be >= 1"));
        }
        Ok(SpaceDescriptor {
            kind: SpaceKind::Simplex,
            dimension,
        })
    }

    /// Lorentz cone over an unweighted p-norm; `dimension` counts the leading
    /// scalar plus the tail block.
    pub fn lorentz(p: f64, dimension: usize) -> Result<Self> {
        check_p(p)?;
        if dimension < 2 {
            return Err(Error::input("Lorentz spaces need dimension >= 2"));
        }
        Ok(SpaceDescriptor {
            kind: SpaceKind::LorentzLp {
                p,
                quadrature_weights: None,
            },
            dimension,
        })
    }

    /// Lorentz cone whose tail discretizes `L_p[0, 1]` with the given
    /// quadrature weights (one per tail coordinate, summing to 1).
    pub fn lorentz_quadrature(p: f64, weights: Vec<f64>) -> Result<Self> {
        check_p(p)?;
        if weights.is_empty() {
            return Err(Error::input("quadrature weights must be nonempty"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::input("quadrature weights must be nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::input(format!(
                "quadrature weights must sum to the interval length 1 (got {total:.17})"
            )));
        }
        let dimension = weights.len() + 1;
        Ok(SpaceDescriptor {
            kind: SpaceKind::LorentzLp {
                p,
                quadrature_weights: Some(weights),
            },
            dimension,
        })
    }

    /// Grid-function space over explicit nodes; the last node must be exactly 1.
    pub fn grid_function(grid: Vec<f64>) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::input("grid must be nonempty"));
        }
        if grid.iter().any(|t| !t.is_finite() || *t < 0.0 || *t > 1.0) {
            return Err(Error::input("grid nodes must lie in [0, 1]"));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::input("grid nodes must be strictly increasing"));
        }
        if *grid.last().unwrap() != 1.0 {
            return Err(Error::input("last grid node must be exactly 1"));
        }
        let dimension = grid.len();
        Ok(SpaceDescriptor {
            kind: SpaceKind::GridFunction { grid },
            dimension,
        })
    }

    /// Uniform grid with `nodes` points, `t_i = i/(nodes-1)`.
    pub fn uniform_grid(nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::input("uniform grids need at least 2 nodes"));
        }
        let grid = (0..nodes).map(|i| i as f64 / (nodes - 1) as f64).collect();
        Self::grid_function(grid)
    }

    /// Sequence-space cone `x_0 >= ||x_tail||_p`.
    pub fn sequence_lp(p: f64, dimension: usize) -> Result<Self> {
        check_p(p)?;
        if dimension < 2 {
            return Err(Error::input("sequence cone spaces need dimension >= 2"));
        }
        Ok(SpaceDescriptor {
            kind: SpaceKind::SequenceLpCone { p },
            dimension,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SpaceKind::Simplex => "simplex",
            SpaceKind::LorentzLp { .. } => "lorentz_lp",
            SpaceKind::GridFunction { .. } => "grid_function",
            SpaceKind::SequenceLpCone { .. } => "sequence_lp",
        }
    }

    /// Grid nodes, when this is a grid-function space.
    pub fn grid(&self) -> Option<&[f64]> {
        match &self.kind {
            SpaceKind::GridFunction { grid } => Some(grid),
            _ => None,
        }
    }

    /// Quadrature weights of the tail block, when present.
    pub fn quadrature_weights(&self) -> Option<&[f64]> {
        match &self.kind {
            SpaceKind::LorentzLp {
                quadrature_weights, ..
            } => quadrature_weights.as_deref(),
            _ => None,
        }
    }

    /// Whether the cone has an exact finite description by linear
    /// inequalities (so decompositions reduce to a linear program).
    pub fn is_polyhedral(&self) -> bool {
        match &self.kind {
            SpaceKind::Simplex | SpaceKind::GridFunction { .. } => true,
            SpaceKind::SequenceLpCone { p } => *p == 1.0,
            SpaceKind::LorentzLp { p, .. } => *p == 1.0,
        }
    }

    /// Wrap raw coordinates into a vector of this space.
    pub fn vector(&self, coords: Vec<f64>) -> Result<Vector> {
        if coords.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: coords.len(),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::input("vector entries must be finite"));
        }
        Ok(Vector {
            space: self.clone(),
            coords,
        })
    }

    pub fn zero_vector(&self) -> Vector {
        Vector {
            space: self.clone(),
            coords: vec![0.0; self.dimension],
        }
    }

    pub(crate) fn check_vector(&self, x: &Vector) -> Result<()> {
        if x.coords.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.coords.len(),
            });
        }
        if x.space != *self {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Coefficients of the strictly positive functional, so that
    /// `f(x) = sum_i c_i x_i`.
    pub fn functional_coefficients(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dimension];
        match self.kind {
            SpaceKind::Simplex => c.fill(1.0),
            SpaceKind::GridFunction { .. } => c[self.dimension - 1] = 1.0,
            SpaceKind::LorentzLp { .. } | SpaceKind::SequenceLpCone { .. } => c[0] = 1.0,
        }
        c
    }

    pub(crate) fn functional_raw(&self, coords: &[f64]) -> f64 {
        match self.kind {
            SpaceKind::Simplex => coords.iter().sum(),
            SpaceKind::GridFunction { .. } => coords[coords.len() - 1],
            SpaceKind::LorentzLp { .. } | SpaceKind::SequenceLpCone { .. } => coords[0],
        }
    }

    /// The strictly positive functional `f`.
    pub fn functional(&self, x: &Vector) -> Result<f64> {
        self.check_vector(x)?;
        Ok(self.functional_raw(&x.coords))
    }

    /// Weighted p-norm of the tail block of a Lorentz-type vector.
    pub(crate) fn tail_norm(&self, tail: &[f64]) -> f64 {
        let (p, weights) = match &self.kind {
            SpaceKind::LorentzLp {
                p,
                quadrature_weights,
            } => (*p, quadrature_weights.as_deref()),
            SpaceKind::SequenceLpCone { p } => (*p, None),
            _ => unreachable!("tail norms only exist on Lorentz-type cones"),
        };
        weighted_p_norm(tail, weights, p)
    }

    /// How far outside the cone a coordinate vector is (0 for members).
    pub(crate) fn cone_violation_raw(&self, coords: &[f64]) -> f64 {
        match &self.kind {
            SpaceKind::Simplex => coords.iter().fold(0.0_f64, |acc, &v| acc.max(-v)),
            SpaceKind::GridFunction { .. } => {
                let last = coords[coords.len() - 1];
                let mut worst = -last;
                for &v in coords {
                    worst = worst.max((v - last).abs() - 2.0 * last);
                }
                worst.max(0.0)
            }
            SpaceKind::LorentzLp { .. } | SpaceKind::SequenceLpCone { .. } => {
                (self.tail_norm(&coords[1..]) - coords[0]).max(0.0)
            }
        }
        .max(0.0)
    }

    /// Violation magnitude of the cone inequalities for `x`.
    pub fn cone_violation(&self, x: &Vector) -> Result<f64> {
        self.check_vector(x)?;
        Ok(self.cone_violation_raw(&x.coords))
    }

    /// Membership in `X+`, relaxed by `tol`.
    pub fn cone_contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        if !(tol >= 0.0) {
            return Err(Error::input("cone tolerance must be >= 0"));
        }
        Ok(self.cone_violation(x)? <= tol)
    }

    /// Membership in the base `K = { x in X+ : f(x) = 1 }`, relaxed by `tol`.
    pub fn in_base(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.cone_contains(x, tol)? && (self.functional(x)? - 1.0).abs() <= tol)
    }

    /// Minimal decomposition `x = pos - neg`, `pos, neg in X+`, minimizing
    /// `f(pos) + f(neg)`; the minimum is the base norm of `x`.
    pub fn jordan_decompose(&self, x: &Vector) -> Result<ConeDecomposition> {
        self.check_vector(x)?;
        let (pos, neg, norm) = self.decompose_raw(&x.coords)?;
        self.build_decomposition(&x.coords, pos, neg, norm)
    }

    pub(crate) fn decompose_raw(&self, coords: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        match &self.kind {
            SpaceKind::Simplex => Ok(simplex_split(coords)),
            SpaceKind::GridFunction { .. } => crate::lp::decompose(self, coords),
            SpaceKind::LorentzLp { p, .. } | SpaceKind::SequenceLpCone { p } => {
                if *p == 1.0 && matches!(self.kind, SpaceKind::SequenceLpCone { .. }) {
                    crate::lp::decompose(self, coords)
                } else {
                    Ok(self.lorentz_split(coords))
                }
            }
        }
    }

    /// Reference decomposition through the linear-programming route, for
    /// cones with a polyhedral description. Kept separate from
    /// [`Self::jordan_decompose`] so the two can cross-check each other.
    pub fn jordan_decompose_lp(&self, x: &Vector) -> Result<ConeDecomposition> {
        self.check_vector(x)?;
        if !self.is_polyhedral() {
            return Err(Error::input(format!(
                "{} has no polyhedral description; use jordan_decompose",
                self.kind_name()
            )));
        }
        let (pos, neg, norm) = crate::lp::decompose(self, &x.coords)?;
        self.build_decomposition(&x.coords, pos, neg, norm)
    }

    fn build_decomposition(
        &self,
        original: &[f64],
        pos: Vec<f64>,
        neg: Vec<f64>,
        norm: f64,
    ) -> Result<ConeDecomposition> {
        // all residuals are taken relative to the input scale
        let scale = original.iter().fold(1.0_f64, |a, &v| a.max(v.abs()));
        let mut residual = self
            .cone_violation_raw(&pos)
            .max(self.cone_violation_raw(&neg))
            / scale;
        for i in 0..original.len() {
            residual = residual.max((pos[i] - neg[i] - original[i]).abs() / scale);
        }
        let value = self.functional_raw(&pos) + self.functional_raw(&neg);
        residual = residual.max((value - norm).abs() / scale.max(norm.abs()));
        if residual > SOLVER_SLACK {
            return Err(Error::numeric("jordan_decompose", residual));
        }
        Ok(ConeDecomposition {
            pos: Vector {
                space: self.clone(),
                coords: pos,
            },
            neg: Vector {
                space: self.clone(),
                coords: neg,
            },
            norm,
        })
    }

    // Minimal decomposition on the Lorentz-type cones. Any decomposition
    // x = y - z with y, z in the cone has f(y) + f(z) >= max(|alpha|, ||v||):
    // f(y) + f(z) >= |f(y) - f(z)| = |alpha| and
    // f(y) + f(z) >= ||y_tail|| + ||z_tail|| >= ||v||. Each branch below
    // attains that lower bound, so the construction is exact.
    fn lorentz_split(&self, coords: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let d = coords.len();
        let alpha = coords[0];
        let tail = &coords[1..];
        let n = self.tail_norm(tail);
        if n <= alpha {
            return (coords.to_vec(), vec![0.0; d], alpha);
        }
        if n <= -alpha {
            let neg: Vec<f64> = coords.iter().map(|v| -v).collect();
            return (vec![0.0; d], neg, -alpha);
        }
        let t = (n + alpha) / (2.0 * n);
        let mut pos = Vec::with_capacity(d);
        let mut neg = Vec::with_capacity(d);
        pos.push((n + alpha) / 2.0);
        neg.push((n - alpha) / 2.0);
        for &v in tail {
            pos.push(t * v);
            neg.push((t - 1.0) * v);
        }
        (pos, neg, n)
    }

    /// Base norm of `x`: the value of the minimal decomposition.
    pub fn base_norm(&self, x: &Vector) -> Result<f64> {
        self.check_vector(x)?;
        self.base_norm_raw(&x.coords)
    }

    pub(crate) fn base_norm_raw(&self, coords: &[f64]) -> Result<f64> {
        Ok(self.decompose_raw(coords)?.2)
    }

    /// Split a difference of equal-functional vectors into base elements:
    /// returns `(u, v)` in `K` with `x - y = (||x - y|| / 2)(u - v)`.
    pub fn base_split(&self, x: &Vector, y: &Vector) -> Result<(Vector, Vector)> {
        self.check_vector(x)?;
        self.check_vector(y)?;
        let fx = self.functional_raw(&x.coords);
        let fy = self.functional_raw(&y.coords);
        if (fx - fy).abs() > 1e-9 {
            return Err(Error::precondition(format!(
                "base_split needs f(x) = f(y); got {fx:.12} vs {fy:.12}"
            )));
        }
        let diff: Vec<f64> = x.coords.iter().zip(&y.coords).map(|(a, b)| a - b).collect();
        let (pos, neg, norm) = self.decompose_raw(&diff)?;
        if norm <= 1e-12 {
            return Err(Error::degenerate(
                "base_split is undefined for coinciding vectors",
            ));
        }
        let fp = self.functional_raw(&pos);
        let fq = self.functional_raw(&neg);
        if fp <= 0.0 || fq <= 0.0 {
            return Err(Error::numeric("base_split normalization", fp.min(fq)));
        }
        let u = pos.iter().map(|v| v / fp).collect();
        let v = neg.iter().map(|v| v / fq).collect();
        Ok((
            Vector {
                space: self.clone(),
                coords: u,
            },
            Vector {
                space: self.clone(),
                coords: v,
            },
        ))
    }

    /// Extreme points of the base, exact and complete for small polyhedral
    /// bases and a deterministic boundary sample otherwise.
    pub fn base_extreme_points(&self, max_count: usize) -> Result<ExtremePoints> {
        if max_count < 2 {
            return Err(Error::input("max_count must be >= 2"));
        }
        match &self.kind {
            SpaceKind::Simplex => {
                let points = (0..self.dimension)
                    .map(|i| {
                        let mut c = vec![0.0; self.dimension];
                        c[i] = 1.0;
                        Vector {
                            space: self.clone(),
                            coords: c,
                        }
                    })
                    .collect();
                Ok(ExtremePoints {
                    points,
                    complete: true,
                })
            }
            SpaceKind::GridFunction { .. } => {
                // Base = { x_last = 1, x_i in [-1, 3] }: a hypercube over the
                // free nodes, so its vertices carry entries in {-1, 3}.
                let free = self.dimension - 1;
                let total = 1usize.checked_shl(free as u32).unwrap_or(usize::MAX);
                if free <= 20 && total <= max_count && total <= GRID_VERTEX_CAP {
                    let mut points = Vec::with_capacity(total);
                    for mask in 0..total {
                        let mut c = vec![0.0; self.dimension];
                        for (i, item) in c.iter_mut().enumerate().take(free) {
                            *item = if mask >> i & 1 == 1 { 3.0 } else { -1.0 };
                        }
                        c[free] = 1.0;
                        points.push(Vector {
                            space: self.clone(),
                            coords: c,
                        });
                    }
                    Ok(ExtremePoints {
                        points,
                        complete: true,
                    })
                } else {
                    let mut rng = self.extreme_rng();
                    let points = (0..max_count)
                        .map(|_| {
                            let mut c = vec![0.0; self.dimension];
                            for item in c.iter_mut().take(free) {
                                *item = if rng.random::<bool>() { 3.0 } else { -1.0 };
                            }
                            c[free] = 1.0;
                            Vector {
                                space: self.clone(),
                                coords: c,
                            }
                        })
                        .collect();
                    Ok(ExtremePoints {
                        points,
                        complete: false,
                    })
                }
            }
            SpaceKind::LorentzLp { .. } | SpaceKind::SequenceLpCone { .. } => {
                let mut rng = self.extreme_rng();
                let tail_len = self.dimension - 1;
                let mut points = Vec::with_capacity(max_count);
                while points.len() < max_count {
                    let mut tail: Vec<f64> =
                        (0..tail_len).map(|_| standard_normal(&mut rng)).collect();
                    let norm = self.tail_norm(&tail);
                    if norm < 1e-12 {
                        continue;
                    }
                    for v in &mut tail {
                        *v /= norm;
                    }
                    let mut c = Vec::with_capacity(self.dimension);
                    c.push(1.0);
                    c.extend(tail);
                    points.push(Vector {
                        space: self.clone(),
                        coords: c,
                    });
                }
                Ok(ExtremePoints {
                    points,
                    complete: false,
                })
            }
        }
    }

    fn extreme_rng(&self) -> ChaCha8Rng {
        let mix = (self.dimension as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        ChaCha8Rng::seed_from_u64(EXTREME_SAMPLE_SEED ^ mix)
    }
}

pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; the second coordinate is discarded.
    let u1: f64 = rng.random::<f64>().max(1e-300);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn simplex_split(coords: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
    let mut pos = Vec::with_capacity(coords.len());
    let mut neg = Vec::with_capacity(coords.len());
    let mut norm = 0.0;
    for &v in coords {
        pos.push(v.max(0.0));
        neg.push((-v).max(0.0));
        norm += v.abs();
    }
    (pos, neg, norm)
}

pub(crate) fn weighted_p_norm(values: &[f64], weights: Option<&[f64]>, p: f64) -> f64 {
    match weights {
        None if p == 1.0 => values.iter().map(|v| v.abs()).sum(),
        None if p == 2.0 => values.iter().map(|v| v * v).sum::<f64>().sqrt(),
        None => values
            .iter()
            .map(|v| v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
        Some(w) if p == 1.0 => values.iter().zip(w).map(|(v, w)| w * v.abs()).sum(),
        Some(w) if p == 2.0 => values
            .iter()
            .zip(w)
            .map(|(v, w)| w * v * v)
            .sum::<f64>()
            .sqrt(),
        Some(w) => values
            .iter()
            .zip(w)
            .map(|(v, w)| w * v.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    }
}

impl Vector {
    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn sub(&self, other: &Vector) -> Result<Vector> {
        self.space.check_vector(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Vector {
            space: self.space.clone(),
            coords,
        })
    }

    pub fn add(&self, other: &Vector) -> Result<Vector> {
        self.space.check_vector(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Vector {
            space: self.space.clone(),
            coords,
        })
    }

    pub fn scale(&self, factor: f64) -> Vector {
        Vector {
            space: self.space.clone(),
            coords: self.coords.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Vector) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|v| *v == 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn functional_on_base_elements() {
        let s = SpaceDescriptor::simplex(3).unwrap();
        let x = s.vector(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(s.functional(&x).unwrap(), 1.0);

        let g = SpaceDescriptor::uniform_grid(5).unwrap();
        let ones = g.vector(vec![1.0; 5]).unwrap();
        assert_eq!(g.functional(&ones).unwrap(), 1.0);

        let l = SpaceDescriptor::lorentz(2.0, 4).unwrap();
        let x = l.vector(vec![2.0, 0.5, 0.5, 0.1]).unwrap();
        assert_eq!(l.functional(&x).unwrap(), 2.0);
    }

    #[test]
    fn grid_cone_bound_is_sharp() {
        let g = SpaceDescriptor::uniform_grid(3).unwrap();
        let inside = g.vector(vec![3.0, -1.0, 1.0]).unwrap();
        assert!(g.cone_contains(&inside, 0.0).unwrap());
        let outside = g.vector(vec![3.01, 0.0, 1.0]).unwrap();
        assert!(!g.cone_contains(&outside, 0.0).unwrap());
        assert!(g.cone_contains(&outside, 0.011).unwrap());
    }

    #[test]
    fn lorentz_tolerance_semantics() {
        let l = SpaceDescriptor::lorentz(2.0, 3).unwrap();
        let x = l.vector(vec![1.0, 1.0000001, 0.0]).unwrap();
        assert!(!l.cone_contains(&x, 0.0).unwrap());
        assert!(l.cone_contains(&x, 1e-6).unwrap());
    }

    #[test]
    fn simplex_decomposition_is_coordinatewise() {
        let s = SpaceDescriptor::simplex(2).unwrap();
        let x = s.vector(vec![0.3, -0.2]).unwrap();
        let d = s.jordan_decompose(&x).unwrap();
        assert_eq!(d.pos.coords(), &[0.3, 0.0]);
        assert_eq!(d.neg.coords(), &[0.0, 0.2]);
        assert!((d.norm - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cone_members_decompose_trivially() {
        let l = SpaceDescriptor::lorentz(2.0, 3).unwrap();
        let x = l.vector(vec![2.0, 1.0, 0.5]).unwrap();
        let d = l.jordan_decompose(&x).unwrap();
        assert!(d.neg.is_zero());
        assert_eq!(d.norm, 2.0);
    }

    #[test]
    fn lorentz_null_functional_norm() {
        let l = SpaceDescriptor::lorentz(2.0, 4).unwrap();
        // (0, v) with ||v||_2 = 1 has norm 1.
        let x = l.vector(vec![0.0, 0.6, 0.8, 0.0]).unwrap();
        let d = l.jordan_decompose(&x).unwrap();
        assert!((d.norm - 1.0).abs() < 1e-12);
        let rebuilt = d.pos.sub(&d.neg).unwrap();
        assert!(rebuilt.max_abs_diff(&x) < 1e-12);
        assert!(l.cone_violation(&d.pos).unwrap() <= 1e-12);
        assert!(l.cone_violation(&d.neg).unwrap() <= 1e-12);
    }

    #[test]
    fn base_split_extreme_pair() {
        let s = SpaceDescriptor::simplex(2).unwrap();
        let x = s.vector(vec![1.0, 0.0]).unwrap();
        let y = s.vector(vec![0.0, 1.0]).unwrap();
        let (u, v) = s.base_split(&x, &y).unwrap();
        assert_eq!(u.coords(), &[1.0, 0.0]);
        assert_eq!(v.coords(), &[0.0, 1.0]);
        assert!((s.base_norm(&x.sub(&y).unwrap()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn base_split_interior_pair() {
        let s = SpaceDescriptor::simplex(2).unwrap();
        let x = s.vector(vec![0.6, 0.4]).unwrap();
        let y = s.vector(vec![0.4, 0.6]).unwrap();
        let (u, v) = s.base_split(&x, &y).unwrap();
        assert!(u.max_abs_diff(&s.vector(vec![1.0, 0.0]).unwrap()) < 1e-12);
        assert!(v.max_abs_diff(&s.vector(vec![0.0, 1.0]).unwrap()) < 1e-12);
        let diff = x.sub(&y).unwrap();
        assert!((s.base_norm(&diff).unwrap() - 0.4).abs() < 1e-12);
    }

    #[test]
    fn base_split_rejects_coinciding_and_unbalanced() {
        let s = SpaceDescriptor::simplex(2).unwrap();
        let x = s.vector(vec![0.5, 0.5]).unwrap();
        assert!(matches!(s.base_split(&x, &x), Err(Error::Degenerate(_))));
        let y = s.vector(vec![0.5, 0.6]).unwrap();
        assert!(matches!(s.base_split(&x, &y), Err(Error::Precondition(_))));
    }

    #[test]
    fn simplex_extreme_points_complete() {
        let s = SpaceDescriptor::simplex(3).unwrap();
        let ext = s.base_extreme_points(10).unwrap();
        assert!(ext.complete);
        assert_eq!(ext.points.len(), 3);
    }

    #[test]
    fn grid_extreme_points_are_box_vertices() {
        let g = SpaceDescriptor::uniform_grid(3).unwrap();
        let ext = g.base_extreme_points(10).unwrap();
        assert!(ext.complete);
        assert_eq!(ext.points.len(), 4);
        for p in &ext.points {
            assert!(g.in_base(p, 0.0).unwrap());
            assert_eq!(p.coords()[2], 1.0);
            assert!(p.coords()[..2].iter().all(|v| *v == 3.0 || *v == -1.0));
        }
    }

    #[test]
    fn lorentz_extreme_points_sampled() {
        let l = SpaceDescriptor::lorentz(2.0, 5).unwrap();
        let ext = l.base_extreme_points(100).unwrap();
        assert!(!ext.complete);
        assert_eq!(ext.points.len(), 100);
        for p in &ext.points {
            assert!((l.tail_norm(&p.coords()[1..]) - 1.0).abs() < 1e-9);
            assert_eq!(p.coords()[0], 1.0);
        }
    }

    #[test]
    fn extreme_points_need_capacity() {
        let s = SpaceDescriptor::simplex(3).unwrap();
        assert!(matches!(s.base_extreme_points(1), Err(Error::Input(_))));
    }

    #[test]
    fn descriptor_validation() {
        assert!(SpaceDescriptor::simplex(0).is_err());
        assert!(SpaceDescriptor::grid_function(vec![0.0, 0.5]).is_err());
        assert!(SpaceDescriptor::grid_function(vec![0.5, 0.2, 1.0]).is_err());
        assert!(SpaceDescriptor::lorentz(0.5, 3).is_err());
        assert!(SpaceDescriptor::lorentz_quadrature(2.0, vec![0.5, 0.4]).is_err());
        let (_, w) = midpoint_quadrature(16);
        assert!(SpaceDescriptor::lorentz_quadrature(2.0, w).is_ok());
    }

    #[test]
    fn zero_vector_decomposes_to_zero() {
        for s in [
            SpaceDescriptor::simplex(3).unwrap(),
            SpaceDescriptor::uniform_grid(4).unwrap(),
            SpaceDescriptor::lorentz(2.0, 4).unwrap(),
        ] {
            let z = s.zero_vector();
            let d = s.jordan_decompose(&z).unwrap();
            assert_eq!(d.norm, 0.0);
            assert!(d.pos.is_zero() && d.neg.is_zero());
        }
    }
}
