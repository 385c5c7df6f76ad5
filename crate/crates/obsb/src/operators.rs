//! Markov operators in coordinates, Markovianity certificates, rank-one and
//! perturbed operators, and nonhomogeneous chain composition.
//!
//! A chain is generated by one-step operators `T_k`; the composite over the
//! half-open window `[k, n)` is the left-to-right product `T_{n-1} ... T_k`,
//! with the empty window equal to the identity. With this convention the
//! chain law `composite(k, n) = composite(m, n) * composite(k, m)` holds for
//! every `k <= m <= n` without re-using a step.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::space::{SpaceDescriptor, Vector};

/// Tolerance for base membership of operator inputs (rank-one targets,
/// perturbation directions).
pub const BASE_MEMBERSHIP_TOL: f64 = 1e-7;

/// Point budget used by Markovianity and norm certificates when the base has
/// to be sampled.
pub const CERTIFICATE_POINTS: usize = 4096;

/// A linear operator on a space, stored as a dense matrix acting on
/// coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkovOperator {
    space: SpaceDescriptor,
    matrix: DMatrix<f64>,
    label: String,
}

impl Serialize for MarkovOperator {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("MarkovOperator", 3)?;
        s.serialize_field("label", &self.label)?;
        s.serialize_field("space", &self.space)?;
        let rows: Vec<Vec<f64>> = (0..self.matrix.nrows())
            .map(|i| self.matrix.row(i).iter().copied().collect())
            .collect();
        s.serialize_field("matrix", &rows)?;
        s.end()
    }
}

/// Outcome of a Markovianity check: exact when the base's extreme points were
/// enumerated completely, sampled otherwise.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MarkovCertificate {
    pub exact: bool,
    pub pass: bool,
    pub worst_violation: f64,
}

/// Operator-norm estimate in the norm induced by the base norm
/// (exact on completely enumerated polyhedral bases).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NormEstimate {
    pub value: f64,
    pub exact: bool,
}

impl MarkovOperator {
    pub fn new(
        space: SpaceDescriptor,
        matrix: DMatrix<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let d = space.dimension();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("operator entries must be finite"));
        }
        Ok(MarkovOperator {
            space,
            matrix,
            label: label.into(),
        })
    }

    /// Operator from row-major entries.
    pub fn from_rows(
        space: SpaceDescriptor,
        rows: &[Vec<f64>],
        label: impl Into<String>,
    ) -> Result<Self> {
        let d = space.dimension();
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: rows.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(space, DMatrix::from_row_slice(d, d, &flat), label)
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        let d = space.dimension();
        MarkovOperator {
            space,
            matrix: DMatrix::identity(d, d),
            label: "identity".to_string(),
        }
    }

    /// The rank-one operator `x -> f(x) y` onto a base element `y`.
    pub fn rank_one(space: SpaceDescriptor, y: &Vector) -> Result<Self> {
        space.check_vector(y)?;
        if !space.in_base(y, BASE_MEMBERSHIP_TOL)? {
            return Err(Error::precondition(
                "rank-one target must belong to the base",
            ));
        }
        let d = space.dimension();
        let f = space.functional_coefficients();
        let mut matrix = DMatrix::zeros(d, d);
        for j in 0..d {
            for i in 0..d {
                matrix[(i, j)] = f[j] * y.coords()[i];
            }
        }
        Ok(MarkovOperator {
            space,
            matrix,
            label: "rank_one".to_string(),
        })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub(crate) fn apply_raw(&self, coords: &[f64]) -> Vec<f64> {
        apply_matrix(&self.matrix, coords)
    }

    /// Matrix-vector action on a point of the space.
    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        self.space.check_vector(x)?;
        self.space.vector(self.apply_raw(x.coords()))
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &MarkovOperator) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(MarkovOperator {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
            label: format!("{}*{}", self.label, other.label),
        })
    }

    /// n-th power with a compact label.
    pub fn power(&self, n: usize) -> Self {
        let d = self.space.dimension();
        let mut matrix = DMatrix::identity(d, d);
        for _ in 0..n {
            matrix = &self.matrix * matrix;
        }
        MarkovOperator {
            space: self.space.clone(),
            matrix,
            label: format!("{}^{}", self.label, n),
        }
    }

    /// Convex mixture with the rank-one projection onto `phi`:
    /// `(1 - eps/2) T + (eps/2) T_phi`. Shrinks the ergodicity coefficient to
    /// at most `1 - eps/2` while staying within `eps` of `T`.
    pub fn perturb(&self, phi: &Vector, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 2.0) {
            return Err(Error::input(format!(
                "perturbation size must lie in (0, 2), got {eps}"
            )));
        }
        let projector = MarkovOperator::rank_one(self.space.clone(), phi)?;
        let matrix = self.matrix.scale(1.0 - eps / 2.0) + projector.matrix.scale(eps / 2.0);
        Ok(MarkovOperator {
            space: self.space.clone(),
            matrix,
            label: format!("perturbed({}, eps={eps})", self.label),
        })
    }

    /// Markovianity certificate: functional preservation is checked exactly on
    /// the basis, cone preservation on the base's extreme points (complete
    /// enumeration when available, deterministic samples otherwise).
    pub fn is_markov(&self, tol: f64) -> Result<MarkovCertificate> {
        if !(tol >= 0.0) {
            return Err(Error::input("tolerance must be >= 0"));
        }
        let d = self.space.dimension();
        let f = DVector::from_vec(self.space.functional_coefficients());
        let mut worst: f64 = 0.0;
        // f(T e_i) = f(e_i) for every basis vector, i.e. T* f = f.
        let pulled = self.matrix.transpose() * &f;
        for i in 0..d {
            worst = worst.max((pulled[i] - f[i]).abs());
        }
        let ext = self.space.base_extreme_points(CERTIFICATE_POINTS)?;
        for point in &ext.points {
            let image = self.apply_raw(point.coords());
            worst = worst.max(self.space.cone_violation_raw(&image));
        }
        Ok(MarkovCertificate {
            exact: ext.complete,
            pass: worst <= tol,
            worst_violation: worst,
        })
    }

    /// Norm estimate of this operator in the base-induced operator norm.
    pub fn operator_norm(&self, budget: usize) -> Result<NormEstimate> {
        matrix_operator_norm(&self.space, &self.matrix, budget)
    }
}

pub(crate) fn apply_matrix(matrix: &DMatrix<f64>, coords: &[f64]) -> Vec<f64> {
    let x = DVector::from_column_slice(coords);
    (matrix * x).data.into()
}

/// Base-norm-induced operator norm of an arbitrary matrix on a space.
///
/// The unit ball is `conv(K ∪ -K)`, so the norm is the maximum of `||A u||`
/// over the base's extreme points; exact when those are fully enumerated.
pub fn matrix_operator_norm(
    space: &SpaceDescriptor,
    matrix: &DMatrix<f64>,
    budget: usize,
) -> Result<NormEstimate> {
    let ext = space.base_extreme_points(budget.max(2))?;
    let mut value: f64 = 0.0;
    for point in &ext.points {
        let image = apply_matrix(matrix, point.coords());
        value = value.max(space.base_norm_raw(&image)?);
    }
    Ok(NormEstimate {
        value,
        exact: ext.complete,
    })
}

/// One-step rule of a nonhomogeneous chain.
pub trait StepGenerator: Send + Sync {
    fn step(&self, k: usize) -> MarkovOperator;
}

#[derive(Clone)]
enum StepRule {
    Homogeneous(MarkovOperator),
    Cycle(Vec<MarkovOperator>),
    Generated(Arc<dyn StepGenerator>),
}

impl fmt::Debug for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::Homogeneous(op) => write!(f, "Homogeneous({})", op.label()),
            StepRule::Cycle(ops) => write!(f, "Cycle(len={})", ops.len()),
            StepRule::Generated(_) => write!(f, "Generated"),
        }
    }
}

/// A nonhomogeneous discrete Markov chain given by its one-step operators
/// `T_k`, `k >= 0`.
#[derive(Clone, Debug)]
pub struct NdmcSpec {
    space: SpaceDescriptor,
    rule: StepRule,
    label: String,
}

impl NdmcSpec {
    /// Chain with a constant step.
    pub fn homogeneous(op: MarkovOperator) -> Self {
        let label = format!("homogeneous({})", op.label());
        NdmcSpec {
            space: op.space.clone(),
            rule: StepRule::Homogeneous(op),
            label,
        }
    }

    /// Chain cycling through an explicit finite list of steps.
    pub fn cycle(ops: Vec<MarkovOperator>, label: impl Into<String>) -> Result<Self> {
        let first = ops
            .first()
            .ok_or_else(|| Error::input("cycle needs at least one operator"))?;
        let space = first.space.clone();
        if ops.iter().any(|op| op.space != space) {
            return Err(Error::SpaceMismatch);
        }
        Ok(NdmcSpec {
            space,
            rule: StepRule::Cycle(ops),
            label: label.into(),
        })
    }

    /// Chain with steps produced by a deterministic rule.
    pub fn generated(
        space: SpaceDescriptor,
        generator: Arc<dyn StepGenerator>,
        label: impl Into<String>,
    ) -> Self {
        NdmcSpec {
            space,
            rule: StepRule::Generated(generator),
            label: label.into(),
        }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// The one-step operator `T_k`.
    pub fn step(&self, k: usize) -> MarkovOperator {
        match &self.rule {
            StepRule::Homogeneous(op) => op.clone(),
            StepRule::Cycle(ops) => ops[k % ops.len()].clone(),
            StepRule::Generated(generator) => generator.step(k),
        }
    }

    /// Composite `T_{n-1} ... T_k` over the half-open window `[k, n)`;
    /// the empty window yields the identity.
    pub fn composite(&self, k: usize, n: usize) -> Result<MarkovOperator> {
        if k > n {
            return Err(Error::input(format!(
                "composite window needs k <= n, got k={k}, n={n}"
            )));
        }
        let mut walker = self.walker(k);
        while walker.n() < n {
            walker.advance();
        }
        Ok(walker.to_operator())
    }

    /// Incremental composite iterator starting at the identity `[k, k)`.
    pub fn walker(&self, k: usize) -> CompositeWalker<'_> {
        let d = self.space.dimension();
        CompositeWalker {
            spec: self,
            k,
            n: k,
            matrix: DMatrix::identity(d, d),
        }
    }
}

/// Running composite of a chain: after `advance` is called `m` times the
/// state holds `composite(k, k + m)`.
pub struct CompositeWalker<'a> {
    spec: &'a NdmcSpec,
    k: usize,
    n: usize,
    matrix: DMatrix<f64>,
}

impl CompositeWalker<'_> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn advance(&mut self) {
        let step = self.spec.step(self.n);
        self.matrix = step.matrix * &self.matrix;
        self.n += 1;
    }

    pub fn apply_raw(&self, coords: &[f64]) -> Vec<f64> {
        apply_matrix(&self.matrix, coords)
    }

    pub fn to_operator(&self) -> MarkovOperator {
        MarkovOperator {
            space: self.spec.space.clone(),
            matrix: self.matrix.clone(),
            label: format!("{}[{},{})", self.spec.label, self.k, self.n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceDescriptor;

    fn two_state() -> MarkovOperator {
        let space = SpaceDescriptor::simplex(2).unwrap();
        MarkovOperator::from_rows(space, &[vec![0.9, 0.2], vec![0.1, 0.8]], "two_state").unwrap()
    }

    #[test]
    fn apply_extracts_columns() {
        let op = two_state();
        let x = op.space().vector(vec![1.0, 0.0]).unwrap();
        let y = op.apply(&x).unwrap();
        assert_eq!(y.coords(), &[0.9, 0.1]);
    }

    #[test]
    fn identity_fixes_everything() {
        let space = SpaceDescriptor::simplex(3).unwrap();
        let id = MarkovOperator::identity(space.clone());
        let x = space.vector(vec![0.3, -0.1, 0.5]).unwrap();
        assert_eq!(id.apply(&x).unwrap().coords(), x.coords());
    }

    #[test]
    fn stochastic_matrix_passes_exactly() {
        let cert = two_state().is_markov(1e-9).unwrap();
        assert!(cert.exact && cert.pass);
        assert!(cert.worst_violation <= 1e-12);
    }

    #[test]
    fn negative_entry_fails_with_magnitude() {
        let space = SpaceDescriptor::simplex(2).unwrap();
        let op =
            MarkovOperator::from_rows(space, &[vec![1.1, 0.2], vec![-0.1, 0.8]], "broken").unwrap();
        let cert = op.is_markov(1e-9).unwrap();
        assert!(cert.exact && !cert.pass);
        assert!((cert.worst_violation - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rank_one_maps_base_to_target() {
        let space = SpaceDescriptor::simplex(2).unwrap();
        let y = space.vector(vec![0.5, 0.5]).unwrap();
        let op = MarkovOperator::rank_one(space.clone(), &y).unwrap();
        for col in 0..2 {
            assert_eq!(op.matrix()[(0, col)], 0.5);
            assert_eq!(op.matrix()[(1, col)], 0.5);
        }
        let u = space.vector(vec![0.25, 0.75]).unwrap();
        assert!(op.apply(&u).unwrap().max_abs_diff(&y) < 1e-15);
        // idempotent
        let squared = op.compose(&op).unwrap();
        assert!((squared.matrix() - op.matrix()).abs().max() < 1e-15);
    }

    #[test]
    fn rank_one_rejects_non_base_targets() {
        let space = SpaceDescriptor::simplex(2).unwrap();
        let y = space.vector(vec![0.5, 0.4]).unwrap();
        assert!(matches!(
            MarkovOperator::rank_one(space, &y),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn perturbation_of_identity() {
        let space = SpaceDescriptor::simplex(2).unwrap();
        let id = MarkovOperator::identity(space.clone());
        let phi = space.vector(vec![0.5, 0.5]).unwrap();
        let p = id.perturb(&phi, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]);
        assert!((p.matrix() - expected).abs().max() < 1e-15);
        // entries converge back to the original as eps -> 0
        let nearly = id.perturb(&phi, 1e-9).unwrap();
        assert!((nearly.matrix() - id.matrix()).abs().max() <= 1e-9);
        assert!(matches!(id.perturb(&phi, 0.0), Err(Error::Input(_))));
        assert!(matches!(id.perturb(&phi, 2.0), Err(Error::Input(_))));
    }

    #[test]
    fn composite_follows_chain_law() {
        let space = SpaceDescriptor::simplex(3).unwrap();
        let a = MarkovOperator::from_rows(
            space.clone(),
            &[
                vec![0.5, 0.3, 0.2],
                vec![0.25, 0.4, 0.3],
                vec![0.25, 0.3, 0.5],
            ],
            "a",
        )
        .unwrap();
        let b = MarkovOperator::from_rows(
            space.clone(),
            &[
                vec![0.7, 0.1, 0.0],
                vec![0.2, 0.8, 0.1],
                vec![0.1, 0.1, 0.9],
            ],
            "b",
        )
        .unwrap();
        let chain = NdmcSpec::cycle(vec![a, b], "ab").unwrap();
        let whole = chain.composite(0, 5).unwrap();
        let right = chain.composite(0, 3).unwrap();
        let left = chain.composite(3, 5).unwrap();
        let glued = left.compose(&right).unwrap();
        let scale = whole.matrix().abs().max();
        assert!((whole.matrix() - glued.matrix()).abs().max() <= 1e-12 * scale);
        // empty window is the identity
        let id = chain.composite(2, 2).unwrap();
        assert!((id.matrix() - DMatrix::<f64>::identity(3, 3)).abs().max() == 0.0);
        assert!(chain.composite(3, 2).is_err());
    }

    #[test]
    fn homogeneous_composite_is_power() {
        let op = two_state();
        let chain = NdmcSpec::homogeneous(op.clone());
        let c = chain.composite(2, 6).unwrap();
        let p = op.power(4);
        assert!((c.matrix() - p.matrix()).abs().max() < 1e-15);
    }
}
