//! Built-in instance families: the grid multiplication chain on the
//! grid-function cone, the kernel chain on the Lorentz cone over a
//! discretized `L_p[0, 1]`, and a small gallery of classical stochastic
//! matrices with documented expected verdicts.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ergodicity::Thresholds;
use crate::error::{Error, Result};
use crate::operators::{MarkovOperator, NdmcSpec, StepGenerator};
use crate::probes;
use crate::space::{midpoint_quadrature, SpaceDescriptor, Vector};

// ---------------------------------------------------------------------------
// grid multiplication chain
// ---------------------------------------------------------------------------

/// Parameters of the multiplication chain `(T_k x)(t) = t^k x(t)` on a
/// uniform grid.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GridChainParams {
    pub grid_size: usize,
    /// First step index used by analyses (step 0 is the identity exponent).
    pub start_index: usize,
    /// Height of the constant minorant; must lie in (0, 1/2).
    pub constant_c: f64,
}

impl GridChainParams {
    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(Error::input("grid_size must be >= 2"));
        }
        if self.start_index < 1 {
            return Err(Error::input("start_index must be >= 1"));
        }
        if !(self.constant_c > 0.0 && self.constant_c < 0.5) {
            return Err(Error::input("constant_c must lie in (0, 1/2)"));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<SpaceDescriptor> {
        SpaceDescriptor::uniform_grid(self.grid_size)
    }
}

struct GridSteps {
    space: SpaceDescriptor,
}

impl StepGenerator for GridSteps {
    fn step(&self, k: usize) -> MarkovOperator {
        let grid = self.space.grid().expect("grid space");
        let d = grid.len();
        let mut matrix = DMatrix::<f64>::zeros(d, d);
        for (i, &t) in grid.iter().enumerate() {
            matrix[(i, i)] = pow_usize(t, k);
        }
        MarkovOperator::new(self.space.clone(), matrix, format!("t^{k}·"))
            .expect("diagonal multiplier is well-formed")
    }
}

fn pow_usize(base: f64, exp: usize) -> f64 {
    if exp <= i32::MAX as usize {
        base.powi(exp as i32)
    } else {
        base.powf(exp as f64)
    }
}

/// The multiplication chain: step `k` multiplies node `t_i` by `t_i^k`.
pub fn build_grid_chain(params: &GridChainParams) -> Result<NdmcSpec> {
    params.validate()?;
    let space = params.space()?;
    let label = format!(
        "grid_multiplication(nodes={}, c={})",
        params.grid_size, params.constant_c
    );
    Ok(NdmcSpec::generated(
        space.clone(),
        Arc::new(GridSteps { space }),
        label,
    ))
}

/// Exponent of the composite over the inclusive step window `k..=k+n_steps`:
/// the product of the diagonal multipliers is `t^M` with
/// `M = (n_steps + 1) k + n_steps (n_steps + 1) / 2`.
pub fn grid_composite_exponent(k: usize, n_steps: usize) -> usize {
    (n_steps + 1) * k + n_steps * (n_steps + 1) / 2
}

/// Direct evaluation of the grid minorization inequalities: true iff
/// `max_i |t_i^M x_i - 1| <= 2 (1 - c)` holds for both base elements, with
/// `M` the composite exponent of the window `k..=k+n_steps`.
pub fn check_grid_doeblin(
    params: &GridChainParams,
    k: usize,
    n_steps: usize,
    x: &Vector,
    y: &Vector,
) -> Result<bool> {
    params.validate()?;
    let space = params.space()?;
    for v in [x, y] {
        if !space.in_base(v, crate::ergodicity::PROBE_BASE_TOL)? {
            return Err(Error::input("grid probes must be base elements"));
        }
    }
    let grid = space.grid().expect("grid space");
    let m = grid_composite_exponent(k, n_steps);
    let bound = 2.0 * (1.0 - params.constant_c);
    let holds = |v: &Vector| {
        grid.iter()
            .zip(v.coords())
            .map(|(&t, &value)| (pow_usize(t, m) * value - 1.0).abs())
            .fold(0.0_f64, f64::max)
            <= bound
    };
    Ok(holds(x) && holds(y))
}

/// First window length for which the grid minorization holds on the pair.
pub fn find_grid_doeblin_window(
    params: &GridChainParams,
    k: usize,
    x: &Vector,
    y: &Vector,
    max_steps: usize,
) -> Result<Option<usize>> {
    for n_steps in 0..=max_steps {
        if check_grid_doeblin(params, k, n_steps, x, y)? {
            return Ok(Some(n_steps));
        }
    }
    Ok(None)
}

/// Convergence horizon (first `n` with all pair traces at or below the weak
/// threshold) per grid size; used to exhibit the discretization sensitivity
/// of the chain's strong limit.
pub fn grid_refinement_horizons(
    base: &GridChainParams,
    sizes: &[usize],
    k: usize,
    n_max: usize,
    pair_count: usize,
    seed: u64,
    thresholds: &Thresholds,
) -> Result<Vec<(usize, Option<usize>)>> {
    let mut out = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let params = GridChainParams {
            grid_size: size,
            ..*base
        };
        let spec = build_grid_chain(&params)?;
        let space = spec.space();
        let points = probes::base_samples(space, 2 * pair_count, seed);
        let diffs: Vec<Vec<f64>> = points
            .chunks(2)
            .filter(|c| c.len() == 2)
            .map(|c| {
                c[0].coords()
                    .iter()
                    .zip(c[1].coords())
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let mut states = diffs.clone();
        let mut horizon = None;
        for n in k + 1..=n_max {
            let step = spec.step(n - 1);
            let mut worst = 0.0_f64;
            for state in &mut states {
                *state = crate::operators::apply_matrix(step.matrix(), state);
                worst = worst.max(space.base_norm_raw(state)?);
            }
            if worst <= thresholds.weak_pass {
                horizon = Some(n);
                break;
            }
        }
        out.push((size, horizon));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// kernel chain on the Lorentz cone
// ---------------------------------------------------------------------------

/// Coefficient rule `k -> (a_k, b_k)` of the separable kernel family
/// `H_k(s, t) = a_k t^{k/2} s^{k/2}`, `g_k(t) = b_k t^k`.
#[derive(Clone, Debug, Serialize)]
pub enum CoeffRule {
    /// `a_k = scale (k+1)/2`, `b_k = scale sqrt(2k+1)/2`; `scale = 1` sits
    /// exactly on the Markovianity constraint boundary.
    BoundaryScaled { scale: f64 },
    /// `g = 0`, `H = 0`: every step collapses the tail block.
    Zero,
    /// Explicit tables; indexes past the end repeat the final entry.
    Table { a: Vec<f64>, b: Vec<f64> },
}

impl CoeffRule {
    pub fn coeffs(&self, k: usize) -> (f64, f64) {
        match self {
            CoeffRule::BoundaryScaled { scale } => (
                scale * (k as f64 + 1.0) / 2.0,
                scale * (2.0 * k as f64 + 1.0).sqrt() / 2.0,
            ),
            CoeffRule::Zero => (0.0, 0.0),
            CoeffRule::Table { a, b } => {
                let pick = |v: &Vec<f64>| {
                    if v.is_empty() {
                        0.0
                    } else {
                        v[k.min(v.len() - 1)]
                    }
                };
                (pick(a), pick(b))
            }
        }
    }
}

/// Parameters of the kernel chain on `R ⊕ L_p[0, 1]` with midpoint
/// quadrature.
#[derive(Clone, Debug, Serialize)]
pub struct KernelChainParams {
    pub p: f64,
    pub quadrature_size: usize,
    pub coeff_rule: CoeffRule,
    /// Steps whose coefficient validity is certified at construction.
    pub validity_horizon: usize,
}

impl KernelChainParams {
    pub fn boundary(p: f64, quadrature_size: usize) -> Self {
        KernelChainParams {
            p,
            quadrature_size,
            coeff_rule: CoeffRule::BoundaryScaled { scale: 1.0 },
            validity_horizon: 64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::input("kernel chains need p > 1"));
        }
        if self.quadrature_size < 2 {
            return Err(Error::input("quadrature_size must be >= 2"));
        }
        Ok(())
    }

    pub fn space(&self) -> Result<SpaceDescriptor> {
        let (_, weights) = midpoint_quadrature(self.quadrature_size);
        SpaceDescriptor::lorentz_quadrature(self.p, weights)
    }

    fn g_values(&self, nodes: &[f64], k: usize) -> Vec<f64> {
        let (_, b) = self.coeff_rule.coeffs(k);
        nodes.iter().map(|&t| b * pow_usize(t, k)).collect()
    }

    fn kernel_matrix(&self, nodes: &[f64], k: usize) -> DMatrix<f64> {
        let (a, _) = self.coeff_rule.coeffs(k);
        let m = nodes.len();
        let half = k as f64 / 2.0;
        let powers: Vec<f64> = nodes.iter().map(|&t| t.powf(half)).collect();
        DMatrix::from_fn(m, m, |i, j| a * powers[i] * powers[j])
    }
}

/// Quadrature evaluation of the kernel Markovianity bounds.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KernelBoundReport {
    /// `∫ (|g(t)| + (∫ |K(s,t)|^q ds)^{1/q})^p dt`: at most 1 certifies the
    /// operator Markov.
    pub condition_value: f64,
    pub g_norm: f64,
    /// `∫ (∫ |K(s,t)|^q ds)^{p/q} dt`: at most `(1/2)^p` together with
    /// `||g||_p <= 1/2` certifies the one-step minorization by `(1, 2g)`.
    pub kernel_value: f64,
    pub q: f64,
    pub certified: bool,
    pub split_certified: bool,
}

/// Evaluates the Markovianity bound for tabulated kernel data. `kernel[(i, j)]`
/// holds `K(s_j, t_i)`: row = output node, column = integration node.
pub fn kernel_markov_bound(
    g: &[f64],
    kernel: &DMatrix<f64>,
    weights: &[f64],
    p: f64,
) -> Result<KernelBoundReport> {
    if !(p > 1.0) {
        return Err(Error::input("the bound needs p > 1"));
    }
    let m = weights.len();
    if g.len() != m || kernel.nrows() != m || kernel.ncols() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: g.len().max(kernel.nrows()),
        });
    }
    let q = p / (p - 1.0);
    let mut condition_value = 0.0;
    let mut kernel_value = 0.0;
    let mut g_norm_p = 0.0;
    for i in 0..m {
        let inner_q: f64 = (0..m)
            .map(|j| weights[j] * kernel[(i, j)].abs().powf(q))
            .sum();
        let inner = inner_q.powf(1.0 / q);
        condition_value += weights[i] * (g[i].abs() + inner).powf(p);
        kernel_value += weights[i] * inner.powf(p);
        g_norm_p += weights[i] * g[i].abs().powf(p);
    }
    let g_norm = g_norm_p.powf(1.0 / p);
    let half_p = 0.5_f64.powf(p);
    Ok(KernelBoundReport {
        condition_value,
        g_norm,
        kernel_value,
        q,
        certified: condition_value <= 1.0 + 1e-9,
        split_certified: g_norm <= 0.5 + 1e-9 && kernel_value <= half_p + 1e-9,
    })
}

/// Bound values of the separable kernel family at one step.
pub fn kernel_family_bound(params: &KernelChainParams, k: usize) -> Result<KernelBoundReport> {
    params.validate()?;
    let (nodes, weights) = midpoint_quadrature(params.quadrature_size);
    let g = params.g_values(&nodes, k);
    let kernel = params.kernel_matrix(&nodes, k);
    kernel_markov_bound(&g, &kernel, &weights, params.p)
}

struct KernelSteps {
    space: SpaceDescriptor,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    params: KernelChainParams,
}

impl StepGenerator for KernelSteps {
    fn step(&self, k: usize) -> MarkovOperator {
        let m = self.nodes.len();
        let d = m + 1;
        let g = self.params.g_values(&self.nodes, k);
        let kernel = self.params.kernel_matrix(&self.nodes, k);
        let mut matrix = DMatrix::<f64>::zeros(d, d);
        matrix[(0, 0)] = 1.0;
        for i in 0..m {
            matrix[(i + 1, 0)] = g[i];
            for j in 0..m {
                matrix[(i + 1, j + 1)] = self.weights[j] * kernel[(i, j)];
            }
        }
        MarkovOperator::new(self.space.clone(), matrix, format!("kernel_step_{k}"))
            .expect("kernel step is well-formed")
    }
}

/// Builds the kernel chain, refusing coefficient rules whose Markovianity or
/// minorization bounds fail anywhere on the validity horizon.
pub fn build_kernel_chain(params: &KernelChainParams) -> Result<NdmcSpec> {
    params.validate()?;
    let space = params.space()?;
    let (nodes, weights) = midpoint_quadrature(params.quadrature_size);
    let mut violated = Vec::new();
    for k in 0..=params.validity_horizon {
        let g = params.g_values(&nodes, k);
        let kernel = params.kernel_matrix(&nodes, k);
        let report = kernel_markov_bound(&g, &kernel, &weights, params.p)?;
        if !report.split_certified {
            violated.push(k);
        }
    }
    if !violated.is_empty() {
        return Err(Error::construction(format!(
            "coefficient rule violates the kernel bounds at k = {:?}",
            violated
        )));
    }
    let label = format!(
        "kernel_lorentz(p={}, quadrature={})",
        params.p, params.quadrature_size
    );
    Ok(NdmcSpec::generated(
        space.clone(),
        Arc::new(KernelSteps {
            space,
            nodes,
            weights,
            params: params.clone(),
        }),
        label,
    ))
}

/// The minorant `z_k = (1, 2 g_k)` of the kernel chain's one-step
/// minorization `T_k x >= (1/2) z_k`.
pub fn kernel_minorant(params: &KernelChainParams, k: usize) -> Result<Vector> {
    params.validate()?;
    let space = params.space()?;
    let (nodes, _) = midpoint_quadrature(params.quadrature_size);
    let g = params.g_values(&nodes, k);
    let mut coords = Vec::with_capacity(g.len() + 1);
    coords.push(1.0);
    coords.extend(g.iter().map(|v| 2.0 * v));
    space.vector(coords)
}

// ---------------------------------------------------------------------------
// classical matrix gallery
// ---------------------------------------------------------------------------

/// A gallery instance: either a single operator (analyzed as a homogeneous
/// chain) or a genuinely nonhomogeneous chain.
#[derive(Clone, Debug)]
pub enum GalleryItem {
    Operator(MarkovOperator),
    Chain(NdmcSpec),
}

impl GalleryItem {
    pub fn into_chain(self) -> NdmcSpec {
        match self {
            GalleryItem::Operator(op) => NdmcSpec::homogeneous(op),
            GalleryItem::Chain(spec) => spec,
        }
    }

    pub fn operator(&self) -> Option<&MarkovOperator> {
        match self {
            GalleryItem::Operator(op) => Some(op),
            GalleryItem::Chain(_) => None,
        }
    }
}

/// Names of the classical gallery families.
pub const GALLERY_FAMILIES: [&str; 5] = [
    "random_stochastic",
    "permutation_cycle",
    "lazy_permutation",
    "rank_one_random",
    "alternating_pair",
];

fn random_stochastic_matrix<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut matrix = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut col: Vec<f64> = (0..d)
            .map(|_| -(rng.random::<f64>().max(1e-300)).ln())
            .collect();
        let total: f64 = col.iter().sum();
        for (i, v) in col.iter_mut().enumerate() {
            *v /= total;
            matrix[(i, j)] = *v;
        }
    }
    matrix
}

fn cycle_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { 1.0 } else { 0.0 })
}

/// Deterministic classical instance by family name.
pub fn matrix_gallery(name: &str, dimension: usize, seed: u64) -> Result<GalleryItem> {
    if dimension < 2 {
        return Err(Error::input("gallery instances need dimension >= 2"));
    }
    let space = SpaceDescriptor::simplex(dimension)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match name {
        "random_stochastic" => {
            let matrix = random_stochastic_matrix(dimension, &mut rng);
            Ok(GalleryItem::Operator(MarkovOperator::new(
                space,
                matrix,
                format!("random_stochastic(d={dimension}, seed={seed})"),
            )?))
        }
        "permutation_cycle" => Ok(GalleryItem::Operator(MarkovOperator::new(
            space,
            cycle_matrix(dimension),
            format!("permutation_cycle(d={dimension})"),
        )?)),
        "lazy_permutation" => {
            let matrix = (DMatrix::<f64>::identity(dimension, dimension) + cycle_matrix(dimension))
                .scale(0.5);
            Ok(GalleryItem::Operator(MarkovOperator::new(
                space,
                matrix,
                format!("lazy_permutation(d={dimension})"),
            )?))
        }
        "rank_one_random" => {
            let y = probes::random_base_point(&space, &mut rng);
            let op = MarkovOperator::rank_one(space, &y)?
                .with_label(format!("rank_one_random(d={dimension}, seed={seed})"));
            Ok(GalleryItem::Operator(op))
        }
        "alternating_pair" => {
            let a = MarkovOperator::new(
                space.clone(),
                random_stochastic_matrix(dimension, &mut rng),
                "a",
            )?;
            let b = MarkovOperator::new(
                space.clone(),
                random_stochastic_matrix(dimension, &mut rng),
                "b",
            )?;
            Ok(GalleryItem::Chain(NdmcSpec::cycle(
                vec![a, b],
                format!("alternating_pair(d={dimension}, seed={seed})"),
            )?))
        }
        other => Err(Error::input(format!("unknown gallery family '{other}'"))),
    }
}

/// One row of the expected-verdict table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GalleryRow {
    pub name: &'static str,
    pub uniform: &'static str,
    pub weak: &'static str,
    pub l_weak: &'static str,
    pub notes: &'static str,
}

/// Documented expected verdicts per family; stable ordering.
pub fn gallery_expectations() -> &'static [GalleryRow] {
    &[
        GalleryRow {
            name: "random_stochastic",
            uniform: "pass",
            weak: "pass",
            l_weak: "pass",
            notes: "generic contraction; coefficient computed exactly",
        },
        GalleryRow {
            name: "permutation_cycle",
            uniform: "fail",
            weak: "fail",
            l_weak: "fail",
            notes: "isometry on the null space; coefficient stays 1",
        },
        GalleryRow {
            name: "lazy_permutation",
            uniform: "pass",
            weak: "pass",
            l_weak: "pass",
            notes: "a contracting power appears within the dimension",
        },
        GalleryRow {
            name: "rank_one_random",
            uniform: "pass",
            weak: "pass",
            l_weak: "pass",
            notes: "coefficient 0; collapses in one step",
        },
        GalleryRow {
            name: "alternating_pair",
            uniform: "n/a",
            weak: "pass",
            l_weak: "pass",
            notes: "nonhomogeneous two-operator cycle",
        },
        GalleryRow {
            name: "grid_multiplication",
            uniform: "n/a",
            weak: "n/a",
            l_weak: "pass",
            notes: "fixed-grid limits are discretization-sensitive",
        },
        GalleryRow {
            name: "kernel_lorentz",
            uniform: "n/a",
            weak: "n/a",
            l_weak: "pass",
            notes: "one-step minorization with lambda = 1/2",
        },
    ]
}
