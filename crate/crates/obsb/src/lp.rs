//! Linear-programming backend for minimal decompositions on polyhedral cones.
//!
//! Every problem below minimizes `f(pos) + f(neg)` subject to
//! `pos - neg = x` and `pos, neg` in the cone, with `neg` eliminated through
//! the equality. The optimal objective is the base norm of `x`.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};
use crate::space::{SpaceDescriptor, SpaceKind};

const FREE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

pub(crate) fn decompose(space: &SpaceDescriptor, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    // solve at unit scale: the solver's feasibility tolerance is absolute,
    // and the decomposition is positively homogeneous
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return Ok((vec![0.0; x.len()], vec![0.0; x.len()], 0.0));
    }
    let unit: Vec<f64> = x.iter().map(|v| v / scale).collect();
    let (mut pos, mut neg, norm) = match space.kind() {
        SpaceKind::Simplex => simplex(&unit),
        SpaceKind::GridFunction { .. } => grid(&unit),
        SpaceKind::SequenceLpCone { p } if *p == 1.0 => weighted_l1(&unit, None),
        SpaceKind::LorentzLp {
            p,
            quadrature_weights,
        } if *p == 1.0 => weighted_l1(&unit, quadrature_weights.as_deref()),
        _ => {
            return Err(Error::input(format!(
                "{} admits no exact linear-programming decomposition",
                space.kind_name()
            )))
        }
    }?;
    for v in pos.iter_mut().chain(neg.iter_mut()) {
        *v *= scale;
    }
    Ok((pos, neg, norm * scale))
}

fn solve(problem: Problem, context: &str) -> Result<minilp::Solution> {
    problem
        .solve()
        .map_err(|e| Error::numeric(format!("{context}: {e}"), f64::INFINITY))
}

/// Orthant cone: `min sum(y) + sum(z)` s.t. `y - z = x`, `y, z >= 0`.
fn simplex(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let ys: Vec<Variable> = x
        .iter()
        .map(|_| problem.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    let zs: Vec<Variable> = x
        .iter()
        .map(|_| problem.add_var(1.0, (0.0, f64::INFINITY)))
        .collect();
    for i in 0..x.len() {
        problem.add_constraint([(ys[i], 1.0), (zs[i], -1.0)], ComparisonOp::Eq, x[i]);
    }
    let solution = solve(problem, "simplex decomposition LP")?;
    let pos: Vec<f64> = ys.iter().map(|v| solution[*v]).collect();
    let neg: Vec<f64> = zs.iter().map(|v| solution[*v]).collect();
    let norm = pos.iter().sum::<f64>() + neg.iter().sum::<f64>();
    Ok((pos, neg, norm))
}

/// Grid-function cone `|y_i - y_L| <= 2 y_L`: with `z = y - x` the problem is
/// `min 2 y_L - x_L` over `y` subject to both cone memberships.
fn grid(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = x.len();
    let last = d - 1;
    let x_l = x[last];
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let ys: Vec<Variable> = (0..d)
        .map(|i| {
            if i == last {
                problem.add_var(2.0, (x_l.max(0.0), f64::INFINITY))
            } else {
                problem.add_var(0.0, FREE)
            }
        })
        .collect();
    problem.add_constraint([(ys[last], 1.0)], ComparisonOp::Ge, 0.0);
    for i in 0..last {
        // y in cone
        problem.add_constraint([(ys[i], 1.0), (ys[last], 1.0)], ComparisonOp::Ge, 0.0);
        problem.add_constraint([(ys[i], 1.0), (ys[last], -3.0)], ComparisonOp::Le, 0.0);
        // z = y - x in cone
        problem.add_constraint(
            [(ys[i], 1.0), (ys[last], 1.0)],
            ComparisonOp::Ge,
            x[i] + x_l,
        );
        problem.add_constraint(
            [(ys[i], 1.0), (ys[last], -3.0)],
            ComparisonOp::Le,
            x[i] - 3.0 * x_l,
        );
    }
    let solution = solve(problem, "grid decomposition LP")?;
    let pos: Vec<f64> = ys.iter().map(|v| solution[*v]).collect();
    let neg: Vec<f64> = pos.iter().zip(x).map(|(y, x)| y - x).collect();
    let norm = pos[last] + neg[last];
    Ok((pos, neg, norm))
}

/// Weighted-l1 Lorentz cone `y_0 >= sum_i w_i |y_i|`: absolute values are
/// modeled with slack majorants `s_i >= |y_i|`, `t_i >= |y_i - x_i|`.
fn weighted_l1(x: &[f64], weights: Option<&[f64]>) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let d = x.len();
    let tail = d - 1;
    let x0 = x[0];
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let mut problem = Problem::new(OptimizationDirection::Minimize);
    let y0 = problem.add_var(2.0, (x0.max(0.0), f64::INFINITY));
    let ys: Vec<Variable> = (0..tail).map(|_| problem.add_var(0.0, FREE)).collect();
    let ss: Vec<Variable> = (0..tail)
        .map(|_| problem.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    let ts: Vec<Variable> = (0..tail)
        .map(|_| problem.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    for i in 0..tail {
        problem.add_constraint([(ss[i], 1.0), (ys[i], -1.0)], ComparisonOp::Ge, 0.0);
        problem.add_constraint([(ss[i], 1.0), (ys[i], 1.0)], ComparisonOp::Ge, 0.0);
        problem.add_constraint([(ts[i], 1.0), (ys[i], -1.0)], ComparisonOp::Ge, -x[i + 1]);
        problem.add_constraint([(ts[i], 1.0), (ys[i], 1.0)], ComparisonOp::Ge, x[i + 1]);
    }
    let mut s_sum: Vec<(Variable, f64)> = ss.iter().enumerate().map(|(i, v)| (*v, w(i))).collect();
    s_sum.push((y0, -1.0));
    problem.add_constraint(s_sum.as_slice(), ComparisonOp::Le, 0.0);
    let mut t_sum: Vec<(Variable, f64)> = ts.iter().enumerate().map(|(i, v)| (*v, w(i))).collect();
    t_sum.push((y0, -1.0));
    problem.add_constraint(t_sum.as_slice(), ComparisonOp::Le, -x0);
    let solution = solve(problem, "weighted-l1 decomposition LP")?;
    let mut pos = Vec::with_capacity(d);
    pos.push(solution[y0]);
    pos.extend(ys.iter().map(|v| solution[*v]));
    let neg: Vec<f64> = pos.iter().zip(x).map(|(y, x)| y - x).collect();
    let norm = pos[0] + neg[0];
    Ok((pos, neg, norm))
}
