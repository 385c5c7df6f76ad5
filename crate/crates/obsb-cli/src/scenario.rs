//! Scenario file schema and validation.
//!
//! Scenarios are TOML: a `space` block (optional when the chain family
//! implies its space), a `chain` block, an ordered list of `[[analyses]]`,
//! and optional `output`/`tolerances` blocks plus a top-level `seed`.
//! Unknown keys are rejected everywhere.

use serde::{Deserialize, Serialize};

use obsb::ergodicity::Thresholds;
use obsb::gallery::{self, CoeffRule, GridChainParams, KernelChainParams};
use obsb::operators::{MarkovOperator, NdmcSpec};
use obsb::space::{SpaceDescriptor, Vector};
use obsb::{Error, Result};

pub const DEFAULT_DELTA_BUDGET: usize = 20_000;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceBlock>,
    pub chain: ChainBlock,
    pub analyses: Vec<AnalysisBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputBlock>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<TolerancesBlock>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_weights: Option<Vec<f64>>,
}

impl SpaceBlock {
    pub fn build(&self) -> Result<SpaceDescriptor> {
        match self.kind.as_str() {
            "simplex" => {
                let d = self
                    .dimension
                    .ok_or_else(|| Error::input("simplex spaces need `dimension`"))?;
                SpaceDescriptor::simplex(d)
            }
            "lorentz_lp" => {
                let p = self
                    .p
                    .ok_or_else(|| Error::input("lorentz_lp spaces need `p`"))?;
                if let Some(w) = &self.quadrature_weights {
                    SpaceDescriptor::lorentz_quadrature(p, w.clone())
                } else if let Some(m) = self.quadrature_size {
                    let (_, w) = obsb::space::midpoint_quadrature(m);
                    SpaceDescriptor::lorentz_quadrature(p, w)
                } else {
                    let d = self.dimension.ok_or_else(|| {
                        Error::input("lorentz_lp spaces need `dimension` or quadrature data")
                    })?;
                    SpaceDescriptor::lorentz(p, d)
                }
            }
            "grid_function" => {
                if let Some(grid) = &self.grid {
                    SpaceDescriptor::grid_function(grid.clone())
                } else if let Some(n) = self.grid_size {
                    SpaceDescriptor::uniform_grid(n)
                } else {
                    Err(Error::input(
                        "grid_function spaces need `grid` or `grid_size`",
                    ))
                }
            }
            "sequence_lp" => {
                let p = self
                    .p
                    .ok_or_else(|| Error::input("sequence_lp spaces need `p`"))?;
                let d = self
                    .dimension
                    .ok_or_else(|| Error::input("sequence_lp spaces need `dimension`"))?;
                SpaceDescriptor::sequence_lp(p, d)
            }
            other => Err(Error::input(format!("unknown space kind '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    // grid_multiplication
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_c: Option<f64>,
    // kernel_lorentz
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coeff_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validity_horizon: Option<usize>,
    // explicit
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<Vec<Vec<Vec<f64>>>>,
}

/// A chain together with the family parameters analyses may refer back to.
pub struct BuiltChain {
    pub spec: NdmcSpec,
    pub grid_params: Option<GridChainParams>,
    pub kernel_params: Option<KernelChainParams>,
}

impl ChainBlock {
    fn kernel_rule(&self) -> Result<CoeffRule> {
        if let (Some(a), Some(b)) = (&self.a, &self.b) {
            return Ok(CoeffRule::Table {
                a: a.clone(),
                b: b.clone(),
            });
        }
        match self.coeff_rule.as_deref() {
            None | Some("boundary") => Ok(CoeffRule::BoundaryScaled {
                scale: self.coeff_scale.unwrap_or(1.0),
            }),
            Some("zero") => Ok(CoeffRule::Zero),
            Some(other) => Err(Error::input(format!("unknown coeff_rule '{other}'"))),
        }
    }

    pub fn build(&self, space: Option<&SpaceDescriptor>, default_seed: u64) -> Result<BuiltChain> {
        let seed = self.seed.unwrap_or(default_seed);
        match self.family.as_str() {
            "grid_multiplication" => {
                let params = GridChainParams {
                    grid_size: self
                        .grid_size
                        .or_else(|| space.map(|s| s.dimension()))
                        .ok_or_else(|| Error::input("grid chains need `grid_size`"))?,
                    start_index: self.start_index.unwrap_or(1),
                    constant_c: self.constant_c.unwrap_or(0.25),
                };
                let spec = gallery::build_grid_chain(&params)?;
                if let Some(s) = space {
                    if s != spec.space() {
                        return Err(Error::input(
                            "space block conflicts with the grid chain's space",
                        ));
                    }
                }
                Ok(BuiltChain {
                    spec,
                    grid_params: Some(params),
                    kernel_params: None,
                })
            }
            "kernel_lorentz" => {
                let params = KernelChainParams {
                    p: self.p.unwrap_or(2.0),
                    quadrature_size: self.quadrature_size.unwrap_or(64),
                    coeff_rule: self.kernel_rule()?,
                    validity_horizon: self.validity_horizon.unwrap_or(64),
                };
                let spec = gallery::build_kernel_chain(&params)?;
                if let Some(s) = space {
                    if s != spec.space() {
                        return Err(Error::input(
                            "space block conflicts with the kernel chain's space",
                        ));
                    }
                }
                Ok(BuiltChain {
                    spec,
                    grid_params: None,
                    kernel_params: Some(params),
                })
            }
            "explicit" => {
                let space =
                    space.ok_or_else(|| Error::input("explicit chains need a space block"))?;
                let rows = self
                    .matrices
                    .as_ref()
                    .ok_or_else(|| Error::input("explicit chains need `matrices`"))?;
                if rows.is_empty() {
                    return Err(Error::input("`matrices` must be nonempty"));
                }
                let ops = rows
                    .iter()
                    .enumerate()
                    .map(|(i, m)| MarkovOperator::from_rows(space.clone(), m, format!("matrix{i}")))
                    .collect::<Result<Vec<_>>>()?;
                for op in &ops {
                    let cert = op.is_markov(1e-7)?;
                    if !cert.pass {
                        return Err(Error::input(format!(
                            "{} is not Markov (worst violation {:.3e})",
                            op.label(),
                            cert.worst_violation
                        )));
                    }
                }
                let spec = if ops.len() == 1 {
                    NdmcSpec::homogeneous(ops.into_iter().next().unwrap())
                } else {
                    NdmcSpec::cycle(ops, "explicit_cycle")?
                };
                Ok(BuiltChain {
                    spec,
                    grid_params: None,
                    kernel_params: None,
                })
            }
            family => {
                let dimension = self
                    .dimension
                    .or_else(|| space.map(|s| s.dimension()))
                    .ok_or_else(|| Error::input("gallery chains need `dimension`"))?;
                if let Some(s) = space {
                    if s.kind_name() != "simplex" || s.dimension() != dimension {
                        return Err(Error::input(
                            "gallery chains live on the simplex of the stated dimension",
                        ));
                    }
                }
                let item = gallery::matrix_gallery(family, dimension, seed)?;
                Ok(BuiltChain {
                    spec: item.into_chain(),
                    grid_params: None,
                    kernel_params: None,
                })
            }
        }
    }
}

/// Source of the minorant `z` for certificate checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZSource {
    Named(String),
    Coords(Vec<f64>),
}

impl ZSource {
    pub fn build(
        &self,
        space: &SpaceDescriptor,
        kernel_params: Option<&KernelChainParams>,
        k: usize,
        probes: &[Vector],
    ) -> Result<Vector> {
        match self {
            ZSource::Coords(coords) => space.vector(coords.clone()),
            ZSource::Named(name) => match name.as_str() {
                "kernel_minorant" => {
                    let params = kernel_params.ok_or_else(|| {
                        Error::input("`kernel_minorant` needs a kernel_lorentz chain")
                    })?;
                    gallery::kernel_minorant(params, k)
                }
                "constant_one" => space.vector(vec![1.0; space.dimension()]),
                "probe0" => probes
                    .first()
                    .cloned()
                    .ok_or_else(|| Error::input("`probe0` needs a nonempty probe set")),
                other => Err(Error::input(format!("unknown z source '{other}'"))),
            },
        }
    }
}

/// One analysis request. `kind` selects the analysis; the remaining fields
/// are per-kind parameters (validated at run time).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<ZSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<bool>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weak_pass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stall_floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vanish_tail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vanish_burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strong_agree: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_fallback: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_slack: Option<f64>,
}

impl TolerancesBlock {
    pub fn apply(&self, base: Thresholds) -> Thresholds {
        Thresholds {
            weak_pass: self.weak_pass.unwrap_or(base.weak_pass),
            stall_floor: self.stall_floor.unwrap_or(base.stall_floor),
            vanish_tail: self.vanish_tail.unwrap_or(base.vanish_tail),
            vanish_burn_in: self.vanish_burn_in.unwrap_or(base.vanish_burn_in),
            strong_agree: self.strong_agree.unwrap_or(base.strong_agree),
            uniform_gap: self.uniform_gap.unwrap_or(base.uniform_gap),
            singular_fallback: self.singular_fallback.unwrap_or(base.singular_fallback),
            cone_tol: self.cone_tol.unwrap_or(base.cone_tol),
            residual_slack: self.residual_slack.unwrap_or(base.residual_slack),
        }
    }

    /// Applies a `key=value` override (the CLI `--tol` flag).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let float = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::input(format!("`{value}` is not a number")))
        };
        match key {
            "weak_pass" => self.weak_pass = Some(float()?),
            "stall_floor" => self.stall_floor = Some(float()?),
            "vanish_tail" => self.vanish_tail = Some(float()?),
            "vanish_burn_in" => {
                self.vanish_burn_in = Some(
                    value
                        .parse()
                        .map_err(|_| Error::input(format!("`{value}` is not an integer")))?,
                )
            }
            "strong_agree" => self.strong_agree = Some(float()?),
            "uniform_gap" => self.uniform_gap = Some(float()?),
            "singular_fallback" => self.singular_fallback = Some(float()?),
            "cone_tol" => self.cone_tol = Some(float()?),
            "residual_slack" => self.residual_slack = Some(float()?),
            other => return Err(Error::input(format!("unknown tolerance '{other}'"))),
        }
        Ok(())
    }
}

/// Parse failure with source position.
#[derive(Debug)]
pub struct ParseFailure {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

pub fn parse_scenario(text: &str) -> std::result::Result<Scenario, ParseFailure> {
    toml::from_str::<Scenario>(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| position_of(text, span.start))
            .unwrap_or((0, 0));
        ParseFailure {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

fn position_of(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut column = 1;
    for (i, ch) in text.char_indices() {
        if i >= offset {
            break;
        }
        if ch == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_scenario_parses() {
        let text = r#"
seed = 7

[chain]
family = "random_stochastic"
dimension = 3

[[analyses]]
kind = "uniform"
n_max = 20
"#;
        let scenario = parse_scenario(text).unwrap();
        assert_eq!(scenario.seed, 7);
        let built = scenario.chain.build(None, scenario.seed).unwrap();
        assert_eq!(built.spec.space().dimension(), 3);
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = r#"
[chain]
family = "random_stochastic"
dimension = 3
surprise = 1

[[analyses]]
kind = "uniform"
n_max = 20
"#;
        let failure = parse_scenario(text).unwrap_err();
        assert!(failure.line > 0);
        assert!(failure.message.contains("surprise") || !failure.message.is_empty());
    }

    #[test]
    fn scenario_echo_round_trips() {
        let text = r#"
seed = 3

[space]
kind = "simplex"
dimension = 4

[chain]
family = "explicit"
matrices = [[[0.9, 0.2], [0.1, 0.8]]]

[[analyses]]
kind = "weak"
ks = [0]
n_max = 30
"#;
        let scenario = parse_scenario(text).unwrap();
        let echoed = toml::to_string(&scenario).unwrap();
        let reparsed = parse_scenario(&echoed).unwrap();
        assert_eq!(reparsed.seed, 3);
        assert_eq!(reparsed.analyses.len(), 1);
    }
}
