//! Instance, solution and report file schemas.
//!
//! Instances are JSON documents with a required `kind` field. Generator
//! kinds carry their parameters inline; `composed` wraps a base instance
//! plus a named reduction chain, replayed lazily at query time when the
//! file is loaded. Unknown kinds and unknown fields are rejected.

use crate::error::{Error, Result};
use crate::oracles::{
    make_piecewise_cake, make_quasilinear_market, make_weighted_argmax_rkkm, DensitySegment,
    Instance, SpernerInstance, SpernerVariant,
};
use crate::reductions::{self, Reduction};
use crate::solution::SolutionPoint;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Parsed form of an instance file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InstanceSpec {
    HousingQuasilinear {
        values: Vec<Vec<f64>>,
    },
    KkmWeightedArgmax {
        weights: Vec<f64>,
    },
    CakePiecewise {
        densities: Vec<Vec<DensitySegment>>,
    },
    SpernerTriangle {
        size: u32,
        colors: Vec<u8>,
    },
    SpernerCube {
        dim: usize,
        size: u32,
        colors: Vec<u8>,
    },
    Composed {
        base: Box<InstanceSpec>,
        chain: Vec<ChainLink>,
    },
}

/// One recorded reduction application. `epsilon` is always the ε the
/// *source* side is to be solved for; the target parameter is derived.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "reduction", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainLink {
    LiftMarket { epsilon: f64 },
    Sparsify { epsilon: f64 },
    HousingToRkkm { epsilon: f64 },
    RkkmToHousing { epsilon: f64 },
    CakeToRkkm { epsilon: f64 },
    Sperner2dToKkm,
    KkmToRkkm { epsilon: f64 },
    RkkmToSperner { epsilon: f64 },
}

impl ChainLink {
    pub fn name(&self) -> &'static str {
        match self {
            ChainLink::LiftMarket { .. } => "lift-market",
            ChainLink::Sparsify { .. } => "sparsify",
            ChainLink::HousingToRkkm { .. } => "housing-to-rkkm",
            ChainLink::RkkmToHousing { .. } => "rkkm-to-housing",
            ChainLink::CakeToRkkm { .. } => "cake-to-rkkm",
            ChainLink::Sperner2dToKkm => "sperner2d-to-kkm",
            ChainLink::KkmToRkkm { .. } => "kkm-to-rkkm",
            ChainLink::RkkmToSperner { .. } => "rkkm-to-sperner",
        }
    }
}

/// A built instance together with the reductions that produced it (empty
/// for plain generators), ordered from the base outwards.
pub struct BuiltInstance {
    pub instance: Instance,
    pub reductions: Vec<Reduction>,
}

impl BuiltInstance {
    /// ε the final instance should be solved at, when the chain pins one.
    pub fn induced_epsilon(&self) -> Option<f64> {
        self.reductions.last().and_then(|r| r.target_epsilon)
    }
}

/// Build oracles from a parsed instance file.
pub fn build_instance(spec: &InstanceSpec) -> Result<BuiltInstance> {
    match spec {
        InstanceSpec::HousingQuasilinear { values } => Ok(BuiltInstance {
            instance: Instance::Housing(make_quasilinear_market(values)?),
            reductions: Vec::new(),
        }),
        InstanceSpec::KkmWeightedArgmax { weights } => Ok(BuiltInstance {
            instance: Instance::Rkkm(make_weighted_argmax_rkkm(weights)?),
            reductions: Vec::new(),
        }),
        InstanceSpec::CakePiecewise { densities } => Ok(BuiltInstance {
            instance: Instance::Cake(make_piecewise_cake(densities)?),
            reductions: Vec::new(),
        }),
        InstanceSpec::SpernerTriangle { size, colors } => Ok(BuiltInstance {
            instance: Instance::Sperner(SpernerInstance::triangle_from_colors(
                *size,
                colors.clone(),
            )?),
            reductions: Vec::new(),
        }),
        InstanceSpec::SpernerCube { dim, size, colors } => Ok(BuiltInstance {
            instance: Instance::Sperner(SpernerInstance::cube_from_colors(
                *dim,
                *size,
                colors.clone(),
            )?),
            reductions: Vec::new(),
        }),
        InstanceSpec::Composed { base, chain } => {
            let mut built = build_instance(base)?;
            for link in chain {
                let (next, red) = apply_link(&built.instance, link)?;
                built.instance = next;
                built.reductions.push(red);
            }
            Ok(built)
        }
    }
}

/// Apply one named reduction to an instance of the matching kind.
pub fn apply_link(inst: &Instance, link: &ChainLink) -> Result<(Instance, Reduction)> {
    match (inst, link) {
        (Instance::Housing(h), ChainLink::LiftMarket { epsilon }) => {
            let (t, r) = reductions::lift_market(h, *epsilon)?;
            Ok((Instance::Housing(t), r))
        }
        (Instance::Housing(h), ChainLink::HousingToRkkm { epsilon }) => {
            let (t, r) = reductions::housing_to_rkkm(h, *epsilon)?;
            Ok((Instance::Rkkm(t), r))
        }
        (Instance::Rkkm(rk), ChainLink::Sparsify { epsilon }) => {
            let (t, r) = reductions::sparsify(rk, *epsilon)?;
            Ok((Instance::Rkkm(t), r))
        }
        (Instance::Rkkm(rk), ChainLink::RkkmToHousing { epsilon }) => {
            let (t, r) = reductions::rkkm_to_housing(rk, *epsilon)?;
            Ok((Instance::Housing(t), r))
        }
        (Instance::Rkkm(rk), ChainLink::RkkmToSperner { epsilon }) => {
            let (t, r) = reductions::rkkm_to_sperner(rk, *epsilon)?;
            Ok((Instance::Sperner(t), r))
        }
        (Instance::Cake(c), ChainLink::CakeToRkkm { epsilon }) => {
            let (t, r) = reductions::cake_to_rkkm(c, *epsilon)?;
            Ok((Instance::Rkkm(t), r))
        }
        (Instance::Sperner(s), ChainLink::Sperner2dToKkm) => {
            let (t, r) = reductions::sperner2d_to_kkm(s)?;
            Ok((Instance::Kkm(t), r))
        }
        (Instance::Kkm(k), ChainLink::KkmToRkkm { epsilon }) => {
            let (t, r) = reductions::kkm_to_rkkm(k, *epsilon)?;
            Ok((Instance::Rkkm(t), r))
        }
        _ => Err(Error::NoSuchReduction(inst.kind_name().to_string(), link.name().to_string())),
    }
}

/// Plan the reduction chain from an instance's kind to a target kind.
/// `epsilon` seeds the source-side parameter where one is needed.
pub fn plan_chain(inst: &Instance, to: &str, epsilon: Option<f64>) -> Result<Vec<ChainLink>> {
    let from = inst.kind_name();
    let need_eps = || epsilon.ok_or(Error::EpsilonRange(f64::NAN));
    match (inst, to) {
        (Instance::Housing(_), "housing") => Ok(vec![ChainLink::LiftMarket { epsilon: need_eps()? }]),
        (Instance::Housing(_), "rkkm") => {
            Ok(vec![ChainLink::HousingToRkkm { epsilon: need_eps()? }])
        }
        (Instance::Rkkm(r), "housing") => {
            let eps = need_eps()?;
            if r.is_sparse() {
                Ok(vec![ChainLink::RkkmToHousing { epsilon: eps }])
            } else {
                Ok(vec![
                    ChainLink::Sparsify { epsilon: eps },
                    ChainLink::RkkmToHousing { epsilon: eps / 2.0 },
                ])
            }
        }
        (Instance::Rkkm(r), "sperner-cube") => {
            let eps = need_eps()?;
            if r.is_sparse() {
                Ok(vec![ChainLink::RkkmToSperner { epsilon: eps }])
            } else {
                Ok(vec![
                    ChainLink::Sparsify { epsilon: eps },
                    ChainLink::RkkmToSperner { epsilon: eps / 2.0 },
                ])
            }
        }
        (Instance::Cake(_), "rkkm") => Ok(vec![ChainLink::CakeToRkkm { epsilon: need_eps()? }]),
        (Instance::Sperner(s), to) if matches!(s.variant(), SpernerVariant::Triangle { .. }) => {
            let SpernerVariant::Triangle { size } = s.variant() else { unreachable!() };
            let kkm_eps = 0.125;
            match to {
                "kkm" => Ok(vec![ChainLink::Sperner2dToKkm]),
                "rkkm" => Ok(vec![
                    ChainLink::Sperner2dToKkm,
                    ChainLink::KkmToRkkm { epsilon: kkm_eps },
                ]),
                "housing" => Ok(vec![
                    ChainLink::Sperner2dToKkm,
                    ChainLink::KkmToRkkm { epsilon: kkm_eps },
                    ChainLink::RkkmToHousing { epsilon: kkm_eps / size as f64 },
                ]),
                _ => Err(Error::NoSuchReduction(from.into(), to.into())),
            }
        }
        (Instance::Kkm(_), "rkkm") => Ok(vec![ChainLink::KkmToRkkm { epsilon: need_eps()? }]),
        _ => Err(Error::NoSuchReduction(from.into(), to.into())),
    }
}

/// Wrap a base spec and a chain into a composed spec (or return the base
/// when the chain is empty).
pub fn compose_spec(base: InstanceSpec, chain: Vec<ChainLink>) -> InstanceSpec {
    if chain.is_empty() {
        base
    } else {
        InstanceSpec::Composed { base: Box::new(base), chain }
    }
}

pub fn parse_instance(json: &str) -> Result<InstanceSpec> {
    serde_json::from_str(json).map_err(|e| Error::Format(e.to_string()))
}

pub fn instance_to_json(spec: &InstanceSpec) -> String {
    serde_json::to_string_pretty(spec).expect("instance specs serialize")
}

/// Body of a solution file: point problems carry a point, Sperner problems
/// carry the panchromatic cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum SolutionBody {
    Point {
        point: SolutionPoint,
        perm: Vec<usize>,
        witnesses: Vec<Vec<f64>>,
        epsilon_achieved: f64,
    },
    Cell {
        anchor: Vec<u32>,
        perm: Vec<usize>,
        vertices: Vec<Vec<u32>>,
        labels: Vec<u8>,
        colors: Vec<u8>,
    },
}

/// On-disk solution record.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionFile {
    pub problem: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_requested: Option<f64>,
    pub seed: u64,
    #[serde(flatten)]
    pub body: SolutionBody,
    pub queries: BTreeMap<String, u64>,
    pub total_queries: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

pub fn parse_solution(json: &str) -> Result<SolutionFile> {
    serde_json::from_str(json).map_err(|e| Error::Format(e.to_string()))
}
