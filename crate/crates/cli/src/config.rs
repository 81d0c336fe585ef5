//! JSON configuration documents for `simulate` and `objective-sweep`.

use std::path::Path;

use imflow_core::channels::{bit_flip_noise, symmetric_noise, toy_joint};
use imflow_core::{
    make_pattern_channel, Axis, Candidate, Channel, DeterministicChannel, InfoQuantities, JointTable, PatternKind,
    Scenario, StochasticChannel,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum JointSpec {
    /// X uniform on {0, 1, 2, 3}, Y its high bit.
    Toy,
    Explicit {
        cells: Vec<CellSpec>,
    },
    /// `classes * class_size` equiprobable symbols, Y = x / class_size.
    UniformAdditive {
        classes: u32,
        class_size: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub x: u32,
    pub y: u32,
    pub mass: f64,
}

impl JointSpec {
    pub fn build(&self) -> Result<JointTable> {
        Ok(match self {
            JointSpec::Toy => toy_joint(),
            JointSpec::Explicit { cells } => {
                JointTable::from_masses(vec![Axis::X, Axis::Y], cells.iter().map(|c| (vec![c.x, c.y], c.mass)))?
            }
            JointSpec::UniformAdditive { classes, class_size } => {
                if *classes == 0 || *class_size == 0 {
                    return Err(CliError::Input("classes and class_size must be positive".into()));
                }
                JointTable::from_masses(
                    vec![Axis::X, Axis::Y],
                    (0..classes * class_size).map(|x| (vec![x, x / class_size], 1.0)),
                )?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChannelSpec {
    Pattern {
        pattern: PatternKind,
    },
    Mapping {
        mapping: Vec<u32>,
        #[serde(default)]
        output_size: Option<u32>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    BitFlip {
        p: f64,
    },
    Symmetric {
        p: f64,
    },
    /// Explicit offset masses; the length sets the output alphabet.
    Masses {
        masses: Vec<f64>,
    },
}

pub fn build_channel(joint: &JointTable, channel: &ChannelSpec, noise: Option<&NoiseSpec>) -> Result<Channel> {
    let base = match channel {
        ChannelSpec::Pattern { pattern } => make_pattern_channel(*pattern, joint)?,
        ChannelSpec::Mapping {
            mapping,
            output_size: Some(k),
        } => DeterministicChannel::new(mapping.clone(), *k)?,
        ChannelSpec::Mapping {
            mapping,
            output_size: None,
        } => DeterministicChannel::from_mapping(mapping.clone())?,
    };
    let Some(noise) = noise else {
        return Ok(base.into());
    };
    let k = base.output_size().max(2);
    let masses = match noise {
        NoiseSpec::BitFlip { p } => bit_flip_noise(k, *p)?,
        NoiseSpec::Symmetric { p } => symmetric_noise(k, *p)?,
        NoiseSpec::Masses { masses } => masses.clone(),
    };
    Ok(StochasticChannel::new(base, masses)?.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub joint: JointSpec,
    pub channel: ChannelSpec,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Number of samples to draw and analyze alongside the exact joint.
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl SimulateConfig {
    pub fn scenario(&self) -> Result<Scenario> {
        let joint = self.joint.build()?;
        let channel = build_channel(&joint, &self.channel, self.noise.as_ref())?;
        let name = self.name.clone().unwrap_or_else(|| "scenario".into());
        Ok(Scenario::new(name, joint, channel)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CandidateSpec {
    Channel {
        name: String,
        channel: ChannelSpec,
        #[serde(default)]
        noise: Option<NoiseSpec>,
    },
    Quantities {
        name: String,
        quantities: InfoQuantities,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatesConfig {
    /// Shared source/target joint for channel candidates.
    #[serde(default)]
    pub joint: Option<JointSpec>,
    pub candidates: Vec<CandidateSpec>,
}

impl CandidatesConfig {
    pub fn build(&self) -> Result<Vec<Candidate>> {
        if self.candidates.is_empty() {
            return Err(CliError::Input("candidate list is empty".into()));
        }
        let joint = self.joint.as_ref().map(JointSpec::build).transpose()?;
        let mut out: Vec<Candidate> = Vec::with_capacity(self.candidates.len());
        for spec in &self.candidates {
            let candidate = match spec {
                CandidateSpec::Quantities { name, quantities } => Candidate::new(name.clone(), *quantities),
                CandidateSpec::Channel { name, channel, noise } => {
                    let joint = joint
                        .as_ref()
                        .ok_or_else(|| CliError::Input(format!("candidate {name:?} needs a shared \"joint\"")))?;
                    let channel = build_channel(joint, channel, noise.as_ref())?;
                    let q = Scenario::new(name.clone(), joint.clone(), channel)?.quantities()?;
                    Candidate::new(name.clone(), q)
                }
            };
            if out.iter().any(|c| c.name == candidate.name) {
                return Err(CliError::Input(format!("duplicate candidate {:?}", candidate.name)));
            }
            out.push(candidate);
        }
        Ok(out)
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}
