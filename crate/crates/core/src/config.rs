//! Group configuration files: a catalog constructor with its parameters,
//! or a hand-written family, plus computation caps.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::catalog::{self, Family, SpinalData};
use crate::error::Result;
use crate::family::FamilySpec;
use crate::group::Group;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GroupKind {
    Spinal(SpinalData),
    GrigorchukP {
        p: u32,
        #[serde(default)]
        k_preperiod: Vec<u32>,
        k_period: Vec<u32>,
    },
    Sunic {
        p: u32,
        m: usize,
        #[serde(default)]
        a_coeffs: Vec<u32>,
    },
    Ggs {
        degree: usize,
        epsilon: Vec<u32>,
    },
    #[serde(rename = "nekrashevych_D")]
    NekrashevychD {
        #[serde(default)]
        bits_preperiod: Vec<u8>,
        bits_period: Vec<u8>,
    },
    Neumann6,
    Custom(FamilySpec),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Caps {
    pub max_radius: u32,
    /// Element cap per level class.
    pub max_elements: usize,
    /// Depth `K` of the incompressibility filtration.
    pub max_level_depth: u32,
    /// Work budget for word-problem searches.
    pub identity_budget: usize,
}

impl Default for Caps {
    fn default() -> Caps {
        Caps { max_radius: 8, max_elements: 1_000_000, max_level_depth: 6, identity_budget: crate::tree::DEFAULT_BUDGET }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupConfig {
    #[serde(flatten)]
    pub group: GroupKind,
    #[serde(default)]
    pub caps: Caps,
}

impl GroupConfig {
    pub fn new(group: GroupKind) -> GroupConfig {
        GroupConfig { group, caps: Caps::default() }
    }

    pub fn from_json(text: &str) -> Result<GroupConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<GroupConfig> {
        GroupConfig::from_json(&std::fs::read_to_string(path)?)
    }

    /// The family, before validation.
    pub fn family(&self) -> Result<Family> {
        match &self.group {
            GroupKind::Spinal(data) => catalog::spinal(data.clone()),
            GroupKind::GrigorchukP { p, k_preperiod, k_period } => catalog::grigorchuk_p(*p, k_preperiod, k_period),
            GroupKind::Sunic { p, m, a_coeffs } => catalog::sunic(*p, *m, a_coeffs),
            GroupKind::Ggs { degree, epsilon } => catalog::ggs(*degree, epsilon),
            GroupKind::NekrashevychD { bits_preperiod, bits_period } => catalog::nekrashevych(bits_preperiod, bits_period),
            GroupKind::Neumann6 => Ok(catalog::neumann6()),
            GroupKind::Custom(spec) => Ok(Family { spec: spec.clone(), spinal: None }),
        }
    }

    pub fn build(&self) -> Result<Arc<Group>> {
        self.family()?.build()
    }

    /// Hex SHA-256 of the canonical JSON form: object keys sorted, no
    /// whitespace. Any change to any field changes the hash.
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("configs always serialize");
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}
