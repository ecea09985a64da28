//! Scenario files: graph, prices, content, deposits and corruptions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parties::{Behavior, DeliveryMode, PartyRef, Phase};
use crate::Amount;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mode: DeliveryMode,
    pub content: ContentConfig,
    /// Price `B_m` the customer pays the provider.
    pub price: Amount,
    pub b_max: Amount,
    #[serde(default)]
    pub slash_bps: u32,
    pub paths: Vec<PathConfig>,
    #[serde(default)]
    pub funding: FundingConfig,
    #[serde(default)]
    pub adversary: Vec<Corruption>,
    /// Optional 32-byte hex key seeds, by party name.
    #[serde(default)]
    pub keys: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentConfig {
    pub chunk_size: usize,
    pub chunk_count: u32,
    /// Content length in bytes; defaults to `chunk_size × chunk_count`.
    #[serde(default)]
    pub length: Option<usize>,
}

impl ContentConfig {
    pub fn len(&self) -> usize {
        self.length.unwrap_or(self.chunk_size * self.chunk_count as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    /// Fee of each relayer, first hop first.
    pub fees: Vec<Amount>,
    /// Chunk ids carried by this path (1-based).
    pub job: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FundingConfig {
    /// On-ledger deposit of every party; defaults to `b_max`.
    #[serde(default)]
    pub deposit: Option<Amount>,
    /// Extra balance on every paying channel end.
    #[serde(default)]
    pub slack: Amount,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Corruption {
    pub party: PartyRef,
    pub behavior: Behavior,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

impl ScenarioConfig {
    pub fn from_toml(s: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let s = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.paths.iter().map(|p| p.fees.len()).collect()
    }

    pub fn behavior_of(&self, p: PartyRef) -> Behavior {
        self.adversary
            .iter()
            .find(|c| c.party == p)
            .map_or(Behavior::Honest, |c| c.behavior.clone())
    }

    /// C, P, then relayers path by path.
    pub fn parties(&self) -> Vec<PartyRef> {
        let mut out = vec![PartyRef::Customer, PartyRef::Provider];
        for (path, p) in self.paths.iter().enumerate() {
            out.extend((1..=p.fees.len()).map(|hop| PartyRef::Relayer { path, hop }));
        }
        out
    }

    /// Every deviation `p` may take in this graph. Wormhole partners range
    /// over the other relayers on the same path.
    pub fn behavior_library(&self, p: PartyRef) -> Vec<Behavior> {
        let mut out: Vec<Behavior> = Phase::ALL.iter().map(|&phase| Behavior::SilentAt { phase }).collect();
        match p {
            PartyRef::Customer => {}
            PartyRef::Provider => out.extend([
                Behavior::WrongSecret,
                Behavior::GarbageEncrypt { chunk: None },
                Behavior::WrongMask,
            ]),
            PartyRef::Relayer { path, hop } => {
                out.extend([
                    Behavior::WrongSecret,
                    Behavior::GarbageEncrypt { chunk: None },
                    Behavior::WithholdUnlock,
                    Behavior::WrongMask,
                    Behavior::StallReceipt,
                ]);
                for other in (1..=self.paths[path].fees.len()).filter(|&h| h != hop) {
                    for answer_judge in [true, false] {
                        out.push(Behavior::WormholeCollude {
                            partner: PartyRef::Relayer { path, hop: other },
                            answer_judge,
                        });
                    }
                }
            }
        }
        out
    }

    pub fn party_exists(&self, p: PartyRef) -> bool {
        match p {
            PartyRef::Customer | PartyRef::Provider => true,
            PartyRef::Relayer { path, hop } => self.paths.get(path).is_some_and(|x| hop <= x.fees.len()),
        }
    }

    pub fn deposit(&self) -> Amount {
        self.funding.deposit.unwrap_or(self.b_max)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.content;
        if c.chunk_size == 0 || c.chunk_count == 0 {
            return invalid("content needs at least one non-empty chunk");
        }
        let full = c.chunk_size * c.chunk_count as usize;
        if c.len() > full || c.len() <= full - c.chunk_size {
            return invalid(format!("content length {} does not fit {} chunks of {}", c.len(), c.chunk_count, c.chunk_size));
        }
        if self.paths.is_empty() {
            return invalid("at least one path is required");
        }
        if self.mode == DeliveryMode::SinglePath && self.paths.len() != 1 {
            return invalid("single-path mode takes exactly one path");
        }
        if self.paths.iter().filter(|p| p.fees.is_empty()).count() > 1 {
            return invalid("at most one path may connect provider and customer directly");
        }
        let mut seen = BTreeSet::new();
        for (k, p) in self.paths.iter().enumerate() {
            if p.job.is_empty() {
                return invalid(format!("path {} carries no chunks", k + 1));
            }
            if !p.job.windows(2).all(|w| w[0] < w[1]) {
                return invalid(format!("path {} job must be strictly ascending", k + 1));
            }
            for id in &p.job {
                if *id == 0 || *id > c.chunk_count || !seen.insert(*id) {
                    return invalid(format!("chunk {id} is out of range or assigned twice"));
                }
            }
        }
        if seen.len() != c.chunk_count as usize {
            return invalid("jobs must cover every chunk");
        }
        if self.price >= self.b_max {
            return invalid("price must be below b_max");
        }
        let fees: Amount = self.paths.iter().flat_map(|p| &p.fees).sum();
        if fees > self.price {
            return invalid("relay fees exceed the price");
        }
        if self.deposit() < self.b_max {
            return invalid("deposits must cover b_max");
        }
        if self.slash_bps > 10_000 {
            return invalid("slash_bps is at most 10000");
        }

        let mut corrupted = BTreeSet::new();
        for cor in &self.adversary {
            let p = cor.party;
            if !self.party_exists(p) {
                return invalid(format!("corrupted party {p} is not in the graph"));
            }
            if !corrupted.insert(p) {
                return invalid(format!("{p} is corrupted twice"));
            }
            let ok = match (&p, &cor.behavior) {
                (_, Behavior::Honest | Behavior::SilentAt { .. }) => true,
                (PartyRef::Customer, _) => false,
                (
                    PartyRef::Provider,
                    Behavior::WrongSecret | Behavior::GarbageEncrypt { .. } | Behavior::WrongMask,
                ) => true,
                (PartyRef::Provider, _) => false,
                (PartyRef::Relayer { .. }, _) => true,
            };
            if !ok {
                return invalid(format!("{p} cannot take behavior {:?}", cor.behavior));
            }
            if let Behavior::WormholeCollude { partner, .. } = cor.behavior {
                let (PartyRef::Relayer { path, hop }, PartyRef::Relayer { path: pk, hop: ph }) = (p, partner) else {
                    return invalid("wormhole partners must be relayers");
                };
                if path != pk || hop == ph || !self.party_exists(partner) {
                    return invalid(format!("{p} and {partner} are not two relayers on one path"));
                }
            }
        }
        for (name, hex_seed) in &self.keys {
            let p: PartyRef = name.parse().map_err(ConfigError::Invalid)?;
            if !self.party_exists(p) {
                return invalid(format!("key for unknown party {p}"));
            }
            match hex::decode(hex_seed) {
                Ok(b) if b.len() == 32 => {}
                _ => return invalid(format!("key seed for {p} must be 32 hex bytes")),
            }
        }
        Ok(())
    }
}
