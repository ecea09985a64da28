//! Party identifiers, rounds and the public-key directory.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::crypto::PublicKey;

/// Index of a synchronous round. Round 0 precedes the protocol run.
pub type Round = u64;

/// Integer token amount.
pub type Amount = u64;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartyId(pub u32);

impl PartyId {
    /// Sink account that receives slashed deposits.
    pub const BURN: PartyId = PartyId(u32::MAX);
}

impl fmt::Debug for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

impl fmt::Display for PartyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Public key registry, the PKI every party and the judge consult.
#[derive(Clone, Debug, Default)]
pub struct Directory {
    keys: BTreeMap<PartyId, PublicKey>,
    by_key: BTreeMap<PublicKey, PartyId>,
}

impl Directory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: PartyId, pk: PublicKey) {
        if let Some(old) = self.keys.insert(id, pk.clone()) {
            self.by_key.remove(&old);
        }
        self.by_key.insert(pk, id);
    }

    pub fn key(&self, id: PartyId) -> Option<&PublicKey> {
        self.keys.get(&id)
    }

    pub fn party(&self, pk: &PublicKey) -> Option<PartyId> {
        self.by_key.get(pk).copied()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }
}
