//! Mask and encryption commitments, misbehavior proofs, chain validation and
//! the customer-side key and content extraction.

mod chain;
mod enc;
mod extract;
mod mask;

pub use chain::{expand_chain, validate_tuple, ChainError, ChainLink};
pub use enc::{
    ecom_gen, ecom_gen_linked, ecom_ver, pome_gen, pome_ver, pome_ver_with, EncCommitment,
    PoMEProof, PomeStatement, PomeVerifier, PomeWitness, TransparentVerifier,
};
pub use extract::{
    ext_key, extract, ContentExtraction, DeliveredChunk, ExtractError, KeyExtraction,
};
pub use mask::{mcom_gen, mcom_ver, pomm_gen, pomm_ver, MaskCommitment, PoMMProof};

use thiserror::Error;

/// Where a committer sits in a delivery graph.
///
/// `hop` is 1-based, so on every path the layer index of a relayer equals its
/// hop and the provider is layer 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    Provider,
    Relayer { path: usize, hop: usize },
}

impl Position {
    pub fn layer(&self) -> usize {
        match self {
            Position::Provider => 0,
            Position::Relayer { hop, .. } => *hop,
        }
    }
}

/// One value for the provider and one per relayer on each path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layered<T> {
    pub provider: T,
    pub paths: Vec<Vec<T>>,
}

impl<T> Layered<T> {
    pub fn get(&self, pos: Position) -> Option<&T> {
        match pos {
            Position::Provider => Some(&self.provider),
            Position::Relayer { path, hop } => self.paths.get(path)?.get(hop.checked_sub(1)?),
        }
    }

    /// Committer of `layer` on path `path`.
    pub fn at_layer(&self, path: usize, layer: usize) -> Option<&T> {
        if layer == 0 {
            Some(&self.provider)
        } else {
            self.get(Position::Relayer { path, hop: layer })
        }
    }

    /// Provider first, then paths ascending, hops ascending.
    pub fn iter(&self) -> impl Iterator<Item = (Position, &T)> {
        std::iter::once((Position::Provider, &self.provider)).chain(
            self.paths.iter().enumerate().flat_map(|(k, p)| {
                p.iter()
                    .enumerate()
                    .map(move |(i, v)| (Position::Relayer { path: k, hop: i + 1 }, v))
            }),
        )
    }

    pub fn map<U>(&self, mut f: impl FnMut(Position, &T) -> U) -> Layered<U> {
        Layered {
            provider: f(Position::Provider, &self.provider),
            paths: self
                .paths
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    p.iter()
                        .enumerate()
                        .map(|(i, v)| f(Position::Relayer { path: k, hop: i + 1 }, v))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn try_map<U, E>(
        &self,
        mut f: impl FnMut(Position, &T) -> Result<U, E>,
    ) -> Result<Layered<U>, E> {
        let provider = f(Position::Provider, &self.provider)?;
        let mut paths = Vec::with_capacity(self.paths.len());
        for (k, p) in self.paths.iter().enumerate() {
            let mut out = Vec::with_capacity(p.len());
            for (i, v) in p.iter().enumerate() {
                out.push(f(Position::Relayer { path: k, hop: i + 1 }, v)?);
            }
            paths.push(out);
        }
        Ok(Layered { provider, paths })
    }

    pub fn shape(&self) -> Vec<usize> {
        self.paths.iter().map(Vec::len).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PomError {
    #[error("the committer behaved honestly; there is nothing to prove")]
    CommitterHonest,
    #[error("revealed secret does not open the committed h_s")]
    SecretMismatch,
    #[error("witness does not open the committed values")]
    WitnessMismatch,
}
