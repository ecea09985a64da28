use thiserror::Error;

use super::EncCommitment;
use crate::crypto::{open, CommitmentValue, PublicKey, Signature, SIG_LEN};

/// The part of an encryption commitment that travels with a chunk.
///
/// `h_m` equals the previous layer's `h_c` (or the chunk commitment for layer
/// 0), `h_sk` was announced in setup and the chunk id is implied by delivery
/// order, so only `h_c` and the signature go on the wire.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainLink {
    pub h_c: CommitmentValue,
    pub sig: Signature,
}

impl ChainLink {
    /// Accounted wire size: one hash plus one signature.
    pub const ACCOUNTED_LEN: usize = crate::crypto::HASH_LEN + SIG_LEN;

    pub fn of(com: &EncCommitment) -> Self {
        ChainLink {
            h_c: com.h_c,
            sig: com.sig,
        }
    }
}

/// Rebuilds full commitments from compact links.
pub fn expand_chain(
    links: &[ChainLink],
    chunk_commitment: &CommitmentValue,
    key_commitments: &[CommitmentValue],
    id: u32,
) -> Result<Vec<EncCommitment>, ChainError> {
    if links.len() != key_commitments.len() {
        return Err(ChainError::LengthMismatch {
            links: links.len(),
            committers: key_commitments.len(),
        });
    }
    let mut h_m = *chunk_commitment;
    let mut out = Vec::with_capacity(links.len());
    for (link, h_sk) in links.iter().zip(key_commitments) {
        out.push(EncCommitment {
            h_m,
            h_c: link.h_c,
            h_sk: *h_sk,
            id,
            sig: link.sig,
        });
        h_m = link.h_c;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("commitment chain is empty")]
    Empty,
    #[error("{links} links for {committers} committers")]
    LengthMismatch { links: usize, committers: usize },
    #[error("final ciphertext does not open the last h_c")]
    FinalCiphertext,
    #[error("layer 0 does not commit to the announced chunk")]
    WrongChunk,
    #[error("layer {0} h_m does not equal the previous layer h_c")]
    BrokenLink(usize),
    #[error("layer {0} is for another chunk id")]
    WrongId(usize),
    #[error("layer {0} h_sk differs from the one announced in setup")]
    WrongKeyCommitment(usize),
    #[error("layer {0} signature is invalid")]
    BadSignature(usize),
}

/// Checks a delivered tuple `(c_n, com^0..com^n)` for chunk `id`.
///
/// `signers[i]` and `key_commitments[i]` belong to the committer of layer `i`.
pub fn validate_tuple(
    c_n: &[u8],
    chain: &[EncCommitment],
    signers: &[PublicKey],
    key_commitments: &[CommitmentValue],
    chunk_commitment: &CommitmentValue,
    id: u32,
) -> Result<(), ChainError> {
    let last = chain.last().ok_or(ChainError::Empty)?;
    if chain.len() != signers.len() || chain.len() != key_commitments.len() {
        return Err(ChainError::LengthMismatch {
            links: chain.len(),
            committers: signers.len().min(key_commitments.len()),
        });
    }
    if !open(c_n, &last.h_c) {
        return Err(ChainError::FinalCiphertext);
    }
    if chain[0].h_m != *chunk_commitment {
        return Err(ChainError::WrongChunk);
    }
    for (i, com) in chain.iter().enumerate() {
        if i > 0 && chain[i - 1].h_c != com.h_m {
            return Err(ChainError::BrokenLink(i));
        }
        if com.id != id {
            return Err(ChainError::WrongId(i));
        }
        if com.h_sk != key_commitments[i] {
            return Err(ChainError::WrongKeyCommitment(i));
        }
        if !com.verify_signature(&signers[i]) {
            return Err(ChainError::BadSignature(i));
        }
    }
    Ok(())
}
