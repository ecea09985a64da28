use std::collections::BTreeMap;

use thiserror::Error;

use super::{pomm_gen, EncCommitment, Layered, MaskCommitment, PoMEProof, PoMMProof, Position};
use crate::crypto::{open, PublicKey, Secret, SymKey, SECRET_LEN};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("inputs disagree on the graph shape")]
    ShapeMismatch,
    #[error("secret for {0:?} does not open its h_s")]
    SecretMismatch(Position),
    #[error("chunk {id} on path {path} carries {got} layers, expected {expected}")]
    ChainLength {
        path: usize,
        id: u32,
        got: usize,
        expected: usize,
    },
    #[error("chunk {0} delivered more than once")]
    DuplicateChunk(u32),
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum KeyExtraction {
    Keys(Layered<SymKey>),
    Misbehavior {
        position: Position,
        tid: PublicKey,
        proof: PoMMProof,
    },
}

/// Unmasks every key, scanning the provider first, then paths and hops in
/// ascending order. The first mask that does not unmask to its `h_sk` yields a
/// PoMM against its signer.
pub fn ext_key(
    secrets: &Layered<Secret>,
    masks: &Layered<MaskCommitment>,
    signers: &Layered<PublicKey>,
) -> Result<KeyExtraction, ExtractError> {
    if secrets.shape() != masks.shape() || masks.shape() != signers.shape() {
        return Err(ExtractError::ShapeMismatch);
    }
    let mut keys = Vec::new();
    for ((pos, s), (_, mask)) in secrets.iter().zip(masks.iter()) {
        if !open(&s.0, &mask.h_s) {
            return Err(ExtractError::SecretMismatch(pos));
        }
        let mut skb = [0u8; SECRET_LEN];
        for (i, b) in skb.iter_mut().enumerate() {
            *b = mask.ck[i] ^ s.0[i];
        }
        if open(&skb, &mask.h_sk) {
            keys.push(SymKey::from_bytes(&skb).expect("fixed length"));
        } else {
            let pk = signers.get(pos).expect("same shape");
            let (tid, proof) = pomm_gen(mask, pk, s).expect("checked both conditions");
            return Ok(KeyExtraction::Misbehavior {
                position: pos,
                tid,
                proof,
            });
        }
    }
    let mut it = keys.into_iter();
    let out = secrets.map(|_, _| it.next().expect("one key per layer"));
    Ok(KeyExtraction::Keys(out))
}

/// A chunk as received by the customer: the outermost ciphertext and the full
/// commitment chain, layer 0 first.
#[derive(Clone, Debug)]
pub struct DeliveredChunk {
    pub id: u32,
    pub ciphertext: Vec<u8>,
    pub chain: Vec<EncCommitment>,
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum ContentExtraction {
    /// Plaintext chunks ordered by id.
    Content(Vec<(u32, Vec<u8>)>),
    Misbehavior {
        position: Position,
        tid: PublicKey,
        proof: PoMEProof,
    },
}

/// Peels every chunk from the outermost layer inwards.
///
/// A layer whose output does not open its `h_m` yields a PoME against that
/// layer's committer; peeling outermost first picks the cheater closest to
/// the customer.
pub fn extract(
    keys: &Layered<SymKey>,
    paths: &[Vec<DeliveredChunk>],
    signers: &Layered<PublicKey>,
) -> Result<ContentExtraction, ExtractError> {
    if keys.shape() != signers.shape() || keys.paths.len() != paths.len() {
        return Err(ExtractError::ShapeMismatch);
    }
    let mut content = BTreeMap::new();
    for (k, chunks) in paths.iter().enumerate() {
        let layers = keys.paths[k].len() + 1;
        for ch in chunks {
            if ch.chain.len() != layers {
                return Err(ExtractError::ChainLength {
                    path: k,
                    id: ch.id,
                    got: ch.chain.len(),
                    expected: layers,
                });
            }
            let mut c = ch.ciphertext.clone();
            for layer in (0..layers).rev() {
                let sk = keys.at_layer(k, layer).expect("layer in range");
                let com = &ch.chain[layer];
                let m = sk.decrypt_chunk(&c, ch.id);
                if !open(&m, &com.h_m) {
                    let position = if layer == 0 {
                        Position::Provider
                    } else {
                        Position::Relayer { path: k, hop: layer }
                    };
                    let pk = signers.at_layer(k, layer).expect("same shape");
                    let proof = PoMEProof {
                        statement: com.statement(),
                        sig: com.sig,
                        witness: super::PomeWitness {
                            ciphertext: c,
                            key: *sk,
                        },
                    };
                    return Ok(ContentExtraction::Misbehavior {
                        position,
                        tid: pk.clone(),
                        proof,
                    });
                }
                c = m;
            }
            if content.insert(ch.id, c).is_some() {
                return Err(ExtractError::DuplicateChunk(ch.id));
            }
        }
    }
    Ok(ContentExtraction::Content(content.into_iter().collect()))
}
