//! Hashing, commitments, symmetric and public-key encryption, signatures and
//! Merkle multi-proofs.
//!
//! Every byte layout produced here is fixed and documented on the type that
//! owns it, so digests over these encodings are stable across runs.

mod commit;
mod merkle;
mod sign;
mod symmetric;

pub use commit::{commit, open, open_encoded, CommitmentValue, PAD_LEN};
pub use merkle::{
    leaf_digest, merkle_member, merkle_root, merkle_root_from_digests, merkle_verify,
    MerkleMultiProof,
};
pub use sign::{ae_dec, ae_enc, KeyPair, PublicKey, Signature, AE_OVERHEAD, PUBLIC_KEY_LEN, SIG_LEN};
pub use symmetric::{se_dec, se_enc, tweak_nonce, Nonce, SymKey, MASTER_KEY_LEN, NONCE_LEN, SYM_KEY_LEN};

use std::fmt;

use rand::RngCore;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

/// Output length of the hash function in bytes.
pub const HASH_LEN: usize = 32;

/// Length of a mask secret. It equals the serialized symmetric key length so
/// that `s ⊕ sk` is well defined.
pub const SECRET_LEN: usize = SYM_KEY_LEN;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("expected {expected} bytes, got {actual}")]
    BadLength { expected: usize, actual: usize },
    #[error("xor operands differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("merkle tree needs at least one leaf")]
    EmptyTree,
    #[error("merkle subset is empty, unsorted, repeated or out of range")]
    BadSubset,
    #[error("invalid public key encoding")]
    BadPublicKey,
    #[error("ciphertext failed authentication")]
    Decryption,
}

/// A SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Digest(pub [u8; HASH_LEN]);

impl Digest {
    pub fn as_bytes(&self) -> &[u8; HASH_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..16])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// `H(data)`.
pub fn hash(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// `H(p_0 ‖ p_1 ‖ …)` without intermediate copies.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

/// A mask secret `s`, also used for the synchronisation secret.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Secret(pub [u8; SECRET_LEN]);

impl Secret {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut s = [0u8; SECRET_LEN];
        rng.fill_bytes(&mut s);
        Secret(s)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; SECRET_LEN] = bytes.try_into().map_err(|_| CryptoError::BadLength {
            expected: SECRET_LEN,
            actual: bytes.len(),
        })?;
        Ok(Secret(arr))
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for Secret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Secret({}…)", hex::encode(&self.0[..6]))
    }
}

/// Bytewise XOR of two equal-length strings.
pub fn xor_mask(a: &[u8], b: &[u8]) -> Result<Vec<u8>, CryptoError> {
    if a.len() != b.len() {
        return Err(CryptoError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x ^ y).collect())
}

/// Fills `out` with `H(key ‖ counter_be64)` blocks XORed into it in place.
pub(crate) fn xor_keystream(out: &mut [u8], key: &[&[u8]]) {
    for (ctr, block) in out.chunks_mut(HASH_LEN).enumerate() {
        let mut h = Sha256::new();
        for k in key {
            h.update(k);
        }
        h.update((ctr as u64).to_be_bytes());
        let ks: [u8; HASH_LEN] = h.finalize().into();
        for (b, k) in block.iter_mut().zip(ks.iter()) {
            *b ^= k;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            hash(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(hash_parts(&[b"a", b"bc"]), hash(b"abc"));
    }

    #[test]
    fn xor_mask_rejects_unequal_lengths() {
        assert_eq!(xor_mask(&[1, 2], &[3]), Err(CryptoError::LengthMismatch(2, 1)));
        assert_eq!(xor_mask(&[1, 2], &[3, 3]).unwrap(), vec![2, 1]);
    }

    #[test]
    fn xor_mask_is_an_involution() {
        let a = [7u8; 48];
        let b: Vec<u8> = (0..48).collect();
        let once = xor_mask(&a, &b).unwrap();
        assert_eq!(xor_mask(&once, &b).unwrap(), a.to_vec());
    }
}
