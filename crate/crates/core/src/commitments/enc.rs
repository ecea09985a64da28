use rand::RngCore;

use super::PomError;
use crate::crypto::{
    commit, hash_parts, open, CommitmentValue, Digest, KeyPair, PublicKey, Signature, SymKey,
};

const TAG: &[u8] = b"enc-commitment";

/// Signed statement that `c = Enc(sk, m)` for chunk `id`, where `h_m`, `h_c`
/// and `h_sk` commit to `m`, `c` and `sk`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncCommitment {
    pub h_m: CommitmentValue,
    pub h_c: CommitmentValue,
    pub h_sk: CommitmentValue,
    pub id: u32,
    pub sig: Signature,
}

/// The public statement of a PoME: `(h_m, h_c, h_sk, id)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PomeStatement {
    pub h_m: CommitmentValue,
    pub h_c: CommitmentValue,
    pub h_sk: CommitmentValue,
    pub id: u32,
}

impl PomeStatement {
    /// `h_m ‖ h_c ‖ h_sk ‖ id_be32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut m = Vec::with_capacity(148);
        m.extend_from_slice(&self.h_m.to_bytes());
        m.extend_from_slice(&self.h_c.to_bytes());
        m.extend_from_slice(&self.h_sk.to_bytes());
        m.extend_from_slice(&self.id.to_be_bytes());
        m
    }
}

impl EncCommitment {
    pub fn statement(&self) -> PomeStatement {
        PomeStatement {
            h_m: self.h_m,
            h_c: self.h_c,
            h_sk: self.h_sk,
            id: self.id,
        }
    }

    fn signed_bytes(st: &PomeStatement) -> Vec<u8> {
        let mut m = TAG.to_vec();
        m.extend_from_slice(&st.to_bytes());
        m
    }

    /// Signs arbitrary fields. Honest parties go through [`ecom_gen`].
    pub fn sign(
        h_m: CommitmentValue,
        h_c: CommitmentValue,
        h_sk: CommitmentValue,
        id: u32,
        signer: &KeyPair,
    ) -> Self {
        let st = PomeStatement { h_m, h_c, h_sk, id };
        let sig = signer.sign(&Self::signed_bytes(&st));
        EncCommitment {
            h_m,
            h_c,
            h_sk,
            id,
            sig,
        }
    }

    pub fn verify_signature(&self, pk: &PublicKey) -> bool {
        pk.verify(&Self::signed_bytes(&self.statement()), &self.sig)
    }
}

/// Encrypts chunk `id` and commits to plaintext, ciphertext and key with fresh
/// pads.
pub fn ecom_gen<R: RngCore + ?Sized>(
    m: &[u8],
    sk: &SymKey,
    id: u32,
    signer: &KeyPair,
    rng: &mut R,
) -> (Vec<u8>, EncCommitment) {
    let h_m = commit(m, rng);
    let h_sk = commit(&sk.to_bytes(), rng);
    ecom_gen_linked(m, h_m, sk, h_sk, id, signer, rng)
}

/// Like [`ecom_gen`], but reuses an existing commitment to the input and to
/// the key.
///
/// Commitments are randomized, so a layer can only link to the previous
/// layer's `h_c` and to the `h_sk` announced in setup by reusing them.
pub fn ecom_gen_linked<R: RngCore + ?Sized>(
    m: &[u8],
    h_m: CommitmentValue,
    sk: &SymKey,
    h_sk: CommitmentValue,
    id: u32,
    signer: &KeyPair,
    rng: &mut R,
) -> (Vec<u8>, EncCommitment) {
    debug_assert!(open(m, &h_m));
    let c = sk.encrypt_chunk(m, id);
    let h_c = commit(&c, rng);
    let com = EncCommitment::sign(h_m, h_c, h_sk, id, signer);
    (c, com)
}

/// Signature is valid and `h_m`, `h_sk`, `id` match the expected values.
pub fn ecom_ver(
    com: &EncCommitment,
    pk: &PublicKey,
    h_m: &CommitmentValue,
    h_sk: &CommitmentValue,
    id: u32,
) -> bool {
    com.h_m == *h_m && com.h_sk == *h_sk && com.id == id && com.verify_signature(pk)
}

/// The witness `(c', sk')` behind a PoME.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PomeWitness {
    pub ciphertext: Vec<u8>,
    pub key: SymKey,
}

/// Proof that a signed encryption commitment decrypts to something other than
/// its committed plaintext.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoMEProof {
    pub statement: PomeStatement,
    pub sig: Signature,
    pub witness: PomeWitness,
}

impl PoMEProof {
    pub fn statement_digest(&self, tid: &PublicKey) -> Digest {
        hash_parts(&[b"pome", &self.statement.to_bytes(), &tid.to_bytes()])
    }
}

/// Decides the PoME relation for a statement.
///
/// The transparent backend checks the witness directly; a succinct proof
/// system would plug in here.
pub trait PomeVerifier {
    fn verify(&self, statement: &PomeStatement, witness: &PomeWitness) -> bool;
}

#[derive(Clone, Copy, Debug, Default)]
pub struct TransparentVerifier;

impl PomeVerifier for TransparentVerifier {
    fn verify(&self, st: &PomeStatement, w: &PomeWitness) -> bool {
        open(&w.ciphertext, &st.h_c)
            && open(&w.key.to_bytes(), &st.h_sk)
            && !open(&w.key.decrypt_chunk(&w.ciphertext, st.id), &st.h_m)
    }
}

pub fn pome_gen(
    com: &EncCommitment,
    pk: &PublicKey,
    ciphertext: &[u8],
    key: &SymKey,
) -> Result<(PublicKey, PoMEProof), PomError> {
    if !open(ciphertext, &com.h_c) || !open(&key.to_bytes(), &com.h_sk) {
        return Err(PomError::WitnessMismatch);
    }
    let proof = PoMEProof {
        statement: com.statement(),
        sig: com.sig,
        witness: PomeWitness {
            ciphertext: ciphertext.to_vec(),
            key: *key,
        },
    };
    if !TransparentVerifier.verify(&proof.statement, &proof.witness) {
        return Err(PomError::CommitterHonest);
    }
    Ok((pk.clone(), proof))
}

pub fn pome_ver(proof: &PoMEProof, tid: &PublicKey) -> bool {
    pome_ver_with(&TransparentVerifier, proof, tid)
}

pub fn pome_ver_with(verifier: &dyn PomeVerifier, proof: &PoMEProof, tid: &PublicKey) -> bool {
    tid.verify(&EncCommitment::signed_bytes(&proof.statement), &proof.sig)
        && verifier.verify(&proof.statement, &proof.witness)
}
