use rand::RngCore;

use super::PomError;
use crate::crypto::{
    commit, hash_parts, open, CommitmentValue, CryptoError, Digest, KeyPair, PublicKey, Secret,
    Signature, SymKey, SECRET_LEN, SIG_LEN,
};

const TAG: &[u8] = b"mask-commitment";

/// Signed binding of a symmetric key to a mask secret: `ck = s ⊕ sk`.
///
/// Canonical encoding: `h_sk ‖ h_s ‖ ck ‖ σ` (209 bytes).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskCommitment {
    pub h_sk: CommitmentValue,
    pub h_s: CommitmentValue,
    pub ck: [u8; SECRET_LEN],
    pub sig: Signature,
}

impl MaskCommitment {
    pub const ENCODED_LEN: usize = 2 * CommitmentValue::ENCODED_LEN + SECRET_LEN + SIG_LEN;

    fn signed_bytes(h_sk: &CommitmentValue, h_s: &CommitmentValue, ck: &[u8]) -> Vec<u8> {
        let mut m = Vec::with_capacity(TAG.len() + 144);
        m.extend_from_slice(TAG);
        m.extend_from_slice(&h_sk.to_bytes());
        m.extend_from_slice(&h_s.to_bytes());
        m.extend_from_slice(ck);
        m
    }

    /// Signs arbitrary fields. Honest parties go through [`mcom_gen`].
    pub fn sign(
        h_sk: CommitmentValue,
        h_s: CommitmentValue,
        ck: [u8; SECRET_LEN],
        signer: &KeyPair,
    ) -> Self {
        let sig = signer.sign(&Self::signed_bytes(&h_sk, &h_s, &ck));
        MaskCommitment { h_sk, h_s, ck, sig }
    }

    pub fn verify_signature(&self, pk: &PublicKey) -> bool {
        pk.verify(&Self::signed_bytes(&self.h_sk, &self.h_s, &self.ck), &self.sig)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(Self::ENCODED_LEN);
        out.extend_from_slice(&self.h_sk.to_bytes());
        out.extend_from_slice(&self.h_s.to_bytes());
        out.extend_from_slice(&self.ck);
        out.extend_from_slice(&self.sig.0);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, CryptoError> {
        if b.len() != Self::ENCODED_LEN {
            return Err(CryptoError::BadLength {
                expected: Self::ENCODED_LEN,
                actual: b.len(),
            });
        }
        let cl = CommitmentValue::ENCODED_LEN;
        let mut ck = [0u8; SECRET_LEN];
        ck.copy_from_slice(&b[2 * cl..2 * cl + SECRET_LEN]);
        Ok(MaskCommitment {
            h_sk: CommitmentValue::from_bytes(&b[..cl])?,
            h_s: CommitmentValue::from_bytes(&b[cl..2 * cl])?,
            ck,
            sig: Signature::from_slice(&b[2 * cl + SECRET_LEN..])?,
        })
    }
}

fn xor48(a: &[u8; SECRET_LEN], b: &[u8; SECRET_LEN]) -> [u8; SECRET_LEN] {
    let mut out = [0u8; SECRET_LEN];
    for i in 0..SECRET_LEN {
        out[i] = a[i] ^ b[i];
    }
    out
}

/// Commits to `sk` and `s` with fresh pads and signs `ck = s ⊕ sk`.
pub fn mcom_gen<R: RngCore + ?Sized>(
    sk: &SymKey,
    s: &Secret,
    signer: &KeyPair,
    rng: &mut R,
) -> MaskCommitment {
    let skb = sk.to_bytes();
    let h_sk = commit(&skb, rng);
    let h_s = commit(&s.0, rng);
    MaskCommitment::sign(h_sk, h_s, xor48(&s.0, &skb), signer)
}

/// Signature is valid and the commitments match the ones announced in setup.
pub fn mcom_ver(
    com: &MaskCommitment,
    pk: &PublicKey,
    h_sk: &CommitmentValue,
    h_s: &CommitmentValue,
) -> bool {
    com.h_sk == *h_sk && com.h_s == *h_s && com.verify_signature(pk)
}

/// Proof that a signed mask commitment does not unmask to the committed key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PoMMProof {
    pub com: MaskCommitment,
    pub revealed: Secret,
}

impl PoMMProof {
    /// Digest of the statement, used by the judge to reject replays.
    pub fn statement_digest(&self, tid: &PublicKey) -> Digest {
        hash_parts(&[
            b"pomm",
            &self.com.h_sk.to_bytes(),
            &self.com.h_s.to_bytes(),
            &self.com.ck,
            &tid.to_bytes(),
        ])
    }
}

/// Builds a PoMM from a revealed secret `s'`.
///
/// Refuses when `s'` does not open `h_s`, or when `ck ⊕ s'` does open `h_sk`
/// (the committer was honest).
pub fn pomm_gen(
    com: &MaskCommitment,
    pk: &PublicKey,
    revealed: &Secret,
) -> Result<(PublicKey, PoMMProof), PomError> {
    if !open(&revealed.0, &com.h_s) {
        return Err(PomError::SecretMismatch);
    }
    if open(&xor48(&com.ck, &revealed.0), &com.h_sk) {
        return Err(PomError::CommitterHonest);
    }
    Ok((
        pk.clone(),
        PoMMProof {
            com: com.clone(),
            revealed: *revealed,
        },
    ))
}

/// Accepts iff the signature is valid, `s'` opens `h_s`, and `ck ⊕ s'` does
/// not open `h_sk`.
pub fn pomm_ver(proof: &PoMMProof, tid: &PublicKey) -> bool {
    let com = &proof.com;
    com.verify_signature(tid)
        && open(&proof.revealed.0, &com.h_s)
        && !open(&xor48(&com.ck, &proof.revealed.0), &com.h_sk)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(seed: u64) -> (ChaCha20Rng, KeyPair, SymKey, Secret) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let kp = KeyPair::generate(&mut rng);
        let sk = SymKey::generate(&mut rng);
        let s = Secret::random(&mut rng);
        (rng, kp, sk, s)
    }

    #[test]
    fn honest_commitment_verifies_and_unmasks() {
        let (mut rng, kp, sk, s) = setup(1);
        let com = mcom_gen(&sk, &s, &kp, &mut rng);
        assert!(mcom_ver(&com, kp.public(), &com.h_sk, &com.h_s));
        let unmasked = xor48(&com.ck, &s.0);
        assert_eq!(SymKey::from_bytes(&unmasked).unwrap(), sk);
        assert!(open(&unmasked, &com.h_sk));
    }

    #[test]
    fn mcom_ver_checks_announced_hashes_and_signer() {
        let (mut rng, kp, sk, s) = setup(2);
        let com = mcom_gen(&sk, &s, &kp, &mut rng);
        let other = commit(b"other", &mut rng);
        assert!(!mcom_ver(&com, kp.public(), &other, &com.h_s));
        assert!(!mcom_ver(&com, kp.public(), &com.h_sk, &other));
        let stranger = KeyPair::generate(&mut rng);
        assert!(!mcom_ver(&com, stranger.public(), &com.h_sk, &com.h_s));
    }

    #[test]
    fn pomm_refuses_honest_committer() {
        let (mut rng, kp, sk, s) = setup(3);
        let com = mcom_gen(&sk, &s, &kp, &mut rng);
        assert_eq!(
            pomm_gen(&com, kp.public(), &s).unwrap_err(),
            PomError::CommitterHonest
        );
        let honest_proof = PoMMProof {
            com: com.clone(),
            revealed: s,
        };
        assert!(!pomm_ver(&honest_proof, kp.public()));
    }

    #[test]
    fn pomm_refuses_wrong_secret() {
        let (mut rng, kp, sk, s) = setup(4);
        let com = mcom_gen(&sk, &s, &kp, &mut rng);
        let wrong = Secret::random(&mut rng);
        assert_eq!(
            pomm_gen(&com, kp.public(), &wrong).unwrap_err(),
            PomError::SecretMismatch
        );
    }

    #[test]
    fn wrong_mask_yields_verifying_proof() {
        let (mut rng, kp, sk, s) = setup(5);
        let h_sk = commit(&sk.to_bytes(), &mut rng);
        let h_s = commit(&s.0, &mut rng);
        let mut ck = [0u8; SECRET_LEN];
        rng.fill_bytes(&mut ck);
        let com = MaskCommitment::sign(h_sk, h_s, ck, &kp);
        let (tid, proof) = pomm_gen(&com, kp.public(), &s).unwrap();
        assert_eq!(&tid, kp.public());
        assert!(pomm_ver(&proof, &tid));
        let stranger = KeyPair::generate(&mut rng);
        assert!(!pomm_ver(&proof, stranger.public()));
    }

    #[test]
    fn encoding_round_trips() {
        let (mut rng, kp, sk, s) = setup(6);
        let com = mcom_gen(&sk, &s, &kp, &mut rng);
        let b = com.to_bytes();
        assert_eq!(b.len(), MaskCommitment::ENCODED_LEN);
        assert_eq!(MaskCommitment::from_bytes(&b).unwrap(), com);
        assert!(MaskCommitment::from_bytes(&b[1..]).is_err());
    }
}
