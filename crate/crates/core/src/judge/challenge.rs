use crate::crypto::{hash, CommitmentValue, Digest, PublicKey};
use crate::Round;

/// `Ch = {T, ℍ, h_0, ADDR}` for one relay path.
///
/// `hashes[i-1]` is hop `i`'s mask-secret hash, `addresses[0]` is the payer
/// and `addresses[i]` hop `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnforcementChallenge {
    pub deadline: Round,
    pub hashes: Vec<CommitmentValue>,
    pub sync_hash: CommitmentValue,
    pub addresses: Vec<PublicKey>,
}

impl EnforcementChallenge {
    /// `T_be64 ‖ |ℍ|_be32 ‖ ℍ… ‖ h_0 ‖ |ADDR|_be32 ‖ ADDR…`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.deadline.to_be_bytes());
        out.extend_from_slice(&(self.hashes.len() as u32).to_be_bytes());
        for h in &self.hashes {
            out.extend_from_slice(&h.to_bytes());
        }
        out.extend_from_slice(&self.sync_hash.to_bytes());
        out.extend_from_slice(&(self.addresses.len() as u32).to_be_bytes());
        for a in &self.addresses {
            out.extend_from_slice(&a.to_bytes());
        }
        out
    }

    pub fn digest(&self) -> Digest {
        hash(&self.to_bytes())
    }
}

/// Bytes a relayer signs to acknowledge its incoming lock.
pub fn receipt_bytes(ch: &EnforcementChallenge) -> Vec<u8> {
    let mut m = b"lock-receipt".to_vec();
    m.extend_from_slice(&ch.to_bytes());
    m
}
