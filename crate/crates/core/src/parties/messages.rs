//! Off-chain messages and on-chain notices, with canonical encodings and the
//! byte accounting used by every overhead metric.

use crate::commitments::ChainLink;
use crate::crypto::{
    CommitmentValue, Digest, MerkleMultiProof, Secret, Signature, HASH_LEN, SECRET_LEN, SIG_LEN,
};
use crate::pcn::{ChannelId, ConditionedPayment};
use crate::{Amount, PartyId};

/// Accounted size of a commitment value: one hash.
pub const ACCOUNTED_HASH: usize = HASH_LEN;
const AMOUNT_LEN: usize = 8;
const ROUND_LEN: usize = 8;
const CHANNEL_LEN: usize = 4;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Init,
    /// To the customer: commitments plus the mask commitment sealed to C.
    Setup {
        h_sk: CommitmentValue,
        h_s: CommitmentValue,
        sealed_mask: Vec<u8>,
        sync_hash: Option<CommitmentValue>,
    },
    /// Between the provider and the relayers of a path.
    PeerSetup {
        h_s: CommitmentValue,
        fee: Option<Amount>,
        sync_hash: Option<CommitmentValue>,
    },
    DeliveryStart,
    /// Chunk commitments of a job, with a multi-proof in multi-path mode.
    DeliveryHashes {
        hashes: Vec<CommitmentValue>,
        proof: Option<MerkleMultiProof>,
    },
    Chunk {
        ciphertext: Vec<u8>,
        links: Vec<ChainLink>,
    },
    ChannelLock(ConditionedPayment),
    Receipt(Signature),
    Release(Secret),
    /// Out-of-band sharing between colluding parties.
    Collusion(Vec<Secret>),
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Init => "init",
            Message::Setup { .. } => "setup",
            Message::PeerSetup { .. } => "peer-setup",
            Message::DeliveryStart => "delivery",
            Message::DeliveryHashes { .. } => "delivery-hashes",
            Message::Chunk { .. } => "chunk",
            Message::ChannelLock(_) => "channel-lock",
            Message::Receipt(_) => "receipt",
            Message::Release(_) => "channel-release",
            Message::Collusion(_) => "collusion",
        }
    }

    /// Wire size under the accounting model: hashes count 32 bytes,
    /// signatures 65, ciphertexts their length. Tags and ids implied by
    /// context are free.
    pub fn accounted_size(&self) -> usize {
        let opt_hash = |h: &Option<CommitmentValue>| h.map_or(0, |_| ACCOUNTED_HASH);
        match self {
            Message::Init | Message::DeliveryStart => 0,
            Message::Setup {
                sealed_mask,
                sync_hash,
                ..
            } => 2 * ACCOUNTED_HASH + sealed_mask.len() + opt_hash(sync_hash),
            Message::PeerSetup { fee, sync_hash, .. } => {
                ACCOUNTED_HASH + fee.map_or(0, |_| AMOUNT_LEN) + opt_hash(sync_hash)
            }
            Message::DeliveryHashes { hashes, proof } => {
                ACCOUNTED_HASH * hashes.len() + proof.as_ref().map_or(0, |p| p.to_bytes().len())
            }
            Message::Chunk { ciphertext, links } => {
                ciphertext.len() + links.len() * ChainLink::ACCOUNTED_LEN
            }
            Message::ChannelLock(tx) => {
                CHANNEL_LEN
                    + 2 * AMOUNT_LEN
                    + ACCOUNTED_HASH * tx.condition.hashes().len()
                    + ROUND_LEN
                    + SIG_LEN
            }
            Message::Receipt(_) => SIG_LEN,
            Message::Release(_) => SECRET_LEN,
            Message::Collusion(s) => SECRET_LEN * s.len(),
        }
    }

    /// Ciphertext bytes carried, i.e. the part that is not overhead.
    pub fn payload_size(&self) -> usize {
        match self {
            Message::Chunk { ciphertext, .. } => ciphertext.len(),
            _ => 0,
        }
    }

    /// Canonical encoding: kind tag, then fields in declaration order with
    /// big-endian integers and `u32` length prefixes.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Vec::new();
        w.extend_from_slice(self.kind().as_bytes());
        w.push(0);
        let put_opt = |w: &mut Vec<u8>, h: &Option<CommitmentValue>| match h {
            Some(h) => {
                w.push(1);
                w.extend_from_slice(&h.to_bytes());
            }
            None => w.push(0),
        };
        let put_len = |w: &mut Vec<u8>, n: usize| w.extend_from_slice(&(n as u32).to_be_bytes());
        match self {
            Message::Init | Message::DeliveryStart => {}
            Message::Setup {
                h_sk,
                h_s,
                sealed_mask,
                sync_hash,
            } => {
                w.extend_from_slice(&h_sk.to_bytes());
                w.extend_from_slice(&h_s.to_bytes());
                put_len(&mut w, sealed_mask.len());
                w.extend_from_slice(sealed_mask);
                put_opt(&mut w, sync_hash);
            }
            Message::PeerSetup { h_s, fee, sync_hash } => {
                w.extend_from_slice(&h_s.to_bytes());
                match fee {
                    Some(f) => {
                        w.push(1);
                        w.extend_from_slice(&f.to_be_bytes());
                    }
                    None => w.push(0),
                }
                put_opt(&mut w, sync_hash);
            }
            Message::DeliveryHashes { hashes, proof } => {
                put_len(&mut w, hashes.len());
                for h in hashes {
                    w.extend_from_slice(&h.to_bytes());
                }
                match proof {
                    Some(p) => {
                        w.push(1);
                        w.extend_from_slice(&p.to_bytes());
                    }
                    None => w.push(0),
                }
            }
            Message::Chunk { ciphertext, links } => {
                put_len(&mut w, ciphertext.len());
                w.extend_from_slice(ciphertext);
                put_len(&mut w, links.len());
                for l in links {
                    w.extend_from_slice(&l.h_c.to_bytes());
                    w.extend_from_slice(&l.sig.0);
                }
            }
            Message::ChannelLock(tx) => {
                w.extend_from_slice(&tx.signed_bytes());
                w.extend_from_slice(&tx.initiator.0.to_be_bytes());
                w.extend_from_slice(&tx.sig.0);
            }
            Message::Receipt(sig) => w.extend_from_slice(&sig.0),
            Message::Release(s) => w.extend_from_slice(&s.0),
            Message::Collusion(ss) => {
                put_len(&mut w, ss.len());
                for s in ss {
                    w.extend_from_slice(&s.0);
                }
            }
        }
        w
    }

    /// Secrets carried in the clear.
    pub fn secrets(&self) -> Vec<Secret> {
        match self {
            Message::Release(s) => vec![*s],
            Message::Collusion(ss) => ss.clone(),
            _ => vec![],
        }
    }
}

/// Substrate outputs delivered to parties one round after they happen.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Notice {
    Updated {
        channel: ChannelId,
        secrets: Vec<Secret>,
    },
    UpdateFailed {
        channel: ChannelId,
    },
    Enforced {
        challenge: Digest,
        sync_secret: Secret,
    },
    Logged {
        challenge: Digest,
        hop: usize,
        secrets: Vec<Secret>,
    },
    Punished {
        challenge: Digest,
        offender: PartyId,
    },
}

impl Notice {
    pub fn kind(&self) -> &'static str {
        match self {
            Notice::Updated { .. } => "updated",
            Notice::UpdateFailed { .. } => "update-fail",
            Notice::Enforced { .. } => "enforced",
            Notice::Logged { .. } => "logged",
            Notice::Punished { .. } => "punished",
        }
    }

    pub fn secrets(&self) -> Vec<Secret> {
        match self {
            Notice::Updated { secrets, .. } | Notice::Logged { secrets, .. } => secrets.clone(),
            Notice::Enforced { sync_secret, .. } => vec![*sync_secret],
            _ => vec![],
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = self.kind().as_bytes().to_vec();
        w.push(0);
        let put_secrets = |w: &mut Vec<u8>, ss: &[Secret]| {
            w.extend_from_slice(&(ss.len() as u32).to_be_bytes());
            for s in ss {
                w.extend_from_slice(&s.0);
            }
        };
        match self {
            Notice::Updated { channel, secrets } => {
                w.extend_from_slice(&channel.0.to_be_bytes());
                put_secrets(&mut w, secrets);
            }
            Notice::UpdateFailed { channel } => w.extend_from_slice(&channel.0.to_be_bytes()),
            Notice::Enforced {
                challenge,
                sync_secret,
            } => {
                w.extend_from_slice(&challenge.0);
                w.extend_from_slice(&sync_secret.0);
            }
            Notice::Logged {
                challenge,
                hop,
                secrets,
            } => {
                w.extend_from_slice(&challenge.0);
                w.extend_from_slice(&(*hop as u32).to_be_bytes());
                put_secrets(&mut w, secrets);
            }
            Notice::Punished {
                challenge,
                offender,
            } => {
                w.extend_from_slice(&challenge.0);
                w.extend_from_slice(&offender.0.to_be_bytes());
            }
        }
        w
    }
}

/// One inbox entry.
#[derive(Clone, Debug)]
pub enum Inbound {
    Message { from: PartyId, msg: Message },
    Notice(Notice),
}
