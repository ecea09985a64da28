use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use super::{Abort, Behavior, DeliveryMode, DeliveryPlan, Inbound, Message, Notice, Outbox, Phase, SubstrateCall};
use crate::commitments::{
    expand_chain, ext_key, extract, mcom_ver, validate_tuple, ChainLink, ContentExtraction,
    DeliveredChunk, KeyExtraction, Layered, MaskCommitment, Position,
};
use crate::crypto::{
    ae_dec, leaf_digest, merkle_root_from_digests, merkle_verify, open, CommitmentValue, Digest,
    KeyPair, MerkleMultiProof, PublicKey, Secret,
};
use crate::payment::timelocks_single;
use crate::pcn::{lock, ChannelRegistry, PaymentCondition};
use crate::{PartyId, Round};

/// How the delivery ended for the customer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CustomerOutcome {
    /// Decrypted content, truncated to its announced length.
    Content {
        #[serde(skip)]
        bytes: Vec<u8>,
    },
    /// Filed a misbehavior proof against `accused`.
    Accused { op: &'static str, accused: PartyId },
    /// Stopped before paying.
    Unpaid,
    /// Paid, but the lock expired unsettled.
    Expired,
}

struct Setup {
    mask: MaskCommitment,
}

pub struct Customer {
    pub(crate) id: PartyId,
    pub(crate) key: KeyPair,
    pub(crate) behavior: Behavior,
    plan: Arc<DeliveryPlan>,
    setups: BTreeMap<PartyId, Setup>,
    sync_hash: Option<CommitmentValue>,
    hashes: Vec<Option<Vec<CommitmentValue>>>,
    pub(crate) received: Vec<Vec<DeliveredChunk>>,
    paid: Option<Round>,
    settled: Option<Vec<Secret>>,
    pub(crate) outcome: Option<CustomerOutcome>,
    pub(crate) abort: Option<Abort>,
    stopped: bool,
}

impl Customer {
    pub fn new(id: PartyId, key: KeyPair, behavior: Behavior, plan: Arc<DeliveryPlan>) -> Self {
        let paths = plan.relayers.len();
        Customer {
            id,
            key,
            behavior,
            plan,
            setups: BTreeMap::new(),
            sync_hash: None,
            hashes: vec![None; paths],
            received: vec![Vec::new(); paths],
            paid: None,
            settled: None,
            outcome: None,
            abort: None,
            stopped: false,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.stopped
    }

    pub fn outcome(&self) -> Option<&CustomerOutcome> {
        self.outcome.as_ref()
    }

    /// Round the customer's lock was sent, if it paid.
    pub fn paid_at(&self) -> Option<Round> {
        self.paid
    }

    fn give_up(&mut self, round: Round, reason: impl Into<String>) {
        self.abort = Some(Abort {
            round,
            reason: reason.into(),
        });
        if self.outcome.is_none() {
            self.outcome = Some(if self.paid.is_some() {
                CustomerOutcome::Expired
            } else {
                CustomerOutcome::Unpaid
            });
        }
        self.stopped = true;
    }

    fn muted(&mut self, phase: Phase) -> bool {
        if self.behavior.silent(phase) {
            self.stopped = true;
            if self.outcome.is_none() && self.paid.is_none() {
                self.outcome = Some(CustomerOutcome::Unpaid);
            }
        }
        self.stopped
    }

    fn committers(&self) -> Vec<PartyId> {
        std::iter::once(self.plan.provider)
            .chain(self.plan.relayers.iter().flatten().copied())
            .collect()
    }

    fn path_of_sender(&self, from: PartyId) -> Option<usize> {
        (0..self.plan.relayers.len()).find(|&k| self.plan.last_hop(k) == from)
    }

    /// `(signer, h_sk)` for every layer of path `k`, provider first.
    fn layer_keys(&self, k: usize) -> (Vec<PublicKey>, Vec<CommitmentValue>) {
        std::iter::once(self.plan.provider)
            .chain(self.plan.relayers[k].iter().copied())
            .map(|p| (self.plan.key(p).clone(), self.setups[&p].mask.h_sk))
            .unzip()
    }

    fn layered<T: Clone>(&self, f: impl Fn(PartyId) -> T) -> Layered<T> {
        Layered {
            provider: f(self.plan.provider),
            paths: self.plan.relayers.iter().map(|p| p.iter().map(|r| f(*r)).collect()).collect(),
        }
    }

    fn check_hashes(&self, k: usize, hashes: &[CommitmentValue], proof: Option<&MerkleMultiProof>) -> bool {
        let plan = &self.plan;
        let job = &plan.jobs[k];
        if hashes.len() != job.len() {
            return false;
        }
        let digests: Vec<Digest> = hashes.iter().map(|h| leaf_digest(&h.to_bytes())).collect();
        match (plan.mode, proof) {
            (DeliveryMode::MultiPath, Some(p)) => {
                p.leaf_count == plan.chunk_count
                    && p.indices.iter().map(|i| *i + 1).eq(job.iter().copied())
                    && merkle_verify(&digests, p, &plan.content_root)
            }
            (DeliveryMode::SinglePath, None) => {
                merkle_root_from_digests(&digests).is_ok_and(|root| root == plan.content_root)
            }
            _ => false,
        }
    }

    fn on_chunk(&mut self, k: usize, c: Vec<u8>, links: Vec<ChainLink>) -> Result<(), String> {
        let pos = self.received[k].len();
        let job = &self.plan.jobs[k];
        let id = *job.get(pos).ok_or("more chunks than the job holds")?;
        let hashes = self.hashes[k].as_ref().ok_or("chunk before hashes")?;
        let (signers, key_coms) = self.layer_keys(k);
        let chain = expand_chain(&links, &hashes[pos], &key_coms, id).map_err(|e| e.to_string())?;
        validate_tuple(&c, &chain, &signers, &key_coms, &hashes[pos], id)
            .map_err(|e| format!("chunk {id}: {e}"))?;
        self.received[k].push(DeliveredChunk {
            id,
            ciphertext: c,
            chain,
        });
        Ok(())
    }

    fn complete(&self) -> bool {
        self.plan
            .jobs
            .iter()
            .zip(&self.received)
            .all(|(job, got)| job.len() == got.len())
    }

    /// Every chunk commitment, in id order, hashes to the content root.
    fn root_matches(&self) -> bool {
        let mut leaves = vec![None; self.plan.chunk_count as usize];
        for (k, job) in self.plan.jobs.iter().enumerate() {
            let hs = self.hashes[k].as_ref().expect("complete path has hashes");
            for (id, h) in job.iter().zip(hs) {
                leaves[*id as usize - 1] = Some(leaf_digest(&h.to_bytes()));
            }
        }
        let Some(digests) = leaves.into_iter().collect::<Option<Vec<_>>>() else { return false };
        merkle_root_from_digests(&digests).is_ok_and(|root| root == self.plan.content_root)
    }

    pub(crate) fn step(&mut self, r: Round, inbox: Vec<Inbound>, chans: &ChannelRegistry, out: &mut Outbox) {
        if self.stopped {
            return;
        }
        let plan = self.plan.clone();
        for item in inbox {
            match item {
                Inbound::Message { from, msg } => match msg {
                    Message::Setup {
                        h_sk,
                        h_s,
                        sealed_mask,
                        sync_hash,
                    } => {
                        if !self.committers().contains(&from) || self.setups.contains_key(&from) {
                            continue;
                        }
                        let mask = ae_dec(&sealed_mask, &self.key)
                            .ok()
                            .and_then(|b| MaskCommitment::from_bytes(&b).ok())
                            .filter(|m| mcom_ver(m, plan.key(from), &h_sk, &h_s));
                        let Some(mask) = mask else {
                            return self.give_up(r, format!("invalid setup from {}", plan.label(from)));
                        };
                        if from == plan.provider {
                            self.sync_hash = sync_hash;
                        }
                        self.setups.insert(from, Setup { mask });
                    }
                    Message::DeliveryHashes { hashes, proof } => {
                        let Some(k) = self.path_of_sender(from) else { continue };
                        if self.hashes[k].is_some() {
                            continue;
                        }
                        if !self.check_hashes(k, &hashes, proof.as_ref()) {
                            return self.give_up(r, format!("path {} hashes do not match the root", k + 1));
                        }
                        self.hashes[k] = Some(hashes);
                    }
                    Message::Chunk { ciphertext, links } => {
                        let Some(k) = self.path_of_sender(from) else { continue };
                        if let Err(e) = self.on_chunk(k, ciphertext, links) {
                            return self.give_up(r, e);
                        }
                    }
                    _ => {}
                },
                Inbound::Notice(Notice::Updated { channel, secrets }) if channel == plan.customer_channel => {
                    self.settled = Some(secrets);
                }
                Inbound::Notice(_) => {}
            }
        }

        match r {
            1 => {
                if self.muted(Phase::Setup) {
                    return;
                }
                for p in self.committers() {
                    out.send(p, Message::Init);
                }
                return;
            }
            2 => return,
            3 => {
                let missing = self.committers().into_iter().find(|p| !self.setups.contains_key(p));
                if let Some(p) = missing {
                    return self.give_up(r, format!("no setup from {}", plan.label(p)));
                }
                if plan.mode == DeliveryMode::MultiPath && self.sync_hash.is_none() {
                    return self.give_up(r, "provider setup lacks the sync hash");
                }
                if self.muted(Phase::Delivery) {
                    return;
                }
                match plan.mode {
                    DeliveryMode::MultiPath => {
                        for p in self.committers() {
                            out.send(p, Message::DeliveryStart);
                        }
                    }
                    DeliveryMode::SinglePath => out.send(plan.provider, Message::DeliveryStart),
                }
                return;
            }
            _ => {}
        }

        if self.paid.is_none() {
            if !self.complete() {
                if r >= plan.timelocks.t1 {
                    self.give_up(r, "delivery incomplete");
                }
                return;
            }
            if plan.mode == DeliveryMode::MultiPath && !self.root_matches() {
                return self.give_up(r, "chunk commitments do not hash to the root");
            }
            if self.muted(Phase::Payment) {
                return;
            }
            let mut hashes: Vec<CommitmentValue> = plan
                .relayers
                .iter()
                .flatten()
                .map(|p| self.setups[p].mask.h_s)
                .collect();
            hashes.push(self.setups[&plan.provider].mask.h_s);
            let deadline = match plan.mode {
                DeliveryMode::MultiPath => plan.timelocks.customer,
                DeliveryMode::SinglePath => {
                    let n = plan.path_len(0);
                    timelocks_single(r + n as Round + 3, n)[0]
                }
            };
            let cond = PaymentCondition::new(hashes, deadline).expect("non-empty");
            let ch = chans.get(plan.customer_channel).expect("customer channel exists");
            match lock(ch, self.id, &self.key, plan.price, cond) {
                Ok(tx) => {
                    out.send(plan.provider, Message::ChannelLock(tx));
                    self.paid = Some(deadline);
                }
                Err(e) => return self.give_up(r, format!("cannot pay: {e}")),
            }
            return;
        }

        let deadline = self.paid.expect("paid");
        let Some(secrets) = self.settled.take() else {
            if r > deadline {
                self.give_up(r, "payment expired unsettled");
            }
            return;
        };
        if self.muted(Phase::Decryption) {
            return;
        }
        self.stopped = true;
        self.decrypt(&secrets, out);
    }

    fn decrypt(&mut self, revealed: &[Secret], out: &mut Outbox) {
        let plan = self.plan.clone();
        let find = |p: PartyId| {
            let h = &self.setups[&p].mask.h_s;
            revealed.iter().find(|s| open(&s.0, h)).copied()
        };
        let secrets = self.layered(find);
        let Some(secrets) = secrets.try_map(|_, s| s.ok_or(())).ok() else {
            self.outcome = Some(CustomerOutcome::Expired);
            return;
        };
        let masks = self.layered(|p| self.setups[&p].mask.clone());
        let signers = self.layered(|p| plan.key(p).clone());
        let holder = |pos: Position| match pos {
            Position::Provider => plan.provider,
            Position::Relayer { path, hop } => plan.relayers[path][hop - 1],
        };
        let keys = match ext_key(&secrets, &masks, &signers).expect("shapes agree") {
            KeyExtraction::Keys(k) => k,
            KeyExtraction::Misbehavior { position, tid, proof } => {
                out.call(SubstrateCall::Pomm { tid, proof });
                self.outcome = Some(CustomerOutcome::Accused {
                    op: "pomm",
                    accused: holder(position),
                });
                return;
            }
        };
        match extract(&keys, &self.received, &signers).expect("validated chains") {
            ContentExtraction::Content(chunks) => {
                let mut bytes: Vec<u8> = chunks.into_iter().flat_map(|(_, c)| c).collect();
                bytes.truncate(plan.content_len);
                self.outcome = Some(CustomerOutcome::Content { bytes });
            }
            ContentExtraction::Misbehavior { position, tid, proof } => {
                out.call(SubstrateCall::Pome {
                    tid,
                    proof: Box::new(proof),
                });
                self.outcome = Some(CustomerOutcome::Accused {
                    op: "pome",
                    accused: holder(position),
                });
            }
        }
    }
}
