use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use super::{
    Abort, Behavior, CommitterSecrets, DeliveryMode, DeliveryPlan, Inbound, Message, Notice,
    Outbox, PartyRef, PeerHashes, Phase, SubstrateCall,
};
use crate::commitments::ChainLink;
use crate::crypto::{
    ae_enc, leaf_digest, merkle_root_from_digests, merkle_verify, open, CommitmentValue, Digest,
    KeyPair, MerkleMultiProof, Secret,
};
use crate::judge::EnforcementChallenge;
use crate::payment::{
    ack_receipt, build_outgoing_lock, verify_incoming_lock, DeadlineRule, HashRule, LockExpectation,
};
use crate::pcn::{unlock, ChannelRegistry, ConditionedPayment};
use crate::{PartyId, Round};

pub struct Relayer {
    pub(crate) id: PartyId,
    pub(crate) key: KeyPair,
    pub(crate) behavior: Behavior,
    plan: Arc<DeliveryPlan>,
    rng: ChaCha20Rng,
    path: usize,
    hop: usize,
    pub(crate) secrets: CommitterSecrets,
    got_init: bool,
    peers: PeerHashes,
    hashes: Option<Vec<CommitmentValue>>,
    forwarded: usize,
    offered: Option<ConditionedPayment>,
    incoming: Option<ConditionedPayment>,
    ch: Option<EnforcementChallenge>,
    known: Vec<Secret>,
    shared: usize,
    challenge: Option<Digest>,
    must_log: bool,
    logged: bool,
    unlocked: bool,
    pub(crate) abort: Option<Abort>,
    stopped: bool,
}

impl Relayer {
    pub fn new(id: PartyId, key: KeyPair, behavior: Behavior, plan: Arc<DeliveryPlan>, mut rng: ChaCha20Rng) -> Self {
        let Some(PartyRef::Relayer { path, hop }) = plan.position(id) else {
            panic!("relayer {id:?} is not on any path");
        };
        let secrets = CommitterSecrets::generate(&behavior, &key, &mut rng);
        Relayer {
            id,
            key,
            behavior,
            plan,
            rng,
            path,
            hop,
            secrets,
            got_init: false,
            peers: PeerHashes::default(),
            hashes: None,
            forwarded: 0,
            offered: None,
            incoming: None,
            ch: None,
            known: Vec::new(),
            shared: 0,
            challenge: None,
            must_log: false,
            logged: false,
            unlocked: false,
            abort: None,
            stopped: false,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.stopped
    }

    fn multi(&self) -> bool {
        self.plan.mode == DeliveryMode::MultiPath
    }

    fn len(&self) -> usize {
        self.plan.path_len(self.path)
    }

    fn prev(&self) -> PartyId {
        self.plan.prev_hop(self.path, self.hop)
    }

    fn next(&self) -> PartyId {
        self.plan.next_hop(self.path, self.hop)
    }

    fn give_up(&mut self, round: Round, reason: impl Into<String>) {
        self.abort = Some(Abort {
            round,
            reason: reason.into(),
        });
        self.stopped = true;
    }

    fn muted(&mut self, phase: Phase) -> bool {
        if self.behavior.silent(phase) {
            self.stopped = true;
        }
        self.stopped
    }

    /// The colluding partner, and whether this relayer is the downstream one.
    fn wormhole(&self) -> Option<(PartyId, bool)> {
        let Behavior::WormholeCollude { partner, .. } = self.behavior else { return None };
        let pid = self.plan.party(partner)?;
        let downstream = match partner {
            PartyRef::Relayer { hop, .. } => hop < self.hop,
            PartyRef::Provider => true,
            PartyRef::Customer => false,
        };
        Some((pid, downstream))
    }

    fn unlocks_optimistically(&self) -> bool {
        match self.behavior {
            Behavior::WithholdUnlock => false,
            Behavior::WormholeCollude { .. } => !self.wormhole().is_some_and(|(_, down)| down),
            _ => true,
        }
    }

    fn answers_judge(&self) -> bool {
        match self.behavior {
            Behavior::WormholeCollude { answer_judge, .. } => answer_judge,
            Behavior::SilentAt { phase } => phase > Phase::Enforcement,
            _ => true,
        }
    }

    fn check_hashes(&self, hashes: &[CommitmentValue], proof: Option<&MerkleMultiProof>) -> bool {
        let plan = &self.plan;
        let job = &plan.jobs[self.path];
        if hashes.len() != job.len() {
            return false;
        }
        let digests: Vec<Digest> = hashes.iter().map(|h| leaf_digest(&h.to_bytes())).collect();
        match (self.multi(), proof) {
            (true, Some(p)) => {
                p.leaf_count == plan.chunk_count
                    && p.indices.iter().map(|i| *i + 1).eq(job.iter().copied())
                    && merkle_verify(&digests, p, &plan.content_root)
            }
            (false, None) => merkle_root_from_digests(&digests).is_ok_and(|root| root == plan.content_root),
            _ => false,
        }
    }

    /// Expected hash list on the incoming lock, multi-path mode.
    fn expected_lock_hashes(&self) -> Option<Vec<CommitmentValue>> {
        let mut out = vec![self.peers.sync_hash?];
        for r in &self.plan.relayers[self.path][self.hop - 1..] {
            out.push(if *r == self.id {
                self.secrets.mask.h_s
            } else {
                *self.peers.h_s.get(r)?
            });
        }
        Some(out)
    }

    fn challenge_for_path(&self) -> Option<EnforcementChallenge> {
        let plan = &self.plan;
        let mut hashes = Vec::new();
        for r in &plan.relayers[self.path] {
            hashes.push(if *r == self.id {
                self.secrets.mask.h_s
            } else {
                *self.peers.h_s.get(r)?
            });
        }
        Some(EnforcementChallenge {
            deadline: plan.timelocks.t2,
            hashes,
            sync_hash: self.peers.sync_hash?,
            addresses: std::iter::once(plan.key(plan.provider).clone())
                .chain(plan.relayers[self.path].iter().map(|r| plan.key(*r).clone()))
                .collect(),
        })
    }

    pub(crate) fn step(&mut self, r: Round, inbox: Vec<Inbound>, chans: &ChannelRegistry, out: &mut Outbox) {
        if self.stopped {
            return;
        }
        let plan = self.plan.clone();
        let (prev, next) = (self.prev(), self.next());
        let mut chunks = Vec::new();
        for item in inbox {
            match item {
                Inbound::Message { from, msg } => match msg {
                    Message::Init if from == plan.customer => self.got_init = true,
                    Message::PeerSetup { h_s, sync_hash, .. } => {
                        let same_path = from == plan.provider || plan.relayers[self.path].contains(&from);
                        if same_path {
                            self.peers.h_s.insert(from, h_s);
                            if from == plan.provider {
                                self.peers.sync_hash = sync_hash;
                            }
                        }
                    }
                    Message::DeliveryHashes { hashes, proof } if from == prev && self.hashes.is_none() => {
                        if !self.check_hashes(&hashes, proof.as_ref()) {
                            return self.give_up(r, "chunk hashes do not match the content root");
                        }
                        self.hashes = Some(hashes.clone());
                        if !self.behavior.silent(Phase::Delivery) {
                            out.send(next, Message::DeliveryHashes { hashes, proof });
                        }
                    }
                    Message::Chunk { ciphertext, links } if from == prev => chunks.push((ciphertext, links)),
                    Message::ChannelLock(tx) if from == prev && self.offered.is_none() => self.offered = Some(tx),
                    Message::Release(s) if from == plan.provider => self.known.push(s),
                    Message::Collusion(ss)
                        if self.wormhole().is_some_and(|(p, _)| p == from) => {
                            self.known.extend(ss);
                        }
                    _ => {}
                },
                Inbound::Notice(n) => self.on_notice(n),
            }
        }

        match r {
            1 => return,
            2 => {
                if !self.got_init {
                    return self.give_up(r, "no init");
                }
                if self.muted(Phase::Setup) {
                    return;
                }
                let sealed_mask = ae_enc(&self.secrets.mask.to_bytes(), plan.key(plan.customer), &mut self.rng);
                out.send(
                    plan.customer,
                    Message::Setup {
                        h_sk: self.secrets.mask.h_sk,
                        h_s: self.secrets.mask.h_s,
                        sealed_mask,
                        sync_hash: None,
                    },
                );
                if self.multi() {
                    let fee = plan.fees[self.path][self.hop - 1];
                    let peers = std::iter::once(plan.provider).chain(plan.relayers[self.path].iter().copied());
                    for p in peers.filter(|p| *p != self.id) {
                        out.send(
                            p,
                            Message::PeerSetup {
                                h_s: self.secrets.mask.h_s,
                                fee: Some(fee),
                                sync_hash: None,
                            },
                        );
                    }
                }
                return;
            }
            3 => {
                if self.multi() {
                    let missing = std::iter::once(plan.provider)
                        .chain(plan.relayers[self.path].iter().copied())
                        .any(|p| p != self.id && !self.peers.h_s.contains_key(&p));
                    if missing || self.peers.sync_hash.is_none() {
                        return self.give_up(r, "peer setup missing");
                    }
                }
                return;
            }
            _ => {}
        }

        // Delivery.
        let job_len = plan.jobs[self.path].len();
        for (c, links) in chunks {
            if self.muted(Phase::Delivery) {
                return;
            }
            if self.hashes.is_none() {
                return self.give_up(r, "chunk before hashes");
            }
            if self.forwarded >= job_len {
                return self.give_up(r, "unexpected extra chunk");
            }
            let id = plan.jobs[self.path][self.forwarded];
            let h_m = match links.last() {
                Some(l) if links.len() == self.hop && open(&c, &l.h_c) => l.h_c,
                _ => return self.give_up(r, format!("malformed chunk {id}")),
            };
            let (c2, com) = self.secrets.encrypt_layer(&self.behavior, &c, h_m, id, &self.key, &mut self.rng);
            let mut links = links;
            links.push(ChainLink::of(&com));
            out.send(next, Message::Chunk { ciphertext: c2, links });
            self.forwarded += 1;
        }
        if r == 4 + self.hop as Round && self.forwarded < job_len {
            return self.give_up(r, "delivery incomplete");
        }

        // Payment.
        if self.incoming.is_none() {
            let deadline = plan.timelocks.lock_deadline(self.hop);
            if self.offered.is_none() {
                if r >= deadline {
                    self.give_up(r, "no incoming lock");
                }
                return;
            }
            if self.muted(Phase::Payment) {
                return;
            }
            let tx = self.offered.take().expect("checked");
            let credit = plan.credits(self.path)[self.hop - 1];
            let (hashes, dl) = if self.multi() {
                let Some(h) = self.expected_lock_hashes() else {
                    return self.give_up(r, "peer hashes missing");
                };
                (HashRule::Exact(h), DeadlineRule::Exact(plan.relay_deadline(self.path, self.hop)))
            } else {
                let len = self.len() - self.hop + 1;
                (
                    HashRule::Contains {
                        own: self.secrets.mask.h_s,
                        len,
                    },
                    DeadlineRule::After(r + 2),
                )
            };
            let exp = LockExpectation {
                payer: prev,
                payee: self.id,
                hashes,
                deadline: dl,
                credit,
            };
            let cin = chans.get(plan.relay_channels[self.path][self.hop - 1]).expect("relay channel exists");
            if let Err(e) = verify_incoming_lock(&tx, cin, plan.key(prev), &exp) {
                return self.give_up(r, format!("incoming lock rejected: {e}"));
            }
            if self.hop < self.len() {
                let cout = chans.get(plan.relay_channels[self.path][self.hop]).expect("relay channel exists");
                let fee = plan.fees[self.path][self.hop - 1];
                let fwd = build_outgoing_lock(cout, self.id, &self.key, &tx, credit, &self.secrets.mask.h_s, fee)
                    .expect("verified lock forwards");
                out.send(next, Message::ChannelLock(fwd));
            }
            if self.multi() {
                let Some(ch) = self.challenge_for_path() else {
                    return self.give_up(r, "peer hashes missing");
                };
                if self.behavior != Behavior::StallReceipt {
                    out.send(plan.provider, Message::Receipt(ack_receipt(&self.key, &ch)));
                }
                self.ch = Some(ch);
            }
            self.incoming = Some(tx);
        }

        // Unlock and enforcement.
        if self.behavior.silent(Phase::Unlock) {
            self.stopped = true;
            return;
        }
        let tx = self.incoming.clone().expect("locked");
        if let Some((partner, true)) = self.wormhole() {
            if self.known.len() > self.shared {
                self.shared = self.known.len();
                let mut leak = self.known.clone();
                leak.push(self.secrets.s);
                out.send(partner, Message::Collusion(leak));
            }
        }
        let mut try_unlock = self.unlocks_optimistically();
        if self.must_log && !self.logged && self.answers_judge() {
            self.logged = true;
            let secret = self.secrets.revealed(&self.behavior, &mut self.rng);
            out.call(SubstrateCall::Log {
                challenge: self.challenge.expect("log follows a challenge"),
                hop: self.hop,
                secret,
            });
            try_unlock = true;
        }
        if try_unlock && !self.unlocked {
            let mut bag = self.known.clone();
            bag.push(self.secrets.s);
            if let Some(mut ordered) = tx.condition.arrange(&bag) {
                let shown = self.secrets.revealed(&self.behavior, &mut self.rng);
                for s in ordered.iter_mut() {
                    if *s == self.secrets.s {
                        *s = shown;
                    }
                }
                self.unlocked = true;
                out.call(SubstrateCall::Update(unlock(&tx, &self.key, ordered)));
            }
        }
        if r >= tx.condition.deadline() {
            self.stopped = true;
        }
    }

    fn on_notice(&mut self, n: Notice) {
        let plan = &self.plan;
        match n {
            Notice::Updated { channel, secrets } => {
                if plan.relay_channels[self.path].get(self.hop) == Some(&channel) {
                    self.known.extend(secrets);
                }
            }
            Notice::Enforced {
                challenge,
                sync_secret,
            } => {
                if self.ch.as_ref().is_some_and(|c| c.digest() == challenge) {
                    self.challenge = Some(challenge);
                    self.known.push(sync_secret);
                    if self.hop == self.len() {
                        self.must_log = true;
                    }
                }
            }
            Notice::Logged {
                challenge,
                hop,
                secrets,
            }
                if self.challenge == Some(challenge) && hop == self.hop + 1 => {
                    self.known.extend(secrets);
                    self.must_log = true;
                }
            _ => {}
        }
    }
}
