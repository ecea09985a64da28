use std::sync::Arc;

use rand_chacha::ChaCha20Rng;

use super::{
    Abort, Behavior, CommitterSecrets, DeliveryMode, DeliveryPlan, Inbound, Message, Notice,
    Outbox, PeerHashes, Phase, SubstrateCall,
};
use crate::commitments::ChainLink;
use crate::crypto::{
    ae_enc, commit, merkle_member, CommitmentValue, Digest, KeyPair, Secret, Signature,
};
use crate::judge::EnforcementChallenge;
use crate::payment::{
    build_outgoing_lock, verify_incoming_lock, verify_receipt, DeadlineRule, HashRule,
    LockExpectation,
};
use crate::pcn::{lock, unlock, ChannelRegistry, ConditionedPayment, PaymentCondition};
use crate::{PartyId, Round};

#[derive(Default)]
struct PathState {
    ch: Option<EnforcementChallenge>,
    receipts: Vec<Option<Signature>>,
    /// `S_{k,1}`, once known from an update or a log.
    secrets: Option<Vec<Secret>>,
    challenge: Option<(Digest, Round)>,
    logged: bool,
    punished: bool,
}

pub struct Provider {
    pub(crate) id: PartyId,
    pub(crate) key: KeyPair,
    pub(crate) behavior: Behavior,
    plan: Arc<DeliveryPlan>,
    rng: ChaCha20Rng,
    chunks: Vec<Vec<u8>>,
    chunk_commitments: Vec<CommitmentValue>,
    pub(crate) secrets: CommitterSecrets,
    pub(crate) sync_secret: Secret,
    sync_hash: CommitmentValue,
    got_init: bool,
    got_start: bool,
    peers: PeerHashes,
    offered: Option<ConditionedPayment>,
    incoming: Option<ConditionedPayment>,
    paths: Vec<PathState>,
    released: Option<Round>,
    bag: Vec<Secret>,
    settle_sent: bool,
    pub(crate) abort: Option<Abort>,
    stopped: bool,
}

impl Provider {
    pub fn new(
        id: PartyId,
        key: KeyPair,
        behavior: Behavior,
        plan: Arc<DeliveryPlan>,
        chunks: Vec<Vec<u8>>,
        chunk_commitments: Vec<CommitmentValue>,
        mut rng: ChaCha20Rng,
    ) -> Self {
        let secrets = CommitterSecrets::generate(&behavior, &key, &mut rng);
        let sync_secret = Secret::random(&mut rng);
        let sync_hash = commit(&sync_secret.0, &mut rng);
        let paths = plan
            .relayers
            .iter()
            .map(|p| PathState {
                receipts: vec![None; p.len()],
                ..PathState::default()
            })
            .collect();
        Provider {
            id,
            key,
            behavior,
            plan,
            rng,
            chunks,
            chunk_commitments,
            secrets,
            sync_secret,
            sync_hash,
            got_init: false,
            got_start: false,
            peers: PeerHashes::default(),
            offered: None,
            incoming: None,
            paths,
            released: None,
            bag: Vec::new(),
            settle_sent: false,
            abort: None,
            stopped: false,
        }
    }

    fn multi(&self) -> bool {
        self.plan.mode == DeliveryMode::MultiPath
    }

    fn give_up(&mut self, round: Round, reason: impl Into<String>) {
        self.abort = Some(Abort {
            round,
            reason: reason.into(),
        });
        self.stopped = true;
    }

    /// Stops acting if silent from `phase` on.
    fn muted(&mut self, phase: Phase) -> bool {
        if self.behavior.silent(phase) {
            self.stopped = true;
        }
        self.stopped
    }

    pub fn is_terminal(&self) -> bool {
        self.stopped
    }

    /// Customer hash list `ℍ_0`: every relayer's `h_s`, path by path, then
    /// the provider's own.
    fn expected_customer_hashes(&self) -> Option<Vec<CommitmentValue>> {
        let mut out = Vec::new();
        for path in &self.plan.relayers {
            for r in path {
                out.push(*self.peers.h_s.get(r)?);
            }
        }
        out.push(self.secrets.mask.h_s);
        Some(out)
    }

    pub(crate) fn step(&mut self, r: Round, inbox: Vec<Inbound>, chans: &ChannelRegistry, out: &mut Outbox) {
        if self.stopped {
            return;
        }
        let plan = self.plan.clone();
        for item in inbox {
            match item {
                Inbound::Message { from, msg } => match msg {
                    Message::Init if from == plan.customer => self.got_init = true,
                    Message::PeerSetup { h_s, fee, .. } => {
                        if plan.position(from).is_some_and(|p| matches!(p, super::PartyRef::Relayer { .. })) {
                            self.peers.h_s.insert(from, h_s);
                            if let Some(f) = fee {
                                self.peers.fee.insert(from, f);
                            }
                        }
                    }
                    Message::DeliveryStart if from == plan.customer => self.got_start = true,
                    Message::ChannelLock(tx) if from == plan.customer && self.offered.is_none() => {
                        self.offered = Some(tx)
                    }
                    Message::Receipt(sig) => {
                        if let Some(super::PartyRef::Relayer { path, hop }) = plan.position(from) {
                            let st = &mut self.paths[path];
                            if let Some(ch) = &st.ch {
                                if verify_receipt(plan.key(from), ch, &sig) {
                                    st.receipts[hop - 1] = Some(sig);
                                }
                            }
                        }
                    }
                    _ => {}
                },
                Inbound::Notice(n) => self.on_notice(n),
            }
        }

        match plan.mode {
            DeliveryMode::MultiPath => self.act_multi(r, chans, out),
            DeliveryMode::SinglePath => self.act_single(r, chans, out),
        }
    }

    fn on_notice(&mut self, n: Notice) {
        match n {
            Notice::Updated { channel, secrets } => {
                if channel == self.plan.customer_channel {
                    return;
                }
                if let Some(k) = self.plan.relay_channels.iter().position(|c| c.first() == Some(&channel)) {
                    self.bag.extend(secrets.iter().copied());
                    self.paths[k].secrets = Some(secrets);
                }
            }
            Notice::Logged { challenge, hop: 1, secrets } => {
                if let Some(st) = self.paths.iter_mut().find(|p| p.challenge.is_some_and(|(id, _)| id == challenge)) {
                    st.logged = true;
                    self.bag.extend(secrets.iter().copied());
                    let mut all = secrets;
                    all.insert(0, self.sync_secret);
                    st.secrets.get_or_insert(all);
                }
            }
            _ => {}
        }
    }

    fn send_setup(&mut self, out: &mut Outbox) {
        let plan = self.plan.clone();
        let sealed_mask = ae_enc(&self.secrets.mask.to_bytes(), plan.key(plan.customer), &mut self.rng);
        let multi = self.multi();
        out.send(
            plan.customer,
            Message::Setup {
                h_sk: self.secrets.mask.h_sk,
                h_s: self.secrets.mask.h_s,
                sealed_mask,
                sync_hash: multi.then_some(self.sync_hash),
            },
        );
        if multi {
            for (_, _, rid) in plan.all_relayers() {
                out.send(
                    rid,
                    Message::PeerSetup {
                        h_s: self.secrets.mask.h_s,
                        fee: None,
                        sync_hash: Some(self.sync_hash),
                    },
                );
            }
        }
    }

    fn deliver(&mut self, out: &mut Outbox) {
        let plan = self.plan.clone();
        let leaves: Vec<[u8; CommitmentValue::ENCODED_LEN]> =
            self.chunk_commitments.iter().map(|h| h.to_bytes()).collect();
        for (k, job) in plan.jobs.iter().enumerate() {
            let to = plan.first_hop(k);
            let hashes: Vec<CommitmentValue> = job.iter().map(|id| self.chunk_commitments[*id as usize - 1]).collect();
            let proof = if self.multi() {
                let positions: Vec<usize> = job.iter().map(|id| *id as usize - 1).collect();
                Some(merkle_member(&positions, &leaves).expect("job positions are valid").1)
            } else {
                None
            };
            out.send(to, Message::DeliveryHashes { hashes, proof });
            for id in job {
                let m = &self.chunks[*id as usize - 1];
                let h_m = self.chunk_commitments[*id as usize - 1];
                let (c, com) = self.secrets.encrypt_layer(&self.behavior, m, h_m, *id, &self.key, &mut self.rng);
                out.send(
                    to,
                    Message::Chunk {
                        ciphertext: c,
                        links: vec![ChainLink::of(&com)],
                    },
                );
            }
        }
    }

    /// Checks the customer's lock; aborts on a bad one.
    fn accept_payment(&mut self, r: Round, chans: &ChannelRegistry) -> bool {
        let Some(tx) = self.offered.take() else { return false };
        let plan = self.plan.clone();
        let (hashes, deadline) = if self.multi() {
            match self.expected_customer_hashes() {
                Some(h) => (HashRule::Exact(h), DeadlineRule::Exact(plan.timelocks.customer)),
                None => {
                    self.give_up(r, "relayer hashes missing");
                    return false;
                }
            }
        } else {
            let len = plan.path_len(0) + 1;
            (
                HashRule::Contains {
                    own: self.secrets.mask.h_s,
                    len,
                },
                DeadlineRule::After(r + 2),
            )
        };
        let exp = LockExpectation {
            payer: plan.customer,
            payee: self.id,
            hashes,
            deadline,
            credit: plan.price,
        };
        let ch = chans.get(plan.customer_channel).expect("customer channel exists");
        match verify_incoming_lock(&tx, ch, plan.key(plan.customer), &exp) {
            Ok(()) => {
                self.incoming = Some(tx);
                true
            }
            Err(e) => {
                self.give_up(r, format!("customer lock rejected: {e}"));
                false
            }
        }
    }

    fn lock_paths(&mut self, chans: &ChannelRegistry, out: &mut Outbox) {
        let plan = self.plan.clone();
        for k in 0..plan.relayers.len() {
            if plan.path_len(k) == 0 {
                continue;
            }
            let hs: Vec<CommitmentValue> = plan.relayers[k].iter().map(|r| self.peers.h_s[r]).collect();
            let ch = EnforcementChallenge {
                deadline: plan.timelocks.t2,
                hashes: hs.clone(),
                sync_hash: self.sync_hash,
                addresses: std::iter::once(self.key.public().clone())
                    .chain(plan.relayers[k].iter().map(|r| plan.key(*r).clone()))
                    .collect(),
            };
            let mut cond_hashes = vec![self.sync_hash];
            cond_hashes.extend(hs);
            let cond = PaymentCondition::new(cond_hashes, plan.relay_deadline(k, 1)).expect("non-empty");
            let c1 = chans.get(plan.relay_channels[k][0]).expect("relay channel exists");
            let tx = lock(c1, self.id, &self.key, plan.credits(k)[0], cond).expect("channel funded for its credit");
            out.send(plan.relayers[k][0], Message::ChannelLock(tx));
            self.paths[k].ch = Some(ch);
        }
    }

    fn settle(&mut self, chans_ready: bool, out: &mut Outbox) {
        if !chans_ready || self.settle_sent {
            return;
        }
        let Some(tx) = self.incoming.clone() else { return };
        let mut bag = self.bag.clone();
        bag.push(self.secrets.s);
        let Some(mut ordered) = tx.condition.arrange(&bag) else { return };
        let shown = self.secrets.revealed(&self.behavior, &mut self.rng);
        for s in ordered.iter_mut() {
            if *s == self.secrets.s {
                *s = shown;
            }
        }
        self.settle_sent = true;
        out.call(SubstrateCall::Update(unlock(&tx, &self.key, ordered)));
    }

    fn act_multi(&mut self, r: Round, chans: &ChannelRegistry, out: &mut Outbox) {
        let plan = self.plan.clone();
        let tl = plan.timelocks.clone();
        match r {
            1 => return,
            2 => {
                if !self.got_init {
                    return self.give_up(r, "no init");
                }
                if self.muted(Phase::Setup) {
                    return;
                }
                return self.send_setup(out);
            }
            3 => {
                for (k, i, rid) in plan.all_relayers() {
                    if !self.peers.h_s.contains_key(&rid) {
                        return self.give_up(r, format!("no setup from R{}.{}", k + 1, i));
                    }
                    if self.peers.fee.get(&rid) != Some(&plan.fees[k][i - 1]) {
                        return self.give_up(r, format!("fee mismatch for R{}.{}", k + 1, i));
                    }
                }
                return;
            }
            4 => {
                if !self.got_start {
                    return self.give_up(r, "no delivery request");
                }
                if self.muted(Phase::Delivery) {
                    return;
                }
                return self.deliver(out);
            }
            _ => {}
        }

        if self.incoming.is_none() {
            if self.offered.is_some() && r <= tl.t1 + 1 {
                if !self.accept_payment(r, chans) || self.muted(Phase::Payment) {
                    return;
                }
                self.lock_paths(chans, out);
            } else {
                if r > tl.t1 {
                    self.give_up(r, "no payment from customer");
                }
                return;
            }
        }

        let relayed: Vec<usize> = (0..plan.relayers.len()).filter(|&k| plan.path_len(k) > 0).collect();
        if self.released.is_none() {
            let all = relayed.iter().all(|&k| self.paths[k].receipts.iter().all(Option::is_some));
            if all {
                if self.muted(Phase::Unlock) {
                    return;
                }
                for &k in &relayed {
                    out.send(plan.last_hop(k), Message::Release(self.sync_secret));
                }
                self.released = Some(r);
            } else if r >= tl.receipt_deadline() {
                return self.give_up(r, "missing lock receipts");
            } else {
                return;
            }
        }
        let released = self.released.expect("set above");

        for &k in &relayed {
            let len = plan.path_len(k) as Round;
            let st = &mut self.paths[k];
            if st.secrets.is_none() && st.challenge.is_none() && r == released + len + 1 {
                if self.behavior.silent(Phase::Enforcement) {
                    continue;
                }
                let ch = st.ch.clone().expect("locked path has a challenge");
                let receipts = st.receipts.iter().map(|s| s.expect("all receipts in")).collect();
                st.challenge = Some((ch.digest(), r));
                out.call(SubstrateCall::Enforce {
                    ch,
                    receipts,
                    sync_secret: self.sync_secret,
                });
            }
            if let Some((id, tr)) = st.challenge {
                if !st.logged && !st.punished && r == tr + len + 1 {
                    st.punished = true;
                    out.call(SubstrateCall::Punish { challenge: id });
                }
            }
        }

        let every = relayed.iter().all(|&k| self.paths[k].secrets.is_some());
        let last_call = released + 2 * tl.max_len as Round + 3;
        if !self.behavior.silent(Phase::Unlock) {
            self.settle(every || r >= last_call, out);
        }
        let pending_punish = relayed.iter().any(|&k| {
            let st = &self.paths[k];
            st.challenge.is_some() && !st.logged && !st.punished
        });
        if (self.settle_sent || r >= last_call) && !pending_punish {
            self.stopped = true;
        }
    }

    fn act_single(&mut self, r: Round, chans: &ChannelRegistry, out: &mut Outbox) {
        let plan = self.plan.clone();
        match r {
            1 | 3 => return,
            2 => {
                if !self.got_init {
                    return self.give_up(r, "no init");
                }
                if self.muted(Phase::Setup) {
                    return;
                }
                return self.send_setup(out);
            }
            4 => {
                if !self.got_start {
                    return self.give_up(r, "no delivery request");
                }
                if self.muted(Phase::Delivery) {
                    return;
                }
                return self.deliver(out);
            }
            _ => {}
        }
        if self.incoming.is_none() {
            if self.offered.is_some() && r <= plan.timelocks.t1 + 1 {
                if !self.accept_payment(r, chans) || self.muted(Phase::Payment) {
                    return;
                }
                if plan.path_len(0) > 0 {
                    let tx = self.incoming.clone().expect("accepted");
                    let c1 = chans.get(plan.relay_channels[0][0]).expect("relay channel exists");
                    let own_fee = plan.price - plan.credits(0)[0];
                    let fwd = build_outgoing_lock(c1, self.id, &self.key, &tx, plan.price, &self.secrets.mask.h_s, own_fee)
                        .expect("accepted lock forwards");
                    out.send(plan.relayers[0][0], Message::ChannelLock(fwd));
                }
            } else {
                if r > plan.timelocks.t1 {
                    self.give_up(r, "no payment from customer");
                }
                return;
            }
        }
        if self.muted(Phase::Unlock) {
            return;
        }
        let ready = plan.path_len(0) == 0 || self.paths[0].secrets.is_some();
        self.settle(ready, out);
        let deadline = self.incoming.as_ref().expect("accepted").condition.deadline();
        if self.settle_sent || r > deadline {
            self.stopped = true;
        }
    }
}
