//! On-chain judge: content registration, misbehavior disputes and the
//! enforcement challenge for relay payments.

mod challenge;

pub use challenge::{receipt_bytes, EnforcementChallenge};

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::commitments::{pome_ver_with, pomm_ver, PoMEProof, PoMMProof, PomeVerifier, TransparentVerifier};
use crate::crypto::{open, Digest, PublicKey, Secret, Signature};
use crate::pcn::{Ledger, PcnError};
use crate::{Amount, Directory, PartyId, Round};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JudgeConfig {
    /// Compensation paid per proven misbehavior, also the registration cap.
    pub b_max: Amount,
    /// Minimum ledger balance to register content.
    pub deposit_min: Amount,
    /// Extra share of `b_max` burned on a proven misbehavior, in basis points.
    pub slash_bps: u32,
}

impl JudgeConfig {
    pub fn new(b_max: Amount) -> Self {
        JudgeConfig {
            b_max,
            deposit_min: b_max,
            slash_bps: 0,
        }
    }

    pub fn slash_amount(&self) -> Amount {
        (self.b_max as u128 * self.slash_bps as u128 / 10_000) as Amount
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum JudgeOp {
    Register,
    Pomm,
    Pome,
    Enforce,
    Log,
    Punish,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum JudgeError {
    #[error("deposit below the registration minimum")]
    DepositTooLow,
    #[error("price must be strictly below the compensation cap")]
    PriceTooHigh,
    #[error("content already registered")]
    AlreadyRegistered,
    #[error("proof does not verify")]
    InvalidProof,
    #[error("statement already adjudicated")]
    Replay,
    #[error("accused key is not in the directory")]
    UnknownAccused,
    #[error("caller is not entitled to this call")]
    WrongCaller,
    #[error("call outside its round window")]
    OutsideWindow,
    #[error("challenge already enforced")]
    AlreadyEnforced,
    #[error("malformed challenge")]
    MalformedChallenge,
    #[error("synchronisation secret does not open h_0")]
    BadSyncSecret,
    #[error("missing or invalid lock receipt from hop {0}")]
    BadReceipt(usize),
    #[error("no such challenge")]
    UnknownChallenge,
    #[error("secret does not open the hop hash")]
    BadSecret,
    #[error("downstream hop has not logged")]
    DownstreamMissing,
    #[error("hop already logged")]
    AlreadyLogged,
    #[error("challenge already settled")]
    AlreadySettled,
    #[error(transparent)]
    Ledger(#[from] PcnError),
}

/// One judge call, accepted or not. Every entry is an on-chain operation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JudgeEvent {
    pub round: Round,
    pub op: JudgeOp,
    pub caller: PartyId,
    pub outcome: Result<(), JudgeError>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Registration {
    pub provider: PartyId,
    pub price: Amount,
}

/// Public state of an enforcement challenge.
#[derive(Clone, Debug)]
pub struct ActiveChallenge {
    pub ch: EnforcementChallenge,
    pub started: Round,
    /// `secrets[i]` for hop `i` in `1..=n`; index 0 is unused.
    pub secrets: Vec<Option<Secret>>,
    pub settled: bool,
}

impl ActiveChallenge {
    pub fn hops(&self) -> usize {
        self.ch.hashes.len()
    }

    /// The only round in which hop `i` may log.
    pub fn window(&self, hop: usize) -> Round {
        self.started + (self.hops() - hop) as Round + 1
    }

    pub fn punish_round(&self) -> Round {
        self.started + self.hops() as Round + 1
    }

    /// Logged secrets of hops `i..=n`, in hop order.
    pub fn logged_from(&self, hop: usize) -> Vec<Secret> {
        self.secrets[hop..].iter().flatten().copied().collect()
    }
}

pub struct Judge {
    cfg: JudgeConfig,
    verifier: Box<dyn PomeVerifier + Send + Sync>,
    registrations: BTreeMap<Digest, Registration>,
    adjudicated: BTreeSet<Digest>,
    challenges: BTreeMap<Digest, ActiveChallenge>,
    events: Vec<JudgeEvent>,
}

impl Judge {
    pub fn new(cfg: JudgeConfig) -> Self {
        Self::with_verifier(cfg, Box::new(TransparentVerifier))
    }

    pub fn with_verifier(cfg: JudgeConfig, verifier: Box<dyn PomeVerifier + Send + Sync>) -> Self {
        Judge {
            cfg,
            verifier,
            registrations: BTreeMap::new(),
            adjudicated: BTreeSet::new(),
            challenges: BTreeMap::new(),
            events: Vec::new(),
        }
    }

    pub fn config(&self) -> &JudgeConfig {
        &self.cfg
    }

    pub fn events(&self) -> &[JudgeEvent] {
        &self.events
    }

    pub fn registration(&self, com_m: &Digest) -> Option<&Registration> {
        self.registrations.get(com_m)
    }

    pub fn challenge(&self, id: &Digest) -> Option<&ActiveChallenge> {
        self.challenges.get(id)
    }

    fn record<T>(
        &mut self,
        round: Round,
        op: JudgeOp,
        caller: PartyId,
        r: Result<T, JudgeError>,
    ) -> Result<T, JudgeError> {
        self.events.push(JudgeEvent {
            round,
            op,
            caller,
            outcome: r.as_ref().map(|_| ()).map_err(Clone::clone),
        });
        r
    }

    /// Registers `com_m` at `price`. Requires a deposit of at least
    /// `deposit_min` and `price < b_max`.
    pub fn register(
        &mut self,
        now: Round,
        uid: PartyId,
        com_m: Digest,
        price: Amount,
        ledger: &Ledger,
    ) -> Result<(), JudgeError> {
        let r = if ledger.balance(uid) < self.cfg.deposit_min {
            Err(JudgeError::DepositTooLow)
        } else if price >= self.cfg.b_max {
            Err(JudgeError::PriceTooHigh)
        } else if let std::collections::btree_map::Entry::Vacant(e) = self.registrations.entry(com_m) {
            e.insert(Registration { provider: uid, price });
            Ok(())
        } else {
            Err(JudgeError::AlreadyRegistered)
        };
        self.record(now, JudgeOp::Register, uid, r)
    }

    fn compensate(
        &mut self,
        statement: Digest,
        uid: PartyId,
        tid: &PublicKey,
        ledger: &mut Ledger,
        dir: &Directory,
    ) -> Result<PartyId, JudgeError> {
        let offender = dir.party(tid).ok_or(JudgeError::UnknownAccused)?;
        let slash = self.cfg.slash_amount();
        let have = ledger.balance(offender);
        if have < self.cfg.b_max + slash {
            return Err(PcnError::Insufficient {
                party: offender,
                have,
                need: self.cfg.b_max + slash,
            }
            .into());
        }
        ledger.transfer(offender, uid, self.cfg.b_max)?;
        ledger.transfer(offender, PartyId::BURN, slash)?;
        self.adjudicated.insert(statement);
        Ok(offender)
    }

    /// Pays `b_max` from the accused to `uid` on a valid PoMM.
    pub fn handle_pomm(
        &mut self,
        now: Round,
        uid: PartyId,
        tid: &PublicKey,
        proof: &PoMMProof,
        ledger: &mut Ledger,
        dir: &Directory,
    ) -> Result<PartyId, JudgeError> {
        let st = proof.statement_digest(tid);
        let r = if self.adjudicated.contains(&st) {
            Err(JudgeError::Replay)
        } else if !pomm_ver(proof, tid) {
            Err(JudgeError::InvalidProof)
        } else {
            self.compensate(st, uid, tid, ledger, dir)
        };
        self.record(now, JudgeOp::Pomm, uid, r)
    }

    /// Pays `b_max` from the accused to `uid` on a valid PoME.
    pub fn handle_pome(
        &mut self,
        now: Round,
        uid: PartyId,
        tid: &PublicKey,
        proof: &PoMEProof,
        ledger: &mut Ledger,
        dir: &Directory,
    ) -> Result<PartyId, JudgeError> {
        let st = proof.statement_digest(tid);
        let r = if self.adjudicated.contains(&st) {
            Err(JudgeError::Replay)
        } else if !pome_ver_with(self.verifier.as_ref(), proof, tid) {
            Err(JudgeError::InvalidProof)
        } else {
            self.compensate(st, uid, tid, ledger, dir)
        };
        self.record(now, JudgeOp::Pome, uid, r)
    }

    /// Opens a challenge on `ch`, publishing `sync_secret`. Returns the
    /// challenge id.
    pub fn enforce(
        &mut self,
        now: Round,
        caller: PartyId,
        ch: &EnforcementChallenge,
        receipts: &[Signature],
        sync_secret: &Secret,
        dir: &Directory,
    ) -> Result<Digest, JudgeError> {
        let r = self.check_enforce(now, caller, ch, receipts, sync_secret, dir);
        let r = r.inspect(|&id| {
            self.challenges.insert(
                id,
                ActiveChallenge {
                    ch: ch.clone(),
                    started: now,
                    secrets: vec![None; ch.hashes.len() + 1],
                    settled: false,
                },
            );
        });
        self.record(now, JudgeOp::Enforce, caller, r)
    }

    fn check_enforce(
        &self,
        now: Round,
        caller: PartyId,
        ch: &EnforcementChallenge,
        receipts: &[Signature],
        sync_secret: &Secret,
        dir: &Directory,
    ) -> Result<Digest, JudgeError> {
        let n = ch.hashes.len();
        if n == 0 || ch.addresses.len() != n + 1 {
            return Err(JudgeError::MalformedChallenge);
        }
        if dir.key(caller) != Some(&ch.addresses[0]) {
            return Err(JudgeError::WrongCaller);
        }
        if now >= ch.deadline {
            return Err(JudgeError::OutsideWindow);
        }
        let id = ch.digest();
        if self.challenges.contains_key(&id) {
            return Err(JudgeError::AlreadyEnforced);
        }
        if !open(&sync_secret.0, &ch.sync_hash) {
            return Err(JudgeError::BadSyncSecret);
        }
        let body = receipt_bytes(ch);
        for i in 1..=n {
            match receipts.get(i - 1) {
                Some(sig) if ch.addresses[i].verify(&body, sig) => {}
                _ => return Err(JudgeError::BadReceipt(i)),
            }
        }
        if receipts.len() != n {
            return Err(JudgeError::BadReceipt(n + 1));
        }
        Ok(id)
    }

    /// Hop `hop` reveals its secret during its window. Returns the logged
    /// secrets of hops `hop..=n`.
    pub fn log_response(
        &mut self,
        now: Round,
        caller: PartyId,
        challenge: &Digest,
        hop: usize,
        secret: &Secret,
        dir: &Directory,
    ) -> Result<Vec<Secret>, JudgeError> {
        let r = self.check_log(now, caller, challenge, hop, secret, dir).map(|_| {
            let c = self.challenges.get_mut(challenge).expect("checked");
            c.secrets[hop] = Some(*secret);
            c.logged_from(hop)
        });
        self.record(now, JudgeOp::Log, caller, r)
    }

    fn check_log(
        &self,
        now: Round,
        caller: PartyId,
        challenge: &Digest,
        hop: usize,
        secret: &Secret,
        dir: &Directory,
    ) -> Result<(), JudgeError> {
        let c = self.challenges.get(challenge).ok_or(JudgeError::UnknownChallenge)?;
        let n = c.hops();
        if hop == 0 || hop > n || dir.key(caller) != Some(&c.ch.addresses[hop]) {
            return Err(JudgeError::WrongCaller);
        }
        if now != c.window(hop) {
            return Err(JudgeError::OutsideWindow);
        }
        if c.secrets[hop].is_some() {
            return Err(JudgeError::AlreadyLogged);
        }
        if !open(&secret.0, &c.ch.hashes[hop - 1]) {
            return Err(JudgeError::BadSecret);
        }
        if hop < n && c.secrets[hop + 1].is_none() {
            return Err(JudgeError::DownstreamMissing);
        }
        Ok(())
    }

    /// After the last window, charges `b_max` to the highest-index hop that
    /// did not log. Returns the punished party, or `None` if every hop logged.
    pub fn punish(
        &mut self,
        now: Round,
        caller: PartyId,
        challenge: &Digest,
        ledger: &mut Ledger,
        dir: &Directory,
    ) -> Result<Option<PartyId>, JudgeError> {
        let r = self.do_punish(now, caller, challenge, ledger, dir);
        self.record(now, JudgeOp::Punish, caller, r)
    }

    fn do_punish(
        &mut self,
        now: Round,
        caller: PartyId,
        challenge: &Digest,
        ledger: &mut Ledger,
        dir: &Directory,
    ) -> Result<Option<PartyId>, JudgeError> {
        let b_max = self.cfg.b_max;
        let c = self.challenges.get_mut(challenge).ok_or(JudgeError::UnknownChallenge)?;
        if dir.key(caller) != Some(&c.ch.addresses[0]) {
            return Err(JudgeError::WrongCaller);
        }
        if now != c.punish_round() {
            return Err(JudgeError::OutsideWindow);
        }
        if c.settled {
            return Err(JudgeError::AlreadySettled);
        }
        let Some(hop) = (1..=c.hops()).rev().find(|&i| c.secrets[i].is_none()) else {
            c.settled = true;
            return Ok(None);
        };
        let offender = dir.party(&c.ch.addresses[hop]).ok_or(JudgeError::UnknownAccused)?;
        ledger.transfer(offender, caller, b_max)?;
        c.settled = true;
        Ok(Some(offender))
    }
}
