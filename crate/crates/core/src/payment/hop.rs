use super::LockRejection;
use crate::crypto::{CommitmentValue, KeyPair, PublicKey, Signature};
use crate::judge::{receipt_bytes, EnforcementChallenge};
use crate::pcn::{lock, Channel, ConditionedPayment, PaymentCondition};
use crate::{Amount, PartyId, Round};

/// How a payee checks the hash list of its incoming lock.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HashRule {
    /// The list must equal this one, in order.
    Exact(Vec<CommitmentValue>),
    /// Own hash present and exactly `len` hashes.
    Contains { own: CommitmentValue, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeadlineRule {
    Exact(Round),
    /// Deadline strictly after the given round.
    After(Round),
}

/// What a payee expects its incoming conditioned payment to look like.
#[derive(Clone, Debug)]
pub struct LockExpectation {
    pub payer: PartyId,
    pub payee: PartyId,
    pub hashes: HashRule,
    pub deadline: DeadlineRule,
    /// Exact credit, i.e. the sum of this and every downstream fee.
    pub credit: Amount,
}

/// Validates an incoming lock against the channel state and expectations.
pub fn verify_incoming_lock(
    tx: &ConditionedPayment,
    ch: &Channel,
    payer_key: &PublicKey,
    exp: &LockExpectation,
) -> Result<(), LockRejection> {
    if tx.channel != ch.id || tx.initiator != exp.payer || ch.counterparty(exp.payer) != Some(exp.payee) {
        return Err(LockRejection::WrongChannel);
    }
    if tx.left_balance.checked_add(tx.right_balance) != ch.left_balance.checked_add(ch.right_balance) {
        return Err(LockRejection::BalanceSum);
    }
    if tx.credit(ch) != Some(exp.credit) {
        return Err(LockRejection::WrongAmount);
    }
    let hashes = tx.condition.hashes();
    let ok = match &exp.hashes {
        HashRule::Exact(want) => hashes == want.as_slice(),
        HashRule::Contains { own, len } => hashes.len() == *len && hashes.contains(own),
    };
    if !ok {
        return Err(LockRejection::WrongHashes);
    }
    let t = tx.condition.deadline();
    let ok = match exp.deadline {
        DeadlineRule::Exact(want) => t == want,
        DeadlineRule::After(r) => t > r,
    };
    if !ok {
        return Err(LockRejection::WrongDeadline);
    }
    if !payer_key.verify(&tx.signed_bytes(), &tx.sig) {
        return Err(LockRejection::BadSignature);
    }
    Ok(())
}

/// Forwards an accepted lock: strips `own_hash`, lowers the deadline by one
/// round and keeps `own_fee`.
pub fn build_outgoing_lock(
    next: &Channel,
    me: PartyId,
    key: &KeyPair,
    incoming: &ConditionedPayment,
    incoming_credit: Amount,
    own_hash: &CommitmentValue,
    own_fee: Amount,
) -> Result<ConditionedPayment, LockRejection> {
    let mut hashes = incoming.condition.hashes().to_vec();
    let pos = hashes.iter().position(|h| h == own_hash).ok_or(LockRejection::WrongHashes)?;
    hashes.remove(pos);
    let amt = incoming_credit.checked_sub(own_fee).ok_or(LockRejection::WrongAmount)?;
    let deadline = incoming.condition.deadline().checked_sub(1).ok_or(LockRejection::WrongDeadline)?;
    let cond = PaymentCondition::new(hashes, deadline).map_err(|_| LockRejection::WrongHashes)?;
    lock(next, me, key, amt, cond).map_err(LockRejection::Substrate)
}

/// The relayer's signature over `Ch`, sent back to the payer.
pub fn ack_receipt(key: &KeyPair, ch: &EnforcementChallenge) -> Signature {
    key.sign(&receipt_bytes(ch))
}

pub fn verify_receipt(pk: &PublicKey, ch: &EnforcementChallenge, sig: &Signature) -> bool {
    pk.verify(&receipt_bytes(ch), sig)
}

/// `𝔳_i = Σ_{j ≥ i} B_j` for every hop, given per-hop fees.
pub fn cumulative_credits(fees: &[Amount]) -> Vec<Amount> {
    let mut out = vec![0; fees.len()];
    let mut acc = 0;
    for i in (0..fees.len()).rev() {
        acc += fees[i];
        out[i] = acc;
    }
    out
}
