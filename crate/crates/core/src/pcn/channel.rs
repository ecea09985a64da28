use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PcnError;
use crate::crypto::{open, CommitmentValue, KeyPair, Secret, Signature};
use crate::{Amount, Directory, PartyId, Round};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChannelId(pub u32);

/// A bidirectional channel between `left` and `right`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub id: ChannelId,
    pub left: PartyId,
    pub right: PartyId,
    pub left_balance: Amount,
    pub right_balance: Amount,
}

impl Channel {
    pub fn balance_of(&self, p: PartyId) -> Option<Amount> {
        if p == self.left {
            Some(self.left_balance)
        } else if p == self.right {
            Some(self.right_balance)
        } else {
            None
        }
    }

    pub fn counterparty(&self, p: PartyId) -> Option<PartyId> {
        if p == self.left {
            Some(self.right)
        } else if p == self.right {
            Some(self.left)
        } else {
            None
        }
    }
}

/// `φ = (ℍ, t)`: redeemable until round `t` by secrets opening every hash.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaymentCondition {
    hashes: Vec<CommitmentValue>,
    deadline: Round,
}

impl PaymentCondition {
    pub fn new(hashes: Vec<CommitmentValue>, deadline: Round) -> Result<Self, PcnError> {
        if hashes.is_empty() {
            return Err(PcnError::EmptyCondition);
        }
        Ok(PaymentCondition { hashes, deadline })
    }

    pub fn hashes(&self) -> &[CommitmentValue] {
        &self.hashes
    }

    pub fn deadline(&self) -> Round {
        self.deadline
    }

    /// True iff `secrets[i]` opens `hashes[i]` for every `i` and `now ≤ t`.
    pub fn eval(&self, secrets: &[Secret], now: Round) -> bool {
        now <= self.deadline
            && secrets.len() == self.hashes.len()
            && secrets.iter().zip(&self.hashes).all(|(s, h)| open(&s.0, h))
    }

    /// Orders a bag of known secrets to match the hash list, if every hash is
    /// covered.
    pub fn arrange<'a>(&self, known: impl IntoIterator<Item = &'a Secret> + Clone) -> Option<Vec<Secret>> {
        self.hashes
            .iter()
            .map(|h| known.clone().into_iter().find(|s| open(&s.0, h)).copied())
            .collect()
    }

    /// `|ℍ|_be32 ‖ ℍ… ‖ t_be64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 48 * self.hashes.len());
        out.extend_from_slice(&(self.hashes.len() as u32).to_be_bytes());
        for h in &self.hashes {
            out.extend_from_slice(&h.to_bytes());
        }
        out.extend_from_slice(&self.deadline.to_be_bytes());
        out
    }
}

/// A signed proposal to move a channel to `(left_balance, right_balance)`
/// once `condition` is met.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionedPayment {
    pub channel: ChannelId,
    pub left_balance: Amount,
    pub right_balance: Amount,
    pub condition: PaymentCondition,
    pub initiator: PartyId,
    pub sig: Signature,
}

impl ConditionedPayment {
    /// `"conditioned-payment" ‖ cid_be32 ‖ lb_be64 ‖ rb_be64 ‖ φ`.
    pub fn signed_bytes(&self) -> Vec<u8> {
        Self::body(self.channel, self.left_balance, self.right_balance, &self.condition)
    }

    fn body(cid: ChannelId, lb: Amount, rb: Amount, cond: &PaymentCondition) -> Vec<u8> {
        let mut m = b"conditioned-payment".to_vec();
        m.extend_from_slice(&cid.0.to_be_bytes());
        m.extend_from_slice(&lb.to_be_bytes());
        m.extend_from_slice(&rb.to_be_bytes());
        m.extend_from_slice(&cond.to_bytes());
        m
    }

    /// Amount the counterparty of the initiator gains relative to `ch`.
    pub fn credit(&self, ch: &Channel) -> Option<Amount> {
        if self.initiator == ch.left {
            self.right_balance.checked_sub(ch.right_balance)
        } else if self.initiator == ch.right {
            self.left_balance.checked_sub(ch.left_balance)
        } else {
            None
        }
    }
}

/// Builds a conditioned payment of `amt` from `payer` to its counterparty.
pub fn lock(
    ch: &Channel,
    payer: PartyId,
    payer_key: &KeyPair,
    amt: Amount,
    condition: PaymentCondition,
) -> Result<ConditionedPayment, PcnError> {
    let have = ch.balance_of(payer).ok_or(PcnError::NotEndpoint(payer))?;
    if have < amt {
        return Err(PcnError::Insufficient {
            party: payer,
            have,
            need: amt,
        });
    }
    let (lb, rb) = if payer == ch.left {
        (ch.left_balance - amt, ch.right_balance + amt)
    } else {
        (ch.left_balance + amt, ch.right_balance - amt)
    };
    let sig = payer_key.sign(&ConditionedPayment::body(ch.id, lb, rb, &condition));
    Ok(ConditionedPayment {
        channel: ch.id,
        left_balance: lb,
        right_balance: rb,
        condition,
        initiator: payer,
        sig,
    })
}

/// The redeemer's countersigned request to settle `tx` with `secrets`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UpdateRequest {
    pub tx: ConditionedPayment,
    pub redeemer_sig: Signature,
    pub secrets: Vec<Secret>,
}

pub fn unlock(tx: &ConditionedPayment, redeemer: &KeyPair, secrets: Vec<Secret>) -> UpdateRequest {
    UpdateRequest {
        redeemer_sig: redeemer.sign(&tx.signed_bytes()),
        tx: tx.clone(),
        secrets,
    }
}

/// Result of a successful update, delivered to both endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Updated {
    pub channel: ChannelId,
    pub left: PartyId,
    pub right: PartyId,
    pub secrets: Vec<Secret>,
}

#[derive(Clone, Debug, Default)]
pub struct ChannelRegistry {
    channels: BTreeMap<ChannelId, Channel>,
}

impl ChannelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open(&mut self, left: PartyId, right: PartyId, lb: Amount, rb: Amount) -> ChannelId {
        let id = ChannelId(self.channels.len() as u32);
        self.channels.insert(
            id,
            Channel {
                id,
                left,
                right,
                left_balance: lb,
                right_balance: rb,
            },
        );
        id
    }

    pub fn get(&self, id: ChannelId) -> Option<&Channel> {
        self.channels.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Channel> {
        self.channels.values()
    }

    /// Applies a countersigned conditioned payment if the balances are
    /// conserved, both endpoints signed, and the condition holds at `now`.
    pub fn update(
        &mut self,
        req: &UpdateRequest,
        now: Round,
        dir: &Directory,
    ) -> Result<Updated, PcnError> {
        let tx = &req.tx;
        let ch = self
            .channels
            .get_mut(&tx.channel)
            .ok_or(PcnError::UnknownChannel(tx.channel))?;
        let redeemer = ch
            .counterparty(tx.initiator)
            .ok_or(PcnError::NotEndpoint(tx.initiator))?;
        if tx.left_balance.checked_add(tx.right_balance)
            != ch.left_balance.checked_add(ch.right_balance)
        {
            return Err(PcnError::BalanceSum);
        }
        let body = tx.signed_bytes();
        let ik = dir.key(tx.initiator).ok_or(PcnError::UnknownParty(tx.initiator))?;
        if !ik.verify(&body, &tx.sig) {
            return Err(PcnError::BadInitiatorSignature);
        }
        let rk = dir.key(redeemer).ok_or(PcnError::UnknownParty(redeemer))?;
        if !rk.verify(&body, &req.redeemer_sig) {
            return Err(PcnError::BadRedeemerSignature);
        }
        if !tx.condition.eval(&req.secrets, now) {
            return Err(PcnError::ConditionFailed);
        }
        ch.left_balance = tx.left_balance;
        ch.right_balance = tx.right_balance;
        Ok(Updated {
            channel: ch.id,
            left: ch.left,
            right: ch.right,
            secrets: req.secrets.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::commit;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    struct Fx {
        rng: ChaCha20Rng,
        dir: Directory,
        a: KeyPair,
        b: KeyPair,
        reg: ChannelRegistry,
        cid: ChannelId,
    }

    fn fx() -> Fx {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let a = KeyPair::generate(&mut rng);
        let b = KeyPair::generate(&mut rng);
        let mut dir = Directory::new();
        dir.insert(PartyId(0), a.public().clone());
        dir.insert(PartyId(1), b.public().clone());
        let mut reg = ChannelRegistry::new();
        let cid = reg.open(PartyId(0), PartyId(1), 10, 5);
        Fx {
            rng,
            dir,
            a,
            b,
            reg,
            cid,
        }
    }

    #[test]
    fn condition_eval_boundaries() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let s1 = Secret::random(&mut rng);
        let s2 = Secret::random(&mut rng);
        let phi = PaymentCondition::new(
            vec![commit(&s1.0, &mut rng), commit(&s2.0, &mut rng)],
            10,
        )
        .unwrap();
        assert!(phi.eval(&[s1, s2], 10));
        assert!(!phi.eval(&[s1, s2], 11));
        assert!(!phi.eval(&[s2, s1], 5));
        assert!(!phi.eval(&[s1], 5));
        assert!(!phi.eval(&[s1, s2, s1], 5));
        assert_eq!(phi.arrange(&[s2, s1]), Some(vec![s1, s2]));
        assert_eq!(phi.arrange(&[s2]), None);
        assert_eq!(PaymentCondition::new(vec![], 1), Err(PcnError::EmptyCondition));
    }

    #[test]
    fn lock_unlock_update() {
        let mut f = fx();
        let s = Secret::random(&mut f.rng);
        let phi = PaymentCondition::new(vec![commit(&s.0, &mut f.rng)], 5).unwrap();
        let ch = f.reg.get(f.cid).unwrap().clone();
        let tx = lock(&ch, PartyId(0), &f.a, 4, phi).unwrap();
        assert_eq!((tx.left_balance, tx.right_balance), (6, 9));
        assert_eq!(tx.credit(&ch), Some(4));
        let req = unlock(&tx, &f.b, vec![s]);
        let up = f.reg.update(&req, 5, &f.dir).unwrap();
        assert_eq!(up.secrets, vec![s]);
        let ch = f.reg.get(f.cid).unwrap();
        assert_eq!((ch.left_balance, ch.right_balance), (6, 9));
    }

    #[test]
    fn lock_rejects_overdraw() {
        let mut f = fx();
        let s = Secret::random(&mut f.rng);
        let phi = PaymentCondition::new(vec![commit(&s.0, &mut f.rng)], 5).unwrap();
        let ch = f.reg.get(f.cid).unwrap().clone();
        assert!(matches!(
            lock(&ch, PartyId(1), &f.b, 6, phi),
            Err(PcnError::Insufficient { .. })
        ));
    }

    #[test]
    fn update_failures_leave_channel_untouched() {
        let mut f = fx();
        let s = Secret::random(&mut f.rng);
        let phi = PaymentCondition::new(vec![commit(&s.0, &mut f.rng)], 5).unwrap();
        let ch = f.reg.get(f.cid).unwrap().clone();
        let tx = lock(&ch, PartyId(0), &f.a, 4, phi).unwrap();

        let late = unlock(&tx, &f.b, vec![s]);
        assert_eq!(f.reg.update(&late, 6, &f.dir), Err(PcnError::ConditionFailed));

        let wrong = unlock(&tx, &f.b, vec![Secret::random(&mut f.rng)]);
        assert_eq!(f.reg.update(&wrong, 1, &f.dir), Err(PcnError::ConditionFailed));

        let self_signed = unlock(&tx, &f.a, vec![s]);
        assert_eq!(
            f.reg.update(&self_signed, 1, &f.dir),
            Err(PcnError::BadRedeemerSignature)
        );

        let mut inflated = unlock(&tx, &f.b, vec![s]);
        inflated.tx.right_balance += 1;
        assert_eq!(f.reg.update(&inflated, 1, &f.dir), Err(PcnError::BalanceSum));

        let mut forged = tx.clone();
        forged.left_balance = 5;
        forged.right_balance = 10;
        let forged = unlock(&forged, &f.b, vec![s]);
        assert_eq!(
            f.reg.update(&forged, 1, &f.dir),
            Err(PcnError::BadInitiatorSignature)
        );
        assert_eq!(f.reg.get(f.cid).unwrap(), &ch);
    }
}
