use crate::{Amount, Round};

/// Payer behaviors in the stand-alone exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayerBehavior {
    Honest,
    /// Never releases the synchronisation secret.
    WithholdRelease,
    /// Releases but never goes to the judge.
    NoEnforce,
}

/// Payee behaviors in the stand-alone exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PayeeBehavior {
    Honest,
    /// Ignores its incoming lock.
    NoLock,
    /// Forwards the lock but never returns a receipt.
    NoAck,
    /// Skips the optimistic unlock but answers the judge.
    WithholdUnlock,
    /// Neither unlocks nor answers the judge.
    Unresponsive,
    /// Uses a wrong secret for every unlock and log.
    WrongSecret,
}

impl PayeeBehavior {
    pub const ALL: [PayeeBehavior; 6] = [
        PayeeBehavior::Honest,
        PayeeBehavior::NoLock,
        PayeeBehavior::NoAck,
        PayeeBehavior::WithholdUnlock,
        PayeeBehavior::Unresponsive,
        PayeeBehavior::WrongSecret,
    ];

    pub(crate) fn unlocks_optimistically(self) -> bool {
        matches!(self, PayeeBehavior::Honest | PayeeBehavior::NoAck)
    }

    pub(crate) fn answers_judge(self) -> bool {
        matches!(
            self,
            PayeeBehavior::Honest | PayeeBehavior::NoAck | PayeeBehavior::WithholdUnlock
        )
    }
}

impl PayerBehavior {
    pub const ALL: [PayerBehavior; 3] = [
        PayerBehavior::Honest,
        PayerBehavior::WithholdRelease,
        PayerBehavior::NoEnforce,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeSchedule {
    pub payer: PayerBehavior,
    /// One entry per payee `u_1..u_n`.
    pub payees: Vec<PayeeBehavior>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeParams {
    /// Fee `B_i` of each payee.
    pub fees: Vec<Amount>,
    pub b_max: Amount,
    /// Enforcement deadline `T`.
    pub deadline: Round,
}

impl ExchangeParams {
    /// Default deadline leaves room for release, the optimistic cascade and a
    /// challenge: `T = 2n + 5`.
    pub fn new(fees: Vec<Amount>, b_max: Amount) -> Self {
        let n = fees.len() as Round;
        ExchangeParams {
            fees,
            b_max,
            deadline: 2 * n + 5,
        }
    }

    pub fn hops(&self) -> usize {
        self.fees.len()
    }

    /// Deadline of the lock payee `i` receives: `T + n − i + 2`.
    pub fn lock_deadline(&self, hop: usize) -> Round {
        self.deadline + (self.hops() - hop) as Round + 2
    }

    /// Round the payer releases when every receipt is in.
    pub fn release_round(&self) -> Round {
        self.hops() as Round + 2
    }

    /// Round the payer challenges if hop 1 has not settled.
    pub fn challenge_round(&self) -> Round {
        self.release_round() + self.hops() as Round + 1
    }
}

/// Externally observable events of one exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ObsEvent {
    /// Channel into payee `i` carries a lock.
    Locked(usize),
    Ack(usize),
    Release,
    /// Channel into payee `i` settled.
    Unlocked(usize),
    Challenge,
    Response(usize),
    Punished(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeTrace {
    /// Sorted by round, then event.
    pub events: Vec<(Round, ObsEvent)>,
    /// Amount each payee received over its incoming channel.
    pub credits: Vec<Amount>,
    /// Ledger change per party, payer first.
    pub ledger_deltas: Vec<i64>,
}

impl ExchangeTrace {
    pub(crate) fn finish(mut events: Vec<(Round, ObsEvent)>, credits: Vec<Amount>, ledger_deltas: Vec<i64>) -> Self {
        events.sort();
        ExchangeTrace {
            events,
            credits,
            ledger_deltas,
        }
    }
}
