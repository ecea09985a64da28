//! Ledger and payment-channel substrate: balances, channels, conditioned
//! payments and their settlement.

mod channel;
mod ledger;

pub use channel::{
    lock, unlock, Channel, ChannelId, ChannelRegistry, ConditionedPayment, PaymentCondition,
    Updated, UpdateRequest,
};
pub use ledger::Ledger;

use thiserror::Error;

use crate::{Amount, PartyId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PcnError {
    #[error("{party} holds {have}, needs {need}")]
    Insufficient {
        party: PartyId,
        have: Amount,
        need: Amount,
    },
    #[error("unknown channel {0:?}")]
    UnknownChannel(ChannelId),
    #[error("{0} is not an endpoint of the channel")]
    NotEndpoint(PartyId),
    #[error("{0} has no registered key")]
    UnknownParty(PartyId),
    #[error("a payment condition needs at least one hash")]
    EmptyCondition,
    #[error("new balances do not preserve the channel total")]
    BalanceSum,
    #[error("initiator signature invalid")]
    BadInitiatorSignature,
    #[error("redeemer signature invalid")]
    BadRedeemerSignature,
    #[error("payment condition not satisfied")]
    ConditionFailed,
}
