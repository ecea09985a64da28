//! Relay payments: deadline schedules, lock checking and forwarding, lock
//! receipts, and a stand-alone single-path exchange with its ideal model.

mod engine;
mod exchange;
mod hop;
mod ideal;
mod timelock;

pub use engine::run_protocol;
pub use exchange::{
    ExchangeParams, ExchangeSchedule, ExchangeTrace, ObsEvent, PayeeBehavior, PayerBehavior,
};
pub use hop::{
    ack_receipt, build_outgoing_lock, cumulative_credits, verify_incoming_lock, verify_receipt,
    DeadlineRule, HashRule, LockExpectation,
};
pub use ideal::run_ideal;
pub use timelock::{timelocks_multi, timelocks_single, MultiTimelocks};

pub use crate::judge::EnforcementChallenge;

use thiserror::Error;

use crate::pcn::PcnError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaymentError {
    #[error("a delivery needs at least one path")]
    NoPaths,
}

/// Why a payee refused an incoming conditioned payment.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LockRejection {
    #[error("lock is for another channel or payer")]
    WrongChannel,
    #[error("lock does not preserve the channel total")]
    BalanceSum,
    #[error("lock credits the wrong amount")]
    WrongAmount,
    #[error("lock hash list is not the expected one")]
    WrongHashes,
    #[error("lock deadline is not the expected one")]
    WrongDeadline,
    #[error("lock signature invalid")]
    BadSignature,
    #[error(transparent)]
    Substrate(PcnError),
}
