//! Ideal model of the single-path exchange.
//!
//! No cryptography and no messages: the model decides directly, round by
//! round, which channels lock, settle or get punished. It serves as the
//! oracle for [`super::run_protocol`].

use super::exchange::{ExchangeParams, ExchangeSchedule, ExchangeTrace, ObsEvent};
use super::{cumulative_credits, PayeeBehavior, PayerBehavior};
use crate::Round;

#[allow(clippy::needless_range_loop)]
pub fn run_ideal(params: &ExchangeParams, sched: &ExchangeSchedule) -> ExchangeTrace {
    let n = params.hops();
    assert_eq!(sched.payees.len(), n, "one behavior per payee");
    let beh = |i: usize| sched.payees[i - 1];
    let credit = cumulative_credits(&params.fees);
    let mut ev = Vec::new();

    let mut acked = vec![false; n + 1];
    ev.push((1, ObsEvent::Locked(1)));
    for i in 1..=n {
        if beh(i) == PayeeBehavior::NoLock {
            break;
        }
        let r = i as Round + 1;
        if i < n {
            ev.push((r, ObsEvent::Locked(i + 1)));
        }
        if beh(i) != PayeeBehavior::NoAck {
            acked[i] = true;
            ev.push((r, ObsEvent::Ack(i)));
        }
    }

    let mut credits = vec![0; n];
    let mut ledger = vec![0i64; n + 1];
    let released = sched.payer != PayerBehavior::WithholdRelease && acked[1..].iter().all(|&a| a);
    if !released {
        return ExchangeTrace::finish(ev, credits, ledger);
    }
    let t_rel = params.release_round();
    ev.push((t_rel, ObsEvent::Release));

    let mut unlocked: Vec<Option<Round>> = vec![None; n + 2];
    let mut logged = vec![false; n + 2];
    let mut challenge: Option<Round> = None;
    let end = params.deadline + n as Round + 4;
    for r in t_rel + 1..=end {
        for i in (1..=n).rev() {
            let ready = i == n || unlocked[i + 1].is_some_and(|u| u < r);
            if unlocked[i].is_none()
                && ready
                && beh(i).unlocks_optimistically()
                && r <= params.lock_deadline(i)
            {
                unlocked[i] = Some(r);
                ev.push((r, ObsEvent::Unlocked(i)));
            }
            if let Some(tr) = challenge {
                let window = tr + (n - i) as Round + 1;
                if r == window && beh(i).answers_judge() && (i == n || logged[i + 1]) {
                    logged[i] = true;
                    ev.push((r, ObsEvent::Response(i)));
                    if unlocked[i].is_none() {
                        unlocked[i] = Some(r);
                        ev.push((r, ObsEvent::Unlocked(i)));
                    }
                }
            }
        }
        if sched.payer == PayerBehavior::Honest
            && challenge.is_none()
            && r == params.challenge_round()
            && unlocked[1].is_none_or(|u| u >= r)
        {
            challenge = Some(r);
            ev.push((r, ObsEvent::Challenge));
        }
        if let Some(tr) = challenge {
            if r == tr + n as Round + 1 && !logged[1] {
                let offender = (1..=n).rev().find(|&i| !logged[i]).expect("hop 1 missing");
                ledger[offender] -= params.b_max as i64;
                ledger[0] += params.b_max as i64;
                ev.push((r, ObsEvent::Punished(offender)));
            }
        }
    }
    for i in 1..=n {
        if unlocked[i].is_some() {
            credits[i - 1] = credit[i - 1];
        }
    }
    ExchangeTrace::finish(ev, credits, ledger)
}
