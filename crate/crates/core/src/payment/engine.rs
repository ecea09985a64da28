//! The single-path exchange run by message-passing parties over the real
//! channel substrate and judge.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::exchange::{ExchangeParams, ExchangeSchedule, ExchangeTrace, ObsEvent};
use super::{
    ack_receipt, build_outgoing_lock, cumulative_credits, verify_incoming_lock, verify_receipt,
    DeadlineRule, EnforcementChallenge, HashRule, LockExpectation, PayeeBehavior, PayerBehavior,
};
use crate::crypto::{commit, CommitmentValue, Digest, KeyPair, Secret, Signature};
use crate::judge::JudgeConfig;
use crate::pcn::{lock, unlock, ChannelId, ConditionedPayment, PaymentCondition, UpdateRequest};
use crate::substrate::Substrate;
use crate::{PartyId, Round};

enum Msg {
    Lock(ConditionedPayment),
    Receipt(usize, Signature),
    Release(Secret),
    Updated(usize, Vec<Secret>),
    Enforced(Secret),
    Logged(usize, Vec<Secret>),
}

enum Call {
    Update(usize, UpdateRequest),
    Enforce,
    Log(usize, Secret),
    Punish,
}

impl Call {
    fn rank(&self) -> u8 {
        match self {
            Call::Update(..) => 0,
            _ => 1,
        }
    }
}

#[derive(Default)]
struct Payee {
    incoming: Option<ConditionedPayment>,
    unlock_sent: bool,
    log_sent: bool,
    known: Vec<Secret>,
}

#[derive(Default)]
struct Payer {
    receipts: Vec<Option<Signature>>,
    released: bool,
    settled: bool,
    challenge: Option<(Digest, Round)>,
    hop1_logged: bool,
}

/// Runs the exchange for `sched` and reports what an observer sees.
pub fn run_protocol(params: &ExchangeParams, sched: &ExchangeSchedule, seed: u64) -> ExchangeTrace {
    let n = params.hops();
    assert_eq!(sched.payees.len(), n, "one behavior per payee");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let keys: Vec<KeyPair> = (0..=n).map(|_| KeyPair::generate(&mut rng)).collect();
    let ids: Vec<PartyId> = (0..=n).map(|i| PartyId(i as u32)).collect();
    let credit = cumulative_credits(&params.fees);

    let mut sub = Substrate::new(JudgeConfig::new(params.b_max));
    for i in 0..=n {
        sub.dir.insert(ids[i], keys[i].public().clone());
        sub.ledger.credit(ids[i], params.b_max);
    }
    let chans: Vec<ChannelId> = (1..=n)
        .map(|i| sub.channels.open(ids[i - 1], ids[i], credit[i - 1], 0))
        .collect();
    let secrets: Vec<Secret> = (0..=n).map(|_| Secret::random(&mut rng)).collect();
    let wrong: Vec<Secret> = (0..=n).map(|_| Secret::random(&mut rng)).collect();
    let hashes: Vec<CommitmentValue> = secrets.iter().map(|s| commit(&s.0, &mut rng)).collect();
    let ch = EnforcementChallenge {
        deadline: params.deadline,
        hashes: hashes[1..].to_vec(),
        sync_hash: hashes[0],
        addresses: keys.iter().map(|k| k.public().clone()).collect(),
    };
    let hop_hashes = |i: usize| -> Vec<CommitmentValue> {
        std::iter::once(hashes[0]).chain(hashes[i..].iter().copied()).collect()
    };

    let mut payer = Payer {
        receipts: vec![None; n + 1],
        ..Payer::default()
    };
    let mut payees: Vec<Payee> = (0..=n).map(|_| Payee::default()).collect();
    let mut inbox: Vec<Vec<Msg>> = (0..=n).map(|_| Vec::new()).collect();
    let mut ev = Vec::new();
    let end = params.deadline + n as Round + 4;

    for r in 1..=end {
        let mut next: Vec<Vec<Msg>> = (0..=n).map(|_| Vec::new()).collect();
        let mut calls: Vec<(usize, Call)> = Vec::new();
        let mut boxes = std::mem::take(&mut inbox);

        // Payer.
        if r == 1 && n > 0 {
            let cond = PaymentCondition::new(hop_hashes(1), params.lock_deadline(1)).expect("non-empty");
            let c1 = sub.channels.get(chans[0]).expect("opened");
            let tx = lock(c1, ids[0], &keys[0], credit[0], cond).expect("funded exactly");
            next[1].push(Msg::Lock(tx));
            ev.push((r, ObsEvent::Locked(1)));
        }
        for m in boxes[0].drain(..) {
            match m {
                Msg::Receipt(i, sig) if verify_receipt(keys[i].public(), &ch, &sig) => {
                    payer.receipts[i] = Some(sig)
                }
                Msg::Updated(1, _) => payer.settled = true,
                Msg::Logged(1, _) => payer.hop1_logged = true,
                _ => {}
            }
        }
        if r == params.release_round()
            && sched.payer != PayerBehavior::WithholdRelease
            && payer.receipts[1..].iter().all(Option::is_some)
        {
            payer.released = true;
            next[n].push(Msg::Release(secrets[0]));
            ev.push((r, ObsEvent::Release));
        }
        if sched.payer == PayerBehavior::Honest
            && payer.released
            && !payer.settled
            && r == params.challenge_round()
        {
            calls.push((0, Call::Enforce));
        }
        if let Some((_, tr)) = payer.challenge {
            if r == tr + n as Round + 1 && !payer.hop1_logged {
                calls.push((0, Call::Punish));
            }
        }

        // Payees.
        for i in 1..=n {
            let beh = sched.payees[i - 1];
            let st = &mut payees[i];
            let mut respond = false;
            for m in boxes[i].drain(..) {
                match m {
                    Msg::Lock(tx) if beh != PayeeBehavior::NoLock && st.incoming.is_none() => {
                        let exp = LockExpectation {
                            payer: ids[i - 1],
                            payee: ids[i],
                            hashes: HashRule::Exact(hop_hashes(i)),
                            deadline: DeadlineRule::Exact(params.lock_deadline(i)),
                            credit: credit[i - 1],
                        };
                        let cin = sub.channels.get(chans[i - 1]).expect("opened");
                        if verify_incoming_lock(&tx, cin, keys[i - 1].public(), &exp).is_err() {
                            continue;
                        }
                        if i < n {
                            let cout = sub.channels.get(chans[i]).expect("opened");
                            let fwd = build_outgoing_lock(
                                cout, ids[i], &keys[i], &tx, credit[i - 1], &hashes[i], params.fees[i - 1],
                            )
                            .expect("verified lock forwards");
                            next[i + 1].push(Msg::Lock(fwd));
                            ev.push((r, ObsEvent::Locked(i + 1)));
                        }
                        if beh != PayeeBehavior::NoAck {
                            next[0].push(Msg::Receipt(i, ack_receipt(&keys[i], &ch)));
                            ev.push((r, ObsEvent::Ack(i)));
                        }
                        st.incoming = Some(tx);
                    }
                    Msg::Release(s) => st.known.push(s),
                    Msg::Updated(j, s) if j == i + 1 => st.known.extend(s),
                    Msg::Enforced(s) => {
                        st.known.push(s);
                        respond |= i == n;
                    }
                    Msg::Logged(j, s) => {
                        st.known.extend(s);
                        respond |= j == i + 1;
                    }
                    _ => {}
                }
            }
            let Some(tx) = st.incoming.clone() else { continue };
            let mine = if beh == PayeeBehavior::WrongSecret { wrong[i] } else { secrets[i] };
            let answers = beh.answers_judge() || beh == PayeeBehavior::WrongSecret;
            let mut try_unlock = beh.unlocks_optimistically() || beh == PayeeBehavior::WrongSecret;
            if respond && answers && !st.log_sent {
                st.log_sent = true;
                calls.push((i, Call::Log(i, mine)));
                try_unlock = true;
            }
            if try_unlock && !st.unlock_sent {
                let mut bag = st.known.clone();
                bag.push(secrets[i]);
                if let Some(mut ordered) = tx.condition.arrange(&bag) {
                    for s in ordered.iter_mut() {
                        if *s == secrets[i] {
                            *s = mine;
                        }
                    }
                    st.unlock_sent = true;
                    calls.push((i, Call::Update(i, unlock(&tx, &keys[i], ordered))));
                }
            }
        }

        // Substrate: channel updates first, then judge calls.
        calls.sort_by_key(|(who, c)| (c.rank(), *who));
        for (who, call) in calls {
            match call {
                Call::Update(i, req) => {
                    if let Ok(up) = sub.channels.update(&req, r, &sub.dir) {
                        next[i - 1].push(Msg::Updated(i, up.secrets.clone()));
                        next[i].push(Msg::Updated(i, up.secrets));
                        ev.push((r, ObsEvent::Unlocked(i)));
                    }
                }
                Call::Enforce => {
                    let receipts: Vec<Signature> = payer.receipts[1..].iter().flatten().copied().collect();
                    if let Ok(id) = sub.judge.enforce(r, ids[0], &ch, &receipts, &secrets[0], &sub.dir) {
                        payer.challenge = Some((id, r));
                        for b in next.iter_mut().skip(1) {
                            b.push(Msg::Enforced(secrets[0]));
                        }
                        ev.push((r, ObsEvent::Challenge));
                    }
                }
                Call::Log(i, s) => {
                    let id = payer.challenge.expect("log follows enforce").0;
                    if let Ok(logged) = sub.judge.log_response(r, ids[who], &id, i, &s, &sub.dir) {
                        for b in next.iter_mut() {
                            b.push(Msg::Logged(i, logged.clone()));
                        }
                        ev.push((r, ObsEvent::Response(i)));
                    }
                }
                Call::Punish => {
                    let id = payer.challenge.expect("punish follows enforce").0;
                    if let Ok(Some(p)) = sub.judge.punish(r, ids[0], &id, &mut sub.ledger, &sub.dir) {
                        ev.push((r, ObsEvent::Punished(p.0 as usize)));
                    }
                }
            }
        }
        inbox = next;
    }

    let credits = chans
        .iter()
        .map(|c| sub.channels.get(*c).expect("opened").right_balance)
        .collect();
    let ledger = ids
        .iter()
        .map(|p| sub.ledger.balance(*p) as i64 - params.b_max as i64)
        .collect();
    ExchangeTrace::finish(ev, credits, ledger)
}
