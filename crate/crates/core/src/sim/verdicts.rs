//! Executable fairness, confidentiality and termination predicates.

use std::collections::BTreeMap;

use serde::Serialize;

use super::Observations;
use crate::crypto::{open, CommitmentValue, Secret};
use crate::parties::{DeliveryPlan, PartyMachine, PartyRef};
use crate::{Amount, PartyId, Round};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    /// False when the predicate has nobody to protect, e.g. a corrupted
    /// customer.
    pub applicable: bool,
    pub holds: bool,
    pub detail: String,
}

impl Verdict {
    fn na(why: &str) -> Self {
        Verdict {
            applicable: false,
            holds: true,
            detail: why.to_string(),
        }
    }

    fn check(failures: Vec<String>, ok: &str) -> Self {
        Verdict {
            applicable: true,
            holds: failures.is_empty(),
            detail: if failures.is_empty() {
                ok.to_string()
            } else {
                failures.join("; ")
            },
        }
    }

    pub fn passed(&self) -> bool {
        !self.applicable || self.holds
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdicts {
    pub customer_fairness: Verdict,
    pub provider_fairness: Verdict,
    pub relayer_fairness: Verdict,
    pub confidentiality: Verdict,
    pub termination: Verdict,
}

impl Verdicts {
    pub fn all(&self) -> [(&'static str, &Verdict); 5] {
        [
            ("customer-fairness", &self.customer_fairness),
            ("provider-fairness", &self.provider_fairness),
            ("relayer-fairness", &self.relayer_fairness),
            ("confidentiality", &self.confidentiality),
            ("termination", &self.termination),
        ]
    }

    pub fn all_hold(&self) -> bool {
        self.all().iter().all(|(_, v)| v.passed())
    }
}

pub(crate) struct Inputs<'a> {
    pub plan: &'a DeliveryPlan,
    pub parties: &'a [PartyMachine],
    pub obs: &'a Observations,
    pub deltas: &'a BTreeMap<PartyId, i64>,
    pub ledger_deltas: &'a BTreeMap<PartyId, i64>,
    pub b_max: Amount,
    pub content_ok: bool,
    pub chunks: &'a [Vec<u8>],
    pub chunk_commitments: &'a [CommitmentValue],
    pub bound: Round,
    pub last_round: Round,
}

impl Inputs<'_> {
    fn honest(&self, id: PartyId) -> bool {
        self.parties.iter().any(|p| p.id() == id && p.behavior().is_honest())
    }

    fn delta(&self, id: PartyId) -> i64 {
        self.deltas.get(&id).copied().unwrap_or(0)
    }

    fn settled(&self, ch: crate::pcn::ChannelId) -> Option<Round> {
        self.obs.settled.get(&ch).copied()
    }

    fn provider_secret(&self) -> Secret {
        match &self.parties[1] {
            PartyMachine::Provider(p) => p.secrets.s,
            _ => unreachable!("party 1 is the provider"),
        }
    }

    fn relayer_secret(&self, id: PartyId) -> Option<Secret> {
        self.parties.iter().find_map(|p| match p {
            PartyMachine::Relayer(r) if r.id == id => Some(r.secrets.s),
            _ => None,
        })
    }
}

pub(crate) fn evaluate(x: &Inputs<'_>) -> Verdicts {
    Verdicts {
        customer_fairness: customer_fairness(x),
        provider_fairness: provider_fairness(x),
        relayer_fairness: relayer_fairness(x),
        confidentiality: confidentiality(x),
        termination: termination(x),
    }
}

/// The customer pays only if it gets the content or `b_max` in compensation.
fn customer_fairness(x: &Inputs<'_>) -> Verdict {
    let c = x.plan.customer;
    if !x.honest(c) {
        return Verdict::na("customer corrupted");
    }
    let paid = x.settled(x.plan.customer_channel).is_some();
    let compensated = x.ledger_deltas.get(&c).copied().unwrap_or(0) >= x.b_max as i64;
    let mut fail = Vec::new();
    if paid && !x.content_ok && !compensated {
        fail.push("customer paid without content or compensation".to_string());
    }
    if !paid && x.delta(c) < 0 {
        fail.push(format!("customer lost {} without paying", -x.delta(c)));
    }
    Verdict::check(fail, if paid { "paid and served" } else { "did not pay" })
}

/// The provider's key material and content stay hidden until it is paid,
/// and relay fees leave its pocket only against the price or compensation.
fn provider_fairness(x: &Inputs<'_>) -> Verdict {
    let p = x.plan.provider;
    if !x.honest(p) {
        return Verdict::na("provider corrupted");
    }
    let mut fail = Vec::new();
    let settled = x.settled(x.plan.customer_channel);
    if let Some(seen) = x.obs.first_seen.get(&x.provider_secret()) {
        if settled.is_none_or(|s| *seen <= s) {
            fail.push(format!("provider secret revealed in round {seen} before payment"));
        }
    }
    if let Some((r, to, id)) = x.obs.plaintext_leaks.first() {
        fail.push(format!("plaintext chunk {id} reached {} in round {r}", x.plan.label(*to)));
    }
    let paid_out: Amount = (0..x.plan.relayers.len())
        .filter(|&k| x.plan.path_len(k) > 0 && x.settled(x.plan.relay_channels[k][0]).is_some())
        .map(|k| x.plan.credits(k)[0])
        .sum();
    let compensation = x.ledger_deltas.get(&p).copied().unwrap_or(0);
    if paid_out > 0 && settled.is_none() && compensation < paid_out as i64 {
        fail.push(format!("paid {paid_out} in fees with neither price nor compensation"));
    }
    Verdict::check(fail, "protected")
}

/// An honest relayer whose secret is out gets its fee, no honest relayer
/// loses money, and a customer able to decrypt a path has paid everyone on it.
fn relayer_fairness(x: &Inputs<'_>) -> Verdict {
    let honest: Vec<(usize, usize, PartyId)> = x.plan.all_relayers().filter(|(_, _, r)| x.honest(*r)).collect();
    if honest.is_empty() {
        return Verdict::na("no honest relayer");
    }
    let mut fail = Vec::new();
    for &(k, i, r) in &honest {
        let fee = x.plan.fees[k][i - 1] as i64;
        let name = PartyRef::Relayer { path: k, hop: i };
        let d = x.delta(r);
        if d < 0 {
            fail.push(format!("{name} lost {}", -d));
        }
        let s = x.relayer_secret(r).expect("relayer exists");
        if x.obs.first_seen.contains_key(&s) && d < fee {
            fail.push(format!("{name} secret revealed but gained {d} < fee {fee}"));
        }
    }
    let customer_knows = x.obs.known_by.get(&x.plan.customer);
    for k in 0..x.plan.relayers.len() {
        let path_open = x.plan.relayers[k]
            .iter()
            .all(|r| customer_knows.is_some_and(|set| set.contains(&x.relayer_secret(*r).expect("relayer exists"))));
        if !path_open {
            continue;
        }
        for &(hk, i, r) in honest.iter().filter(|(hk, _, _)| *hk == k) {
            let fee = x.plan.fees[hk][i - 1] as i64;
            if x.delta(r) < fee {
                fail.push(format!("customer can decrypt path {} but R{}.{i} was not paid", k + 1, k + 1));
            }
        }
    }
    let ok = honest
        .iter()
        .map(|&(k, i, r)| format!("{} protected ({:+})", PartyRef::Relayer { path: k, hop: i }, x.delta(r)))
        .collect::<Vec<_>>()
        .join(", ");
    Verdict::check(fail, &ok)
}

/// With an honest provider and customer, relayers never see plaintext and
/// peeling every relayer layer leaves the provider's ciphertext.
fn confidentiality(x: &Inputs<'_>) -> Verdict {
    if !x.honest(x.plan.customer) || !x.honest(x.plan.provider) {
        return Verdict::na("customer or provider corrupted");
    }
    let mut fail = Vec::new();
    for (r, to, id) in &x.obs.plaintext_leaks {
        fail.push(format!("plaintext chunk {id} reached {} in round {r}", x.plan.label(*to)));
    }
    let PartyMachine::Customer(c) = &x.parties[0] else { unreachable!("party 0 is the customer") };
    for (k, delivered) in c.received.iter().enumerate() {
        let keys: Vec<_> = x.plan.relayers[k]
            .iter()
            .map(|r| {
                x.parties
                    .iter()
                    .find_map(|p| match p {
                        PartyMachine::Relayer(rel) if rel.id == *r => Some(rel.secrets.sk),
                        _ => None,
                    })
                    .expect("relayer exists")
            })
            .collect();
        for ch in delivered {
            let mut c = ch.ciphertext.clone();
            for sk in keys.iter().rev() {
                c = sk.decrypt_chunk(&c, ch.id);
            }
            let idx = ch.id as usize - 1;
            if c == x.chunks[idx] || open(&c, &x.chunk_commitments[idx]) {
                fail.push(format!("relayer keys alone recover chunk {}", ch.id));
            }
        }
    }
    Verdict::check(fail, "relayers learn nothing")
}

/// Every honest party stops by `t_0 + max|p| + 2`.
fn termination(x: &Inputs<'_>) -> Verdict {
    let mut fail = Vec::new();
    for p in x.parties.iter().filter(|p| p.behavior().is_honest()) {
        match x.obs.terminal_at.get(&p.id()) {
            Some(r) if *r <= x.bound => {}
            Some(r) => fail.push(format!("{} stopped in round {r} > {}", x.plan.label(p.id()), x.bound)),
            None => fail.push(format!("{} never stopped (ran {} rounds)", x.plan.label(p.id()), x.last_round)),
        }
    }
    Verdict::check(fail, "all honest parties stopped in time")
}
