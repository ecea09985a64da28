//! Round-based simulator: builds a delivery from a scenario, runs every party
//! against the shared substrate and scores the result.

pub mod config;
mod metrics;
pub mod overhead;
pub mod scenarios;
mod trace;
mod verdicts;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use memchr::memmem::Finder;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

pub use config::{ConfigError, ContentConfig, Corruption, FundingConfig, PathConfig, ScenarioConfig};
pub use metrics::{JudgeCounts, LinkStats, Metrics, MetricsReport};
pub use trace::{trace_digest, write_jsonl, TraceRecord};
pub use verdicts::{Verdict, Verdicts};

use crate::crypto::{commit, hash, hash_parts, merkle_root, CommitmentValue, KeyPair, Secret};
use crate::judge::{JudgeConfig, JudgeError};
use crate::parties::{
    Abort, Behavior, Customer, CustomerOutcome, DeliveryPlan, Inbound, Message, Notice, Outbox,
    PartyMachine, PartyRef, Provider, Relayer, SubstrateCall,
};
use crate::payment::{timelocks_multi, PaymentError};
use crate::pcn::ChannelId;
use crate::substrate::Substrate;
use crate::{Amount, PartyId, Round};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("provider registration failed: {0}")]
    Register(JudgeError),
    #[error(transparent)]
    Payment(#[from] PaymentError),
}

/// Coarse classification of how a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutcomeClass {
    /// The customer's payment settled without any judge involvement.
    Delivered,
    /// A challenge was opened on some path.
    Enforced,
    /// No payment settled.
    AbortedBeforePayment,
    /// A misbehavior proof was accepted.
    Disputed,
}

impl OutcomeClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            OutcomeClass::Delivered => "delivered",
            OutcomeClass::Enforced => "enforced",
            OutcomeClass::AbortedBeforePayment => "aborted-before-payment",
            OutcomeClass::Disputed => "disputed",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub name: String,
    pub seed: u64,
    pub outcome: OutcomeClass,
    pub customer: Option<CustomerOutcome>,
    /// The customer ended with exactly the provider's content.
    pub content_ok: bool,
    pub metrics: MetricsReport,
    pub verdicts: Verdicts,
    pub aborts: BTreeMap<String, Abort>,
    /// On-chain ledger change per party; only the judge moves these funds.
    pub ledger_deltas: BTreeMap<String, i64>,
    /// First settlement round per channel, keyed `payer->payee`.
    pub settled: BTreeMap<String, Round>,
    /// Hex digest over the trace.
    pub trace_digest: String,
    #[serde(skip)]
    pub trace: Vec<TraceRecord>,
    #[serde(skip)]
    pub raw: Metrics,
    #[serde(skip)]
    pub labels: BTreeMap<PartyId, String>,
}

impl RunReport {
    pub fn party(&self, label: &str) -> Option<PartyId> {
        self.labels.iter().find(|(_, l)| l.as_str() == label).map(|(p, _)| *p)
    }

    pub fn delta(&self, label: &str) -> i64 {
        self.party(label)
            .and_then(|p| self.raw.balance_deltas.get(&p).copied())
            .unwrap_or(0)
    }
}

/// What the simulator observed, fed to the verdicts.
pub(crate) struct Observations {
    /// First round each secret was delivered to anyone.
    pub first_seen: BTreeMap<Secret, Round>,
    pub known_by: BTreeMap<PartyId, BTreeSet<Secret>>,
    /// `(round, recipient, chunk id)` of any plaintext chunk found on the wire.
    pub plaintext_leaks: Vec<(Round, PartyId, u32)>,
    pub settled: BTreeMap<ChannelId, Round>,
    pub terminal_at: BTreeMap<PartyId, Round>,
}

struct World {
    cfg: ScenarioConfig,
    plan: Arc<DeliveryPlan>,
    sub: Substrate,
    parties: Vec<PartyMachine>,
    content: Vec<u8>,
    chunks: Vec<Vec<u8>>,
    chunk_commitments: Vec<CommitmentValue>,
}

fn party_seed(tag: &[u8], seed: u64, id: PartyId) -> [u8; 32] {
    hash_parts(&[tag, &seed.to_be_bytes(), &id.0.to_be_bytes()]).0
}

fn build(cfg: &ScenarioConfig) -> Result<World, SimError> {
    cfg.validate()?;
    let seed = cfg.seed;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cs = cfg.content.chunk_size;
    let mut content = vec![0u8; cfg.content.len()];
    rng.fill_bytes(&mut content);
    let chunks: Vec<Vec<u8>> = (0..cfg.content.chunk_count as usize)
        .map(|i| {
            let mut c = content[i * cs..((i + 1) * cs).min(content.len())].to_vec();
            c.resize(cs, 0);
            c
        })
        .collect();
    let chunk_commitments: Vec<CommitmentValue> = chunks.iter().map(|c| commit(c, &mut rng)).collect();
    let leaves: Vec<[u8; CommitmentValue::ENCODED_LEN]> = chunk_commitments.iter().map(|h| h.to_bytes()).collect();
    let content_root = merkle_root(&leaves).expect("at least one chunk");

    let customer = PartyId(0);
    let provider = PartyId(1);
    let mut next = 2;
    let relayers: Vec<Vec<PartyId>> = cfg
        .paths
        .iter()
        .map(|p| {
            p.fees
                .iter()
                .map(|_| {
                    next += 1;
                    PartyId(next - 1)
                })
                .collect()
        })
        .collect();
    let mut refs = vec![(customer, PartyRef::Customer), (provider, PartyRef::Provider)];
    for (k, p) in relayers.iter().enumerate() {
        for (i, r) in p.iter().enumerate() {
            refs.push((*r, PartyRef::Relayer { path: k, hop: i + 1 }));
        }
    }
    let keypair = |id: PartyId, r: PartyRef| -> KeyPair {
        match cfg.keys.get(&r.to_string()) {
            Some(h) => {
                let b = hex::decode(h).expect("validated");
                KeyPair::from_seed(&b.try_into().expect("validated length"))
            }
            None => KeyPair::from_seed(&party_seed(b"party-key", seed, id)),
        }
    };
    let keys: BTreeMap<PartyId, KeyPair> = refs.iter().map(|(id, r)| (*id, keypair(*id, *r))).collect();

    let mut jc = JudgeConfig::new(cfg.b_max);
    jc.slash_bps = cfg.slash_bps;
    let mut sub = Substrate::new(jc);
    for (id, kp) in &keys {
        sub.dir.insert(*id, kp.public().clone());
        sub.ledger.credit(*id, cfg.deposit());
    }
    let slack = cfg.funding.slack;
    let customer_channel = sub.channels.open(customer, provider, cfg.price + slack, 0);
    let fees: Vec<Vec<Amount>> = cfg.paths.iter().map(|p| p.fees.clone()).collect();
    let relay_channels: Vec<Vec<ChannelId>> = relayers
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let credits = crate::payment::cumulative_credits(&fees[k]);
            p.iter()
                .enumerate()
                .map(|(i, r)| {
                    let payer = if i == 0 { provider } else { p[i - 1] };
                    sub.channels.open(payer, *r, credits[i] + slack, 0)
                })
                .collect()
        })
        .collect();
    sub.judge
        .register(0, provider, content_root, cfg.price, &sub.ledger)
        .map_err(SimError::Register)?;

    let plan = Arc::new(DeliveryPlan {
        mode: cfg.mode,
        customer,
        provider,
        relayers,
        fees,
        jobs: cfg.paths.iter().map(|p| p.job.clone()).collect(),
        price: cfg.price,
        content_root,
        chunk_count: cfg.content.chunk_count,
        content_len: cfg.content.len(),
        customer_channel,
        relay_channels,
        timelocks: timelocks_multi(&cfg.lengths())?,
        keys: keys.iter().map(|(id, k)| (*id, k.public().clone())).collect(),
    });

    let party_rng = |id: PartyId| ChaCha20Rng::from_seed(party_seed(b"party-rng", seed, id));
    let mut parties = Vec::new();
    for (id, r) in &refs {
        let kp = keys[id].clone();
        let beh = cfg.behavior_of(*r);
        parties.push(match r {
            PartyRef::Customer => PartyMachine::Customer(Customer::new(*id, kp, beh, plan.clone())),
            PartyRef::Provider => PartyMachine::Provider(Provider::new(
                *id,
                kp,
                beh,
                plan.clone(),
                chunks.clone(),
                chunk_commitments.clone(),
                party_rng(*id),
            )),
            PartyRef::Relayer { .. } => {
                PartyMachine::Relayer(Relayer::new(*id, kp, beh, plan.clone(), party_rng(*id)))
            }
        });
    }
    Ok(World {
        cfg: cfg.clone(),
        plan,
        sub,
        parties,
        content,
        chunks,
        chunk_commitments,
    })
}

/// Holdings of every party: ledger balance plus its side of every channel.
fn holdings(sub: &Substrate, parties: &[PartyId]) -> BTreeMap<PartyId, i64> {
    let mut out: BTreeMap<PartyId, i64> = parties.iter().map(|p| (*p, sub.ledger.balance(*p) as i64)).collect();
    for ch in sub.channels.iter() {
        *out.entry(ch.left).or_default() += ch.left_balance as i64;
        *out.entry(ch.right).or_default() += ch.right_balance as i64;
    }
    out
}

fn call_digest(c: &SubstrateCall) -> (String, usize) {
    let (d, len) = match c {
        SubstrateCall::Update(req) => {
            let mut b = req.tx.signed_bytes();
            b.extend_from_slice(&req.tx.sig.0);
            b.extend_from_slice(&req.redeemer_sig.0);
            for s in &req.secrets {
                b.extend_from_slice(&s.0);
            }
            (hash(&b), b.len())
        }
        SubstrateCall::Pomm { tid, proof } => (
            proof.statement_digest(tid),
            crate::commitments::MaskCommitment::ENCODED_LEN + crate::crypto::SECRET_LEN,
        ),
        SubstrateCall::Pome { tid, proof } => (
            proof.statement_digest(tid),
            148 + crate::crypto::SIG_LEN + proof.witness.ciphertext.len() + crate::crypto::SYM_KEY_LEN,
        ),
        SubstrateCall::Enforce { ch, receipts, .. } => {
            let b = ch.to_bytes();
            (ch.digest(), b.len() + receipts.len() * crate::crypto::SIG_LEN + crate::crypto::SECRET_LEN)
        }
        SubstrateCall::Log { challenge, hop, secret } => {
            let b = [&challenge.0[..], &(*hop as u32).to_be_bytes(), &secret.0].concat();
            (hash(&b), b.len())
        }
        SubstrateCall::Punish { challenge } => (*challenge, 32),
    };
    (d.to_hex(), len)
}

/// Runs a scenario to completion.
pub fn run(cfg: &ScenarioConfig) -> Result<RunReport, SimError> {
    let mut w = build(cfg)?;
    let plan = w.plan.clone();
    let ids: Vec<PartyId> = w.parties.iter().map(|p| p.id()).collect();
    let labels: BTreeMap<PartyId, String> = ids.iter().map(|p| (*p, plan.label(*p))).collect();
    let before = holdings(&w.sub, &ids);
    let ledger_before: BTreeMap<PartyId, i64> = ids.iter().map(|p| (*p, w.sub.ledger.balance(*p) as i64)).collect();

    let finders: Vec<(u32, Finder<'_>)> = w
        .chunks
        .iter()
        .enumerate()
        .filter(|(_, c)| c.len() >= 16)
        .map(|(i, c)| (i as u32 + 1, Finder::new(c.as_slice())))
        .collect();

    let mut metrics = Metrics::default();
    let mut trace = Vec::new();
    let mut obs = Observations {
        first_seen: BTreeMap::new(),
        known_by: BTreeMap::new(),
        plaintext_leaks: Vec::new(),
        settled: BTreeMap::new(),
        terminal_at: BTreeMap::new(),
    };
    let bound = plan.timelocks.customer + plan.timelocks.max_len as Round + 2;
    let cap = bound + 8;

    // (from, seq, to, message, encoding)
    let mut in_flight: Vec<(PartyId, u64, PartyId, Message, Vec<u8>)> = Vec::new();
    let mut notices: BTreeMap<PartyId, Vec<Notice>> = BTreeMap::new();
    let mut seq: u64 = 0;
    let mut last = 0;

    for r in 1..=cap {
        last = r;
        let mut inbox: BTreeMap<PartyId, Vec<Inbound>> = BTreeMap::new();
        for (pid, ns) in std::mem::take(&mut notices) {
            for n in ns {
                for s in n.secrets() {
                    obs.first_seen.entry(s).or_insert(r);
                    obs.known_by.entry(pid).or_default().insert(s);
                }
                inbox.entry(pid).or_default().push(Inbound::Notice(n));
            }
        }
        in_flight.sort_by_key(|(from, s, ..)| (*from, *s));
        for (from, _, to, msg, enc) in in_flight.drain(..) {
            for s in msg.secrets() {
                obs.first_seen.entry(s).or_insert(r);
                obs.known_by.entry(to).or_default().insert(s);
            }
            if to != plan.provider {
                for (id, f) in &finders {
                    if f.find(&enc).is_some() {
                        obs.plaintext_leaks.push((r, to, *id));
                    }
                }
            }
            inbox.entry(to).or_default().push(Inbound::Message { from, msg });
        }

        let mut calls: Vec<(PartyId, SubstrateCall)> = Vec::new();
        for p in w.parties.iter_mut() {
            let id = p.id();
            let mut out = Outbox::default();
            p.step(r, inbox.remove(&id).unwrap_or_default(), &w.sub.channels, &mut out);
            for (to, msg) in out.messages {
                let enc = msg.encode();
                let bytes = msg.accounted_size();
                metrics.on_message(id, to, msg.kind(), bytes, msg.payload_size());
                trace.push(TraceRecord {
                    round: r,
                    actor: labels[&id].clone(),
                    kind: msg.kind().to_string(),
                    to: Some(labels.get(&to).cloned().unwrap_or_else(|| format!("#{}", to.0))),
                    digest: hash(&enc).to_hex(),
                    bytes,
                    ok: None,
                });
                in_flight.push((id, seq, to, msg, enc));
                seq += 1;
            }
            calls.extend(out.calls.into_iter().map(|c| (id, c)));
            if p.is_terminal() {
                obs.terminal_at.entry(id).or_insert(r);
            }
        }

        calls.sort_by_key(|(who, c)| (c.rank(), *who));
        for (who, call) in calls {
            let (digest, bytes) = call_digest(&call);
            let kind = call.kind();
            let sub = &mut w.sub;
            let ok = match call {
                SubstrateCall::Update(req) => match sub.channels.update(&req, r, &sub.dir) {
                    Ok(up) => {
                        obs.settled.entry(up.channel).or_insert(r);
                        for p in [up.left, up.right] {
                            notices.entry(p).or_default().push(Notice::Updated {
                                channel: up.channel,
                                secrets: up.secrets.clone(),
                            });
                        }
                        true
                    }
                    Err(_) => {
                        notices.entry(who).or_default().push(Notice::UpdateFailed {
                            channel: req.tx.channel,
                        });
                        false
                    }
                },
                SubstrateCall::Pomm { tid, proof } => {
                    let ok = sub.judge.handle_pomm(r, who, &tid, &proof, &mut sub.ledger, &sub.dir).is_ok();
                    metrics.on_judge(who, kind, ok);
                    ok
                }
                SubstrateCall::Pome { tid, proof } => {
                    let ok = sub.judge.handle_pome(r, who, &tid, &proof, &mut sub.ledger, &sub.dir).is_ok();
                    metrics.on_judge(who, kind, ok);
                    ok
                }
                SubstrateCall::Enforce {
                    ch,
                    receipts,
                    sync_secret,
                } => {
                    let res = sub.judge.enforce(r, who, &ch, &receipts, &sync_secret, &sub.dir);
                    metrics.on_judge(who, kind, res.is_ok());
                    if let Ok(challenge) = res {
                        for p in &ids {
                            notices.entry(*p).or_default().push(Notice::Enforced {
                                challenge,
                                sync_secret,
                            });
                        }
                    }
                    res.is_ok()
                }
                SubstrateCall::Log { challenge, hop, secret } => {
                    let res = sub.judge.log_response(r, who, &challenge, hop, &secret, &sub.dir);
                    metrics.on_judge(who, kind, res.is_ok());
                    let ok = res.is_ok();
                    if let Ok(secrets) = res {
                        for p in &ids {
                            notices.entry(*p).or_default().push(Notice::Logged {
                                challenge,
                                hop,
                                secrets: secrets.clone(),
                            });
                        }
                    }
                    ok
                }
                SubstrateCall::Punish { challenge } => {
                    let res = sub.judge.punish(r, who, &challenge, &mut sub.ledger, &sub.dir);
                    metrics.on_judge(who, kind, res.is_ok());
                    if let Ok(Some(offender)) = res {
                        for p in &ids {
                            notices.entry(*p).or_default().push(Notice::Punished { challenge, offender });
                        }
                    }
                    res.is_ok()
                }
            };
            trace.push(TraceRecord {
                round: r,
                actor: labels[&who].clone(),
                kind: kind.to_string(),
                to: None,
                digest,
                bytes,
                ok: Some(ok),
            });
        }

        if w.parties.iter().all(PartyMachine::is_terminal) && in_flight.is_empty() && notices.is_empty() {
            break;
        }
    }

    metrics.rounds = last;
    let after = holdings(&w.sub, &ids);
    metrics.balance_deltas = ids.iter().map(|p| (*p, after[p] - before[p])).collect();
    let ledger_deltas: BTreeMap<PartyId, i64> = ids
        .iter()
        .map(|p| (*p, w.sub.ledger.balance(*p) as i64 - ledger_before[p]))
        .collect();

    let customer = match &w.parties[0] {
        PartyMachine::Customer(c) => c,
        _ => unreachable!("party 0 is the customer"),
    };
    let customer_outcome = customer.outcome().cloned();
    let content_ok = matches!(&customer_outcome, Some(CustomerOutcome::Content { bytes }) if *bytes == w.content);
    let outcome = if metrics.judge_accepted("pomm") + metrics.judge_accepted("pome") > 0 {
        OutcomeClass::Disputed
    } else if metrics.judge_accepted("enforce") > 0 {
        OutcomeClass::Enforced
    } else if obs.settled.contains_key(&plan.customer_channel) {
        OutcomeClass::Delivered
    } else {
        OutcomeClass::AbortedBeforePayment
    };

    let verdicts = verdicts::evaluate(&verdicts::Inputs {
        plan: &plan,
        parties: &w.parties,
        obs: &obs,
        deltas: &metrics.balance_deltas,
        ledger_deltas: &ledger_deltas,
        b_max: w.cfg.b_max,
        content_ok,
        chunks: &w.chunks,
        chunk_commitments: &w.chunk_commitments,
        bound,
        last_round: last,
    });

    let aborts = w
        .parties
        .iter()
        .filter_map(|p| p.abort().map(|a| (labels[&p.id()].clone(), a.clone())))
        .collect();
    let settled = obs
        .settled
        .iter()
        .map(|(id, r)| {
            let ch = w.sub.channels.get(*id).expect("settled channels exist");
            (format!("{}->{}", labels[&ch.left], labels[&ch.right]), *r)
        })
        .collect();
    let report = MetricsReport::new(&metrics, |p| labels.get(&p).cloned().unwrap_or_default());
    Ok(RunReport {
        name: w.cfg.name.clone(),
        seed: w.cfg.seed,
        outcome,
        customer: customer_outcome,
        content_ok,
        metrics: report,
        verdicts,
        aborts,
        ledger_deltas: ledger_deltas.iter().map(|(p, d)| (labels[p].clone(), *d)).collect(),
        settled,
        trace_digest: trace_digest(&trace).to_hex(),
        trace,
        raw: metrics,
        labels,
    })
}

/// Like [`run`] with the seed replaced.
pub fn run_seeded(cfg: &ScenarioConfig, seed: u64) -> Result<RunReport, SimError> {
    let mut c = cfg.clone();
    c.seed = seed;
    run(&c)
}

/// Convenience for tests and sweeps: `behavior` at `party`, honest elsewhere.
pub fn with_corruptions(cfg: &ScenarioConfig, corruptions: &[(PartyRef, Behavior)]) -> ScenarioConfig {
    let mut c = cfg.clone();
    c.adversary = corruptions
        .iter()
        .map(|(p, b)| Corruption {
            party: *p,
            behavior: b.clone(),
        })
        .collect();
    c
}
