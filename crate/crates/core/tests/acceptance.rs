//! Acceptance criteria, one pass/fail line each. Exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use common::{corrupt, graph, relayer};
use relaynet::commitments::{
    ecom_gen_linked, ext_key, extract, mcom_gen, pome_ver, pomm_ver, ContentExtraction, DeliveredChunk,
    KeyExtraction, Layered, MaskCommitment, Position,
};
use relaynet::crypto::{commit, KeyPair, Secret, SymKey};
use relaynet::parties::{Behavior, PartyRef, Phase};
use relaynet::payment::{
    run_ideal, run_protocol, timelocks_multi, ExchangeParams, ExchangeSchedule, PayeeBehavior, PayerBehavior,
};
use relaynet::sim::{overhead, run, scenarios, write_jsonl, RunReport, ScenarioConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sim(cfg: &ScenarioConfig) -> Result<RunReport, String> {
    run(cfg).map_err(|e| format!("{}: {e}", cfg.name))
}

/// Judge calls in the trace as `(round, caller, op, accepted)`.
fn judge_calls(rep: &RunReport) -> Vec<(u64, String, String, bool)> {
    rep.trace
        .iter()
        .filter(|t| t.to.is_none() && t.kind != "update")
        .map(|t| (t.round, t.actor.clone(), t.kind.clone(), t.ok == Some(true)))
        .collect()
}

fn honest_zero_cost() -> Outcome {
    let cfg = scenarios::bundled("honest").expect("bundled").map_err(|e| e.to_string())?;
    ensure(cfg.lengths() == [2, 3] && cfg.content.chunk_count == 8 && cfg.content.chunk_size == 65536, || {
        "bundled honest scenario changed shape".into()
    })?;
    let t = Instant::now();
    let rep = sim(&cfg)?;
    let took = t.elapsed();
    ensure(took < Duration::from_secs(5), || format!("took {took:?}"))?;
    let calls = judge_calls(&rep);
    ensure(calls.is_empty(), || format!("judge calls: {calls:?}"))?;
    ensure(rep.content_ok, || "customer did not reconstruct the content".into())?;
    let mut fees = 0;
    for (k, p) in cfg.paths.iter().enumerate() {
        for (i, fee) in p.fees.iter().enumerate() {
            let name = relayer(k, i + 1).to_string();
            ensure(rep.delta(&name) == *fee as i64, || format!("{name} got {} not {fee}", rep.delta(&name)))?;
            fees += fee;
        }
    }
    let want = (cfg.price - fees) as i64;
    ensure(rep.delta("P") == want, || format!("provider got {} not {want}", rep.delta("P")))?;
    ensure(rep.delta("C") == -(cfg.price as i64), || format!("customer paid {}", -rep.delta("C")))?;
    Ok(format!("0 judge ops, content identical, P +{want}, {took:.0?}"))
}

fn constant_footprint() -> Outcome {
    let mut runs = 0;
    for count in 1..=3 {
        for len in 1..=5 {
            let base = graph(&vec![len; count], 512, count as u32 * 2);
            for (who, b, op) in [
                (relayer(0, len), Behavior::GarbageEncrypt { chunk: None }, "pome"),
                (relayer(0, 1), Behavior::WrongMask, "pomm"),
            ] {
                let rep = sim(&corrupt(&base, &[(who, b)]))?;
                let calls = judge_calls(&rep);
                ensure(calls.len() == 1 && calls[0].1 == "C" && calls[0].2 == op && calls[0].3, || {
                    format!("{count} paths of {len}, {op}: judge calls {calls:?}")
                })?;
                runs += 1;
            }
            let rep = sim(&corrupt(&base, &[(relayer(0, len), Behavior::WithholdUnlock)]))?;
            let calls = judge_calls(&rep);
            for hop in 1..=len {
                let name = relayer(0, hop).to_string();
                let mine: Vec<_> = calls.iter().filter(|c| c.1 == name).collect();
                ensure(mine.len() == 1 && mine[0].2 == "log" && mine[0].3, || {
                    format!("{count} paths of {len}: {name} made {mine:?}")
                })?;
            }
            let others = calls.iter().filter(|c| c.1 != "P" && !c.1.starts_with("R1.")).count();
            ensure(others == 0, || format!("{count} paths of {len}: bystanders called the judge: {calls:?}"))?;
            runs += 1;
        }
    }
    Ok(format!("{runs} runs over 1-5 hops x 1-3 paths: 1 pome | 1 pomm | 1 log per relayer"))
}

fn enforcement_dichotomy() -> Outcome {
    let t = Instant::now();
    let mut cases = 0;
    for n in 1..=4usize {
        let base = graph(&[n], 256, 2);
        for responsive in 0u32..(1 << n) {
            let answers = |hop: usize| responsive & (1 << (hop - 1)) != 0;
            let mut who: Vec<(PartyRef, Behavior)> = (1..=n)
                .filter(|&h| !answers(h))
                .map(|h| (relayer(0, h), Behavior::SilentAt { phase: Phase::Unlock }))
                .collect();
            if who.is_empty() {
                who.push((relayer(0, n), Behavior::WithholdUnlock));
            }
            let cfg = corrupt(&base, &who);
            let rep = sim(&cfg)?;
            let calls = judge_calls(&rep);
            let Some(start) = calls.iter().find(|c| c.2 == "enforce" && c.3).map(|c| c.0) else {
                return Err(format!("{}: no enforcement: {calls:?}", cfg.name));
            };
            let by = start + n as u64 + 1;
            let logged: BTreeSet<String> = calls.iter().filter(|c| c.2 == "log" && c.3).map(|c| c.1.clone()).collect();
            ensure(calls.iter().all(|c| c.0 <= by), || format!("{}: judge activity after round {by}", cfg.name))?;
            let slashed: Vec<(&String, &i64)> = rep.ledger_deltas.iter().filter(|(_, d)| **d < 0).collect();
            let non_loggers: Vec<usize> = (1..=n).filter(|h| !logged.contains(&relayer(0, *h).to_string())).collect();
            match non_loggers.last() {
                None => ensure(slashed.is_empty(), || format!("{}: all logged yet {slashed:?}", cfg.name))?,
                Some(&h) => {
                    let name = relayer(0, h).to_string();
                    ensure(
                        slashed.len() == 1 && *slashed[0].0 == name && *slashed[0].1 == -(cfg.b_max as i64),
                        || format!("{}: expected {name} slashed, got {slashed:?}", cfg.name),
                    )?;
                }
            }
            cases += 1;
        }
    }
    let took = t.elapsed();
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("{cases} responsive subsets for n <= 4 in {took:.0?}"))
}

fn wormhole_resistance() -> Outcome {
    let base = graph(&[3], 256, 2);
    let fee = base.paths[0].fees[1] as i64;
    let options = |p: PartyRef| {
        let mut v = vec![Behavior::Honest];
        v.extend(base.behavior_library(p));
        v
    };
    let (up, down) = (relayer(0, 1), relayer(0, 3));
    let mut runs = 0;
    let mut paid = 0;
    for a in options(up) {
        for b in options(down) {
            let cfg = corrupt(&base, &[(up, a.clone()), (down, b.clone())]);
            let rep = sim(&cfg)?;
            let d = rep.delta("R1.2");
            let upstream_settled = rep.settled.contains_key("P->R1.1") || rep.settled.contains_key("R1.1->R1.2");
            ensure(d >= 0 && (d >= fee || !upstream_settled), || {
                format!("{}: R1.2 delta {d}, upstream settled {:?}", cfg.name, rep.settled)
            })?;
            paid += (d >= fee) as u32;
            runs += 1;
        }
    }
    Ok(format!("{runs} patterns around R1.2: paid in {paid}, otherwise nothing upstream settled"))
}

fn fairness_sweep() -> Outcome {
    let t = Instant::now();
    let base = graph(&[2, 3], 256, 2);
    let parties = base.parties();
    let libs: Vec<Vec<Behavior>> = parties.iter().map(|p| base.behavior_library(*p)).collect();
    let mut schedules: Vec<Vec<(PartyRef, Behavior)>> = Vec::new();
    for (i, p) in parties.iter().enumerate() {
        schedules.extend(libs[i].iter().map(|b| vec![(*p, b.clone())]));
    }
    for i in 0..parties.len() {
        for j in i + 1..parties.len() {
            for a in &libs[i] {
                for b in &libs[j] {
                    schedules.push(vec![(parties[i], a.clone()), (parties[j], b.clone())]);
                }
            }
        }
    }
    let mut failures = Vec::new();
    for s in &schedules {
        let cfg = corrupt(&base, s);
        let rep = sim(&cfg)?;
        for (name, v) in rep.verdicts.all() {
            if !v.passed() {
                failures.push(format!("{} {name}: {}", cfg.name, v.detail));
            }
        }
    }
    let took = t.elapsed();
    ensure(failures.is_empty(), || {
        format!("{} failures, first: {}", failures.len(), failures.iter().take(3).cloned().collect::<Vec<_>>().join(" | "))
    })?;
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!("{} single and pairwise schedules, all verdicts hold, {took:.0?}", schedules.len()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Cheat {
    None,
    Garbage,
    Mask,
}

/// Layer 0 is the provider, the rest one path.
fn layered<T: Clone>(v: &[T]) -> Layered<T> {
    Layered {
        provider: v[0].clone(),
        paths: vec![v[1..].to_vec()],
    }
}

fn extraction_case(n: usize, layer: usize, cheat: Cheat, rng: &mut ChaCha20Rng) -> Result<(), String> {
    let chunks: Vec<Vec<u8>> = (0..3).map(|_| (0..200).map(|_| rng.gen()).collect()).collect();
    let signers: Vec<KeyPair> = (0..=n).map(|_| KeyPair::generate(rng)).collect();
    let keys: Vec<SymKey> = (0..=n).map(|_| SymKey::generate(rng)).collect();
    let secrets: Vec<Secret> = (0..=n).map(|_| Secret::random(rng)).collect();
    let masks: Vec<MaskCommitment> = (0..=n)
        .map(|l| {
            let honest = mcom_gen(&keys[l], &secrets[l], &signers[l], rng);
            if cheat == Cheat::Mask && l == layer {
                let mut ck = [0u8; 48];
                rng.fill_bytes(&mut ck);
                MaskCommitment::sign(honest.h_sk, honest.h_s, ck, &signers[l])
            } else {
                honest
            }
        })
        .collect();
    let delivered: Vec<DeliveredChunk> = chunks
        .iter()
        .enumerate()
        .map(|(idx, m)| {
            let id = idx as u32 + 1;
            let mut input = m.clone();
            let mut h_in = commit(&input, rng);
            let mut chain = Vec::new();
            for l in 0..=n {
                let (mut c, mut com) = ecom_gen_linked(&input, h_in, &keys[l], masks[l].h_sk, id, &signers[l], rng);
                if cheat == Cheat::Garbage && l == layer {
                    rng.fill_bytes(&mut c);
                    com = relaynet::commitments::EncCommitment::sign(com.h_m, commit(&c, rng), com.h_sk, id, &signers[l]);
                }
                h_in = com.h_c;
                input = c;
                chain.push(com);
            }
            DeliveredChunk {
                id,
                ciphertext: input,
                chain,
            }
        })
        .collect();
    let pks = layered(&signers.iter().map(|k| k.public().clone()).collect::<Vec<_>>());
    let masks_l = layered(&masks);
    let expected = if layer == 0 {
        Position::Provider
    } else {
        Position::Relayer { path: 0, hop: layer }
    };
    let label = format!("n={n} layer={layer} {cheat:?}");
    match ext_key(&layered(&secrets), &masks_l, &pks).map_err(|e| format!("{label}: {e}"))? {
        KeyExtraction::Misbehavior { position, tid, proof } => {
            ensure(cheat == Cheat::Mask && position == expected, || format!("{label}: PoMM against {position:?}"))?;
            ensure(pomm_ver(&proof, &tid) && tid == *pks.get(expected).unwrap(), || {
                format!("{label}: PoMM does not verify against the cheater")
            })
        }
        KeyExtraction::Keys(ks) => {
            ensure(cheat != Cheat::Mask, || format!("{label}: bad mask went unnoticed"))?;
            ensure(ks == layered(&keys), || format!("{label}: wrong keys"))?;
            match extract(&ks, &[delivered], &pks).map_err(|e| format!("{label}: {e}"))? {
                ContentExtraction::Misbehavior { position, tid, proof } => {
                    ensure(cheat == Cheat::Garbage && position == expected, || {
                        format!("{label}: PoME against {position:?}")
                    })?;
                    ensure(pome_ver(&proof, &tid) && tid == *pks.get(expected).unwrap(), || {
                        format!("{label}: PoME does not verify against the cheater")
                    })
                }
                ContentExtraction::Content(content) => {
                    ensure(cheat == Cheat::None, || format!("{label}: garbage went unnoticed"))?;
                    let got: Vec<Vec<u8>> = content.into_iter().map(|(_, c)| c).collect();
                    ensure(got == chunks, || format!("{label}: content differs"))
                }
            }
        }
    }
}

fn extraction_dichotomy() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let mut cases = 0;
    for n in 0..=3 {
        extraction_case(n, 0, Cheat::None, &mut rng)?;
        cases += 1;
        for layer in 0..=n {
            for cheat in [Cheat::Garbage, Cheat::Mask] {
                extraction_case(n, layer, cheat, &mut rng)?;
                cases += 1;
            }
        }
    }
    Ok(format!("{cases} cases: content or a verifying proof against the cheating layer"))
}

fn differential() -> Outcome {
    let mut total = 0;
    for n in 1..=3usize {
        let params = ExchangeParams::new((1..=n as u64).rev().collect(), 500);
        let k = PayeeBehavior::ALL.len();
        for payer in PayerBehavior::ALL {
            for code in 0..k.pow(n as u32) {
                let payees = (0..n).map(|i| PayeeBehavior::ALL[code / k.pow(i as u32) % k]).collect();
                let s = ExchangeSchedule { payer, payees };
                let real = run_protocol(&params, &s, total as u64);
                let ideal = run_ideal(&params, &s);
                ensure(real == ideal, || format!("n={n} {s:?}: {real:?} vs {ideal:?}"))?;
                total += 1;
            }
        }
    }
    Ok(format!("{total} schedules, protocol trace equals ideal trace"))
}

fn overhead_reproduction() -> Outcome {
    let model = overhead::analytic(10, 65536, 8);
    let m = overhead::measured(10, 65536, 8).map_err(|e| e.to_string())?;
    ensure(m == model, || format!("measured {m:?} differs from model {model:?}"))?;
    ensure(m.per_chunk_at_customer == 970, || format!("{} B per chunk", m.per_chunk_at_customer))?;
    ensure(m.total_ratio < 0.015, || format!("total overhead {:.4}%", 100.0 * m.total_ratio))?;
    Ok(format!(
        "970 B per chunk ({:.3}%), total {:.3}% of payload",
        100.0 * 970.0 / 65536.0,
        100.0 * m.total_ratio
    ))
}

fn timelock_sanity() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    for g in 0..1000 {
        let lengths: Vec<usize> = (0..rng.gen_range(1..=5)).map(|_| rng.gen_range(1..=6)).collect();
        let t = timelocks_multi(&lengths).map_err(|e| e.to_string())?;
        for (k, &len) in lengths.iter().enumerate() {
            for i in 1..=len {
                let ti = t.relay(k, i);
                ensure(ti > t.t2 + len as u64 - i as u64, || format!("graph {g} {lengths:?}: t_{k},{i} too early"))?;
                if i < len {
                    ensure(ti > t.relay(k, i + 1), || format!("graph {g} {lengths:?}: t_{k},{i} not decreasing"))?;
                }
            }
            ensure(t.customer > t.relay(k, 1), || format!("graph {g} {lengths:?}: t_0 <= t_{k},1"))?;
        }
    }
    Ok("1000 random graphs".into())
}

fn determinism() -> Outcome {
    let bytes = |cfg: &ScenarioConfig| -> Result<(Vec<u8>, String), String> {
        let rep = sim(cfg)?;
        let mut out = Vec::new();
        write_jsonl(&rep.trace, &mut out).map_err(|e| e.to_string())?;
        Ok((out, serde_json::to_string(&rep).map_err(|e| e.to_string())?))
    };
    let suite = scenarios::all();
    let mut total = 0;
    for cfg in &suite {
        let (a, ra) = bytes(cfg)?;
        let (b, rb) = bytes(cfg)?;
        ensure(a == b && ra == rb, || format!("{} differs between runs", cfg.name))?;
        total += a.len();
    }
    Ok(format!("{} scenarios, {total} trace bytes identical across two runs", suite.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("optimistic zero-cost", honest_zero_cost),
        ("constant pessimistic footprint", constant_footprint),
        ("enforcement dichotomy", enforcement_dichotomy),
        ("wormhole resistance", wormhole_resistance),
        ("fairness sweep", fairness_sweep),
        ("extraction dichotomy", extraction_dichotomy),
        ("differential oracle", differential),
        ("overhead reproduction", overhead_reproduction),
        ("timelock sanity", timelock_sanity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} of {} criteria failed", criteria.len());
        ExitCode::FAILURE
    }
}
