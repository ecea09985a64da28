#![allow(dead_code)]

use relaynet::parties::{Behavior, DeliveryMode, PartyRef};
use relaynet::sim::{with_corruptions, ContentConfig, PathConfig, ScenarioConfig};

/// Multi-path graph with the given relayer counts, chunks dealt round-robin
/// over the paths. Hop `i` of a path of length `L` charges `L − i + 1 + k`.
pub fn graph(lengths: &[usize], chunk_size: usize, chunk_count: u32) -> ScenarioConfig {
    assert!(chunk_count as usize >= lengths.len());
    let paths = lengths
        .iter()
        .enumerate()
        .map(|(k, &len)| PathConfig {
            fees: (1..=len as u64).rev().map(|f| f + k as u64).collect(),
            job: (1..=chunk_count).filter(|c| (*c as usize - 1) % lengths.len() == k).collect(),
        })
        .collect();
    ScenarioConfig {
        name: format!("graph-{lengths:?}"),
        description: String::new(),
        seed: 5,
        mode: DeliveryMode::MultiPath,
        content: ContentConfig {
            chunk_size,
            chunk_count,
            length: None,
        },
        price: 100,
        b_max: 1000,
        slash_bps: 0,
        paths,
        funding: Default::default(),
        adversary: vec![],
        keys: Default::default(),
    }
}

pub fn relayer(path: usize, hop: usize) -> PartyRef {
    PartyRef::Relayer { path, hop }
}

pub fn corrupt(cfg: &ScenarioConfig, who: &[(PartyRef, Behavior)]) -> ScenarioConfig {
    let mut c = with_corruptions(cfg, who);
    c.name = who
        .iter()
        .map(|(p, b)| format!("{p}:{}", describe(b)))
        .collect::<Vec<_>>()
        .join("+");
    c
}

pub fn describe(b: &Behavior) -> String {
    match b {
        Behavior::SilentAt { phase } => format!("silent-at-{phase:?}").to_lowercase(),
        Behavior::WormholeCollude { partner, answer_judge } => {
            format!("wormhole({partner}{})", if *answer_judge { "" } else { ",mute" })
        }
        other => format!("{other:?}").to_lowercase(),
    }
}
