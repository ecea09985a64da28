use std::collections::BTreeMap;

use serde::Serialize;

use crate::{PartyId, Round};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LinkStats {
    pub messages: u64,
    /// Accounted bytes, ciphertext included.
    pub bytes: u64,
    /// Ciphertext bytes only.
    pub payload_bytes: u64,
}

impl LinkStats {
    pub fn overhead(&self) -> u64 {
        self.bytes - self.payload_bytes
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct JudgeCounts {
    pub calls: u32,
    pub accepted: u32,
}

/// Counters collected during a run, keyed by party ids. Labelled copies go
/// into reports.
#[derive(Clone, Debug, Default)]
pub struct Metrics {
    pub rounds: Round,
    pub links: BTreeMap<(PartyId, PartyId), LinkStats>,
    /// Per party, per judge operation.
    pub judge: BTreeMap<PartyId, BTreeMap<&'static str, JudgeCounts>>,
    pub balance_deltas: BTreeMap<PartyId, i64>,
    /// Same, by message kind.
    pub by_kind: BTreeMap<&'static str, LinkStats>,
}

impl Metrics {
    pub(crate) fn on_message(&mut self, from: PartyId, to: PartyId, kind: &'static str, bytes: usize, payload: usize) {
        for s in [self.links.entry((from, to)).or_default(), self.by_kind.entry(kind).or_default()] {
            s.messages += 1;
            s.bytes += bytes as u64;
            s.payload_bytes += payload as u64;
        }
    }

    pub(crate) fn on_judge(&mut self, who: PartyId, op: &'static str, ok: bool) {
        let c = self.judge.entry(who).or_default().entry(op).or_default();
        c.calls += 1;
        c.accepted += ok as u32;
    }

    /// Judge calls made by `who`, all operations.
    pub fn judge_calls(&self, who: PartyId) -> u32 {
        self.judge.get(&who).map_or(0, |m| m.values().map(|c| c.calls).sum())
    }

    pub fn judge_accepted(&self, op: &str) -> u32 {
        self.judge
            .values()
            .filter_map(|m| m.get(op))
            .map(|c| c.accepted)
            .sum()
    }

    pub fn total(&self) -> LinkStats {
        let mut t = LinkStats::default();
        for s in self.links.values() {
            t.messages += s.messages;
            t.bytes += s.bytes;
            t.payload_bytes += s.payload_bytes;
        }
        t
    }

    pub fn link(&self, from: PartyId, to: PartyId) -> LinkStats {
        self.links.get(&(from, to)).copied().unwrap_or_default()
    }

    pub fn kind(&self, kind: &str) -> LinkStats {
        self.by_kind.get(kind).copied().unwrap_or_default()
    }
}

/// Serializable view of [`Metrics`] with party labels.
#[derive(Clone, Debug, Serialize)]
pub struct MetricsReport {
    pub rounds: Round,
    pub total: LinkStats,
    pub links: BTreeMap<String, LinkStats>,
    pub by_kind: BTreeMap<String, LinkStats>,
    pub judge: BTreeMap<String, BTreeMap<String, JudgeCounts>>,
    pub balance_deltas: BTreeMap<String, i64>,
}

impl MetricsReport {
    pub(crate) fn new(m: &Metrics, label: impl Fn(PartyId) -> String) -> Self {
        MetricsReport {
            rounds: m.rounds,
            total: m.total(),
            links: m
                .links
                .iter()
                .map(|((a, b), s)| (format!("{}->{}", label(*a), label(*b)), *s))
                .collect(),
            by_kind: m.by_kind.iter().map(|(k, s)| (k.to_string(), *s)).collect(),
            judge: m
                .judge
                .iter()
                .map(|(p, ops)| (label(*p), ops.iter().map(|(o, c)| (o.to_string(), *c)).collect()))
                .collect(),
            balance_deltas: m.balance_deltas.iter().map(|(p, d)| (label(*p), *d)).collect(),
        }
    }
}
