//! Byte overhead of a single-path delivery: closed-form model and measurement.
//!
//! `hops` counts encryption layers, i.e. relayers plus the provider, which is
//! also the number of links a chunk crosses.

use serde::Serialize;

use super::{run, ContentConfig, PathConfig, ScenarioConfig, SimError};
use crate::commitments::{ChainLink, MaskCommitment};
use crate::crypto::{AE_OVERHEAD, SECRET_LEN, SIG_LEN};
use crate::parties::{DeliveryMode, ACCOUNTED_HASH};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverheadRow {
    pub hops: usize,
    pub chunk_size: usize,
    pub chunk_count: u32,
    /// Chain bytes per chunk on the link into the customer.
    pub per_chunk_at_customer: u64,
    pub setup_bytes: u64,
    /// Delivery bytes other than ciphertext, all links.
    pub delivery_overhead: u64,
    pub payment_bytes: u64,
    /// Every accounted byte on every link.
    pub total_bytes: u64,
    /// Ciphertext bytes summed over links.
    pub payload_bytes: u64,
    /// Non-ciphertext bytes over ciphertext bytes, all links.
    pub total_ratio: f64,
    /// Delivery overhead over ciphertext on the link into the customer.
    pub last_link_ratio: f64,
}

const LOCK_FIXED: u64 = 4 + 2 * 8 + 8 + SIG_LEN as u64;

fn lock_bytes(hashes: usize) -> u64 {
    LOCK_FIXED + (ACCOUNTED_HASH * hashes) as u64
}

/// Closed-form byte count for one path of `hops` layers carrying every chunk.
pub fn analytic(hops: usize, chunk_size: usize, chunk_count: u32) -> OverheadRow {
    assert!(hops >= 1, "a path has at least the provider layer");
    let r = (hops - 1) as u64;
    let n = chunk_count as u64;
    let s = chunk_size as u64;
    let h = ACCOUNTED_HASH as u64;
    let sealed = (AE_OVERHEAD + MaskCommitment::ENCODED_LEN) as u64;

    let setup_to_customer = (2 * h + sealed + h) + r * (2 * h + sealed);
    let peer = if r > 0 { r * 2 * h + r * r * (h + 8) } else { 0 };
    let setup_bytes = setup_to_customer + peer;

    let hash_msg = n * h + 12 + 4 * n;
    let link = ChainLink::ACCOUNTED_LEN as u64;
    let chains: u64 = (1..=hops as u64).map(|l| n * link * l).sum();
    let delivery_overhead = hops as u64 * hash_msg + chains;

    let mut payment_bytes = lock_bytes(hops);
    if r > 0 {
        payment_bytes += (1..=r).map(|i| lock_bytes((r - i + 2) as usize)).sum::<u64>();
        payment_bytes += r * SIG_LEN as u64 + SECRET_LEN as u64;
    }

    let payload_bytes = n * s * hops as u64;
    let total_bytes = setup_bytes + delivery_overhead + payment_bytes + payload_bytes;
    let last_overhead = n * link * hops as u64 + hash_msg;
    OverheadRow {
        hops,
        chunk_size,
        chunk_count,
        per_chunk_at_customer: link * hops as u64,
        setup_bytes,
        delivery_overhead,
        payment_bytes,
        total_bytes,
        payload_bytes,
        total_ratio: (total_bytes - payload_bytes) as f64 / payload_bytes as f64,
        last_link_ratio: last_overhead as f64 / (n * s) as f64,
    }
}

/// Honest single-path scenario used for measurement.
pub fn scenario(hops: usize, chunk_size: usize, chunk_count: u32) -> ScenarioConfig {
    let relayers = hops - 1;
    let price = relayers as u64 + 10;
    ScenarioConfig {
        name: format!("overhead-{hops}hop-{chunk_size}"),
        description: String::new(),
        seed: 1,
        mode: DeliveryMode::MultiPath,
        content: ContentConfig {
            chunk_size,
            chunk_count,
            length: None,
        },
        price,
        b_max: 10 * price,
        slash_bps: 0,
        paths: vec![PathConfig {
            fees: vec![1; relayers],
            job: (1..=chunk_count).collect(),
        }],
        funding: Default::default(),
        adversary: vec![],
        keys: Default::default(),
    }
}

/// Runs [`scenario`] and reads the same quantities off the wire.
pub fn measured(hops: usize, chunk_size: usize, chunk_count: u32) -> Result<OverheadRow, SimError> {
    let rep = run(&scenario(hops, chunk_size, chunk_count))?;
    let m = &rep.raw;
    let kinds = |ks: &[&str]| ks.iter().map(|k| m.kind(k).overhead()).sum::<u64>();
    let total = m.total();
    let to_customer = |kinds: &[&str]| -> u64 {
        rep.trace
            .iter()
            .filter(|t| kinds.contains(&t.kind.as_str()) && t.to.as_deref() == Some("C"))
            .map(|t| t.bytes as u64)
            .sum()
    };
    let n = chunk_count as u64;
    let payload_last = n * chunk_size as u64;
    let chunk_to_c = to_customer(&["chunk"]);
    let delivery_to_c = to_customer(&["chunk", "delivery-hashes"]);
    Ok(OverheadRow {
        hops,
        chunk_size,
        chunk_count,
        per_chunk_at_customer: (chunk_to_c - payload_last) / n,
        setup_bytes: kinds(&["init", "setup", "peer-setup"]),
        delivery_overhead: kinds(&["delivery", "delivery-hashes", "chunk"]),
        payment_bytes: kinds(&["channel-lock", "receipt", "channel-release"]),
        total_bytes: total.bytes,
        payload_bytes: total.payload_bytes,
        total_ratio: total.overhead() as f64 / total.payload_bytes as f64,
        last_link_ratio: (delivery_to_c - payload_last) as f64 / payload_last as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_hops_cost_970_bytes_per_chunk() {
        assert_eq!(analytic(10, 65536, 8).per_chunk_at_customer, 970);
    }

    #[test]
    fn model_matches_measurement() {
        for hops in 1..=4 {
            assert_eq!(analytic(hops, 256, 3), measured(hops, 256, 3).unwrap(), "hops {hops}");
        }
    }
}
