use std::io::{self, Write};

use serde::Serialize;

use crate::crypto::{hash_parts, Digest};
use crate::Round;

/// One line of the JSONL trace: a message send or a substrate call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceRecord {
    pub round: Round,
    pub actor: String,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    /// Hex SHA-256 of the canonical payload encoding.
    pub digest: String,
    /// Accounted bytes for messages, encoded length for calls.
    pub bytes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ok: Option<bool>,
}

pub fn write_jsonl<W: Write>(records: &[TraceRecord], mut w: W) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Digest over the whole trace, for comparing runs.
pub fn trace_digest(records: &[TraceRecord]) -> Digest {
    let lines: Vec<Vec<u8>> = records
        .iter()
        .map(|r| serde_json::to_vec(r).expect("record serializes"))
        .collect();
    let parts: Vec<&[u8]> = lines.iter().map(Vec::as_slice).collect();
    hash_parts(&parts)
}
