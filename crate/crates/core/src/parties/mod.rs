//! Customer, provider and relayer state machines for both delivery modes.
//!
//! Every party is a deterministic function of its inbox and its own RNG. The
//! simulator feeds it one round at a time and routes what it emits.

mod customer;
mod messages;
mod provider;
mod relayer;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use customer::{Customer, CustomerOutcome};
pub use messages::{Inbound, Message, Notice, ACCOUNTED_HASH};
pub use provider::Provider;
pub use relayer::Relayer;

use rand::RngCore;

use crate::commitments::{ecom_gen_linked, mcom_gen, EncCommitment, MaskCommitment, PoMEProof, PoMMProof};
use crate::crypto::{
    commit, CommitmentValue, Digest, KeyPair, PublicKey, Secret, Signature, SymKey, SECRET_LEN,
};
use crate::judge::EnforcementChallenge;
use crate::payment::{cumulative_credits, MultiTimelocks};
use crate::pcn::{ChannelId, ChannelRegistry, UpdateRequest};
use crate::{Amount, PartyId, Round};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeliveryMode {
    #[default]
    MultiPath,
    /// One path, plain chained payment without receipts or enforcement.
    SinglePath,
}

/// Protocol phases, in order. A party silent at a phase stays silent for
/// every later one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Setup,
    Delivery,
    Payment,
    Unlock,
    Enforcement,
    Decryption,
}

impl Phase {
    pub const ALL: [Phase; 6] = [
        Phase::Setup,
        Phase::Delivery,
        Phase::Payment,
        Phase::Unlock,
        Phase::Enforcement,
        Phase::Decryption,
    ];
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Behavior {
    Honest,
    SilentAt {
        phase: Phase,
    },
    /// Unlocks and logs with a secret that does not open its hash.
    WrongSecret,
    /// Random ciphertext at its own layer with consistent commitments.
    GarbageEncrypt {
        /// Only this chunk id; every chunk if absent.
        #[serde(default)]
        chunk: Option<u32>,
    },
    /// No optimistic unlock; still answers the judge.
    WithholdUnlock,
    /// Shares secrets with `partner` off-channel. The downstream member
    /// withholds its own unlock.
    WormholeCollude {
        partner: PartyRef,
        #[serde(default = "yes")]
        answer_judge: bool,
    },
    /// Signs a mask that does not unmask to the committed key.
    WrongMask,
    /// Locks and forwards but never returns a receipt.
    StallReceipt,
}

fn yes() -> bool {
    true
}

impl Behavior {
    pub fn is_honest(&self) -> bool {
        *self == Behavior::Honest
    }

    pub(crate) fn silent(&self, phase: Phase) -> bool {
        matches!(self, Behavior::SilentAt { phase: p } if *p <= phase)
    }

    pub(crate) fn garbles(&self, id: u32) -> bool {
        matches!(self, Behavior::GarbageEncrypt { chunk } if chunk.is_none_or(|c| c == id))
    }
}

/// Human-facing party name: `C`, `P` or `R<path>.<hop>`, all 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PartyRef {
    Customer,
    Provider,
    /// 0-based path, 1-based hop.
    Relayer { path: usize, hop: usize },
}

impl fmt::Display for PartyRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartyRef::Customer => f.write_str("C"),
            PartyRef::Provider => f.write_str("P"),
            PartyRef::Relayer { path, hop } => write!(f, "R{}.{}", path + 1, hop),
        }
    }
}

impl FromStr for PartyRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C" => return Ok(PartyRef::Customer),
            "P" => return Ok(PartyRef::Provider),
            _ => {}
        }
        let bad = || format!("bad party name {s:?}, expected C, P or R<path>.<hop>");
        let rest = s.strip_prefix('R').ok_or_else(bad)?;
        let (k, i) = rest.split_once('.').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        let i: usize = i.parse().map_err(|_| bad())?;
        if k == 0 || i == 0 {
            return Err(bad());
        }
        Ok(PartyRef::Relayer { path: k - 1, hop: i })
    }
}

impl TryFrom<String> for PartyRef {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<PartyRef> for String {
    fn from(p: PartyRef) -> String {
        p.to_string()
    }
}

/// Everything about a delivery that all parties know in advance.
#[derive(Clone, Debug)]
pub struct DeliveryPlan {
    pub mode: DeliveryMode,
    pub customer: PartyId,
    pub provider: PartyId,
    pub relayers: Vec<Vec<PartyId>>,
    pub fees: Vec<Vec<Amount>>,
    /// Chunk ids (1-based, ascending) carried by each path.
    pub jobs: Vec<Vec<u32>>,
    pub price: Amount,
    /// Merkle root over the chunk commitments.
    pub content_root: Digest,
    pub chunk_count: u32,
    pub content_len: usize,
    pub customer_channel: ChannelId,
    /// `relay_channels[k][i-1]` funds hop `i` of path `k`.
    pub relay_channels: Vec<Vec<ChannelId>>,
    pub timelocks: MultiTimelocks,
    pub keys: BTreeMap<PartyId, PublicKey>,
}

impl DeliveryPlan {
    pub fn key(&self, id: PartyId) -> &PublicKey {
        &self.keys[&id]
    }

    pub fn position(&self, id: PartyId) -> Option<PartyRef> {
        if id == self.customer {
            return Some(PartyRef::Customer);
        }
        if id == self.provider {
            return Some(PartyRef::Provider);
        }
        self.relayers.iter().enumerate().find_map(|(k, p)| {
            p.iter()
                .position(|r| *r == id)
                .map(|i| PartyRef::Relayer { path: k, hop: i + 1 })
        })
    }

    pub fn party(&self, r: PartyRef) -> Option<PartyId> {
        match r {
            PartyRef::Customer => Some(self.customer),
            PartyRef::Provider => Some(self.provider),
            PartyRef::Relayer { path, hop } => self.relayers.get(path)?.get(hop.checked_sub(1)?).copied(),
        }
    }

    pub fn label(&self, id: PartyId) -> String {
        self.position(id).map_or_else(|| format!("#{}", id.0), |p| p.to_string())
    }

    pub fn path_len(&self, k: usize) -> usize {
        self.relayers[k].len()
    }

    /// Sender towards hop `i` of path `k` (1-based; `len + 1` is the customer).
    pub fn prev_hop(&self, k: usize, i: usize) -> PartyId {
        if i == 1 {
            self.provider
        } else {
            self.relayers[k][i - 2]
        }
    }

    pub fn next_hop(&self, k: usize, i: usize) -> PartyId {
        self.relayers[k].get(i).copied().unwrap_or(self.customer)
    }

    pub fn first_hop(&self, k: usize) -> PartyId {
        self.next_hop(k, 0)
    }

    pub fn last_hop(&self, k: usize) -> PartyId {
        self.relayers[k].last().copied().unwrap_or(self.provider)
    }

    /// `𝔳_{k,i}` for every hop of path `k`.
    pub fn credits(&self, k: usize) -> Vec<Amount> {
        cumulative_credits(&self.fees[k])
    }

    /// Deadline hop `i` of path `k` expects on its incoming lock.
    pub fn relay_deadline(&self, k: usize, i: usize) -> Round {
        self.timelocks.relay(k, i)
    }

    pub fn all_relayers(&self) -> impl Iterator<Item = (usize, usize, PartyId)> + '_ {
        self.relayers
            .iter()
            .enumerate()
            .flat_map(|(k, p)| p.iter().enumerate().map(move |(i, r)| (k, i + 1, *r)))
    }
}

/// A request to the channel network or the judge, processed at the end of
/// the round it is issued in.
#[derive(Clone, Debug)]
pub enum SubstrateCall {
    Update(UpdateRequest),
    Pomm {
        tid: PublicKey,
        proof: PoMMProof,
    },
    Pome {
        tid: PublicKey,
        proof: Box<PoMEProof>,
    },
    Enforce {
        ch: EnforcementChallenge,
        receipts: Vec<Signature>,
        sync_secret: Secret,
    },
    Log {
        challenge: Digest,
        hop: usize,
        secret: Secret,
    },
    Punish {
        challenge: Digest,
    },
}

impl SubstrateCall {
    pub fn kind(&self) -> &'static str {
        match self {
            SubstrateCall::Update(_) => "update",
            SubstrateCall::Pomm { .. } => "pomm",
            SubstrateCall::Pome { .. } => "pome",
            SubstrateCall::Enforce { .. } => "enforce",
            SubstrateCall::Log { .. } => "log",
            SubstrateCall::Punish { .. } => "punish",
        }
    }

    /// Channel updates are processed before judge calls.
    pub fn rank(&self) -> u8 {
        match self {
            SubstrateCall::Update(_) => 0,
            _ => 1,
        }
    }
}

#[derive(Default, Debug)]
pub struct Outbox {
    pub messages: Vec<(PartyId, Message)>,
    pub calls: Vec<SubstrateCall>,
}

impl Outbox {
    pub fn send(&mut self, to: PartyId, msg: Message) {
        self.messages.push((to, msg));
    }

    pub fn call(&mut self, c: SubstrateCall) {
        self.calls.push(c);
    }
}

/// Why a party gave up.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Abort {
    pub round: Round,
    pub reason: String,
}

/// Per-party view of the public setup values it has collected.
#[derive(Clone, Debug, Default)]
pub(crate) struct PeerHashes {
    pub h_s: BTreeMap<PartyId, CommitmentValue>,
    pub fee: BTreeMap<PartyId, Amount>,
    pub sync_hash: Option<CommitmentValue>,
}

/// Key material of a committer (provider or relayer).
pub(crate) struct CommitterSecrets {
    pub sk: SymKey,
    pub s: Secret,
    pub mask: MaskCommitment,
}

impl CommitterSecrets {
    pub fn generate<R: RngCore + ?Sized>(behavior: &Behavior, key: &KeyPair, rng: &mut R) -> Self {
        let sk = SymKey::generate(rng);
        let s = Secret::random(rng);
        let mut mask = mcom_gen(&sk, &s, key, rng);
        if *behavior == Behavior::WrongMask {
            let mut ck = [0u8; SECRET_LEN];
            rng.fill_bytes(&mut ck);
            mask = MaskCommitment::sign(mask.h_sk, mask.h_s, ck, key);
        }
        CommitterSecrets { sk, s, mask }
    }

    /// Encrypts one layer, or substitutes random bytes under consistent
    /// commitments when the behavior says so.
    pub fn encrypt_layer<R: RngCore + ?Sized>(
        &self,
        behavior: &Behavior,
        m: &[u8],
        h_m: CommitmentValue,
        id: u32,
        key: &KeyPair,
        rng: &mut R,
    ) -> (Vec<u8>, EncCommitment) {
        if behavior.garbles(id) {
            let mut c = vec![0u8; m.len()];
            rng.fill_bytes(&mut c);
            let h_c = commit(&c, rng);
            let com = EncCommitment::sign(h_m, h_c, self.mask.h_sk, id, key);
            (c, com)
        } else {
            ecom_gen_linked(m, h_m, &self.sk, self.mask.h_sk, id, key, rng)
        }
    }

    /// The secret this party reveals: its own, or a wrong one.
    pub fn revealed<R: RngCore + ?Sized>(&self, behavior: &Behavior, rng: &mut R) -> Secret {
        if *behavior == Behavior::WrongSecret {
            Secret::random(rng)
        } else {
            self.s
        }
    }
}

/// One party of a delivery.
pub enum PartyMachine {
    Customer(Customer),
    Provider(Provider),
    Relayer(Relayer),
}

impl PartyMachine {
    pub fn id(&self) -> PartyId {
        match self {
            PartyMachine::Customer(p) => p.id,
            PartyMachine::Provider(p) => p.id,
            PartyMachine::Relayer(p) => p.id,
        }
    }

    pub fn behavior(&self) -> &Behavior {
        match self {
            PartyMachine::Customer(p) => &p.behavior,
            PartyMachine::Provider(p) => &p.behavior,
            PartyMachine::Relayer(p) => &p.behavior,
        }
    }

    pub fn keypair(&self) -> &KeyPair {
        match self {
            PartyMachine::Customer(p) => &p.key,
            PartyMachine::Provider(p) => &p.key,
            PartyMachine::Relayer(p) => &p.key,
        }
    }

    pub fn step(&mut self, round: Round, inbox: Vec<Inbound>, chans: &ChannelRegistry, out: &mut Outbox) {
        match self {
            PartyMachine::Customer(p) => p.step(round, inbox, chans, out),
            PartyMachine::Provider(p) => p.step(round, inbox, chans, out),
            PartyMachine::Relayer(p) => p.step(round, inbox, chans, out),
        }
    }

    pub fn is_terminal(&self) -> bool {
        match self {
            PartyMachine::Customer(p) => p.is_terminal(),
            PartyMachine::Provider(p) => p.is_terminal(),
            PartyMachine::Relayer(p) => p.is_terminal(),
        }
    }

    pub fn abort(&self) -> Option<&Abort> {
        match self {
            PartyMachine::Customer(p) => p.abort.as_ref(),
            PartyMachine::Provider(p) => p.abort.as_ref(),
            PartyMachine::Relayer(p) => p.abort.as_ref(),
        }
    }
}
