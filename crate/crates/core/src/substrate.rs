//! Shared on-chain and channel state seen by every party.

use crate::judge::{Judge, JudgeConfig};
use crate::pcn::{ChannelRegistry, Ledger};
use crate::Directory;

pub struct Substrate {
    pub ledger: Ledger,
    pub channels: ChannelRegistry,
    pub judge: Judge,
    pub dir: Directory,
}

impl Substrate {
    pub fn new(cfg: JudgeConfig) -> Self {
        Substrate {
            ledger: Ledger::new(),
            channels: ChannelRegistry::new(),
            judge: Judge::new(cfg),
            dir: Directory::new(),
        }
    }
}
