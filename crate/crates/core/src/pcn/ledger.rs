use std::collections::BTreeMap;

use super::PcnError;
use crate::{Amount, PartyId};

/// On-chain balances. Deposits held for the judge live here too.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Ledger {
    balances: BTreeMap<PartyId, Amount>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Mints `amt` to `party`; used only when funding a scenario.
    pub fn credit(&mut self, party: PartyId, amt: Amount) {
        *self.balances.entry(party).or_default() += amt;
    }

    pub fn balance(&self, party: PartyId) -> Amount {
        self.balances.get(&party).copied().unwrap_or(0)
    }

    /// Moves `amt` from `from` to `to`. Fails without side effects when the
    /// sender is short. A zero transfer always succeeds.
    pub fn transfer(&mut self, from: PartyId, to: PartyId, amt: Amount) -> Result<(), PcnError> {
        if amt == 0 {
            return Ok(());
        }
        let have = self.balance(from);
        if have < amt {
            return Err(PcnError::Insufficient {
                party: from,
                have,
                need: amt,
            });
        }
        self.balances.insert(from, have - amt);
        *self.balances.entry(to).or_default() += amt;
        Ok(())
    }

    pub fn total(&self) -> Amount {
        self.balances.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (PartyId, Amount)> + '_ {
        self.balances.iter().map(|(p, a)| (*p, *a))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transfer_moves_funds_and_conserves_total() {
        let mut l = Ledger::new();
        l.credit(PartyId(1), 10);
        l.transfer(PartyId(1), PartyId(2), 4).unwrap();
        assert_eq!(l.balance(PartyId(1)), 6);
        assert_eq!(l.balance(PartyId(2)), 4);
        assert_eq!(l.total(), 10);
    }

    #[test]
    fn insufficient_leaves_state_unchanged() {
        let mut l = Ledger::new();
        l.credit(PartyId(1), 3);
        let before = l.clone();
        assert!(matches!(
            l.transfer(PartyId(1), PartyId(2), 4),
            Err(PcnError::Insufficient { have: 3, need: 4, .. })
        ));
        assert_eq!(l, before);
    }

    #[test]
    fn zero_transfer_is_a_noop_success() {
        let mut l = Ledger::new();
        assert!(l.transfer(PartyId(7), PartyId(8), 0).is_ok());
        assert_eq!(l.total(), 0);
    }
}
