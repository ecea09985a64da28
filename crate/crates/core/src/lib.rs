pub mod commitments;
pub mod crypto;
pub mod ids;
pub mod judge;
pub mod parties;
pub mod payment;
pub mod pcn;
pub mod sim;
pub mod substrate;

pub use ids::{Amount, Directory, PartyId, Round};
