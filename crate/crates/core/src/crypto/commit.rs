use rand::RngCore;

use super::{hash_parts, CryptoError, Digest, HASH_LEN};

/// Length of the random commitment pad `d`.
pub const PAD_LEN: usize = 16;

/// A hash commitment `(c, d)` with `c = H(x ‖ d)`.
///
/// Canonical encoding is `c ‖ d`, 48 bytes.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct CommitmentValue {
    pub c: Digest,
    pub d: [u8; PAD_LEN],
}

impl CommitmentValue {
    pub const ENCODED_LEN: usize = HASH_LEN + PAD_LEN;

    pub fn to_bytes(&self) -> [u8; Self::ENCODED_LEN] {
        let mut out = [0u8; Self::ENCODED_LEN];
        out[..HASH_LEN].copy_from_slice(&self.c.0);
        out[HASH_LEN..].copy_from_slice(&self.d);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != Self::ENCODED_LEN {
            return Err(CryptoError::BadLength {
                expected: Self::ENCODED_LEN,
                actual: bytes.len(),
            });
        }
        let mut c = [0u8; HASH_LEN];
        let mut d = [0u8; PAD_LEN];
        c.copy_from_slice(&bytes[..HASH_LEN]);
        d.copy_from_slice(&bytes[HASH_LEN..]);
        Ok(CommitmentValue { c: Digest(c), d })
    }
}

/// Commits to `x` with a fresh pad drawn from `rng`.
pub fn commit<R: RngCore + ?Sized>(x: &[u8], rng: &mut R) -> CommitmentValue {
    let mut d = [0u8; PAD_LEN];
    rng.fill_bytes(&mut d);
    CommitmentValue {
        c: hash_parts(&[x, &d]),
        d,
    }
}

/// Returns true iff `h` is a commitment to `x`.
pub fn open(x: &[u8], h: &CommitmentValue) -> bool {
    hash_parts(&[x, &h.d]) == h.c
}

/// [`open`] over an encoded commitment; malformed encodings are an error.
pub fn open_encoded(x: &[u8], h: &[u8]) -> Result<bool, CryptoError> {
    Ok(open(x, &CommitmentValue::from_bytes(h)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn commit_then_open() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let h = commit(b"chunk", &mut rng);
        assert!(open(b"chunk", &h));
        assert!(!open(b"chunK", &h));
    }

    #[test]
    fn empty_input_commits() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let h = commit(b"", &mut rng);
        assert!(open(b"", &h));
        assert!(!open(b"\0", &h));
    }

    #[test]
    fn encoding_round_trips_and_rejects_bad_lengths() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let h = commit(b"x", &mut rng);
        let enc = h.to_bytes();
        assert_eq!(CommitmentValue::from_bytes(&enc).unwrap(), h);
        assert!(open_encoded(b"x", &enc).unwrap());
        assert!(open_encoded(b"x", &enc[..47]).is_err());
    }

    #[test]
    fn tampered_pad_fails() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let mut h = commit(b"x", &mut rng);
        h.d[0] ^= 1;
        assert!(!open(b"x", &h));
    }
}
