use rand::RngCore;

use super::{hash_parts, xor_keystream, CryptoError};

pub const MASTER_KEY_LEN: usize = 32;
/// Nonce length in bytes (128 bits).
pub const NONCE_LEN: usize = 16;
/// Serialized key length: master key followed by nonce.
pub const SYM_KEY_LEN: usize = MASTER_KEY_LEN + NONCE_LEN;

pub type Nonce = [u8; NONCE_LEN];

/// Symmetric key `sk = (Sk, nonce)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SymKey {
    pub master: [u8; MASTER_KEY_LEN],
    pub nonce: Nonce,
}

impl SymKey {
    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut master = [0u8; MASTER_KEY_LEN];
        let mut nonce = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut master);
        rng.fill_bytes(&mut nonce);
        SymKey { master, nonce }
    }

    /// `Sk ‖ nonce`.
    pub fn to_bytes(&self) -> [u8; SYM_KEY_LEN] {
        let mut out = [0u8; SYM_KEY_LEN];
        out[..MASTER_KEY_LEN].copy_from_slice(&self.master);
        out[MASTER_KEY_LEN..].copy_from_slice(&self.nonce);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        if bytes.len() != SYM_KEY_LEN {
            return Err(CryptoError::BadLength {
                expected: SYM_KEY_LEN,
                actual: bytes.len(),
            });
        }
        let mut master = [0u8; MASTER_KEY_LEN];
        let mut nonce = [0u8; NONCE_LEN];
        master.copy_from_slice(&bytes[..MASTER_KEY_LEN]);
        nonce.copy_from_slice(&bytes[MASTER_KEY_LEN..]);
        Ok(SymKey { master, nonce })
    }

    /// Encrypts chunk `id` under the per-chunk nonce.
    pub fn encrypt_chunk(&self, m: &[u8], id: u32) -> Vec<u8> {
        se_enc(m, &self.master, &tweak_nonce(&self.nonce, id))
    }

    pub fn decrypt_chunk(&self, c: &[u8], id: u32) -> Vec<u8> {
        se_dec(c, &self.master, &tweak_nonce(&self.nonce, id))
    }
}

/// Stream encryption: `m ⊕ KS` where block `i` of `KS` is `H(Sk ‖ r ‖ i_be64)`.
pub fn se_enc(m: &[u8], master: &[u8; MASTER_KEY_LEN], nonce: &Nonce) -> Vec<u8> {
    let mut out = m.to_vec();
    xor_keystream(&mut out, &[master, nonce]);
    out
}

pub fn se_dec(c: &[u8], master: &[u8; MASTER_KEY_LEN], nonce: &Nonce) -> Vec<u8> {
    se_enc(c, master, nonce)
}

/// Per-chunk nonce: the first 16 bytes of `H(nonce ‖ id_be32)`.
pub fn tweak_nonce(nonce: &Nonce, id: u32) -> Nonce {
    let h = hash_parts(&[nonce, &id.to_be_bytes()]);
    let mut out = [0u8; NONCE_LEN];
    out.copy_from_slice(&h.0[..NONCE_LEN]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn round_trip_and_length() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let k = SymKey::generate(&mut rng);
        for len in [0usize, 1, 31, 32, 33, 1000] {
            let m: Vec<u8> = (0..len).map(|i| i as u8).collect();
            let c = se_enc(&m, &k.master, &k.nonce);
            assert_eq!(c.len(), len);
            assert_eq!(se_dec(&c, &k.master, &k.nonce), m);
        }
    }

    #[test]
    fn distinct_ids_give_distinct_nonces() {
        let n = [5u8; NONCE_LEN];
        assert_ne!(tweak_nonce(&n, 1), tweak_nonce(&n, 2));
        assert_eq!(tweak_nonce(&n, 1), tweak_nonce(&n, 1));
    }

    #[test]
    fn key_encoding_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(10);
        let k = SymKey::generate(&mut rng);
        assert_eq!(SymKey::from_bytes(&k.to_bytes()).unwrap(), k);
        assert!(SymKey::from_bytes(&[0u8; 47]).is_err());
    }

    #[test]
    fn wrong_key_does_not_decrypt() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let k1 = SymKey::generate(&mut rng);
        let k2 = SymKey::generate(&mut rng);
        let m = vec![42u8; 100];
        let c = k1.encrypt_chunk(&m, 3);
        assert_ne!(k2.decrypt_chunk(&c, 3), m);
        assert_ne!(k1.decrypt_chunk(&c, 4), m);
        assert_eq!(k1.decrypt_chunk(&c, 3), m);
    }
}
