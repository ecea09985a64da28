use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};

use k256::ecdsa::signature::Verifier;
use k256::ecdsa::{RecoveryId, Signature as EcdsaSignature, SigningKey, VerifyingKey};
use rand::RngCore;

use super::{hash_parts, xor_keystream, CryptoError, Digest, HASH_LEN};

/// Detached signature length: `r ‖ s ‖ v`.
pub const SIG_LEN: usize = 65;
/// Compressed SEC1 public key length.
pub const PUBLIC_KEY_LEN: usize = 33;
/// Bytes added by [`ae_enc`]: ephemeral key plus tag.
pub const AE_OVERHEAD: usize = PUBLIC_KEY_LEN + HASH_LEN;

/// A secp256k1 key pair used for signing and for [`ae_dec`].
#[derive(Clone)]
pub struct KeyPair {
    secret: k256::SecretKey,
    public: PublicKey,
}

impl KeyPair {
    /// Derives a key pair deterministically from a 32-byte seed.
    pub fn from_seed(seed: &[u8; 32]) -> Self {
        let mut ctr = 0u32;
        loop {
            let cand = hash_parts(&[b"keygen", seed, &ctr.to_be_bytes()]);
            if let Ok(secret) = k256::SecretKey::from_slice(&cand.0) {
                let public = PublicKey::from_verifying(VerifyingKey::from(secret.public_key()));
                return KeyPair { secret, public };
            }
            ctr += 1;
        }
    }

    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut seed = [0u8; 32];
        rng.fill_bytes(&mut seed);
        Self::from_seed(&seed)
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    /// Deterministic (RFC 6979) ECDSA over SHA-256 of `msg`.
    pub fn sign(&self, msg: &[u8]) -> Signature {
        let sk = SigningKey::from(&self.secret);
        let (sig, rec): (EcdsaSignature, RecoveryId) = sk
            .sign_recoverable(msg)
            .expect("signing with a valid key cannot fail");
        let mut out = [0u8; SIG_LEN];
        out[..64].copy_from_slice(&sig.to_bytes());
        out[64] = rec.to_byte();
        Signature(out)
    }
}

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish()
    }
}

/// Compressed secp256k1 public key. Ordered and hashed by its encoding.
#[derive(Clone)]
pub struct PublicKey {
    key: VerifyingKey,
    bytes: [u8; PUBLIC_KEY_LEN],
}

impl PublicKey {
    fn from_verifying(key: VerifyingKey) -> Self {
        let enc = key.to_encoded_point(true);
        let mut bytes = [0u8; PUBLIC_KEY_LEN];
        bytes.copy_from_slice(enc.as_bytes());
        PublicKey { key, bytes }
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CryptoError> {
        let key = VerifyingKey::from_sec1_bytes(bytes).map_err(|_| CryptoError::BadPublicKey)?;
        Ok(Self::from_verifying(key))
    }

    pub fn to_bytes(&self) -> [u8; PUBLIC_KEY_LEN] {
        self.bytes
    }

    pub fn digest(&self) -> Digest {
        hash_parts(&[&self.bytes])
    }

    pub fn verify(&self, msg: &[u8], sig: &Signature) -> bool {
        if sig.0[64] > 3 {
            return false;
        }
        match EcdsaSignature::from_slice(&sig.0[..64]) {
            Ok(s) => self.key.verify(msg, &s).is_ok(),
            Err(_) => false,
        }
    }
}

impl PartialEq for PublicKey {
    fn eq(&self, other: &Self) -> bool {
        self.bytes == other.bytes
    }
}

impl Eq for PublicKey {}

impl PartialOrd for PublicKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PublicKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bytes.cmp(&other.bytes)
    }
}

impl Hash for PublicKey {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bytes.hash(state)
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", hex::encode(&self.bytes[..8]))
    }
}

/// A 65-byte detached signature.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Signature(pub [u8; SIG_LEN]);

impl Signature {
    pub fn from_slice(bytes: &[u8]) -> Result<Self, CryptoError> {
        let arr: [u8; SIG_LEN] = bytes.try_into().map_err(|_| CryptoError::BadLength {
            expected: SIG_LEN,
            actual: bytes.len(),
        })?;
        Ok(Signature(arr))
    }
}

impl fmt::Debug for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Signature({}…)", hex::encode(&self.0[..6]))
    }
}

fn ae_key(shared: &[u8], eph: &[u8], recipient: &[u8]) -> Digest {
    hash_parts(&[b"ae-key", shared, eph, recipient])
}

/// ECIES-style encryption to `pk`: `eph_pk ‖ (m ⊕ KS) ‖ tag`.
pub fn ae_enc<R: RngCore + ?Sized>(m: &[u8], pk: &PublicKey, rng: &mut R) -> Vec<u8> {
    let eph = KeyPair::generate(rng);
    let shared = k256::ecdh::diffie_hellman(eph.secret.to_nonzero_scalar(), pk.key.as_affine());
    let key = ae_key(&shared.raw_secret_bytes()[..], &eph.public.bytes, &pk.bytes);
    let mut body = m.to_vec();
    xor_keystream(&mut body, &[b"ae-stream", &key.0]);
    let tag = hash_parts(&[b"ae-tag", &key.0, &body]);
    let mut out = Vec::with_capacity(m.len() + AE_OVERHEAD);
    out.extend_from_slice(&eph.public.bytes);
    out.extend_from_slice(&body);
    out.extend_from_slice(&tag.0);
    out
}

pub fn ae_dec(ct: &[u8], kp: &KeyPair) -> Result<Vec<u8>, CryptoError> {
    if ct.len() < AE_OVERHEAD {
        return Err(CryptoError::Decryption);
    }
    let (eph_bytes, rest) = ct.split_at(PUBLIC_KEY_LEN);
    let (body, tag) = rest.split_at(rest.len() - HASH_LEN);
    let eph = PublicKey::from_bytes(eph_bytes).map_err(|_| CryptoError::Decryption)?;
    let shared = k256::ecdh::diffie_hellman(kp.secret.to_nonzero_scalar(), eph.key.as_affine());
    let key = ae_key(&shared.raw_secret_bytes()[..], eph_bytes, &kp.public.bytes);
    if hash_parts(&[b"ae-tag", &key.0, body]).0 != tag {
        return Err(CryptoError::Decryption);
    }
    let mut m = body.to_vec();
    xor_keystream(&mut m, &[b"ae-stream", &key.0]);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sign_verify() {
        let kp = KeyPair::from_seed(&[1u8; 32]);
        let sig = kp.sign(b"hello");
        assert!(kp.public().verify(b"hello", &sig));
        assert!(!kp.public().verify(b"hellp", &sig));
        let other = KeyPair::from_seed(&[2u8; 32]);
        assert!(!other.public().verify(b"hello", &sig));
    }

    #[test]
    fn signing_is_deterministic() {
        let kp = KeyPair::from_seed(&[3u8; 32]);
        assert_eq!(kp.sign(b"m"), kp.sign(b"m"));
    }

    #[test]
    fn tampered_signature_rejected() {
        let kp = KeyPair::from_seed(&[4u8; 32]);
        let mut sig = kp.sign(b"m");
        sig.0[10] ^= 1;
        assert!(!kp.public().verify(b"m", &sig));
        let mut sig = kp.sign(b"m");
        sig.0[64] = 9;
        assert!(!kp.public().verify(b"m", &sig));
    }

    #[test]
    fn public_key_round_trip() {
        let kp = KeyPair::from_seed(&[5u8; 32]);
        let pk = PublicKey::from_bytes(&kp.public().to_bytes()).unwrap();
        assert_eq!(&pk, kp.public());
        assert!(PublicKey::from_bytes(&[0u8; 33]).is_err());
    }

    #[test]
    fn ae_round_trip_and_tamper() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let kp = KeyPair::generate(&mut rng);
        let ct = ae_enc(b"mask commitment", kp.public(), &mut rng);
        assert_eq!(ct.len(), 15 + AE_OVERHEAD);
        assert_eq!(ae_dec(&ct, &kp).unwrap(), b"mask commitment");
        let mut bad = ct.clone();
        bad[40] ^= 1;
        assert_eq!(ae_dec(&bad, &kp), Err(CryptoError::Decryption));
        let other = KeyPair::generate(&mut rng);
        assert_eq!(ae_dec(&ct, &other), Err(CryptoError::Decryption));
    }
}
