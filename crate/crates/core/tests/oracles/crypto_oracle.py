"""Reference values for tests/crypto_vectors.rs, computed with hashlib and
the `cryptography` package instead of the crate's own code.

Run: python3 crypto_oracle.py [rust_signature_hex]
"""
import hashlib
import sys

from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature,
    encode_dss_signature,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat

N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141


def H(*parts):
    h = hashlib.sha256()
    for p in parts:
        h.update(p)
    return h.digest()


def keystream_xor(data, *key):
    out = bytearray(data)
    for ctr in range(0, len(out), 32):
        ks = H(*key, (ctr // 32).to_bytes(8, "big"))
        for j, k in enumerate(ks[: len(out) - ctr]):
            out[ctr + j] ^= k
    return bytes(out)


def merkle_root(leaves):
    level = [H(b"\x00", l) for l in leaves]
    while len(level) > 1:
        level = [
            H(b"\x01", level[i], level[i + 1] if i + 1 < len(level) else level[i])
            for i in range(0, len(level), 2)
        ]
    return level[0]


def key_from_seed(seed):
    ctr = 0
    while True:
        d = int.from_bytes(H(b"keygen", seed, ctr.to_bytes(4, "big")), "big")
        if 0 < d < N:
            return ec.derive_private_key(d, ec.SECP256K1())
        ctr += 1


def compressed(pub):
    return pub.public_bytes(Encoding.X962, PublicFormat.CompressedPoint)


def main():
    print("sha256(abc)", H(b"abc").hex())
    pad = bytes(range(16))
    print("commit(relay, 00..0f)", H(b"relay", pad).hex())

    master, nonce = b"\x11" * 32, b"\x22" * 16
    tweaked = H(nonce, (7).to_bytes(4, "big"))[:16]
    print("tweak(22.., 7)", tweaked.hex())
    ct = keystream_xor(bytes(range(100)), master, tweaked)
    print("se chunk 7", ct.hex())

    for n in (1, 2, 3, 5):
        leaves = [bytes([ord("a") + i]) for i in range(n)]
        print(f"merkle {n}", merkle_root(leaves).hex())

    sk = key_from_seed(b"\x07" * 32)
    print("pk(seed 07)", compressed(sk.public_key()).hex())

    msg = b"lock receipt"
    r, s = decode_dss_signature(sk.sign(msg, ec.ECDSA(hashes.SHA256())))
    s = min(s, N - s)
    print("py sig", (r.to_bytes(32, "big") + s.to_bytes(32, "big") + b"\x00").hex())

    if len(sys.argv) > 1:
        sig = bytes.fromhex(sys.argv[1])
        der = encode_dss_signature(int.from_bytes(sig[:32], "big"), int.from_bytes(sig[32:64], "big"))
        sk.public_key().verify(der, msg, ec.ECDSA(hashes.SHA256()))
        print("rust sig verifies")

    # ECIES to the seed-07 key from a fixed ephemeral key.
    eph = key_from_seed(b"\x09" * 32)
    shared = eph.exchange(ec.ECDH(), sk.public_key())
    eph_pk, rec_pk = compressed(eph.public_key()), compressed(sk.public_key())
    key = H(b"ae-key", shared, eph_pk, rec_pk)
    body = keystream_xor(b"sealed mask commitment", b"ae-stream", key)
    tag = H(b"ae-tag", key, body)
    print("ae ct", (eph_pk + body + tag).hex())


if __name__ == "__main__":
    main()
