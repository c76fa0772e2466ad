"""RSA padding encoders/decoders: EMSA-PKCS1-v1_5, EMSA-PSS, EME-OAEP,
EME-PKCS1-v1_5. All hashes are SHA-256; MGF1 uses SHA-256.

Decoders come in two flavours where the analyses need them: strict
(verification semantics) and lenient (parameter recovery from invalid
artifacts, e.g. a PSS salt of nonstandard length).
"""

from __future__ import annotations

import hashlib
from typing import Optional

from cct.errors import DecodeFailure

HASH_LEN = 32

# DigestInfo prefix for SHA-256 (DER of AlgorithmIdentifier + OCTET STRING tag)
SHA256_DIGEST_INFO = bytes.fromhex("3031300d060960864801650304020105000420")


def _sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def mgf1(seed: bytes, length: int) -> bytes:
    out = bytearray()
    counter = 0
    while len(out) < length:
        out += _sha256(seed + counter.to_bytes(4, "big"))
        counter += 1
    return bytes(out[:length])


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


# --- EMSA-PKCS1-v1_5 ---

def emsa_pkcs1_encode(message: bytes, em_len: int) -> bytes:
    t = SHA256_DIGEST_INFO + _sha256(message)
    if em_len < len(t) + 11:
        raise ValueError("modulus too short for PKCS1 encoding")
    return b"\x00\x01" + b"\xff" * (em_len - len(t) - 3) + b"\x00" + t


# --- EMSA-PSS ---

def emsa_pss_encode(message: bytes, em_bits: int, salt: bytes) -> bytes:
    """EMSA-PSS-ENCODE with caller-supplied salt (any length, for faults)."""
    m_hash = _sha256(message)
    em_len = (em_bits + 7) // 8
    if em_len < HASH_LEN + len(salt) + 2:
        raise ValueError("encoded message too short for salt")
    h = _sha256(b"\x00" * 8 + m_hash + salt)
    ps = b"\x00" * (em_len - len(salt) - HASH_LEN - 2)
    db = ps + b"\x01" + salt
    masked_db = _xor(db, mgf1(h, len(db)))
    # clear leftmost 8*em_len - em_bits bits
    masked_db = bytes([masked_db[0] & (0xFF >> (8 * em_len - em_bits))]) + masked_db[1:]
    return masked_db + h + b"\xbc"


def emsa_pss_verify(message: bytes, em: bytes, em_bits: int,
                    salt_len: Optional[int] = None) -> bool:
    """RFC 8017 verification; salt_len=None accepts any salt length
    (the usual verifier behaviour)."""
    try:
        salt = emsa_pss_recover_salt(em, em_bits)
    except DecodeFailure:
        return False
    if salt_len is not None and len(salt) != salt_len:
        return False
    m_hash = _sha256(message)
    h = em[-HASH_LEN - 1:-1]
    return _sha256(b"\x00" * 8 + m_hash + salt) == h


def emsa_pss_recover_salt(em: bytes, em_bits: int) -> bytes:
    """Lenient PSS decode: unmask DB and return whatever follows the 0x01
    separator, tolerating nonstandard salt lengths. The 0xbc trailer and
    separator must still be present."""
    em_len = (em_bits + 7) // 8
    if len(em) != em_len:
        raise DecodeFailure(f"encoded message is {len(em)} bytes, want {em_len}")
    if em[-1] != 0xBC:
        raise DecodeFailure("missing 0xbc trailer")
    db_len = em_len - HASH_LEN - 1
    masked_db = em[:db_len]
    h = em[db_len:-1]
    db = bytearray(_xor(masked_db, mgf1(h, db_len)))
    db[0] &= 0xFF >> (8 * em_len - em_bits)
    sep = bytes(db).find(b"\x01")
    if sep < 0 or any(db[:sep]):
        raise DecodeFailure("no 0x01 separator after zero padding")
    return bytes(db[sep + 1:])


# --- EME-OAEP ---

def eme_oaep_encode(message: bytes, k: int, seed: bytes, label: bytes = b"") -> bytes:
    if len(seed) != HASH_LEN:
        raise ValueError("OAEP seed must be hash-length")
    if len(message) > k - 2 * HASH_LEN - 2:
        raise ValueError("message too long for OAEP")
    l_hash = _sha256(label)
    ps = b"\x00" * (k - len(message) - 2 * HASH_LEN - 2)
    db = l_hash + ps + b"\x01" + message
    masked_db = _xor(db, mgf1(seed, k - HASH_LEN - 1))
    masked_seed = _xor(seed, mgf1(masked_db, HASH_LEN))
    return b"\x00" + masked_seed + masked_db


def eme_oaep_decode(em: bytes, k: int, label: bytes = b"") -> tuple[bytes, bytes]:
    """Returns (seed, message); raises DecodeFailure on any structure error."""
    if len(em) != k or k < 2 * HASH_LEN + 2:
        raise DecodeFailure("bad encoded message length")
    if em[0] != 0:
        raise DecodeFailure("leading byte not zero")
    masked_seed = em[1:1 + HASH_LEN]
    masked_db = em[1 + HASH_LEN:]
    seed = _xor(masked_seed, mgf1(masked_db, HASH_LEN))
    db = _xor(masked_db, mgf1(seed, len(masked_db)))
    if db[:HASH_LEN] != _sha256(label):
        raise DecodeFailure("label hash mismatch")
    sep = db.find(b"\x01", HASH_LEN)
    if sep < 0 or any(db[HASH_LEN:sep]):
        raise DecodeFailure("no 0x01 separator after zero padding")
    return seed, db[sep + 1:]


# --- EME-PKCS1-v1_5 (encryption) ---

def eme_pkcs1_encode(message: bytes, k: int, padding: bytes) -> bytes:
    """Caller supplies the nonzero padding bytes (at least 8)."""
    if len(message) > k - 11:
        raise ValueError("message too long for PKCS1 encryption")
    ps = padding[:k - len(message) - 3]
    if len(ps) != k - len(message) - 3 or 0 in ps:
        raise ValueError("padding must be nonzero and long enough")
    return b"\x00\x02" + ps + b"\x00" + message


def eme_pkcs1_decode(em: bytes, k: int) -> bytes:
    if len(em) != k or em[:2] != b"\x00\x02":
        raise DecodeFailure("bad PKCS1 encryption header")
    sep = em.find(b"\x00", 2)
    if sep < 10:
        raise DecodeFailure("PKCS1 padding too short")
    return em[sep + 1:]
