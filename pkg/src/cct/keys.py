"""Key material: representation, validation, generation, RSA core ops.

Besides sound key generation, this module hosts the weak RSA families used
for fault injection (structured primes that the key battery must factor).
"""

from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import gmpy2

from cct import ec
from cct.errors import ImportFailure, KeyGenFailure


class KeyAlgo(str, enum.Enum):
    RSA_1024 = "Rsa1024"
    EC_P256 = "EcP256"
    AES_128 = "Aes128"
    HMAC_SHA256 = "HmacSha256"


class Provenance(str, enum.Enum):
    IMPORTED = "Imported"
    GENERATED = "Generated"


RSA_BITS = 1024
RSA_E = 65537


@dataclass(frozen=True)
class KeyMaterial:
    algo: KeyAlgo
    public: Optional[dict] = None   # RSA: n,e ; EC: x,y
    private: Optional[dict] = None  # RSA: d,p,q ; EC: d ; symmetric: secret hex
    provenance: Provenance = Provenance.GENERATED

    def validate(self) -> None:
        """Raises ImportFailure if the material violates its invariants."""
        if self.algo == KeyAlgo.RSA_1024:
            n, e = self.public["n"], self.public["e"]
            if not (1 < e < n):
                raise ImportFailure("invalid RSA exponent")
            if self.private is not None:
                p, q, d = self.private["p"], self.private["q"], self.private["d"]
                if p * q != n:
                    raise ImportFailure("n != p*q")
                lam = int(gmpy2.lcm(p - 1, q - 1))
                if d * e % lam != 1:
                    raise ImportFailure("d*e != 1 mod lcm(p-1, q-1)")
        elif self.algo == KeyAlgo.EC_P256:
            point = (self.public["x"], self.public["y"])
            if not ec.is_on_curve(point) or point is None:
                raise ImportFailure("EC public point not on curve")
            # order check without scalar reduction mod N
            rest = ec.scalar_mult(ec.N - 1, point)
            if ec.point_add(rest, point) is not None:
                raise ImportFailure("EC public point has wrong order")
            if self.private is not None:
                if ec.scalar_base_mult(self.private["d"]) != point:
                    raise ImportFailure("EC public point does not match scalar")
        elif self.algo in (KeyAlgo.AES_128, KeyAlgo.HMAC_SHA256):
            want = 16 if self.algo == KeyAlgo.AES_128 else 32
            if self.private is None or len(self.secret) != want:
                raise ImportFailure(f"symmetric secret must be {want} bytes")

    @property
    def secret(self) -> bytes:
        return bytes.fromhex(self.private["secret"])

    def public_encoded(self) -> Optional[bytes]:
        """Wire encoding of the public half (RSA: n||e 4-byte-len-prefixed ints;
        EC: SEC1 uncompressed point). Symmetric keys have none."""
        if self.algo == KeyAlgo.RSA_1024:
            n, e = self.public["n"], self.public["e"]
            nb = n.to_bytes((n.bit_length() + 7) // 8, "big")
            eb = e.to_bytes((e.bit_length() + 7) // 8, "big")
            return (len(nb).to_bytes(4, "big") + nb +
                    len(eb).to_bytes(4, "big") + eb)
        if self.algo == KeyAlgo.EC_P256:
            return ec.encode_point((self.public["x"], self.public["y"]))
        return None

    def to_json(self) -> dict:
        def fmt(v):
            return hex(v) if isinstance(v, int) else v
        out = {"algo": self.algo.value, "provenance": self.provenance.value}
        if self.public is not None:
            out["public"] = {k: fmt(v) for k, v in self.public.items()}
        if self.private is not None:
            out["private"] = {k: fmt(v) for k, v in self.private.items()}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "KeyMaterial":
        def parse(d):
            if d is None:
                return None
            return {k: int(v, 16) if isinstance(v, str) and v.startswith("0x")
                    else v for k, v in d.items()}
        return cls(
            algo=KeyAlgo(obj["algo"]),
            public=parse(obj.get("public")),
            private=parse(obj.get("private")),
            provenance=Provenance(obj["provenance"]),
        )


def decode_rsa_public(blob: bytes) -> tuple[int, int]:
    nlen = int.from_bytes(blob[:4], "big")
    n = int.from_bytes(blob[4:4 + nlen], "big")
    off = 4 + nlen
    elen = int.from_bytes(blob[off:off + 4], "big")
    e = int.from_bytes(blob[off + 4:off + 4 + elen], "big")
    return n, e


# --- RSA core operations ---

def rsa_public_op(n: int, e: int, value: int) -> int:
    return int(gmpy2.powmod(value, e, n))


def rsa_private_op(key: KeyMaterial, value: int) -> int:
    """CRT-accelerated m^d mod n."""
    p, q, d = key.private["p"], key.private["q"], key.private["d"]
    n = key.public["n"]
    mp = gmpy2.powmod(value, d % (p - 1), p)
    mq = gmpy2.powmod(value, d % (q - 1), q)
    qinv = gmpy2.invert(q, p)
    h = (mp - mq) * qinv % p
    return int((mq + h * q) % n)


# --- generation ---

def _prime_from_rng(rng, bits: int = 512) -> int:
    """Next prime above a uniform odd candidate with the top two bits set."""
    x = int.from_bytes(rng.bytes(bits // 8), "big")
    x |= (3 << (bits - 2)) | 1
    return int(gmpy2.next_prime(x))


def generate_rsa_key(rng, provenance: Provenance = Provenance.GENERATED) -> KeyMaterial:
    while True:
        p = _prime_from_rng(rng)
        q = _prime_from_rng(rng)
        n = p * q
        lam = int(gmpy2.lcm(p - 1, q - 1))
        if p != q and n.bit_length() == RSA_BITS and gmpy2.gcd(RSA_E, lam) == 1:
            break
    d = int(gmpy2.invert(RSA_E, lam))
    return KeyMaterial(KeyAlgo.RSA_1024, {"n": n, "e": RSA_E},
                       {"d": d, "p": p, "q": q}, provenance)


def generate_ec_key(rng, provenance: Provenance = Provenance.GENERATED) -> KeyMaterial:
    d = scalar_from_rng(rng)
    x, y = ec.scalar_base_mult(d)
    return KeyMaterial(KeyAlgo.EC_P256, {"x": x, "y": y}, {"d": d}, provenance)


def generate_symmetric_key(rng, algo: KeyAlgo,
                           provenance: Provenance = Provenance.GENERATED) -> KeyMaterial:
    size = 16 if algo == KeyAlgo.AES_128 else 32
    return KeyMaterial(algo, None, {"secret": rng.bytes(size).hex()}, provenance)


def scalar_from_rng(rng) -> int:
    """Uniform scalar in [1, N-1] by rejection over raw 32-byte draws."""
    while True:
        k = int.from_bytes(rng.bytes(32), "big")
        if 1 <= k < ec.N:
            return k


# --- weak RSA families (fault injection) ---

WEAK_FAMILIES = ("sparse", "repeat", "close", "shared", "smooth", "roca",
                 "small_exponent", "corrupt")

# Odd primes of the structured-prime fingerprint (generator side mirrors the
# detector's small-prime set).
ROCA_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59,
               61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127,
               131, 137, 139, 149, 151, 157, 163, 167, 173)
ROCA_M = math.prod(ROCA_PRIMES)


def _sparse_prime(rng) -> int:
    """p = 2^511 + 2^510 + 2^t + c with small odd c, t a multiple of 32.
    The 2^510 term keeps p*q at 1024 bits for a typical random q."""
    while True:
        t = 32 * (1 + int.from_bytes(rng.bytes(1), "big") % 14)
        c = int.from_bytes(rng.bytes(2), "big") | 1
        p = (1 << 511) + (1 << 510) + (1 << t) + c
        if gmpy2.is_prime(p):
            return p


def _repeat_pattern_prime(rng) -> int:
    """Prime just above a short bit pattern repeated across 512 bits."""
    while True:
        width = 2 + int.from_bytes(rng.bytes(1), "big") % 7
        pattern = int.from_bytes(rng.bytes(1), "big") % (1 << width)
        filling = 0
        for _ in range(512 // width + 1):
            filling = (filling << width) | pattern
        filling &= (1 << 512) - 1
        filling |= (1 << 511) | 1
        p = int(gmpy2.next_prime(filling))
        if p.bit_length() == 512:
            return p


def _smooth_prime(rng, factor_bound: int = 10_000) -> int:
    """512-bit prime with B-power-smooth p-1 (all factors < factor_bound)."""
    small = [int(p) for p in _primes_below(factor_bound)]
    while True:
        # distinct factors: a repeated prime would make p-1 power-smooth
        # only at a higher bound than the factors themselves
        used = set()
        acc = 2
        while acc.bit_length() < 500:
            f = small[int.from_bytes(rng.bytes(2), "big") % len(small)]
            if f not in used:
                used.add(f)
                acc *= f
        for _ in range(512):
            f = small[int.from_bytes(rng.bytes(2), "big") % len(small)]
            cand = acc * f + 1
            if f not in used and cand.bit_length() == 512 and gmpy2.is_prime(cand):
                return int(cand)


def _primes_below(bound: int) -> list[int]:
    sieve = bytearray([1]) * bound
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(bound ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = b"\x00" * len(sieve[i * i::i])
    return [i for i in range(bound) if sieve[i]]


def _roca_prime(rng) -> int:
    """p = k*M + (65537^a mod M) for the structured-prime fingerprint.
    k is drawn so p lands in [3*2^510, 2^512), keeping p*q at 1024 bits."""
    k_min = (3 << 510) // ROCA_M + 1
    k_max = ((1 << 512) - 1) // ROCA_M
    while True:
        a = int.from_bytes(rng.bytes(8), "big")
        residue = int(gmpy2.powmod(65537, a, ROCA_M))
        k = k_min + int.from_bytes(rng.bytes(36), "big") % (k_max - k_min)
        p = k * ROCA_M + residue
        if p.bit_length() == 512 and gmpy2.is_prime(p):
            return p


def _shared_prime(family_id: str) -> int:
    """Deterministic per-family prime so all keys of the family collide."""
    seed = hashlib.sha256(b"cct-shared-prime:" + family_id.encode()).digest()
    out = b""
    for c in range(16):
        out += hashlib.sha256(seed + bytes([c])).digest()
    x = int.from_bytes(out[:64], "big") | (3 << 510) | 1
    return int(gmpy2.next_prime(x))


def generate_weak_rsa_key(rng, family: str,
                          provenance: Provenance = Provenance.GENERATED) -> KeyMaterial:
    """A key from one of the injectable weak families; `family` may carry a
    variant suffix after ':' (e.g. 'shared:group1')."""
    base, _, _variant = family.partition(":")
    if base not in WEAK_FAMILIES:
        raise KeyGenFailure(f"unknown weak family {family!r}")
    while True:
        key = _weak_rsa_attempt(rng, base, family, provenance)
        if key is not None:
            return key


def _weak_rsa_attempt(rng, base: str, family: str,
                      provenance: Provenance) -> Optional[KeyMaterial]:
    e = RSA_E
    if base == "sparse":
        p, q = _sparse_prime(rng), _prime_from_rng(rng)
    elif base == "repeat":
        p, q = _repeat_pattern_prime(rng), _prime_from_rng(rng)
    elif base == "close":
        p = _prime_from_rng(rng)
        gap = int.from_bytes(rng.bytes(3), "big")
        q = int(gmpy2.next_prime(p + gap))
    elif base == "shared":
        p, q = _shared_prime(family), _prime_from_rng(rng)
    elif base == "smooth":
        p, q = _smooth_prime(rng), _prime_from_rng(rng)
    elif base == "roca":
        p, q = _roca_prime(rng), _roca_prime(rng)
    elif base == "small_exponent":
        e = 3
        while True:
            p, q = _prime_from_rng(rng), _prime_from_rng(rng)
            if gmpy2.gcd(e, (p - 1) * (q - 1)) == 1:
                break
    else:  # corrupt: composite low-entropy factor, invalid exponent
        a = ((1 << 512) - 1) // 3  # 0101...01, composite
        b = _prime_from_rng(rng)
        return KeyMaterial(KeyAlgo.RSA_1024, {"n": a * b, "e": 2},
                           {"d": 1, "p": a, "q": b}, provenance)
    n = p * q
    if n.bit_length() != RSA_BITS:
        return None
    lam = int(gmpy2.lcm(p - 1, q - 1))
    if gmpy2.gcd(e, lam) != 1:
        return None
    d = int(gmpy2.invert(e, lam))
    return KeyMaterial(KeyAlgo.RSA_1024, {"n": n, "e": e},
                       {"d": d, "p": p, "q": q}, provenance)


# --- fixed import keys (published constants; analysis relies on knowing them) ---

_FIXED_RSA_P = 0xE3CA8BE4E0F9876B687D5A401D663C8C085AE3F1379E905A588051195EA2F7F91906487DB96E0E44F7365AC094885BA23C9D602F51B178EDFDEE11253FE667D3
_FIXED_RSA_Q = 0xFF767E56C28C9B8BDDF1F9F8C6CEBD29B9D338D0FFE1C2C6B27EFB5C3618FEEF596ECC3B408B80BFEC1E702BE8A7B5F202B2F20F0864FBB83B24246D94FD174F
_FIXED_EC_D = int.from_bytes(hashlib.sha256(b"cct-fixed-ec-scalar").digest(), "big") % (ec.N - 1) + 1
_FIXED_AES_SECRET = hashlib.sha256(b"cct-fixed-aes-key").digest()[:16]
_FIXED_HMAC_SECRET = hashlib.sha256(b"cct-fixed-hmac-key").digest()


def _fixed_rsa() -> KeyMaterial:
    p, q = _FIXED_RSA_P, _FIXED_RSA_Q
    n = p * q
    d = int(gmpy2.invert(RSA_E, gmpy2.lcm(p - 1, q - 1)))
    return KeyMaterial(KeyAlgo.RSA_1024, {"n": n, "e": RSA_E},
                       {"d": d, "p": p, "q": q}, Provenance.IMPORTED)


def _fixed_ec() -> KeyMaterial:
    x, y = ec.scalar_base_mult(_FIXED_EC_D)
    return KeyMaterial(KeyAlgo.EC_P256, {"x": x, "y": y}, {"d": _FIXED_EC_D},
                       Provenance.IMPORTED)


def fixed_keys() -> dict[KeyAlgo, KeyMaterial]:
    """The hardcoded import keys, one per algorithm."""
    return {
        KeyAlgo.RSA_1024: _fixed_rsa(),
        KeyAlgo.EC_P256: _fixed_ec(),
        KeyAlgo.AES_128: KeyMaterial(
            KeyAlgo.AES_128, None, {"secret": _FIXED_AES_SECRET.hex()},
            Provenance.IMPORTED),
        KeyAlgo.HMAC_SHA256: KeyMaterial(
            KeyAlgo.HMAC_SHA256, None, {"secret": _FIXED_HMAC_SECRET.hex()},
            Provenance.IMPORTED),
    }


def write_key_file(path, keys: dict[KeyAlgo, KeyMaterial]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({algo.value: km.to_json() for algo, km in keys.items()},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_key_file(path) -> dict[KeyAlgo, KeyMaterial]:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    return {KeyAlgo(k): KeyMaterial.from_json(v) for k, v in raw.items()}
