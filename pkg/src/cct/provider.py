"""Pluggable cryptographic backend: a correct reference implementation of
the eight test suites plus a fault-injection catalog reproducing the known
bug patterns. Every nonce, salt, IV and seed is drawn from an injectable
random source so that downstream analyses can recover and test them.
"""

from __future__ import annotations

import enum
import hmac as hmac_mod
import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives import padding as sym_padding

from cct import ec, keys, rsa_padding
from cct.errors import (BlockSizeFailure, DecryptPaddingFailure, ImportFailure,
                        InvalidKey, InvalidKeyBlob, KeyGenFailure, SignFailure)
from cct.keys import KeyAlgo, KeyMaterial, Provenance
from cct.records import Backing, Suite


class FaultPattern(str, enum.Enum):
    NONE = "None"
    PSS_SALT_LENGTH = "PssSaltLength"
    WRONG_KEY_SIGNATURE = "WrongKeySignature"
    ZERO_CHUNK_ECDSA = "ZeroChunkEcdsa"
    OAEP_TRUNCATION = "OaepTruncation"
    HMAC_ECDSA_SHAPED = "HmacEcdsaShaped"
    PATTERNED_RSA_PRIMES = "PatternedRsaPrimes"
    BIASED_RNG = "BiasedRng"
    NON_CONSTANT_TIME_ECDSA = "NonConstantTimeEcdsa"
    KEY_IMPORT_REJECT = "KeyImportReject"
    INVALID_KEY_BLOB = "InvalidKeyBlob"
    INCOMPATIBLE_PURPOSE_ECDH = "IncompatiblePurposeEcdh"
    STRONGBOX_DECRYPT_FAIL = "StrongBoxDecryptFail"
    SDC_BIT_FLIP = "SdcBitFlip"


_ZERO_CHUNK_RUNS = tuple(range(4, 29, 4))


@dataclass(frozen=True)
class FaultSpec:
    pattern: FaultPattern
    applies_to: frozenset[Suite] = frozenset(Suite)
    params: dict = field(default_factory=dict)
    backings: frozenset[Backing] = frozenset(Backing)

    def __post_init__(self):
        rate = self.params.get("rate")
        if rate is not None and not (0 <= rate <= 1):
            raise ValueError(f"rate {rate} outside [0, 1]")
        if self.pattern == FaultPattern.ZERO_CHUNK_ECDSA:
            if self.params.get("run", 8) not in _ZERO_CHUNK_RUNS:
                raise ValueError("zero-chunk run must be a multiple of 4 in [4, 28]")

    def to_json(self) -> dict:
        return {
            "pattern": self.pattern.value,
            "applies_to": sorted(s.value for s in self.applies_to),
            "params": self.params,
            "backings": sorted(b.value for b in self.backings),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FaultSpec":
        return cls(
            pattern=FaultPattern(obj["pattern"]),
            applies_to=frozenset(Suite(s) for s in obj.get("applies_to", [s.value for s in Suite])),
            params=obj.get("params", {}),
            backings=frozenset(Backing(b) for b in obj.get("backings", [b.value for b in Backing])),
        )


class RandomSource:
    """Deterministic byte source; either uniform or with boosted byte values.

    BiasedBytes assigns each boosted value probability factor/256 and spreads
    the remaining mass uniformly over the other values.
    """

    def __init__(self, seed: int, boosted: Optional[frozenset[int]] = None,
                 factor: float = 2.0):
        self.seed = seed
        self.boosted = frozenset(boosted) if boosted else None
        self.factor = factor
        self._gen = np.random.Generator(np.random.PCG64(seed))
        if self.boosted:
            probs = np.empty(256)
            rest = (256 - factor * len(self.boosted)) / (256 - len(self.boosted))
            if rest <= 0:
                raise ValueError("boost factor leaves no probability mass")
            probs[:] = rest / 256
            probs[list(self.boosted)] = factor / 256
            self._probs = probs / probs.sum()
        else:
            self._probs = None

    @classmethod
    def uniform(cls, seed: int) -> "RandomSource":
        return cls(seed)

    @classmethod
    def biased_bytes(cls, seed: int, boosted, factor: float) -> "RandomSource":
        return cls(seed, frozenset(boosted), factor)

    def bytes(self, n: int) -> bytes:
        if self._probs is None:
            return self._gen.bytes(n)
        vals = self._gen.choice(256, size=n, p=self._probs)
        return vals.astype(np.uint8).tobytes()

    def nonzero_bytes(self, n: int) -> bytes:
        out = bytearray()
        while len(out) < n:
            out += self.bytes(n - len(out) + 8).replace(b"\x00", b"")
        return bytes(out[:n])


class SignScheme(str, enum.Enum):
    PKCS1_SHA256 = "Pkcs1Sha256"
    PSS_SHA256 = "PssSha256"
    ECDSA_SHA256 = "EcdsaSha256"


class CryptScheme(str, enum.Enum):
    RSA_PKCS1 = "RsaPkcs1"
    RSA_OAEP_SHA256 = "RsaOaepSha256"
    AES_CBC_PKCS7 = "AesCbcPkcs7"


SIGN_SUITE = {
    SignScheme.PKCS1_SHA256: Suite.RSA_SIGN_PKCS1,
    SignScheme.PSS_SHA256: Suite.RSA_SIGN_PSS,
    SignScheme.ECDSA_SHA256: Suite.EC_SIGN,
}

CRYPT_SUITE = {
    CryptScheme.RSA_PKCS1: Suite.RSA_CRYPT_PKCS1,
    CryptScheme.RSA_OAEP_SHA256: Suite.RSA_CRYPT_OAEP,
    CryptScheme.AES_CBC_PKCS7: Suite.AES_CBC,
}

OAEP_CAPACITY = 128 - 2 * 32 - 2  # 62 bytes for RSA-1024 / SHA-256


@dataclass
class KeyHandle:
    material: KeyMaterial


@dataclass
class OpResult:
    output: bytes
    wall_time_ms: float
    nonce: Optional[int] = None  # ECDSA nonce actually used (reference path)


DEFAULT_TIMING = {
    Backing.SOFTWARE: (5.0, 1.0),
    Backing.TEE: (15.0, 3.0),
    Backing.STRONGBOX: (90.0, 10.0),
}


class Provider:
    """One simulated device-side cryptographic implementation.

    Single-threaded: owns its random source and fault state. `backing`
    gives ops the execution-environment context used for fault filtering
    and timing parameters.
    """

    def __init__(self, rng: RandomSource, faults: tuple[FaultSpec, ...] = (),
                 timing: Optional[dict] = None, fault_seed: int = 0):
        self.rng = rng
        self.faults = tuple(f for f in faults if f.pattern != FaultPattern.NONE)
        self.timing = timing or {}
        self.backing = Backing.TEE
        self._fault_rng = np.random.Generator(np.random.PCG64(fault_seed ^ 0x5DC))
        self._local_ec: Optional[KeyMaterial] = None
        biased = self._fault_for(FaultPattern.BIASED_RNG, any_suite=True)
        if biased is not None:
            self._biased_rng = RandomSource.biased_bytes(
                rng.seed ^ 0xB1A5,
                biased.params.get("boosted", _default_boosted(biased.params.get("profile", "p0"))),
                biased.params.get("factor", 2.0))
        else:
            self._biased_rng = None

    # --- fault helpers ---

    def _fault_for(self, pattern: FaultPattern, suite: Optional[Suite] = None,
                   any_suite: bool = False) -> Optional[FaultSpec]:
        for f in self.faults:
            if f.pattern != pattern:
                continue
            if self.backing not in f.backings:
                continue
            if any_suite or (suite is not None and suite in f.applies_to):
                return f
        return None

    def _hit(self, spec: FaultSpec) -> bool:
        rate = spec.params.get("rate", 1.0)
        return self._fault_rng.random() < rate

    def _crypto_rng(self, suite: Suite, rng: Optional[RandomSource]) -> RandomSource:
        if rng is not None:
            return rng
        if self._biased_rng is not None and self._fault_for(FaultPattern.BIASED_RNG, suite):
            return self._biased_rng
        return self.rng

    def _local_ec_key(self) -> KeyMaterial:
        if self._local_ec is None:
            self._local_ec = keys.generate_ec_key(self.rng)
        return self._local_ec

    def _wall_time(self, suite: Suite) -> float:
        mean, std = self.timing.get((suite, self.backing),
                                    self.timing.get(suite, DEFAULT_TIMING[self.backing]))
        t = self._fault_rng.normal(mean, std)
        return max(0.0, round(t))

    def _ecdsa_wall_time(self, suite: Suite, nonce: int) -> float:
        fault = self._fault_for(FaultPattern.NON_CONSTANT_TIME_ECDSA, suite)
        if fault is None:
            return self._wall_time(suite)
        mean = fault.params.get("mean", DEFAULT_TIMING[self.backing][0])
        std = fault.params.get("std", DEFAULT_TIMING[self.backing][1])
        t = self._fault_rng.normal(mean, std)
        if nonce < 1 << 248:  # top nonce byte zero: the data-dependent path
            t -= mean / 32.0
        return max(0.0, round(t))

    def _maybe_flip(self, suite: Suite, data: bytes) -> bytes:
        fault = self._fault_for(FaultPattern.SDC_BIT_FLIP, suite)
        if fault is not None and data and self._hit(fault):
            pos = int(self._fault_rng.integers(len(data) * 8))
            out = bytearray(data)
            out[pos // 8] ^= 1 << (pos % 8)
            return bytes(out)
        return data

    def _check_blob_fault(self, suite: Suite) -> None:
        fault = self._fault_for(FaultPattern.INVALID_KEY_BLOB, suite)
        if fault is not None and self._hit(fault):
            raise self._with_time(InvalidKeyBlob("Invalid key blob"), suite)

    def _with_time(self, exc, suite: Suite):
        exc.wall_time_ms = self._wall_time(suite)
        return exc

    # --- key lifecycle ---

    def generate_key(self, algo: KeyAlgo, rng: Optional[RandomSource] = None,
                     suite: Optional[Suite] = None) -> KeyHandle:
        suite = suite or _DEFAULT_SUITE[algo]
        rng = self._crypto_rng(suite, rng)
        patterned = self._fault_for(FaultPattern.PATTERNED_RSA_PRIMES, suite)
        if algo == KeyAlgo.RSA_1024:
            if patterned is not None and self._hit(patterned):
                material = keys.generate_weak_rsa_key(
                    rng, patterned.params.get("family", "sparse"))
            else:
                material = keys.generate_rsa_key(rng)
        elif algo == KeyAlgo.EC_P256:
            material = keys.generate_ec_key(rng)
        else:
            material = keys.generate_symmetric_key(rng, algo)
        return KeyHandle(material)

    def import_key(self, material: KeyMaterial,
                   suite: Optional[Suite] = None) -> KeyHandle:
        suite = suite or _DEFAULT_SUITE[material.algo]
        fault = self._fault_for(FaultPattern.KEY_IMPORT_REJECT, suite)
        if fault is not None and self._hit(fault):
            raise self._with_time(
                ImportFailure(fault.params.get("message", "Unsupported key size")),
                suite)
        material.validate()
        return KeyHandle(material)

    # --- signature suites ---

    def sign(self, handle: KeyHandle, scheme: SignScheme, message: bytes,
             rng: Optional[RandomSource] = None) -> OpResult:
        suite = SIGN_SUITE[scheme]
        self._check_blob_fault(suite)
        rng = self._crypto_rng(suite, rng)
        key = handle.material

        if scheme == SignScheme.ECDSA_SHA256:
            nonce = keys.scalar_from_rng(rng)
            r, s = ec.ecdsa_sign_raw(key.private["d"], message, nonce)
            zero_fault = self._fault_for(FaultPattern.ZERO_CHUNK_ECDSA, suite)
            if zero_fault is not None and self._hit(zero_fault):
                r = self._zero_chunk(r, zero_fault.params.get("run", 8))
            sig = ec.der_encode_signature(r, s)
            sig = self._maybe_flip(suite, sig)
            return OpResult(sig, self._ecdsa_wall_time(suite, nonce), nonce=nonce)

        if key.algo != KeyAlgo.RSA_1024:
            raise self._with_time(SignFailure("key/scheme mismatch"), suite)
        n, em_len = key.public["n"], 128

        wrong = self._fault_for(FaultPattern.WRONG_KEY_SIGNATURE, suite)
        if scheme == SignScheme.PKCS1_SHA256 and wrong is not None and self._hit(wrong):
            local = self._local_ec_key()
            k = keys.scalar_from_rng(rng)
            r, s = ec.ecdsa_sign_raw(local.private["d"], message, k)
            sig = ec.der_encode_signature(r, s)
            return OpResult(sig, self._wall_time(suite))

        if scheme == SignScheme.PKCS1_SHA256:
            em = rsa_padding.emsa_pkcs1_encode(message, em_len)
        else:
            salt_len = 32
            salt_fault = self._fault_for(FaultPattern.PSS_SALT_LENGTH, suite)
            if salt_fault is not None and self._hit(salt_fault):
                salt_len = salt_fault.params.get("len", 0)
            em = rsa_padding.emsa_pss_encode(message, 1023, rng.bytes(salt_len))
        sig_int = keys.rsa_private_op(key, int.from_bytes(em, "big"))
        sig = sig_int.to_bytes(em_len, "big")
        sig = self._maybe_flip(suite, sig)
        return OpResult(sig, self._wall_time(suite))

    def verify(self, handle: KeyHandle, scheme: SignScheme, message: bytes,
               signature: bytes) -> OpResult:
        """On-device verification; returns b'\\x01' / b'\\x00' verdict."""
        suite = SIGN_SUITE[scheme]
        key = handle.material
        try:
            if scheme == SignScheme.ECDSA_SHA256:
                r, s = ec.der_decode_two_integers(signature)
                ok = ec.ecdsa_verify_raw((key.public["x"], key.public["y"]),
                                         message, r, s)
            else:
                n, e = key.public["n"], key.public["e"]
                em = keys.rsa_public_op(n, e, int.from_bytes(signature, "big"))
                em_bytes = em.to_bytes(128, "big")
                if scheme == SignScheme.PKCS1_SHA256:
                    ok = em_bytes == rsa_padding.emsa_pkcs1_encode(message, 128)
                else:
                    ok = rsa_padding.emsa_pss_verify(message, em_bytes, 1023)
        except Exception:
            ok = False
        if self._fault_for(FaultPattern.SDC_BIT_FLIP, suite) is not None:
            verdict = self._maybe_flip(suite, b"\x01" if ok else b"\x00")
            verdict = b"\x01" if verdict != b"\x00" else b"\x00"
        else:
            verdict = b"\x01" if ok else b"\x00"
        return OpResult(verdict, self._wall_time(suite))

    def _zero_chunk(self, r: int, run: int) -> int:
        rb = bytearray(r.to_bytes(32, "big"))
        start = int(self._fault_rng.integers(0, 33 - run))
        rb[start:start + run] = b"\x00" * run
        return int.from_bytes(rb, "big")

    # --- encryption suites ---

    def encrypt(self, handle: KeyHandle, scheme: CryptScheme, plaintext: bytes,
                rng: Optional[RandomSource] = None) -> OpResult:
        suite = CRYPT_SUITE[scheme]
        self._check_blob_fault(suite)
        rng = self._crypto_rng(suite, rng)
        key = handle.material
        if scheme == CryptScheme.AES_CBC_PKCS7:
            iv = rng.bytes(16)
            padder = sym_padding.PKCS7(128).padder()
            padded = padder.update(plaintext) + padder.finalize()
            enc = Cipher(algorithms.AES(key.secret), modes.CBC(iv)).encryptor()
            ct = iv + enc.update(padded) + enc.finalize()
        elif scheme == CryptScheme.RSA_OAEP_SHA256:
            if len(plaintext) > OAEP_CAPACITY:
                raise self._with_time(SignFailure("plaintext exceeds OAEP capacity"), suite)
            em = rsa_padding.eme_oaep_encode(plaintext, 128, rng.bytes(32))
            ct = keys.rsa_public_op(key.public["n"], key.public["e"],
                                    int.from_bytes(em, "big")).to_bytes(128, "big")
        else:
            em = rsa_padding.eme_pkcs1_encode(
                plaintext, 128, rng.nonzero_bytes(128 - len(plaintext) - 3))
            ct = keys.rsa_public_op(key.public["n"], key.public["e"],
                                    int.from_bytes(em, "big")).to_bytes(128, "big")
        ct = self._maybe_flip(suite, ct)
        return OpResult(ct, self._wall_time(suite))

    def decrypt(self, handle: KeyHandle, scheme: CryptScheme,
                ciphertext: bytes) -> OpResult:
        suite = CRYPT_SUITE[scheme]
        sb_fault = self._fault_for(FaultPattern.STRONGBOX_DECRYPT_FAIL, suite)
        if sb_fault is not None and self._hit(sb_fault):
            raise self._with_time(
                BlockSizeFailure(sb_fault.params.get("message", "Code -46"), -46),
                suite)
        key = handle.material
        try:
            if scheme == CryptScheme.AES_CBC_PKCS7:
                iv, body = ciphertext[:16], ciphertext[16:]
                dec = Cipher(algorithms.AES(key.secret), modes.CBC(iv)).decryptor()
                padded = dec.update(body) + dec.finalize()
                unpadder = sym_padding.PKCS7(128).unpadder()
                pt = unpadder.update(padded) + unpadder.finalize()
            else:
                em = keys.rsa_private_op(key, int.from_bytes(ciphertext, "big"))
                em_bytes = em.to_bytes(128, "big")
                if scheme == CryptScheme.RSA_OAEP_SHA256:
                    oaep_fault = self._fault_for(FaultPattern.OAEP_TRUNCATION, suite)
                    if oaep_fault is not None and self._hit(oaep_fault):
                        return OpResult(self._oaep_junk(oaep_fault),
                                        self._wall_time(suite))
                    _, pt = rsa_padding.eme_oaep_decode(em_bytes, 128)
                else:
                    pt = rsa_padding.eme_pkcs1_decode(em_bytes, 128)
        except ValueError as exc:
            raise self._with_time(BlockSizeFailure(str(exc)), suite) from exc
        except Exception as exc:
            raise self._with_time(DecryptPaddingFailure(str(exc)), suite) from exc
        return OpResult(pt, self._wall_time(suite))

    def _oaep_junk(self, fault: FaultSpec) -> bytes:
        length = 254 + int(self._fault_rng.integers(3))
        if fault.params.get("all_zero", False):
            return b"\x00" * length
        return self._fault_rng.bytes(length)

    # --- mac & exchange ---

    def mac(self, handle: KeyHandle, message: bytes,
            rng: Optional[RandomSource] = None) -> OpResult:
        suite = Suite.HMAC_SHA256
        self._check_blob_fault(suite)
        shaped = self._fault_for(FaultPattern.HMAC_ECDSA_SHAPED, suite)
        if shaped is not None and self._hit(shaped):
            rng = self._crypto_rng(suite, rng)
            local = self._local_ec_key()
            k = keys.scalar_from_rng(rng)
            r, s = ec.ecdsa_sign_raw(local.private["d"], message, k)
            return OpResult(ec.der_encode_signature(r, s), self._wall_time(suite))
        tag = hmac_mod.new(handle.material.secret, message, hashlib.sha256).digest()
        tag = self._maybe_flip(suite, tag)
        return OpResult(tag, self._wall_time(suite))

    def exchange(self, handle: KeyHandle, peer_public: bytes) -> OpResult:
        suite = Suite.EC_EXCHANGE
        fault = self._fault_for(FaultPattern.INCOMPATIBLE_PURPOSE_ECDH, suite)
        if fault is not None and self._hit(fault):
            raise self._with_time(InvalidKey("Incompatible purpose"), suite)
        self._check_blob_fault(suite)
        point = ec.decode_point(peer_public)
        secret = ec.ecdh_shared_secret(handle.material.private["d"], point)
        secret = self._maybe_flip(suite, secret)
        return OpResult(secret, self._wall_time(suite))


_DEFAULT_SUITE = {
    KeyAlgo.RSA_1024: Suite.RSA_SIGN_PKCS1,
    KeyAlgo.EC_P256: Suite.EC_SIGN,
    KeyAlgo.AES_128: Suite.AES_CBC,
    KeyAlgo.HMAC_SHA256: Suite.HMAC_SHA256,
}


def _default_boosted(profile: str) -> frozenset[int]:
    """16 deterministic byte values derived from the profile id."""
    digest = hashlib.sha256(profile.encode()).digest()
    return frozenset(digest[:16])
