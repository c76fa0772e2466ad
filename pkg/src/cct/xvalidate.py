"""Functional cross-validation: recompute or verify every device artifact
with an independent implementation (the `cryptography` package where
possible) and classify deviations into finding kinds.

The provider under test is hand-rolled from primitives; verification here
deliberately goes through a separate library so a common bug cannot hide.
"""

from __future__ import annotations

import hashlib
import hmac as hmac_mod
from dataclasses import dataclass, field
from typing import Iterable, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric import ec as pyca_ec
from cryptography.hazmat.primitives.asymmetric import padding as pyca_padding
from cryptography.hazmat.primitives.asymmetric import rsa as pyca_rsa
from cryptography.hazmat.primitives.asymmetric.utils import (
    decode_dss_signature, encode_dss_signature)
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives import padding as sym_padding

from cct import ec, keys, rsa_padding
from cct.errors import DecodeFailure, MalformedArtifact
from cct.keys import KeyAlgo, KeyMaterial
from cct.records import (Finding, FindingKind, KeyProvenance, Op,
                         SampleRecord, Suite)

PSS_SALT_LOW = 20    # salt lengths outside [low, high] are flagged
PSS_SALT_HIGH = 220
OAEP_JUNK_RANGE = (254, 256)
ZERO_RUN_MIN = 4
ZERO_RUN_MAX = 28
DER_INT_MAX = 33  # max byte length of a P-256 DER integer


# --- external (independent-library) verification ---

def _pyca_rsa_public(n: int, e: int):
    return pyca_rsa.RSAPublicNumbers(e, n).public_key()


def _pyca_ec_public(x: int, y: int):
    return pyca_ec.EllipticCurvePublicNumbers(x, y, pyca_ec.SECP256R1()).public_key()


def verify_signature_external(public_key: bytes, suite: Suite, message: bytes,
                              signature: bytes) -> bool:
    """Signature check via the independent library; False on any failure."""
    try:
        if suite == Suite.EC_SIGN:
            x, y = ec.decode_point(public_key)
            _pyca_ec_public(x, y).verify(signature, message,
                                         pyca_ec.ECDSA(hashes.SHA256()))
        else:
            n, e = keys.decode_rsa_public(public_key)
            if suite == Suite.RSA_SIGN_PKCS1:
                pad = pyca_padding.PKCS1v15()
            else:
                pad = pyca_padding.PSS(
                    mgf=pyca_padding.MGF1(hashes.SHA256()),
                    salt_length=pyca_padding.PSS.AUTO)
            _pyca_rsa_public(n, e).verify(signature, message, pad,
                                          hashes.SHA256())
        return True
    except (InvalidSignature, ValueError, MalformedArtifact, Exception):
        return False


def encrypt_external_aes(secret: bytes, iv: bytes, plaintext: bytes) -> bytes:
    padder = sym_padding.PKCS7(128).padder()
    padded = padder.update(plaintext) + padder.finalize()
    enc = Cipher(algorithms.AES(secret), modes.CBC(iv)).encryptor()
    return enc.update(padded) + enc.finalize()


def mac_external(secret: bytes, message: bytes) -> bytes:
    return hmac_mod.new(secret, message, hashlib.sha256).digest()


# --- parameter recovery (known private key) ---

def recover_ecdsa_nonce(d: int, message: bytes, signature: bytes) -> int:
    """k = s^-1 (z + r d) mod n; returns the candidate that reproduces r
    (the inverse map cannot distinguish k from -k without this check)."""
    r, s = ec.der_decode_two_integers(signature)
    z = ec.hash_to_int(message)
    k = pow(s, -1, ec.N) * (z + r * d) % ec.N
    point = ec.scalar_base_mult(k)
    if point is not None and point[0] % ec.N == r:
        return k
    return ec.N - k


def recover_pss_salt(key: KeyMaterial, signature: bytes) -> bytes:
    em = keys.rsa_public_op(key.public["n"], key.public["e"],
                            int.from_bytes(signature, "big"))
    return rsa_padding.emsa_pss_recover_salt(em.to_bytes(128, "big"), 1023)


def recover_oaep_seed(key: KeyMaterial, ciphertext: bytes) -> tuple[bytes, bytes]:
    """(seed, plaintext) from a ciphertext under a known private key."""
    em = keys.rsa_private_op(key, int.from_bytes(ciphertext, "big"))
    return rsa_padding.eme_oaep_decode(em.to_bytes(128, "big"), 128)


# --- artifact classification ---

def _zero_run_len(raw: bytes) -> int:
    """Longest run of zero bytes in a fixed-width integer encoding."""
    best = run = 0
    for b in raw:
        run = run + 1 if b == 0 else 0
        best = max(best, run)
    return best


def _has_zero_chunk(signature: bytes) -> Optional[dict]:
    try:
        r, s = ec.der_decode_two_integers(signature)
    except MalformedArtifact:
        return None
    for name, v in (("r", r), ("s", s)):
        if v.bit_length() > 256:
            continue
        run = _zero_run_len(v.to_bytes(32, "big"))
        run -= run % 4  # only whole aligned chunks count
        if ZERO_RUN_MIN <= run <= ZERO_RUN_MAX:
            return {"component": name, "zero_run_bytes": run}
    return None


def _der_two_int_shape(data: bytes) -> bool:
    try:
        r, s = ec.der_decode_two_integers(data)
    except MalformedArtifact:
        return False
    return (r.bit_length() + 8) // 8 <= DER_INT_MAX and \
           (s.bit_length() + 8) // 8 <= DER_INT_MAX


@dataclass
class Classification:
    kind: FindingKind
    evidence: dict


def classify_artifact(record: SampleRecord,
                      imported: Optional[dict[KeyAlgo, KeyMaterial]] = None,
                      expected_plaintext_len: int = 32) -> list[Classification]:
    """Detectors in priority order; first match per category wins. `imported`
    supplies the known key material for Imported-provenance recomputation."""
    out: list[Classification] = []
    if record.error is not None or not record.output:
        return out
    key = None
    if imported is not None and record.key_provenance == KeyProvenance.IMPORTED:
        key = imported.get(_SUITE_KEY_ALGO.get(record.suite))

    if record.suite == Suite.EC_SIGN and record.op in (Op.SIGN, Op.VERIFY):
        chunk = _has_zero_chunk(record.output)
        if chunk is not None:
            out.append(Classification(FindingKind.ZERO_CHUNK_ECDSA, chunk))
        elif record.public_key and not verify_signature_external(
                record.public_key, record.suite, record.input, record.output):
            out.append(Classification(
                FindingKind.EXTERNAL_VERIFY_MISMATCH,
                {"suite": record.suite.value, "op": record.op.value}))

    elif record.suite == Suite.RSA_SIGN_PKCS1 and record.op in (Op.SIGN, Op.VERIFY):
        if _der_two_int_shape(record.output):
            out.append(Classification(
                FindingKind.WRONG_KEY_SIGNATURE,
                {"artifact_len": len(record.output),
                 "shape": "der-two-integer"}))
        elif record.public_key and not verify_signature_external(
                record.public_key, record.suite, record.input, record.output):
            out.append(Classification(
                FindingKind.EXTERNAL_VERIFY_MISMATCH,
                {"suite": record.suite.value, "op": record.op.value}))

    elif record.suite == Suite.RSA_SIGN_PSS and record.op in (Op.SIGN, Op.VERIFY):
        handled = False
        if key is not None:
            try:
                salt = recover_pss_salt(key, record.output)
            except DecodeFailure:
                salt = None
            if salt is not None and not (
                    PSS_SALT_LOW <= len(salt) <= PSS_SALT_HIGH):
                out.append(Classification(
                    FindingKind.INVALID_PSS_SALT, {"salt_len": len(salt)}))
                handled = True
        if not handled and record.public_key and not verify_signature_external(
                record.public_key, record.suite, record.input, record.output):
            out.append(Classification(
                FindingKind.EXTERNAL_VERIFY_MISMATCH,
                {"suite": record.suite.value, "op": record.op.value}))

    elif record.suite == Suite.RSA_CRYPT_OAEP and record.op == Op.DECRYPT:
        lo, hi = OAEP_JUNK_RANGE
        if lo <= len(record.output) <= hi or \
                len(record.output) != expected_plaintext_len:
            out.append(Classification(
                FindingKind.OAEP_SIZE_ANOMALY,
                {"output_len": len(record.output),
                 "expected_len": expected_plaintext_len}))
        elif key is not None:
            try:
                _, expected = recover_oaep_seed(key, record.input)
            except DecodeFailure:
                expected = None
            if expected is not None and record.output != expected:
                out.append(Classification(
                    FindingKind.SILENT_DATA_CORRUPTION,
                    {"suite": record.suite.value, "op": record.op.value}))

    elif record.suite == Suite.HMAC_SHA256 and record.op == Op.MAC:
        if _der_two_int_shape(record.output):
            out.append(Classification(
                FindingKind.HMAC_ECDSA_SHAPED,
                {"artifact_len": len(record.output),
                 "shape": "der-two-integer"}))
        elif key is not None:
            expected = mac_external(key.secret, record.input)
            if record.output != expected:
                out.append(Classification(
                    FindingKind.SILENT_DATA_CORRUPTION,
                    {"suite": record.suite.value, "op": record.op.value,
                     "bit_diff": _bit_diff(record.output, expected)}))

    elif record.suite == Suite.AES_CBC and record.op == Op.ENCRYPT and key is not None:
        iv, body = record.output[:16], record.output[16:]
        expected = encrypt_external_aes(key.secret, iv, record.input)
        if body != expected:
            out.append(Classification(
                FindingKind.SILENT_DATA_CORRUPTION,
                {"suite": record.suite.value, "op": record.op.value,
                 "bit_diff": _bit_diff(body, expected)}))

    elif record.suite == Suite.EC_EXCHANGE and record.op == Op.EXCHANGE and key is not None:
        try:
            peer = ec.decode_point(record.input)
            expected = ec.ecdh_shared_secret(key.private["d"], peer)
        except Exception:
            expected = None
        if expected is not None and record.output != expected:
            out.append(Classification(
                FindingKind.SILENT_DATA_CORRUPTION,
                {"suite": record.suite.value, "op": record.op.value,
                 "bit_diff": _bit_diff(record.output, expected)}))

    if record.op == Op.VERIFY and record.public_key and record.aux_output:
        external_ok = verify_signature_external(
            record.public_key, record.suite, record.input, record.output)
        device_ok = record.aux_output != b"\x00"
        if device_ok != external_ok:
            out.append(Classification(
                FindingKind.EXTERNAL_VERIFY_MISMATCH,
                {"suite": record.suite.value, "op": record.op.value,
                 "device_verdict": device_ok, "external_verdict": external_ok}))
    return out


def _bit_diff(a: bytes, b: bytes) -> int:
    return sum(bin(x ^ y).count("1") for x, y in zip(a, b)) + \
        8 * abs(len(a) - len(b))


_SUITE_KEY_ALGO = {
    Suite.RSA_SIGN_PKCS1: KeyAlgo.RSA_1024,
    Suite.RSA_SIGN_PSS: KeyAlgo.RSA_1024,
    Suite.RSA_CRYPT_OAEP: KeyAlgo.RSA_1024,
    Suite.RSA_CRYPT_PKCS1: KeyAlgo.RSA_1024,
    Suite.EC_SIGN: KeyAlgo.EC_P256,
    Suite.EC_EXCHANGE: KeyAlgo.EC_P256,
    Suite.AES_CBC: KeyAlgo.AES_128,
    Suite.HMAC_SHA256: KeyAlgo.HMAC_SHA256,
}


# --- dataset-level pipeline ---

def cross_validate(records: Iterable[SampleRecord],
                   imported: Optional[dict[KeyAlgo, KeyMaterial]] = None,
                   expected_plaintext_len: int = 32) -> list[Finding]:
    """Classify every record and aggregate per (fingerprint, kind).

    SilentDataCorruption keeps a per-device split: sporadic single-bit
    corruption hits individual units, so evidence lists affected devices
    and the finding is only reported when a minority of the model's
    devices show it (a model-wide mismatch is a systematic bug and will
    have been classified as one of the structural kinds instead).
    """
    if imported is None:
        imported = keys.fixed_keys()
    per_group: dict[tuple[str, FindingKind], dict] = {}
    devices_by_fp: dict[str, set] = {}
    for record in records:
        fp = record.device.fingerprint
        devices_by_fp.setdefault(fp, set()).add(record.device.device_id)
        for cls in classify_artifact(record, imported, expected_plaintext_len):
            slot = per_group.setdefault((fp, cls.kind), {
                "count": 0, "devices": set(), "example": cls.evidence})
            slot["count"] += 1
            slot["devices"].add(record.device.device_id)

    findings = []
    for (fp, kind), slot in sorted(per_group.items(),
                                   key=lambda kv: (kv[0][0], kv[0][1].value)):
        affected = sorted(slot["devices"])
        if kind == FindingKind.SILENT_DATA_CORRUPTION:
            total = len(devices_by_fp[fp])
            if total > 1 and len(affected) * 2 > total:
                continue  # model-wide: not the sporadic per-unit pattern
        findings.append(Finding(
            kind=kind,
            group={"fingerprint": fp},
            evidence={"count": slot["count"],
                      "affected_devices": len(affected),
                      "example": slot["example"]},
        ))
    return findings
