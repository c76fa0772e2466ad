"""Recovery of raw random material from dataset records.

Signatures, paddings and IVs all embed generator output; with the known
import keys the embedded values (ECDSA nonces, PSS salts, OAEP seeds) can
be inverted exactly, giving a direct window on the device generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.special import gammaincc

from cct import keys, xvalidate
from cct.errors import DecodeFailure, MalformedArtifact
from cct.keys import KeyAlgo, KeyMaterial
from cct.records import KeyProvenance, Op, SampleRecord, Suite

BIAS_MIN_BYTES = 16 * 1024
BIAS_P_THRESHOLD = 1e-9
BOOST_SIGMA = 5.0


def extract_random_material(
    records: Iterable[SampleRecord],
    imported: Optional[dict[KeyAlgo, KeyMaterial]] = None,
) -> dict[str, bytes]:
    """Per-device concatenation of recovered generator output, in record
    order: ECDSA nonces (32 B), PSS salts (32 B), OAEP seeds (32 B) from
    imported-key artifacts, plus AES-CBC IVs (16 B) from any encrypt."""
    if imported is None:
        imported = keys.fixed_keys()
    ec_d = imported[KeyAlgo.EC_P256].private["d"]
    rsa = imported[KeyAlgo.RSA_1024]
    out: dict[str, bytearray] = {}

    for record in records:
        if record.error is not None or not record.output:
            continue
        chunk = b""
        if record.suite == Suite.AES_CBC and record.op == Op.ENCRYPT:
            chunk = record.output[:16]
        elif record.key_provenance != KeyProvenance.IMPORTED:
            continue
        elif record.suite == Suite.EC_SIGN and record.op == Op.SIGN:
            try:
                k = xvalidate.recover_ecdsa_nonce(ec_d, record.input,
                                                  record.output)
            except MalformedArtifact:
                continue
            chunk = k.to_bytes(32, "big")
        elif record.suite == Suite.RSA_SIGN_PSS and record.op == Op.SIGN:
            try:
                salt = xvalidate.recover_pss_salt(rsa, record.output)
            except DecodeFailure:
                continue
            if len(salt) != 32:
                continue  # nonstandard salt is a finding, not material
            chunk = salt
        elif record.suite == Suite.RSA_CRYPT_OAEP and record.op == Op.ENCRYPT:
            try:
                seed, _ = xvalidate.recover_oaep_seed(rsa, record.output)
            except DecodeFailure:
                continue
            chunk = seed
        if chunk:
            out.setdefault(record.device.device_id, bytearray()).extend(chunk)
    return {dev: bytes(buf) for dev, buf in out.items()}


@dataclass
class ByteProfile:
    total: int
    chi2: float
    p_value: float
    boosted: tuple[int, ...]  # byte values far above the uniform expectation

    @property
    def biased(self) -> bool:
        return self.total >= BIAS_MIN_BYTES and self.p_value < BIAS_P_THRESHOLD


def byte_distribution_profile(material: bytes) -> ByteProfile:
    """Chi-square of the byte histogram against uniform, plus the set of
    byte values boosted beyond BOOST_SIGMA standard deviations."""
    counts = np.bincount(np.frombuffer(material, dtype=np.uint8),
                         minlength=256).astype(float)
    n = len(material)
    if n == 0:
        return ByteProfile(0, 0.0, 1.0, ())
    exp = n / 256.0
    chi2 = float(((counts - exp) ** 2 / exp).sum())
    p = float(gammaincc(255 / 2.0, chi2 / 2.0))
    p = max(p, 5e-324)
    sigma = math.sqrt(exp * (1 - 1 / 256.0))
    boosted = tuple(int(v) for v in
                    np.flatnonzero(counts > exp + BOOST_SIGMA * sigma))
    return ByteProfile(n, chi2, p, boosted)
