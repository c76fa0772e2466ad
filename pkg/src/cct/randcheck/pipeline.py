"""Dataset-level randomness pipeline: recover generator material from
artifacts, pool it per device model, and turn battery verdicts and byte
profiles into findings."""

from __future__ import annotations

from typing import Iterable, Optional

from cct.errors import InsufficientData
from cct.keys import KeyAlgo, KeyMaterial
from cct.records import Finding, FindingKind, SampleRecord
from cct.randcheck.battery import BLOCK_BYTES_SMALL
from cct.randcheck.material import byte_distribution_profile, extract_random_material
from cct.randcheck.verdict import analyze_randomness


def analyze_dataset_randomness(
    records: Iterable[SampleRecord],
    imported: Optional[dict[KeyAlgo, KeyMaterial]] = None,
    block_bytes: int = BLOCK_BYTES_SMALL,
) -> list[Finding]:
    """Per-model verdicts. Desk-scale datasets rarely fill battery blocks
    per device, so material is pooled by fingerprint (devices of a model
    share a generator implementation); the byte-histogram profile needs
    far less data than the battery and runs per model as well."""
    records = list(records)
    per_device = extract_random_material(records, imported)
    device_fp = {r.device.device_id: r.device.fingerprint for r in records}
    pooled: dict[str, bytearray] = {}
    for dev in sorted(per_device):
        pooled.setdefault(device_fp.get(dev, ""), bytearray()).extend(
            per_device[dev])

    findings = []
    for fp in sorted(pooled):
        material = bytes(pooled[fp])
        profile = byte_distribution_profile(material)
        offending: dict[str, int] = {}
        weak = False
        try:
            verdict = analyze_randomness(material, block_bytes)
            weak, offending = verdict.weak, verdict.offending
        except InsufficientData:
            pass
        if profile.biased or weak:
            findings.append(Finding(
                kind=FindingKind.WEAK_RANDOM,
                group={"fingerprint": fp},
                evidence={"material_bytes": profile.total,
                          "chi2_p": profile.p_value,
                          "boosted_bytes": list(profile.boosted),
                          "battery_rejections": offending},
            ))
    return findings
