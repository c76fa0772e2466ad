"""Availability and error analytics over a dataset.

Raw and thresholded failure rates, P90 latency with per-configuration
dedup, StrongBox adoption, and per-pattern error-rate tables. All
aggregations are deterministic for a fixed seed so reports are
byte-identical across runs.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from cct.errors import EmptyInput
from cct.records import (Backing, DeviceProfile, Finding, FindingKind, Op,
                         SampleRecord, Suite, Tier)


@dataclass(frozen=True)
class RateTriple:
    rate_raw: float
    group_median: float
    rate_threshold: float
    all_excluded: bool = False

    def __post_init__(self):
        for v in (self.rate_raw, self.group_median, self.rate_threshold):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"rate out of range: {v}")


def _error_groups(records: Sequence[SampleRecord]
                  ) -> dict[tuple, list[SampleRecord]]:
    """Groups by (chipset, api_level, error message). Successes belong to
    every message group of their (chipset, api_level) cell, so excluding
    a group removes a whole cohort's worth of context; a cell without
    errors forms a single all-success group."""
    cells: dict[tuple, list[SampleRecord]] = {}
    for r in records:
        cells.setdefault((r.device.chipset, r.device.api_level), []).append(r)
    groups: dict[tuple, list[SampleRecord]] = {}
    for cell_key, cell in cells.items():
        messages = sorted({r.error[1] for r in cell if r.error is not None})
        if not messages:
            groups[cell_key + (None,)] = cell
            continue
        successes = [r for r in cell if r.error is None]
        for msg in messages:
            members = successes + [r for r in cell
                                   if r.error is not None and r.error[1] == msg]
            groups[cell_key + (msg,)] = members
    return groups


def error_rates(records: Iterable[SampleRecord],
                op: Optional[Op] = None) -> RateTriple:
    """Raw error rate, median of per-group rates, and the rate recomputed
    after dropping every group whose rate strictly exceeds the median.
    All-error groups are always dropped: they are definitionally anomalous
    and otherwise survive the strict comparison when they are the median."""
    recs = [r for r in records if op is None or r.op == op]
    if not recs:
        raise EmptyInput("no records for the requested operation")
    errors = sum(1 for r in recs if r.error is not None)
    rate_raw = errors / len(recs)
    if errors == 0:
        return RateTriple(0.0, 0.0, 0.0)
    groups = _error_groups(recs)
    rates = {k: sum(1 for r in v if r.error is not None) / len(v)
             for k, v in groups.items()}
    median = statistics.median(rates.values())
    excluded_keys = {k for k, rate in rates.items()
                     if rate > median or rate == 1.0}
    kept_ids = set()
    for k, members in groups.items():
        if k not in excluded_keys:
            kept_ids.update(id(r) for r in members)
    kept = [r for r in recs if id(r) in kept_ids]
    if not kept:
        return RateTriple(rate_raw, median, 0.0, all_excluded=True)
    kept_errors = sum(1 for r in kept if r.error is not None)
    return RateTriple(rate_raw, median, kept_errors / len(kept))


def dedup_records(records: Sequence[SampleRecord],
                  seed: int = 0) -> list[SampleRecord]:
    """One uniformly random record per (device, day, suite, provenance,
    op) configuration; deterministic per seed and idempotent."""
    buckets: dict[tuple, list[SampleRecord]] = {}
    for r in records:
        key = (r.device.device_id, r.day, r.suite, r.key_provenance, r.op)
        buckets.setdefault(key, []).append(r)
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    for key in sorted(buckets, key=lambda k: tuple(
            x.value if hasattr(x, "value") else x for x in k)):
        bucket = buckets[key]
        out.append(bucket[int(rng.integers(len(bucket)))])
    return out


def nearest_rank_p90(values: Sequence[float]) -> float:
    if not values:
        raise EmptyInput("no values for percentile")
    ordered = sorted(values)
    rank = -(-len(ordered) * 90 // 100)  # ceil(0.9 * n), 1-based
    return ordered[rank - 1]


def p90_latency(records: Sequence[SampleRecord], dedup: bool = True,
                seed: int = 0) -> dict[tuple[Suite, Backing, Tier], float]:
    if not records:
        raise EmptyInput("no records")
    pool = dedup_records(records, seed) if dedup else list(records)
    buckets: dict[tuple[Suite, Backing, Tier], list[float]] = {}
    for r in pool:
        if r.error is not None:
            continue
        key = (r.suite, r.backing, r.device.tier)
        buckets.setdefault(key, []).append(r.wall_time_ms)
    return {key: nearest_rank_p90(vals)
            for key, vals in sorted(buckets.items(),
                                    key=lambda kv: tuple(x.value for x in kv[0]))}


def strongbox_adoption(profiles: Iterable[DeviceProfile]
                       ) -> dict[tuple[int, Tier], float]:
    buckets: dict[tuple[int, Tier], list[bool]] = {}
    for p in profiles:
        buckets.setdefault((p.release_year, p.tier), []).append(
            p.strongbox_supported)
    return {key: sum(flags) / len(flags)
            for key, flags in sorted(buckets.items(),
                                     key=lambda kv: (kv[0][0], kv[0][1].value))}


@dataclass(frozen=True)
class BugPatternRow:
    pattern: str                 # error type name
    ops: tuple[str, ...]
    backings: tuple[str, ...]
    api_levels: tuple[int, ...]
    chipset_count: int
    device_count: int
    rate_min: float
    rate_max: float
    rate_median: float


def bug_pattern_table(records: Sequence[SampleRecord]) -> list[BugPatternRow]:
    """Per-error-pattern rollup: where each error type occurs and the
    spread of per-device rates (pattern errors over the device's records
    in the suites where the pattern appears)."""
    by_pattern: dict[str, list[SampleRecord]] = {}
    for r in records:
        if r.error is not None:
            by_pattern.setdefault(r.error[0], []).append(r)
    rows = []
    for pattern in sorted(by_pattern):
        errs = by_pattern[pattern]
        suites = {r.suite for r in errs}
        devices = sorted({r.device.device_id for r in errs})
        denom: dict[str, int] = {}
        numer: dict[str, int] = {}
        for r in records:
            if r.suite not in suites:
                continue
            dev = r.device.device_id
            denom[dev] = denom.get(dev, 0) + 1
            if r.error is not None and r.error[0] == pattern:
                numer[dev] = numer.get(dev, 0) + 1
        rates = [numer.get(dev, 0) / denom[dev] for dev in devices]
        rows.append(BugPatternRow(
            pattern=pattern,
            ops=tuple(sorted({r.op.value for r in errs})),
            backings=tuple(sorted({r.backing.value for r in errs})),
            api_levels=tuple(sorted({r.device.api_level for r in errs})),
            chipset_count=len({r.device.chipset for r in errs}),
            device_count=len(devices),
            rate_min=min(rates),
            rate_max=max(rates),
            rate_median=statistics.median(rates),
        ))
    return rows


# Error type name -> the bug-pattern kind it evidences. Unrecognized
# error types still appear in the table but are not findings on their own.
ERROR_FINDING_KINDS = {
    "ImportFailure": FindingKind.KEY_IMPORT_FAILURE,
    "InvalidKeyBlob": FindingKind.INVALID_KEY_BLOB,
    "InvalidKey": FindingKind.INCOMPATIBLE_PURPOSE,
    "BlockSizeFailure": FindingKind.DECRYPT_PADDING_FAILURE,
    "DecryptPaddingFailure": FindingKind.DECRYPT_PADDING_FAILURE,
}


def bug_pattern_findings(records: Sequence[SampleRecord]) -> list[Finding]:
    """One Finding per (recognized error pattern, fingerprint): repeated
    failures of a known bug class on a device model."""
    records = list(records)
    findings = []
    for row in bug_pattern_table(records):
        kind = ERROR_FINDING_KINDS.get(row.pattern)
        if kind is None:
            continue
        fingerprints = sorted({r.device.fingerprint for r in records
                               if r.error is not None
                               and r.error[0] == row.pattern})
        messages = sorted({r.error[1] for r in records
                           if r.error is not None
                           and r.error[0] == row.pattern})
        for fp in fingerprints:
            findings.append(Finding(
                kind=kind,
                group={"fingerprint": fp},
                evidence={"pattern": row.pattern,
                          "ops": list(row.ops),
                          "backings": list(row.backings),
                          "messages": messages,
                          "devices": row.device_count},
                rate_stats={"min": row.rate_min, "median": row.rate_median,
                            "max": row.rate_max},
            ))
    return findings
