"""Canonical data model: device profiles, sample records, findings.

Datasets are newline-delimited JSON, one flat object per record, UTF-8,
byte fields hex-encoded lowercase. Grouping enforces the privacy rule:
groups smaller than ``min_group_size`` are discarded.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Optional

from cct.errors import MalformedRecord, TruncatedInput

DEFAULT_MIN_GROUP_SIZE = 100


class Tier(str, enum.Enum):
    PREMIUM = "Premium"
    MEDIUM = "Medium"
    LOW = "Low"


class Suite(str, enum.Enum):
    RSA_SIGN_PKCS1 = "RsaSignPkcs1"
    RSA_SIGN_PSS = "RsaSignPss"
    RSA_CRYPT_OAEP = "RsaCryptOaep"
    RSA_CRYPT_PKCS1 = "RsaCryptPkcs1"
    EC_EXCHANGE = "EcExchange"
    EC_SIGN = "EcSign"
    HMAC_SHA256 = "HmacSha256"
    AES_CBC = "AesCbc"


class KeyProvenance(str, enum.Enum):
    IMPORTED = "Imported"
    GENERATED = "Generated"


class Backing(str, enum.Enum):
    SOFTWARE = "Software"
    TEE = "TEE"
    STRONGBOX = "StrongBox"


class Op(str, enum.Enum):
    KEY_GEN = "KeyGen"
    KEY_IMPORT = "KeyImport"
    SIGN = "Sign"
    VERIFY = "Verify"
    ENCRYPT = "Encrypt"
    DECRYPT = "Decrypt"
    MAC = "Mac"
    EXCHANGE = "Exchange"


class Dimension(str, enum.Enum):
    FINGERPRINT = "Fingerprint"
    DEVICE_ID = "DeviceId"
    CHIPSET = "Chipset"
    API_LEVEL = "ApiLevel"
    BACKING = "Backing"
    SUITE = "Suite"
    ERROR_MESSAGE = "ErrorMessage"


class FindingKind(str, enum.Enum):
    INVALID_PSS_SALT = "InvalidPssSalt"
    WRONG_KEY_SIGNATURE = "WrongKeySignature"
    ZERO_CHUNK_ECDSA = "ZeroChunkEcdsa"
    OAEP_SIZE_ANOMALY = "OaepSizeAnomaly"
    HMAC_ECDSA_SHAPED = "HmacEcdsaShaped"
    SILENT_DATA_CORRUPTION = "SilentDataCorruption"
    WEAK_RANDOM = "WeakRandom"
    WEAK_RSA_KEY = "WeakRsaKey"
    CORRUPTED_RSA_KEY = "CorruptedRsaKey"
    TIMING_LEAK = "TimingLeak"
    KEY_IMPORT_FAILURE = "KeyImportFailure"
    INCOMPATIBLE_PURPOSE = "IncompatiblePurpose"
    INVALID_KEY_BLOB = "InvalidKeyBlob"
    DECRYPT_PADDING_FAILURE = "DecryptPaddingFailure"
    EXTERNAL_VERIFY_MISMATCH = "ExternalVerifyMismatch"


def tier_for_memory(memory_gb: float) -> Tier:
    """Memory is authoritative: Premium >= 12 GiB, Medium in [5, 12), Low < 5."""
    if memory_gb >= 12:
        return Tier.PREMIUM
    if memory_gb >= 5:
        return Tier.MEDIUM
    return Tier.LOW


@dataclass(frozen=True)
class DeviceProfile:
    device_id: str
    fingerprint: str
    chipset_make: str
    chipset_model: str
    api_level: int
    tier: Tier
    memory_gb: float
    strongbox_supported: bool
    release_year: int

    def __post_init__(self):
        if self.api_level < 23:
            raise ValueError(f"api_level must be >= 23, got {self.api_level}")
        if self.tier != tier_for_memory(self.memory_gb):
            raise ValueError(
                f"tier {self.tier.value} inconsistent with memory_gb={self.memory_gb}")

    @property
    def chipset(self) -> str:
        return f"{self.chipset_make}/{self.chipset_model}"


@dataclass(frozen=True)
class SampleRecord:
    device: DeviceProfile
    suite: Suite
    key_provenance: KeyProvenance
    backing: Backing
    op: Op
    input: bytes
    output: bytes
    aux_output: bytes = b""
    public_key: Optional[bytes] = None
    wall_time_ms: float = 0.0
    error: Optional[tuple[str, str]] = None  # (exception_name, message)
    day: int = 0

    def __post_init__(self):
        if self.wall_time_ms < 0:
            raise ValueError("wall_time_ms must be >= 0")


@dataclass(frozen=True)
class GroupKey:
    dimensions: tuple[Dimension, ...]

    def __post_init__(self):
        if not self.dimensions:
            raise ValueError("GroupKey needs at least one dimension")
        if len(set(self.dimensions)) != len(self.dimensions):
            raise ValueError("GroupKey dimensions must be distinct")

    def values_for(self, record: SampleRecord) -> tuple:
        return tuple(_DIMENSION_GETTERS[d](record) for d in self.dimensions)


_DIMENSION_GETTERS = {
    Dimension.FINGERPRINT: lambda r: r.device.fingerprint,
    Dimension.DEVICE_ID: lambda r: r.device.device_id,
    Dimension.CHIPSET: lambda r: r.device.chipset,
    Dimension.API_LEVEL: lambda r: r.device.api_level,
    Dimension.BACKING: lambda r: r.backing.value,
    Dimension.SUITE: lambda r: r.suite.value,
    Dimension.ERROR_MESSAGE: lambda r: r.error[1] if r.error else "",
}


@dataclass
class Finding:
    kind: FindingKind
    group: dict[str, object]
    evidence: dict[str, object]
    rate_stats: Optional[dict[str, float]] = None  # min/max/median fractions

    def __post_init__(self):
        if not self.evidence:
            raise ValueError("Finding.evidence must be nonempty")
        if self.rate_stats is not None:
            lo, mid, hi = (self.rate_stats["min"], self.rate_stats["median"],
                           self.rate_stats["max"])
            if not (0 <= lo <= mid <= hi <= 1):
                raise ValueError(f"invalid rate_stats {self.rate_stats}")

    def to_json(self) -> dict:
        out = {
            "kind": self.kind.value,
            "group": self.group,
            "evidence": self.evidence,
        }
        if self.rate_stats is not None:
            out["rate_stats"] = self.rate_stats
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "Finding":
        return cls(
            kind=FindingKind(obj["kind"]),
            group=obj["group"],
            evidence=obj["evidence"],
            rate_stats=obj.get("rate_stats"),
        )


# Field order of the line format; absent optionals serialize as "".
_FIELDS = (
    "device_id", "fingerprint", "chipset_make", "chipset_model", "api_level",
    "tier", "memory_gb", "strongbox_supported", "release_year", "suite",
    "key_provenance", "backing", "op", "input_hex", "output_hex",
    "aux_output_hex", "public_key_hex", "wall_time_ms", "error_name",
    "error_message", "day",
)


def serialize_record(record: SampleRecord) -> bytes:
    """One newline-terminated JSON line; round-trips through parse_dataset."""
    d = record.device
    obj = {
        "device_id": d.device_id,
        "fingerprint": d.fingerprint,
        "chipset_make": d.chipset_make,
        "chipset_model": d.chipset_model,
        "api_level": d.api_level,
        "tier": d.tier.value,
        "memory_gb": d.memory_gb,
        "strongbox_supported": d.strongbox_supported,
        "release_year": d.release_year,
        "suite": record.suite.value,
        "key_provenance": record.key_provenance.value,
        "backing": record.backing.value,
        "op": record.op.value,
        "input_hex": record.input.hex(),
        "output_hex": record.output.hex(),
        "aux_output_hex": record.aux_output.hex(),
        "public_key_hex": record.public_key.hex() if record.public_key else "",
        "wall_time_ms": record.wall_time_ms,
        "error_name": record.error[0] if record.error else "",
        "error_message": record.error[1] if record.error else "",
        "day": record.day,
    }
    return (json.dumps(obj, separators=(",", ":")) + "\n").encode("utf-8")


def _record_from_obj(obj: dict, line_no: int) -> SampleRecord:
    missing = [f for f in _FIELDS if f not in obj]
    if missing:
        raise MalformedRecord(line_no, f"missing fields {missing}")
    try:
        device = DeviceProfile(
            device_id=obj["device_id"],
            fingerprint=obj["fingerprint"],
            chipset_make=obj["chipset_make"],
            chipset_model=obj["chipset_model"],
            api_level=int(obj["api_level"]),
            tier=Tier(obj["tier"]),
            memory_gb=float(obj["memory_gb"]),
            strongbox_supported=bool(obj["strongbox_supported"]),
            release_year=int(obj["release_year"]),
        )
        error = None
        if obj["error_name"] or obj["error_message"]:
            error = (obj["error_name"], obj["error_message"])
        return SampleRecord(
            device=device,
            suite=Suite(obj["suite"]),
            key_provenance=KeyProvenance(obj["key_provenance"]),
            backing=Backing(obj["backing"]),
            op=Op(obj["op"]),
            input=bytes.fromhex(obj["input_hex"]),
            output=bytes.fromhex(obj["output_hex"]),
            aux_output=bytes.fromhex(obj["aux_output_hex"]),
            public_key=bytes.fromhex(obj["public_key_hex"]) or None
            if obj["public_key_hex"] else None,
            wall_time_ms=float(obj["wall_time_ms"]),
            error=error,
            day=int(obj["day"]),
        )
    except (ValueError, KeyError, TypeError) as exc:
        raise MalformedRecord(line_no, str(exc)) from exc


def parse_dataset(stream: IO[bytes]) -> Iterator[SampleRecord]:
    """Parses a newline-delimited dataset, reporting bad lines by number."""
    line_no = 0
    for raw in stream:
        line_no += 1
        if not raw.endswith(b"\n"):
            raise TruncatedInput(f"line {line_no} has no newline terminator")
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"bad JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise MalformedRecord(line_no, "record is not an object")
        yield _record_from_obj(obj, line_no)


def load_dataset(path) -> list[SampleRecord]:
    with open(path, "rb") as fh:
        return list(parse_dataset(fh))


def group_samples(
    records: Iterable[SampleRecord],
    key: GroupKey,
    min_group_size: int = DEFAULT_MIN_GROUP_SIZE,
) -> dict[tuple, list[SampleRecord]]:
    """Partition records by group key, dropping groups under the size floor."""
    if min_group_size < 0:
        raise ValueError("min_group_size must be >= 0")
    groups: dict[tuple, list[SampleRecord]] = {}
    for record in records:
        groups.setdefault(key.values_for(record), []).append(record)
    return {k: v for k, v in groups.items() if len(v) >= min_group_size}


def merge_groups(
    *shards: dict[tuple, list[SampleRecord]],
    min_group_size: int = 0,
) -> dict[tuple, list[SampleRecord]]:
    """Merges per-shard grouping results; apply the size floor only here
    when sharded, so a group split across shards is not dropped early."""
    merged: dict[tuple, list[SampleRecord]] = {}
    for shard in shards:
        for k, v in shard.items():
            merged.setdefault(k, []).extend(v)
    return {k: v for k, v in merged.items() if len(v) >= min_group_size}
