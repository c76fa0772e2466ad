"""Fleet simulation harness: drives a population of simulated devices
through the test suites and emits the newline-delimited sample dataset.

Output is deterministic for a fixed config: models are visited in config
order, devices by index, days ascending, suites round-robin.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import IO, Iterator, Optional

import numpy as np

from cct import keys
from cct.errors import InputError, ProviderError
from cct.keys import KeyAlgo
from cct.provider import (CryptScheme, FaultSpec, KeyHandle, Provider,
                          RandomSource, SignScheme)
from cct.records import (Backing, DeviceProfile, KeyProvenance, Op,
                         SampleRecord, Suite, serialize_record, tier_for_memory)

DEFAULT_OPS_PER_DAY = 200

SUITE_ORDER = (
    Suite.RSA_SIGN_PKCS1, Suite.RSA_SIGN_PSS, Suite.EC_SIGN, Suite.AES_CBC,
    Suite.RSA_CRYPT_OAEP, Suite.RSA_CRYPT_PKCS1, Suite.HMAC_SHA256,
    Suite.EC_EXCHANGE,
)

SUITE_ALGO = {
    Suite.RSA_SIGN_PKCS1: KeyAlgo.RSA_1024,
    Suite.RSA_SIGN_PSS: KeyAlgo.RSA_1024,
    Suite.RSA_CRYPT_OAEP: KeyAlgo.RSA_1024,
    Suite.RSA_CRYPT_PKCS1: KeyAlgo.RSA_1024,
    Suite.EC_SIGN: KeyAlgo.EC_P256,
    Suite.EC_EXCHANGE: KeyAlgo.EC_P256,
    Suite.AES_CBC: KeyAlgo.AES_128,
    Suite.HMAC_SHA256: KeyAlgo.HMAC_SHA256,
}

_SIGN_SCHEME = {
    Suite.RSA_SIGN_PKCS1: SignScheme.PKCS1_SHA256,
    Suite.RSA_SIGN_PSS: SignScheme.PSS_SHA256,
    Suite.EC_SIGN: SignScheme.ECDSA_SHA256,
}

_CRYPT_SCHEME = {
    Suite.RSA_CRYPT_OAEP: CryptScheme.RSA_OAEP_SHA256,
    Suite.RSA_CRYPT_PKCS1: CryptScheme.RSA_PKCS1,
    Suite.AES_CBC: CryptScheme.AES_CBC_PKCS7,
}

PLAINTEXT_LEN = 32  # requested plaintext size for every encrypt op


@dataclass(frozen=True)
class ModelConfig:
    fingerprint: str
    chipset_make: str
    chipset_model: str
    api_level: int
    memory_gb: float
    strongbox_supported: bool
    release_year: int
    count: int
    faults: tuple[FaultSpec, ...] = ()
    timing: dict = field(default_factory=dict)
    # workload overrides: restrict a model to a suite subset (kiosk or
    # wearable profiles) or scale its daily op budget
    suites: tuple[Suite, ...] = ()
    ops_per_device_day: Optional[int] = None

    def to_json(self) -> dict:
        return {
            "fingerprint": self.fingerprint,
            "chipset_make": self.chipset_make,
            "chipset_model": self.chipset_model,
            "api_level": self.api_level,
            "memory_gb": self.memory_gb,
            "strongbox_supported": self.strongbox_supported,
            "release_year": self.release_year,
            "count": self.count,
            "faults": [f.to_json() for f in self.faults],
            "timing": {f"{s.value}/{b.value}": list(v)
                       for (s, b), v in self.timing.items()},
            "suites": [s.value for s in self.suites],
            "ops_per_device_day": self.ops_per_device_day,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ModelConfig":
        timing = {}
        for key, val in obj.get("timing", {}).items():
            suite, backing = key.split("/")
            timing[(Suite(suite), Backing(backing))] = tuple(val)
        return cls(
            fingerprint=obj["fingerprint"],
            chipset_make=obj["chipset_make"],
            chipset_model=obj["chipset_model"],
            api_level=int(obj["api_level"]),
            memory_gb=float(obj["memory_gb"]),
            strongbox_supported=bool(obj["strongbox_supported"]),
            release_year=int(obj["release_year"]),
            count=int(obj["count"]),
            faults=tuple(FaultSpec.from_json(f) for f in obj.get("faults", [])),
            timing=timing,
            suites=tuple(Suite(s) for s in obj.get("suites", [])),
            ops_per_device_day=(None if obj.get("ops_per_device_day") is None
                                else int(obj["ops_per_device_day"])),
        )


@dataclass(frozen=True)
class FleetConfig:
    seed: int
    models: tuple[ModelConfig, ...]
    days: int = 1
    ops_per_device_day: int = DEFAULT_OPS_PER_DAY

    def __post_init__(self):
        if self.days < 1 or self.ops_per_device_day < 1:
            raise ValueError("days and ops_per_device_day must be >= 1")
        if not self.models:
            raise ValueError("config needs at least one model")

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "days": self.days,
            "ops_per_device_day": self.ops_per_device_day,
            "models": [m.to_json() for m in self.models],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FleetConfig":
        try:
            return cls(
                seed=int(obj["seed"]),
                days=int(obj.get("days", 1)),
                ops_per_device_day=int(obj.get("ops_per_device_day",
                                               DEFAULT_OPS_PER_DAY)),
                models=tuple(ModelConfig.from_json(m) for m in obj["models"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad fleet config: {exc}") from exc

    @classmethod
    def load(cls, path) -> "FleetConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def device_id_for(seed: int, fingerprint: str, index: int) -> str:
    """Salted, non-reversible device identifier."""
    digest = hashlib.sha256(
        f"device:{seed}:{fingerprint}:{index}".encode()).hexdigest()
    return digest[:16]


def _derived_seed(*parts) -> int:
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(digest[:8], "big")


def run_device_session(profile: DeviceProfile, provider: Provider,
                       harness_rng: np.random.Generator, day: int,
                       budget: int = DEFAULT_OPS_PER_DAY,
                       suites: tuple[Suite, ...] = ()) -> Iterator[SampleRecord]:
    """One device-day: suites round-robin, each visit runs the suite's full
    op schedule; stops when the record budget is exhausted."""
    emitted = 0
    fixed = keys.fixed_keys()
    order = suites or SUITE_ORDER
    suite_idx = 0
    while emitted < budget:
        suite = order[suite_idx % len(order)]
        suite_idx += 1
        provenance = (KeyProvenance.IMPORTED if harness_rng.random() < 0.5
                      else KeyProvenance.GENERATED)
        if profile.strongbox_supported and harness_rng.random() < 0.5:
            backing = Backing.STRONGBOX
        else:
            backing = Backing.TEE
        provider.backing = backing

        for record in _suite_ops(profile, provider, harness_rng, day, suite,
                                 provenance, backing, fixed):
            yield record
            emitted += 1
            if emitted >= budget:
                return


def _base(profile, suite, provenance, backing, day, op, result=None,
          error=None, **fields) -> SampleRecord:
    wall = 0.0
    if result is not None:
        wall = result.wall_time_ms
    elif error is not None:
        wall = getattr(error, "wall_time_ms", 0.0)
    return SampleRecord(
        device=profile, suite=suite, key_provenance=provenance,
        backing=backing, op=op,
        wall_time_ms=wall,
        error=(type(error).__name__, str(error)) if error is not None else None,
        day=day,
        **fields,
    )


def _suite_ops(profile, provider, harness_rng, day, suite, provenance,
               backing, fixed) -> Iterator[SampleRecord]:
    algo = SUITE_ALGO[suite]
    # key acquisition
    try:
        if provenance == KeyProvenance.IMPORTED:
            handle = provider.import_key(fixed[algo], suite=suite)
            key_op = Op.KEY_IMPORT
        else:
            handle = provider.generate_key(algo, suite=suite)
            key_op = Op.KEY_GEN
    except ProviderError as exc:
        yield _base(profile, suite, provenance, backing, day,
                    Op.KEY_IMPORT if provenance == KeyProvenance.IMPORTED
                    else Op.KEY_GEN,
                    error=exc, input=b"", output=b"")
        return
    public = handle.material.public_encoded()
    yield _base(profile, suite, provenance, backing, day, key_op,
                input=b"", output=public or b"", public_key=public,
                result=_FakeTime(provider, suite))

    message = harness_rng.bytes(PLAINTEXT_LEN)

    if suite in _SIGN_SCHEME:
        scheme = _SIGN_SCHEME[suite]
        try:
            res = provider.sign(handle, scheme, message)
        except ProviderError as exc:
            yield _base(profile, suite, provenance, backing, day, Op.SIGN,
                        error=exc, input=message, output=b"", public_key=public)
            return
        yield _base(profile, suite, provenance, backing, day, Op.SIGN,
                    result=res, input=message, output=res.output,
                    public_key=public)
        ver = provider.verify(handle, scheme, message, res.output)
        yield _base(profile, suite, provenance, backing, day, Op.VERIFY,
                    result=ver, input=message, output=res.output,
                    aux_output=ver.output, public_key=public)
    elif suite in _CRYPT_SCHEME:
        scheme = _CRYPT_SCHEME[suite]
        try:
            enc = provider.encrypt(handle, scheme, message)
        except ProviderError as exc:
            yield _base(profile, suite, provenance, backing, day, Op.ENCRYPT,
                        error=exc, input=message, output=b"", public_key=public)
            return
        yield _base(profile, suite, provenance, backing, day, Op.ENCRYPT,
                    result=enc, input=message, output=enc.output,
                    public_key=public)
        try:
            dec = provider.decrypt(handle, scheme, enc.output)
        except ProviderError as exc:
            yield _base(profile, suite, provenance, backing, day, Op.DECRYPT,
                        error=exc, input=enc.output, output=b"",
                        public_key=public)
            return
        yield _base(profile, suite, provenance, backing, day, Op.DECRYPT,
                    result=dec, input=enc.output, output=dec.output,
                    public_key=public)
    elif suite == Suite.HMAC_SHA256:
        try:
            res = provider.mac(handle, message)
        except ProviderError as exc:
            yield _base(profile, suite, provenance, backing, day, Op.MAC,
                        error=exc, input=message, output=b"")
            return
        yield _base(profile, suite, provenance, backing, day, Op.MAC,
                    result=res, input=message, output=res.output)
    else:  # EcExchange: peer key is harness-side, i.e. externally known
        from cct import ec
        peer_d = int.from_bytes(harness_rng.bytes(32), "big") % (ec.N - 1) + 1
        peer_pub = ec.encode_point(ec.scalar_base_mult(peer_d))
        try:
            res = provider.exchange(handle, peer_pub)
        except ProviderError as exc:
            yield _base(profile, suite, provenance, backing, day, Op.EXCHANGE,
                        error=exc, input=peer_pub, output=b"",
                        public_key=public)
            return
        yield _base(profile, suite, provenance, backing, day, Op.EXCHANGE,
                    result=res, input=peer_pub, output=res.output,
                    public_key=public)


class _FakeTime:
    """Adapter giving key-lifecycle records a timing draw like other ops."""

    def __init__(self, provider: Provider, suite: Suite):
        self.wall_time_ms = provider._wall_time(suite)


def iter_fleet(config: FleetConfig) -> Iterator[SampleRecord]:
    for model in config.models:
        for index in range(model.count):
            dev_id = device_id_for(config.seed, model.fingerprint, index)
            profile = DeviceProfile(
                device_id=dev_id,
                fingerprint=model.fingerprint,
                chipset_make=model.chipset_make,
                chipset_model=model.chipset_model,
                api_level=model.api_level,
                tier=tier_for_memory(model.memory_gb),
                memory_gb=model.memory_gb,
                strongbox_supported=model.strongbox_supported,
                release_year=model.release_year,
            )
            for day in range(config.days):
                prov_seed = _derived_seed("prov", config.seed, dev_id, day)
                provider = Provider(
                    RandomSource.uniform(prov_seed),
                    faults=model.faults,
                    timing=model.timing,
                    fault_seed=_derived_seed("fault", config.seed, dev_id, day),
                )
                harness_rng = np.random.Generator(np.random.PCG64(
                    _derived_seed("harness", config.seed, dev_id, day)))
                yield from run_device_session(
                    profile, provider, harness_rng, day,
                    budget=(model.ops_per_device_day
                            or config.ops_per_device_day),
                    suites=model.suites)


def run_fleet(config: FleetConfig, out: IO[bytes]) -> int:
    """Streams the dataset for the whole fleet; returns the record count."""
    count = 0
    for record in iter_fleet(config):
        out.write(serialize_record(record))
        count += 1
    return count


def write_fleet(config: FleetConfig, path) -> int:
    with open(path, "wb") as fh:
        return run_fleet(config, fh)
