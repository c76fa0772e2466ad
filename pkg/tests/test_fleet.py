"""Fleet simulation: config round-trips, session yields, determinism."""

import dataclasses
import json

import pytest

from cct import fleet
from cct.errors import InputError
from cct.fleet import FleetConfig, ModelConfig
from cct.provider import FaultSpec
from cct.records import Backing, Op, Suite, serialize_record
from tests.conftest import small_fleet_config


class TestConfig:
    def test_round_trip(self):
        config = small_fleet_config(seed=5, faults=[{
            "pattern": "BiasedRng", "params": {"rate": 1.0}}])
        again = FleetConfig.from_json(config.to_json())
        assert again == config

    def test_round_trip_with_workload_overrides(self):
        config = small_fleet_config(
            suites=(Suite.EC_SIGN,), ops_per_device_day=25)
        blob = json.dumps(config.to_json())
        again = FleetConfig.from_json(json.loads(blob))
        assert again.models[0].suites == (Suite.EC_SIGN,)
        assert again.models[0].ops_per_device_day == 25

    def test_empty_models_rejected(self):
        with pytest.raises(InputError):
            FleetConfig.from_json({"seed": 1, "models": [],
                                   "days": 1, "ops_per_device_day": 10})

    def test_bad_fault_pattern_rejected(self):
        cfg = small_fleet_config().to_json()
        cfg["models"][0]["faults"] = [{"pattern": "NoSuchFault", "params": {}}]
        with pytest.raises(InputError):
            FleetConfig.from_json(cfg)


class TestSessions:
    def test_healthy_session_record_count(self):
        config = small_fleet_config()
        records = list(fleet.iter_fleet(config))
        # 2 devices x 2 days x 60 ops, one record per op
        assert len(records) == 240

    def test_suite_restriction_respected(self):
        config = small_fleet_config(suites=(Suite.EC_SIGN,))
        records = list(fleet.iter_fleet(config))
        assert {r.suite for r in records} == {Suite.EC_SIGN}
        assert {r.op for r in records} <= {Op.KEY_GEN, Op.KEY_IMPORT,
                                           Op.SIGN, Op.VERIFY}

    def test_ops_override_scales_budget(self):
        config = small_fleet_config(ops_per_device_day=10)
        assert len(list(fleet.iter_fleet(config))) == 40

    def test_device_ids_unique_and_stable(self):
        config = small_fleet_config()
        ids = {r.device.device_id for r in fleet.iter_fleet(config)}
        assert len(ids) == 2
        assert ids == {r.device.device_id for r in fleet.iter_fleet(config)}

    def test_records_serializable(self):
        config = small_fleet_config()
        for record in fleet.iter_fleet(config):
            assert json.loads(serialize_record(record))["suite"] == record.suite.value


class TestDeterminism:
    def test_same_seed_same_stream(self):
        config = small_fleet_config(seed=11)
        first = [serialize_record(r) for r in fleet.iter_fleet(config)]
        second = [serialize_record(r) for r in fleet.iter_fleet(config)]
        assert first == second

    def test_different_seed_different_stream(self):
        base = [serialize_record(r) for r in fleet.iter_fleet(small_fleet_config(seed=1))]
        other = [serialize_record(r) for r in fleet.iter_fleet(small_fleet_config(seed=2))]
        assert base != other


class TestFaultedFleet:
    def test_fault_rate_applied(self):
        config = small_fleet_config(seed=3, faults=[{
            "pattern": "KeyImportReject",
            "params": {"rate": 1.0}}])
        records = list(fleet.iter_fleet(config))
        imports = [r for r in records if r.op == Op.KEY_IMPORT]
        assert imports
        assert all(r.error and r.error[0] == "ImportFailure" for r in imports)

    def test_fault_spec_round_trip(self):
        spec = FaultSpec.from_json({"pattern": "SdcBitFlip",
                                    "applies_to": ["AesCbc"],
                                    "params": {"rate": 0.5, "count": 1}})
        assert FaultSpec.from_json(spec.to_json()) == spec
