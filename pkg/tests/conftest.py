"""Shared fixtures and the acceptance-criteria summary hook."""

import numpy as np
import pytest

from cct.fleet import FleetConfig
from cct.records import load_dataset

# prefix of the acceptance test name -> summary label
_CRITERIA = {
    "test_criterion_1": "1 known-answer vectors",
    "test_criterion_2": "2 parameter recovery",
    "test_criterion_3": "3 fault detection and soundness",
    "test_criterion_4": "4 randomness calibration",
    "test_criterion_5": "5 key battery",
    "test_criterion_6": "6 timing model",
    "test_criterion_7": "7 stats arithmetic",
    "test_criterion_8": "8 determinism",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    del exitstatus, config
    seen = {}
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            name = rep.nodeid.rsplit("::", 1)[-1]
            for prefix, label in _CRITERIA.items():
                if name.startswith(prefix):
                    seen[label] = outcome == "passed" and seen.get(label, True)
    if not seen:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA.values(), key=lambda s: s.split()[0]):
        if label in seen:
            verdict = "PASS" if seen[label] else "FAIL"
        else:
            verdict = "FAIL (not run)"
        terminalreporter.write_line(f"criterion {label}: {verdict}")


@pytest.fixture(scope="session")
def synthetic30():
    return load_dataset("tests/data/synthetic30.jsonl")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(12345))


def small_fleet_config(seed=42, faults=(), **model_overrides):
    model = {
        "fingerprint": "acme/one", "chipset_make": "acme",
        "chipset_model": "x1", "api_level": 33, "memory_gb": 8.0,
        "strongbox_supported": True, "release_year": 2023, "count": 2,
        "faults": list(faults), "timing": {},
    }
    model.update(model_overrides)
    return FleetConfig.from_json({
        "seed": seed, "days": 2, "ops_per_device_day": 60,
        "models": [model],
    })
