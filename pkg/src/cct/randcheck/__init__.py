"""Statistical randomness battery and random-material extraction."""

from cct.randcheck.battery import (BLOCK_BYTES_LARGE, BLOCK_BYTES_SMALL,
                                   PVALUES_PER_LARGE_BLOCK, run_battery)
from cct.randcheck.material import (ByteProfile, byte_distribution_profile,
                                    extract_random_material)
from cct.randcheck.pipeline import analyze_dataset_randomness
from cct.randcheck.verdict import (MIN_BLOCKS, P_THRESHOLD, Verdict,
                                   analyze_randomness, evaluate_group_verdict)

__all__ = [
    "BLOCK_BYTES_LARGE", "BLOCK_BYTES_SMALL", "PVALUES_PER_LARGE_BLOCK",
    "run_battery", "ByteProfile", "byte_distribution_profile",
    "extract_random_material", "MIN_BLOCKS", "P_THRESHOLD", "Verdict",
    "analyze_randomness", "analyze_dataset_randomness",
    "evaluate_group_verdict",
]
