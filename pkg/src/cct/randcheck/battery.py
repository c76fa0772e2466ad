"""Battery orchestration: run every test on one block of material and
return the ordered (test_id, p_value) list.

A large block (128 KiB) yields 699 p-values. A small block (32 KiB) runs
with reduced parameters and skips the universal test, which has no valid
parameterization at that size.
"""

from __future__ import annotations

import numpy as np

from cct.errors import InsufficientData
from cct.randcheck import sp80022
from cct.randcheck.bitops import bits_from_bytes

BLOCK_BYTES_LARGE = 128 * 1024
BLOCK_BYTES_SMALL = 32 * 1024

PVALUES_PER_LARGE_BLOCK = 699

_LBMR_SIZES_LARGE = (16, 32, 64, 128, 256, 512, 1024)
_LBMR_SIZES_SMALL = (8, 16, 32, 64, 128, 256, 512)


def run_battery(block: bytes) -> list[tuple[str, float]]:
    """All tests on one material block; `block` must be exactly 128 KiB
    or 32 KiB."""
    if len(block) == BLOCK_BYTES_LARGE:
        longest_m, lbmr_sizes, with_universal = 10_000, _LBMR_SIZES_LARGE, True
    elif len(block) == BLOCK_BYTES_SMALL:
        longest_m, lbmr_sizes, with_universal = 128, _LBMR_SIZES_SMALL, False
    else:
        raise InsufficientData(
            "battery block", f"{BLOCK_BYTES_LARGE} or {BLOCK_BYTES_SMALL}",
            len(block))
    bits = bits_from_bytes(block)
    out: list[tuple[str, float]] = []
    out.extend(sp80022.frequency(bits))
    out.extend(sp80022.block_frequency(bits))
    out.extend(sp80022.runs(bits))
    out.extend(sp80022.longest_runs(bits, longest_m))
    out.extend(sp80022.binary_matrix_rank(bits))
    out.extend(sp80022.spectral(bits))
    out.extend(sp80022.non_overlapping_templates(bits))
    out.extend(sp80022.overlapping_template(bits))
    if with_universal:
        out.extend(sp80022.universal(bits))
    out.extend(sp80022.linear_complexity(bits))
    out.extend(sp80022.serial_and_apen(bits))
    out.extend(sp80022.random_walk(bits))
    out.extend(sp80022.large_binary_matrix_rank(bits, lbmr_sizes))
    out.extend(sp80022.linear_complexity_scatter(bits))
    return out
