"""Group-level verdicts over per-block battery results.

A group is called weak only when the same test rejects at the hard
threshold in at least two blocks; a single excursion among hundreds of
p-values is expected noise even at 1e-9.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cct.errors import InsufficientData

P_THRESHOLD = 1e-9
MIN_BLOCKS = 5
MIN_REPEATS = 2


@dataclass
class Verdict:
    weak: bool
    blocks: int
    offending: dict[str, int] = field(default_factory=dict)  # test_id -> blocks rejected

    def to_json(self) -> dict:
        return {"weak": self.weak, "blocks": self.blocks,
                "offending": self.offending}


def evaluate_group_verdict(block_results: list[list[tuple[str, float]]],
                           threshold: float = P_THRESHOLD,
                           min_blocks: int = MIN_BLOCKS) -> Verdict:
    if len(block_results) < min_blocks:
        raise InsufficientData("battery blocks", min_blocks, len(block_results))
    reject_counts: dict[str, int] = {}
    for block in block_results:
        for test_id, p in block:
            if p < threshold:
                reject_counts[test_id] = reject_counts.get(test_id, 0) + 1
    offending = {t: c for t, c in sorted(reject_counts.items())
                 if c >= MIN_REPEATS}
    return Verdict(weak=bool(offending), blocks=len(block_results),
                   offending=offending)


def analyze_randomness(material: bytes, block_bytes: int,
                       min_blocks: int = MIN_BLOCKS) -> Verdict:
    """Split material into battery blocks and evaluate the group verdict."""
    from cct.randcheck.battery import run_battery
    nblocks = len(material) // block_bytes
    results = [run_battery(material[i * block_bytes:(i + 1) * block_bytes])
               for i in range(nblocks)]
    return evaluate_group_verdict(results, min_blocks=min_blocks)
