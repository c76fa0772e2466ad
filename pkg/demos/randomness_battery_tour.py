"""Run the statistical randomness battery against a sound generator and
a subtly biased one, and watch the byte-histogram profile catch the bias
long before the bit-level tests do.

    python3 demos/randomness_battery_tour.py
"""

from cct.provider import RandomSource, _default_boosted
from cct.randcheck import (BLOCK_BYTES_SMALL, analyze_randomness,
                           byte_distribution_profile, run_battery)


def worst(results, count=5):
    return sorted(results, key=lambda kv: kv[1])[:count]


def main():
    good = RandomSource.uniform(1).bytes(6 * BLOCK_BYTES_SMALL)
    bad = RandomSource.biased_bytes(
        1, _default_boosted("demo"), 2.0).bytes(6 * BLOCK_BYTES_SMALL)

    print("battery over one 32 kB block of each source, worst p-values:")
    for label, material in (("uniform", good), ("biased ", bad)):
        results = run_battery(material[:BLOCK_BYTES_SMALL])
        print(f"  {label}:", ", ".join(
            f"{name}={p:.2e}" for name, p in worst(results)))

    for label, material in (("uniform", good), ("biased ", bad)):
        verdict = analyze_randomness(material, BLOCK_BYTES_SMALL)
        profile = byte_distribution_profile(material[:16 * 1024])
        print(f"{label}: battery weak={verdict.weak} "
              f"byte-profile biased={profile.biased} "
              f"(chi2 p={profile.p_value:.2e}, "
              f"{len(profile.boosted)} boosted values)")


if __name__ == "__main__":
    main()
