"""Generate one RSA key from every weak family the simulator knows and
run the key battery against them, plus a batch of sound keys as a
control. Each family falls to a different attack.

    python3 demos/factor_weak_keys.py
"""

import time

from cct import keycheck, keys
from cct.keycheck import PublicKey
from cct.provider import RandomSource


def main():
    src = RandomSource.uniform(99)
    suspects = []
    for family in keys.WEAK_FAMILIES:
        name = "shared:demo" if family == "shared" else family
        suspects.append((family, keys.generate_weak_rsa_key(src, name)))
        if family == "shared":  # a single shared-prime key is invisible;
            suspects.append((family, keys.generate_weak_rsa_key(src, name)))

    controls = [keys.generate_rsa_key(src) for _ in range(20)]
    battery_input = [
        PublicKey(f"{family}-{i}", km.public["n"], km.public["e"])
        for i, (family, km) in enumerate(suspects)
    ] + [PublicKey(f"sound-{i}", km.public["n"], km.public["e"])
         for i, km in enumerate(controls)]

    start = time.monotonic()
    findings = keycheck.run_key_battery(battery_input)
    elapsed = time.monotonic() - start

    print(f"battery over {len(battery_input)} keys in {elapsed:.1f}s, "
          f"{len(findings)} finding(s):")
    for f in findings:
        print(f"  {f.key_id:12s} {f.check_id:18s} {f.detail}")
    flagged = {f.key_id.rsplit("-", 1)[0] for f in findings}
    print("\nfamilies flagged:", ", ".join(sorted(flagged)))
    print("sound controls clean:",
          not any(f.key_id.startswith("sound") for f in findings))


if __name__ == "__main__":
    main()
