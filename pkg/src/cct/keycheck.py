"""Blind cryptanalysis of public keys: every check takes only (n, e) or an
EC public point and decides whether the key could have been produced by a
broken generator.

Per-key RSA checks run in a fixed order: Exponents, BitPatterns,
PermutedBitPatterns, ContinuedFractions, ROCA, ROCAVariant,
HighAndLowBitsEqual, SmallUpperDifferences, LowHammingWeight, Pollardpm1,
Fermat, then the configured denylists. GCD and GCDN1 run once over the
whole corpus. Every reported factorization is verified by multiplication
before emission; a recovered composite factor or invalid exponent turns
the finding into a corrupted-key report.
"""

from __future__ import annotations

import functools
import hashlib
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

import gmpy2
import numpy as np

from cct import ec
from cct.errors import MalformedPoint, MissingDenylist
from cct.records import Finding, FindingKind

DENYLIST_ENV = "CCT_DENYLIST_DIR"

STANDARD_EXPONENT = 65537
FERMAT_STEPS = 1 << 20
POLLARD_B1 = 100_000
MULTIPLIER_BOUND = 10      # coprime a,b bound for multiplier Fermat
MULTIPLIER_STEPS = 1 << 14
LIFTED_SHIFTS = (64, 128, 256)  # shared-low-bit widths t
LIFTED_STEPS = 1 << 14
LHW_MAX_WEIGHT = 3
GCDN1_BOUND = 1 << 64

# Named lists per denylist file stem
DENYLIST_CHECKS = {
    "keypair": "KeypairDenylist",
    "openssl": "OpensslDenylist",
    "unseeded_rand": "UnseededRand",
}


@dataclass
class KeyFinding:
    key_id: str
    kind: FindingKind
    check_id: str
    detail: str = ""
    factored: Optional[tuple[int, int]] = None
    evidence: dict = field(default_factory=dict)

    def to_finding(self) -> Finding:
        ev = {"check": self.check_id, "detail": self.detail, **self.evidence}
        if self.factored is not None:
            p, q = self.factored
            ev["factor_bits"] = [p.bit_length(), q.bit_length()]
        return Finding(kind=self.kind, group={"key_id": self.key_id},
                       evidence=ev)


@dataclass(frozen=True)
class PublicKey:
    key_id: str
    n: int
    e: int


# --- number theory helpers ---

def _isqrt(n: int) -> int:
    return int(gmpy2.isqrt(n))


def _is_prime(n: int) -> bool:
    return bool(gmpy2.is_prime(n))


@lru_cache(maxsize=4)
def _primes_below(bound: int) -> tuple[int, ...]:
    sieve = bytearray([1]) * bound
    sieve[0:2] = b"\x00\x00"
    for i in range(2, int(bound ** 0.5) + 1):
        if sieve[i]:
            sieve[i * i::i] = b"\x00" * len(sieve[i * i::i])
    return tuple(i for i in range(bound) if sieve[i])


# --- Fermat with quadratic-residue sieve ---

_SIEVE_MODULI = (64, 63, 65, 11)


@lru_cache(maxsize=1)
def _qr_tables() -> dict[int, np.ndarray]:
    tables = {}
    for m in _SIEVE_MODULI:
        allowed = np.zeros(m, dtype=bool)
        for r in range(m):
            allowed[r * r % m] = True
        tables[m] = allowed
    return tables


def fermat_factor(n: int, max_steps: int = FERMAT_STEPS,
                  start: Optional[int] = None,
                  stride: int = 1) -> Optional[tuple[int, int]]:
    """Difference-of-squares search: x in {start, start+stride, ...} with
    x^2 - n a perfect square gives n = (x-y)(x+y). Residue sieving
    discards ~99% of candidates before any big-integer work. Finds close
    factor pairs within max_steps; returns (smaller, larger) or None."""
    if n % 2 == 0:
        return (2, n // 2) if n > 2 else None
    if start is None:
        start = _isqrt(n)
        if start * start < n:
            start += 1
    tables = _qr_tables()
    chunk = 1 << 18
    for base in range(0, max_steps, chunk):
        count = min(chunk, max_steps - base)
        i = np.arange(count, dtype=np.int64)
        mask = np.ones(count, dtype=bool)
        x_base = start + base * stride
        for m, allowed in tables.items():
            r = (int(x_base % m) + i * int(stride % m)) % m
            v = (r * r - int(n % m)) % m
            mask &= allowed[v]
        for off in np.flatnonzero(mask):
            x = x_base + int(off) * stride
            y2 = x * x - n
            if y2 >= 0 and gmpy2.is_square(y2):
                y = _isqrt(y2)
                p, q = x - y, x + y
                if 1 < p < n and p * q == n:
                    return p, q
    return None


# --- Pollard p-1 ---

@lru_cache(maxsize=1)
def _pollard_exponent() -> int:
    e = 1
    for p in _primes_below(POLLARD_B1):
        e *= p ** int(math.log(POLLARD_B1, p))
    return e


def pollard_pm1(n: int, b1: int = POLLARD_B1) -> Optional[int]:
    """One-stage p-1 with a fixed power-smooth exponent."""
    if b1 == POLLARD_B1:
        exponent = _pollard_exponent()
    else:
        exponent = 1
        for p in _primes_below(b1):
            exponent *= p ** int(math.log(b1, p))
    a = int(gmpy2.powmod(2, exponent, n))
    g = int(gmpy2.gcd(a - 1, n))
    if 1 < g < n:
        return g
    return None


# --- factoring from an approximate factor ---

def factor_with_guess(n: int, guess: int, steps: int = 8,
                      k_min: int = 1 << 170,
                      windows: int = 3) -> Optional[tuple[int, int]]:
    """Factor n given an approximation `guess` of one prime factor.

    For convergents h/k of guess/(n//guess), x near 2*sqrt(h*k*n) with
    x^2 - 4*h*k*n square gives x = h*q + k*p. A convergent with k ~ 2^170
    keeps the residual (h*q - k*p)^2 under 4*h*k*n per step for any
    |p - guess| up to ~2^170, far beyond what the structured guesses need,
    so a handful of Fermat steps on the first few convergents past k_min
    suffice.
    """
    if guess <= 1 or guess >= n:
        return None
    q0 = n // guess
    if q0 <= 1:
        return None
    a, b = guess, q0
    h_prev, h = 1, 0
    k_prev, k = 0, 1
    tried = 0
    while b and tried < windows:
        quot = a // b
        a, b = b, a - quot * b
        h_prev, h = h, quot * h + h_prev
        k_prev, k = k, quot * k + k_prev
        if k < k_min:
            continue
        tried += 1
        target = 4 * h * k * n
        x = _isqrt(target)
        if x * x < target:
            x += 1
        for _ in range(steps):
            y2 = x * x - target
            if gmpy2.is_square(y2):
                y = _isqrt(y2)
                for cand in (x + y, x - y):
                    g = int(gmpy2.gcd(cand, n))
                    if 1 < g < n:
                        return g, n // g
            x += 1
    return None


# --- structured candidate enumerations ---

@functools.lru_cache(maxsize=None)
def _fillings(max_width: int = 8) -> dict[int, int]:
    """Repeated-pattern fillings of 512 bits, keyed value -> pattern width.
    Raw fillings catch exact composite divisors (the corrupt family);
    the generator's primes sit just above the top-and-bottom-forced
    variant, within factor_with_guess tolerance."""
    out: dict[int, int] = {}
    for width in range(2, max_width + 1):
        for pattern in range(1 << width):
            filling = 0
            for _ in range(512 // width + 1):
                filling = (filling << width) | pattern
            filling &= (1 << 512) - 1
            for variant in (filling, filling | (1 << 511) | 1):
                if variant > 1:
                    out.setdefault(variant, width)
    return out


def _rotations(value: int, width: int) -> list[int]:
    """512-bit cyclic rotations of a filling by sub-pattern offsets."""
    mask = (1 << 512) - 1
    out = []
    for shift in range(1, width):
        out.append(((value >> shift) | (value << (512 - shift))) & mask)
    return out


@functools.lru_cache(maxsize=None)
def sparse_centers(c_bound: int = 1 << 20) -> list[int]:
    """Majority-zero family centers: 2^511 + [2^510] + [2^t]; any
    offset |c| <= c_bound is swallowed by factor_with_guess, whose
    tolerance dwarfs the configured bound."""
    del c_bound  # kept as the documented config knob; tolerance exceeds it
    centers = [1 << 511, (1 << 511) + (1 << 510)]
    for t in range(32, 481, 32):
        centers.append((1 << 511) + (1 << t))
        centers.append((1 << 511) + (1 << 510) + (1 << t))
    return centers


@functools.lru_cache(maxsize=1)
def _pattern_tables() -> tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]:
    """Precomputed candidate tables shared across keys: fillings, their
    cyclic rotations, and the top-forced fillings used as guesses."""
    fillings = _fillings()
    rotated = sorted({rot for cand, width in fillings.items()
                      for rot in _rotations(cand, width) if rot > 1})
    forced = sorted({v for v in fillings if v & (1 << 511)})
    return tuple(fillings), tuple(rotated), tuple(forced)


def pattern_factor(n: int) -> Optional[tuple[int, int, str]]:
    """BitPatterns / PermutedBitPatterns / majority-zero factoring.

    Tests exact divisibility by repeated-pattern fillings and their
    cyclic rotations, then approximate-factor search around the forced
    fillings and the sparse centers. Returns (p, q, family) with
    p * q == n, or None."""
    fillings, rotated, forced = _pattern_tables()
    for cand in fillings:
        if n % cand == 0:
            return cand, n // cand, "repeat"
    for rot in rotated:
        if n % rot == 0:
            return rot, n // rot, "rotated"
    for guess in forced:
        hit = factor_with_guess(n, guess)
        if hit is not None:
            return hit[0], hit[1], "repeat"
    for guess in sparse_centers():
        hit = factor_with_guess(n, guess)
        if hit is not None:
            return hit[0], hit[1], "sparse"
    return None


def low_hamming_weight(n: int,
                       max_weight: int = LHW_MAX_WEIGHT) -> Optional[tuple[int, int]]:
    """Divisibility by 512-bit odd candidates of Hamming weight <=
    max_weight with the top bit set: 2^511 + 1 and 2^511 + 2^i + 1."""
    cands = []
    if max_weight >= 2:
        cands.append((1 << 511) + 1)
    if max_weight >= 3:
        cands.extend((1 << 511) + (1 << i) + 1 for i in range(1, 511))
    for cand in cands:
        if n % cand == 0:
            return cand, n // cand
    return None


# --- difference-structure factoring ---

def _sqrt_mod_2k(n: int, k: int) -> Optional[int]:
    """Hensel-lifted square root of n modulo 2^k (k >= 3, n odd)."""
    if n % 8 != 1:
        return None
    r = 1
    for i in range(3, k):
        if (r * r - n) >> i & 1:
            r += 1 << (i - 1)
    return r


def lifted_fermat(n: int, t: int,
                  max_steps: int = LIFTED_STEPS) -> Optional[tuple[int, int]]:
    """Factors n = p*q when p = q mod 2^t: x = (p+q)/2 is then a square
    root of n modulo 2^(2t-2), so the Fermat search can stride by
    2^(2t-2) from each of the four root classes."""
    k = 2 * t - 2
    root = _sqrt_mod_2k(n, k)
    if root is None:
        return None
    mod = 1 << k
    x0 = _isqrt(n)
    if x0 * x0 < n:
        x0 += 1
    for r in (root, mod - root, (root + mod // 2) % mod,
              (mod - root + mod // 2) % mod):
        start = x0 + ((r - x0) % mod)
        hit = fermat_factor(n, max_steps=max_steps, start=start, stride=mod)
        if hit is not None:
            return hit
    return None


def multiplier_fermat(n: int, bound: int = MULTIPLIER_BOUND,
                      max_steps: int = MULTIPLIER_STEPS
                      ) -> Optional[tuple[int, int, tuple[int, int]]]:
    """Continued-fraction family: q near (a/b)*p makes a*p and b*q close,
    so Fermat on a*b*n (4*a*b*n when a*b is even, which has no odd
    difference-of-squares form) finds them. Returns (p, q, (a, b))."""
    for a in range(1, bound + 1):
        for b in range(1, a + 1):
            if math.gcd(a, b) != 1 or (a, b) == (1, 1):
                continue
            m = a * b * n
            if m % 2 == 0:
                m *= 4
            hit = fermat_factor(m, max_steps=max_steps)
            if hit is None:
                continue
            for part in hit:
                g = int(gmpy2.gcd(part, n))
                if 1 < g < n:
                    return g, n // g, (a, b)
    return None


def structured_diff_factor(n: int,
                           fermat_steps: int = FERMAT_STEPS,
                           lifted_shifts: Sequence[int] = LIFTED_SHIFTS,
                           multiplier_bound: int = MULTIPLIER_BOUND
                           ) -> Optional[tuple[int, int]]:
    """Close primes, shared-low-bit primes, and small-rational-ratio
    primes, in that order; the per-key battery calls the three parts
    separately for check attribution."""
    hit = fermat_factor(n, max_steps=fermat_steps)
    if hit is not None:
        return hit
    for t in lifted_shifts:
        hit = lifted_fermat(n, t)
        if hit is not None:
            return hit
    mhit = multiplier_fermat(n, bound=multiplier_bound)
    if mhit is not None:
        return mhit[0], mhit[1]
    return None


# --- structured-prime fingerprint (subgroup membership) ---

ROCA_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59,
               61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127,
               131, 137, 139, 149, 151, 157, 163, 167, 173)
ROCA_VARIANT_GENERATORS = (65537, 3)


@lru_cache(maxsize=None)
def _subgroup_sets(generator: int) -> tuple[frozenset[int], ...]:
    sets = []
    for r in ROCA_PRIMES:
        if generator % r == 0:
            # generator collapses mod r; no constraint from this prime
            sets.append(frozenset(range(r)))
            continue
        members = set()
        x = 1
        while True:
            members.add(x)
            x = x * generator % r
            if x == 1:
                break
        sets.append(frozenset(members))
    return tuple(sets)


def roca_fingerprint(n: int, generator: int = 65537) -> bool:
    """n mod r lies in the subgroup generated by `generator` for every
    small prime r: the signature of k*M + g^a structured primes. Inputs
    smaller than the fingerprint's modulus base are vacuous and return
    false."""
    if n.bit_length() < 512:
        return False
    for r, members in zip(ROCA_PRIMES, _subgroup_sets(generator)):
        if n % r not in members:
            return False
    return True


def roca_variant_fingerprint(n: int) -> bool:
    """Relaxed form: fingerprint holds for any of the variant generators."""
    return any(roca_fingerprint(n, g) for g in ROCA_VARIANT_GENERATORS)


# --- batch GCD ---

def _product_tree(values: list[int]) -> list[list[int]]:
    levels = [list(values)]
    while len(levels[-1]) > 1:
        cur = levels[-1]
        levels.append([cur[i] * cur[i + 1] if i + 1 < len(cur) else cur[i]
                       for i in range(0, len(cur), 2)])
    return levels


def _batch_gcd_each(values: Sequence[int]) -> list[int]:
    """g[i] = gcd(values[i], product of all the others); product and
    remainder trees keep it to O(n log n) big multiplications."""
    vals = [int(v) for v in values]
    if len(vals) < 2:
        return [1] * len(vals)
    levels = _product_tree(vals)
    rems = levels[-1]
    for level in reversed(levels[:-1]):
        rems = [int(rems[i // 2] % (v * v)) for i, v in enumerate(level)]
    return [int(gmpy2.gcd(r // v, v)) for r, v in zip(rems, vals)]


def batch_gcd(moduli: Sequence[int]) -> dict[int, set[int]]:
    """Shared factors per modulus. When gcd(n_i, product/n_i) = n_i (both
    primes shared, or a duplicate modulus) the answer falls back to
    pairwise gcd for that modulus."""
    vals = [int(v) for v in moduli]
    each = _batch_gcd_each(vals)
    out: dict[int, set[int]] = {}
    for i, (n, g) in enumerate(zip(vals, each)):
        factors = out.setdefault(n, set())
        if g == 1:
            continue
        if g < n:
            factors.add(g)
        else:
            for j, other in enumerate(vals):
                if j == i:
                    continue
                pg = int(gmpy2.gcd(n, other))
                if pg > 1:
                    factors.add(pg)
    return out


def gcd_n_minus_1(moduli: Sequence[int],
                  bound: int = GCDN1_BOUND) -> list[tuple[int, int, int]]:
    """Pairs (i, j, g) with g = gcd(n_i - 1, n_j - 1) >= bound: the
    shared-structure screen over n-1 values. Batch GCD prefilters which
    moduli share anything large before the pairwise pass."""
    vals = [int(v) - 1 for v in moduli]
    if len(vals) < 2:
        return []
    each = _batch_gcd_each(vals)
    suspects = [i for i, g in enumerate(each) if g >= bound]
    out = []
    for ii, i in enumerate(suspects):
        for j in suspects[ii + 1:]:
            g = int(gmpy2.gcd(vals[i], vals[j]))
            if g >= bound:
                out.append((i, j, g))
    return out


# --- denylists ---

def modulus_digest(n: int) -> str:
    raw = n.to_bytes((n.bit_length() + 7) // 8, "big")
    return hashlib.sha256(raw).hexdigest()


def _read_denylist(path: Path) -> frozenset[str]:
    entries = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if len(line) != 64 or any(c not in "0123456789abcdef"
                                      for c in line.lower()):
                raise MissingDenylist(str(path))
            entries.add(line.lower())
    return frozenset(entries)


def load_denylists(directory: Optional[str] = None) -> dict[str, frozenset[str]]:
    """Check-id -> digest set for every *.denylist file in `directory`
    (default $CCT_DENYLIST_DIR). Each line is a SHA-256 of modulus bytes."""
    directory = directory or os.environ.get(DENYLIST_ENV)
    if not directory:
        return {}
    root = Path(directory)
    if not root.is_dir():
        raise MissingDenylist(str(root))
    out = {}
    for path in sorted(root.glob("*.denylist")):
        check = DENYLIST_CHECKS.get(path.stem, f"Denylist:{path.stem}")
        out[check] = _read_denylist(path)
    return out


def denylist_lookup(n: int,
                    lists: dict[str, frozenset[str]]) -> list[tuple[str, str]]:
    digest = modulus_digest(n)
    return [(check, digest) for check, entries in sorted(lists.items())
            if digest in entries]


# --- corrupted-key classification ---

def corrupted_reason(n: int, e: int,
                     factored: Optional[tuple[int, int]] = None) -> Optional[str]:
    """Why (n, e, recovered factors) cannot belong to a sound two-prime
    key: invalid exponent (even or < 3, hence gcd(e, lambda) != 1), or a
    recovered factor that fails a primality test."""
    if e < 3 or e % 2 == 0:
        return "invalid exponent"
    if factored is not None:
        p, q = factored
        if not _is_prime(p) or not _is_prime(q):
            return "composite factor"
        if gmpy2.gcd(e, gmpy2.lcm(p - 1, q - 1)) != 1:
            return "exponent not invertible"
    return None


# --- EC public key checks ---

def analyze_ec_key(point: tuple[int, int], key_id: str = "") -> list[KeyFinding]:
    """Field range, curve membership, identity, and full-order checks.
    A failing key is corrupted material, not a factorable weakness."""
    x, y = point
    bad: list[tuple[str, str]] = []
    if not (0 <= x < ec.P and 0 <= y < ec.P):
        bad.append(("EcFieldRange", f"{x.bit_length()}/{y.bit_length()} bit coords"))
    elif not ec.is_on_curve((x, y)):
        bad.append(("EcOnCurve", "curve equation does not hold"))
    elif (x, y) == (0, 0):
        bad.append(("EcIdentity", "point at infinity encoding"))
    else:
        # order check without reducing the scalar: (N-1)*Q + Q must be
        # the identity exactly when Q has order N
        almost = ec.scalar_mult(ec.N - 1, (x, y))
        if ec.point_add(almost, (x, y)) is not None:
            bad.append(("EcGroupOrder", "N*Q is not the identity"))
    return [KeyFinding(key_id, FindingKind.CORRUPTED_RSA_KEY, check, detail)
            for check, detail in bad]


def decode_ec_point(blob: bytes) -> tuple[int, int]:
    try:
        return ec.decode_point(blob)
    except Exception as exc:
        raise MalformedPoint(str(exc)) from exc


# --- per-key and corpus batteries ---

def _emit(key: PublicKey, check_id: str, detail: str,
          factored: Optional[tuple[int, int]] = None) -> KeyFinding:
    kind = FindingKind.WEAK_RSA_KEY
    if factored is not None:
        p, q = factored
        assert p * q == key.n and 1 < p < key.n and 1 < q < key.n
    reason = corrupted_reason(key.n, key.e, factored)
    if reason is not None:
        kind = FindingKind.CORRUPTED_RSA_KEY
        detail = f"{detail}; {reason}" if detail else reason
    return KeyFinding(key.key_id, kind, check_id, detail, factored)


def analyze_rsa_key(key: PublicKey,
                    denylists: Optional[dict[str, frozenset[str]]] = None,
                    multiplier_bound: int = MULTIPLIER_BOUND,
                    fermat_steps: int = FERMAT_STEPS) -> list[KeyFinding]:
    n, e = key.n, key.e
    out: list[KeyFinding] = []

    if e != STANDARD_EXPONENT:
        out.append(_emit(key, "Exponents", f"e={e}"))

    hit = pattern_factor(n)
    if hit is not None:
        p, q, family = hit
        check = "PermutedBitPatterns" if family == "rotated" else "BitPatterns"
        out.append(_emit(key, check, family, (p, q)))

    mhit = multiplier_fermat(n, bound=multiplier_bound)
    if mhit is not None:
        p, q, (a, b) = mhit
        out.append(_emit(key, "ContinuedFractions", f"multiplier {a}/{b}",
                         (p, q)))

    if roca_fingerprint(n):
        out.append(_emit(key, "ROCA", "subgroup fingerprint, generator 65537"))
    elif roca_variant_fingerprint(n):
        out.append(_emit(key, "ROCAVariant",
                         "subgroup fingerprint, variant generator"))

    for t in LIFTED_SHIFTS:
        lhit = lifted_fermat(n, t)
        if lhit is not None:
            p, q = lhit
            shared_top = 512 - (p ^ q).bit_length()
            check = ("HighAndLowBitsEqual" if shared_top >= t
                     else "SmallUpperDifferences")
            out.append(_emit(key, check, f"p = q mod 2^{t}", (p, q)))
            break

    whit = low_hamming_weight(n)
    if whit is not None:
        out.append(_emit(key, "LowHammingWeight", "sparse divisor", whit))

    f = pollard_pm1(n)
    if f is not None:
        out.append(_emit(key, "Pollardpm1", f"B1={POLLARD_B1}", (f, n // f)))

    fhit = fermat_factor(n, max_steps=fermat_steps)
    if fhit is not None:
        out.append(_emit(key, "Fermat", "close prime pair", fhit))

    if denylists:
        for check, digest in denylist_lookup(n, denylists):
            out.append(_emit(key, check, f"digest {digest[:16]}..."))

    return _dedup(out)


def _dedup(findings: list[KeyFinding]) -> list[KeyFinding]:
    seen = set()
    out = []
    for f in findings:
        ident = (f.key_id, f.check_id)
        if ident not in seen:
            seen.add(ident)
            out.append(f)
    return out


def cross_key_checks(rsa_keys: Sequence[PublicKey]) -> list[KeyFinding]:
    """Corpus-level GCD over moduli and over n-1 values. Duplicate moduli
    are collapsed first so re-imports of one key do not self-collide."""
    by_n: dict[int, PublicKey] = {}
    for key in rsa_keys:
        by_n.setdefault(key.n, key)
    uniq = list(by_n.values())
    if len(uniq) < 2:
        return []
    out: list[KeyFinding] = []
    moduli = [k.n for k in uniq]
    shared = batch_gcd(moduli)
    for key in uniq:
        for g in sorted(shared.get(key.n, ())):
            if g == key.n:
                continue
            factored = (g, key.n // g) if key.n % g == 0 else None
            out.append(_emit(key, "GCD", f"shared {g.bit_length()}-bit factor",
                             factored))
    for i, j, g in gcd_n_minus_1(moduli):
        for key in (uniq[i], uniq[j]):
            out.append(_emit(key, "GCDN1",
                             f"gcd(n-1, n'-1) has {g.bit_length()} bits"))
    return _dedup(out)


def run_key_battery(rsa_keys: Sequence[PublicKey],
                    ec_points: Sequence[tuple[str, tuple[int, int]]] = (),
                    denylist_dir: Optional[str] = None,
                    multiplier_bound: int = MULTIPLIER_BOUND,
                    fermat_steps: int = FERMAT_STEPS) -> list[KeyFinding]:
    denylists = load_denylists(denylist_dir)
    out: list[KeyFinding] = []
    for key in rsa_keys:
        out.extend(analyze_rsa_key(key, denylists,
                                   multiplier_bound=multiplier_bound,
                                   fermat_steps=fermat_steps))
    out.extend(cross_key_checks(rsa_keys))
    for key_id, point in ec_points:
        out.extend(analyze_ec_key(point, key_id))
    return out


def keys_from_records(records) -> tuple[list[PublicKey],
                                        list[tuple[str, tuple[int, int]]]]:
    """Distinct public keys present in a dataset, with content-derived
    ids. Malformed EC encodings surface as MalformedPoint."""
    from cct.keys import decode_rsa_public
    from cct.records import Op, Suite
    rsa_suites = {Suite.RSA_SIGN_PKCS1, Suite.RSA_SIGN_PSS,
                  Suite.RSA_CRYPT_OAEP, Suite.RSA_CRYPT_PKCS1}
    ec_suites = {Suite.EC_SIGN, Suite.EC_EXCHANGE}
    rsa: dict[bytes, PublicKey] = {}
    ec_pts: dict[bytes, tuple[str, tuple[int, int]]] = {}
    for record in records:
        if record.op not in (Op.KEY_GEN, Op.KEY_IMPORT) or not record.public_key:
            continue
        blob = record.public_key
        key_id = hashlib.sha256(blob).hexdigest()[:16]
        if record.suite in rsa_suites and blob not in rsa:
            n, e = decode_rsa_public(blob)
            rsa[blob] = PublicKey(key_id, n, e)
        elif record.suite in ec_suites and blob not in ec_pts:
            ec_pts[blob] = (key_id, decode_ec_point(blob))
    return list(rsa.values()), list(ec_pts.values())


def check_counts(findings: Iterable[KeyFinding]) -> dict[str, int]:
    """Per-check tally in battery order, for the findings report."""
    order = ["Exponents", "BitPatterns", "PermutedBitPatterns",
             "ContinuedFractions", "ROCA", "ROCAVariant",
             "HighAndLowBitsEqual", "SmallUpperDifferences",
             "LowHammingWeight", "Pollardpm1", "Fermat",
             "KeypairDenylist", "OpensslDenylist", "UnseededRand",
             "GCD", "GCDN1"]
    counts: dict[str, int] = {}
    for f in findings:
        counts[f.check_id] = counts.get(f.check_id, 0) + 1
    ordered = {c: counts.pop(c) for c in order if c in counts}
    ordered.update(sorted(counts.items()))
    return ordered
