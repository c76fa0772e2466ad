"""The individual randomness tests. Each function takes a 0/1 uint8 array
and yields (test_id, p_value) pairs; the battery fixes the ordering and
the per-block-size parameterization.

Statistics follow the classical frequency/runs/template/complexity suite;
the scatter and large-matrix variants stress strided subsequences and
long-range linear structure that the blocked forms cannot see.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Iterator

import numpy as np
from scipy.special import erfc, gammaincc
from scipy.stats import norm

from cct.errors import InsufficientData
from cct.randcheck import bitops

P_MIN = 5e-324  # smallest positive float; p-value underflow clamps here


def _clamp(p: float) -> float:
    if not np.isfinite(p) or p <= 0.0:
        return P_MIN
    return min(float(p), 1.0)


def _igamc(a: float, x: float) -> float:
    return _clamp(gammaincc(a, x))


# --- frequency family ---

def frequency(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    s = 2 * int(bits.sum()) - n
    yield "Frequency", _clamp(erfc(abs(s) / math.sqrt(2 * n)))


def block_frequency(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    m = n // 64
    nblk = n // m
    pi = bits[:nblk * m].reshape(nblk, m).mean(axis=1)
    chi2 = 4.0 * m * float(((pi - 0.5) ** 2).sum())
    yield "BlockFrequency", _igamc(nblk / 2.0, chi2 / 2.0)


def runs(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    pi = float(bits.mean())
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        yield "Runs", P_MIN
        return
    v = 1 + int((bits[1:] != bits[:-1]).sum())
    num = abs(v - 2.0 * n * pi * (1 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1 - pi)
    yield "Runs", _clamp(erfc(num / den))


_LONGEST_RUNS_PARAMS = {
    128: (4, 9, np.array([0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124])),
    10_000: (10, 16, np.array([0.0882, 0.2092, 0.2483, 0.1933, 0.1208,
                               0.0675, 0.0727])),
}


def _longest_one_runs(rows: np.ndarray) -> np.ndarray:
    """Per-row longest run of ones for a 2-D 0/1 array."""
    c = rows.cumsum(axis=1)
    reset = np.where(rows == 0, c, 0)
    reset = np.maximum.accumulate(reset, axis=1)
    return (c - reset).max(axis=1)


def longest_runs(bits: np.ndarray, m: int) -> Iterator[tuple[str, float]]:
    lo, hi, pi = _LONGEST_RUNS_PARAMS[m]
    n = len(bits)
    nblk = n // m
    longest = _longest_one_runs(bits[:nblk * m].reshape(nblk, m))
    classes = np.clip(longest, lo, hi) - lo
    v = np.bincount(classes, minlength=hi - lo + 1).astype(float)
    chi2 = float((((v - nblk * pi) ** 2) / (nblk * pi)).sum())
    yield "LongestRunOfOnes", _igamc(len(pi) / 2.0 - 0.5, chi2 / 2.0)


# --- matrix rank ---

_RANK_32_PI = np.array([0.2888, 0.5776, 0.1336])


def binary_matrix_rank(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    nmat = n // 1024
    counts = np.zeros(3)
    for i in range(nmat):
        rows = bitops.matrix_rows_from_bits(bits[i * 1024:(i + 1) * 1024], 32)
        rank = int(bitops.gf2_rank(rows, 32))
        counts[min(32 - rank, 2)] += 1
    chi2 = float((((counts - nmat * _RANK_32_PI) ** 2)
                  / (nmat * _RANK_32_PI)).sum())
    yield "BinaryMatrixRank", _igamc(1.0, chi2 / 2.0)


@lru_cache(maxsize=None)
def _rank_cdf(m: int) -> np.ndarray:
    """cdf[r] = P(rank <= r) for a uniform random m x m GF(2) matrix,
    evaluated in log space; entries below float range are 0."""
    logp = np.full(m + 1, -np.inf)
    for r in range(max(0, m - 64), m + 1):
        # log2 P(rank = r)
        acc = (r * (2 * m - r) - m * m) * math.log(2)
        for i in range(r):
            acc += 2 * math.log1p(-2.0 ** (i - m)) - math.log1p(-2.0 ** (i - r))
        logp[r] = acc
    p = np.exp(logp)
    return np.cumsum(p)


def large_binary_matrix_rank(bits: np.ndarray,
                             sizes: tuple[int, ...]) -> Iterator[tuple[str, float]]:
    """One m x m matrix per size from the block prefix; the p-value is the
    left tail P(rank <= observed) of the uniform-matrix rank law."""
    for m in sizes:
        rows = bitops.matrix_rows_from_bits(bits, m)
        rank = int(bitops.gf2_rank(rows, m))
        cdf = _rank_cdf(m)
        yield f"LargeBinaryMatrixRank[m={m}]", _clamp(cdf[rank])


# --- spectral ---

def spectral(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    x = 2.0 * bits - 1.0
    mod = np.abs(np.fft.rfft(x)[:n // 2])
    t = math.sqrt(n * math.log(1 / 0.05))
    n1 = int((mod < t).sum())
    n0 = 0.95 * n / 2.0
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    yield "Spectral", _clamp(erfc(abs(d) / math.sqrt(2)))


# --- template matching ---

TEMPLATE_LEN = 12
NUM_TEMPLATES = 588


@lru_cache(maxsize=None)
def aperiodic_templates(m: int = TEMPLATE_LEN,
                        limit: int = NUM_TEMPLATES) -> tuple[int, ...]:
    """First `limit` unbordered (self-overlap-free) m-bit templates in
    lexicographic order of their bit strings."""
    out = []
    for t in range(1 << m):
        bordered = False
        for k in range(1, m):
            if (t >> (m - k)) == (t & ((1 << k) - 1)):
                bordered = True
                break
        if not bordered:
            out.append(t)
            if len(out) == limit:
                break
    return tuple(out)


def _window_codes(bits: np.ndarray, m: int) -> np.ndarray:
    codes = np.zeros(len(bits) - m + 1, dtype=np.int32)
    for j in range(m):
        codes = (codes << 1) | bits[j:len(bits) - m + 1 + j]
    return codes


def non_overlapping_templates(bits: np.ndarray,
                              nblocks: int = 8) -> Iterator[tuple[str, float]]:
    n = len(bits)
    m = TEMPLATE_LEN
    blk = n // nblocks
    codes = _window_codes(bits.astype(np.int32), m)
    counts = np.zeros((nblocks, 1 << m), dtype=np.int64)
    for j in range(nblocks):
        # windows fully inside block j
        seg = codes[j * blk:(j + 1) * blk - m + 1]
        counts[j] = np.bincount(seg, minlength=1 << m)
    mu = (blk - m + 1) / 2.0 ** m
    var = blk * (2.0 ** -m - (2.0 * m - 1) / 2.0 ** (2 * m))
    templates = np.array(aperiodic_templates(), dtype=np.int64)
    w = counts[:, templates].astype(float)  # nblocks x ntemplates
    chi2 = (((w - mu) ** 2) / var).sum(axis=0)
    pvals = gammaincc(nblocks / 2.0, chi2 / 2.0)
    for t, p in zip(templates, pvals):
        yield f"NonOverlappingTemplate[t={t:03x}]", _clamp(p)


_OVERLAP_PI = np.array([0.364091, 0.185659, 0.139381,
                        0.100571, 0.070432, 0.139865])


def overlapping_template(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    m, blk = 9, 1032
    n = len(bits)
    nblk = n // blk
    rows = bits[:nblk * blk].reshape(nblk, blk).astype(np.int32)
    c = np.zeros((nblk, blk + 1), dtype=np.int32)
    np.cumsum(rows, axis=1, out=c[:, 1:])
    sums = c[:, m:] - c[:, :-m]  # sliding sums of width m
    hits = (sums == m).sum(axis=1)
    v = np.bincount(np.clip(hits, 0, 5), minlength=6).astype(float)
    exp = nblk * _OVERLAP_PI
    chi2 = float((((v - exp) ** 2) / exp).sum())
    yield "OverlappingTemplate", _igamc(5 / 2.0, chi2 / 2.0)


# --- universal statistical test ---

_UNIVERSAL_L = 6
_UNIVERSAL_EXPECTED = 5.2177052
_UNIVERSAL_VAR = 2.954
_UNIVERSAL_MIN_BITS = 387_840  # smallest n valid for L=6


def universal(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    if n < _UNIVERSAL_MIN_BITS:
        raise InsufficientData("Universal", _UNIVERSAL_MIN_BITS, n)
    L = _UNIVERSAL_L
    q = 10 * (1 << L)
    nblk = n // L
    k = nblk - q
    powers = (1 << np.arange(L - 1, -1, -1)).astype(np.int32)
    codes = bits[:nblk * L].reshape(nblk, L).astype(np.int32) @ powers
    total = 0.0
    for v in range(1 << L):
        idx = np.flatnonzero(codes == v) + 1  # 1-based block positions
        prev = np.concatenate(([0], idx[:-1]))
        dist = (idx - prev).astype(float)
        sel = idx > q
        total += float(np.log2(dist[sel]).sum())
    fn = total / k
    c = 0.7 - 0.8 / L + (4 + 32.0 / L) * k ** (-3.0 / L) / 15.0
    sigma = c * math.sqrt(_UNIVERSAL_VAR / k)
    yield "Universal", _clamp(erfc(abs(fn - _UNIVERSAL_EXPECTED)
                                   / (math.sqrt(2) * sigma)))


# --- linear complexity ---

_LC_PI = np.array([0.010417, 0.03125, 0.125, 0.5, 0.25, 0.0625, 0.020833])
LC_BLOCK_SIZES = (500, 600, 700, 800, 900, 1000, 1100, 1200)


def _lc_chi2(bits: np.ndarray, m: int) -> float:
    nblk = len(bits) // m
    mu = m / 2.0 + (9 + (-1) ** (m + 1)) / 36.0 \
        - (m / 3.0 + 2.0 / 9) * 2.0 ** -min(m, 1074)
    sign = 1.0 if m % 2 == 0 else -1.0
    t = np.empty(nblk)
    for i in range(nblk):
        L = bitops.berlekamp_massey_words(bits[i * m:(i + 1) * m])
        t[i] = sign * (L - mu) + 2.0 / 9
    edges = np.array([-2.5, -1.5, -0.5, 0.5, 1.5, 2.5])
    v = np.bincount(np.searchsorted(edges, t, side="left"),
                    minlength=7).astype(float)
    exp = nblk * _LC_PI
    return float((((v - exp) ** 2) / exp).sum())


def linear_complexity(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    for m in LC_BLOCK_SIZES:
        yield f"LinearComplexity[M={m}]", _igamc(3.0, _lc_chi2(bits, m) / 2.0)


SCATTER_STRIDES = (2, 3, 4, 5, 6, 7)
SCATTER_BLOCK = 500


def linear_complexity_scatter(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    """Blocked linear complexity on stride-s subsequences: periodic
    structure invisible to the contiguous test shows up here."""
    for s in SCATTER_STRIDES:
        sub = np.ascontiguousarray(bits[::s])
        yield f"LinearComplexityScatter[s={s}]", \
            _igamc(3.0, _lc_chi2(sub, SCATTER_BLOCK) / 2.0)


# --- serial / approximate entropy ---

SERIAL_M_MAX = 22
SERIAL_M_MIN = 3
APEN_M_MIN = 3
APEN_M_MAX = 16


def _cyclic_counts_chain(bits: np.ndarray, m_max: int) -> dict[int, np.ndarray]:
    """Window-pattern counts for every order 1..m_max over the cyclic
    stream, built from one bincount at m_max and marginalized down."""
    n = len(bits)
    ext = np.concatenate([bits, bits[:m_max - 1]]).astype(np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for j in range(m_max):
        codes = (codes << 1) | ext[j:j + n]
    counts = {m_max: np.bincount(codes, minlength=1 << m_max)}
    for m in range(m_max - 1, 0, -1):
        counts[m] = counts[m + 1].reshape(-1, 2).sum(axis=1)
    return counts


def _psi_sq(counts: np.ndarray, n: int) -> float:
    m_bins = len(counts)
    return float((counts.astype(float) ** 2).sum()) * m_bins / n - n


def serial_and_apen(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    counts = _cyclic_counts_chain(bits, SERIAL_M_MAX)
    psi = {m: _psi_sq(c, n) for m, c in counts.items()}
    psi[0] = 0.0
    for m in range(SERIAL_M_MIN, SERIAL_M_MAX + 1):
        d1 = psi[m] - psi[m - 1]
        d2 = psi[m] - 2 * psi[m - 1] + psi[m - 2]
        yield f"Serial[m={m},d1]", _igamc(2.0 ** (m - 2), d1 / 2.0)
        yield f"Serial[m={m},d2]", _igamc(2.0 ** (m - 3), d2 / 2.0)
    # Approximate entropy via its quadratic form: 2n(ln2 - ApEn(m)) is
    # asymptotically the second difference of psi^2 at order m+1, with
    # 2^(m-1) degrees of freedom. Unlike the log-entropy plug-in, the
    # quadratic form keeps its chi-square calibration when 2^m is not
    # small against n (the collision-count variance matches exactly).
    for m in range(APEN_M_MIN, APEN_M_MAX + 1):
        chi2 = psi[m + 1] - 2 * psi[m] + psi[m - 1]
        yield f"ApproximateEntropy[m={m}]", _igamc(2.0 ** (m - 1), chi2 / 2.0)


# --- random walk family ---

def _cusum_p(z: int, n: int) -> float:
    sn = math.sqrt(n)
    k1 = np.arange((-n // z + 1) // 4, (n // z - 1) // 4 + 1)
    term1 = (norm.cdf((4 * k1 + 1) * z / sn)
             - norm.cdf((4 * k1 - 1) * z / sn)).sum()
    k2 = np.arange((-n // z - 3) // 4, (n // z - 1) // 4 + 1)
    term2 = (norm.cdf((4 * k2 + 3) * z / sn)
             - norm.cdf((4 * k2 + 1) * z / sn)).sum()
    return _clamp(1.0 - term1 + term2)


def _excursion_pi(x: int) -> np.ndarray:
    ax = abs(x)
    pi = np.empty(6)
    pi[0] = 1 - 1.0 / (2 * ax)
    for k in range(1, 5):
        pi[k] = (1.0 / (4 * ax * ax)) * (1 - 1.0 / (2 * ax)) ** (k - 1)
    pi[5] = (1.0 / (2 * ax)) * (1 - 1.0 / (2 * ax)) ** 4
    return pi


def random_walk(bits: np.ndarray) -> Iterator[tuple[str, float]]:
    n = len(bits)
    x = 2 * bits.astype(np.int64) - 1
    s = np.cumsum(x)
    yield "CusumForward", _cusum_p(int(np.abs(s).max()), n)
    s_back = np.cumsum(x[::-1])
    yield "CusumBackward", _cusum_p(int(np.abs(s_back).max()), n)

    zeros = np.flatnonzero(s == 0)
    # a cycle closes at each zero; the walk is padded with a final zero
    if len(zeros) == 0 or zeros[-1] != n - 1:
        cycle_ends = np.concatenate([zeros, [n - 1]])
    else:
        cycle_ends = zeros
    j = len(cycle_ends)
    for state in (-4, -3, -2, -1, 1, 2, 3, 4):
        pos = np.flatnonzero(s == state)
        cyc = np.searchsorted(cycle_ends, pos, side="left")
        visits = np.bincount(cyc, minlength=j)
        v = np.bincount(np.clip(visits, 0, 5), minlength=6).astype(float)
        exp = j * _excursion_pi(state)
        chi2 = float((((v - exp) ** 2) / exp).sum())
        yield f"RandomExcursions[x={state}]", _igamc(5 / 2.0, chi2 / 2.0)
    for state in list(range(-9, 0)) + list(range(1, 10)):
        xi = int((s == state).sum())
        denom = math.sqrt(2.0 * j * (4 * abs(state) - 2))
        yield f"RandomExcursionsVariant[x={state}]", \
            _clamp(erfc(abs(xi - j) / denom))
