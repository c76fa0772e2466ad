"""Word-packed GF(2) kernels: popcount, Berlekamp-Massey linear complexity
and matrix rank. Compiled with numba; the popcount goes through the LLVM
ctpop intrinsic so the per-word cost is a single instruction.
"""

from __future__ import annotations

import numpy as np
from numba import njit, types
from numba.extending import intrinsic
from numba.core import cgutils


@intrinsic
def _ctpop64(typingctx, value):
    sig = types.uint64(types.uint64)

    def codegen(context, builder, signature, args):
        (val,) = args
        fn = cgutils.get_or_insert_function(
            builder.module,
            cgutils.ir.FunctionType(cgutils.ir.IntType(64),
                                    [cgutils.ir.IntType(64)]),
            "llvm.ctpop.i64")
        return builder.call(fn, [val])

    return sig, codegen


def bits_from_bytes(data: bytes) -> np.ndarray:
    """MSB-first unpacking to a uint8 0/1 array."""
    return np.unpackbits(np.frombuffer(data, dtype=np.uint8))


def pack_bits_to_words(bits: np.ndarray) -> np.ndarray:
    """0/1 array -> uint64 words, bit i of the stream at word i//64,
    position 63-(i%64) (big-endian within the word)."""
    padded = np.zeros(-len(bits) % 64 + len(bits), dtype=np.uint8)
    padded[:len(bits)] = bits
    packed = np.packbits(padded)
    return packed.view(">u8").astype(np.uint64)


@njit(cache=True)
def popcount_words(words: np.ndarray) -> np.int64:
    total = np.uint64(0)
    for i in range(words.shape[0]):
        total += _ctpop64(words[i])
    return np.int64(total)


@njit(cache=True)
def berlekamp_massey_words(bits: np.ndarray) -> np.int64:
    """Linear complexity of a 0/1 sequence.

    C and B are word-packed connection polynomials (coefficient j at word
    j//64, bit j%64 from LSB). The discrepancy is the parity of C&s over
    the last L+1 positions, evaluated with ctpop on the packed stream.
    """
    n = bits.shape[0]
    nw = (n + 64) // 64 + 1
    c = np.zeros(nw, dtype=np.uint64)
    b = np.zeros(nw, dtype=np.uint64)
    t = np.zeros(nw, dtype=np.uint64)
    # s_packed[j//64] bit j%64 (LSB order) = bits[j]
    s = np.zeros(nw, dtype=np.uint64)
    for j in range(n):
        if bits[j]:
            s[j >> 6] |= np.uint64(1) << np.uint64(j & 63)
    c[0] = np.uint64(1)
    b[0] = np.uint64(1)
    L = 0
    m = -1
    for i in range(n):
        # discrepancy d = parity( sum_{j<=L} c_j * s_{i-j} )
        # shift s window so position (i-j) aligns with c_j:
        # rev window: need s[i], s[i-1], ..., s[i-L] against c[0..L]
        d = np.uint64(0)
        # evaluate wordwise: for word w of c, bits j in [64w, 64w+63]
        hi = L >> 6
        for w in range(hi + 1):
            cw = c[w]
            if cw == np.uint64(0):
                continue
            # gather s bits at positions i - (64w .. 64w+63) into a word
            base = i - (w << 6)
            sw = np.uint64(0)
            if base >= 63:
                # contiguous reversed read: bits base..base-63
                w0 = (base - 63) >> 6
                off = np.uint64((base - 63) & 63)
                lo_word = s[w0] >> off
                if off and w0 + 1 < nw:
                    lo_word |= s[w0 + 1] << np.uint64(64 - int(off))
                # lo_word bit t corresponds to s[base-63+t]; we need
                # reversed: position j (0..63) of window = s[base-j]
                sw = _bit_reverse64(lo_word)
            else:
                for j in range(64):
                    pos = base - j
                    if pos < 0:
                        break
                    if (s[pos >> 6] >> np.uint64(pos & 63)) & np.uint64(1):
                        sw |= np.uint64(1) << np.uint64(j)
            d ^= cw & sw
        if _ctpop64(d) & np.uint64(1):
            # c(x) += b(x) * x^(i-m)
            shift = i - m
            ws = shift >> 6
            bs = np.uint64(shift & 63)
            if 2 * L <= i:
                t[:] = c[:]
            for w in range(nw - ws):
                c[w + ws] ^= b[w] << bs
            if bs:
                for w in range(nw - ws - 1):
                    c[w + ws + 1] ^= b[w] >> np.uint64(64 - int(bs))
            if 2 * L <= i:
                L = i + 1 - L
                m = i
                b[:] = t[:]
    return np.int64(L)


@njit(cache=True)
def _bit_reverse64(v: np.uint64) -> np.uint64:
    v = ((v >> np.uint64(1)) & np.uint64(0x5555555555555555)) | \
        ((v & np.uint64(0x5555555555555555)) << np.uint64(1))
    v = ((v >> np.uint64(2)) & np.uint64(0x3333333333333333)) | \
        ((v & np.uint64(0x3333333333333333)) << np.uint64(2))
    v = ((v >> np.uint64(4)) & np.uint64(0x0F0F0F0F0F0F0F0F)) | \
        ((v & np.uint64(0x0F0F0F0F0F0F0F0F)) << np.uint64(4))
    v = ((v >> np.uint64(8)) & np.uint64(0x00FF00FF00FF00FF)) | \
        ((v & np.uint64(0x00FF00FF00FF00FF)) << np.uint64(8))
    v = ((v >> np.uint64(16)) & np.uint64(0x0000FFFF0000FFFF)) | \
        ((v & np.uint64(0x0000FFFF0000FFFF)) << np.uint64(16))
    return (v >> np.uint64(32)) | (v << np.uint64(32))


@njit(cache=True)
def gf2_rank(rows: np.ndarray, ncols: int) -> np.int64:
    """Rank over GF(2); each matrix row is packed into words LSB-first
    (column c at word c//64, bit c%64). `rows` is (nrows, nwords)."""
    nrows, nwords = rows.shape
    work = rows.copy()
    rank = 0
    for col in range(ncols):
        w = col >> 6
        mask = np.uint64(1) << np.uint64(col & 63)
        pivot = -1
        for r in range(rank, nrows):
            if work[r, w] & mask:
                pivot = r
                break
        if pivot < 0:
            continue
        if pivot != rank:
            for k in range(nwords):
                tmp = work[pivot, k]
                work[pivot, k] = work[rank, k]
                work[rank, k] = tmp
        for r in range(nrows):
            if r != rank and (work[r, w] & mask):
                for k in range(nwords):
                    work[r, k] ^= work[rank, k]
        rank += 1
        if rank == nrows:
            break
    return np.int64(rank)


def matrix_rows_from_bits(bits: np.ndarray, size: int) -> np.ndarray:
    """First size*size bits as a packed (size, words) GF(2) matrix,
    row-major, column c LSB-first within words."""
    mat = bits[:size * size].reshape(size, size).astype(np.uint8)
    nwords = (size + 63) // 64
    rows = np.zeros((size, nwords), dtype=np.uint64)
    cols = np.arange(size)
    for w in range(nwords):
        sel = (cols >> 6) == w
        shifts = (cols[sel] & 63).astype(np.uint64)
        rows[:, w] = (mat[:, sel].astype(np.uint64) << shifts).sum(axis=1,
                                                                   dtype=np.uint64)
    return rows
