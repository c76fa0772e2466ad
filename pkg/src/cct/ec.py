"""NIST P-256 group arithmetic and raw ECDSA/ECDH primitives.

Implemented from field operations up so that callers control the nonce and
can corrupt intermediate values for fault injection. Not constant time.
"""

from __future__ import annotations

import hashlib
from typing import Optional

from cct.errors import MalformedArtifact, MalformedPoint, NotInvertible

# Curve: y^2 = x^3 - 3x + b over GF(p)
P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
A = P - 3
B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
N = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

POINT_AT_INFINITY = None  # affine identity encoding
_JAC_INF = (0, 1, 0)


def is_on_curve(point: Optional[tuple[int, int]]) -> bool:
    if point is None:
        return True
    x, y = point
    if not (0 <= x < P and 0 <= y < P):
        return False
    return (y * y - (x * x * x + A * x + B)) % P == 0


def _jac_double(pt):
    x, y, z = pt
    if z == 0 or y == 0:
        return _JAC_INF
    ysq = y * y % P
    s = 4 * x * ysq % P
    m = (3 * x * x + A * z * z * z * z % P) % P
    nx = (m * m - 2 * s) % P
    ny = (m * (s - nx) - 8 * ysq * ysq) % P
    nz = 2 * y * z % P
    return nx, ny, nz


def _jac_add(pt1, pt2):
    if pt1[2] == 0:
        return pt2
    if pt2[2] == 0:
        return pt1
    x1, y1, z1 = pt1
    x2, y2, z2 = pt2
    z1sq = z1 * z1 % P
    z2sq = z2 * z2 % P
    u1 = x1 * z2sq % P
    u2 = x2 * z1sq % P
    s1 = y1 * z2sq * z2 % P
    s2 = y2 * z1sq * z1 % P
    if u1 == u2:
        if s1 != s2:
            return _JAC_INF
        return _jac_double(pt1)
    h = (u2 - u1) % P
    r = (s2 - s1) % P
    hsq = h * h % P
    hcu = hsq * h % P
    u1hsq = u1 * hsq % P
    nx = (r * r - hcu - 2 * u1hsq) % P
    ny = (r * (u1hsq - nx) - s1 * hcu) % P
    nz = h * z1 * z2 % P
    return nx, ny, nz


def _to_affine(pt) -> Optional[tuple[int, int]]:
    x, y, z = pt
    if z == 0:
        return None
    zinv = pow(z, -1, P)
    zinv2 = zinv * zinv % P
    return x * zinv2 % P, y * zinv2 * zinv % P


def _to_jac(point) -> tuple[int, int, int]:
    if point is None:
        return _JAC_INF
    return point[0], point[1], 1


# 4-bit fixed-base table for G: _G_TABLE[i][d] = d * 16^i * G (Jacobian).
_WINDOW = 4


def _build_base_table():
    table = []
    base = _to_jac((GX, GY))
    for _ in range(256 // _WINDOW):
        row = [_JAC_INF]
        acc = _JAC_INF
        for _ in range(15):
            acc = _jac_add(acc, base)
            row.append(acc)
        table.append(row)
        for _ in range(_WINDOW):
            base = _jac_double(base)
    return table


_G_TABLE = _build_base_table()


def scalar_base_mult(k: int) -> Optional[tuple[int, int]]:
    """k * G via the precomputed fixed-base window table."""
    k %= N
    acc = _JAC_INF
    i = 0
    while k:
        d = k & 0xF
        if d:
            acc = _jac_add(acc, _G_TABLE[i][d])
        k >>= _WINDOW
        i += 1
    return _to_affine(acc)


def scalar_mult(k: int, point: Optional[tuple[int, int]]) -> Optional[tuple[int, int]]:
    """k * Q, double-and-add over Jacobian coordinates."""
    k %= N
    if point is None or k == 0:
        return None
    jac = _to_jac(point)
    acc = _JAC_INF
    for bit in bin(k)[2:]:
        acc = _jac_double(acc)
        if bit == "1":
            acc = _jac_add(acc, jac)
    return _to_affine(acc)


def point_add(p1, p2):
    return _to_affine(_jac_add(_to_jac(p1), _to_jac(p2)))


def hash_to_int(message: bytes) -> int:
    """Leftmost-bits SHA-256 digest as an integer (digest size == order size)."""
    return int.from_bytes(hashlib.sha256(message).digest(), "big")


def ecdsa_sign_raw(d: int, message: bytes, k: int) -> tuple[int, int]:
    """(r, s) for the given nonce k; raises NotInvertible on degenerate k/r/s."""
    if not (1 <= k < N):
        raise NotInvertible("nonce out of range")
    point = scalar_base_mult(k)
    r = point[0] % N
    if r == 0:
        raise NotInvertible("r == 0")
    z = hash_to_int(message)
    s = pow(k, -1, N) * (z + r * d) % N
    if s == 0:
        raise NotInvertible("s == 0")
    return r, s


def ecdsa_verify_raw(public: tuple[int, int], message: bytes, r: int, s: int) -> bool:
    if not (1 <= r < N and 1 <= s < N):
        return False
    if not is_on_curve(public) or public is None:
        return False
    z = hash_to_int(message)
    w = pow(s, -1, N)
    u1 = z * w % N
    u2 = r * w % N
    pt = _jac_add(_to_jac(scalar_base_mult(u1)), _to_jac(scalar_mult(u2, public)))
    aff = _to_affine(pt)
    if aff is None:
        return False
    return aff[0] % N == r


def ecdh_shared_secret(d: int, peer: tuple[int, int]) -> bytes:
    """SHA-256 over the 32-byte big-endian x-coordinate of d*Q."""
    pt = scalar_mult(d, peer)
    if pt is None:
        raise MalformedPoint("shared point at infinity")
    return hashlib.sha256(pt[0].to_bytes(32, "big")).digest()


def encode_point(point: tuple[int, int]) -> bytes:
    """Uncompressed SEC1 encoding (0x04 || x || y)."""
    return b"\x04" + point[0].to_bytes(32, "big") + point[1].to_bytes(32, "big")


def decode_point(data: bytes) -> tuple[int, int]:
    if len(data) != 65 or data[0] != 0x04:
        raise MalformedPoint(f"bad point encoding of {len(data)} bytes")
    x = int.from_bytes(data[1:33], "big")
    y = int.from_bytes(data[33:65], "big")
    return x, y


# --- minimal DER for ECDSA signatures ---

def _der_int(value: int) -> bytes:
    body = value.to_bytes((value.bit_length() + 8) // 8 or 1, "big")
    return b"\x02" + bytes([len(body)]) + body


def der_encode_signature(r: int, s: int) -> bytes:
    body = _der_int(r) + _der_int(s)
    if len(body) >= 0x80:
        raise ValueError("signature too long for short-form DER")
    return b"\x30" + bytes([len(body)]) + body


def der_decode_two_integers(data: bytes) -> tuple[int, int]:
    """Strict decode of SEQUENCE { INTEGER, INTEGER }, short-form lengths."""
    if len(data) < 8 or data[0] != 0x30:
        raise MalformedArtifact("not a DER sequence")
    total = data[1]
    if total >= 0x80 or len(data) != total + 2:
        raise MalformedArtifact("bad sequence length")
    values = []
    idx = 2
    for _ in range(2):
        if idx + 2 > len(data) or data[idx] != 0x02:
            raise MalformedArtifact("missing INTEGER")
        length = data[idx + 1]
        if length == 0 or length >= 0x80 or idx + 2 + length > len(data):
            raise MalformedArtifact("bad INTEGER length")
        values.append(int.from_bytes(data[idx + 2:idx + 2 + length], "big"))
        idx += 2 + length
    if idx != len(data):
        raise MalformedArtifact("trailing bytes")
    return values[0], values[1]
