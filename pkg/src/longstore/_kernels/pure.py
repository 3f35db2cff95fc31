"""Pure-Python GF(256) kernels.

Fallback backend for byte-wise Shamir arithmetic over the AES field
GF(2^8) mod x^8+x^4+x^3+x+1. The hot paths lean on ``bytes.translate``
with precomputed single-multiplier tables, which keeps the inner loop in C
even without the compiled extension.
"""

from __future__ import annotations

BACKEND = "pure"

_POLY = 0x11B  # x^8 + x^4 + x^3 + x + 1

# exp/log tables over generator 0x03
EXP = [0] * 512
LOG = [0] * 256
_v = 1
for _i in range(255):
    EXP[_i] = _v
    LOG[_v] = _i
    _v ^= (_v << 1) ^ (_POLY if _v & 0x80 else 0)
    _v &= 0xFF
for _i in range(255, 512):
    EXP[_i] = EXP[_i - 255]
del _v, _i


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return EXP[LOG[a] + LOG[b]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("GF(256) division by zero")
    if a == 0:
        return 0
    return EXP[LOG[a] - LOG[b] + 255]


# translate tables for multiplication by a fixed scalar, built lazily
_MUL_TABLES: dict[int, bytes] = {}


def _mul_table(x: int) -> bytes:
    table = _MUL_TABLES.get(x)
    if table is None:
        table = bytes(gf_mul(v, x) for v in range(256))
        _MUL_TABLES[x] = table
    return table


def _xor_bytes(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def eval_shares(secret: bytes, coeffs: list[bytes], xs: bytes) -> list[bytes]:
    """Evaluate the per-byte polynomials at each x in ``xs``.

    The polynomial for byte position j is
    ``secret[j] + coeffs[0][j]*x + ... + coeffs[-1][j]*x^len(coeffs)``.
    Returns one evaluation row per x.
    """
    rows = [secret, *coeffs]
    out = []
    for x in xs:
        table = _mul_table(x)
        acc = rows[-1]
        for row in reversed(rows[:-1]):
            acc = _xor_bytes(acc.translate(table), row)
        out.append(acc)
    return out


def interpolate_at_zero(xs: bytes, shares: list[bytes]) -> bytes:
    """Byte-wise Lagrange interpolation at x=0.

    ``xs`` must be distinct and nonzero; ``shares[i]`` is the evaluation row
    at ``xs[i]``. All rows must have equal length.
    """
    k = len(xs)
    if k == 0:
        raise ValueError("no shares")
    if len(set(xs)) != k:
        raise ValueError("duplicate share points")
    if 0 in xs:
        raise ValueError("share point 0 is reserved for the secret")
    length = len(shares[0])
    result = bytes(length)
    for i in range(k):
        w = 1
        for j in range(k):
            if j != i:
                w = gf_mul(w, gf_div(xs[j], xs[i] ^ xs[j]))
        result = _xor_bytes(result, shares[i].translate(_mul_table(w)))
    return result
