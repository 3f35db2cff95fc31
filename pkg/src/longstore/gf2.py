"""Binary-field arithmetic on Python ints.

Field elements of GF(2^d) are ints holding polynomial coefficient bits;
the modulus is an irreducible polynomial of degree d, also an int with
bit d set. Big-int shift/xor keeps this fast enough for the commitment
sizes used here (d up to 2048), and squaring/reduction take the fast
paths that make Rabin's irreducibility test cheap for sparse moduli.
"""

from __future__ import annotations


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials."""
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        a <<= 1
        b >>= 1
    return acc


def poly_degree(a: int) -> int:
    return a.bit_length() - 1


def _taps(modulus: int) -> tuple[int, list[int]]:
    """Degree and the exponents of the modulus below its leading term."""
    d = poly_degree(modulus)
    low = modulus ^ (1 << d)
    taps = []
    while low:
        t = poly_degree(low)
        taps.append(t)
        low ^= 1 << t
    return d, taps


def poly_mod(a: int, modulus: int) -> int:
    """Reduce polynomial ``a`` modulo ``modulus``."""
    d, taps = _taps(modulus)
    if len(taps) <= 8:
        # sparse modulus: fold all excess bits at once per round
        mask = (1 << d) - 1
        while True:
            hi = a >> d
            if not hi:
                return a
            a &= mask
            for t in taps:
                a ^= hi << t
    while a.bit_length() - 1 >= d:
        a ^= modulus << (a.bit_length() - 1 - d)
    return a


def gf2_mul(a: int, b: int, modulus: int) -> int:
    return poly_mod(clmul(a, b), modulus)


def poly_gcd(a: int, b: int) -> int:
    # per-step leading-bit clearing; O(deg) big-int xors total
    while b:
        da, db = a.bit_length(), b.bit_length()
        if da < db:
            a, b = b, a
            da, db = db, da
        a ^= b << (da - db)
    return a


def square_mod(a: int, modulus: int) -> int:
    """Square in GF(2)[x] and reduce.

    Squaring spreads the coefficient bits to even positions, which is the
    same as reading the binary digits of ``a`` in base 4.
    """
    if a == 0:
        return 0
    return poly_mod(int(bin(a)[2:], 4), modulus)


def _x_pow_pow2_mod(k: int, modulus: int) -> int:
    """Compute x^(2^k) mod modulus by k repeated squarings."""
    a = 2  # the polynomial x
    for _ in range(k):
        a = square_mod(a, modulus)
    return a


def _prime_factors(n: int) -> list[int]:
    out = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def is_irreducible(modulus: int) -> bool:
    """Rabin's irreducibility test for a GF(2) polynomial."""
    d = poly_degree(modulus)
    if d <= 0:
        return False
    if d == 1:
        return True
    if not modulus & 1:  # divisible by x
        return False
    if _x_pow_pow2_mod(d, modulus) != 2:
        return False
    for p in _prime_factors(d):
        h = _x_pow_pow2_mod(d // p, modulus) ^ 2
        if poly_gcd(modulus, h) != 1:
            return False
    return True
