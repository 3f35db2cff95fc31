# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled GF(256) kernels (AES field, x^8+x^4+x^3+x+1)."""

from libc.string cimport memset

BACKEND = "cython"

cdef unsigned char EXP_T[512]
cdef unsigned char LOG_T[256]

cdef void _init_tables() noexcept:
    cdef int i, v = 1
    for i in range(255):
        EXP_T[i] = <unsigned char> v
        LOG_T[v] = <unsigned char> i
        v ^= (v << 1) ^ (0x11B if v & 0x80 else 0)
        v &= 0xFF
    for i in range(255, 512):
        EXP_T[i] = EXP_T[i - 255]
    LOG_T[0] = 0

_init_tables()


cdef inline unsigned char _mul(unsigned char a, unsigned char b) noexcept:
    if a == 0 or b == 0:
        return 0
    return EXP_T[LOG_T[a] + LOG_T[b]]


cdef inline unsigned char _div(unsigned char a, unsigned char b) noexcept:
    if a == 0:
        return 0
    return EXP_T[LOG_T[a] - LOG_T[b] + 255]


def gf_mul(int a, int b):
    return _mul(<unsigned char> a, <unsigned char> b)


def gf_div(int a, int b):
    if b == 0:
        raise ZeroDivisionError("GF(256) division by zero")
    return _div(<unsigned char> a, <unsigned char> b)


def eval_shares(bytes secret, list coeffs, bytes xs):
    """Evaluate per-byte polynomials [secret, *coeffs] at each x in xs."""
    cdef Py_ssize_t length = len(secret)
    cdef Py_ssize_t ncoef = len(coeffs)
    cdef Py_ssize_t j, r
    cdef unsigned char x, acc
    cdef const unsigned char* sec = secret
    cdef const unsigned char** rows = NULL
    cdef list row_objs = list(coeffs)
    cdef bytes row
    for row in row_objs:
        if len(row) != length:
            raise ValueError("coefficient row length mismatch")

    out = []
    cdef bytearray buf
    cdef unsigned char* dst
    cdef const unsigned char* crow
    for xi in xs:
        x = <unsigned char> xi
        buf = bytearray(length)
        dst = buf
        if ncoef:
            crow = <bytes> row_objs[ncoef - 1]
            for j in range(length):
                dst[j] = crow[j]
            for r in range(ncoef - 2, -1, -1):
                crow = <bytes> row_objs[r]
                for j in range(length):
                    dst[j] = _mul(dst[j], x) ^ crow[j]
            for j in range(length):
                dst[j] = _mul(dst[j], x) ^ sec[j]
        else:
            for j in range(length):
                dst[j] = sec[j]
        out.append(bytes(buf))
    return out


def interpolate_at_zero(bytes xs, list shares):
    """Byte-wise Lagrange interpolation at x=0."""
    cdef Py_ssize_t k = len(xs)
    cdef Py_ssize_t i, j, m
    if k == 0:
        raise ValueError("no shares")
    if len(set(xs)) != k:
        raise ValueError("duplicate share points")
    cdef const unsigned char* pxs = xs
    for i in range(k):
        if pxs[i] == 0:
            raise ValueError("share point 0 is reserved for the secret")
    cdef bytes first = <bytes> shares[0]
    cdef Py_ssize_t length = len(first)
    cdef bytearray buf = bytearray(length)
    cdef unsigned char* dst = buf
    memset(dst, 0, length)
    cdef unsigned char w
    cdef const unsigned char* srow
    cdef bytes share
    for i in range(k):
        share = <bytes> shares[i]
        if len(share) != length:
            raise ValueError("share row length mismatch")
        w = 1
        for j in range(k):
            if j != i:
                w = _mul(w, _div(pxs[j], pxs[i] ^ pxs[j]))
        srow = share
        for m in range(length):
            dst[m] ^= _mul(srow[m], w)
    return bytes(buf)
