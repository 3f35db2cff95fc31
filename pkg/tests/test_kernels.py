import pytest

from longstore import _kernels
from longstore._kernels import pure
from longstore.rand import DrbgRng

try:
    from longstore._kernels import _gf256 as compiled
except ImportError:
    compiled = None

BACKENDS = [pure] if compiled is None else [pure, compiled]


def slow_mul(a: int, b: int) -> int:
    # schoolbook carry-less multiply mod the AES polynomial
    acc = 0
    while b:
        if b & 1:
            acc ^= a
        a <<= 1
        b >>= 1
    for bit in range(acc.bit_length() - 1, 7, -1):
        if acc >> bit & 1:
            acc ^= 0x11B << (bit - 8)
    return acc


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
class TestField:
    def test_known_product(self, impl):
        assert impl.gf_mul(0x57, 0x83) == 0xC1

    def test_against_schoolbook(self, impl):
        rng = DrbgRng("gfmul")
        for _ in range(2000):
            a, b = rng.randbytes(2)
            assert impl.gf_mul(a, b) == slow_mul(a, b)

    def test_field_laws(self, impl):
        rng = DrbgRng("laws")
        for _ in range(500):
            a, b, c = rng.randbytes(3)
            assert impl.gf_mul(a, b) == impl.gf_mul(b, a)
            assert impl.gf_mul(a, impl.gf_mul(b, c)) == impl.gf_mul(impl.gf_mul(a, b), c)
            assert impl.gf_mul(a, b ^ c) == impl.gf_mul(a, b) ^ impl.gf_mul(a, c)
            assert impl.gf_mul(a, 1) == a
            assert impl.gf_mul(a, 0) == 0

    def test_division(self, impl):
        rng = DrbgRng("div")
        for _ in range(500):
            a = rng.randbytes(1)[0]
            b = rng.randbytes(1)[0] or 1
            assert impl.gf_mul(impl.gf_div(a, b), b) == a
        with pytest.raises(ZeroDivisionError):
            impl.gf_div(1, 0)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
class TestShareKernels:
    def test_constant_polynomial(self, impl):
        secret = b"\x2a\x00\xff"
        rows = impl.eval_shares(secret, [], bytes([1, 2, 3]))
        assert rows == [secret, secret, secret]

    def test_round_trip(self, impl):
        rng = DrbgRng("kernel-roundtrip")
        for length in (0, 1, 17, 256):
            secret = rng.randbytes(length)
            coeffs = [rng.randbytes(length) for _ in range(2)]
            xs = bytes([1, 2, 3, 4, 5])
            rows = impl.eval_shares(secret, coeffs, xs)
            assert impl.interpolate_at_zero(xs[:3], rows[:3]) == secret
            assert impl.interpolate_at_zero(xs[2:], rows[2:]) == secret

    def test_interpolate_rejections(self, impl):
        with pytest.raises(ValueError):
            impl.interpolate_at_zero(b"", [])
        with pytest.raises(ValueError):
            impl.interpolate_at_zero(bytes([1, 1]), [b"a", b"b"])
        with pytest.raises(ValueError):
            impl.interpolate_at_zero(bytes([0, 1]), [b"a", b"b"])


@pytest.mark.skipif(compiled is None, reason="compiled kernels unavailable")
class TestBackendEquivalence:
    def test_eval_matches(self):
        rng = DrbgRng("equiv")
        for _ in range(25):
            length = rng.randbelow(300)
            threshold = 1 + rng.randbelow(6)
            secret = rng.randbytes(length)
            coeffs = [rng.randbytes(length) for _ in range(threshold - 1)]
            xs = bytes(range(1, 1 + 2 + rng.randbelow(6)))
            assert pure.eval_shares(secret, coeffs, xs) == compiled.eval_shares(
                secret, coeffs, xs
            )

    def test_interpolate_matches(self):
        rng = DrbgRng("equiv2")
        for _ in range(25):
            length = rng.randbelow(200)
            k = 1 + rng.randbelow(5)
            xs = bytes(rng.randbelow(255) + 1 for _ in range(40))
            xs = bytes(dict.fromkeys(xs))[:k]
            rows = [rng.randbytes(length) for _ in range(len(xs))]
            assert pure.interpolate_at_zero(xs, rows) == compiled.interpolate_at_zero(
                xs, rows
            )

    def test_selected_backend(self):
        assert _kernels.BACKEND in ("pure", "cython")
