import pytest

from longstore import gf2, hiding
from longstore.rand import DrbgRng


class TestPolynomialArithmetic:
    def test_clmul_small(self):
        assert gf2.clmul(0, 5) == 0
        assert gf2.clmul(1, 5) == 5
        assert gf2.clmul(0b11, 0b11) == 0b101  # (x+1)^2 = x^2+1
        assert gf2.clmul(0b10, 0b111) == 0b1110

    def test_clmul_commutes(self):
        rng = DrbgRng("clmul")
        for _ in range(100):
            a = int.from_bytes(rng.randbytes(16), "big")
            b = int.from_bytes(rng.randbytes(16), "big")
            assert gf2.clmul(a, b) == gf2.clmul(b, a)

    def test_poly_mod(self):
        # x^8 mod AES polynomial = x^4+x^3+x+1
        assert gf2.poly_mod(1 << 8, 0x11B) == 0x1B
        assert gf2.poly_mod(0x1B, 0x11B) == 0x1B

    def test_square_matches_clmul(self):
        rng = DrbgRng("square")
        modulus = hiding.PARAMETER_SETS["hm-256"][2]
        for _ in range(20):
            a = int.from_bytes(rng.randbytes(128), "big")
            assert gf2.square_mod(a, modulus) == gf2.gf2_mul(a, a, modulus)

    def test_mul_matches_aes_field(self):
        from longstore._kernels import pure

        rng = DrbgRng("cross-field")
        for _ in range(300):
            a, b = rng.randbytes(2)
            assert gf2.gf2_mul(a, b, 0x11B) == pure.gf_mul(a, b)

    def test_gcd(self):
        # gcd((x+1)*x, (x+1)) = x+1
        assert gf2.poly_gcd(0b110, 0b11) == 0b11
        assert gf2.poly_gcd(0x11B, 2) == 1


class TestIrreducibility:
    def test_known_irreducible(self):
        assert gf2.is_irreducible(0b111)  # x^2+x+1
        assert gf2.is_irreducible(0x11B)  # AES polynomial
        assert gf2.is_irreducible(0b1011)  # x^3+x+1

    def test_known_reducible(self):
        assert not gf2.is_irreducible(0b101)  # (x+1)^2
        assert not gf2.is_irreducible(0b110)  # x(x+1)
        assert not gf2.is_irreducible(0x11B << 1)  # multiple of x
        # product of two irreducibles
        product = gf2.clmul(0b111, 0b1011)
        assert not gf2.is_irreducible(product)

    @pytest.mark.parametrize("name", sorted(hiding.PARAMETER_SETS))
    def test_frozen_moduli_are_irreducible(self, name):
        _, ell, modulus = hiding.PARAMETER_SETS[name]
        assert modulus.bit_length() - 1 == 4 * ell
        assert gf2.is_irreducible(modulus)
