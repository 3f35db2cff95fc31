import pytest
from hypothesis import given, settings, strategies as st

import vector_tools
from longstore import encoding
from longstore.encoding import (
    EncodingError,
    HashKey,
    LogicalClock,
    decode,
    encode,
    hash_descriptor,
    hash_value,
    keygen,
)
from longstore.rand import DrbgRng


def canonical_values(max_depth=6):
    scalars = st.one_of(
        st.none(),
        st.integers(min_value=0, max_value=2**64 - 1),
        st.binary(max_size=64),
    )
    return st.recursive(
        scalars,
        lambda children: st.lists(children, max_size=5).map(tuple),
        max_leaves=2**max_depth,
    )


class TestFormat:
    def test_bottom(self):
        assert encode(None) == bytes([0x03, 0, 0, 0, 0])

    def test_uint_zero(self):
        assert encode(0) == bytes([0x02, 0, 0, 0, 8]) + bytes(8)

    def test_tuple_example(self):
        # length prefix is the sum of the encoded children lengths
        child_bytes = bytes([0x00, 0, 0, 0, 2]) + b"ab"
        child_uint = bytes([0x02, 0, 0, 0, 8]) + (1).to_bytes(8, "big")
        expected = (
            bytes([0x01]) + len(child_bytes + child_uint).to_bytes(4, "big")
            + child_bytes + child_uint
        )
        assert encode((b"ab", 1)) == expected

    def test_matches_independent_encoder(self):
        for value in vector_tools.sample_values():
            assert encode(value) == vector_tools.independent_encode(value)

    def test_uint_out_of_range(self):
        with pytest.raises(EncodingError):
            encode(2**64)
        with pytest.raises(EncodingError):
            encode(-1)

    def test_rejects_foreign_types(self):
        with pytest.raises(EncodingError):
            encode(True)
        with pytest.raises(EncodingError):
            encode("text")
        with pytest.raises(EncodingError):
            encode([b"list"])

    def test_overflow_guard(self, monkeypatch):
        monkeypatch.setattr(encoding, "_MAX_LEN", 15)
        with pytest.raises(EncodingError):
            encode(b"x" * 16)
        with pytest.raises(EncodingError):
            encode((b"x" * 10, b"y" * 10))

    @given(canonical_values())
    @settings(max_examples=300, deadline=None)
    def test_round_trip(self, value):
        assert decode(encode(value)) == value

    def test_injectivity_probe(self):
        rng = DrbgRng("injectivity")
        seen = {}
        values = []
        for _ in range(200):
            values.append(rng.randbytes(rng.randbelow(20)))
            values.append(rng.randbelow(2**32))
            values.append((rng.randbytes(4), rng.randbelow(100)))
        count = 0
        for v in values:
            blob = encode(v)
            if blob in seen:
                assert seen[blob] == v
            seen[blob] = v
        # 10^4 random distinct pairs encode distinctly
        import random

        rnd = random.Random(1)
        pairs = 0
        while pairs < 10_000:
            a, b = rnd.sample(values, 2)
            if a != b:
                assert encode(a) != encode(b)
                pairs += 1

    def test_decode_rejects_trailing(self):
        with pytest.raises(EncodingError):
            decode(encode(0) + b"\x00")

    def test_decode_rejects_truncation(self):
        blob = encode((b"abc", 1))
        for cut in range(1, len(blob)):
            with pytest.raises(EncodingError):
                decode(blob[:cut])

    def test_decode_rejects_bad_tag(self):
        with pytest.raises(EncodingError):
            decode(bytes([0x07, 0, 0, 0, 0]))

    def test_decode_rejects_bad_uint_length(self):
        with pytest.raises(EncodingError):
            decode(bytes([0x02, 0, 0, 0, 4]) + bytes(4))
        with pytest.raises(EncodingError):
            decode(bytes([0x03, 0, 0, 0, 1]) + b"\x00")

    def test_decode_bounds_nesting_depth(self):
        value = ()
        for _ in range(200):
            value = (value,)
        assert decode(encode(value)) == value
        # adversarial input nested past the bound errors instead of
        # exhausting the stack
        deep = b"\x03" + (0).to_bytes(4, "big")
        for _ in range(2000):
            deep = b"\x01" + len(deep).to_bytes(4, "big") + deep
        with pytest.raises(EncodingError):
            decode(deep)


class TestKeyedHash:
    def test_keygen_lengths(self):
        assert len(keygen("sha256").key) == 32
        assert len(keygen("sha512").key) == 64

    def test_keygen_distinct(self):
        assert keygen("sha256").key != keygen("sha256").key

    def test_unknown_descriptor(self):
        with pytest.raises(KeyError):
            keygen("md5")
        with pytest.raises(KeyError):
            hash_descriptor("blake")

    def test_key_length_enforced(self):
        with pytest.raises(ValueError):
            HashKey(hash_descriptor("sha256"), b"short")

    def test_deterministic(self):
        key = keygen("sha256", DrbgRng("k"))
        value = (b"m", 5, None)
        assert hash_value(key, value) == hash_value(key, value)

    def test_vector_file_regenerates_identically(self):
        committed = vector_tools.HASH_VECTOR_FILE.read_text()
        regenerated = "\n".join(vector_tools.generate_hash_vector_lines()) + "\n"
        assert committed == regenerated

    def test_vectors_against_library(self):
        lines = vector_tools.HASH_VECTOR_FILE.read_text().splitlines()
        values = vector_tools.sample_values()
        assert len(lines) == 3 * len(values)
        digests = set()
        by_key: dict[str, set] = {}
        for i, line in enumerate(lines):
            key_hex, enc_hex, digest_hex = line.split()
            value = values[i % len(values)]
            key_bytes = bytes.fromhex(key_hex)
            descriptor = {32: "sha256", 64: "sha512", 4: "toy8"}[len(key_bytes)]
            key = HashKey(hash_descriptor(descriptor), key_bytes)
            assert encode(value).hex() == enc_hex
            assert hash_value(key, value).hex() == digest_hex
            if descriptor != "toy8":  # 8-bit digests collide by design
                # same key, different messages -> different digests
                assert (key_hex, digest_hex) not in digests
                digests.add((key_hex, digest_hex))
                by_key.setdefault(digest_hex, set()).add(key_hex)
        # same message under different keys hashes differently
        second_key = keygen("sha256", DrbgRng("other"))
        for value in values:
            line_digest = hash_value(
                HashKey(hash_descriptor("sha256"), bytes.fromhex(lines[0].split()[0])), value
            )
            assert hash_value(second_key, value) != line_digest


class TestLogicalClock:
    def test_monotone(self):
        clock = LogicalClock()
        assert clock.now == 0
        assert clock.advance(5) == 5
        assert clock.advance(3) == 5  # earlier request ignored
        assert clock.advance(5) == 5
        assert clock.advance(9) == 9
        assert clock.now == 9

    def test_random_walk_never_decreases(self):
        rng = DrbgRng("clock")
        clock = LogicalClock()
        previous = 0
        for _ in range(500):
            clock.advance(rng.randbelow(1000))
            assert clock.now >= previous
            previous = clock.now

    def test_negative_start_rejected(self):
        with pytest.raises(ValueError):
            LogicalClock(-1)
