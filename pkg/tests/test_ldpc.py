import itertools
from pathlib import Path

import numpy as np
import pytest

from app.core.config import settings
from app.services.ldpc import (
    EncoderKind, LdpcCodeError, RATES, ber_count, build_code, cached_code, decode, decode_arrays, decode_batch,
    encode, encode_batch, load_address_table, parse_small_code, synthesize_address_table, write_address_table,
)
from app.services.ldpc.tables import (
    SYNTHETIC_MARKER, format_address_table, info_length, parse_address_table, table_filename,
)


def all_codewords(code) -> np.ndarray:
    info = np.array(list(itertools.product([0, 1], repeat=code.k)), dtype=np.uint8)
    return encode_batch(code, info)


def strong_llrs(codeword: np.ndarray, magnitude: float = 25.0) -> np.ndarray:
    return magnitude * (1.0 - 2.0 * codeword.astype(np.float64))


class TestSmallCode:

    def test_load(self, toy_code):
        assert (toy_code.n, toy_code.k, toy_code.m) == (12, 6, 6)
        assert toy_code.encoder is EncoderKind.accumulator

    def test_zero_info_gives_zero_codeword(self, toy_code):
        assert not encode(toy_code, np.zeros(6, dtype=np.uint8)).any()

    def test_every_codeword_satisfies_checks(self, toy_code):
        words = all_codewords(toy_code)
        assert not toy_code.syndrome(words).any()
        assert len(np.unique(words, axis=0)) == 64
        assert np.array_equal(words[:, :6], np.array(list(itertools.product([0, 1], repeat=6))))

    def test_dense_encoder_for_unstructured_parity(self):
        code = parse_small_code("6 3\n0 1 3 4\n1 2 4 5\n0 2 5\n")
        assert code.encoder is EncoderKind.dense
        info = np.array(list(itertools.product([0, 1], repeat=code.k)), dtype=np.uint8)
        assert not code.syndrome(encode_batch(code, info)).any()

    @pytest.mark.parametrize("text", [
        "",
        "12 6\n0 1 3 6\n",
        "4 2\n0 1\n0 5\n",
        "4 2\n0 0 1\n2 3\n",
        "4 2\n0\n1 2 3\n",
        "4 2\n0 x\n1 2\n",
    ])
    def test_malformed_adjacency(self, text):
        with pytest.raises(LdpcCodeError):
            parse_small_code(text)

    def test_missing_file(self):
        from app.services.ldpc import load_small_code
        with pytest.raises(LdpcCodeError):
            load_small_code("no_such_code.txt")


class TestDecoder:

    def test_noiseless_fixed_point(self, toy_code):
        words = all_codewords(toy_code)
        bits, converged, iterations = decode_arrays(toy_code, strong_llrs(words))
        assert np.array_equal(bits, words)
        assert converged.all()
        assert (iterations == 1).all()

    def test_single_flip_corrected(self, toy_code):
        llrs = strong_llrs(np.zeros(12, dtype=np.uint8), 4.0)
        llrs[0] = -1.0
        result = decode(toy_code, llrs)
        assert result.converged
        assert not result.bits.any()
        # exhaustive nearest codeword agrees
        words = all_codewords(toy_code)
        assert not words[np.argmax((1.0 - 2.0 * words) @ llrs)].any()

    def test_agrees_with_maximum_likelihood(self, toy_code):
        rng = np.random.default_rng(42)
        words = all_codewords(toy_code)
        signals = 1.0 - 2.0 * words
        sigma = np.sqrt(1.0 / (2 * 0.5 * 10 ** 0.5))  # Eb/N0 = 5 dB at rate 1/2
        trials = 10_000
        sent = rng.integers(0, 64, size=trials)
        received = signals[sent] + rng.normal(0.0, sigma, size=(trials, 12))
        llrs = 2.0 * received / sigma ** 2

        ml = words[np.argmax(received @ signals.T, axis=1)]
        bits, _, _ = decode_arrays(toy_code, np.clip(llrs, -25, 25))
        agreement = np.mean(np.all(bits == ml, axis=1))
        assert agreement >= 0.95

    def test_frozen_blocks_keep_their_iteration_count(self, toy_code):
        clean = strong_llrs(np.zeros(12, dtype=np.uint8))
        noisy = strong_llrs(np.zeros(12, dtype=np.uint8), 4.0)
        noisy[0] = -1.0
        results = decode_batch(toy_code, np.vstack([clean, noisy]))
        assert results[0].iterations_used == 1
        assert results[1].converged

    def test_rejects_bad_input(self, toy_code):
        with pytest.raises(ValueError):
            decode_arrays(toy_code, np.zeros((1, 11)))
        with pytest.raises(ValueError):
            decode_arrays(toy_code, np.full((1, 12), np.nan))
        with pytest.raises(ValueError):
            decode_arrays(toy_code, np.zeros((1, 12)), max_iters=0)


class TestBerCount:

    def test_identical(self):
        assert ber_count([0, 1, 1, 0], [0, 1, 1, 0]) == (0, 4)

    def test_complement(self):
        a = np.array([0, 1, 1, 0, 1])
        assert ber_count(a, 1 - a) == (5, 5)

    def test_known_corruption(self):
        a = np.zeros(20, dtype=np.uint8)
        b = a.copy()
        b[[1, 7, 19]] = 1
        assert ber_count(a, b) == (3, 20)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            ber_count([0, 1], [0, 1, 1])


class TestLongCodes:

    def test_info_lengths(self):
        assert info_length("1/2") == 32400
        assert info_length("9/10") == 58320

    @pytest.mark.parametrize("rate", ["1/2", "9/10"])
    def test_encode_decode_fixed_point(self, rate, rng):
        code = cached_code(rate)
        assert (code.n, code.k) == (64800, info_length(rate))
        info = rng.integers(0, 2, size=(2, code.k), dtype=np.uint8)
        words = encode_batch(code, info)
        assert np.array_equal(words[:, :code.k], info)
        assert not code.syndrome(words).any()
        bits, converged, iterations = decode_arrays(code, strong_llrs(words))
        assert np.array_equal(bits, words)
        assert converged.all() and (iterations == 1).all()

    @pytest.mark.slow
    @pytest.mark.parametrize("rate", list(RATES))
    def test_every_rate(self, rate, rng):
        code = cached_code(rate)
        words = encode_batch(code, rng.integers(0, 2, size=(1, code.k), dtype=np.uint8))
        assert not code.syndrome(words).any()
        bits, converged, _ = decode_arrays(code, strong_llrs(words))
        assert converged.all() and np.array_equal(bits, words)

    def test_short_frames_unsupported(self):
        with pytest.raises(LdpcCodeError):
            build_code("1/2", 16200)

    def test_unknown_rate(self):
        with pytest.raises(LdpcCodeError):
            build_code("7/8")

    def test_missing_table_dir(self, tmp_path):
        with pytest.raises(LdpcCodeError):
            build_code("1/2", table_dir=tmp_path)


class TestAddressTables:

    def test_synthesized_table_is_valid(self):
        table = synthesize_address_table("3/4", seed=1)
        table.validate()
        assert table.k == 48600
        assert len(table.groups) == 135

    def test_format_parse_round_trip(self):
        table = synthesize_address_table("9/10", seed=2)
        parsed = parse_address_table(format_address_table(table, "9/10"))
        assert (parsed.n, parsed.k, parsed.groups) == (table.n, table.k, table.groups)

    def test_written_table_builds_a_code(self, tmp_path):
        table = synthesize_address_table("8/9", seed=3)
        write_address_table(table, tmp_path / "rate_8_9.txt", "8/9")
        assert load_address_table(tmp_path / "rate_8_9.txt").k == 57600
        code = build_code("8/9", table_dir=tmp_path)
        info = np.random.default_rng(0).integers(0, 2, size=code.k, dtype=np.uint8)
        assert code.is_codeword(encode(code, info))

    def test_rejects_out_of_range_address(self):
        with pytest.raises(LdpcCodeError):
            parse_address_table("64800 58320\n" + "\n".join(["6480"] * 162))

    def test_shipped_tables_are_marked_synthetic(self):
        table_dir = Path(settings.LDPC_TABLE_DIR)
        assert table_dir.name == "synthetic"
        for rate in RATES:
            header = (table_dir / table_filename(rate)).read_text().splitlines()[:3]
            assert SYNTHETIC_MARKER in header

    def test_marker_only_when_requested(self):
        table = synthesize_address_table("1/2", seed=4)
        assert SYNTHETIC_MARKER in format_address_table(table, "1/2", synthetic=True)
        assert SYNTHETIC_MARKER not in format_address_table(table, "1/2")
