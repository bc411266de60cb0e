"""Blockwise DCT quantization codec."""

from __future__ import annotations

import numpy as np
import pytest

from oracles import naive_dct8, naive_idct8, naive_lossy_block, naive_quantize_block
from selene_noise import (
    ContractError,
    FormatError,
    ImageGrid,
    QuantTable,
    SF008S_A,
    builtin_table,
    compress_image,
    compression_residual,
    dct8_forward,
    dct8_inverse,
    dequantize,
    load_quant_table,
    quantize,
    resolve_table,
)
from selene_noise.codec import DCT_MATRIX

ONES_TABLE = QuantTable("ones", np.ones((8, 8), dtype=np.int64))


class TestDctTransform:
    def test_matrix_is_orthonormal(self):
        eye = DCT_MATRIX @ DCT_MATRIX.T
        assert np.abs(eye - np.eye(8)).max() < 1e-12

    def test_matches_direct_cosine_sum(self):
        rng = np.random.default_rng(10)
        block = rng.normal(0.0, 100.0, size=(8, 8))
        expected = naive_dct8(block)
        assert np.abs(dct8_forward(block) - expected).max() < 1e-9

    def test_inverse_matches_direct_cosine_sum(self):
        rng = np.random.default_rng(11)
        coeffs = rng.normal(0.0, 50.0, size=(8, 8))
        expected = naive_idct8(coeffs)
        assert np.abs(dct8_inverse(coeffs) - expected).max() < 1e-9

    def test_round_trip_identity(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            block = rng.normal(0.0, 1000.0, size=(8, 8))
            back = dct8_inverse(dct8_forward(block))
            assert np.abs(back - block).max() < 1e-9

    def test_constant_block_concentrates_in_dc(self):
        coeffs = dct8_forward(np.full((8, 8), 128.0))
        assert coeffs[0, 0] == pytest.approx(1024.0, abs=1e-9)  # 8 * 128
        off_dc = coeffs.copy()
        off_dc[0, 0] = 0.0
        assert np.abs(off_dc).max() < 1e-9

    def test_parseval_energy_preserved(self):
        rng = np.random.default_rng(13)
        block = rng.normal(0.0, 300.0, size=(8, 8))
        e_pixel = float(np.sum(block**2))
        e_coeff = float(np.sum(dct8_forward(block) ** 2))
        assert abs(e_pixel - e_coeff) / e_pixel < 1e-12

    def test_rejects_wrong_shape(self):
        with pytest.raises(ContractError):
            dct8_forward(np.zeros((4, 4)))


class TestQuantization:
    def test_matches_naive_per_element_loop(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            coeffs = rng.normal(0.0, 40.0, size=(8, 8))
            expected = naive_quantize_block(coeffs, SF008S_A.entries)
            assert (quantize(coeffs, SF008S_A) == expected).all()

    def test_round_trip_error_bounded_by_half_step(self):
        rng = np.random.default_rng(15)
        for _ in range(200):
            coeffs = rng.normal(0.0, 60.0, size=(8, 8))
            recon = dequantize(quantize(coeffs, SF008S_A), SF008S_A)
            assert (np.abs(recon - coeffs) <= SF008S_A.entries / 2.0 + 1e-12).all()

    def test_half_away_from_zero_ties(self):
        table = QuantTable("twos", np.full((8, 8), 2, dtype=np.int64))
        coeffs = np.full((8, 8), 1.0)  # 1/2 = 0.5, a tie
        assert (quantize(coeffs, table) == 1).all()
        assert (quantize(-coeffs, table) == -1).all()

    def test_table_validation(self):
        with pytest.raises(ContractError):
            QuantTable("bad", np.zeros((8, 8), dtype=np.int64))
        with pytest.raises(ContractError):
            QuantTable("bad", np.ones((4, 4), dtype=np.int64))
        with pytest.raises(ContractError):
            QuantTable("bad", np.full((8, 8), 1.5))


class TestTableLoading:
    def test_builtin_lookup(self):
        assert builtin_table("SF008S_A") is SF008S_A
        with pytest.raises(ContractError, match="unknown built-in"):
            builtin_table("nope")

    def test_load_from_text_with_comments(self, tmp_path):
        path = tmp_path / "custom.qt"
        rows = "\n".join(" ".join(str(v + 1) for v in range(8)) for _ in range(8))
        path.write_text("# header comment\n" + rows + "\n")
        table = load_quant_table(path)
        assert table.name == "custom"
        assert table.entries[0, 7] == 8

    def test_load_errors_name_line(self, tmp_path):
        path = tmp_path / "bad.qt"
        path.write_text("1 2 3\n")
        with pytest.raises(FormatError, match="bad.qt:1"):
            load_quant_table(path)

    def test_load_rejects_non_integer(self, tmp_path):
        path = tmp_path / "bad.qt"
        path.write_text("\n".join("1 2 3 4 5 6 7 x" for _ in range(8)))
        with pytest.raises(FormatError, match="non-integer"):
            load_quant_table(path)

    def test_load_rejects_wrong_row_count(self, tmp_path):
        path = tmp_path / "bad.qt"
        path.write_text("1 1 1 1 1 1 1 1\n")
        with pytest.raises(FormatError, match="8 table rows"):
            load_quant_table(path)

    def test_resolve_accepts_name_path_or_table(self, tmp_path):
        assert resolve_table("SF008S_A") is SF008S_A
        assert resolve_table(ONES_TABLE) is ONES_TABLE
        path = tmp_path / "t.qt"
        path.write_text("\n".join("1 1 1 1 1 1 1 1" for _ in range(8)))
        assert resolve_table(str(path)).name == "t"
        with pytest.raises(ContractError):
            resolve_table("no-such-table")


class TestCompressImage:
    def test_matches_naive_block_pipeline(self):
        rng = np.random.default_rng(16)
        pixels = rng.uniform(500.0, 3000.0, size=(16, 24))
        img = ImageGrid(pixels)
        compressed = compress_image(img, SF008S_A)
        level = 2.0**13
        for by in range(0, 16, 8):
            for bx in range(0, 24, 8):
                block = pixels[by : by + 8, bx : bx + 8]
                expected = naive_lossy_block(block, SF008S_A.entries, level)
                got = compressed.pixels[by : by + 8, bx : bx + 8]
                assert np.abs(got - np.clip(expected, 0, 16383)).max() < 1e-6

    def test_all_ones_table_nearly_lossless(self):
        rng = np.random.default_rng(17)
        pixels = rng.uniform(100.0, 16000.0, size=(64, 64))
        img = ImageGrid(pixels)
        compressed = compress_image(img, ONES_TABLE)
        err = compressed.pixels - pixels
        assert float(np.sqrt(np.mean(err**2))) <= 0.5
        assert float(np.abs(err).max()) <= 4.0

    def test_deterministic_bit_identical(self):
        rng = np.random.default_rng(18)
        img = ImageGrid(rng.uniform(0.0, 16383.0, size=(24, 24)))
        a = compress_image(img, SF008S_A)
        b = compress_image(img, SF008S_A)
        assert (a.pixels == b.pixels).all()

    def test_non_multiple_of_8_edge_padding(self):
        rng = np.random.default_rng(19)
        pixels = rng.uniform(1000.0, 2000.0, size=(13, 21))
        compressed = compress_image(ImageGrid(pixels), SF008S_A)
        assert compressed.pixels.shape == (13, 21)
        # interior agrees with compressing the aligned 8x8 sub-block directly
        aligned = compress_image(ImageGrid(pixels[:8, :16]), SF008S_A)
        assert np.abs(compressed.pixels[:8, :16] - aligned.pixels).max() < 1e-9

    def test_output_clamped_to_dn_range(self):
        pixels = np.full((8, 8), 16383.0)
        pixels[0, 0] = 0.0  # a sharp edge forces overshoot
        compressed = compress_image(ImageGrid(pixels), SF008S_A)
        assert compressed.pixels.min() >= 0.0
        assert compressed.pixels.max() <= 16383.0

    def test_respects_bit_depth(self):
        pixels = np.full((8, 8), 250.0)
        compressed = compress_image(ImageGrid(pixels, bit_depth=8), ONES_TABLE)
        assert compressed.bit_depth == 8
        assert compressed.pixels.max() <= 255.0


class TestCompressionResidual:
    def test_residual_is_difference_all_valid(self):
        rng = np.random.default_rng(20)
        img = ImageGrid(rng.uniform(500.0, 2500.0, size=(16, 16)))
        compressed = compress_image(img, SF008S_A)
        res = compression_residual(img, compressed)
        assert res.valid.all()
        assert np.allclose(res.values, compressed.pixels - img.pixels)

    def test_shape_mismatch_rejected(self):
        a = ImageGrid(np.zeros((8, 8)))
        b = ImageGrid(np.zeros((16, 8)))
        with pytest.raises(ContractError):
            compression_residual(a, b)
