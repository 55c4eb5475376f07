import numpy as np
import pytest
from PIL import Image

from app.schemas.colorspace import RgbIntensity
from app.services.colorspace import rgb_to_xy_array
from app.services.ingest import (
    RawFrame, RawFrameError, RegionOfInterest, decode_raw_frame, encode_raw_frame, extract_directory, extract_rgb,
    extract_rgb_raw, led_area_fraction, lit_roi, read_manifest, read_raw_frame, synthesize_frame,
    write_frame_preview, write_manifest, write_raw_frame,
)


def full_roi(frame: RawFrame) -> RegionOfInterest:
    return RegionOfInterest(x0=0, y0=0, w=frame.width, h=frame.height)


class TestExtraction:

    def test_uniform_saturated_frame(self):
        frame = RawFrame(16, 16, "RGGB", np.full((16, 16), 4095))
        assert extract_rgb(frame, full_roi(frame)).as_array().tolist() == [1.0, 1.0, 1.0]

    def test_single_quad(self):
        frame = RawFrame(2, 2, "RGGB", np.array([[4095, 0], [0, 4095]]))
        assert extract_rgb(frame, full_roi(frame)).as_array().tolist() == [1.0, 0.0, 1.0]

    def test_green_sites_are_pooled(self):
        frame = RawFrame(2, 2, "RGGB", np.array([[0, 4095], [0, 0]]))
        assert extract_rgb_raw(frame, full_roi(frame))[1] == pytest.approx(0.5)

    @pytest.mark.parametrize("pattern", ["RGGB", "BGGR", "GRBG", "GBRG"])
    def test_synthesized_drive_recovered(self, pattern):
        s = np.array([0.25, 0.6, 0.15])
        frame = synthesize_frame(s, led_count=25, pattern=pattern)
        rgb = extract_rgb_raw(frame, lit_roi(25))
        assert np.max(np.abs(rgb - s)) <= 1 / 4095

    @pytest.mark.parametrize("led_count", [1, 2, 3, 5, 7, 10, 61])
    def test_lit_roi_holds_only_lit_tiles(self, led_count):
        s = np.array([1.0, 1.0, 1.0])
        frame = synthesize_frame(s, led_count=led_count)
        roi = lit_roi(led_count)
        assert extract_rgb_raw(frame, roi).tolist() == [1.0, 1.0, 1.0]
        lit_pixels = led_count * 8 * 8
        assert roi.w * roi.h <= lit_pixels

    def test_lit_roi_range(self):
        with pytest.raises(RawFrameError):
            lit_roi(0)

    def test_replay_matches_direct_projection(self, constellation):
        for k in (0, 100, 511):
            frame = synthesize_frame(constellation.drives[k], led_count=64)
            xy = rgb_to_xy_array(extract_rgb_raw(frame, lit_roi(64)))
            assert np.max(np.abs(xy - constellation.chroma[k])) <= 2 / 4095

    def test_averaging_is_linear(self, rng):
        a = rng.integers(0, 2000, size=(32, 32))
        b = rng.integers(0, 2000, size=(32, 32))
        fa, fb, fab = (RawFrame(32, 32, "GRBG", s) for s in (a, b, a + b))
        roi = RegionOfInterest(x0=4, y0=6, w=20, h=16)
        assert np.allclose(extract_rgb_raw(fab, roi), extract_rgb_raw(fa, roi) + extract_rgb_raw(fb, roi), atol=1e-12)

    def test_rotation_invariance(self, rng):
        frame = RawFrame(32, 24, "RGGB", rng.integers(0, 4096, size=(24, 32)))
        roi = RegionOfInterest(x0=2, y0=4, w=10, h=8)
        rotated = frame.rotated()
        assert np.allclose(extract_rgb_raw(rotated, roi.rotated(frame)), extract_rgb_raw(frame, roi), atol=1e-12)

    def test_roi_outside_frame(self):
        frame = RawFrame(8, 8, "RGGB", np.zeros((8, 8)))
        with pytest.raises(RawFrameError):
            extract_rgb(frame, RegionOfInterest(x0=4, y0=4, w=6, h=4))


class TestLedArea:

    def test_dark(self):
        assert led_area_fraction(RawFrame(8, 8, "RGGB", np.zeros((8, 8))), 0.5) == 0.0

    def test_saturated(self):
        assert led_area_fraction(RawFrame(8, 8, "RGGB", np.full((8, 8), 4095)), 0.5) == 1.0

    def test_quarter(self):
        samples = np.zeros((8, 8))
        samples[:4, :4] = 4095
        assert led_area_fraction(RawFrame(8, 8, "RGGB", samples), 0.5) == 0.25

    def test_threshold_range(self):
        with pytest.raises(ValueError):
            led_area_fraction(RawFrame(8, 8, "RGGB", np.zeros((8, 8))), 1.0)

    def test_lit_block_area(self):
        frame = synthesize_frame(RgbIntensity(r=1.0, g=1.0, b=1.0), led_count=16)
        assert led_area_fraction(frame, 0.5) == pytest.approx(16 * 64 / (128 * 128))


class TestFrames:

    def test_rejects_odd_size(self):
        with pytest.raises(RawFrameError):
            RawFrame(7, 8, "RGGB", np.zeros((8, 7)))

    def test_rejects_out_of_range_samples(self):
        with pytest.raises(RawFrameError):
            RawFrame(2, 2, "RGGB", np.array([[4096, 0], [0, 0]]))

    @pytest.mark.parametrize("bad", [[[100.5, 0], [0, 0]], [[np.nan, 0], [0, 0]]])
    def test_rejects_fractional_samples(self, bad):
        with pytest.raises(RawFrameError):
            RawFrame(2, 2, "RGGB", np.array(bad))

    def test_whole_float_samples_accepted(self):
        frame = RawFrame(2, 2, "RGGB", np.array([[100.0, 0.0], [0.0, 4095.0]]))
        assert frame.samples.dtype == np.uint16
        assert frame.samples.tolist() == [[100, 0], [0, 4095]]

    def test_rejects_unknown_pattern(self):
        with pytest.raises(RawFrameError):
            RawFrame(2, 2, "RGBG", np.zeros((2, 2)))

    def test_container_round_trip(self, rng):
        frame = RawFrame(16, 8, "BGGR", rng.integers(0, 4096, size=(8, 16)))
        decoded = decode_raw_frame(encode_raw_frame(frame))
        assert decoded.pattern == "BGGR"
        assert np.array_equal(decoded.samples, frame.samples)

    def test_container_rejects_bad_magic(self):
        data = bytearray(encode_raw_frame(RawFrame(2, 2, "RGGB", np.zeros((2, 2)))))
        data[:4] = b"XXXX"
        with pytest.raises(RawFrameError):
            decode_raw_frame(bytes(data))

    def test_container_rejects_truncation(self):
        data = encode_raw_frame(RawFrame(4, 4, "RGGB", np.zeros((4, 4))))
        with pytest.raises(RawFrameError):
            decode_raw_frame(data[:-2])

    def test_directory_with_manifest(self, tmp_path, constellation):
        symbols = [5, 200, 511]
        for i, k in enumerate(symbols):
            write_raw_frame(synthesize_frame(constellation.drives[k], led_count=9), tmp_path / f"f{i}.occr")
        write_manifest(tmp_path, symbols, {"led_count": 9})
        rgb = extract_directory(tmp_path, lit_roi(9))
        assert rgb.shape == (3, 3)
        assert np.max(np.abs(rgb - constellation.drives[symbols])) <= 1 / 4095
        assert read_manifest(tmp_path)["symbols"] == symbols
        assert read_raw_frame(tmp_path / "f0.occr").width == 128

    def test_empty_directory(self, tmp_path):
        with pytest.raises(RawFrameError):
            extract_directory(tmp_path, RegionOfInterest(x0=0, y0=0, w=2, h=2))

    def test_preview(self, tmp_path):
        frame = synthesize_frame([1.0, 0.0, 0.0], led_count=4)
        path = write_frame_preview(frame, tmp_path / "p.png")
        with Image.open(path) as image:
            assert image.size == (64, 64)
