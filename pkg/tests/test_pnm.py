import numpy as np
import pytest

from maskkit import GrayImage, MaskMap, bare_grid, gen_mesh
from maskkit.pnm import read_gray, read_header_comments, read_mask, write_gray, write_mask


class TestMaskRoundTrip:
    def test_round_trip(self, tmp_path):
        g = bare_grid(7, 7)
        mask = gen_mesh(g, "0.6", 11)
        path = tmp_path / "m.pbm"
        write_mask(path, mask, ["pattern=mesh", "seed=11"])
        back = read_mask(path)
        assert back.cells == mask.cells
        assert (back.grid.cols, back.grid.rows) == (7, 7)

    def test_comments_survive(self, tmp_path):
        g = bare_grid(2, 2)
        path = tmp_path / "m.pbm"
        write_mask(path, MaskMap(g, (True, False, False, True)), ["ratio=0.5"])
        assert "ratio=0.5" in read_header_comments(path)

    def test_packed_digits(self, tmp_path):
        path = tmp_path / "packed.pbm"
        path.write_bytes(b"P1\n# tight raster\n3 2\n010\n101\n")
        mask = read_mask(path)
        assert mask.cells == (False, True, False, True, False, True)
        path.write_bytes(b"P1 3 2 010101")
        assert read_mask(path).cells == (False, True, False, True, False, True)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "x.pbm"
        path.write_bytes(b"P4\n2 2\n")
        with pytest.raises(ValueError, match="magic"):
            read_mask(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "x.pbm"
        path.write_bytes(b"P1\n3 3\n0 1 0\n")
        with pytest.raises(ValueError, match="truncated"):
            read_mask(path)

    def test_invalid_digit(self, tmp_path):
        path = tmp_path / "x.pbm"
        path.write_bytes(b"P1\n2 1\n0 2\n")
        with pytest.raises(ValueError, match="digit"):
            read_mask(path)


class TestGrayRoundTrip:
    def _image(self, max_value=255):
        rng = np.random.default_rng(4)
        return GrayImage.from_array(
            rng.integers(0, max_value + 1, size=(5, 9)), max_value
        )

    def test_plain(self, tmp_path):
        img = self._image()
        path = tmp_path / "img.pgm"
        write_gray(path, img, ["source=test"])
        assert read_gray(path) == img
        assert "source=test" in read_header_comments(path)

    def test_binary(self, tmp_path):
        img = self._image()
        path = tmp_path / "img.pgm"
        write_gray(path, img, binary=True)
        assert read_gray(path) == img

    def test_binary_sixteen_bit(self, tmp_path):
        img = self._image(max_value=65535)
        path = tmp_path / "img16.pgm"
        write_gray(path, img, binary=True)
        assert read_gray(path) == img

    def test_plain_parses_arbitrary_whitespace(self, tmp_path):
        path = tmp_path / "ws.pgm"
        path.write_bytes(b"P2\n# c\n3   2\n255\n1 2 3\n  4\t5 6\n")
        img = read_gray(path)
        assert img.pixels == (1, 2, 3, 4, 5, 6)

    def test_bad_maxval(self, tmp_path):
        path = tmp_path / "x.pgm"
        path.write_bytes(b"P2\n1 1\n70000\n0\n")
        with pytest.raises(ValueError, match="max value"):
            read_gray(path)

    def test_truncated_binary(self, tmp_path):
        path = tmp_path / "x.pgm"
        path.write_bytes(b"P5\n4 4\n255\nabc")
        with pytest.raises(ValueError, match="truncated"):
            read_gray(path)
