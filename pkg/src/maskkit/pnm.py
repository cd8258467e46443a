"""Portable anymap I/O: P1 bitmaps for masks, P2/P5 graymaps for images.

Masks are stored as plain bitmaps (1 = masked) so fixtures stay diffable;
provenance rides along as # comments after the magic number.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .grid import GrayImage, MaskMap, bare_grid

_WS = b" \t\r\n\v\f"


class _Scanner:
    def __init__(self, data: bytes, name: str):
        self.data = data
        self.pos = 0
        self.name = name

    def _skip_filler(self) -> None:
        while self.pos < len(self.data):
            c = self.data[self.pos : self.pos + 1]
            if c in (b"#",):
                while self.pos < len(self.data) and self.data[self.pos : self.pos + 1] != b"\n":
                    self.pos += 1
            elif c in _WS:
                self.pos += 1
            else:
                return

    def token(self) -> bytes:
        self._skip_filler()
        start = self.pos
        while self.pos < len(self.data) and self.data[self.pos : self.pos + 1] not in _WS:
            self.pos += 1
        if start == self.pos:
            raise ValueError(f"{self.name}: truncated file")
        return self.data[start : self.pos]

    def int_token(self) -> int:
        tok = self.token()
        try:
            return int(tok)
        except ValueError:
            raise ValueError(f"{self.name}: expected integer, got {tok!r}") from None

    def bit(self) -> int:
        # Plain-bitmap raster digits may be packed without separators.
        self._skip_filler()
        if self.pos >= len(self.data):
            raise ValueError(f"{self.name}: truncated raster")
        c = self.data[self.pos : self.pos + 1]
        self.pos += 1
        if c == b"0":
            return 0
        if c == b"1":
            return 1
        raise ValueError(f"{self.name}: invalid bitmap digit {c!r}")


def _comment_block(comments: Iterable[str]) -> bytes:
    lines = []
    for c in comments:
        if "\n" in c:
            raise ValueError("comment lines must not contain newlines")
        lines.append(f"# {c}\n".encode())
    return b"".join(lines)


def write_mask(path: str | Path, mask: MaskMap, comments: Sequence[str] = ()) -> None:
    grid = mask.grid
    rows = mask.as_array().astype(np.uint8)
    body = b"".join(b" ".join(b"%d" % v for v in row) + b"\n" for row in rows)
    data = b"P1\n" + _comment_block(comments) + f"{grid.cols} {grid.rows}\n".encode() + body
    Path(path).write_bytes(data)


def read_mask(path: str | Path) -> MaskMap:
    """Read a plain bitmap as a mask over a bare (1 pixel per patch) grid."""
    name = str(path)
    sc = _Scanner(Path(path).read_bytes(), name)
    magic = sc.token()
    if magic != b"P1":
        raise ValueError(f"{name}: expected P1 bitmap, got magic {magic!r}")
    cols = sc.int_token()
    rows = sc.int_token()
    cells = [bool(sc.bit()) for _ in range(cols * rows)]
    return MaskMap(bare_grid(cols, rows), tuple(cells))


def write_gray(
    path: str | Path,
    img: GrayImage,
    comments: Sequence[str] = (),
    binary: bool = False,
) -> None:
    header_magic = b"P5" if binary else b"P2"
    head = (
        header_magic
        + b"\n"
        + _comment_block(comments)
        + f"{img.width} {img.height}\n{img.max_value}\n".encode()
    )
    arr = img.as_array()
    if binary:
        dtype = ">u2" if img.max_value > 255 else np.uint8
        body = arr.astype(dtype).tobytes()
    else:
        body = b"".join(b" ".join(b"%d" % v for v in row) + b"\n" for row in arr)
    Path(path).write_bytes(head + body)


def read_gray(path: str | Path) -> GrayImage:
    name = str(path)
    data = Path(path).read_bytes()
    sc = _Scanner(data, name)
    magic = sc.token()
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"{name}: expected P2/P5 graymap, got magic {magic!r}")
    width = sc.int_token()
    height = sc.int_token()
    maxval = sc.int_token()
    if not 0 < maxval < 65536:
        raise ValueError(f"{name}: max value {maxval} outside [1, 65535]")
    count = width * height
    if magic == b"P2":
        pixels = [sc.int_token() for _ in range(count)]
    else:
        sc.pos += 1  # single whitespace byte separates header from raster
        itemsize = 2 if maxval > 255 else 1
        raw = data[sc.pos : sc.pos + count * itemsize]
        if len(raw) < count * itemsize:
            raise ValueError(f"{name}: truncated raster")
        dtype = ">u2" if maxval > 255 else np.uint8
        pixels = [int(v) for v in np.frombuffer(raw, dtype=dtype)]
    return GrayImage(width=width, height=height, pixels=tuple(pixels), max_value=maxval)


def read_header_comments(path: str | Path) -> list[str]:
    """Comment lines (without the leading '# ') from a portable anymap."""
    out = []
    for line in Path(path).read_bytes().split(b"\n"):
        if line.startswith(b"#"):
            out.append(line[1:].strip().decode())
    return out
