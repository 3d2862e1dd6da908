"""Binary netpbm codecs (8-bit PGM P5 and PPM P6), plus optional PNG reading.

These two formats are implemented in-house so image round-trips are
bit-exact and deterministic. PNG is read-only sugar behind the optional
Pillow dependency; nothing in the test suite or pipelines requires it.

Arrays are uint8, shaped (H, W) for grayscale and (H, W, 3) for RGB.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import DataError


def _read_header_tokens(buf: bytes, path, n_tokens: int):
    """Parse the ASCII header: magic + n_tokens integers, '#' comments
    allowed anywhere between tokens. Returns (tokens, data offset)."""
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < n_tokens:
        if i >= len(buf):
            raise DataError(f"{path}: truncated netpbm header")
        c = buf[i : i + 1]
        if c == b"#":
            nl = buf.find(b"\n", i)
            if nl < 0:
                raise DataError(f"{path}: unterminated comment in header")
            i = nl + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(buf) and not buf[j : j + 1].isspace() and buf[j : j + 1] != b"#":
                j += 1
            tokens.append(buf[i:j])
            i = j
    # exactly one whitespace byte separates the header from raster data
    if i >= len(buf) or not buf[i : i + 1].isspace():
        raise DataError(f"{path}: missing separator after netpbm header")
    return tokens, i + 1


def _read_netpbm(path: str | Path, magic: bytes, channels: int) -> np.ndarray:
    buf = Path(path).read_bytes()
    if not buf.startswith(magic):
        raise DataError(f"{path}: expected {magic.decode()} file")
    tokens, offset = _read_header_tokens(buf[2:], path, 3)
    offset += 2
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise DataError(f"{path}: non-numeric netpbm header fields")
    if w < 1 or h < 1:
        raise DataError(f"{path}: bad image extents {w}x{h}")
    if maxval != 255:
        raise DataError(f"{path}: only 8-bit images supported (maxval {maxval})")
    need = w * h * channels
    data = buf[offset : offset + need]
    if len(data) != need:
        raise DataError(f"{path}: raster has {len(data)} bytes, expected {need}")
    arr = np.frombuffer(data, dtype=np.uint8)
    if channels == 1:
        return arr.reshape(h, w).copy()
    return arr.reshape(h, w, channels).copy()


def read_pgm(path: str | Path) -> np.ndarray:
    """8-bit binary PGM -> uint8 (H, W)."""
    return _read_netpbm(path, b"P5", 1)


def read_ppm(path: str | Path) -> np.ndarray:
    """8-bit binary PPM -> uint8 (H, W, 3)."""
    return _read_netpbm(path, b"P6", 3)


def write_pgm(path: str | Path, pixels: np.ndarray) -> None:
    """uint8 (H, W) -> binary PGM."""
    if pixels.ndim != 2:
        raise DataError(f"write_pgm needs (H,W), got shape {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise DataError(f"write_pgm needs uint8, got {pixels.dtype}")
    h, w = pixels.shape
    header = f"P5\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(pixels).tobytes())


def write_ppm(path: str | Path, pixels: np.ndarray) -> None:
    """uint8 (H, W, 3) -> binary PPM."""
    if pixels.ndim != 3 or pixels.shape[2] != 3:
        raise DataError(f"write_ppm needs (H,W,3), got shape {pixels.shape}")
    if pixels.dtype != np.uint8:
        raise DataError(f"write_ppm needs uint8, got {pixels.dtype}")
    h, w, _ = pixels.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + np.ascontiguousarray(pixels).tobytes())


def read_image(path: str | Path, allow_png: bool = False) -> np.ndarray:
    """Decode by suffix: .pgm / .ppm always, .png when allow_png.

    Returns uint8 (H, W) or (H, W, 3).
    """
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".ppm":
        return read_ppm(path)
    if suffix == ".png":
        if not allow_png:
            raise DataError(
                f"{path}: PNG decoding is optional; pass allow_png=True "
                "(requires the 'png' extra)"
            )
        try:
            from PIL import Image
        except ImportError:
            raise DataError("PNG support needs Pillow: pip install anomdet[png]")
        with Image.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("RGB" if im.mode in ("RGBA", "P", "CMYK") else "L")
            return np.asarray(im, dtype=np.uint8)
    raise DataError(f"{path}: unsupported image format {suffix!r}")
