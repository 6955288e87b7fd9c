"""Raster I/O and the planar float image container.

Only 8-bit, 3-channel data is accepted: binary PPM (P6, maxval 255) and
truecolor PNG. Samples are stored as float32 planes with shape (3, H, W).
"""

from __future__ import annotations

import enum
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image


class ColorSpace(str, enum.Enum):
    SRGB = "srgb"
    LINEAR_RGB = "linear_rgb"
    YUV = "yuv"
    LAB = "lab"


# Nominal (min, max) per plane, used for display offsets and metadata.
NOMINAL_RANGES = {
    ColorSpace.SRGB: ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)),
    ColorSpace.LINEAR_RGB: ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)),
    ColorSpace.YUV: ((0.0, 1.0), (-0.5, 0.5), (-0.5, 0.5)),
    ColorSpace.LAB: ((0.0, 100.0), (-128.0, 127.0), (-128.0, 127.0)),
}

PLANE_NAMES = {
    ColorSpace.SRGB: ("R", "G", "B"),
    ColorSpace.LINEAR_RGB: ("R", "G", "B"),
    ColorSpace.YUV: ("Y", "U", "V"),
    ColorSpace.LAB: ("L", "a", "b"),
}


class ImageFormatError(ValueError):
    """Raised for unsupported or malformed image files."""


@dataclass(frozen=True, eq=False)
class PlanarImage:
    """Three same-sized float planes tagged with a color space.

    ``planes`` has shape (3, height, width). The array is made read-only on
    construction so instances can be shared between threads.
    """

    planes: np.ndarray
    space: ColorSpace = ColorSpace.SRGB
    ranges: tuple = field(default=None)

    def __post_init__(self):
        planes = np.array(self.planes, dtype=np.float32, copy=True)
        if planes.ndim != 3 or planes.shape[0] != 3:
            raise ValueError(f"expected planes of shape (3, H, W), got {planes.shape}")
        if planes.shape[1] < 1 or planes.shape[2] < 1:
            raise ValueError("image must be at least 1x1")
        planes.setflags(write=False)
        object.__setattr__(self, "planes", planes)
        object.__setattr__(self, "space", ColorSpace(self.space))
        if self.ranges is None:
            object.__setattr__(self, "ranges", NOMINAL_RANGES[self.space])

    @property
    def height(self) -> int:
        return self.planes.shape[1]

    @property
    def width(self) -> int:
        return self.planes.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def as_float64(self) -> np.ndarray:
        return self.planes.astype(np.float64)

    def to_bytes(self) -> np.ndarray:
        """Interleaved (H, W, 3) uint8 samples; SRGB only."""
        if self.space is not ColorSpace.SRGB:
            raise ValueError(f"cannot quantize a {self.space.value} image to 8-bit; convert to sRGB first")
        return quantize_8bit(self.as_float64()).transpose(1, 2, 0).copy()

    @classmethod
    def from_bytes(cls, rgb: np.ndarray) -> "PlanarImage":
        rgb = np.asarray(rgb)
        if rgb.dtype != np.uint8 or rgb.ndim != 3 or rgb.shape[2] != 3:
            raise ValueError("expected an (H, W, 3) uint8 array")
        return cls(rgb.transpose(2, 0, 1).astype(np.float64) / 255.0, ColorSpace.SRGB)


def quantize_8bit(values: np.ndarray) -> np.ndarray:
    """round(clamp(s, 0, 1) * 255) with halves rounded away from zero."""
    scaled = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0) * 255.0
    # all values are non-negative after the clamp, so floor(x + 0.5) is half-away-from-zero
    return np.floor(scaled + 0.5).astype(np.uint8)


def _read_ppm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P6":
        raise ImageFormatError(f"{path}: not a binary PPM (P6)")
    tokens = []
    pos = 2
    while len(tokens) < 3:
        if pos >= len(data):
            raise ImageFormatError(f"{path}: truncated PPM header")
        ch = data[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            end = data.find(b"\n", pos)
            if end < 0:
                raise ImageFormatError(f"{path}: truncated PPM header")
            pos = end + 1
        else:
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            tok = data[start:pos]
            if not tok.isdigit():
                raise ImageFormatError(f"{path}: bad PPM header token {tok!r}")
            tokens.append(int(tok))
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise ImageFormatError(f"{path}: truncated PPM header")
    pos += 1  # exactly one whitespace byte separates header and raster
    width, height, maxval = tokens
    if maxval != 255:
        raise ImageFormatError(f"{path}: maxval {maxval} unsupported (only 255)")
    if width < 1 or height < 1:
        raise ImageFormatError(f"{path}: empty image")
    need = width * height * 3
    raster = data[pos:pos + need]
    if len(raster) < need:
        raise ImageFormatError(f"{path}: truncated raster ({len(raster)} of {need} bytes)")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def _read_png(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ImageFormatError(f"{path}: not a PNG file")
            if im.mode != "RGB":
                raise ImageFormatError(f"{path}: PNG mode {im.mode} unsupported (need 8-bit RGB)")
            im.load()
            return np.asarray(im, dtype=np.uint8)
    except ImageFormatError:
        raise
    except (OSError, SyntaxError) as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc


def read_image(path) -> PlanarImage:
    """Read a P6 PPM or 8-bit RGB PNG into an sRGB-tagged image."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
    if magic[:2] == b"P6":
        rgb = _read_ppm(path)
    elif magic == b"\x89PNG\r\n\x1a\n":
        rgb = _read_png(path)
    else:
        raise ImageFormatError(f"{path}: unsupported image format")
    return PlanarImage.from_bytes(rgb)


def write_image(path, image: PlanarImage) -> None:
    """Write an sRGB image as P6 (``.ppm``/``.pnm``) or PNG (anything else)."""
    if image.space is not ColorSpace.SRGB:
        raise ValueError(f"write_image needs an sRGB image, got {image.space.value}")
    rgb = image.to_bytes()
    ext = os.path.splitext(str(path))[1].lower()
    if ext in (".ppm", ".pnm"):
        header = f"P6\n{image.width} {image.height}\n255\n".encode("ascii")
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(rgb.tobytes())
    else:
        Image.fromarray(rgb, mode="RGB").save(path, format="PNG")


def write_gray16(path, plane: np.ndarray) -> None:
    """Store a [0, 1] plane as a 16-bit grayscale PNG."""
    q = np.floor(np.clip(np.asarray(plane, dtype=np.float64), 0.0, 1.0) * 65535.0 + 0.5)
    Image.fromarray(q.astype(np.uint16)).save(path, format="PNG")


def read_gray16(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.ndim != 2:
        raise ImageFormatError(f"{path}: expected a single-channel PNG")
    scale = 65535.0 if arr.dtype != np.uint8 else 255.0
    return arr.astype(np.float64) / scale
