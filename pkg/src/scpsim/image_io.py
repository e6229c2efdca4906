"""Byte-exact image buffers and portable anymap (PGM/PPM) I/O.

Only binary P5/P6 with maxval 255 are supported; the whole pipeline is
8-bit.  Readers tolerate header whitespace and '#' comments, writers
emit a canonical minimal header, and a round trip through
``write_pnm``/``read_pnm`` is the identity on any valid buffer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fixed_point import div256_trunc_np


class ChannelMismatch(ValueError):
    """Operation applied to a buffer with the wrong channel count."""


class PnmError(ValueError):
    """Base class for malformed portable-anymap input."""


class MalformedHeader(PnmError):
    pass


class UnsupportedMaxval(PnmError):
    pass


class TruncatedData(PnmError):
    pass


@dataclass(eq=False)
class ImageBuffer:
    """Row-major, interleaved, unsigned 8-bit image samples."""

    width: int
    height: int
    channels: int
    samples: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("image dimensions must be positive")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        self.samples = np.ascontiguousarray(self.samples, dtype=np.uint8).ravel()
        expected = self.width * self.height * self.channels
        if self.samples.size != expected:
            raise ValueError(
                f"sample count {self.samples.size} != width*height*channels = {expected}"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ImageBuffer":
        """Build from an (h, w) or (h, w, c) array."""
        arr = np.asarray(arr)
        if arr.ndim == 2:
            h, w = arr.shape
            c = 1
        elif arr.ndim == 3:
            h, w, c = arr.shape
        else:
            raise ValueError("expected a 2-D or 3-D array")
        return cls(width=w, height=h, channels=c, samples=arr)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    def as_array(self) -> np.ndarray:
        """View as (height, width, channels)."""
        return self.samples.reshape(self.height, self.width, self.channels)

    def __eq__(self, other):
        if not isinstance(other, ImageBuffer):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.channels == other.channels
            and np.array_equal(self.samples, other.samples)
        )


# ---------------------------------------------------------------------------
# Portable anymap codec
# ---------------------------------------------------------------------------

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next header token, skipping whitespace and '#' comment lines."""
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch in _WHITESPACE:
            pos += 1
        elif ch == b"#":
            while pos < n and data[pos : pos + 1] != b"\n":
                pos += 1
        else:
            break
    if pos >= n:
        raise MalformedHeader("header ended early")
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, pos = _next_token(data, pos)
    if not tok.isdigit():
        raise MalformedHeader(f"bad {what}: {tok!r}")
    return int(tok), pos


def read_pnm(data: bytes) -> ImageBuffer:
    """Decode binary PGM (P5) or PPM (P6) bytes, maxval 255 only."""
    magic, pos = _next_token(bytes(data), 0)
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise MalformedHeader(f"unsupported magic {magic!r}")
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise MalformedHeader("non-positive dimensions")
    if maxval != 255:
        raise UnsupportedMaxval(f"maxval {maxval} unsupported, only 255")
    # Exactly one whitespace byte separates the header from the raster.
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise MalformedHeader("missing whitespace after maxval")
    pos += 1
    need = width * height * channels
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise TruncatedData(f"raster holds {len(raster)} of {need} bytes")
    samples = np.frombuffer(raster, dtype=np.uint8).copy()
    return ImageBuffer(width=width, height=height, channels=channels, samples=samples)


def write_pnm(img: ImageBuffer) -> bytes:
    """Encode as binary P5/P6 with a minimal comment-free header."""
    magic = "P5" if img.channels == 1 else "P6"
    header = f"{magic}\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.samples.tobytes()


def read_raw(data: bytes, width: int, height: int, channels: int) -> ImageBuffer:
    """Decode a headerless interleaved dump with explicit geometry."""
    need = width * height * channels
    if len(data) < need:
        raise TruncatedData(f"raw dump holds {len(data)} of {need} bytes")
    samples = np.frombuffer(bytes(data[:need]), dtype=np.uint8).copy()
    return ImageBuffer(width=width, height=height, channels=channels, samples=samples)


def write_raw(img: ImageBuffer) -> bytes:
    """Encode as a headerless interleaved dump."""
    return img.samples.tobytes()


def to_gray(img: ImageBuffer) -> ImageBuffer:
    """Collapse a 3-channel image to its fixed-point luminance channel."""
    if img.channels != 3:
        raise ChannelMismatch(f"to_gray needs 3 channels, got {img.channels}")
    rgb = img.samples.reshape(-1, 3).astype(np.int64)
    y = div256_trunc_np(77 * rgb[:, 0] + 150 * rgb[:, 1] + 29 * rgb[:, 2])
    return ImageBuffer(
        width=img.width, height=img.height, channels=1, samples=y.astype(np.uint8)
    )
