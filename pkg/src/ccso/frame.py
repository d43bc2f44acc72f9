"""Planar YUV 4:2:0 frame model and raw-file I/O.

Frames carry three integer sample planes (Y at full resolution, Cb/Cr at
half resolution per axis, rounded up) plus a shared bit depth of 8 or 10.
Planes are numpy arrays: uint8 for 8-bit content, uint16 for 10-bit. A frame
is treated as immutable once built; filtering returns new planes.

Raw file layout (".yuv"): planes in Y, Cb, Cr order, row-major, no padding;
one byte per sample at 8 bit, two bytes little-endian (LSB-aligned, values
0..1023) at 10 bit. Geometry and bit depth are not stored in the file.
"""

from __future__ import annotations

import dataclasses
import enum
from typing import Iterator

import numpy as np


class Plane(enum.IntEnum):
    Y = 0
    CB = 1
    CR = 2

    @property
    def subsampling(self) -> int:
        """Per-axis subsampling factor relative to luma (1 for Y, 2 for Cb/Cr)."""
        return 1 if self is Plane.Y else 2


def chroma_dims(width: int, height: int) -> tuple[int, int]:
    """Chroma (width, height) of a 4:2:0 frame with the given luma dims."""
    return (width + 1) // 2, (height + 1) // 2


def plane_dims(width: int, height: int, plane: Plane) -> tuple[int, int]:
    if plane is Plane.Y:
        return width, height
    return chroma_dims(width, height)


def sample_dtype(bit_depth: int) -> np.dtype:
    if bit_depth not in (8, 10):
        raise ValueError(f"bit depth must be 8 or 10, got {bit_depth}")
    return np.dtype(np.uint8) if bit_depth == 8 else np.dtype(np.uint16)


def clip_pixel(v: int, bit_depth: int) -> int:
    """Clamp a signed value into the legal sample range [0, 2^bit_depth - 1]."""
    hi = (1 << bit_depth) - 1
    return 0 if v < 0 else hi if v > hi else v


@dataclasses.dataclass
class Frame:
    """One YUV 4:2:0 frame.

    Attributes:
      width: Luma width in samples.
      height: Luma height in samples.
      bit_depth: Bits per sample, 8 or 10; shared by all planes.
      y, cb, cr: Sample planes, shaped (height, width) for y and
        (ceil(height/2), ceil(width/2)) for cb/cr.
    """

    width: int
    height: int
    bit_depth: int
    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"bad frame geometry {self.width}x{self.height}")
        dtype = sample_dtype(self.bit_depth)
        cw, ch = chroma_dims(self.width, self.height)
        expected = {
            "y": (self.height, self.width),
            "cb": (ch, cw),
            "cr": (ch, cw),
        }
        hi = (1 << self.bit_depth) - 1
        for name, shape in expected.items():
            plane = getattr(self, name)
            if plane.shape != shape:
                raise ValueError(
                    f"{name} plane shape {plane.shape}, expected {shape}"
                )
            if plane.dtype != dtype:
                raise ValueError(
                    f"{name} plane dtype {plane.dtype}, expected {dtype}"
                )
            if plane.size and int(plane.max()) > hi:
                raise ValueError(
                    f"{name} plane holds values above {hi} at {self.bit_depth} bit"
                )

    def plane(self, plane: Plane) -> np.ndarray:
        return (self.y, self.cb, self.cr)[plane]

    def planes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.y, self.cb, self.cr

    def copy(self) -> "Frame":
        return Frame(
            self.width,
            self.height,
            self.bit_depth,
            self.y.copy(),
            self.cb.copy(),
            self.cr.copy(),
        )

    def with_plane(self, plane: Plane, samples: np.ndarray) -> "Frame":
        """New frame sharing all planes except `plane`, which is replaced."""
        out = [self.y, self.cb, self.cr]
        out[plane] = samples
        return Frame(self.width, self.height, self.bit_depth, *out)

    def same_geometry(self, other: "Frame") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.bit_depth == other.bit_depth
        )


def blank_frame(width: int, height: int, bit_depth: int = 8, fill: int = 0) -> Frame:
    dtype = sample_dtype(bit_depth)
    cw, ch = chroma_dims(width, height)
    return Frame(
        width,
        height,
        bit_depth,
        np.full((height, width), fill, dtype=dtype),
        np.full((ch, cw), fill, dtype=dtype),
        np.full((ch, cw), fill, dtype=dtype),
    )


def sample_clamped(frame: Frame, plane: Plane, y: int, x: int) -> int:
    """Plane sample at (y, x) with each coordinate clamped into the plane.

    Total over all integer coordinates; out-of-frame taps replicate the
    nearest edge sample.
    """
    grid = frame.plane(plane)
    h, w = grid.shape
    cy = 0 if y < 0 else h - 1 if y >= h else y
    cx = 0 if x < 0 else w - 1 if x >= w else x
    return int(grid[cy, cx])


def colocated_luma(frame: Frame, chroma_y: int, chroma_x: int) -> int:
    """Luma sample co-located with a chroma sample under 4:2:0 subsampling.

    The co-located sample is the top-left of the 2x2 luma cluster covering
    the chroma position, i.e. luma (2*chroma_y, 2*chroma_x) clamped into the
    luma plane. The chroma coordinates themselves must be in bounds.
    """
    cw, ch = chroma_dims(frame.width, frame.height)
    if not (0 <= chroma_y < ch and 0 <= chroma_x < cw):
        raise ValueError(
            f"chroma coordinate ({chroma_y}, {chroma_x}) outside {cw}x{ch} plane"
        )
    return sample_clamped(frame, Plane.Y, 2 * chroma_y, 2 * chroma_x)


def frame_size_bytes(width: int, height: int, bit_depth: int) -> int:
    """Bytes one frame occupies in a raw planar file."""
    cw, ch = chroma_dims(width, height)
    samples = width * height + 2 * cw * ch
    return samples * (1 if bit_depth == 8 else 2)


def _read_plane(buf: np.ndarray, offset: int, w: int, h: int) -> tuple[np.ndarray, int]:
    n = w * h
    return buf[offset : offset + n].reshape((h, w)), offset + n


def frame_from_bytes(raw: bytes, width: int, height: int, bit_depth: int) -> Frame:
    dtype = np.dtype(np.uint8) if bit_depth == 8 else np.dtype("<u2")
    buf = np.frombuffer(raw, dtype=dtype)
    cw, ch = chroma_dims(width, height)
    y, off = _read_plane(buf, 0, width, height)
    cb, off = _read_plane(buf, off, cw, ch)
    cr, off = _read_plane(buf, off, cw, ch)
    if bit_depth != 8:
        y, cb, cr = (p.astype(np.uint16) for p in (y, cb, cr))
    else:
        y, cb, cr = (p.copy() for p in (y, cb, cr))
    return Frame(width, height, bit_depth, y, cb, cr)


def frame_to_bytes(frame: Frame) -> bytes:
    dtype = np.dtype(np.uint8) if frame.bit_depth == 8 else np.dtype("<u2")
    return b"".join(p.astype(dtype, copy=False).tobytes() for p in frame.planes())


def read_frames(
    path, width: int, height: int, bit_depth: int, max_frames: int | None = None
) -> list[Frame]:
    """Read all (or the first `max_frames`) frames of a raw planar file.

    The file size must be an exact multiple of the per-frame byte count;
    anything else raises ValueError naming the expected size.
    """
    frame_bytes = frame_size_bytes(width, height, bit_depth)
    frames = []
    with open(path, "rb") as f:
        while max_frames is None or len(frames) < max_frames:
            raw = f.read(frame_bytes)
            if not raw:
                break
            if len(raw) != frame_bytes:
                raise ValueError(
                    f"{path}: file size is not a multiple of the frame size; "
                    f"expected frames of {frame_bytes} bytes for "
                    f"{width}x{height} at {bit_depth} bit"
                )
            frames.append(frame_from_bytes(raw, width, height, bit_depth))
    if not frames:
        raise ValueError(
            f"{path}: no complete frame found; expected frames of "
            f"{frame_bytes} bytes for {width}x{height} at {bit_depth} bit"
        )
    return frames


def write_frames(path, frames: list[Frame] | Iterator[Frame]) -> None:
    with open(path, "wb") as f:
        for frame in frames:
            f.write(frame_to_bytes(frame))
