"""Offset application under per-unit enable flags.

Two kernels produce bit-identical planes: `apply_ccso` walks samples one by
one and is the reference, `apply_ccso_batch` runs the whole plane through a
vectorized fetch of the offset table (the numpy analog of a byte-shuffle
LUT lookup) and exists for speed. Units whose flag is off copy through.
"""

from __future__ import annotations

import numpy as np

from .constants import UNIT_SIZE_LUMA
from .frame import Plane, plane_dims


def empty_lut(max_band_log2: int) -> np.ndarray:
    """All-zero offset LUT at full packed stride for the given band count."""
    return np.zeros((1 << max_band_log2) << 4, dtype=np.int32)


def unit_size_for(plane: Plane) -> int:
    """Filter-unit side length in samples of the given plane."""
    return UNIT_SIZE_LUMA // plane.subsampling


def unit_grid_shape(width: int, height: int) -> tuple[int, int]:
    """(rows, cols) of the per-unit flag grid for a luma width x height frame.

    The same grid shape covers all three planes: chroma units are half the
    side length on a half-resolution plane.
    """
    return (
        -(-height // UNIT_SIZE_LUMA),
        -(-width // UNIT_SIZE_LUMA),
    )


def unit_bounds(
    width: int, height: int, plane: Plane, unit_row: int, unit_col: int
) -> tuple[int, int, int, int]:
    """Half-open (y0, y1, x0, x1) rectangle of one unit in plane coordinates.

    width/height are luma dimensions. Units on the bottom/right edge are
    clipped to the plane.
    """
    rows, cols = unit_grid_shape(width, height)
    if not (0 <= unit_row < rows and 0 <= unit_col < cols):
        raise IndexError(
            f"unit ({unit_row}, {unit_col}) outside {rows}x{cols} grid"
        )
    pw, ph = plane_dims(width, height, plane)
    size = unit_size_for(plane)
    y0 = unit_row * size
    x0 = unit_col * size
    return y0, min(y0 + size, ph), x0, min(x0 + size, pw)


def full_unit_flags(width: int, height: int, enabled: bool = True) -> np.ndarray:
    return np.full(unit_grid_shape(width, height), enabled, dtype=bool)


def unit_mask(plane_shape: tuple[int, int], unit_flags: np.ndarray, plane: Plane) -> np.ndarray:
    """Per-sample boolean mask expanding the unit flag grid over a plane."""
    size = unit_size_for(plane)
    h, w = plane_shape
    return np.repeat(np.repeat(unit_flags, size, axis=0), size, axis=1)[:h, :w]


def _check_filter_args(plane_samples, class_map, lut, unit_flags, plane):
    if class_map.shape != plane_samples.shape:
        raise ValueError(
            f"class map shape {class_map.shape} != plane shape {plane_samples.shape}"
        )
    size = unit_size_for(plane)
    h, w = plane_samples.shape
    expected = (-(-h // size), -(-w // size))
    if unit_flags.shape != expected:
        raise ValueError(
            f"unit flag grid {unit_flags.shape} does not cover plane; expected {expected}"
        )
    if len(lut) < int(class_map.max()) + 1:
        raise ValueError("LUT shorter than the largest class index")


def apply_ccso(
    plane_samples: np.ndarray,
    class_map: np.ndarray,
    lut: np.ndarray,
    unit_flags: np.ndarray,
    bit_depth: int,
    plane: Plane,
) -> np.ndarray:
    """Sample-at-a-time reference: out = clip(in + lut[class]) inside enabled units.

    The input plane is left untouched; disabled units copy through.
    """
    _check_filter_args(plane_samples, class_map, lut, unit_flags, plane)
    out = plane_samples.copy()
    hi = (1 << bit_depth) - 1
    size = unit_size_for(plane)
    h, w = plane_samples.shape
    offsets = [int(v) for v in lut]
    rows, cols = unit_flags.shape
    for ur in range(rows):
        for uc in range(cols):
            if not unit_flags[ur, uc]:
                continue
            y0, y1 = ur * size, min((ur + 1) * size, h)
            x0, x1 = uc * size, min((uc + 1) * size, w)
            for y in range(y0, y1):
                vals = plane_samples[y, x0:x1].tolist()
                cls = class_map[y, x0:x1].tolist()
                for i in range(len(vals)):
                    v = vals[i] + offsets[cls[i]]
                    vals[i] = 0 if v < 0 else hi if v > hi else v
                out[y, x0:x1] = vals
    return out


def apply_ccso_batch(
    plane_samples: np.ndarray,
    class_map: np.ndarray,
    lut: np.ndarray,
    unit_flags: np.ndarray,
    bit_depth: int,
    plane: Plane,
) -> np.ndarray:
    """Vectorized kernel, bit-identical to apply_ccso on all inputs."""
    _check_filter_args(plane_samples, class_map, lut, unit_flags, plane)
    hi = (1 << bit_depth) - 1
    shifted = plane_samples.astype(np.int32)
    shifted += lut[class_map]
    np.clip(shifted, 0, hi, out=shifted)
    if unit_flags.all():
        return shifted.astype(plane_samples.dtype)
    mask = unit_mask(plane_samples.shape, unit_flags, plane)
    return np.where(mask, shifted, plane_samples).astype(plane_samples.dtype)
