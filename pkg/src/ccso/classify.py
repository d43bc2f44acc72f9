"""Per-sample class indices derived from reconstructed luma.

Two classifiers feed the offset LUT: a band classifier keyed on the high
bits of the luma intensity, and an edge classifier keyed on the quantized
deltas between the center luma sample and two point-symmetric neighbor taps.
They run combined, or the band classifier runs alone. For chroma targets the
center sample is the co-located luma sample and the taps still move on the
luma grid.

The packed class index is (band << 4) | (edge0 << 2) | edge1, so a LUT for
``n`` bands spans ``n << 4`` slots with holes where an edge index 3 would
sit; the holes stay zero and make the per-sample LUT fetch unconditional.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .constants import (
    FILTER_SHAPE_TAPS,
    MAX_BAND_LOG2_BAND_ONLY,
    MAX_BAND_LOG2_COMBINED,
    QUANT_STEP_SIZES,
    interval_count,
)
from .frame import Frame, Plane


@dataclasses.dataclass(frozen=True)
class ClassifierConfig:
    """Frame-level classifier selection for one color plane.

    Attributes:
      bo_only: Band classifier alone when true, band+edge when false.
      max_band_log2: log2 of the band count; 0..7 band-only, 0..3 combined.
      quant_step_idx: Index into QUANT_STEP_SIZES (edge delta threshold).
      filter_shape_idx: Index into FILTER_SHAPE_TAPS (edge tap geometry).
      edge_clf: Edge quantizer type, 0 = three intervals, 1 = two.
      bit_depth: Sample bit depth the band shift is computed against.
    """

    bo_only: bool
    max_band_log2: int
    quant_step_idx: int = 0
    filter_shape_idx: int = 0
    edge_clf: int = 0
    bit_depth: int = 8

    def __post_init__(self):
        limit = MAX_BAND_LOG2_BAND_ONLY if self.bo_only else MAX_BAND_LOG2_COMBINED
        if not 0 <= self.max_band_log2 <= limit:
            raise ValueError(
                f"max_band_log2 {self.max_band_log2} out of range 0..{limit}"
                f" for bo_only={self.bo_only}"
            )
        if not 0 <= self.quant_step_idx < len(QUANT_STEP_SIZES):
            raise ValueError(f"quant_step_idx out of range: {self.quant_step_idx}")
        if not 0 <= self.filter_shape_idx < len(FILTER_SHAPE_TAPS):
            raise ValueError(f"filter_shape_idx out of range: {self.filter_shape_idx}")
        if self.edge_clf not in (0, 1):
            raise ValueError(f"edge_clf must be 0 or 1, got {self.edge_clf}")
        if self.bit_depth not in (8, 10):
            raise ValueError(f"bit depth must be 8 or 10, got {self.bit_depth}")

    @property
    def num_bands(self) -> int:
        return 1 << self.max_band_log2

    @property
    def num_classes(self) -> int:
        """LUT span at full packed stride, holes included."""
        return self.num_bands << 4

    @property
    def quant_step(self) -> int:
        return QUANT_STEP_SIZES[self.quant_step_idx]

    @property
    def intervals(self) -> int:
        return 1 if self.bo_only else interval_count(self.edge_clf)

    @property
    def tap_offset(self) -> tuple[int, int]:
        return FILTER_SHAPE_TAPS[self.filter_shape_idx]


def bo_index(luma_sample: int, bit_depth: int, max_band_log2: int) -> int:
    """Band of a luma sample: its top max_band_log2 bits."""
    return luma_sample >> (bit_depth - max_band_log2)


def eo_index(m: int, quant_step: int, edge_clf: int) -> int:
    """Quantization interval of a tap-minus-center delta.

    Type 0 splits at -T and +T into three intervals (the boundary values
    belong to the middle one); type 1 splits at -T only.
    """
    if edge_clf == 0:
        if m < -quant_step:
            return 0
        if m > quant_step:
            return 2
        return 1
    return 0 if m < -quant_step else 1


def pack_class(bo_idx: int, eo_idx0: int, eo_idx1: int) -> int:
    """Packed LUT index combining the band and the two edge intervals."""
    return (bo_idx << 4) + (eo_idx0 << 2) + eo_idx1


def _luma_coords(frame: Frame, target: Plane) -> tuple[np.ndarray, np.ndarray]:
    """Row/col luma coordinates of each target-plane sample's center tap."""
    h, w = frame.plane(target).shape
    rows = np.arange(h)
    cols = np.arange(w)
    if target is not Plane.Y:
        rows = np.minimum(2 * rows, frame.height - 1)
        cols = np.minimum(2 * cols, frame.width - 1)
    return rows, cols


def classify_plane(frame: Frame, target: Plane, cfg: ClassifierConfig) -> np.ndarray:
    """Packed class index of every sample of `target`, read from frame's luma.

    Returns an int32 grid with the target plane's shape. Band-only mode
    stores band << 4; combined mode adds the two edge intervals. Edge taps
    that fall outside the luma plane replicate the nearest edge sample.
    """
    if cfg.bit_depth != frame.bit_depth:
        raise ValueError(
            f"config bit depth {cfg.bit_depth} != frame bit depth {frame.bit_depth}"
        )
    luma = frame.y.astype(np.int32, copy=False)
    rows, cols = _luma_coords(frame, target)
    rl = luma[np.ix_(rows, cols)]

    bands = rl >> (cfg.bit_depth - cfg.max_band_log2)
    if cfg.bo_only:
        return (bands << 4).astype(np.int32)

    dy, dx = cfg.tap_offset
    hl, wl = luma.shape

    def tap(sy: int, sx: int) -> np.ndarray:
        r = np.clip(rows + sy, 0, hl - 1)
        c = np.clip(cols + sx, 0, wl - 1)
        return luma[np.ix_(r, c)]

    t = cfg.quant_step
    eo = []
    for m in (tap(dy, dx) - rl, tap(-dy, -dx) - rl):
        if cfg.edge_clf == 0:
            eo.append(np.where(m < -t, 0, np.where(m > t, 2, 1)))
        else:
            eo.append(np.where(m < -t, 0, 1))
    return ((bands << 4) + (eo[0] << 2) + eo[1]).astype(np.int32)
