"""Format constants shared by the classifier, filter kernels and syntax codec.

Everything in this module is part of the on-disk format: changing any value
breaks compatibility with previously written .ccso parameter files.
"""

# Offsets a LUT entry may take, in signaling order: the truncated-unary index
# of an offset is its position in this tuple, so the statistically likelier
# small magnitudes get the shorter codes. Note the asymmetry: -10 exists, +10
# does not.
OFFSET_ALPHABET = (0, 1, -1, 3, -3, 7, -7, -10)

# Edge-classifier quantization steps, indexed by quant_step_idx (2-bit field).
QUANT_STEP_SIZES = (8, 16, 32, 64)

# Tap placement of the two-neighbor edge classifier, indexed by
# filter_shape_idx (3-bit field, values 0-5). Each entry is the (dy, dx) of
# the first tap relative to the center luma sample; the second tap is the
# point-symmetric negation. Shapes 0-3 use adjacent taps, shapes 4-5 reach
# three columns out, and every shape touches at most one row above and one
# below the center (single line buffer each way).
FILTER_SHAPE_TAPS = (
    (0, -1),
    (-1, 0),
    (-1, -1),
    (-1, 1),
    (0, -3),
    (-1, -3),
)

# Side of the square on/off filter unit, in luma samples. Chroma planes of a
# 4:2:0 frame see half of it per axis (128x128 chroma samples per unit).
UNIT_SIZE_LUMA = 256

MAX_TU_INDEX = len(OFFSET_ALPHABET) - 1

# Band-count field width limits: log2 of the band count fits in 2 bits when
# the edge classifier is active (1..8 bands) and 3 bits in band-only mode
# (1..128 bands).
MAX_BAND_LOG2_COMBINED = 3
MAX_BAND_LOG2_BAND_ONLY = 7


def interval_count(edge_clf: int) -> int:
    """Number of quantization intervals of the given edge-classifier type."""
    if edge_clf not in (0, 1):
        raise ValueError(f"edge_clf must be 0 or 1, got {edge_clf}")
    return 3 if edge_clf == 0 else 2


def tu_code_length(idx: int) -> int:
    """Bit length of the truncated-unary code for an alphabet index."""
    if not 0 <= idx <= MAX_TU_INDEX:
        raise ValueError(f"offset index out of range: {idx}")
    return min(idx + 1, MAX_TU_INDEX)
