"""Cross-component sample offset loop filter toolkit.

Classifies reconstructed luma samples into band/edge classes, derives an
offset look-up table by iterative rate-distortion search, serializes the
parameters bit-exactly, applies the offsets to luma or chroma planes, and
measures the resulting quality (PSNR, BD-rate).
"""

__version__ = "1.0.0"

from .classify import ClassifierConfig, bo_index, classify_plane, eo_index, pack_class
from .constants import FILTER_SHAPE_TAPS, OFFSET_ALPHABET, QUANT_STEP_SIZES, UNIT_SIZE_LUMA
from .filtering import (
    apply_ccso,
    apply_ccso_batch,
    empty_lut,
    full_unit_flags,
    unit_bounds,
    unit_grid_shape,
)
from .frame import (
    Frame,
    Plane,
    clip_pixel,
    colocated_luma,
    frame_size_bytes,
    read_frames,
    sample_clamped,
    write_frames,
)
from .metrics import QualityReport, RdPoint, bd_rate, degrade, psnr_report
from .pipeline import apply_frame_params
from .search import (
    ClassStats,
    RdConfig,
    SearchResult,
    SweepOptions,
    accumulate_stats,
    best_offset,
    derive_lut,
    iterate_frame,
    refine_units,
    search_frame,
)
from .syntax import (
    FrameParams,
    ParseError,
    PlaneParams,
    params_bit_cost,
    read_params,
    read_params_file,
    write_params,
    write_params_file,
)
