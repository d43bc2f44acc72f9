"""Decoder-side pipeline: classify a frame, apply serialized parameters."""

from __future__ import annotations

from .classify import ClassifierConfig, classify_plane
from .filtering import apply_ccso_batch
from .frame import Frame, Plane
from .syntax import FrameParams


def classifier_config_from(params_plane, bit_depth: int) -> ClassifierConfig:
    return ClassifierConfig(
        bo_only=params_plane.bo_only,
        max_band_log2=params_plane.max_band_log2,
        quant_step_idx=params_plane.quant_step_idx,
        filter_shape_idx=params_plane.filter_shape_idx,
        edge_clf=params_plane.edge_clf,
        bit_depth=bit_depth,
    )


def apply_frame_params(
    params: FrameParams, recon: Frame, classification: Frame | None = None
) -> Frame:
    """Filter `recon` per `params`, classifying from `classification`.

    Classification defaults to the reconstruction itself; when the caller
    keeps a separate classification source (samples from an earlier
    pipeline stage), offsets are still added to `recon`. Untouched planes
    share storage with the input frame.
    """
    classification = recon if classification is None else classification
    if not recon.same_geometry(classification):
        raise ValueError("classification frame geometry differs from target")
    out = recon
    for plane in Plane:
        pp = params.planes[plane]
        if not pp.enabled:
            continue
        cfg = classifier_config_from(pp, recon.bit_depth)
        class_map = classify_plane(classification, plane, cfg)
        filtered = apply_ccso_batch(
            recon.plane(plane), class_map, pp.lut, pp.unit_flags,
            recon.bit_depth, plane,
        )
        out = out.with_plane(plane, filtered)
    return out
