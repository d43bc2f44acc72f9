"""Encoder-side parameter search: offset derivation and unit refinement.

For one classifier configuration the search alternates two steps, starting
from every unit enabled: derive the least-squares offset per class from
error accumulators over the currently enabled units, then re-decide each
unit's flag by comparing the rate-distortion cost of filtering against
copying. The alternation stops when the accumulated unit cost stops
strictly decreasing, or after `max_iterations` passes. A frame search runs
that alternation over every requested combination of classifier parameters
and keeps the cheapest, falling back to "disabled" when nothing beats the
unfiltered plane.

Step 1 uses the closed-form SSE decomposition sum((e - s)^2) =
err_sq_sum - 2*s*err_sum + count*s^2, so picking the best of the eight
alphabet offsets per class needs no pixel re-scan. Step 2 distortions are
exact under clipping: when the plane keeps a 10-sample margin from the
range limits no offset can clip and the same accumulators yield the unit
distortions; otherwise the candidate filter output is evaluated directly.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .classify import ClassifierConfig, classify_plane
from .constants import OFFSET_ALPHABET
from .filtering import apply_ccso_batch, unit_grid_shape, unit_mask, unit_size_for
from .frame import Frame, Plane
from .syntax import FrameParams, PlaneParams, params_bit_cost, plane_bit_cost

_ALPHABET = np.array(OFFSET_ALPHABET, dtype=np.int64)


@dataclasses.dataclass
class ClassStats:
    """Per-class error accumulators over the enabled filter units."""

    count: np.ndarray
    err_sum: np.ndarray
    err_sq_sum: np.ndarray

    @property
    def num_classes(self) -> int:
        return len(self.count)


@dataclasses.dataclass(frozen=True)
class RdConfig:
    """Rate-distortion trade-off: cost = distortion + lam * bits."""

    lam: float = 0.0
    max_iterations: int = 15

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclasses.dataclass(frozen=True)
class SweepOptions:
    """Frame-level parameter combinations a search will evaluate."""

    bo_only_modes: tuple[bool, ...] = (False, True)
    shape_idxs: tuple[int, ...] = (0, 1, 2, 3, 4, 5)
    quant_step_idxs: tuple[int, ...] = (0, 1, 2, 3)
    band_log2s_combined: tuple[int, ...] = (0, 1, 2, 3)
    band_log2s_bo_only: tuple[int, ...] = (0, 1, 2, 3, 4, 5, 6, 7)
    edge_clfs: tuple[int, ...] = (0, 1)

    def configs(self, bit_depth: int):
        """Candidate configs, in the fixed order ties are broken by."""
        for bo_only in self.bo_only_modes:
            if bo_only:
                for band_log2 in self.band_log2s_bo_only:
                    yield ClassifierConfig(True, band_log2, bit_depth=bit_depth)
            else:
                for shape in self.shape_idxs:
                    for quant in self.quant_step_idxs:
                        for band_log2 in self.band_log2s_combined:
                            for edge_clf in self.edge_clfs:
                                yield ClassifierConfig(
                                    False,
                                    band_log2,
                                    quant_step_idx=quant,
                                    filter_shape_idx=shape,
                                    edge_clf=edge_clf,
                                    bit_depth=bit_depth,
                                )


@dataclasses.dataclass
class IterateResult:
    """Outcome of the two-step alternation for one configuration."""

    lut: np.ndarray
    unit_flags: np.ndarray
    cost: float
    cost_history: list[float]
    iterations: int
    distortion: int
    pre_distortion: int


@dataclasses.dataclass
class SearchResult:
    params: FrameParams
    pre_sse: dict[Plane, int]
    post_sse: dict[Plane, int]
    total_rd_cost: float
    iterations: dict[Plane, int]


def accumulate_stats(
    orig_plane: np.ndarray,
    recon_plane: np.ndarray,
    class_map: np.ndarray,
    unit_flags: np.ndarray,
    num_classes: int,
    plane: Plane,
) -> ClassStats:
    """Accumulate orig-minus-recon error moments per class over enabled units."""
    if orig_plane.shape != recon_plane.shape or orig_plane.shape != class_map.shape:
        raise ValueError("plane and class map dimensions differ")
    mask = unit_mask(orig_plane.shape, unit_flags, plane)
    e = orig_plane.astype(np.int64) - recon_plane.astype(np.int64)
    cls = class_map[mask]
    ev = e[mask].astype(np.float64)
    count = np.bincount(cls, minlength=num_classes).astype(np.int64)
    err_sum = np.bincount(cls, weights=ev, minlength=num_classes).astype(np.int64)
    err_sq = np.bincount(cls, weights=ev * ev, minlength=num_classes).astype(np.int64)
    return ClassStats(count, err_sum, err_sq)


def best_offset(count: int, err_sum: int, err_sq_sum: int = 0) -> int:
    """Alphabet offset minimizing sum((e - s)^2) for one class's accumulators.

    Ties go to the earlier alphabet position (the shorter code); an empty
    class yields 0.
    """
    best_s = 0
    best_sse = None
    for s in OFFSET_ALPHABET:
        sse = err_sq_sum - 2 * s * err_sum + count * s * s
        if best_sse is None or sse < best_sse:
            best_s, best_sse = s, sse
    return best_s


def derive_lut(stats: ClassStats) -> np.ndarray:
    """best_offset applied to every class at once."""
    delta = np.outer(_ALPHABET * _ALPHABET, stats.count) - 2 * np.outer(
        _ALPHABET, stats.err_sum
    )
    return _ALPHABET[np.argmin(delta, axis=0)].astype(np.int32)


def refine_units(
    orig_plane: np.ndarray,
    recon_plane: np.ndarray,
    class_map: np.ndarray,
    lut: np.ndarray,
    unit_flags: np.ndarray,
    rd: RdConfig,
    bit_depth: int,
    plane: Plane,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Re-decide every unit flag against the given LUT.

    Returns (new_flags, per_unit_cost, total_cost) where a unit is enabled
    iff filtering it costs strictly less than copying it; the flag itself
    is one bit either way, so the rate terms cancel and ties switch off.
    """
    filtered = apply_ccso_batch(
        recon_plane, class_map, lut,
        np.ones_like(unit_flags, dtype=bool), bit_depth, plane,
    )
    size = unit_size_for(plane)
    rows, cols = unit_flags.shape
    d_on = np.empty((rows, cols), dtype=np.int64)
    d_off = np.empty((rows, cols), dtype=np.int64)
    o64 = orig_plane.astype(np.int64)
    f64 = filtered.astype(np.int64)
    r64 = recon_plane.astype(np.int64)
    for ur in range(rows):
        for uc in range(cols):
            ys = slice(ur * size, (ur + 1) * size)
            xs = slice(uc * size, (uc + 1) * size)
            d_on[ur, uc] = ((o64[ys, xs] - f64[ys, xs]) ** 2).sum()
            d_off[ur, uc] = ((o64[ys, xs] - r64[ys, xs]) ** 2).sum()
    cost_on = d_on + rd.lam * 1.0
    cost_off = d_off + rd.lam * 1.0
    new_flags = cost_on < cost_off
    unit_cost = np.minimum(cost_on, cost_off)
    return new_flags, unit_cost, float(unit_cost.sum())


def _unit_class_moments(orig_plane, recon_plane, class_map, num_classes, plane):
    """count/err_sum/err_sq_sum split per (unit, class), plus sample unit ids."""
    size = unit_size_for(plane)
    h, w = orig_plane.shape
    grid = (-(-h // size), -(-w // size))
    n_units = grid[0] * grid[1]
    uid = (np.arange(h) // size)[:, None] * grid[1] + (np.arange(w) // size)[None, :]
    key = (uid * num_classes + class_map).ravel()
    e = (orig_plane.astype(np.int64) - recon_plane.astype(np.int64)).ravel()
    ef = e.astype(np.float64)
    n = n_units * num_classes
    cnt = np.bincount(key, minlength=n).astype(np.int64).reshape(n_units, num_classes)
    sums = np.bincount(key, weights=ef, minlength=n).astype(np.int64).reshape(n_units, num_classes)
    sqs = np.bincount(key, weights=ef * ef, minlength=n).astype(np.int64).reshape(n_units, num_classes)
    return cnt, sums, sqs, grid, uid.ravel(), n_units


def _iterate_plane(
    orig_plane: np.ndarray,
    recon_plane: np.ndarray,
    class_map: np.ndarray,
    num_classes: int,
    plane: Plane,
    rd: RdConfig,
    bit_depth: int,
) -> IterateResult:
    cnt, sums, sqs, grid, uid_flat, n_units = _unit_class_moments(
        orig_plane, recon_plane, class_map, num_classes, plane
    )
    d_off = sqs.sum(axis=1)

    # With a 10-sample margin no alphabet offset can clip, so unit
    # distortions follow from the accumulators; otherwise evaluate the
    # clipped filter output directly each pass.
    hi = (1 << bit_depth) - 1
    lo_v, hi_v = int(recon_plane.min()), int(recon_plane.max())
    clip_safe = lo_v >= 10 and hi_v <= hi - 10
    o64 = orig_plane.astype(np.int64)
    r64 = recon_plane.astype(np.int64)

    enabled = np.ones(n_units, dtype=bool)
    history: list[float] = []
    iterations = 0
    best: tuple | None = None
    for _ in range(rd.max_iterations):
        iterations += 1
        cnt_c = cnt[enabled].sum(axis=0)
        sum_c = sums[enabled].sum(axis=0)
        delta = np.outer(_ALPHABET * _ALPHABET, cnt_c) - 2 * np.outer(_ALPHABET, sum_c)
        lut = _ALPHABET[np.argmin(delta, axis=0)].astype(np.int32)

        s = lut.astype(np.int64)
        if clip_safe:
            d_on = d_off + cnt @ (s * s) - 2 * (sums @ s)
        else:
            filtered = np.clip(r64 + lut[class_map], 0, hi)
            derr = (o64 - filtered).ravel().astype(np.float64)
            d_on = (
                np.bincount(uid_flat, weights=derr * derr, minlength=n_units)
                .astype(np.int64)
            )
        cost_on = d_on + rd.lam * 1.0
        cost_off = d_off + rd.lam * 1.0
        new_enabled = cost_on < cost_off
        total = float(np.minimum(cost_on, cost_off).sum())
        if history and total >= history[-1]:
            break
        history.append(total)
        enabled = new_enabled
        distortion = int(np.where(new_enabled, d_on, d_off).sum())
        best = (lut, new_enabled, total, distortion)

    lut, flags, cost, distortion = best
    return IterateResult(
        lut=lut,
        unit_flags=flags.reshape(grid),
        cost=cost,
        cost_history=history,
        iterations=iterations,
        distortion=distortion,
        pre_distortion=int(d_off.sum()),
    )


def iterate_frame(
    orig: Frame,
    recon: Frame,
    classification: Frame,
    plane: Plane,
    cfg: ClassifierConfig,
    rd: RdConfig | None = None,
) -> IterateResult:
    """Run the two-step alternation for one plane under one configuration."""
    rd = rd or RdConfig()
    _check_geometry(orig, recon, classification)
    class_map = classify_plane(classification, plane, cfg)
    return _iterate_plane(
        orig.plane(plane),
        recon.plane(plane),
        class_map,
        cfg.num_classes,
        plane,
        rd,
        orig.bit_depth,
    )


def _check_geometry(*frames: Frame) -> None:
    first = frames[0]
    for f in frames[1:]:
        if not first.same_geometry(f):
            raise ValueError(
                f"frame geometry mismatch: {first.width}x{first.height}@"
                f"{first.bit_depth} vs {f.width}x{f.height}@{f.bit_depth}"
            )


def _plane_params_from(cfg: ClassifierConfig, res: IterateResult) -> PlaneParams:
    return PlaneParams(
        enabled=True,
        bo_only=cfg.bo_only,
        max_band_log2=cfg.max_band_log2,
        quant_step_idx=cfg.quant_step_idx if not cfg.bo_only else 0,
        filter_shape_idx=cfg.filter_shape_idx if not cfg.bo_only else 0,
        edge_clf=cfg.edge_clf if not cfg.bo_only else 0,
        lut=res.lut,
        unit_flags=res.unit_flags,
    )


def search_frame(
    orig: Frame,
    recon: Frame,
    classification: Frame | None = None,
    planes: tuple[Plane, ...] = (Plane.Y, Plane.CB, Plane.CR),
    rd: RdConfig | None = None,
    sweep: SweepOptions | None = None,
) -> SearchResult:
    """Pick frame parameters minimizing distortion + lam * syntax bits.

    Every requested plane sweeps the configurations in `sweep`; a plane is
    left disabled unless its best configuration strictly beats the
    unfiltered plane's cost. Classification reads `classification` (the
    reconstruction by default), never the frame being corrected.
    """
    rd = rd or RdConfig()
    sweep = sweep or SweepOptions()
    classification = recon if classification is None else classification
    _check_geometry(orig, recon, classification)

    grid = unit_grid_shape(orig.width, orig.height)
    n_units = grid[0] * grid[1]
    params = FrameParams()
    pre_sse: dict[Plane, int] = {}
    post_sse: dict[Plane, int] = {}
    iterations: dict[Plane, int] = {}
    for plane in (Plane.Y, Plane.CB, Plane.CR):
        o = orig.plane(plane).astype(np.int64)
        r = recon.plane(plane).astype(np.int64)
        pre_sse[plane] = int(((o - r) ** 2).sum())
        post_sse[plane] = pre_sse[plane]

    for plane in planes:
        if pre_sse[plane] == 0:
            # a unit may only switch on by strictly beating zero distortion,
            # which no offset can; the whole sweep would come back disabled
            iterations[plane] = 0
            continue
        best_cost = None
        best_pp = None
        best_res = None
        for cfg in sweep.configs(orig.bit_depth):
            res = iterate_frame(orig, recon, classification, plane, cfg, rd)
            pp = _plane_params_from(cfg, res)
            cost = res.distortion + rd.lam * plane_bit_cost(pp, n_units)
            if best_cost is None or cost < best_cost:
                best_cost, best_pp, best_res = cost, pp, res
        baseline = pre_sse[plane] + rd.lam * 1.0
        if best_cost is not None and best_cost < baseline:
            params.planes[plane] = best_pp
            post_sse[plane] = best_res.distortion
            iterations[plane] = best_res.iterations
        else:
            iterations[plane] = best_res.iterations if best_res is not None else 0

    total = sum(post_sse.values()) + rd.lam * params_bit_cost(
        params, orig.width, orig.height
    )
    return SearchResult(
        params=params,
        pre_sse=pre_sse,
        post_sse=post_sse,
        total_rd_cost=float(total),
        iterations=iterations,
    )
