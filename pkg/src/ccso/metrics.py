"""Distortion reporting, BD-rate, and deterministic frame degradation."""

from __future__ import annotations

import dataclasses
import math
import re
from typing import Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

from .frame import Frame, Plane

# Plane weights of the combined PSNR figure: luma dominates 14:1:1.
YCBCR_WEIGHTS = (14.0, 1.0, 1.0)


@dataclasses.dataclass(frozen=True)
class RdPoint:
    """One point of a rate-distortion curve (one encode at one rate)."""

    bitrate_kbps: float
    psnr_y: float
    psnr_cb: float
    psnr_cr: float

    @property
    def weighted_psnr(self) -> float:
        return (14.0 * self.psnr_y + self.psnr_cb + self.psnr_cr) / 16.0


@dataclasses.dataclass
class QualityReport:
    """Per-plane SSE/MSE/PSNR plus the weighted YCbCr PSNR.

    A lossless plane (MSE 0) carries psnr = math.inf; format_value renders
    it as the string "lossless" instead of a number.
    """

    sse: dict[Plane, int]
    mse: dict[Plane, float]
    psnr: dict[Plane, float]

    @property
    def weighted_psnr(self) -> float:
        total = sum(w * self.psnr[p] for w, p in zip(YCBCR_WEIGHTS, Plane))
        return total / sum(YCBCR_WEIGHTS)

    def is_lossless(self, plane: Plane) -> bool:
        return self.mse[plane] == 0.0


def format_value(psnr: float) -> str:
    return "lossless" if math.isinf(psnr) else f"{psnr:.6f}"


def plane_sse(a: np.ndarray, b: np.ndarray) -> int:
    return int(((a.astype(np.int64) - b.astype(np.int64)) ** 2).sum())


def psnr_from_mse(mse: float, bit_depth: int) -> float:
    if mse == 0.0:
        return math.inf
    peak = (1 << bit_depth) - 1
    return 10.0 * math.log10(peak * peak / mse)


def psnr_report(orig: Frame, test: Frame) -> QualityReport:
    """PSNR of `test` against `orig`, per plane and 14/1/1-weighted."""
    if not orig.same_geometry(test):
        raise ValueError("frames differ in geometry or bit depth")
    sse = {}
    mse = {}
    psnr = {}
    for plane in Plane:
        a = orig.plane(plane)
        b = test.plane(plane)
        sse[plane] = plane_sse(a, b)
        mse[plane] = sse[plane] / a.size
        psnr[plane] = psnr_from_mse(mse[plane], orig.bit_depth)
    return QualityReport(sse, mse, psnr)


def _check_curve(rates: np.ndarray, quals: np.ndarray, name: str) -> None:
    if len(rates) < 4:
        raise ValueError(f"{name} curve needs at least 4 points, got {len(rates)}")
    if np.any(rates <= 0):
        raise ValueError(f"{name} curve has non-positive bitrates")
    order = np.argsort(rates)
    if np.any(np.diff(rates[order]) <= 0):
        raise ValueError(f"{name} curve has duplicate bitrates")
    if np.any(np.diff(quals[order]) <= 0):
        raise ValueError(f"{name} curve quality is not increasing with rate")


def bd_rate(anchor: Sequence[tuple[float, float]], test: Sequence[tuple[float, float]]) -> float:
    """Average bitrate difference of `test` against `anchor` at equal quality.

    Each curve is a sequence of (bitrate, quality) points, at least four,
    with quality strictly increasing in rate. log10(rate) is interpolated
    as a function of quality with a monotone piecewise cubic and averaged
    over the overlapping quality range; the result is a percentage, negative
    when `test` spends fewer bits.
    """
    curves = []
    for name, pts in (("anchor", anchor), ("test", test)):
        arr = np.asarray(pts, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError(f"{name} curve must be (rate, quality) pairs")
        rates, quals = arr[:, 0], arr[:, 1]
        _check_curve(rates, quals, name)
        order = np.argsort(quals)
        curves.append((quals[order], np.log10(rates[order])))

    lo = max(curves[0][0][0], curves[1][0][0])
    hi = min(curves[0][0][-1], curves[1][0][-1])
    if hi <= lo:
        raise ValueError("curves share no overlapping quality range")

    means = []
    for quals, log_rates in curves:
        interp = PchipInterpolator(quals, log_rates)
        means.append(float(interp.integrate(lo, hi)) / (hi - lo))
    return 100.0 * (10.0 ** (means[1] - means[0]) - 1.0)


@dataclasses.dataclass(frozen=True)
class DegradeStep:
    kind: str           # bias | noise | blockflat
    planes: tuple[Plane, ...]
    value: int = 0


_PLANE_TOKENS = {
    "y": (Plane.Y,),
    "cb": (Plane.CB,),
    "cr": (Plane.CR,),
    "chroma": (Plane.CB, Plane.CR),
    "all": (Plane.Y, Plane.CB, Plane.CR),
}

BLOCKFLAT_SIZE = 8


def parse_profile(text: str) -> list[DegradeStep]:
    """Parse a degradation profile like "bias:cb:3,noise:chroma:4,blockflat:cb".

    Steps apply in order. bias adds a constant (clipped), noise adds seeded
    uniform integers in [-amplitude, amplitude], blockflat replaces each 8x8
    block with its rounded mean.
    """
    steps = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        fields = part.split(":")
        kind = fields[0].lower()
        if kind not in ("bias", "noise", "blockflat"):
            raise ValueError(f"unknown degradation '{kind}'")
        if len(fields) < 2 or fields[1].lower() not in _PLANE_TOKENS:
            raise ValueError(f"degradation '{part}' needs a plane (y|cb|cr|chroma|all)")
        planes = _PLANE_TOKENS[fields[1].lower()]
        value = 0
        if kind in ("bias", "noise"):
            if len(fields) != 3 or not re.fullmatch(r"[+-]?\d+", fields[2]):
                raise ValueError(f"degradation '{part}' needs an integer value")
            value = int(fields[2])
            if kind == "noise" and value < 0:
                raise ValueError("noise amplitude must be non-negative")
        elif len(fields) != 2:
            raise ValueError(f"degradation '{part}' takes no value")
        steps.append(DegradeStep(kind, planes, value))
    if not steps:
        raise ValueError("empty degradation profile")
    return steps


def _blockflat(samples: np.ndarray) -> np.ndarray:
    h, w = samples.shape
    out = np.empty_like(samples, dtype=np.int64)
    for y0 in range(0, h, BLOCKFLAT_SIZE):
        for x0 in range(0, w, BLOCKFLAT_SIZE):
            block = samples[y0 : y0 + BLOCKFLAT_SIZE, x0 : x0 + BLOCKFLAT_SIZE]
            out[y0 : y0 + BLOCKFLAT_SIZE, x0 : x0 + BLOCKFLAT_SIZE] = int(
                round(float(block.mean()))
            )
    return out


def degrade(orig: Frame, profile: str | list[DegradeStep], seed: int = 0) -> Frame:
    """Apply a degradation profile; identical (profile, seed) gives identical output."""
    steps = parse_profile(profile) if isinstance(profile, str) else profile
    rng = np.random.default_rng(seed)
    hi = (1 << orig.bit_depth) - 1
    planes = [p.astype(np.int64) for p in orig.planes()]
    for step in steps:
        for plane in step.planes:
            samples = planes[plane]
            if step.kind == "bias":
                samples = samples + step.value
            elif step.kind == "noise":
                samples = samples + rng.integers(
                    -step.value, step.value + 1, size=samples.shape
                )
            else:
                samples = _blockflat(samples)
            planes[plane] = samples
    dtype = orig.y.dtype
    y, cb, cr = (np.clip(p, 0, hi).astype(dtype) for p in planes)
    return Frame(orig.width, orig.height, orig.bit_depth, y, cb, cr)
