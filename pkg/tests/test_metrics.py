import math

import numpy as np
import pytest

from ccso.frame import Plane, blank_frame
from ccso.metrics import (
    DegradeStep,
    bd_rate,
    degrade,
    format_value,
    parse_profile,
    psnr_report,
)

from conftest import random_frame


class TestPsnrReport:
    def test_identical_frames_are_lossless(self, rng):
        f = random_frame(rng, 16, 16)
        report = psnr_report(f, f.copy())
        for plane in Plane:
            assert report.is_lossless(plane)
            assert format_value(report.psnr[plane]) == "lossless"
        assert format_value(report.weighted_psnr) == "lossless"

    def test_mse_one(self, rng):
        f = random_frame(rng, 16, 16, lo=1, hi=254)
        g = f.copy()
        g.y += np.where(np.arange(256).reshape(16, 16) % 2 == 0, 1, -1).astype(np.uint8)
        report = psnr_report(f, g)
        assert report.mse[Plane.Y] == 1.0
        assert report.psnr[Plane.Y] == pytest.approx(10 * math.log10(65025), abs=1e-9)
        assert f"{report.psnr[Plane.Y]:.2f}" == "48.13"

    def test_single_peak_error(self):
        f = blank_frame(16, 16, fill=0)
        g = f.copy()
        g.y[3, 3] = 255
        report = psnr_report(f, g)
        assert report.mse[Plane.Y] == pytest.approx(255 * 255 / 256)
        # 10*log10(255^2 / (255^2/256)) = 10*log10(256)
        assert report.psnr[Plane.Y] == pytest.approx(10 * math.log10(256), abs=1e-9)
        assert f"{report.psnr[Plane.Y]:.2f}" == "24.08"

    def test_weighted_between_min_and_max(self, rng):
        f = random_frame(rng, 24, 24)
        g = degrade(f, "noise:all:5", seed=4)
        report = psnr_report(f, g)
        values = [report.psnr[p] for p in Plane]
        assert min(values) <= report.weighted_psnr <= max(values)

    def test_weighting_is_14_1_1_on_psnr_values(self, rng):
        f = random_frame(rng, 24, 24)
        g = degrade(f, "noise:all:5", seed=4)
        r = psnr_report(f, g)
        expected = (14 * r.psnr[Plane.Y] + r.psnr[Plane.CB] + r.psnr[Plane.CR]) / 16
        assert r.weighted_psnr == pytest.approx(expected, abs=1e-12)

    def test_psnr_decreasing_in_mse(self, rng):
        f = random_frame(rng, 32, 32, lo=30, hi=220)
        prev = math.inf
        for amp in (1, 3, 6, 12):
            g = degrade(f, f"noise:y:{amp}", seed=1)
            cur = psnr_report(f, g).psnr[Plane.Y]
            assert cur < prev
            prev = cur

    def test_geometry_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            psnr_report(random_frame(rng, 16, 16), random_frame(rng, 16, 8))


def linear_curve(intercept, slope, qualities):
    """RD points lying on log10(rate) = intercept + slope * quality."""
    return [(10.0 ** (intercept + slope * q), q) for q in qualities]


class TestBdRate:
    def test_identical_curves_zero(self):
        pts = linear_curve(1.0, 0.05, [30, 34, 38, 42])
        assert bd_rate(pts, pts) == 0.0

    def test_uniform_double_rate(self):
        anchor = linear_curve(1.0, 0.05, [30, 34, 38, 42, 46])
        test = [(2 * r, q) for r, q in anchor]
        assert bd_rate(anchor, test) == pytest.approx(100.0, abs=1e-9)
        assert bd_rate(test, anchor) == pytest.approx(-50.0, abs=1e-9)

    def test_analytic_linear_construction(self):
        # log-rate difference is -0.1 - 0.01*(q-30); its mean over [30, 45]
        # is -0.175, so BD-rate = 100*(10^-0.175 - 1)
        anchor = linear_curve(1.0 - 0.05 * 30, 0.05, [30, 35, 40, 45])
        test = linear_curve(0.9 - 0.04 * 30, 0.04, [30, 35, 40, 45])
        expected = 100.0 * (10.0 ** -0.175 - 1.0)
        assert bd_rate(anchor, test) == pytest.approx(expected, abs=1e-6)

    def test_partial_quality_overlap(self):
        # overlap is [32, 44]; mean diff over it is -0.05
        anchor = linear_curve(0.0, 0.05, [30, 34, 38, 44])
        test = [(r / 10**0.05, q) for r, q in linear_curve(0.0, 0.05, [32, 38, 41, 46])]
        expected = 100.0 * (10.0 ** -0.05 - 1.0)
        assert bd_rate(anchor, test) == pytest.approx(expected, abs=1e-6)

    def test_approximate_antisymmetry(self):
        anchor = linear_curve(-0.5, 0.045, [31, 35, 39, 43, 47])
        test = linear_curve(-0.62, 0.048, [30, 34, 40, 45])
        fwd = bd_rate(anchor, test)
        rev = bd_rate(test, anchor)
        assert fwd == pytest.approx(-rev / (1 + rev / 100.0), rel=1e-9)

    def test_too_few_points(self):
        pts = linear_curve(1.0, 0.05, [30, 34, 38])
        with pytest.raises(ValueError):
            bd_rate(pts, pts)

    def test_non_monotone_rejected(self):
        pts = [(10, 30), (20, 29), (30, 38), (40, 42)]
        good = linear_curve(1.0, 0.05, [30, 34, 38, 42])
        with pytest.raises(ValueError):
            bd_rate(pts, good)

    def test_duplicate_bitrates_rejected(self):
        pts = [(10, 30), (10, 33), (30, 38), (40, 42)]
        good = linear_curve(1.0, 0.05, [30, 34, 38, 42])
        with pytest.raises(ValueError):
            bd_rate(pts, good)

    def test_empty_overlap_rejected(self):
        low = linear_curve(1.0, 0.05, [10, 14, 18, 22])
        high = linear_curve(1.0, 0.05, [40, 44, 48, 52])
        with pytest.raises(ValueError):
            bd_rate(low, high)


class TestDegrade:
    def test_constant_bias(self, rng):
        f = random_frame(rng, 16, 16)
        g = degrade(f, "bias:cb:3")
        expected = np.clip(f.cb.astype(np.int64) + 3, 0, 255)
        assert np.array_equal(g.cb.astype(np.int64), expected)
        assert np.array_equal(g.y, f.y)
        assert np.array_equal(g.cr, f.cr)

    def test_zero_amplitude_noise_is_identity(self, rng):
        f = random_frame(rng, 16, 16)
        g = degrade(f, "noise:all:0", seed=5)
        for plane in Plane:
            assert np.array_equal(g.plane(plane), f.plane(plane))

    def test_same_seed_same_frame(self, rng):
        f = random_frame(rng, 32, 32)
        a = degrade(f, "noise:all:7,blockflat:cb", seed=123)
        b = degrade(f, "noise:all:7,blockflat:cb", seed=123)
        for plane in Plane:
            assert np.array_equal(a.plane(plane), b.plane(plane))

    def test_different_seed_differs(self, rng):
        f = random_frame(rng, 32, 32)
        a = degrade(f, "noise:y:7", seed=1)
        b = degrade(f, "noise:y:7", seed=2)
        assert not np.array_equal(a.y, b.y)

    def test_blockflat_flattens_blocks(self, rng):
        f = random_frame(rng, 32, 32)
        g = degrade(f, "blockflat:y")
        for y0 in range(0, 32, 8):
            for x0 in range(0, 32, 8):
                block = g.y[y0 : y0 + 8, x0 : x0 + 8]
                assert (block == block[0, 0]).all()

    def test_noise_bounded_and_in_range(self, rng):
        f = random_frame(rng, 32, 32, bit_depth=10)
        g = degrade(f, "noise:y:4", seed=8)
        diff = g.y.astype(np.int64) - f.y.astype(np.int64)
        # clipping can shrink the step but never grow it
        assert diff.max() <= 4 and diff.min() >= -4
        assert g.y.max() <= 1023

    def test_profile_parsing(self):
        steps = parse_profile("bias:cb:-3, noise:chroma:4 ,blockflat:cr")
        assert steps[0] == DegradeStep("bias", (Plane.CB,), -3)
        assert steps[1] == DegradeStep("noise", (Plane.CB, Plane.CR), 4)
        assert steps[2] == DegradeStep("blockflat", (Plane.CR,), 0)

    @pytest.mark.parametrize(
        "bad",
        ["", "sharpen:y:1", "bias:w:3", "bias:cb", "noise:y:-1", "blockflat:y:8"],
    )
    def test_bad_profiles_rejected(self, bad):
        with pytest.raises(ValueError):
            parse_profile(bad)
