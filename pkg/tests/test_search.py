import numpy as np
import pytest

from ccso.classify import ClassifierConfig, classify_plane
from ccso.constants import OFFSET_ALPHABET
from ccso.filtering import apply_ccso_batch, full_unit_flags
from ccso.frame import Plane
from ccso.metrics import degrade, plane_sse
from ccso.pipeline import apply_frame_params
from ccso.search import (
    RdConfig,
    SweepOptions,
    accumulate_stats,
    best_offset,
    derive_lut,
    iterate_frame,
    refine_units,
    search_frame,
)
from ccso.syntax import read_params, write_params

from conftest import random_frame


def brute_force_offset(count, err_sum, err_sq_sum):
    """Literal argmin over the alphabet, first minimum wins."""
    sses = [err_sq_sum - 2 * s * err_sum + count * s * s for s in OFFSET_ALPHABET]
    return OFFSET_ALPHABET[sses.index(min(sses))]


def biased_pair(rng, width, height, plane, bias):
    """(orig, recon) where recon = orig - bias on one plane, clip-safe."""
    orig = random_frame(rng, width, height, lo=20, hi=235)
    recon = orig.copy()
    arr = recon.plane(plane)
    arr -= np.array(bias, dtype=arr.dtype) if bias >= 0 else 0
    if bias < 0:
        arr += np.array(-bias, dtype=arr.dtype)
    return orig, recon


class TestAccumulateStats:
    def test_zero_error(self, rng):
        f = random_frame(rng, 32, 32)
        cm = classify_plane(f, Plane.Y, ClassifierConfig(False, 2))
        stats = accumulate_stats(f.y, f.y, cm, full_unit_flags(32, 32), 64, Plane.Y)
        assert stats.err_sum.sum() == 0
        assert stats.err_sq_sum.sum() == 0
        assert stats.count.sum() == 32 * 32

    def test_direct_accumulation(self):
        orig = np.array([[12, 12, 13]], dtype=np.uint8)
        recon = np.array([[10, 10, 10]], dtype=np.uint8)
        cm = np.zeros((1, 3), dtype=np.int32)
        stats = accumulate_stats(orig, recon, cm, np.array([[True]]), 16, Plane.Y)
        assert stats.count[0] == 3
        assert stats.err_sum[0] == 7
        assert stats.err_sq_sum[0] == 17

    def test_disabled_units_excluded(self, rng):
        f = random_frame(rng, 32, 32)
        g = random_frame(rng, 32, 32)
        cm = classify_plane(g, Plane.Y, ClassifierConfig(False, 2))
        flags = full_unit_flags(32, 32, enabled=False)
        stats = accumulate_stats(f.y, g.y, cm, flags, 64, Plane.Y)
        assert stats.count.sum() == 0
        assert stats.err_sum.sum() == 0

    def test_splits_by_class(self, rng):
        f = random_frame(rng, 48, 48)
        g = random_frame(rng, 48, 48)
        cm = classify_plane(g, Plane.Y, ClassifierConfig(False, 3, quant_step_idx=1))
        stats = accumulate_stats(f.y, g.y, cm, full_unit_flags(48, 48), 128, Plane.Y)
        e = f.y.astype(np.int64) - g.y.astype(np.int64)
        for cls in np.unique(cm):
            sel = cm == cls
            assert stats.count[cls] == sel.sum()
            assert stats.err_sum[cls] == e[sel].sum()
            assert stats.err_sq_sum[cls] == (e[sel] ** 2).sum()


class TestBestOffset:
    def test_errors_2_2_3_pick_3(self):
        # SSE(3) = 17 - 42 + 27 = 2 beats SSE(1) = 6 and SSE(0) = 17
        assert best_offset(3, 7, 17) == 3

    def test_symmetric_errors_pick_0(self):
        assert best_offset(10, 0, 500) == 0

    def test_exact_alphabet_match(self):
        # five errors of -10 each
        assert best_offset(5, -50, 500) == -10

    def test_empty_class_is_0(self):
        assert best_offset(0, 0, 0) == 0

    def test_matches_brute_force_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(2000):
            count = int(rng.integers(0, 5000))
            err_sum = int(rng.integers(-12 * max(count, 1), 12 * max(count, 1) + 1))
            err_sq = int(rng.integers(0, 200 * max(count, 1)))
            assert best_offset(count, err_sum, err_sq) == brute_force_offset(
                count, err_sum, err_sq
            )

    def test_matches_brute_force_exhaustive_small_grid(self):
        # small counts and sums hit every tie the alphabet allows
        for count in range(6):
            for err_sum in range(-15, 16):
                assert best_offset(count, err_sum, 100) == brute_force_offset(
                    count, err_sum, 100
                )

    def test_matches_per_sample_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            errors = rng.integers(-12, 13, size=int(rng.integers(1, 20)))
            count = len(errors)
            err_sum = int(errors.sum())
            err_sq = int((errors**2).sum())
            # independent route: score each offset against the raw samples
            sses = [int(((errors - s) ** 2).sum()) for s in OFFSET_ALPHABET]
            expected = OFFSET_ALPHABET[sses.index(min(sses))]
            assert best_offset(count, err_sum, err_sq) == expected

    def test_derive_lut_matches_scalar_per_class(self, rng):
        f = random_frame(rng, 64, 64)
        g = random_frame(rng, 64, 64)
        cm = classify_plane(g, Plane.Y, ClassifierConfig(False, 3))
        stats = accumulate_stats(f.y, g.y, cm, full_unit_flags(64, 64), 128, Plane.Y)
        lut = derive_lut(stats)
        for cls in range(128):
            assert lut[cls] == best_offset(
                int(stats.count[cls]),
                int(stats.err_sum[cls]),
                int(stats.err_sq_sum[cls]),
            )


class TestRefineUnits:
    def test_zero_lut_disables_everything(self, rng):
        f = random_frame(rng, 40, 40)
        g = random_frame(rng, 40, 40)
        cfg = ClassifierConfig(False, 2)
        cm = classify_plane(g, Plane.Y, cfg)
        flags, _, _ = refine_units(
            f.y, g.y, cm, np.zeros(64, np.int32), full_unit_flags(40, 40),
            RdConfig(), 8, Plane.Y,
        )
        assert not flags.any()

    def test_bias_removal_enables_unit(self, rng):
        orig, recon = biased_pair(rng, 40, 40, Plane.CB, bias=-3)  # recon = orig + 3
        cfg = ClassifierConfig(True, 0)
        cm = classify_plane(recon, Plane.CB, cfg)
        lut = np.zeros(16, np.int32)
        lut[0] = -3
        flags, cost, total = refine_units(
            orig.cb, recon.cb, cm, lut, full_unit_flags(40, 40), RdConfig(), 8, Plane.CB
        )
        assert flags.all()
        assert total == 0.0

    def test_large_lambda_equals_zero_lambda_decision(self, rng):
        f = random_frame(rng, 48, 48)
        g = degrade(f, "noise:y:5", seed=1)
        cfg = ClassifierConfig(False, 2)
        cm = classify_plane(g, Plane.Y, cfg)
        stats = accumulate_stats(f.y, g.y, cm, full_unit_flags(48, 48), 64, Plane.Y)
        lut = derive_lut(stats)
        f0, _, _ = refine_units(f.y, g.y, cm, lut, full_unit_flags(48, 48),
                                RdConfig(lam=0.0), 8, Plane.Y)
        f1, _, _ = refine_units(f.y, g.y, cm, lut, full_unit_flags(48, 48),
                                RdConfig(lam=1e9), 8, Plane.Y)
        assert np.array_equal(f0, f1)


def naive_alternation(orig, recon, classification, plane, cfg, rd):
    """iterate_frame re-built from the public single-step operations."""
    cm = classify_plane(classification, plane, cfg)
    orig_p = orig.plane(plane)
    recon_p = recon.plane(plane)
    flags = full_unit_flags(orig.width, orig.height)
    history = []
    best = None
    for _ in range(rd.max_iterations):
        stats = accumulate_stats(orig_p, recon_p, cm, flags, cfg.num_classes, plane)
        lut = derive_lut(stats)
        new_flags, _, total = refine_units(
            orig_p, recon_p, cm, lut, flags, rd, orig.bit_depth, plane
        )
        if history and total >= history[-1]:
            break
        history.append(total)
        flags = new_flags
        best = (lut, flags)
    return best, history


class TestIterateFrame:
    def test_identical_frames_converge_fast(self, rng):
        f = random_frame(rng, 64, 64)
        res = iterate_frame(f, f.copy(), f.copy(), Plane.Y, ClassifierConfig(False, 2))
        assert res.iterations <= 2
        assert (res.lut == 0).all()
        assert not res.unit_flags.any()
        assert res.distortion == 0

    def test_constant_chroma_bias_recovered(self, rng):
        orig, recon = biased_pair(rng, 64, 64, Plane.CB, bias=-3)  # recon = orig + 3
        res = iterate_frame(orig, recon, recon, Plane.CB, ClassifierConfig(True, 0))
        assert res.lut.tolist() == [-3] + [0] * 15
        assert res.unit_flags.all()
        assert res.distortion == 0

    def test_cost_history_strictly_decreasing(self, rng):
        for trial in range(10):
            f = random_frame(rng, 96, 96)
            g = degrade(f, "noise:all:6,blockflat:cb", seed=trial)
            for plane in (Plane.Y, Plane.CB):
                res = iterate_frame(
                    f, g, g, plane,
                    ClassifierConfig(False, 2, quant_step_idx=trial % 4,
                                     filter_shape_idx=trial % 6),
                )
                assert res.iterations <= 15
                assert all(b < a for a, b in zip(res.cost_history, res.cost_history[1:]))

    @pytest.mark.parametrize("lo,hi", [(0, 255), (100, 180)])
    def test_matches_naive_alternation(self, rng, lo, hi):
        # lo=0 exercises the clip-aware distortion path, 100..180 the closed form
        for trial in range(6):
            f = random_frame(rng, 70, 50, lo=lo, hi=hi)
            g = degrade(f, "noise:all:7", seed=trial)
            cfg = ClassifierConfig(False, 3, quant_step_idx=0,
                                   filter_shape_idx=trial % 6)
            rd = RdConfig()
            res = iterate_frame(f, g, g, Plane.Y, cfg, rd)
            (lut, flags), history = naive_alternation(f, g, g, Plane.Y, cfg, rd)
            assert np.array_equal(res.lut, lut)
            assert np.array_equal(res.unit_flags, flags)
            assert res.cost_history == history

    def test_distortion_matches_filter_application(self, rng):
        f = random_frame(rng, 80, 64)
        g = degrade(f, "noise:y:4", seed=9)
        cfg = ClassifierConfig(False, 1, quant_step_idx=1)
        res = iterate_frame(f, g, g, Plane.Y, cfg)
        cm = classify_plane(g, Plane.Y, cfg)
        filtered = apply_ccso_batch(g.y, cm, res.lut, res.unit_flags, 8, Plane.Y)
        assert res.distortion == plane_sse(f.y, filtered)


class TestSearchFrame:
    def test_identical_frames_leave_filter_off(self, rng):
        f = random_frame(rng, 64, 64)
        result = search_frame(f, f.copy())
        assert not result.params.frame_flag
        assert result.post_sse == result.pre_sse

    def test_cb_bias_reaches_zero_sse(self, rng):
        orig, recon = biased_pair(rng, 64, 64, Plane.CB, bias=-3)
        result = search_frame(orig, recon, planes=(Plane.CB,),
                              sweep=SweepOptions(bo_only_modes=(True,),
                                                 band_log2s_bo_only=(0,)))
        assert result.params.planes[Plane.CB].enabled
        assert result.post_sse[Plane.CB] == 0

    def test_restricted_sweep_equals_iterate(self, rng):
        f = random_frame(rng, 64, 64)
        g = degrade(f, "noise:y:5", seed=2)
        cfg = ClassifierConfig(False, 2, quant_step_idx=1, filter_shape_idx=3,
                               edge_clf=1)
        sweep = SweepOptions(bo_only_modes=(False,), shape_idxs=(3,),
                             quant_step_idxs=(1,), band_log2s_combined=(2,),
                             edge_clfs=(1,))
        result = search_frame(f, g, planes=(Plane.Y,), sweep=sweep)
        res = iterate_frame(f, g, g, Plane.Y, cfg)
        pp = result.params.planes[Plane.Y]
        assert pp.enabled
        assert np.array_equal(pp.lut, res.lut)
        assert np.array_equal(pp.unit_flags, res.unit_flags)
        assert result.post_sse[Plane.Y] == res.distortion

    def test_sse_never_increases_at_zero_lambda(self, rng):
        for trial in range(4):
            f = random_frame(rng, 96, 64)
            g = degrade(f, "noise:all:5,blockflat:cr", seed=trial)
            result = search_frame(f, g)
            for plane in Plane:
                assert result.post_sse[plane] <= result.pre_sse[plane]
                if result.params.planes[plane].enabled:
                    assert result.params.planes[plane].unit_flags.any()
                    assert result.post_sse[plane] < result.pre_sse[plane]

    def test_post_sse_matches_fresh_application(self, rng):
        f = random_frame(rng, 96, 64)
        g = degrade(f, "noise:all:5", seed=7)
        result = search_frame(f, g)
        filtered = apply_frame_params(result.params, g)
        for plane in Plane:
            assert result.post_sse[plane] == plane_sse(f.plane(plane), filtered.plane(plane))

    def test_result_roundtrips_through_codec(self, rng):
        f = random_frame(rng, 96, 64)
        g = degrade(f, "noise:chroma:6", seed=3)
        result = search_frame(f, g)
        buf = write_params(result.params, 96, 64)
        assert read_params(buf, 96, 64) == result.params

    def test_geometry_mismatch_rejected(self, rng):
        with pytest.raises(ValueError):
            search_frame(random_frame(rng, 64, 64), random_frame(rng, 64, 32))

    def test_deterministic(self, rng):
        f = random_frame(rng, 64, 48)
        g = degrade(f, "noise:all:4", seed=11)
        r1 = search_frame(f, g)
        r2 = search_frame(f, g)
        assert write_params(r1.params, 64, 48) == write_params(r2.params, 64, 48)
        assert r1.total_rd_cost == r2.total_rd_cost

    def test_huge_lambda_disables_filtering(self, rng):
        # an enabled plane costs at least a dozen header bits against the
        # one-bit disabled baseline, so a large enough rate weight wins
        f = random_frame(rng, 64, 48)
        g = degrade(f, "noise:all:4", seed=11)
        result = search_frame(f, g, rd=RdConfig(lam=1e12))
        assert not result.params.frame_flag
        assert result.post_sse == result.pre_sse

    def test_small_lambda_keeps_gain(self, rng):
        f = random_frame(rng, 64, 48, lo=20, hi=235)
        g = degrade(f, "bias:cb:3", seed=0)
        result = search_frame(f, g, planes=(Plane.CB,), rd=RdConfig(lam=0.01),
                              sweep=SweepOptions(bo_only_modes=(True,),
                                                 band_log2s_bo_only=(0,)))
        assert result.params.planes[Plane.CB].enabled
        assert result.post_sse[Plane.CB] == 0
