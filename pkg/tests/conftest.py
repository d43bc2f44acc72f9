import numpy as np
import pytest

from ccso.frame import Frame, chroma_dims, sample_dtype


def random_frame(rng, width, height, bit_depth=8, lo=0, hi=None):
    """Uniform random frame; lo/hi bound samples away from the clip range."""
    if hi is None:
        hi = (1 << bit_depth) - 1
    dtype = sample_dtype(bit_depth)
    cw, ch = chroma_dims(width, height)
    return Frame(
        width,
        height,
        bit_depth,
        rng.integers(lo, hi + 1, size=(height, width)).astype(dtype),
        rng.integers(lo, hi + 1, size=(ch, cw)).astype(dtype),
        rng.integers(lo, hi + 1, size=(ch, cw)).astype(dtype),
    )


def random_lut(rng, max_band_log2, intervals=3, bo_only=False):
    """Valid LUT: alphabet offsets in reachable slots, zeros elsewhere."""
    from ccso.constants import OFFSET_ALPHABET

    num_bands = 1 << max_band_log2
    lut = np.zeros(num_bands << 4, dtype=np.int32)
    span = 1 if bo_only else intervals
    for d0 in range(span):
        for d1 in range(span):
            for band in range(num_bands):
                lut[(band << 4) | (d0 << 2) | d1] = OFFSET_ALPHABET[rng.integers(0, 8)]
    return lut


@pytest.fixture
def rng():
    return np.random.default_rng(0xC50)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid or getattr(rep, "when", "call") != "call":
                continue
            name = nodeid.split("::")[-1]
            lines.append((name, "PASS" if outcome == "passed" else "FAIL"))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in lines:
            terminalreporter.write_line(f"{verdict}  {name}")
