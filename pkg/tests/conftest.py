"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from hybridprec.channel import ChannelSet, SystemDims, complex_gaussian
from hybridprec.objective import Precoders


def cgauss(rng, shape):
    return complex_gaussian(rng, shape)


def random_instance(rng, B=None, N=None, L=None, M=None, max_dims=(2, 3, 4, 5)):
    """Random normalized channel plus random precoders with dims below ``max_dims``."""
    mb, mn, ml, mm = max_dims
    B = B or int(rng.integers(1, mb + 1))
    N = N or int(rng.integers(1, mn + 1))
    M = M or int(rng.integers(2, mm + 1))
    L = L or int(rng.integers(1, min(ml, M) + 1))
    dims = SystemDims(B, N, L, M)
    ch = ChannelSet(dims, cgauss(rng, (B, N, M)), normalized=True)
    p = Precoders(cgauss(rng, (M, L)), cgauss(rng, (B, L, N)))
    return ch, p


def eig_rate(h, wa, wd):
    """Sum-rate from eigenvalues of ``T^H T`` (independent of the Cholesky path)."""
    total = 0.0
    for hb, wdb in zip(h, wd):
        t = hb @ wa @ wdb
        ev = np.linalg.eigvalsh(t.conj().T @ t)
        total += np.sum(np.log2(1.0 + np.clip(ev, 0, None)))
    return total / len(h)


def central_diff(f, h=1e-6):
    return (f(h) - f(-h)) / (2 * h)


def rel_err(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance lines are collected here and printed once at the end of the run
ACCEPTANCE_LINES = []


def report(number, passed, detail):
    line = f"ACCEPTANCE {number}: {'PASS' if passed else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
