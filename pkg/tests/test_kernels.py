import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from infofrontier import kernels

numba = pytest.importorskip("numba")


def _bins(n, seed):
    rng = np.random.default_rng(seed)
    p1 = np.sort(rng.random(n))
    mass = rng.dirichlet(np.ones(n))
    return mass * p1, mass * (1 - p1)


def _gain(a, b, cuts):
    edges = [0, *cuts, a.size]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, y = a[lo:hi].sum(), b[lo:hi].sum()
        for v in (x, y):
            if v > 0:
                total += v * np.log2(v / (x + y))
    return total


@given(st.integers(2, 9), st.integers(1, 5), st.integers(0, 10_000))
def test_corner_dp_matches_enumeration(n, M, seed):
    M = min(M, n)
    a, b = _bins(n, seed)
    value, choice = kernels.corner_dp_numpy(a, b, M)
    best = max(_gain(a, b, c) for c in itertools.combinations(range(1, n), M - 1))
    assert value[M - 1] == pytest.approx(best, abs=1e-12)
    assert _gain(a, b, kernels.reconstruct_cuts(choice, M)) == pytest.approx(best, abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_corner_dp_jit_matches_numpy(seed):
    a, b = _bins(300, seed)
    vj, cj = kernels.corner_dp_jit(a, b, 8)
    vn, cn = kernels.corner_dp_numpy(a, b, 8)
    assert np.allclose(vj, vn, atol=1e-12)
    for M in range(1, 9):
        assert np.array_equal(kernels.reconstruct_cuts(cj, M), kernels.reconstruct_cuts(cn, M))


def test_eval_positions_jit_matches_numpy():
    a, b = _bins(100, 7)
    rng = np.random.default_rng(0)
    pos = np.sort(rng.uniform(0, 100, (50, 4)), axis=1)
    Hj, Ij = kernels.eval_positions_jit(a, b, pos)
    Hn, In = kernels.eval_positions_numpy(a, b, pos)
    assert np.allclose(Hj, Hn, atol=1e-12)
    assert np.allclose(Ij, In, atol=1e-12)


def test_eval_positions_integer_cuts_match_gain():
    a, b = _bins(20, 8)
    H, I = kernels.eval_positions_numpy(a, b, np.array([[5.0, 12.0]]))
    hy = -sum(v * np.log2(v) for v in (a.sum(), b.sum()))
    assert I[0] == pytest.approx(hy + _gain(a, b, [5, 12]), abs=1e-12)
    masses = [a[:5].sum() + b[:5].sum(), a[5:12].sum() + b[5:12].sum(), a[12:].sum() + b[12:].sum()]
    assert H[0] == pytest.approx(-sum(m * np.log2(m) for m in masses), abs=1e-12)


@pytest.mark.parametrize("beta", [0.0, 0.05, 0.3, 2.0])
def test_dib_greedy_jit_matches_numpy(beta):
    a, b = _bins(60, 9)
    z0 = np.random.default_rng(1).integers(0, 5, 60).astype(np.int64)
    zj, zn = z0.copy(), z0.copy()
    kernels.dib_greedy_jit(a, b, zj, beta, 5, 1e-12, 1000)
    kernels.dib_greedy_numpy(a, b, zn, beta, 5, 1e-12, 1000)
    assert np.array_equal(zj, zn)


@pytest.mark.parametrize("beta", [0.01, 0.5])
def test_dib_iterate_jit_matches_numpy(beta):
    a, b = _bins(40, 10)
    z0 = np.random.default_rng(2).integers(0, 4, 40).astype(np.int64)
    zj, zn = z0.copy(), z0.copy()
    kernels.dib_iterate_jit(a, b, zj, beta, 4, 100)
    kernels.dib_iterate_numpy(a, b, zn, beta, 4, 100)
    assert np.array_equal(zj, zn)


@pytest.mark.parametrize("flag, expected", [("1", "corner_dp_numpy"), ("0", "corner_dp_jit")])
def test_disable_flag_selects_path(flag, expected):
    env = dict(os.environ, INFOFRONTIER_DISABLE_JIT=flag)
    out = subprocess.run(
        [sys.executable, "-c", "from infofrontier import kernels; print(kernels.corner_dp.__name__)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected
