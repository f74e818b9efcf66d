"""
Deterministic information bottleneck baseline.

Maximizes ``I(Z,Y) - beta H(Z)`` over hard assignments of micro-bins to at
most ``Z_max`` clusters, keeping the best of several restarts, and sweeps
``beta`` over a log-spaced grid. Two local searches are available: greedy
single-bin moves on the objective (``"greedy"``, the default) and the
alternating encoder/cluster fixed point (``"iterate"``).
"""
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import info, kernels
from .frontier import ParetoPoint

log = logging.getLogger(__name__)

MOVE_TOL = 1e-12
MAX_SWEEPS = 10_000
DEDUP_TOL = 1e-6
MAX_ITER = 1000
METHODS = ("greedy", "iterate")
WORKERS_ENV = "INFOFRONTIER_WORKERS"


@dataclass(frozen=True)
class DibConfig:
    beta_min: float = 1e-10
    beta_max: float = 1.0
    steps: int = 20_000
    Z_max: int = 8
    restarts: int = 10
    seed: int = 0
    anneal: bool = False
    workers: int = None
    method: str = "greedy"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if not 0 < self.beta_min < self.beta_max:
            raise ValueError("need 0 < beta_min < beta_max")
        if self.steps < 1 or self.Z_max < 1 or self.restarts < 1:
            raise ValueError("steps, Z_max and restarts must be positive")

    def betas(self):
        if self.steps == 1:
            return np.array([self.beta_min])
        return np.logspace(np.log10(self.beta_min), np.log10(self.beta_max), self.steps)


def default_workers():
    """Worker count from the environment, else the available cores."""
    try:
        return max(1, int(os.environ[WORKERS_ENV]))
    except (KeyError, ValueError):
        return os.cpu_count() or 1


def _check_assignment(z, N, Z_max):
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (N,):
        raise ValueError(f"assignment must have length {N}")
    if z.min() < 0 or z.max() >= Z_max:
        raise ValueError(f"cluster labels must lie in [0, {Z_max})")
    return z


def assignment_joint(m, z, Z_max=None):
    """Cluster-by-class joint of an assignment, empty clusters dropped."""
    z = np.asarray(z, dtype=np.int64)
    k = int(z.max()) + 1 if Z_max is None else Z_max
    ca = np.bincount(z, weights=m.class1, minlength=k)
    cb = np.bincount(z, weights=m.class2, minlength=k)
    J = np.column_stack([ca, cb])
    return J[J.sum(axis=1) > 0]


def _h_and_i(m, z):
    J = assignment_joint(m, z)
    J = J / J.sum()
    # + 0.0 turns a negative zero into a positive one
    return info.entropy(J.sum(axis=1)) + 0.0, info.mutual_info(J) + 0.0


def dib_objective(m, z, beta):
    """``I - beta H`` of the assignment ``z`` (0-based cluster labels)."""
    H, I = _h_and_i(m, z)
    return I - beta * H


def _contiguous_start(rng, N, Z_max):
    k = min(Z_max, N) - 1
    cuts = np.sort(rng.choice(np.arange(1, N), size=k, replace=False)) if k else np.array([], int)
    return np.searchsorted(cuts, np.arange(N), side="right").astype(np.int64)


def _starts(m, Z_max, restarts, rng):
    # restart 0 is the equal-count contiguous split; the rest are random
    N = m.N
    k = min(Z_max, N)
    yield (np.arange(N) * k // N).astype(np.int64)
    for _ in range(restarts - 1):
        yield _contiguous_start(rng, N, Z_max)


def _run(m, z, beta, Z_max, method):
    if method == "greedy":
        kernels.dib_greedy(m.class1, m.class2, z, float(beta), Z_max, MOVE_TOL, MAX_SWEEPS)
    else:
        # the encoder update divides by beta
        kernels.dib_iterate(m.class1, m.class2, z, max(float(beta), 1e-300), Z_max, MAX_ITER)
    H, I = _h_and_i(m, z)
    return z, H, I


def dib_optimize(m, beta, restarts=10, seed=0, Z_max=8, start=None, method="greedy"):
    """
    Best greedy fixed point of ``I - beta H`` over ``restarts`` starts.

    ``start`` (an assignment) replaces the first start. Returns
    ``(z, H, I)``; ties in the objective keep the earliest restart.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    rng = np.random.default_rng(seed)
    best = None
    for r, z in enumerate(_starts(m, Z_max, restarts, rng)):
        if r == 0 and start is not None:
            z = _check_assignment(start, m.N, Z_max).copy()
        z, H, I = _run(m, z, beta, Z_max, method)
        score = I - beta * H
        if best is None or score > best[0] + MOVE_TOL:
            best = (score, z, H, I)
    _, z, H, I = best
    return z, H, I


def _sweep_fresh(m, cfg, betas):
    def one(args):
        i, beta = args
        z, H, I = dib_optimize(m, beta, cfg.restarts, seed=(cfg.seed, i), Z_max=cfg.Z_max,
                               method=cfg.method)
        return i, beta, H, I, np.unique(z).size

    workers = cfg.workers or default_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, enumerate(betas)))
    else:
        results = [one(item) for item in enumerate(betas)]
    return sorted(results)


def _sweep_anneal(m, cfg, betas):
    results = []
    z = None
    for i, beta in enumerate(betas):
        z, H, I = dib_optimize(m, beta, cfg.restarts, seed=(cfg.seed, i), Z_max=cfg.Z_max,
                               start=z, method=cfg.method)
        results.append((i, beta, H, I, np.unique(z).size))
    return results


def dib_sweep(m, cfg=None):
    """
    Distinct ``(H, I)`` points found over the beta grid.

    Points within ``DEDUP_TOL`` of an earlier one (in both coordinates) are
    dropped; the result is sorted by H.
    """
    cfg = cfg or DibConfig()
    betas = cfg.betas()
    rows = _sweep_anneal(m, cfg, betas) if cfg.anneal else _sweep_fresh(m, cfg, betas)
    kept = []
    for _, beta, H, I, M in rows:
        if any(abs(H - p.H) <= DEDUP_TOL and abs(I - p.I) <= DEDUP_TOL for p in kept):
            continue
        kept.append(ParetoPoint(H, I, int(M), None, "ba"))
    log.info("beta sweep found %d distinct points", len(kept))
    return sorted(kept, key=lambda p: (p.H, p.I))
