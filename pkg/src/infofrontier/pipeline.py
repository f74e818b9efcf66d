"""
From likelihood samples or a fitted model to sorted micro-bins.

The canonical discretized instance is a :class:`MicroBinModel`: N bins of the
uniformized likelihood, each with a mass and a class-1 conditional
probability, optionally sorted so that the conditional is non-decreasing.
"""
import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import integrate, optimize

from . import info
from .models import (
    AnalyticToy, ClassConditionalModel, ExpBetaDensity, InvalidBinningError,
    UniformizedModel, uniformize,
)

log = logging.getLogger(__name__)

DEFAULT_MICRO_BINS = 2000


class SampleParseError(ValueError):
    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


class EmptyInputError(ValueError):
    pass


class InsufficientSamplesError(ValueError):
    pass


class FitFailedError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# samples

@dataclass(frozen=True, eq=False)
class SampleSet:
    w: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        y = np.asarray(self.y, dtype=np.int64)
        if w.shape != y.shape or w.ndim != 1:
            raise ValueError("w and y must be equal-length vectors")
        if w.size == 0:
            raise EmptyInputError("no samples")
        if np.any((w < 0) | (w > 1)) or np.any(~np.isin(y, (1, 2))):
            raise ValueError("w must lie in [0, 1] and y in {1, 2}")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "y", y)

    def __len__(self):
        return self.w.size

    @property
    def count(self):
        return self.w.size

    def class_fraction(self, y=1):
        return float(np.mean(self.y == y))

    def of_class(self, y):
        return self.w[self.y == y]


def ingest_samples(source):
    """
    Read ``w,y`` records from a path, an open text file or a string holding
    the file contents. Lines starting with ``#`` are comments.
    """
    if isinstance(source, (str, os.PathLike)) and os.path.exists(source):
        with open(source, encoding="utf-8", newline="") as fh:
            return _parse_samples(fh)
    if isinstance(source, str):
        return _parse_samples(io.StringIO(source))
    return _parse_samples(source)


def _parse_samples(fh):
    header = None
    ws, ys = [], []
    reader = csv.reader(fh)
    for lineno, row in enumerate(reader, start=1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        if header is None:
            header = [c.strip().lower() for c in row]
            if "w" not in header or "y" not in header:
                raise SampleParseError(f"header must name columns w and y, got {row}", lineno)
            iw, iy = header.index("w"), header.index("y")
            continue
        try:
            w = float(row[iw])
            yf = float(row[iy])
        except (IndexError, ValueError):
            raise SampleParseError(f"malformed row {row!r}", lineno) from None
        if not (0.0 <= w <= 1.0) or not math.isfinite(w):
            raise SampleParseError(f"w = {row[iw]!r} outside [0, 1]", lineno)
        if yf not in (1.0, 2.0):
            raise SampleParseError(f"y = {row[iy]!r} not in {{1, 2}}", lineno)
        ws.append(w)
        ys.append(int(yf))
    if not ws:
        raise EmptyInputError("no sample rows found")
    return SampleSet(np.array(ws), np.array(ys))


def write_samples(samples, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("w,y\n")
        for w, y in zip(samples.w, samples.y):
            fh.write(f"{float(w)!r},{int(y)}\n")


# ---------------------------------------------------------------------------
# sampling from models

def sample_density(density, n, rng):
    """Inverse-CDF draws from a density object with a vectorized ``cdf``."""
    t = np.linspace(0.0, 1.0, 16385)
    grid = 0.5 * (1.0 - np.cos(np.pi * t))
    F = np.maximum.accumulate(np.asarray(density.cdf(grid), dtype=float))
    F[0], F[-1] = 0.0, 1.0
    keep = np.concatenate([[True], np.diff(F) > 0])
    return np.interp(rng.random(n), F[keep], grid[keep])


def sample_model(model, n, rng):
    """Draw ``n`` labelled samples from a class-conditional model."""
    if isinstance(model, UniformizedModel):
        model = model.base
    if isinstance(model, AnalyticToy):
        y = np.where(rng.random(n) < 0.5, 1, 2)
        x = np.sqrt(rng.random((n, 2)))
        x = np.where((y == 1)[:, None], x, 1.0 - x)
        from .models import toy_w
        return SampleSet(np.clip(toy_w(x[:, 0], x[:, 1]), 0.0, 1.0), y)
    y = np.where(rng.random(n) < model.prior, 1, 2)
    w = np.empty(n)
    n1 = int(np.sum(y == 1))
    w[y == 1] = sample_density(model.f1, n1, rng)
    w[y == 2] = sample_density(model.f2, n - n1, rng)
    return SampleSet(w, y)


# ---------------------------------------------------------------------------
# density fitting

@dataclass
class FitSummary:
    coeffs: np.ndarray
    mean_nll: float          # nats per sample
    iterations: int
    converged: bool


_W_EPS = 1e-300


def _sufficient_stats(w, degree):
    w = np.clip(w, _W_EPS, 1.0 - 1e-16)
    powers = np.stack([w ** k for k in range(1, degree + 1)]) if degree else np.empty((0, w.size))
    return np.concatenate([powers.mean(axis=1), [np.log(w).mean(), np.log1p(-w).mean()]])


def _log_partition(theta, degree):
    """``log int exp(poly) w^alpha (1-w)^beta`` and its gradient."""
    poly = np.concatenate([[0.0], theta[:degree]])
    alpha, beta = theta[degree], theta[degree + 1]
    grid = np.linspace(0.0, 1.0, 65)
    shift = float(np.max(np.polynomial.polynomial.polyval(grid, poly)))

    def smooth(x, k=0):
        return math.exp(np.polynomial.polynomial.polyval(x, poly) - shift) * x ** k

    opts = dict(epsabs=0.0, epsrel=1e-11, limit=200)
    wvar = (alpha, beta)
    z = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=wvar, **opts)[0]
    grad = np.empty(degree + 2)
    for k in range(1, degree + 1):
        grad[k - 1] = integrate.quad(smooth, 0.0, 1.0, args=(k,), weight="alg", wvar=wvar, **opts)[0] / z
    grad[degree] = integrate.quad(smooth, 0.0, 1.0, weight="alg-loga", wvar=wvar, **opts)[0] / z
    grad[degree + 1] = integrate.quad(smooth, 0.0, 1.0, weight="alg-logb", wvar=wvar, **opts)[0] / z
    return shift + math.log(z), grad


def fit_expbeta(w, degree, max_iter=500):
    """
    Maximum-likelihood coefficients of the exp-polynomial times beta family.

    The family is exponential in ``(w, ..., w^d, log w, log(1-w))``, so the
    mean negative log-likelihood is convex; a bounded quasi-Newton search with
    exact gradients finds the unique optimum.
    """
    w = np.asarray(w, dtype=float)
    if w.size < degree + 3:
        raise InsufficientSamplesError(f"need at least {degree + 3} samples, got {w.size}")
    stats = _sufficient_stats(w, degree)

    def objective(theta):
        logz, grad = _log_partition(theta, degree)
        return logz - theta @ stats, grad - stats

    bounds = [(None, None)] * degree + [(-1 + 1e-6, None)] * 2
    res = optimize.minimize(objective, np.zeros(degree + 2), jac=True, method="L-BFGS-B",
                            bounds=bounds,
                            options=dict(maxiter=max_iter, ftol=1e-14, gtol=1e-9))
    logz, grad = _log_partition(res.x, degree)
    coeffs = np.concatenate([[-logz], res.x])
    free = np.ones(degree + 2, dtype=bool)
    free[degree:] = res.x[degree:] > -1 + 1e-5
    converged = bool(res.success) or float(np.max(np.abs((grad - stats)[free]), initial=0.0)) < 1e-6
    summary = FitSummary(coeffs, float(res.fun), int(res.nit), converged)
    if not converged:
        raise FitFailedError(f"density fit did not converge: {res.message}", best=summary)
    return summary


def fit_class_densities(samples, degree):
    """
    Fit one exp-polynomial times beta density per class.

    The returned model carries ``fit_summaries`` (per class) and uses the
    empirical class fraction as its prior.
    """
    fits = {}
    for y in (1, 2):
        wy = samples.of_class(y)
        if wy.size < degree + 3:
            raise InsufficientSamplesError(
                f"class {y} has {wy.size} samples; degree {degree} needs {degree + 3}")
        fits[y] = fit_expbeta(wy, degree)
        log.info("class %d: mean NLL %.6f nats after %d iterations", y, fits[y].mean_nll,
                 fits[y].iterations)
    model = ClassConditionalModel(ExpBetaDensity(fits[1].coeffs), ExpBetaDensity(fits[2].coeffs),
                                  samples.class_fraction(1), name=f"expbeta-d{degree}")
    model.fit_summaries = fits
    return model


# ---------------------------------------------------------------------------
# micro-bins

@dataclass(frozen=True, eq=False)
class MicroBinModel:
    """
    N micro-bins of the uniformized likelihood.

    ``p1[j]`` is the class-1 probability in bin j and ``mass[j]`` its weight.
    ``permutation[j]`` is the original (unsorted) index of the bin now at
    position j; ``edges`` optionally holds the original-W boundaries of the
    unsorted bins.
    """
    p1: np.ndarray
    mass: np.ndarray
    sorted: bool = False
    permutation: np.ndarray = None
    edges: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        p1 = np.asarray(self.p1, dtype=float)
        mass = np.asarray(self.mass, dtype=float)
        if p1.shape != mass.shape or p1.ndim != 1 or p1.size == 0:
            raise ValueError("p1 and mass must be equal-length non-empty vectors")
        if np.any((p1 < 0) | (p1 > 1)):
            raise info.InvalidDistributionError("p1 outside [0, 1]")
        if np.any(mass < 0) or abs(mass.sum() - 1.0) > info.PROB_ATOL:
            raise info.InvalidDistributionError("bin masses must be non-negative and sum to 1")
        if self.sorted and np.any(np.diff(p1) < 0):
            raise ValueError("sorted flag set but p1 is not non-decreasing")
        perm = (np.arange(p1.size) if self.permutation is None
                else np.asarray(self.permutation, dtype=np.int64))
        object.__setattr__(self, "p1", p1)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "permutation", perm)

    @property
    def N(self):
        return self.p1.size

    @property
    def class1(self):
        return self.mass * self.p1

    @property
    def class2(self):
        return self.mass * (1.0 - self.p1)

    @property
    def prior(self):
        return float(self.class1.sum())

    def joint(self):
        return np.column_stack([self.class1, self.class2])

    def mutual_info(self):
        return info.mutual_info(self.joint())

    def entropy(self):
        return info.entropy(self.mass)

    def to_text(self):
        lines = [f"N {self.N}", f"sorted {int(self.sorted)}", "p1 mass permutation"]
        lines += [f"{p:.17g} {m:.17g} {int(k)}" for p, m, k in
                  zip(self.p1, self.mass, self.permutation)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        rows = [r for r in text.splitlines() if r.strip() and not r.startswith("#")]
        n = int(rows[0].split()[1])
        is_sorted = bool(int(rows[1].split()[1]))
        data = np.array([[float(v) for v in r.split()] for r in rows[3:3 + n]])
        return cls(data[:, 0], data[:, 1], is_sorted, data[:, 2].astype(np.int64))


def fine_bin(model, N=DEFAULT_MICRO_BINS):
    """
    Average the conditional probability over N equal-mass bins.

    Bins are equispaced in the uniformized coordinate, so each has mass 1/N
    and ``p1[j] = N * P(bin j, Y = 1)``.
    """
    if N < 2:
        raise ValueError("need at least two micro-bins")
    base = model.base if isinstance(model, UniformizedModel) else model
    u = np.arange(N + 1) / N
    w_edges = np.empty(N + 1)
    w_edges[0], w_edges[-1] = 0.0, 1.0
    w_edges[1:-1] = base.ppf(u[1:-1])
    c1 = np.diff(np.asarray(base.joint_cdf(w_edges, 1), dtype=float))
    if np.any(~np.isfinite(c1)):
        bad = int(np.flatnonzero(~np.isfinite(c1))[0])
        raise FloatingPointError(f"non-finite class mass in micro-bin {bad}")
    p1 = np.clip(N * np.maximum(c1, 0.0), 0.0, 1.0)
    return MicroBinModel(p1, np.full(N, 1.0 / N), False, None, w_edges)


def fine_bin_from_samples(samples, N):
    """Equal-count bins of the rank-ordered samples; p1 is the class-1 fraction."""
    n = samples.count
    if N > n:
        raise InsufficientSamplesError(f"{N} bins need at least {N} samples, have {n}")
    order = np.argsort(samples.w, kind="stable")
    parts = np.array_split(order, N)
    counts = np.array([p.size for p in parts], dtype=float)
    p1 = np.array([np.mean(samples.y[p] == 1) for p in parts])
    edges = np.concatenate([[0.0], [samples.w[p[-1]] for p in parts[:-1]], [1.0]])
    return MicroBinModel(p1, counts / n, False, None, edges)


def sort_bins(m):
    """Relabel micro-bins so that p1 is non-decreasing (stable on ties)."""
    order = np.argsort(m.p1, kind="stable")
    return replace(m, p1=m.p1[order], mass=m.mass[order], sorted=True,
                   permutation=m.permutation[order])


def micro_bins(model, N=DEFAULT_MICRO_BINS):
    """uniformize, fine-bin and sort in one call."""
    return sort_bins(fine_bin(uniformize(model), N))


# ---------------------------------------------------------------------------
# vertical binning and adaptive placement

def _interior_grid(k=8193):
    t = np.linspace(0.0, 1.0, k)[1:-1]
    return 0.5 * (1.0 - np.cos(np.pi * t))


def _crossings(fn, level, grid):
    vals = fn(grid) - level
    idx = np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)
    roots = [optimize.brentq(lambda x: float(fn(np.array([x]))[0]) - level,
                             grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15) for i in idx]
    # grid points landing exactly on the level
    exact = grid[1:-1][(vals[1:-1] == 0) & (vals[:-2] * vals[2:] < 0)]
    return roots + exact.tolist()


def vertical_bin(model, thresholds):
    """
    Joint of (Z, Y) where Z is the band of ``p1(W)`` between thresholds.

    Works for non-monotone conditionals: every crossing of a threshold is
    located on a fine grid and refined by root finding.
    """
    t = np.asarray(thresholds, dtype=float).ravel()
    if t.size and (np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] >= 1):
        raise InvalidBinningError("thresholds must be strictly increasing inside (0, 1)")
    base = model.base if isinstance(model, UniformizedModel) else model
    grid = _interior_grid()
    p1 = lambda w: np.asarray(base.p1(w), dtype=float)
    cuts = sorted({0.0, 1.0, *(r for level in t for r in _crossings(p1, level, grid))})
    cuts = np.array(cuts)
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    bands = np.searchsorted(t, p1(mids), side="right")
    P = np.zeros((t.size + 1, 2))
    for y in (1, 2):
        seg = np.diff(np.asarray(base.joint_cdf(cuts, y), dtype=float))
        np.add.at(P[:, y - 1], bands, np.maximum(seg, 0.0))
    return P


def _h(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, -x * np.log2(x), 0.0)


_H_PEAK = float(_h(np.exp(-1.0)))


def h_star(x):
    """Monotone unfolding of ``-x log2 x`` about its peak at ``1/e``."""
    x = np.asarray(x, dtype=float)
    return np.where(x < np.exp(-1.0), _h(x), 2 * _H_PEAK - _h(x))


def h_plus(p1):
    return h_star(p1) - h_star(1.0 - np.asarray(p1, dtype=float))


def _monotone_segments(values, grid):
    """Split the grid at sign changes of the discrete derivative."""
    d = np.sign(np.diff(values))
    nz = np.flatnonzero(d)
    breaks = [0.0]
    for i0, i1 in zip(nz[:-1], nz[1:]):
        if d[i0] != d[i1]:
            breaks.append(float(grid[i1]))
    breaks.append(1.0)
    return breaks


def adaptive_bin_placement(model, N):
    """
    Place N-1 boundaries so that ``h_plus(p1(w))`` rises by equal steps
    between them, which bounds the information lost to binning by 6/N bits.

    If p1 changes direction a finite number of times, each monotone stretch
    gets its own N bins and the stretch ends become extra boundaries.
    """
    if N < 1:
        raise ValueError("N must be positive")
    base = model.base if isinstance(model, UniformizedModel) else model
    grid = _interior_grid()
    p1 = lambda w: np.asarray(base.p1(w), dtype=float)
    hp = lambda w: h_plus(p1(w))
    values = hp(grid)
    breaks = _monotone_segments(values, grid)
    out = []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        inside = (grid >= lo) & (grid <= hi)
        seg = grid[inside]
        if seg.size < 2:
            continue
        h0, h1 = float(hp(seg[:1])[0]), float(hp(seg[-1:])[0])
        if h0 == h1:
            continue
        if lo > 0.0:
            out.append(lo)
        for j in range(1, N):
            level = h0 + (h1 - h0) * j / N
            vals = hp(seg) - level
            k = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
            if k.size == 0:
                raise FloatingPointError(f"no crossing for level {level}")
            i = int(k[0])
            try:
                root = optimize.brentq(lambda x: float(hp(np.array([x]))[0]) - level,
                                       seg[i], seg[i + 1], xtol=1e-15, rtol=1e-15)
            except ValueError as exc:
                raise FloatingPointError(f"h_plus inversion failed at level {level}") from exc
            out.append(root)
    b = np.unique(np.array(out))
    return b[(b > 0) & (b < 1)]
