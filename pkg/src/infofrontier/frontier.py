"""
Pareto frontier of retained entropy ``H(Z)`` versus class information
``I(Z, Y)`` for contiguous binnings of sorted micro-bins.

Integer cuts index micro-bin boundaries: cut ``c`` puts bins ``< c`` to the
left. Refined binnings use real cuts in ``(0, 1)``, the micro-bin position
divided by N, where a cut inside a micro-bin splits its mass and class mass
linearly.
"""
import io
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize

from . import info, kernels
from .models import InvalidBinningError

log = logging.getLogger(__name__)

PROVENANCES = ("corner", "sampled", "refined", "ba")
H_TOL = 1e-4
DEFAULT_H_POINTS = 200
BRUTE_MAX_N = 12
BRUTE_MAX_M = 4
ROUNDOFF = 1e-13
SNAP_PASSES = 8
H_MATCH = 1e-12


class InfeasibleError(ValueError):
    pass


class NoGainError(ValueError):
    """Both rows have the same conditional; a swap cannot change I."""


class NegativityError(ValueError):
    pass


class TooLargeError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ContiguousBinning:
    """
    Cut vector of a contiguous binning.

    ``fractional=False`` means integer micro-bin indices in ``[1, N-1]``;
    ``fractional=True`` means micro-bin positions divided by N, in ``(0, 1)``.
    """
    cuts: np.ndarray
    fractional: bool = False

    def __post_init__(self):
        cuts = np.atleast_1d(np.asarray(self.cuts, dtype=float if self.fractional else np.int64))
        if cuts.ndim != 1:
            raise InvalidBinningError("cuts must be a vector")
        if cuts.size and np.any(np.diff(cuts) <= 0):
            raise InvalidBinningError("cuts must be strictly increasing")
        if self.fractional and cuts.size and (cuts[0] <= 0 or cuts[-1] >= 1):
            raise InvalidBinningError("fractional cuts must lie in (0, 1)")
        object.__setattr__(self, "cuts", cuts)

    @property
    def M(self):
        return self.cuts.size + 1

    def positions(self, N):
        """Cut positions in micro-bin units, validated against ``N``."""
        if self.fractional:
            if self.cuts.size and (self.cuts[0] <= 0 or self.cuts[-1] >= 1):
                raise InvalidBinningError("fractional cuts must lie in (0, 1)")
            return self.cuts * N
        if self.cuts.size and (self.cuts[0] < 1 or self.cuts[-1] > N - 1):
            raise InvalidBinningError(f"cuts must lie in [1, {N - 1}]")
        return self.cuts.astype(float)

    def __repr__(self):
        return f"ContiguousBinning({self.cuts.tolist()}, fractional={self.fractional})"


@dataclass(frozen=True, eq=False)
class ParetoPoint:
    H: float
    I: float
    M: int
    binning: ContiguousBinning = None
    provenance: str = "corner"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass(eq=False)
class FrontierCurve:
    """Non-dominated points sorted by H."""
    points: list = field(default_factory=list)

    @property
    def corners(self):
        return [p for p in self.points if p.provenance == "corner"]

    @property
    def H(self):
        return np.array([p.H for p in self.points])

    @property
    def I(self):
        return np.array([p.I for p in self.points])

    def __len__(self):
        return len(self.points)

    def value_at(self, H):
        """
        Frontier I linearly interpolated at ``H`` (flat beyond the last point).

        Points within ``H_MATCH`` of the query count as sitting on it, so a
        point refined to a target H is not lost to a roundoff-close neighbour.
        """
        Hs, Is = self.H, self.I
        q = np.asarray(H, dtype=float)
        out = np.interp(q, Hs, Is)
        near = np.abs(q[..., None] - Hs) <= H_MATCH
        out = np.maximum(out, np.where(near, Is, -np.inf).max(axis=-1, initial=-np.inf))
        return out if out.ndim else float(out)

    def to_csv(self, digits=12):
        buf = io.StringIO()
        buf.write("H,I,M,provenance,cuts\n")
        for p in self.points:
            cuts = "" if p.binning is None else ";".join(
                f"{c:.{digits}g}" for c in np.asarray(p.binning.cuts, dtype=float))
            buf.write(f"{p.H:.{digits}g},{p.I:.{digits}g},{p.M},{p.provenance},{cuts}\n")
        return buf.getvalue()


def _require_sorted(m):
    if not m.sorted:
        log.warning("micro-bin model is not sorted; contiguous binnings may be suboptimal")


def _eval_positions(m, positions):
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    if pos.shape[1] == 0:
        pos = np.zeros((pos.shape[0], 0))
    H, I = kernels.eval_positions(m.class1, m.class2, pos)
    # roundoff from masses summing to 1 +- ulp
    H[H < ROUNDOFF] = 0.0
    I[I < ROUNDOFF] = 0.0
    return H, I


def group_joint(m, binning):
    """Aggregated group-by-class joint of a binning, shape ``(M, 2)``."""
    pos = binning.positions(m.N)
    A = np.concatenate([[0.0], np.cumsum(m.class1)])
    B = np.concatenate([[0.0], np.cumsum(m.class2)])
    grid = np.arange(m.N + 1)
    ca = np.concatenate([[0.0], np.interp(pos, grid, A), [A[-1]]])
    cb = np.concatenate([[0.0], np.interp(pos, grid, B), [B[-1]]])
    return np.column_stack([np.diff(ca), np.diff(cb)])


def eval_binning(m, binning):
    """Return ``(joint, H, I)`` of a contiguous binning."""
    _require_sorted(m)
    J = group_joint(m, binning)
    if np.any(J.sum(axis=1) <= 0):
        raise InvalidBinningError("binning has an empty group")
    J = J / J.sum()
    return J, info.entropy(J.sum(axis=1)), info.mutual_info(J)


def corners(m, max_groups):
    """Exact max-I contiguous binnings for M = 1..max_groups, by dynamic programming."""
    _require_sorted(m)
    if max_groups < 1:
        raise InfeasibleError("need at least one group")
    if max_groups > m.N:
        raise InfeasibleError(f"cannot form {max_groups} groups from {m.N} micro-bins")
    _, choice = kernels.corner_dp(m.class1, m.class2, max_groups)
    out = []
    for M in range(1, max_groups + 1):
        cuts = kernels.reconstruct_cuts(choice, M)
        H, I = _eval_positions(m, cuts[None, :].astype(float))
        out.append(ParetoPoint(float(H[0]), float(I[0]), M, ContiguousBinning(cuts), "corner"))
    return out


def corner(m, M):
    return corners(m, M)[-1]


def sample_binnings(m, M, count, seed=0):
    """Evaluate ``count`` uniformly random cut vectors with ``M`` groups."""
    _require_sorted(m)
    if count < 1:
        raise ValueError("count must be positive")
    if M > m.N:
        raise InfeasibleError(f"cannot form {M} groups from {m.N} micro-bins")
    rng = np.random.default_rng(seed)
    k = M - 1
    cuts = np.empty((count, k), dtype=np.int64)
    for r in range(count):
        cuts[r] = np.sort(rng.choice(np.arange(1, m.N), size=k, replace=False))
    H, I = _eval_positions(m, cuts.astype(float))
    return [ParetoPoint(float(h), float(i), M, ContiguousBinning(c), "sampled")
            for h, i, c in zip(H, I, cuts)]


# ---------------------------------------------------------------------------
# refinement over real-valued cuts

def _refine_parts(m):
    a, b = m.class1, m.class2
    A = np.concatenate([[0.0], np.cumsum(a)])
    B = np.concatenate([[0.0], np.cumsum(b)])
    N = m.N

    def masses(x):
        # x: real cut positions in micro-bin units
        pos = np.concatenate([[0.0], x, [float(N)]])
        grid = np.arange(N + 1)
        ca, cb = np.interp(pos, grid, A), np.interp(pos, grid, B)
        k = np.clip(np.floor(x).astype(np.int64), 0, N - 1)
        return np.diff(ca), np.diff(cb), a[k], b[k]

    def lg(v):
        return np.log2(np.maximum(v, 1e-300))

    def H_and_grad(x):
        ga, gb, sa, sb = masses(x)
        P = ga + gb
        H = -float(np.sum(info.xlog2x(P)))
        lp = lg(P)
        grad = (sa + sb) * (lp[1:] - lp[:-1])
        return H, grad

    def I_and_grad(x):
        ga, gb, sa, sb = masses(x)
        P = ga + gb
        gain = info.xlog2x(ga) + info.xlog2x(gb) - info.xlog2x(P)
        ra, rb = lg(ga) - lg(P), lg(gb) - lg(P)
        grad = sa * (ra[:-1] - ra[1:]) + sb * (rb[:-1] - rb[1:])
        hy = -float(info.xlog2x(A[-1]) + info.xlog2x(B[-1]))
        return hy + float(gain.sum()), grad

    return _last_value(H_and_grad), _last_value(I_and_grad)


def _last_value(fn):
    # SLSQP asks for value and gradient at the same point separately
    memo = {}

    def wrapped(x):
        key = np.asarray(x, dtype=float).tobytes()
        if memo.get("key") != key:
            memo["key"], memo["val"] = key, fn(np.asarray(x, dtype=float))
        return memo["val"]

    return wrapped


def _feasible_start(H_fn, x0, target_H, gap, N):
    """
    Point on the segment from ``x0`` with ``H = target_H``.

    The segment ends at equal-mass cuts (H = log2 M) when the target lies
    above ``H(x0)``, else at cuts packed against the left edge (H near 0).
    """
    k = x0.size
    h0 = H_fn(x0)[0]
    if target_H > h0:
        end = np.arange(1, k + 1) * (N / (k + 1))
    else:
        end = gap * np.arange(1, k + 1) * 2
    path = lambda t: (1 - t) * x0 + t * end
    f = lambda t: H_fn(path(t))[0] - target_H
    if f(1.0) * f(0.0) > 0:
        return None
    return path(brentq(f, 0.0, 1.0, xtol=1e-14))


def _snap_moves(H_fn, x, target_H, N, gap):
    """
    Neighbours of ``x`` with one cut moved to an adjacent micro-bin edge and
    an adjacent cut re-solved to keep ``H = target_H``.

    I is only piecewise smooth in the cuts (kinks at micro-bin edges), so
    the gradient optimizer can stall next to a better kink.
    """
    k = x.size
    for i in range(k):
        for c in (math.floor(x[i]), math.ceil(x[i])):
            lo = x[i - 1] if i > 0 else 0.0
            hi = x[i + 1] if i < k - 1 else float(N)
            if c == x[i] or not lo < c < hi:
                continue
            for j in (i - 1, i + 1):
                if not 0 <= j < k:
                    continue
                y = x.copy()
                y[i] = c
                left = (y[j - 1] if j > 0 else 0.0) + gap
                right = (y[j + 1] if j < k - 1 else float(N)) - gap
                if not left < right:
                    continue

                def f(v, y=y, j=j):
                    y[j] = v
                    return H_fn(y.copy())[0] - target_H

                # H is unimodal in one cut, so bracket on each side of the old spot
                mid = min(max(x[j], left), right)
                f0 = f(mid)
                for end in (left, right):
                    if end != mid and f0 * f(end) <= 0:
                        a, b = sorted((mid, end))
                        y[j] = brentq(f, a, b, xtol=1e-12)
                        yield y.copy()


def _slsqp(I_fn, x0, k, gap, N, cons, max_iter):
    return minimize(lambda x: -I_fn(x)[0], x0, jac=lambda x: -I_fn(x)[1],
                    method="SLSQP", bounds=[(gap, N - gap)] * k, constraints=cons,
                    options={"maxiter": max_iter, "ftol": 1e-12})


def refine(m, start, target_H, tol=H_TOL, max_iter=200):
    """
    Locally maximize I over real cut positions subject to ``|H - target_H| <= tol``.

    ``start`` fixes the group count. Falls back to the start when it is
    feasible and the optimizer cannot improve on it.
    """
    _require_sorted(m)
    N = m.N
    if target_H < 0 or target_H > math.log2(N) + 1e-12:
        raise InfeasibleError(f"target H {target_H} outside [0, log2 N]")
    if target_H <= tol or start.M == 1:
        if target_H > tol:
            raise InfeasibleError("one group cannot reach a positive entropy target")
        return ParetoPoint(0.0, 0.0, 1, ContiguousBinning(np.array([], dtype=np.int64)), "refined")
    if target_H > math.log2(start.M) + 1e-12:
        raise InfeasibleError(f"{start.M} groups cannot reach H = {target_H}")

    H_fn, I_fn = _refine_parts(m)
    x0 = start.positions(N).astype(float)
    k = x0.size
    gap = 1e-9 * N
    # equality keeps results on the target; tol only decides acceptance
    cons = [{"type": "eq", "fun": lambda x: H_fn(x)[0] - target_H, "jac": lambda x: H_fn(x)[1]}]
    if k > 1:
        D = np.zeros((k - 1, k))
        D[np.arange(k - 1), np.arange(k - 1)] = -1.0
        D[np.arange(k - 1), np.arange(1, k)] = 1.0
        cons.append({"type": "ineq", "fun": lambda x: D @ x - gap, "jac": lambda x: D})

    best = None

    def consider(x):
        nonlocal best
        x = np.asarray(x, dtype=float)
        if np.any(np.diff(x) <= 0) or x[0] <= 0 or x[-1] >= N:
            return
        H, I = H_fn(x)[0], I_fn(x)[0]
        if abs(H - target_H) <= tol and (best is None or I > best[1]):
            best = (x, I, H)

    consider(x0)
    with warnings.catch_warnings():
        # SLSQP clips trial steps to the bounds and says so
        warnings.simplefilter("ignore", RuntimeWarning)
        res = _slsqp(I_fn, x0, k, gap, N, cons, max_iter)
    consider(res.x)
    if best is None:
        # the optimizer could not leave an infeasible start; restart on the constraint
        x1 = _feasible_start(H_fn, x0, target_H, gap, N)
        if x1 is not None:
            consider(x1)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                consider(_slsqp(I_fn, x1, k, gap, N, cons, max_iter).x)
    if best is None:
        raise InfeasibleError(f"could not reach H = {target_H} from {start!r}")
    for _ in range(SNAP_PASSES):
        before = best[1]
        for y in _snap_moves(H_fn, best[0], target_H, N, gap):
            consider(y)
        if best[1] <= before + 1e-15:
            break
    x, _, _ = best
    b = ContiguousBinning(x / N, fractional=True)
    H, I = _eval_positions(m, x[None, :])
    return ParetoPoint(float(H[0]), float(I[0]), start.M, b, "refined")


# ---------------------------------------------------------------------------

def pareto_filter(points):
    """Keep exactly the points not dominated under (min H, max I); sorted by H."""
    pts = sorted(points, key=lambda p: (p.H, -p.I))
    kept = []
    top = -np.inf
    for p in pts:
        if p.I > top:
            if kept and kept[-1].H == p.H:
                continue
            kept.append(p)
            top = p.I
    return FrontierCurve(kept)


def sweep_frontier(m, M_max=8, H_grid=None, samples_per_M=0, seed=0, extra_groups=2):
    """
    Corners, random binnings and refined points at each target H, filtered.

    Each grid target is refined from the corners with the fewest groups able
    to reach it (up to ``extra_groups`` more).
    """
    _require_sorted(m)
    M_max = min(M_max, m.N)
    cs = corners(m, M_max)
    points = list(cs)
    if samples_per_M:
        for M in range(2, M_max + 1):
            points += sample_binnings(m, M, samples_per_M, seed=seed + M)
    if H_grid is None:
        H_grid = np.linspace(0.0, math.log2(M_max), DEFAULT_H_POINTS)
    for target in np.asarray(H_grid, dtype=float):
        if target <= H_TOL:
            continue
        lo = max(2, math.ceil(2.0 ** target - 1e-12))
        for M in range(lo, min(M_max, lo + extra_groups) + 1):
            if target > math.log2(M):
                continue
            try:
                points.append(refine(m, cs[M - 1].binning, target))
            except InfeasibleError:
                continue
    return pareto_filter(points)


# ---------------------------------------------------------------------------
# oracles

def swap_step(J, k, l, eps):
    """
    Move ``eps`` of class mass between rows k and l so their conditionals separate.

    The row with the smaller class-1 conditional loses class-1 mass; both
    marginals are unchanged.
    """
    J = np.array(J, dtype=float)
    pk = J[k, 0] / J[k].sum()
    pl = J[l, 0] / J[l].sum()
    if pk == pl:
        raise NoGainError(f"rows {k} and {l} share conditional {pk}")
    lo, hi = (k, l) if pk < pl else (l, k)
    if eps < 0 or eps > min(J[lo, 0], J[hi, 1]):
        raise NegativityError(f"eps={eps} would make an entry negative")
    J[lo, 0] -= eps
    J[lo, 1] += eps
    J[hi, 0] += eps
    J[hi, 1] -= eps
    return J


def swap_derivative(J, k, l):
    """``dI/d eps`` of :func:`swap_step` at ``eps = 0``."""
    J = np.asarray(J, dtype=float)
    pk = J[k, 0] / J[k].sum()
    pl = J[l, 0] / J[l].sum()
    return abs(math.log2((1.0 / pk - 1.0) / (1.0 / pl - 1.0)))


def brute_force_frontier(m, M, surjective=True, with_contiguity=False):
    """
    ``(H, I)`` of every assignment of micro-bins to M groups.

    Guarded to ``N <= 12`` and ``M <= 4``. With ``with_contiguity`` each row
    also carries whether the assignment is a contiguous binning.
    """
    N = m.N
    if N > BRUTE_MAX_N or M > BRUTE_MAX_M:
        raise TooLargeError(f"N={N}, M={M} exceeds the enumeration guard")
    a, b = m.class1, m.class2
    z = np.array(list(itertools.product(range(M), repeat=N)), dtype=np.int64)
    if surjective:
        z = z[np.all([(z == g).any(axis=1) for g in range(M)], axis=0)]
    onehot = z[:, :, None] == np.arange(M)[None, None, :]
    ga = np.einsum("rng,n->rg", onehot, a)
    gb = np.einsum("rng,n->rg", onehot, b)
    P = ga + gb
    H = -info.xlog2x(P).sum(axis=1)
    hy = -float(info.xlog2x(a.sum()) + info.xlog2x(b.sum()))
    I = hy + (info.xlog2x(ga) + info.xlog2x(gb) - info.xlog2x(P)).sum(axis=1)
    H, I = np.maximum(H, 0.0), np.maximum(I, 0.0)
    if not with_contiguity:
        return list(zip(H.tolist(), I.tolist()))
    # contiguous: group labels change at most M-1 times and never revisit
    contiguous = np.array([len(set(r.tolist())) == 1 + int(np.count_nonzero(np.diff(r)))
                           for r in z])
    return list(zip(H.tolist(), I.tolist(), contiguous.tolist()))


def new_bin_slope(m, binning, eps):
    """
    Largest ``dI/dH`` from carving an extra group of mass ``eps`` off one end
    of an existing group.
    """
    N = m.N
    pos = binning.positions(N)
    edges = np.concatenate([[0.0], pos, [float(N)]])
    H0, I0 = _eval_positions(m, pos[None, :])
    width = eps * N
    best = -np.inf
    for g in range(edges.size - 1):
        left, right = edges[g], edges[g + 1]
        if right - left <= width:
            continue
        for new in (left + width, right - width):
            trial = np.sort(np.append(pos, new))
            H1, I1 = _eval_positions(m, trial[None, :])
            dH = H1[0] - H0[0]
            if dH > 0:
                best = max(best, (I1[0] - I0[0]) / dH)
    return best
