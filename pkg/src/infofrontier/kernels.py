"""
Hot inner loops.

Each kernel exists twice: a loop version compiled with numba and a vectorized
numpy version. The public names at the bottom of the module pick one based on
``_jit.JIT_ENABLED``; both are importable directly for cross-checks and
benchmarks.

Micro-bins are described by their class masses ``a`` (class 1) and ``b``
(class 2); a group's contribution to ``I(Z, Y) - H(Y)`` is
``a log2(a/P) + b log2(b/P)`` with ``P = a + b``.
"""
import math

import numpy as np

from ._jit import JIT_ENABLED, njit

INV_LN2 = 1.0 / math.log(2.0)
NEG_INF = -np.inf


# ---------------------------------------------------------------------------
# scalar helpers (compiled)

@njit
def _xlogx(x):
    if x <= 0.0:
        return 0.0
    return x * math.log(x) * INV_LN2


@njit
def _group_gain(a, b):
    if a < 0.0:
        a = 0.0
    if b < 0.0:
        b = 0.0
    return _xlogx(a) + _xlogx(b) - _xlogx(a + b)


@njit
def _cum_at(cum, step, pos):
    # cumulative mass at fractional micro-bin position
    k = int(math.floor(pos))
    n = step.shape[0]
    if k >= n:
        return cum[n]
    if k < 0:
        return 0.0
    return cum[k] + (pos - k) * step[k]


# ---------------------------------------------------------------------------
# exact corner search

@njit
def corner_dp_jit(a, b, max_groups):
    """
    Best contiguous grouping of micro-bins for every group count.

    Returns ``value[m-1]`` (max of ``I - H(Y)`` with exactly m groups) and the
    suffix choice table used for reconstruction.
    """
    n = a.shape[0]
    A = np.zeros(n + 1)
    B = np.zeros(n + 1)
    for j in range(n):
        A[j + 1] = A[j] + a[j]
        B[j + 1] = B[j] + b[j]
    best = np.full((max_groups + 1, n + 1), NEG_INF)
    choice = np.full((max_groups + 1, n + 1), -1, dtype=np.int64)
    row = np.empty(n + 1)
    for i in range(n - 1, -1, -1):
        for j in range(i + 1, n + 1):
            row[j] = _group_gain(A[j] - A[i], B[j] - B[i])
        best[1, i] = row[n]
        choice[1, i] = n
        for m in range(2, max_groups + 1):
            if n - i < m:
                break
            top = NEG_INF
            arg = -1
            for j in range(i + 1, n - m + 2):
                v = row[j] + best[m - 1, j]
                if v > top:
                    top = v
                    arg = j
            best[m, i] = top
            choice[m, i] = arg
    return best[1:, 0].copy(), choice


def corner_dp_numpy(a, b, max_groups):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    A = np.concatenate([[0.0], np.cumsum(a)])
    B = np.concatenate([[0.0], np.cumsum(b)])
    best = np.full((max_groups + 1, n + 1), NEG_INF)
    choice = np.full((max_groups + 1, n + 1), -1, dtype=np.int64)

    def xlogx(x):
        x = np.maximum(x, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, x * np.log2(x), 0.0)

    for i in range(n - 1, -1, -1):
        ga = A[i + 1:] - A[i]
        gb = B[i + 1:] - B[i]
        row = xlogx(ga) + xlogx(gb) - xlogx(ga + gb)   # row[k]: group i .. i+k
        best[1, i] = row[-1]
        choice[1, i] = n
        for m in range(2, max_groups + 1):
            if n - i < m:
                break
            hi = n - m + 2                           # exclusive bound on j
            cand = row[:hi - i - 1] + best[m - 1, i + 1:hi]
            k = int(np.argmax(cand))
            best[m, i] = cand[k]
            choice[m, i] = i + 1 + k
    return best[1:, 0].copy(), choice


def reconstruct_cuts(choice, m):
    cuts = []
    i = 0
    for level in range(m, 1, -1):
        i = int(choice[level, i])
        cuts.append(i)
    return np.array(cuts, dtype=np.int64)


# ---------------------------------------------------------------------------
# batch evaluation of binnings given by (possibly fractional) cut positions

@njit
def eval_positions_jit(a, b, positions):
    n = a.shape[0]
    A = np.zeros(n + 1)
    B = np.zeros(n + 1)
    for j in range(n):
        A[j + 1] = A[j] + a[j]
        B[j + 1] = B[j] + b[j]
    k, c = positions.shape
    H = np.empty(k)
    I = np.empty(k)
    ty = A[n] + B[n]
    hy = -(_xlogx(A[n] / ty) + _xlogx(B[n] / ty)) if ty > 0 else 0.0
    for r in range(k):
        pa = 0.0
        pb = 0.0
        h = 0.0
        g = 0.0
        for q in range(c + 1):
            if q < c:
                ca = _cum_at(A, a, positions[r, q])
                cb = _cum_at(B, b, positions[r, q])
            else:
                ca = A[n]
                cb = B[n]
            ga = ca - pa
            gb = cb - pb
            h -= _xlogx(ga + gb)
            g += _group_gain(ga, gb)
            pa = ca
            pb = cb
        H[r] = max(h, 0.0)
        I[r] = max(hy + g, 0.0)
    return H, I


def eval_positions_numpy(a, b, positions):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    positions = np.asarray(positions, dtype=float)
    n = a.size
    A = np.concatenate([[0.0], np.cumsum(a)])
    B = np.concatenate([[0.0], np.cumsum(b)])

    def cum_at(cum, step, pos):
        k = np.clip(np.floor(pos).astype(np.int64), 0, n)
        frac = pos - k
        stepk = np.where(k < n, step[np.minimum(k, n - 1)], 0.0)
        return np.where(pos >= n, cum[n], cum[k] + frac * stepk)

    rows = positions.shape[0]
    ca = np.column_stack([np.zeros(rows), cum_at(A, a, positions), np.full(rows, A[n])])
    cb = np.column_stack([np.zeros(rows), cum_at(B, b, positions), np.full(rows, B[n])])
    ga = np.maximum(np.diff(ca, axis=1), 0.0)
    gb = np.maximum(np.diff(cb, axis=1), 0.0)

    def xlogx(x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, x * np.log2(x), 0.0)

    ty = A[n] + B[n]
    hy = -(xlogx(np.array(A[n] / ty)) + xlogx(np.array(B[n] / ty)))
    H = -xlogx(ga + gb).sum(axis=1)
    I = hy + (xlogx(ga) + xlogx(gb) - xlogx(ga + gb)).sum(axis=1)
    return np.maximum(H, 0.0), np.maximum(I, 0.0)


# ---------------------------------------------------------------------------
# deterministic information bottleneck: greedy single-bin moves

@njit
def _dib_term(x, y, keep):
    # per-cluster share of I - beta H, up to constants; keep = 1 - beta
    return _xlogx(x) + _xlogx(y) - keep * _xlogx(x + y)


@njit
def dib_greedy_jit(a, b, z, beta, n_clusters, tol, max_sweeps):
    """
    Coordinate ascent on ``I(Z,Y) - beta H(Z)``: move single micro-bins to the
    cluster with the largest gain until no move gains more than ``tol``.

    ``z`` is modified in place. Returns the number of moves made.
    """
    n = a.shape[0]
    keep = 1.0 - beta
    ca = np.zeros(n_clusters)
    cb = np.zeros(n_clusters)
    for x in range(n):
        ca[z[x]] += a[x]
        cb[z[x]] += b[x]
    cur = np.empty(n_clusters)
    for t in range(n_clusters):
        cur[t] = _dib_term(ca[t], cb[t], keep)
    moves = 0
    for sweep in range(max_sweeps):
        changed = False
        for step in range(n):
            # alternate direction so boundaries can drift either way quickly
            x = step if sweep % 2 == 0 else n - 1 - step
            s = z[x]
            ax = a[x]
            bx = b[x]
            left = _dib_term(ca[s] - ax, cb[s] - bx, keep)
            leave = left - cur[s]
            best_gain = tol
            best_t = -1
            best_new = 0.0
            for t in range(n_clusters):
                if t == s:
                    continue
                new = _dib_term(ca[t] + ax, cb[t] + bx, keep)
                gain = leave + new - cur[t]
                if gain > best_gain:
                    best_gain = gain
                    best_t = t
                    best_new = new
            if best_t >= 0:
                ca[s] -= ax
                cb[s] -= bx
                ca[best_t] += ax
                cb[best_t] += bx
                cur[s] = left
                cur[best_t] = best_new
                z[x] = best_t
                moves += 1
                changed = True
        if not changed:
            break
    return moves


def dib_greedy_numpy(a, b, z, beta, n_clusters, tol, max_sweeps):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    keep = 1.0 - beta
    ca = np.bincount(z, weights=a, minlength=n_clusters).astype(float)
    cb = np.bincount(z, weights=b, minlength=n_clusters).astype(float)

    def term(x, y):
        x = np.maximum(x, 0.0)
        y = np.maximum(y, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            xl = np.where(x > 0, x * np.log2(x), 0.0)
            yl = np.where(y > 0, y * np.log2(y), 0.0)
            s = x + y
            sl = np.where(s > 0, s * np.log2(s), 0.0)
        return xl + yl - keep * sl

    moves = 0
    n = a.size
    for sweep in range(max_sweeps):
        changed = False
        order = range(n) if sweep % 2 == 0 else range(n - 1, -1, -1)
        for x in order:
            s = z[x]
            leave = float(term(ca[s] - a[x], cb[s] - b[x]) - term(ca[s], cb[s]))
            gains = leave + term(ca + a[x], cb + b[x]) - term(ca, cb)
            gains[s] = -np.inf
            t = int(np.argmax(gains))
            if gains[t] > tol:
                ca[s] -= a[x]
                cb[s] -= b[x]
                ca[t] += a[x]
                cb[t] += b[x]
                z[x] = t
                moves += 1
                changed = True
        if not changed:
            break
    return moves


# ---------------------------------------------------------------------------
# Blahut-Arimoto style fixed point for the deterministic bottleneck

@njit
def dib_iterate_jit(a, b, z, beta, n_clusters, max_iter):
    """
    Alternate the encoder update ``z(x) = argmax_t log q(t) - D(p(y|x)||q(y|t))/beta``
    with the cluster-statistics update until the assignment is stable.
    Returns the number of iterations.
    """
    n = a.shape[0]
    inv_beta = 1.0 / beta
    ca = np.zeros(n_clusters)
    cb = np.zeros(n_clusters)
    znew = np.empty(n, dtype=np.int64)
    for it in range(max_iter):
        ca[:] = 0.0
        cb[:] = 0.0
        for x in range(n):
            ca[z[x]] += a[x]
            cb[z[x]] += b[x]
        total = 0.0
        for t in range(n_clusters):
            total += ca[t] + cb[t]
        changed = False
        for x in range(n):
            px = a[x] + b[x]
            if px <= 0.0:
                znew[x] = z[x]
                continue
            p1 = a[x] / px
            best = NEG_INF
            arg = z[x]
            for t in range(n_clusters):
                pt = ca[t] + cb[t]
                if pt <= 0.0:
                    continue
                q1 = ca[t] / pt
                d = 0.0
                if p1 > 0.0:
                    d += p1 * math.log(p1 / q1) if q1 > 0.0 else np.inf
                if p1 < 1.0:
                    d += (1.0 - p1) * math.log((1.0 - p1) / (1.0 - q1)) if q1 < 1.0 else np.inf
                score = math.log(pt / total) - inv_beta * d
                if score > best:
                    best = score
                    arg = t
            znew[x] = arg
            if arg != z[x]:
                changed = True
        for x in range(n):
            z[x] = znew[x]
        if not changed:
            return it + 1
    return max_iter


def dib_iterate_numpy(a, b, z, beta, n_clusters, max_iter):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    px = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = np.where(px > 0, a / np.where(px > 0, px, 1.0), 0.5)
    for it in range(max_iter):
        ca = np.bincount(z, weights=a, minlength=n_clusters)
        cb = np.bincount(z, weights=b, minlength=n_clusters)
        pt = ca + cb
        alive = pt > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            q1 = np.where(alive, ca / np.where(alive, pt, 1.0), 0.5)
            d = (np.where(p1[:, None] > 0, p1[:, None] * np.log(p1[:, None] / q1[None, :]), 0.0)
                 + np.where(p1[:, None] < 1,
                            (1 - p1[:, None]) * np.log((1 - p1[:, None]) / (1 - q1[None, :])), 0.0))
            score = np.log(pt / pt.sum())[None, :] - d / beta
        score[:, ~alive] = -np.inf
        score = np.where(np.isnan(score), -np.inf, score)
        znew = np.argmax(score, axis=1)
        znew = np.where(px > 0, znew, z)
        if np.array_equal(znew, z):
            return it + 1
        z[:] = znew
    return max_iter


# ---------------------------------------------------------------------------

if JIT_ENABLED:
    corner_dp = corner_dp_jit
    eval_positions = eval_positions_jit
    dib_greedy = dib_greedy_jit
    dib_iterate = dib_iterate_jit
else:
    corner_dp = corner_dp_numpy
    eval_positions = eval_positions_numpy
    dib_greedy = dib_greedy_numpy
    dib_iterate = dib_iterate_numpy
