"""
Discrete information measures, in bits.

Every function validates its input instead of renormalizing it: a probability
vector or joint matrix whose entries are negative or whose total differs from
one by more than ``PROB_ATOL`` raises :class:`InvalidDistributionError`.
"""
import numpy as np

PROB_ATOL = 1e-9


class InvalidDistributionError(ValueError):
    pass


class DivergenceUndefinedError(ValueError):
    pass


def _as_prob(p, ndim):
    arr = np.asarray(p, dtype=float)
    if arr.ndim != ndim:
        raise InvalidDistributionError(
            f"expected a {ndim}-d probability array, got shape {arr.shape}")
    if arr.size == 0:
        raise InvalidDistributionError("empty distribution")
    if not np.all(np.isfinite(arr)):
        raise InvalidDistributionError("non-finite probability")
    if np.any(arr < 0):
        raise InvalidDistributionError(f"negative probability {arr.min()!r}")
    total = arr.sum()
    if abs(total - 1.0) > PROB_ATOL:
        raise InvalidDistributionError(
            f"probabilities sum to {total!r}, not 1 (tolerance {PROB_ATOL})")
    return arr


def xlog2x(x):
    """Elementwise ``x*log2(x)`` with ``0*log 0 = 0``."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def _h(p):
    return -float(np.sum(xlog2x(p)))


def binary_entropy(x):
    """Entropy of a Bernoulli(x) variable, elementwise."""
    x = np.asarray(x, dtype=float)
    return -(xlog2x(x) + xlog2x(1.0 - x))


def entropy(p):
    """Shannon entropy ``-sum p log2 p`` of a probability vector."""
    return max(_h(_as_prob(p, 1)), 0.0)


def joint_entropy(joint):
    return max(_h(_as_prob(joint, 2)), 0.0)


def marginals(joint):
    """Row and column marginals of a joint matrix."""
    P = _as_prob(joint, 2)
    return P.sum(axis=1), P.sum(axis=0)


def mutual_info(joint):
    """
    Mutual information of the two variables indexing the rows and columns.

    Uses ``I = H(Z) + H(Y) - H(Z,Y)``. Negative results from roundoff are
    clamped to zero.
    """
    P = _as_prob(joint, 2)
    value = _h(P.sum(axis=1)) + _h(P.sum(axis=0)) - _h(P)
    return max(value, 0.0)


def conditional_entropy(joint):
    """``H(Y|Z)`` where rows index Z and columns index Y."""
    P = _as_prob(joint, 2)
    return max(_h(P) - _h(P.sum(axis=1)), 0.0)


def kl_divergence(p, q):
    """Kullback-Leibler divergence ``D(p||q)`` in bits."""
    p = _as_prob(p, 1)
    q = _as_prob(q, 1)
    if p.shape != q.shape:
        raise InvalidDistributionError(f"shape mismatch {p.shape} vs {q.shape}")
    support = p > 0
    if np.any(q[support] == 0):
        raise DivergenceUndefinedError("p puts mass where q has none")
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * (np.log2(ps) - np.log2(qs)))), 0.0)


def mutual_info_kl(joint):
    """Mutual information as ``D(P || P_Z x P_Y)``; cross-check route."""
    P = _as_prob(joint, 2)
    outer = np.outer(P.sum(axis=1), P.sum(axis=0))
    return kl_divergence(P.ravel(), outer.ravel())
