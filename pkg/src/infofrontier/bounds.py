"""
Information bounds, bloat/loss diagnostics and the independent-bit code.

The bit code writes a variable Z over ``{1..m}`` as ``m-1`` independent
Bernoulli bits ``B_1..B_{m-1}`` with ``P(B_k = 1) = P(Z=k+1) / P(Z<=k+1)``.
Decoding prefixes a 1 to the bit string and returns the (1-based) position
of its last 1. For m = 4::

    bits   z        bits   z
    000    1        001    4
    100    2        101    4
    010    3        011    4
    110    3        111    4
"""
import numpy as np

from . import info


class InconsistentInputsError(ValueError):
    pass


def fano_bound(eps):
    """Least ``I(Z,Y)`` in bits for a balanced binary Y guessed with error rate ``eps``."""
    eps = np.asarray(eps, dtype=float)
    if np.any((eps < 0) | (eps > 1)):
        raise ValueError("error rate must lie in [0, 1]")
    out = 1.0 - info.binary_entropy(eps)
    return float(out) if out.ndim == 0 else out


def info_lower_bound(H_Y, mean_loss):
    """``max(0, H(Y) - <loss>)`` for a mean cross-entropy loss in bits."""
    if mean_loss < 0:
        raise ValueError("mean cross-entropy loss must be non-negative")
    return max(0.0, float(H_Y) - float(mean_loss))


def bloat_and_loss(point, I_XY, tol=1e-9):
    """
    ``(bloat, loss)`` of a frontier point: ``H - I`` and ``I_XY - I``.

    Raises :class:`InconsistentInputsError` when either would be negative
    beyond ``tol``.
    """
    H, I = float(point.H), float(point.I)
    if I_XY < I - tol:
        raise InconsistentInputsError(f"I_XY={I_XY} is below the point's I={I}")
    if H < I - tol:
        raise InconsistentInputsError(f"point has I={I} above H={H}")
    return max(H - I, 0.0), max(I_XY - I, 0.0)


def bits_encode(p):
    """Bernoulli parameters ``q_k = P(Z=k+1) / P(Z<=k+1)``, k = 1..m-1."""
    p = info._as_prob(p, 1)
    cum = np.cumsum(p)[1:]
    num = p[1:]
    q = np.zeros_like(num)
    ok = cum > 0
    q[ok] = num[ok] / cum[ok]
    return np.clip(q, 0.0, 1.0)


def bits_decode(bits):
    """Position (1..m) of the last 1 in ``(1, *bits)``."""
    bits = np.asarray(bits, dtype=np.int64)
    if bits.ndim != 1 or np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be a vector of zeros and ones")
    ones = np.flatnonzero(bits)
    return 1 if ones.size == 0 else int(ones[-1]) + 2


def bits_distribution(q):
    """Distribution of the decoded Z under independent bits with parameters ``q``."""
    q = np.asarray(q, dtype=float)
    m = q.size + 1
    # Z = k+1 iff bit k is 1 and every later bit is 0
    p = np.empty(m)
    tail = 1.0
    for k in range(m - 1, 0, -1):
        p[k] = q[k - 1] * tail
        tail *= 1.0 - q[k - 1]
    p[0] = tail
    return p


def encoding_bloat(p):
    """``sum_k h(q_k) - H(p)``: extra entropy paid for storing Z as independent bits."""
    q = bits_encode(p)
    return float(np.sum(info.binary_entropy(q))) - info.entropy(p)
