"""
Joint models of a likelihood variable W in [0, 1] and a binary class Y.

Three families of class-conditional densities are supported:

* the analytic toy model, where ``W = x1 x2 / (x1 x2 + (1-x1)(1-x2))`` for two
  triangle-distributed coordinates;
* ``ExpBetaDensity``: ``exp(sum_k a_k w^k) * w^a_{d+1} * (1-w)^a_{d+2}``;
* ``CifarCdfDensity``: a two-branch closed-form CDF for densities that pile up
  at the endpoints.

A :class:`ClassConditionalModel` combines two of them with a class prior and
exposes joint CDFs ``P(W < w, Y = y)``, which is all the binning code needs.
"""
import logging
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
import yaml
from scipy import integrate
from scipy.special import roots_jacobi

from .info import InvalidDistributionError, binary_entropy, mutual_info

log = logging.getLogger(__name__)

LN2 = math.log(2.0)


class InvalidBinningError(ValueError):
    pass


class NonNormalizableError(ValueError):
    pass


class InvalidParameterError(ValueError):
    pass


class UndefinedConditionalError(ValueError):
    pass


# ---------------------------------------------------------------------------
# analytic toy model

# Taylor coefficients of F1 and of the marginal density about w = 1/2, in
# powers of t = w - 1/2. The closed forms cancel catastrophically there.
_F1_SERIES = np.array([
    1 / 12, 4 / 15, 4 / 15, 32 / 105, 16 / 35, 64 / 105, 64 / 63, 1024 / 693,
    256 / 99, 5120 / 1287, 1024 / 143, 8192 / 715, 4096 / 195, 114688 / 3315,
    16384 / 255, 524288 / 4845, 65536 / 323, 786432 / 2261, 262144 / 399,
    10485760 / 9177, 1048576 / 483, 46137344 / 12075, 4194304 / 575,
    67108864 / 5175, 16777216 / 675,
])
_FW_SERIES = np.array([
    8 / 15, 0, 64 / 35, 0, 128 / 21, 0, 2048 / 99, 0, 10240 / 143, 0,
    16384 / 65, 0, 229376 / 255, 0, 1048576 / 323, 0, 1572864 / 133, 0,
    20971520 / 483, 0, 92274688 / 575, 0, 134217728 / 225, 0,
    1744830464 / 783,
])
# |t| below which the series is used; truncation error there is ~(2t)^25
_SERIES_RADIUS = 0.05


def toy_w(x1, x2):
    """Conditional class-1 probability of the toy model at ``(x1, x2)``."""
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    num = x1 * x2
    den = num + (1 - x1) * (1 - x2)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.5)
    return out if out.ndim else float(out)


def _toy_f1(w):
    w = np.asarray(w, dtype=float)
    t = w - 0.5
    out = np.empty_like(w)
    near = np.abs(t) < _SERIES_RADIUS
    out[near] = np.polynomial.polynomial.polyval(t[near], _F1_SERIES)
    far = ~near
    wf = w[far]
    inner = np.zeros_like(wf)
    mid = (wf > 0) & (wf < 1)
    wm = wf[mid]
    inner[mid] = (2 * wm - 1) * (5 - 4 * wm) + 2 * (1 - wm ** 2) * np.log(1 / wm - 1)
    # w = 1: the log term vanishes against (1 - w^2)
    one = wf >= 1
    inner[one] = 1.0
    out[far] = wf ** 2 * inner / (2 * (2 * wf - 1) ** 4)
    return out


def toy_cdf(w, y):
    """
    Joint CDF ``P(W < w, Y = y)`` of the toy model.

    ``F2(w) = 1/2 - F1(1 - w)``; both reach ``P(Y = y) = 1/2`` at ``w = 1``.
    """
    if y not in (1, 2):
        raise ValueError(f"class must be 1 or 2, got {y!r}")
    arr = np.asarray(w, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("w must lie in [0, 1]")
    flat = np.atleast_1d(arr)
    out = _toy_f1(flat) if y == 1 else 0.5 - _toy_f1(1.0 - flat)
    out = np.clip(out, 0.0, 0.5)
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def toy_marginal_pdf(w):
    """Density of W under the toy model; symmetric about 1/2."""
    arr = np.asarray(w, dtype=float)
    flat = np.atleast_1d(arr)
    out = np.empty_like(flat)
    t = flat - 0.5
    near = np.abs(t) < _SERIES_RADIUS
    out[near] = np.polynomial.polynomial.polyval(t[near], _FW_SERIES)
    far = ~near
    wf = flat[far]
    with np.errstate(divide="ignore", invalid="ignore"):
        num = (1 + 2 * wf - 2 * wf ** 2) * np.log(wf / (1 - wf)) - 3 * (2 * wf - 1)
        out[far] = 2 * num / (2 * wf - 1) ** 5
    return out.reshape(arr.shape) if arr.ndim else float(out[0])


def toy_mutual_info():
    """``I(X, Y) = 1 - (pi^2 - 4) / (16 ln 2)`` bits."""
    return 1.0 - (math.pi ** 2 - 4.0) / (16.0 * LN2)


def _check_boundaries(b, lo=0.0, hi=1.0):
    b = np.asarray(b, dtype=float).ravel()
    if b.size and (np.any(np.diff(b) <= 0) or b[0] <= lo or b[-1] >= hi):
        raise InvalidBinningError(
            f"boundaries must be strictly increasing inside ({lo}, {hi})")
    return b


def binned_joint(model, b):
    """M x 2 joint of (Z, Y) for the contiguous binning of W at boundaries b."""
    b = _check_boundaries(b)
    edges = np.concatenate([[0.0], b, [1.0]])
    cols = [np.diff(model.joint_cdf(edges, y)) for y in (1, 2)]
    P = np.clip(np.column_stack(cols), 0.0, None)
    return P


def toy_binned_joint(b):
    """Joint of Y and the toy likelihood binned at boundaries ``b``."""
    return binned_joint(AnalyticToy(), b)


# ---------------------------------------------------------------------------
# exp-polynomial times beta family

def fit_density_eval(a, w):
    """
    Unnormalized ``exp(sum_{k<=d} a_k w^k) w^{a_{d+1}} (1-w)^{a_{d+2}}``.

    ``w`` must lie strictly inside (0, 1) when an exponent is negative.
    """
    a = np.asarray(a, dtype=float)
    w = np.asarray(w, dtype=float)
    d = a.size - 3
    if d < 0:
        raise InvalidParameterError("need at least three coefficients")
    alpha, beta = a[d + 1], a[d + 2]
    if (alpha < 0 and np.any(w <= 0)) or (beta < 0 and np.any(w >= 1)):
        raise ValueError("density diverges at an endpoint; evaluate inside (0, 1)")
    poly = np.polynomial.polynomial.polyval(w, a[:d + 1])
    with np.errstate(divide="ignore"):
        return np.exp(poly) * w ** alpha * (1 - w) ** beta


def _check_exponents(a):
    d = len(a) - 3
    alpha, beta = a[d + 1], a[d + 2]
    if alpha <= -1 or beta <= -1:
        raise NonNormalizableError(
            f"endpoint exponents ({alpha}, {beta}) must both exceed -1")
    return d, alpha, beta


def normalize_fit(a):
    """
    Shift ``a_0`` so the density integrates to one.

    The integral uses QUADPACK's algebraic-weight rule, which absorbs the
    endpoint powers exactly.
    """
    a = np.array(a, dtype=float)
    d, alpha, beta = _check_exponents(a)
    smooth = lambda x: math.exp(np.polynomial.polynomial.polyval(x, a[:d + 1]))
    total, _ = integrate.quad(smooth, 0.0, 1.0, weight="alg", wvar=(alpha, beta),
                              epsabs=0.0, epsrel=1e-13, limit=200)
    if not np.isfinite(total) or total <= 0:
        raise NonNormalizableError(f"integral is {total!r}")
    a[0] -= math.log(total)
    return a


_JACOBI_ORDER = 96


def _jacobi_rule(expo, n=_JACOBI_ORDER):
    """Nodes and weights for integrals of ``s**expo * g(s)`` over [0, 1]."""
    t, wt = roots_jacobi(n, 0.0, expo)
    return (1 + t) / 2, wt * 2.0 ** (-expo - 1)


@dataclass(frozen=True, eq=False)
class ExpBetaDensity:
    """
    Normalized member of the exp-polynomial times beta family.

    ``coeffs`` as given are renormalized on construction; ``a0_shift`` records
    the correction applied to ``a_0`` (zero for exact coefficients, small for
    rounded published ones).
    """
    coeffs: np.ndarray
    a0_shift: float = field(init=False)

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=float)
        d, alpha, beta = _check_exponents(a)
        object.__setattr__(self, "_d", d)
        object.__setattr__(self, "_alpha", alpha)
        object.__setattr__(self, "_beta", beta)
        object.__setattr__(self, "_left", _jacobi_rule(alpha))
        object.__setattr__(self, "_right", _jacobi_rule(beta))
        object.__setattr__(self, "coeffs", a)
        total = self._tail_left(np.array([0.5]))[0] + self._tail_right(np.array([0.5]))[0]
        shift = -math.log(total)
        a = a.copy()
        a[0] += shift
        object.__setattr__(self, "coeffs", a)
        object.__setattr__(self, "a0_shift", shift)
        if abs(shift) > 1e-6:
            log.debug("renormalized a0 by %+.6g", shift)

    @property
    def degree(self):
        return self._d

    def _log_smooth(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs[:self._d + 1])

    def _tail_left(self, w):
        # int_0^w x^alpha (1-x)^beta e^poly dx with x = w s
        s, wt = self._left
        x = w[:, None] * s[None, :]
        g = np.exp(self._log_smooth(x)) * (1 - x) ** self._beta
        return w ** (self._alpha + 1) * (g @ wt)

    def _tail_right(self, w):
        # int_w^1 with x = 1 - (1-w) s
        s, wt = self._right
        v = 1 - w
        x = 1 - v[:, None] * s[None, :]
        g = np.exp(self._log_smooth(x)) * x ** self._alpha
        return v ** (self._beta + 1) * (g @ wt)

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.exp(self._log_smooth(w)) * w ** self._alpha * (1 - w) ** self._beta

    def cdf(self, w):
        arr = np.asarray(w, dtype=float)
        flat = np.clip(np.atleast_1d(arr), 0.0, 1.0).ravel()
        out = np.empty_like(flat)
        lo = flat <= 0.5
        out[lo] = self._tail_left(flat[lo])
        out[~lo] = 1.0 - self._tail_right(flat[~lo])
        out = np.clip(out, 0.0, 1.0)
        return out.reshape(arr.shape) if arr.ndim else float(out[0])


# ---------------------------------------------------------------------------
# two-branch CDF family

def _branch_params(a):
    a1, a2, a3, a4, a5 = (float(v) for v in a)
    c = a3 * a4
    if a2 <= 0 or a4 == 0 or a1 <= 0:
        raise InvalidParameterError(f"need a1 > 0, a2 > 0, a4 != 0; got {a}")
    base = 1.0 - (2 * a2) ** (-c)
    if base <= 0:
        raise InvalidParameterError(f"1 - (2 a2)^(-a3 a4) = {base} is not positive")
    a6 = 2 * (base ** (1 / a4) - a5)
    if a5 <= 0 or a5 + a6 / 2 <= 0:
        raise InvalidParameterError("a5 + a6 x must stay positive on [0, 1/2]")
    return a1, a2, a3, a4, a5, a6


def _fstar(x, p):
    """Branch CDF on [0, 1/2] and its derivative."""
    a1, a2, a3, a4, a5, a6 = p
    c = a3 * a4
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        y = (2 * x) ** a1 / 2
        l1 = c * np.log(y / a2)
        l2 = a4 * np.log(a5 + a6 * y)
        log_s = np.logaddexp(l1, l2)
        G = np.exp(log_s / a4)
        sigma = np.exp(l1 - log_s)
        dG = G * a1 / (a4 * x) * (c * sigma + a4 * a6 * y * (1 - sigma) / (a5 + a6 * y))
    G = np.where(x <= 0, 0.0, G)
    dG = np.where(np.isfinite(dG), dG, 0.0)
    return G, dG


@dataclass(frozen=True, eq=False)
class CifarCdfDensity:
    """
    Two-branch closed-form CDF.

    ``params_a`` holds ``(a0, a1, ..., a5)`` for ``w < 1/2`` and
    ``params_b`` holds ``(a1, ..., a5)`` for the upper branch; ``a0`` is the
    mass below 1/2. With ``flip`` the fitted curve describes ``1 - W``.
    """
    params_a: tuple
    params_b: tuple
    flip: bool = False

    def __post_init__(self):
        if len(self.params_a) != 6 or len(self.params_b) != 5:
            raise InvalidParameterError("expected 6 branch-A and 5 branch-B parameters")
        a0 = float(self.params_a[0])
        if not 0 < a0 < 1:
            raise InvalidParameterError(f"a0 = {a0} must lie in (0, 1)")
        object.__setattr__(self, "_a0", a0)
        object.__setattr__(self, "_pa", _branch_params(self.params_a[1:]))
        object.__setattr__(self, "_pb", _branch_params(self.params_b))

    def _raw(self, w):
        w = np.asarray(w, dtype=float)
        lo = w < 0.5
        Ga, dGa = _fstar(np.where(lo, w, 0.25), self._pa)
        Gb, dGb = _fstar(np.where(lo, 0.25, 1 - w), self._pb)
        F = np.where(lo, self._a0 * Ga, 1 - (1 - self._a0) * Gb)
        f = np.where(lo, self._a0 * dGa, (1 - self._a0) * dGb)
        return F, f

    def cdf(self, w):
        w = np.clip(np.asarray(w, dtype=float), 0.0, 1.0)
        if self.flip:
            return 1.0 - self._raw(1.0 - w)[0]
        return self._raw(w)[0]

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        return self._raw(1.0 - w if self.flip else w)[1]


def cifar_cdf_eval(params, w):
    return params.cdf(w)


# ---------------------------------------------------------------------------
# class-conditional models

class _ToyConditional:
    def __init__(self, y):
        self.y = y

    def cdf(self, w):
        return 2.0 * toy_cdf(np.clip(w, 0.0, 1.0), self.y)

    def pdf(self, w):
        w = np.asarray(w, dtype=float)
        side = w if self.y == 1 else 1.0 - w
        return 2.0 * side * toy_marginal_pdf(w)


def _bisect_inverse(cdf, targets, iters=64):
    """Smallest w in [0, 1] with cdf(w) >= target, vectorized."""
    targets = np.asarray(targets, dtype=float)
    lo = np.zeros_like(targets)
    hi = np.ones_like(targets)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        above = cdf(mid) >= targets
        hi = np.where(above, mid, hi)
        lo = np.where(above, lo, mid)
    return hi


class ClassConditionalModel:
    """
    Binary-class model built from the densities of W given each class.

    Parameters
    ----------
    f1, f2 : density objects with vectorized ``pdf`` and ``cdf``
    prior : float
        ``P(Y = 1)``.
    """

    def __init__(self, f1, f2, prior=0.5, name=None):
        if not 0.0 <= prior <= 1.0:
            raise ValueError(f"prior {prior} outside [0, 1]")
        self.f1, self.f2, self.prior = f1, f2, float(prior)
        self.name = name

    def __repr__(self):
        return f"{type(self).__name__}(name={self.name!r}, prior={self.prior})"

    def joint_cdf(self, w, y):
        if y == 1:
            return self.prior * self.f1.cdf(w)
        if y == 2:
            return (1.0 - self.prior) * self.f2.cdf(w)
        raise ValueError(f"class must be 1 or 2, got {y!r}")

    def joint_pdf(self, w, y):
        if y == 1:
            return self.prior * self.f1.pdf(w)
        return (1.0 - self.prior) * self.f2.pdf(w)

    def marginal_cdf(self, w):
        return self.joint_cdf(w, 1) + self.joint_cdf(w, 2)

    def marginal_pdf(self, w):
        return self.joint_pdf(w, 1) + self.joint_pdf(w, 2)

    def ppf(self, u):
        """Monotone pseudo-inverse of the marginal CDF."""
        return _bisect_inverse(self.marginal_cdf, u)

    def p1(self, w):
        return conditional_prob(self, w)

    def class_entropy(self):
        return float(binary_entropy(self.prior))

    def mutual_info(self):
        """``I(W, Y) = H(Y) - E_W[h(p1(W))]`` by adaptive quadrature."""
        def integrand(w):
            f1 = self.joint_pdf(w, 1)
            f = f1 + self.joint_pdf(w, 2)
            if not f > 0 or not np.isfinite(f):
                return 0.0
            return f * float(binary_entropy(min(max(f1 / f, 0.0), 1.0)))
        loss, _ = integrate.quad(integrand, 0.0, 1.0, points=[0.5], limit=400,
                                 epsabs=1e-12, epsrel=1e-12)
        return self.class_entropy() - loss


class AnalyticToy(ClassConditionalModel):
    """The toy model: ``f(X, Y=1) = 2 x1 x2``, ``f(X, Y=2) = 2 (1-x1)(1-x2)``."""

    def __init__(self):
        super().__init__(_ToyConditional(1), _ToyConditional(2), 0.5, name="analytic")

    def joint_cdf(self, w, y):
        return toy_cdf(np.clip(w, 0.0, 1.0), y)

    def exact_mutual_info(self):
        return toy_mutual_info()


def conditional_prob(model, w):
    """``P(Y = 1 | W = w)``; raises where the marginal density vanishes."""
    f1 = np.asarray(model.joint_pdf(w, 1), dtype=float)
    f = f1 + np.asarray(model.joint_pdf(w, 2), dtype=float)
    if np.any(~(f > 0)):
        raise UndefinedConditionalError("marginal density is zero or undefined")
    out = np.clip(f1 / f, 0.0, 1.0)
    return out if out.ndim else float(out)


class UniformizedModel(ClassConditionalModel):
    """
    The model of ``W' = F(W)``, whose marginal is uniform on [0, 1].

    Joint CDFs are pulled back through the monotone pseudo-inverse of ``F``.
    """

    def __init__(self, base):
        self.base = base
        super().__init__(base.f1, base.f2, base.prior, name=base.name)

    def to_original(self, u):
        return self.base.ppf(u)

    def joint_cdf(self, u, y):
        u = np.asarray(u, dtype=float)
        return self.base.joint_cdf(self.base.ppf(u), y)

    def marginal_cdf(self, u):
        return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)

    def ppf(self, u):
        return np.clip(np.asarray(u, dtype=float), 0.0, 1.0)

    def joint_pdf(self, u, y):
        w = self.base.ppf(u)
        return self.base.joint_pdf(w, y) / self.base.marginal_pdf(w)

    def mutual_info(self):
        return self.base.mutual_info()


def uniformize(model):
    """Reparametrize ``model`` so that W is uniform on [0, 1]."""
    if isinstance(model, UniformizedModel):
        return model
    return UniformizedModel(model)


# ---------------------------------------------------------------------------
# model specs

def density_from_spec(family, spec):
    if family == "expbeta":
        return ExpBetaDensity(np.asarray(spec, dtype=float))
    if family == "cifarcdf":
        return CifarCdfDensity(tuple(spec["A"]), tuple(spec["B"]), bool(spec.get("flip", False)))
    raise InvalidParameterError(f"unknown family {family!r}")


def model_from_spec(spec):
    """
    Build a model from a parsed spec mapping.

    Keys: ``family`` (analytic | expbeta | cifarcdf), ``prior`` (default 1/2),
    ``degree`` (expbeta only, checked against the coefficient count) and
    ``classes`` mapping 1 and 2 to per-class parameters.
    """
    family = spec.get("family")
    name = spec.get("name", family)
    if family == "analytic":
        return AnalyticToy()
    classes = spec.get("classes") or {}
    try:
        c1, c2 = classes[1], classes[2]
    except KeyError:
        c1, c2 = classes.get("1"), classes.get("2")
    if c1 is None or c2 is None:
        raise InvalidParameterError("spec needs parameters for classes 1 and 2")
    if family == "expbeta" and "degree" in spec:
        for c in (c1, c2):
            if len(c) != int(spec["degree"]) + 3:
                raise InvalidParameterError(
                    f"degree {spec['degree']} needs {int(spec['degree']) + 3} coefficients, got {len(c)}")
    return ClassConditionalModel(density_from_spec(family, c1), density_from_spec(family, c2),
                                 float(spec.get("prior", 0.5)), name=name)


BUILTIN_SPECS = ("analytic", "fashion", "cifar", "mnist")


def builtin_specs():
    """Published fit specs keyed by name, from the packaged fixture."""
    text = resources.files(__package__).joinpath("data/table2.yaml").read_text()
    return yaml.safe_load(text)


def load_model(ref):
    """
    Model from ``"toy"`` (exact closed forms), a packaged spec name, or a
    YAML spec file path.
    """
    if ref == "toy":
        return AnalyticToy()
    if ref in BUILTIN_SPECS:
        return model_from_spec({"name": ref, **builtin_specs()[ref]})
    with open(ref) as fh:
        spec = yaml.safe_load(fh)
    if not isinstance(spec, dict):
        raise InvalidParameterError(f"{ref}: model spec must be a mapping")
    return model_from_spec(spec)


__all__ = [
    "AnalyticToy", "BUILTIN_SPECS", "ClassConditionalModel", "CifarCdfDensity", "ExpBetaDensity",
    "InvalidBinningError", "InvalidDistributionError", "InvalidParameterError",
    "NonNormalizableError", "UndefinedConditionalError", "UniformizedModel",
    "binned_joint", "cifar_cdf_eval", "conditional_prob", "builtin_specs", "fit_density_eval",
    "load_model", "model_from_spec", "mutual_info", "normalize_fit", "toy_binned_joint", "toy_cdf",
    "toy_marginal_pdf", "toy_mutual_info", "toy_w", "uniformize",
]
