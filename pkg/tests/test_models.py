import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from infofrontier import (
    AnalyticToy, CifarCdfDensity, InvalidBinningError, InvalidParameterError,
    NonNormalizableError, UndefinedConditionalError, binary_entropy, binned_joint,
    builtin_specs, cifar_cdf_eval, conditional_prob, fit_density_eval, load_model,
    model_from_spec, mutual_info, normalize_fit, toy_binned_joint, toy_cdf, toy_marginal_pdf,
    toy_mutual_info, toy_w, uniformize,
)
from infofrontier.models import ExpBetaDensity


def _x2_threshold(x1, w):
    # x2 below which toy_w(x1, x2) < w
    return w * (1 - x1) / (x1 * (1 - w) + w * (1 - x1))


def f1_oracle(w):
    """P(W < w, Y=1) by integrating 2 x1 x2 over the sublevel set."""
    if w <= 0:
        return 0.0
    if w >= 1:
        return 0.5
    val, _ = integrate.quad(lambda x1: x1 * _x2_threshold(x1, w) ** 2, 0, 1,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def toy_grid_mi(n):
    x = (np.arange(n) + 0.5) / n
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    J = np.column_stack([(2 * x1 * x2).ravel(), (2 * (1 - x1) * (1 - x2)).ravel()])
    return mutual_info(J / J.sum())


@pytest.mark.parametrize("x, expected", [((0.5, 0.5), 0.5), ((1, 1), 1.0), ((0.75, 0.5), 0.75)])
def test_toy_w_examples(x, expected):
    assert toy_w(*x) == pytest.approx(expected)


def test_toy_cdf_endpoints():
    assert toy_cdf(1.0, 1) == pytest.approx(0.5, abs=1e-12)
    assert toy_cdf(0.0, 1) == 0.0
    assert toy_cdf(1.0, 2) == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("w", [0.25, 0.5, 0.75, 0.47, 0.53, 0.01, 0.99])
def test_toy_cdf_matches_quadrature(w):
    assert toy_cdf(w, 1) == pytest.approx(f1_oracle(w), abs=1e-6)


def test_toy_cdf_series_joins_closed_form():
    # both sides of the series radius around 1/2
    for w in (0.45, 0.55):
        lo, hi = toy_cdf(w - 1e-9, 1), toy_cdf(w + 1e-9, 1)
        assert abs(hi - lo) < 1e-8


def test_toy_cdf_rejects_bad_args():
    with pytest.raises(ValueError):
        toy_cdf(1.2, 1)
    with pytest.raises(ValueError):
        toy_cdf(0.5, 3)


def test_toy_class_symmetry():
    w = np.linspace(0, 1, 101)
    assert np.allclose(toy_cdf(w, 2), 0.5 - toy_cdf(1 - w, 1), atol=1e-12)


def test_toy_marginal_pdf_is_derivative_of_cdf():
    w = np.linspace(0.02, 0.98, 49)
    h = 1e-6
    num = (toy_cdf(w + h, 1) + toy_cdf(w + h, 2) - toy_cdf(w - h, 1) - toy_cdf(w - h, 2)) / (2 * h)
    assert np.allclose(num, toy_marginal_pdf(w), rtol=1e-5)


def test_toy_mutual_info_value():
    assert toy_mutual_info() == pytest.approx(0.4707, abs=5e-5)
    assert toy_mutual_info() == pytest.approx(1 - (math.pi ** 2 - 4) / (16 * math.log(2)))


def test_toy_mutual_info_quadrature():
    # p1(w) = w for the toy model
    loss, _ = integrate.quad(lambda w: toy_marginal_pdf(w) * binary_entropy(w), 0, 1,
                             points=[0.5], epsabs=1e-13, limit=200)
    assert 1 - loss == pytest.approx(toy_mutual_info(), abs=1e-5)
    assert AnalyticToy().mutual_info() == pytest.approx(toy_mutual_info(), abs=1e-5)


@pytest.mark.slow
def test_toy_mutual_info_grid():
    assert toy_grid_mi(2000) == pytest.approx(toy_mutual_info(), abs=1e-4)


def test_toy_binned_joint_examples():
    J = toy_binned_joint([0.5])
    assert np.allclose(J.sum(axis=1), [0.5, 0.5], atol=1e-12)
    assert mutual_info(toy_binned_joint([])) == pytest.approx(0.0, abs=1e-12)
    J = toy_binned_joint([0.25, 0.75])
    oracle = np.diff([0, f1_oracle(0.25), f1_oracle(0.75), 0.5])
    assert np.allclose(J[:, 0], oracle, atol=1e-6)


@pytest.mark.parametrize("b", [[0.6, 0.4], [0.0, 0.5], [0.5, 1.0], [0.3, 0.3]])
def test_binned_joint_rejects_bad_boundaries(b):
    with pytest.raises(InvalidBinningError):
        toy_binned_joint(b)


@given(st.lists(st.floats(0.01, 0.99), min_size=1, max_size=6, unique=True))
def test_binned_joint_is_a_distribution_and_loses_information(b):
    b = sorted(b)
    if np.any(np.diff(b) < 1e-6):
        return
    J = toy_binned_joint(b)
    assert J.sum() == pytest.approx(1.0, abs=1e-9)
    assert mutual_info(J) <= toy_mutual_info() + 1e-9


def test_fit_density_eval_uniform():
    assert np.allclose(fit_density_eval(np.zeros(5), np.linspace(0.1, 0.9, 9)), 1.0)


def test_fit_density_eval_rejects_divergent_endpoint():
    with pytest.raises(ValueError):
        fit_density_eval([0, 0, -0.5, 0], 0.0)


def test_normalize_fit_constant_density():
    a = normalize_fit([math.log(3.0), 0.0, 0.0])
    assert a[0] == pytest.approx(0.0, abs=1e-12)


@given(st.lists(st.floats(-2, 2), min_size=2, max_size=5), st.floats(-0.9, 2), st.floats(-0.9, 2))
def test_normalize_fit_integrates_to_one(poly, alpha, beta):
    a = normalize_fit(poly + [alpha, beta])
    total, _ = integrate.quad(lambda x: math.exp(np.polynomial.polynomial.polyval(x, a[:-2])),
                              0, 1, weight="alg", wvar=(alpha, beta), epsabs=0, epsrel=1e-12)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_normalize_fit_rejects_non_integrable():
    with pytest.raises(NonNormalizableError):
        normalize_fit([0.0, -1.0, 0.0])


@pytest.mark.parametrize("name", ["analytic", "fashion", "mnist"])
def test_published_rows_nearly_normalized(name):
    spec = builtin_specs()[name]
    for c in (1, 2):
        d = ExpBetaDensity(spec["classes"][c])
        assert abs(math.exp(-d.a0_shift) - 1) < 1e-3
        assert d.cdf(1.0) == pytest.approx(1.0, abs=1e-4)
        assert 0 < d.pdf(0.5) < np.inf


def test_expbeta_cdf_matches_quadrature():
    d = ExpBetaDensity(builtin_specs()["fashion"]["classes"][1])
    for w in (0.1, 0.5, 0.9):
        val, _ = integrate.quad(d.pdf, 0, w, limit=200)
        assert d.cdf(w) == pytest.approx(val, abs=1e-8)


def test_in_text_fit_kl_to_exact_density():
    g = ExpBetaDensity(builtin_specs()["analytic_d3_class1"])
    f1 = lambda w: 2 * w * toy_marginal_pdf(w)
    kl = sum(integrate.quad(lambda w: f1(w) * math.log2(f1(w) / g.pdf(w)), lo, hi, limit=200)[0]
             for lo, hi in [(1e-12, 0.5), (0.5, 1 - 1e-12)])
    assert kl == pytest.approx(0.002, abs=0.002)


def test_cifar_cdf_monotone_and_normalized():
    m = load_model("cifar")
    w = np.linspace(0, 1, 10001)
    for f in (m.f1, m.f2):
        F = cifar_cdf_eval(f, w)
        assert F[0] == pytest.approx(0.0, abs=1e-12)
        assert F[-1] == pytest.approx(1.0, abs=1e-12)
        assert np.all(np.diff(F) >= -1e-12)
        total, _ = integrate.quad(f.pdf, 0, 1, points=[0.5], limit=200)
        assert total == pytest.approx(1.0, abs=1e-6)


def test_cifar_pdf_is_derivative():
    f = load_model("cifar").f2
    w = np.array([0.1, 0.3, 0.7, 0.9])
    h = 1e-6
    assert np.allclose((f.cdf(w + h) - f.cdf(w - h)) / (2 * h), f.pdf(w), rtol=1e-4)


def test_cifar_rejects_bad_parameters():
    with pytest.raises(InvalidParameterError):
        CifarCdfDensity((1.5, 0.2, 0.1, 6, -1, 0.85), (0.7, 0.05, 0.7, -1, 0.9))
    with pytest.raises(InvalidParameterError):
        CifarCdfDensity((0.9, 0.2), (0.7, 0.05, 0.7, -1, 0.9))


def test_conditional_prob_of_toy_is_identity(toy):
    w = np.linspace(0.01, 0.99, 99)
    assert np.allclose(conditional_prob(toy, w), w, atol=1e-9)


def test_conditional_prob_undefined():
    m = model_from_spec({"family": "expbeta", "classes": {1: [0, 0, 0], 2: [0, 0, 0]}})
    with pytest.raises(UndefinedConditionalError):
        conditional_prob(m, np.array([0.5, np.nan]))


def test_uniformize_is_identity_on_uniform():
    m = model_from_spec({"family": "expbeta", "classes": {1: [0, 0, 0], 2: [0, 0, 0]}})
    u = uniformize(m)
    x = np.linspace(0, 1, 21)
    assert np.allclose(u.ppf(x), x, atol=1e-10)
    assert np.allclose(u.joint_cdf(x, 1), 0.5 * x, atol=1e-10)


def test_uniformized_marginal_is_uniform(toy):
    u = uniformize(toy)
    x = np.linspace(0, 1, 201)
    marg = u.joint_cdf(x, 1) + u.joint_cdf(x, 2)
    assert np.allclose(marg, x, atol=1e-4)


def test_uniformized_toy_keeps_information(toy):
    u = uniformize(toy)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        loss, _ = integrate.quad(lambda x: binary_entropy(conditional_prob(u, x)), 0, 1,
                                 points=[0.5], limit=400, epsabs=1e-12)
    assert 1 - loss == pytest.approx(toy_mutual_info(), abs=1e-5)


def test_cifar_uniformized_curve_monotone_after_sorting():
    u = uniformize(load_model("cifar"))
    p = np.sort(conditional_prob(u, np.linspace(0.005, 0.995, 199)))
    assert np.all(np.diff(p) >= 0)
    assert p[0] < 0.2 and p[-1] > 0.8


def test_model_spec_errors(tmp_path):
    with pytest.raises(InvalidParameterError):
        model_from_spec({"family": "expbeta", "degree": 2, "classes": {1: [0, 0, 0], 2: [0, 0, 0]}})
    with pytest.raises(InvalidParameterError):
        model_from_spec({"family": "nope", "classes": {1: [0], 2: [0]}})
    path = tmp_path / "bad.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(InvalidParameterError):
        load_model(str(path))


def test_load_model_from_file(tmp_path):
    path = tmp_path / "m.yaml"
    path.write_text("family: expbeta\nprior: 0.3\nclasses:\n  1: [0, 0, 1, 0]\n  2: [0, 0, 0, 1]\n")
    m = load_model(str(path))
    assert m.prior == 0.3
    assert 0 < m.mutual_info() < binary_entropy(0.3)


@pytest.mark.parametrize("name, expected", [
    ("analytic", 0.4815), ("fashion", 0.6138), ("cifar", 0.6867), ("mnist", 0.9025),
])
def test_builtin_model_information(name, expected):
    assert load_model(name).mutual_info() == pytest.approx(expected, abs=5e-4)


def test_binned_joint_generic_model():
    m = load_model("fashion")
    J = binned_joint(m, [0.5])
    assert J.sum() == pytest.approx(1.0, abs=1e-9)
    assert J[1, 0] > J[0, 0]
