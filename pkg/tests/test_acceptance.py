"""
Acceptance criteria 1-11. Each test prints one ``criterion N: PASS|FAIL``
line (shown even without ``-s``) and then asserts.
"""
import itertools
import math
import time
import warnings

import numpy as np
import pytest
from scipy import integrate

from infofrontier import (
    AnalyticToy, DibConfig, binary_entropy, bits_decode, bits_distribution, bits_encode,
    brute_force_frontier, corner, corners, dib_sweep, fano_bound, fit_class_densities,
    load_model, micro_bins, mutual_info, new_bin_slope, sample_model, swap_derivative,
    swap_step, sweep_frontier, toy_binned_joint, toy_marginal_pdf, toy_mutual_info,
    adaptive_bin_placement,
)

TABLE_H = [0.9652, 0.9998, 1.5437, 1.5581, 1.5725]
TABLE_OURS = [0.3421, 0.3622, 0.4276, 0.4298, 0.4314]
TABLE_BA = [(0.0, 0.0), (0.9652, 0.3260), (0.9998, 0.3506), (1.5437, 0.4126),
            (1.5581, 0.4126), (1.5725, 0.4141)]


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, start):
        line = (f"criterion {n}: {'PASS' if ok else 'FAIL'} "
                f"({detail}; {time.perf_counter() - start:.1f}s)")
        with capsys.disabled():
            print("\n" + line)
        assert ok, line
    return emit


def test_criterion_01_analytic_mutual_info(report):
    t0 = time.perf_counter()
    exact = toy_mutual_info()
    loss, _ = integrate.quad(lambda w: toy_marginal_pdf(w) * binary_entropy(w), 0, 1,
                             points=[0.5], epsabs=1e-13, limit=200)
    quad = 1 - loss
    ok = (abs(quad - exact) < 1e-5 and round(exact, 4) == 0.4707
          and time.perf_counter() - t0 < 1)
    report(1, ok, f"closed form {exact:.7f}, quadrature {quad:.7f}", t0)


def test_criterion_02_lossless_distillation(report):
    t0 = time.perf_counter()
    n = 2000
    x = (np.arange(n) + 0.5) / n
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    J = np.column_stack([(2 * x1 * x2).ravel(), (2 * (1 - x1) * (1 - x2)).ravel()])
    grid = mutual_info(J / J.sum())
    closed = AnalyticToy().mutual_info()
    ok = abs(grid - closed) < 1e-4 and time.perf_counter() - t0 < 30
    report(2, ok, f"from F1/F2 {closed:.7f}, 2000^2 grid {grid:.7f}", t0)


def test_criterion_03_table_reproduction(report):
    t0 = time.perf_counter()
    m = micro_bins(AnalyticToy(), 2000)
    curve = sweep_frontier(m, 8, H_grid=TABLE_H)
    ours = np.array([curve.value_at(h) for h in TABLE_H])
    ours_err = np.abs(ours - TABLE_OURS)

    pts = dib_sweep(m, DibConfig(steps=2000, restarts=10))
    H = np.array([p.H for p in pts])
    I = np.maximum.accumulate(np.array([p.I for p in pts]))
    ba_err = np.array([abs(np.interp(h, H, I) - i) for h, i in TABLE_BA])
    strict = max(min(max(abs(p.H - h), abs(p.I - i)) for p in pts) for h, i in TABLE_BA)

    frontier_ok = bool(np.all(ours_err <= 5e-3))
    ba_ok = bool(np.all(ba_err <= 2e-2))
    ok = frontier_ok and ba_ok and time.perf_counter() - t0 < 300
    detail = (f"frontier {np.round(ours, 4).tolist()} vs printed, max err "
              f"{ours_err.max():.4f} [{'ok' if frontier_ok else 'over 5e-3'}]; "
              f"sweep {len(pts)} points, interpolated BA max err {ba_err.max():.4f} "
              f"[{'ok' if ba_ok else 'over 2e-2'}], nearest-point err {strict:.4f}")
    report(3, ok, detail, t0)


def test_criterion_04_printed_joints(report):
    t0 = time.perf_counter()
    J2 = np.array([[0.454555, 0.045445], [0.042725, 0.457275]])
    J5 = np.array([[0.350685, 0.053337, 0.054679, 0.034542, 0.006756],
                   [0.007794, 0.006618, 0.032516, 0.069236, 0.383836]]).T
    # the printed five-group entries are rounded and sum to 0.999999
    J5 = J5 / J5.sum()
    a, b = mutual_info(J2), mutual_info(J5)
    ok = abs(a - 0.56971) < 1e-4 and abs(b - 0.6882) < 1e-4 and time.perf_counter() - t0 < 1
    report(4, ok, f"{a:.5f} and {b:.5f}", t0)


def test_criterion_05_contiguity_oracle(report):
    t0 = time.perf_counter()
    m = micro_bins(AnalyticToy(), 10)
    rows = brute_force_frontier(m, 3, surjective=False, with_contiguity=True)
    pts = np.array([(h, i) for h, i, _ in rows])
    contig = np.array([(h, i) for h, i, c in rows if c])
    order = np.lexsort((-pts[:, 1], pts[:, 0]))
    srt = pts[order]
    prev = np.concatenate([[-np.inf], np.maximum.accumulate(srt[:, 1])[:-1]])
    pareto = srt[srt[:, 1] > prev]
    gap = max(np.min(np.max(np.abs(contig - p), axis=1)) for p in pareto)
    # max-I contiguous binning by direct scan; first maximum is the smallest cut vector
    best_I, best_cuts = -1.0, None
    for cuts in itertools.combinations(range(1, 10), 2):
        edges = (0, *cuts, 10)
        J = np.array([[m.class1[a:b].sum(), m.class2[a:b].sum()]
                      for a, b in zip(edges[:-1], edges[1:])])
        I = mutual_info(J / J.sum())
        if I > best_I + 1e-15:
            best_I, best_cuts = I, cuts
    c3 = corner(m, 3)
    same = tuple(c3.binning.cuts.tolist()) == best_cuts and abs(c3.I - best_I) <= 1e-15
    ok = len(rows) == 3 ** 10 and gap <= 1e-12 and same and time.perf_counter() - t0 < 60
    report(5, ok, f"{len(pareto)} Pareto points of {len(rows)} assignments, worst contiguous "
                  f"gap {gap:.1e}, corner cuts {c3.binning.cuts.tolist()} vs scan "
                  f"{list(best_cuts)}", t0)


def test_criterion_06_adaptive_bound(report):
    t0 = time.perf_counter()
    toy = AnalyticToy()
    losses = [toy_mutual_info() - mutual_info(toy_binned_joint(adaptive_bin_placement(toy, N)))
              for N in (10, 100, 1000)]
    ok = (all(0 <= d < 6 / N for d, N in zip(losses, (10, 100, 1000)))
          and losses[0] > losses[1] > losses[2] and time.perf_counter() - t0 < 60)
    report(6, ok, "loss " + ", ".join(f"{d:.2e}" for d in losses) + " for N = 10, 100, 1000", t0)


def test_criterion_07_swap_derivative(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst, increases = 0.0, True
    for _ in range(1000):
        J = rng.random((4, 2)) + 0.05
        J /= J.sum()
        k, l = rng.choice(4, 2, replace=False)
        h = 1e-6
        I0 = mutual_info(J)
        I1, I2 = mutual_info(swap_step(J, k, l, h)), mutual_info(swap_step(J, k, l, 2 * h))
        fd = (-3 * I0 + 4 * I1 - I2) / (2 * h)
        exact = swap_derivative(J, k, l)
        worst = max(worst, abs(fd - exact) / exact)
        increases &= I1 > I0
    ok = worst < 1e-4 and increases and time.perf_counter() - t0 < 10
    report(7, ok, f"worst relative error {worst:.1e}, MI always increased: {increases}", t0)


def test_criterion_08_corner_slope(report):
    t0 = time.perf_counter()
    m = micro_bins(AnalyticToy(), 2000)
    cs = corners(m, 3)
    slopes = {M: [new_bin_slope(m, cs[M - 1].binning, e) for e in (1e-2, 1e-3, 1e-4)]
              for M in (2, 3)}
    ok = (all(s[1] < 0.05 and s[0] > s[1] > s[2] for s in slopes.values())
          and time.perf_counter() - t0 < 10)
    detail = "; ".join(f"M={M}: " + ", ".join(f"{v:.4f}" for v in s) for M, s in slopes.items())
    report(8, ok, detail + " for eps = 1e-2, 1e-3, 1e-4", t0)


def test_criterion_09_fano(report):
    t0 = time.perf_counter()

    def oracle(eps, n=20_001):
        a = np.linspace(0, eps, n)
        vals = [mutual_info(np.array([[0.5 - x, eps - x], [x, 0.5 - eps + x]])) for x in a]
        return min(vals)

    errs = [abs(oracle(e) - fano_bound(e)) for e in (0.1, 0.2)]
    v = fano_bound(0.01)
    ok = abs(v - 0.9192) < 5e-5 and round(v, 2) == 0.92 and max(errs) < 1e-6
    report(9, ok, f"fano(0.01) = {v:.5f}, oracle errors {errs[0]:.1e}, {errs[1]:.1e}", t0)


def test_criterion_10_bit_codec(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    worst = 0.0
    for m in range(1, 9):
        strings = list(itertools.product((0, 1), repeat=m - 1))
        z = np.array([bits_decode(np.array(s, dtype=int)) for s in strings])
        S = np.array(strings, dtype=float).reshape(len(strings), m - 1)
        for _ in range(100):
            p = rng.dirichlet(np.ones(m))
            q = bits_encode(p)
            w = np.prod(np.where(S == 1, q, 1 - q), axis=1)
            dec = np.bincount(z - 1, weights=w, minlength=m)
            worst = max(worst, np.max(np.abs(dec - p)), np.max(np.abs(bits_distribution(q) - p)))
    table = {(0, 0, 1): 4, (0, 1, 0): 3, (1, 0, 0): 2, (0, 0, 0): 1}
    mapping_ok = all(bits_decode(np.array(k)) == v for k, v in table.items())
    ok = worst < 1e-12 and mapping_ok
    report(10, ok, f"max deviation {worst:.1e}, footnote mapping ok: {mapping_ok}", t0)


def test_criterion_11_fit_recovery(report):
    t0 = time.perf_counter()
    true = load_model("analytic")
    samples = sample_model(true, 100_000, np.random.default_rng(11))
    fitted = fit_class_densities(samples, 4)
    kls = []
    for f, g in ((true.f1, fitted.f1), (true.f2, fitted.f2)):
        def integrand(w):
            p, q = f.pdf(w), g.pdf(w)
            return p * math.log2(p / q) if p > 0 else 0.0
        with warnings.catch_warnings():
            # integrable endpoint singularities slow quad's error estimate only
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            kls.append(sum(integrate.quad(integrand, lo, hi, limit=400)[0]
                           for lo, hi in ((0, 0.5), (0.5, 1))))
    ok = max(kls) <= 0.01 and time.perf_counter() - t0 < 120
    report(11, ok, f"KL {kls[0]:.2e} and {kls[1]:.2e} bits", t0)
