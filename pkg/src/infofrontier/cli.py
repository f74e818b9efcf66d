"""
Command-line front end.

Subcommands write plain data tables into ``--out`` (a directory), as CSV
(``--format delimited``) or JSON (``--format structured``). Every output is a
deterministic function of the inputs, flags and seed; timings go to the log
only.

Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 numeric
failure.
"""
import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np
import yaml

from . import bounds, dib, frontier, info, models, pipeline

log = logging.getLogger("infofrontier")

EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3
DIGITS = 12

INPUT_ERRORS = (
    OSError, pipeline.SampleParseError, pipeline.EmptyInputError,
    pipeline.InsufficientSamplesError, models.InvalidParameterError,
    info.InvalidDistributionError, yaml.YAMLError, csv.Error, KeyError,
)
NUMERIC_ERRORS = (
    pipeline.FitFailedError, models.NonNormalizableError, frontier.InfeasibleError,
    FloatingPointError, ArithmeticError, np.linalg.LinAlgError,
)
FANO_EPS = (0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# output helpers

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.{DIGITS}g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, (float, np.floating)):
        return float(f"{float(v):.{DIGITS}g}")
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


class Writer:
    def __init__(self, out, fmt):
        self.out = out
        self.fmt = fmt
        os.makedirs(out, exist_ok=True)

    def table(self, name, columns, rows):
        if self.fmt == "structured":
            doc = {"columns": list(columns), "rows": [_jsonable(list(r)) for r in rows]}
            return self.document(name, doc)
        path = os.path.join(self.out, f"{name}.csv")
        with open(path, "w", newline="") as fh:
            fh.write(",".join(columns) + "\n")
            for r in rows:
                fh.write(",".join(_fmt(v) for v in r) + "\n")
        return path

    def document(self, name, doc):
        path = os.path.join(self.out, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _cuts_text(p):
    if p.binning is None:
        return ""
    return ";".join(f"{float(c):.{DIGITS}g}" for c in np.asarray(p.binning.cuts, dtype=float))


FRONTIER_COLUMNS = ("H", "I", "M", "provenance", "cuts")


def _point_rows(points):
    return [(p.H, p.I, p.M, p.provenance, _cuts_text(p)) for p in points]


# ---------------------------------------------------------------------------
# model loading

def _load_micro_bins(args, report):
    """Micro-bins from ``--input`` samples or ``--model``; fills the run report."""
    if args.input and args.model:
        raise UsageError("give either --input or --model, not both")
    if args.input:
        samples = pipeline.ingest_samples(args.input)
        report["input"] = os.path.basename(args.input)
        report["samples"] = samples.count
        if args.fit == "empirical":
            m = pipeline.sort_bins(pipeline.fine_bin_from_samples(samples, args.micro_bins))
            report["fit"] = "empirical"
            return m
        model = pipeline.fit_class_densities(samples, args.degree)
        report["fit"] = {
            f"class{y}": {"coeffs": s.coeffs, "mean_nll_bits": s.mean_nll / np.log(2.0),
                          "kl_bits": _fit_kl(samples.of_class(y), getattr(model, f"f{y}"))}
            for y, s in model.fit_summaries.items()}
        return pipeline.micro_bins(model, args.micro_bins)
    ref = args.model or "toy"
    report["model"] = ref
    return pipeline.micro_bins(models.load_model(ref), args.micro_bins)


def _fit_kl(w, density, bins=50):
    """KL (bits) from the equal-count histogram of ``w`` to the fitted density."""
    q = np.quantile(w, np.linspace(0.0, 1.0, bins + 1))
    q[0], q[-1] = 0.0, 1.0
    q = np.unique(q)
    counts = np.histogram(w, bins=q)[0].astype(float)
    p = counts / counts.sum()
    fit = np.clip(np.diff(density.cdf(q)), 1e-300, None)
    fit = fit / fit.sum()
    keep = p > 0
    return float(np.sum(p[keep] * np.log2(p[keep] / fit[keep])))


def _h_grid(args, M_max):
    return np.linspace(0.0, np.log2(M_max), args.h_grid)


# ---------------------------------------------------------------------------
# commands

def _frontier_outputs(args, m, report, writer, scatter):
    t0 = time.perf_counter()
    M_max = min(args.max_groups, m.N)
    curve = frontier.sweep_frontier(m, M_max, _h_grid(args, M_max), 0, args.seed)
    corners = frontier.corners(m, M_max)
    log.info("frontier sweep: %d points in %.2fs", len(curve), time.perf_counter() - t0)
    writer.table("frontier", FRONTIER_COLUMNS, _point_rows(curve.points))
    writer.table("corners", FRONTIER_COLUMNS, _point_rows(corners))
    if scatter and args.samples_per_group:
        for M in range(2, M_max + 1):
            pts = frontier.sample_binnings(m, M, args.samples_per_group, seed=args.seed + M)
            writer.table(f"scatter_M{M}", ("H", "I"), [(p.H, p.I) for p in pts])
    report.update(N=m.N, M_max=M_max, seed=args.seed, I_fine=m.mutual_info(),
                  frontier_points=len(curve), max_I=float(curve.I.max()),
                  corners=[{"M": p.M, "H": p.H, "I": p.I} for p in corners])
    writer.document("report", report)
    return curve


def cmd_analytic(args):
    """Frontier, corners and random-binning scatter of the toy model."""
    writer = Writer(args.out, args.format)
    m = pipeline.micro_bins(models.AnalyticToy(), args.micro_bins)
    report = {"model": "toy", "I_XY": models.toy_mutual_info()}
    _frontier_outputs(args, m, report, writer, scatter=True)
    return EXIT_OK


def cmd_frontier(args):
    """Frontier of a model spec or of fitted sample data."""
    writer = Writer(args.out, args.format)
    report = {}
    m = _load_micro_bins(args, report)
    _frontier_outputs(args, m, report, writer, scatter=False)
    return EXIT_OK


def cmd_ba(args):
    """Beta-swept bottleneck points beside the frontier at the same H."""
    writer = Writer(args.out, args.format)
    report = {}
    m = _load_micro_bins(args, report)
    cfg = dib.DibConfig(args.beta_min, args.beta_max, args.beta_steps, args.max_groups,
                        args.restarts, args.seed, args.anneal, args.workers, args.dib_method)
    t0 = time.perf_counter()
    pts = dib.dib_sweep(m, cfg)
    log.info("beta sweep: %d distinct points in %.2fs", len(pts), time.perf_counter() - t0)
    Hs = np.array([p.H for p in pts])
    curve = frontier.sweep_frontier(m, min(args.max_groups, m.N), Hs, 0, args.seed)
    rows = [(p.H, p.I, float(curve.value_at(p.H)), p.M) for p in pts]
    writer.table("ba", ("H", "I_ba", "I_frontier", "M"), rows)
    return EXIT_OK


def _read_frontier(path):
    with open(path, newline="") as fh:
        text = fh.read()
    if path.endswith(".json"):
        doc = json.loads(text)
        cols = doc["columns"]
        recs = [dict(zip(cols, r)) for r in doc["rows"]]
    else:
        recs = list(csv.DictReader(text.splitlines()))
    if not recs:
        raise pipeline.EmptyInputError(f"{path}: no frontier rows")
    pts = []
    for line, r in enumerate(recs, start=2):
        try:
            pts.append(frontier.ParetoPoint(float(r["H"]), float(r["I"]), int(r.get("M") or 0),
                                            None, r.get("provenance") or "corner"))
        except (TypeError, ValueError) as exc:
            raise pipeline.SampleParseError(f"{path}: bad frontier row: {exc}", line) from exc
    return pts


def cmd_diagnostics(args):
    """Bloat, loss and Fano table for a frontier file."""
    if not args.input:
        raise UsageError("diagnostics needs --input (a frontier table)")
    if args.i_xy is None and args.model is None:
        raise UsageError("diagnostics needs --i-xy or --model to know I(X,Y)")
    writer = Writer(args.out, args.format)
    pts = _read_frontier(args.input)
    if args.i_xy is not None:
        I_XY = args.i_xy
    else:
        I_XY = models.load_model(args.model).mutual_info()
    rows = []
    for p in pts:
        bloat, loss = bounds.bloat_and_loss(p, I_XY)
        rows.append((p.H, p.I, p.M, p.provenance, bloat, loss))
    writer.table("bloat_loss", ("H", "I", "M", "provenance", "bloat", "loss"), rows)
    writer.table("fano", ("eps", "I_min"), [(e, bounds.fano_bound(e)) for e in FANO_EPS])
    summary = {"I_XY": I_XY, "H_Y": args.h_y}
    if args.mean_loss is not None:
        raw = args.h_y - args.mean_loss
        summary["mean_loss"] = args.mean_loss
        summary["info_lower_bound"] = bounds.info_lower_bound(args.h_y, args.mean_loss)
        summary["miscalibrated_loss"] = bool(raw < 0)
    writer.document("diagnostics", summary)
    return EXIT_OK


COMMANDS = {"analytic": cmd_analytic, "frontier": cmd_frontier, "ba": cmd_ba,
            "diagnostics": cmd_diagnostics}


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--input", help="samples CSV (w,y) or, for diagnostics, a frontier table")
    common.add_argument("--model", help="'toy', a packaged spec name "
                        f"({', '.join(models.BUILTIN_SPECS)}) or a YAML spec path")
    common.add_argument("--micro-bins", type=int, default=pipeline.DEFAULT_MICRO_BINS)
    common.add_argument("--max-groups", type=int, default=8)
    common.add_argument("--samples-per-group", type=int, default=6000)
    common.add_argument("--h-grid", type=int, default=frontier.DEFAULT_H_POINTS)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--beta-min", type=float, default=1e-10)
    common.add_argument("--beta-max", type=float, default=1.0)
    common.add_argument("--beta-steps", type=int, default=20_000)
    common.add_argument("--restarts", type=int, default=10)
    common.add_argument("--anneal", action="store_true",
                        help="start each beta from the previous solution")
    common.add_argument("--dib-method", choices=dib.METHODS, default="greedy",
                        help="local search used by the beta sweep")
    common.add_argument("--degree", type=int, default=4, help="fit degree for sample input")
    common.add_argument("--fit", choices=("expbeta", "empirical"), default="expbeta")
    common.add_argument("--i-xy", type=float, help="I(X,Y) in bits for diagnostics")
    common.add_argument("--h-y", type=float, default=1.0)
    common.add_argument("--mean-loss", type=float, help="mean cross-entropy loss in bits")
    common.add_argument("--out", default=".")
    common.add_argument("--format", choices=("delimited", "structured"), default="delimited")
    common.add_argument("--workers", type=int, default=None,
                        help=f"parallel workers (default ${dib.WORKERS_ENV} or all cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="infofrontier",
                     description="Entropy versus class-information frontiers of binary likelihoods.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__doc__)
    return parser


def _validate(args):
    if args.degree < 0:
        raise UsageError("--degree must be non-negative")
    for flag in ("micro_bins", "max_groups", "h_grid", "beta_steps", "restarts"):
        if getattr(args, flag) < 1:
            raise UsageError(f"--{flag.replace('_', '-')} must be positive")
    if args.samples_per_group < 0:
        raise UsageError("--samples-per-group must be non-negative")
    if args.micro_bins < 2:
        raise UsageError("--micro-bins must be at least 2")
    if not 0 < args.beta_min < args.beta_max:
        raise UsageError("need 0 < --beta-min < --beta-max")
    if args.workers is not None and args.workers < 1:
        raise UsageError("--workers must be positive")


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _validate(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"infofrontier: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except INPUT_ERRORS as exc:
        print(f"infofrontier: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NUMERIC_ERRORS as exc:
        print(f"infofrontier: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"infofrontier: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
