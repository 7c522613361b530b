"""Command-line interface: ``ddprior <command> ...``.

Exit codes: 0 success, 2 unreadable input, 3 invalid input, 4 numerical
failure, 5 reproduction outside tolerance.  Errors are reported on stderr as
one JSON object per line; payloads go to ``-o`` (``-`` for stdout).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from importlib import metadata

import numpy as np

from . import reproduce as repro
from .correlation import DEFAULT_ANCHOR, CorrelationMode, rho
from .estimator import (PSEUDO_ROW, build_b_general, build_b_mdd, build_context,
                        covariance_for, estimate_node)
from .exceptions import (DataError, NetworkError, PreconditionError, PriorSpecError,
                         QuadratureError, SolverError)
from .fileio import (NodePriorConfig, ParseError, PriorConfig, build_prior, digest, fmt,
                     load_data, load_network, load_prior_config)
from .network import count_tuples, proportions
from .prior import DdPrior, sample_prior
from .selection import (FIGURE1_SELECTIONS, PiVector, Scenario, figure1_scenario, fit_pi,
                        mse_ratio_grid, pool_across_tables)

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 2, 3, 4, 5


class CliError(Exception):
    def __init__(self, code, kind, message, **details):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.details = details


def _version():
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unknown"


def _warn(message, **details):
    print(json.dumps({"warning": message, **details}), file=sys.stderr)


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _row_label(net, name, assignment):
    """``A=0;B=1`` style label; a root node's single row is ``-``."""
    return ";".join(f"{p}={v}" for p, v in zip(net.node(name).parents, assignment)) or "-"


def _parse_pi(text):
    try:
        return PiVector.of([float(v) for v in text.split(",")])
    except (ValueError, TypeError) as exc:
        raise CliError(EXIT_INVALID, "validation", f"bad pi vector {text!r}: {exc}") from exc


# -- estimate ---------------------------------------------------------------

def _estimate_tables(net, counts, config: PriorConfig, args):
    """Per node: (prior, covariance model, estimates)."""
    tables = {}
    for name in net.order:
        cfg = config.for_node(name)
        prior = build_prior(net, name, cfg)
        mode = CorrelationMode.parse(args.mode) if args.mode else cfg.mode
        anchor = CorrelationMode.parse(args.anchor) if args.anchor else cfg.anchor_mode
        adjust = args.adjust if args.adjust is not None else bool(cfg.adjust)
        seed = args.seed if args.seed is not None else cfg.seed
        if isinstance(prior, DdPrior) and seed is None:
            raise CliError(EXIT_INVALID, "validation",
                           f"node {name!r} has a general DD prior; a seed is required")
        cov = covariance_for(prior, mode, anchor, seed, cfg.mc_samples or 200_000)
        est = estimate_node(counts[name], cov, adjust=adjust, renormalize=args.renormalize)
        est.info.update(mode=mode.value, anchor=anchor.value)
        tables[name] = (prior, cov, est)
    return tables


def _estimates_csv(net, counts, tables):
    rows = []
    for name in net.order:
        node = net.node(name)
        est = tables[name][2]
        ct = counts[name]
        props = proportions(ct)
        for f, assignment in enumerate(net.row_assignments(name)):
            for x, label in enumerate(node.domain):
                rows.append([name, _row_label(net, name, assignment), label,
                             fmt(ct.n[f]), fmt(ct.counts[f, x]), fmt(props.p[f, x]),
                             fmt(est.theta[f, x]), fmt(bool(est.clamped[f, x]))])
    return _csv_text(["node", "row", "x", "n_f", "m_xf", "p", "theta_hat", "clamped"], rows)


def _weights_doc(net, counts, tables, with_b):
    doc = {}
    for name in net.order:
        _, cov, est = tables[name]
        labels = [_row_label(net, name, a) for a in net.row_assignments(name)]
        props = proportions(counts[name])
        entries = []
        for f, sol in enumerate(est.solutions):
            named = [labels[g] if g != PSEUDO_ROW else PSEUDO_ROW for g in sol.labels]
            entry = {"target": labels[f],
                     "weights": dict(zip(named, (float(w) for w in sol.weights))),
                     "mse": sol.mse, "condition": sol.condition, "unique": sol.unique}
            if with_b:
                ctx = build_context(f, props, None if cov.is_mdd else cov.means)
                b = build_b_mdd(ctx, cov) if cov.is_mdd else build_b_general(ctx, cov)
                entry["B"] = b.matrix.tolist()
                entry["B_scaled"] = b.scaled
            entries.append(entry)
        doc[name] = entries
    return doc


def cmd_estimate(args):
    net = load_network(args.network)
    data = load_data(args.data)
    config = load_prior_config(args.prior) if args.prior else PriorConfig()
    counts = count_tuples(net, data)
    if len(data) == 0:
        _warn("data file has no records; every estimate equals its prior mean")
    tables = _estimate_tables(net, counts, config, args)
    for name, (_, _, est) in tables.items():
        for f, x in zip(*np.nonzero(est.clamped)):
            _warn("estimate clamped into [0, 1]", node=name, row=int(f), x=int(x),
                  raw=float(est.raw[f, x]))
        for f in est.info["nonunique_rows"]:
            _warn("optimal weights are not unique; minimum-norm solution used",
                  node=name, row=int(f))
    _write(args.output, _estimates_csv(net, counts, tables))
    if args.weights:
        doc = _weights_doc(net, counts, tables, args.dump_b)
        with open(args.weights, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2)
            fh.write("\n")
    if args.report:
        report = {
            "version": _version(),
            "inputs": {"network": digest(args.network), "data": digest(args.data),
                       **({"prior": digest(args.prior)} if args.prior else {})},
            "seed": args.seed,
            "nodes": {name: {"prior": type(prior).__name__, **est.info,
                             "clamped_cells": int(est.clamped.sum())}
                      for name, (prior, _, est) in tables.items()},
        }
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return EXIT_OK


# -- fit-pi -----------------------------------------------------------------

def fit_pi_for(net, data, config: PriorConfig | None = None):
    """Pooled empirical-Bayes fit of pi over every parented node."""
    config = config or PriorConfig()
    counts = count_tuples(net, data)
    props = {name: proportions(ct) for name, ct in counts.items()}
    hyper = {}
    for node in net.nodes:
        cfg = config.for_node(node.name)
        if cfg.alpha is not None or cfg.mu is not None:
            prior = build_prior(net, node.name, NodePriorConfig(alpha=cfg.alpha, mu=cfg.mu))
            hyper[node.name] = (prior.alpha, prior.mu)
    samples = pool_across_tables(net, props, hyper)
    return fit_pi(samples)


def cmd_fit_pi(args):
    net = load_network(args.network)
    data = load_data(args.data)
    config = load_prior_config(args.prior) if args.prior else PriorConfig()
    fit = fit_pi_for(net, data, config)
    if fit.degenerate:
        _warn("all pairs share one agreement level; pi1 is not identifiable")
    _write(args.output, json.dumps(fit.as_dict(), indent=2) + "\n")
    if args.then_estimate:
        pi = {"pi0": fit.pi.pi0, "pi1": fit.pi.pi1, "pi2": fit.pi.pi2}
        default = config.default
        default = NodePriorConfig(**{**default.to_dict(), "pi": pi, "dd": None})
        fitted = PriorConfig(default, {k: NodePriorConfig(**{**v.to_dict(), "pi": pi, "dd": None})
                                       for k, v in config.nodes.items()})
        counts = count_tuples(net, data)
        tables = _estimate_tables(net, counts, fitted, args)
        _write(args.estimates_output, _estimates_csv(net, counts, tables))
    return EXIT_OK


# -- mse-ratio --------------------------------------------------------------

def _load_scenario(path):
    if path is None:
        return figure1_scenario()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"scenario: {exc}") from exc
    sizes = doc.get("parent_sizes") or [2] * int(doc.get("parents", 4))
    mu = doc.get("mu", [0.5, 0.5])
    return Scenario(tuple(sizes), doc.get("counts", 3), float(doc.get("alpha", 2.0)),
                    mu, int(doc.get("target", 0)))


def cmd_mse_ratio(args):
    scenario = _load_scenario(args.scenario)
    selections = list(FIGURE1_SELECTIONS) if args.figure1 else []
    selections += [_parse_pi(p) for p in args.pi_select or []]
    if not selections:
        raise CliError(EXIT_INVALID, "validation", "give --pi-select or --figure1")
    mode = CorrelationMode.parse(args.mode or CorrelationMode.QUADRATIC_APPROX)
    rows = []
    for sel in selections:
        for p in mse_ratio_grid(sel, scenario, args.step, mode=mode):
            rows.append([fmt(v) for v in (*sel, *p.pi_true, p.ratio)])
    header = ["pi0_select", "pi1_select", "pi2_select", "pi0_true", "pi1_true", "pi2_true",
              "ratio"]
    _write(args.output, _csv_text(header, rows))
    return EXIT_OK


# -- sample-prior -----------------------------------------------------------

def cmd_sample_prior(args):
    if args.seed is None:
        raise CliError(EXIT_INVALID, "validation", "--seed is required for sampling")
    net = load_network(args.network)
    config = load_prior_config(args.prior) if args.prior else PriorConfig()
    try:
        node = net.node(args.node)
    except KeyError:
        raise CliError(EXIT_INVALID, "validation", f"unknown node {args.node!r}") from None
    prior = build_prior(net, node.name, config.for_node(node.name))
    samples = sample_prior(prior, args.seed, args.count)
    labels = [_row_label(net, node.name, a) for a in net.row_assignments(node.name)]
    rows = []
    for s, theta in enumerate(samples):
        for f, lab in enumerate(labels):
            for x, value in enumerate(node.domain):
                rows.append([s, lab, value, fmt(theta[f, x])])
    _write(args.output, _csv_text(["sample", "row", "x", "theta"], rows))
    return EXIT_OK


# -- correlations -----------------------------------------------------------

def cmd_correlations(args):
    mode = CorrelationMode.parse(args.mode or CorrelationMode.QUADRATIC_APPROX)
    anchor = CorrelationMode.parse(args.anchor or DEFAULT_ANCHOR)
    alphas = [float(a) for a in args.alphas.split(",")]
    k = round(1.0 / args.step)
    gammas = [i / k for i in range(k + 1)]
    rows = [[fmt(a), fmt(g), fmt(rho(a, g, mode, anchor))] for a in alphas for g in gammas]
    _write(args.output, _csv_text(["alpha", "gamma", "rho"], rows))
    return EXIT_OK


# -- reproduce --------------------------------------------------------------

def cmd_reproduce(args):
    mode = CorrelationMode.parse(args.mode or CorrelationMode.QUADRATIC_APPROX)
    rows, ok = repro.run(args.target, mode)
    text = repro.format_report(rows, mode)
    if not args.primary_only:
        secondary = (CorrelationMode.EXACT_QUADRATURE
                     if mode is not CorrelationMode.EXACT_QUADRATURE
                     else CorrelationMode.QUADRATIC_APPROX)
        rows2, _ = repro.run(args.target, secondary)
        text += "\n# secondary report (does not affect the exit code)\n"
        text += repro.format_report(rows2, secondary)
    _write(args.output, text)
    if not ok:
        bad = [r.label for r in rows if not r.ok]
        print(json.dumps({"error": "tolerance", "failed": bad}), file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _common(p, *, network=True, data=False, prior=False):
    if network:
        p.add_argument("--network", required=True, help="network JSON file")
    if data:
        p.add_argument("--data", required=True, help="CSV of complete tuples")
    if prior:
        p.add_argument("--prior", help="prior configuration JSON file")
    p.add_argument("-o", "--output", default="-", help="output path ('-' for stdout)")


def _estimate_flags(p):
    p.add_argument("--mode", choices=["exact", "zeta-approx", "quadratic"])
    p.add_argument("--anchor", choices=["exact", "zeta-approx"],
                   help="source of rho(alpha, 0.5) for the quadratic mode")
    p.add_argument("--adjust", dest="adjust", action="store_true", default=None)
    p.add_argument("--no-adjust", dest="adjust", action="store_false")
    p.add_argument("--renormalize", action="store_true",
                   help="rescale clamped rows to sum to one")
    p.add_argument("--seed", type=int, help="seed for simulated covariances")


def build_parser():
    parser = argparse.ArgumentParser(prog="ddprior", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="optimal linear CP-table estimates")
    _common(p, data=True, prior=True)
    _estimate_flags(p)
    p.add_argument("--weights", help="write per-row weights as JSON to this path")
    p.add_argument("--dump-b", action="store_true", help="include B matrices in --weights")
    p.add_argument("--report", help="write a JSON run report to this path")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("fit-pi", help="empirical-Bayes fit of pi pooled over CP-tables")
    _common(p, data=True, prior=True)
    _estimate_flags(p)
    p.add_argument("--then-estimate", action="store_true")
    p.add_argument("--estimates-output", default="-")
    p.set_defaults(func=cmd_fit_pi)

    p = sub.add_parser("mse-ratio", help="MSE-ratio over the pi simplex")
    p.add_argument("--scenario", help="scenario JSON (defaults to 4 binary parents, n=3)")
    p.add_argument("--pi-select", action="append", help="pi0,pi1,pi2 (repeatable)")
    p.add_argument("--figure1", action="store_true", help="the three standard selections")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--mode", choices=["exact", "zeta-approx", "quadratic"])
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_mse_ratio)

    p = sub.add_parser("sample-prior", help="draw CP-tables from a node's prior")
    _common(p, prior=True)
    p.add_argument("--node", required=True)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_sample_prior)

    p = sub.add_parser("correlations", help="grid of rho(alpha, gamma)")
    p.add_argument("--alphas", default="2,3,4,5,10,20")
    p.add_argument("--step", type=float, default=0.1)
    p.add_argument("--mode", choices=["exact", "zeta-approx", "quadratic"])
    p.add_argument("--anchor", choices=["exact", "zeta-approx"])
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_correlations)

    p = sub.add_parser("reproduce", help="recompute the published reference values")
    p.add_argument("target", choices=[*repro.TARGETS, "all"])
    p.add_argument("--mode", choices=["exact", "zeta-approx", "quadratic"])
    p.add_argument("--primary-only", action="store_true")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_reproduce)
    return parser


def _fail(code, kind, exc, **details):
    record = {"error": kind, "type": type(exc).__name__, "message": str(exc), **details}
    print(json.dumps(record), file=sys.stderr)
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        return _fail(exc.code, exc.kind, exc, **exc.details)
    except ParseError as exc:
        return _fail(EXIT_PARSE, "parse", exc)
    except DataError as exc:
        return _fail(EXIT_INVALID, "validation", exc, row=exc.row, column=exc.column)
    except (NetworkError, PriorSpecError, PreconditionError) as exc:
        return _fail(EXIT_INVALID, "validation", exc)
    except (QuadratureError, SolverError) as exc:
        return _fail(EXIT_NUMERIC, "numeric", exc)


if __name__ == "__main__":
    sys.exit(main())
