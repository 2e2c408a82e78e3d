"""Command-line front end: run influence analyses, benchmark exact against
approximate detection, and execute the built-in verification checks.

Exit codes: 0 success, 1 runtime error (single-line coded diagnostic on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from typing import Optional

import numpy as np

from . import __version__
from .data import (
    Dataset,
    InfluenceReport,
    SyntheticSpec,
    generate_gaussian,
    load_csv,
    report_csv_rows,
    report_json_doc,
    standardize,
    write_report,
)
from .influence import ESTIMATORS
from .sample import approx_influence, exact_loo, iteration_counts, shortcut_influence, spearman
from .spectral import SubspaceGapError, SubspaceSelection
from .verify import CHECKS, run_checks

METHODS = ("exact", "approx", "shortcut")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    src = p.add_argument_group("data source (exactly one)")
    src.add_argument("--input", help="CSV file of observations (rows) by variables (columns)")
    src.add_argument(
        "--synthetic",
        help=(
            "generate seeded Gaussian data instead of reading a file, e.g. "
            "'n=40,p=200' or 'n=60,p=5,cov=spiked,response=quadratic'; "
            "cov is 'identity' (default) or 'spiked' (leading variances 16,9,4), "
            "response is 'none' (default), 'linear', or 'quadratic'"
        ),
    )
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic data (default 0)")
    p.add_argument("--delimiter", default=",", help="CSV delimiter (default ',')")
    p.add_argument("--header", action="store_true", help="first CSV row is a header")
    p.add_argument("--response-column", help="response column name (with --header) or 0-based index")
    p.add_argument(
        "--standardize",
        choices=["none", "rows", "columns"],
        default="none",
        help="center/scale rows or columns to mean 0, sd 1 before analysis",
    )


def _add_run_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--estimator", choices=ESTIMATORS, default="cov")
    p.add_argument(
        "--cov-divisor",
        choices=["n", "n-1"],
        default="n",
        help=(
            "sample covariance divisor; 'n' matches the influence-function "
            "functional (empirical influence matrices then average to zero), "
            "'n-1' is the unbiased convention without that property"
        ),
    )
    p.add_argument("--gap-tol", type=float, help="override the eigenvalue separation tolerance")
    p.add_argument(
        "--threads",
        type=int,
        default=0,
        help="parallel leave-one-out fits (0 = all available cores)",
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigeninfluence",
        description=(
            "Quantify how strongly each observation influences the span of "
            "selected eigenvectors of a covariance, correlation, or PHD "
            "average-Hessian estimate."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="score observations with the requested methods")
    _add_data_args(pa)
    _add_run_args(pa)
    pa.add_argument("--k", type=int, help="keep the leading K eigenvectors")
    pa.add_argument("--indices", help="explicit 1-based eigenvector positions, e.g. '1,3,4'")
    pa.add_argument(
        "--methods",
        default="approx",
        help=f"comma list from {{{','.join(METHODS)}}} (default approx)",
    )
    pa.add_argument("--subset", help="restrict the exact method to these 0-based observations")
    pa.add_argument("--top", type=int, default=5, help="flag the top-M observations per method")
    pa.add_argument("--output", help="report path (default: JSON to stdout)")
    pa.add_argument("--format", choices=["json", "csv"], default="json")
    pa.add_argument("--emit-plot-data", help="also write per-observation columns as CSV here")
    pa.set_defaults(func=cmd_analyze)

    pb = sub.add_parser("bench", help="time the methods over a sweep of subspace sizes")
    _add_data_args(pb)
    _add_run_args(pb)
    pb.add_argument("--k-sweep", required=True, help="comma list of K values, e.g. '1,2,3'")
    pb.add_argument(
        "--methods",
        default="exact,approx,shortcut",
        help="comma list; at least two methods (default all three)",
    )
    pb.add_argument("--output", help="write the timing table here (default stdout)")
    pb.set_defaults(func=cmd_bench)

    pv = sub.add_parser("verify", help="run the built-in correctness checks")
    pv.add_argument(
        "--check",
        action="append",
        help=f"run only this check (repeatable); available: {', '.join(sorted(CHECKS))}",
    )
    pv.add_argument("--eps", default="1e-3,1e-4,1e-5", help="weights for the convergence check")
    pv.add_argument("--seed", type=int, help="override the per-check fixture seeds")
    pv.set_defaults(func=cmd_verify)
    return parser


def _parse_synthetic(text: str, seed: int, parser: argparse.ArgumentParser) -> Dataset:
    fields: dict[str, str] = {}
    for item in text.split(","):
        if "=" not in item:
            parser.error(f"--synthetic items must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"n", "p", "cov", "response"}
    if unknown:
        parser.error(f"unknown --synthetic keys {sorted(unknown)}")
    try:
        n, p = int(fields["n"]), int(fields["p"])
    except (KeyError, ValueError):
        parser.error("--synthetic requires integer n= and p=")
    cov = fields.get("cov", "identity")
    diag = np.ones(p)
    if cov == "spiked":
        spikes = [16.0, 9.0, 4.0][: min(3, p)]
        diag[: len(spikes)] = spikes
    elif cov != "identity":
        parser.error(f"--synthetic cov must be identity or spiked, got {cov!r}")
    response = fields.get("response", "none")
    linear = quad = None
    noise = 0.0
    if response == "linear":
        linear = np.zeros(p)
        linear[0] = 1.0
        noise = 0.1
    elif response == "quadratic":
        quad = np.zeros((p, p))
        quad[0, 0] = 1.0
        if p > 1:
            quad[1, 1] = -1.0
        noise = 0.1
    elif response != "none":
        parser.error(f"--synthetic response must be none, linear, or quadratic, got {response!r}")
    spec = SyntheticSpec(
        n=n, p=p, mu=np.zeros(p), sigma=np.diag(diag), seed=seed,
        response_linear=linear, response_quad=quad, response_noise_sd=noise,
    )
    return generate_gaussian(spec)


def _load_data(args, parser: argparse.ArgumentParser) -> tuple[Dataset, str]:
    if (args.input is None) == (args.synthetic is None):
        parser.error("provide exactly one of --input or --synthetic")
    if args.input is not None:
        response = args.response_column
        if response is not None and not args.header:
            try:
                response = int(response)
            except ValueError:
                parser.error("--response-column must be a 0-based index without --header")
        data = load_csv(
            args.input, delimiter=args.delimiter, header=args.header, response_column=response
        )
        source = f"file:{args.input}"
    else:
        data = _parse_synthetic(args.synthetic, args.seed, parser)
        source = f"synthetic:{args.synthetic};seed={args.seed}"
    if args.standardize != "none":
        data, _ = standardize(data, args.standardize)
    return data, source


def _parse_selection(args, p: int, parser: argparse.ArgumentParser) -> SubspaceSelection:
    if (args.k is None) == (args.indices is None):
        parser.error("provide exactly one of --k or --indices")
    if args.k is not None:
        if args.k < 1 or args.k > p:
            parser.error(f"--k must be between 1 and p={p}, got {args.k}")
        return SubspaceSelection.leading(args.k, p)
    try:
        one_based = [int(tok) for tok in args.indices.split(",") if tok.strip()]
    except ValueError:
        parser.error(f"--indices must be a comma list of integers, got {args.indices!r}")
    if not one_based or min(one_based) < 1 or max(one_based) > p:
        parser.error(f"--indices must be 1-based positions within 1..{p}")
    return SubspaceSelection(tuple(i - 1 for i in one_based), p)


def _parse_methods(text: str, parser: argparse.ArgumentParser, minimum: int = 1) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad:
        parser.error(f"unknown method(s) {bad}; choose from {METHODS}")
    methods = list(dict.fromkeys(methods))
    if len(methods) < minimum:
        parser.error(f"need at least {minimum} method(s), got {methods}")
    return methods


def _threads(args) -> int:
    if args.threads and args.threads > 0:
        return args.threads
    env = os.environ.get("THREADS")
    if env and env.isdigit() and int(env) > 0:
        return int(env)
    return os.cpu_count() or 1


def _run_methods(
    data: Dataset,
    estimator: str,
    sel: SubspaceSelection,
    methods: list[str],
    *,
    ddof: int,
    gap_tol: Optional[float],
    threads: int,
    subset=None,
) -> tuple[dict[str, np.ndarray], dict[str, float]]:
    values: dict[str, np.ndarray] = {}
    timings: dict[str, float] = {}
    for method in methods:
        t0 = time.perf_counter()
        if method == "exact":
            v = exact_loo(
                data, estimator, sel, ddof=ddof, gap_tol=gap_tol, subset=subset, threads=threads
            )
        elif method == "approx":
            v = approx_influence(data, estimator, sel, ddof=ddof, gap_tol=gap_tol)
        else:
            v = shortcut_influence(data, sel, ddof=ddof, gap_tol=gap_tol)
        timings[method] = time.perf_counter() - t0
        values[method] = v
    return values, timings


def _spearman_pair(values: dict[str, np.ndarray]) -> tuple[Optional[float], Optional[tuple[str, str]]]:
    for pair in (("exact", "shortcut"), ("exact", "approx"), ("approx", "shortcut")):
        a, b = pair
        if a in values and b in values:
            va, vb = values[a], values[b]
            mask = np.isfinite(va) & np.isfinite(vb)
            if mask.sum() >= 2:
                return spearman(va[mask], vb[mask]), pair
    return None, None


def cmd_analyze(args, parser: argparse.ArgumentParser) -> int:
    data, source = _load_data(args, parser)
    sel = _parse_selection(args, data.p, parser)
    methods = _parse_methods(args.methods, parser)
    ddof = 0 if args.cov_divisor == "n" else 1
    if "shortcut" in methods:
        if args.estimator != "cov":
            parser.error("the shortcut method applies to the covariance estimator only")
        if sel.k >= min(data.p, data.n - 1):
            parser.error(
                f"shortcut requires K < min(p, n-1) = {min(data.p, data.n - 1)}, got K={sel.k}"
            )
    if args.estimator == "phd" and data.y is None:
        parser.error("the PHD estimator needs --response-column or a synthetic response")
    subset = None
    if args.subset:
        try:
            subset = [int(tok) for tok in args.subset.split(",") if tok.strip()]
        except ValueError:
            parser.error(f"--subset must be a comma list of integers, got {args.subset!r}")

    values, timings = _run_methods(
        data, args.estimator, sel, methods,
        ddof=ddof, gap_tol=args.gap_tol, threads=_threads(args), subset=subset,
    )
    sr, sr_pair = _spearman_pair(values)

    top = None
    if args.top and args.top > 0:
        top = {}
        for m, v in values.items():
            finite = np.where(np.isfinite(v))[0]
            ranked = finite[np.argsort(-v[finite])][: args.top]
            top[m] = tuple(int(i) for i in ranked)

    iterations: dict[str, int] = {}
    if "exact" in methods:
        iterations["exact_decompositions"] = data.n + 1
    if args.estimator == "cov" and 1 <= sel.k < min(data.p, data.n - 1):
        full, short = iteration_counts(data.n, data.p, sel.k)
        if "approx" in methods:
            iterations["approx"] = full
        if "shortcut" in methods:
            iterations["shortcut"] = short

    report = InfluenceReport(
        n=data.n,
        exact=values.get("exact"),
        approx=values.get("approx"),
        shortcut=values.get("shortcut"),
        spearman=sr,
        spearman_methods=sr_pair,
        timings={m: round(t, 6) for m, t in timings.items()},
        iterations=iterations,
        config={
            "command": "analyze",
            "source": source,
            "estimator": args.estimator,
            "selection": list(sel.indices),
            "k": sel.k,
            "methods": methods,
            "cov_divisor": args.cov_divisor,
            "gap_tol": args.gap_tol,
            "standardize": args.standardize,
            "seed": args.seed,
            "top": args.top,
            "version": __version__,
        },
        top=top,
    )

    if args.output:
        write_report(report, args.output, fmt=args.format)
    elif args.format == "json":
        json.dump(report_json_doc(report), sys.stdout, indent=2, sort_keys=True, allow_nan=False)
        sys.stdout.write("\n")
    else:
        csv.writer(sys.stdout).writerows(report_csv_rows(report))
    if args.emit_plot_data:
        write_report(report, args.emit_plot_data, fmt="csv")
    return 0


def cmd_bench(args, parser: argparse.ArgumentParser) -> int:
    data, source = _load_data(args, parser)
    methods = _parse_methods(args.methods, parser, minimum=2)
    ddof = 0 if args.cov_divisor == "n" else 1
    try:
        sweep = [int(tok) for tok in args.k_sweep.split(",") if tok.strip()]
    except ValueError:
        parser.error(f"--k-sweep must be a comma list of integers, got {args.k_sweep!r}")
    if not sweep:
        parser.error("--k-sweep must contain at least one K")
    bound = min(data.p, data.n - 1)
    if min(sweep) < 1 or ("shortcut" in methods and max(sweep) >= bound):
        parser.error(f"sweep K values must satisfy 1 <= K < {bound}")
    if "shortcut" in methods and args.estimator != "cov":
        parser.error("the shortcut method applies to the covariance estimator only")

    rows: dict[str, list] = {f"t_{m}_s": [] for m in methods}
    rows["spearman_exact_shortcut"] = []
    threads = _threads(args)
    for k in sweep:
        sel = SubspaceSelection.leading(k, data.p)
        values, timings = _run_methods(
            data, args.estimator, sel, methods, ddof=ddof, gap_tol=args.gap_tol, threads=threads
        )
        for m in methods:
            rows[f"t_{m}_s"].append(f"{timings[m]:.6f}")
        sr, pair = _spearman_pair(values)
        rows["spearman_exact_shortcut"].append("" if sr is None else f"{sr:.6f}")

    out = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(out)
        w.writerow(["metric"] + [str(k) for k in sweep])
        for name, cells in rows.items():
            if name == "spearman_exact_shortcut" and all(c == "" for c in cells):
                continue
            w.writerow([name] + cells)
        w.writerow(["source", source] + [""] * (len(sweep) - 1))
    finally:
        if args.output:
            out.close()
    return 0


def cmd_verify(args, parser: argparse.ArgumentParser) -> int:
    try:
        eps = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    except ValueError:
        parser.error(f"--eps must be a comma list of floats, got {args.eps!r}")
    if args.check:
        unknown = [c for c in args.check if c not in CHECKS]
        if unknown:
            parser.error(f"unknown check(s) {unknown}; available: {', '.join(sorted(CHECKS))}")
    results = run_checks(args.check, eps=eps, seed=args.seed)
    failed = 0
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        failed += 0 if passed else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except SubspaceGapError as e:
        print(f"error: gap-violation: {_one_line(e)}", file=sys.stderr)
        return 1
    except (ValueError, np.linalg.LinAlgError) as e:
        print(f"error: invalid-input: {_one_line(e)}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"error: io-error: {_one_line(e)}", file=sys.stderr)
        return 1


def _one_line(e: BaseException) -> str:
    return " ".join(str(e).split())


if __name__ == "__main__":
    sys.exit(main())
