"""Command-line entry point.

Every subcommand writes its artifacts into ``--out`` (default ``.``): a
canonical CSV, an optional SVG and ``summary.json`` with the checks it ran.
Exit status: 0 when all checks pass, 1 when one fails, 2 for an invalid plan.

Options may also come from a JSON file passed with ``--config``; its keys are
the long option names (``n``, ``k``, ``burn_in`` or ``burn-in``, ...). A
``command`` key selects the subcommand when none is given on the command line.
Explicit flags take precedence over the file.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, bounds, gaussian, meanfield, metrics, sampler
from .errors import ChaosmeterError
from .model import ModelSpec
from .svgplot import loglog_svg

COMMANDS = ("gaussian-exact", "scaling-sweep", "sample", "solve-mu", "verify-bounds", "lemma-check")
THREADS_ENV = "CHAOSMETER_THREADS"


class PlanError(ValueError):
    """The requested experiment is malformed."""


def _int_list(text) -> list:
    if isinstance(text, (list, tuple)):
        vals = list(text)
    elif isinstance(text, int):
        vals = [text]
    else:
        vals = [t for t in str(text).split(",") if t.strip()]
    try:
        out = [int(v) for v in vals]
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            w = int(env)
        except ValueError:
            raise PlanError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        if w < 1:
            raise PlanError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return w
    return os.cpu_count() or 1


def version_string() -> str:
    """Package version, plus the short commit hash when run from a git checkout."""
    try:
        sha = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
        )
        if sha.returncode == 0 and sha.stdout.strip():
            return f"{__version__}+g{sha.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


# -- parser -------------------------------------------------------------------------


def _model_args(p, b_default=1.0):
    p.add_argument("--a", type=float, default=1.0, help="confinement coefficient")
    p.add_argument("--b", type=float, default=b_default, help="interaction coefficient")


def build_parser() -> tuple:
    parser = argparse.ArgumentParser(prog="chaosmeter", description="Local chaos rate experiments.")
    parser.add_argument("--version", action="version", version=f"chaosmeter {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    subs = {}

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="JSON file of option values")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--seed", type=int, default=0)
        subs[name] = p
        return p

    p = add("gaussian-exact", "closed-form distances between P^n_k and mu^k")
    _model_args(p)
    p.add_argument("--n", type=_int_list, default=[100])
    p.add_argument("--k", type=_int_list, default=[2])

    p = add("scaling-sweep", "exact distances over n with a fitted log-log slope")
    _model_args(p)
    p.add_argument("--n", type=_int_list, default=[50, 100, 200, 400, 800])
    p.add_argument("--k", type=_int_list, default=[2])
    p.add_argument("--slope-tol", type=float, default=0.05)

    p = add("sample", "MALA/ULA samples of the n-particle law")
    _model_args(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--q", type=float, default=0.0, help="quartic confinement coefficient")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--k", type=int, default=1, help="marginal size written to marginal.csv")
    p.add_argument("--samples", type=int, default=10000)
    p.add_argument("--chains", type=int, default=16)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--thin", type=int, default=None)
    p.add_argument("--ula", action="store_true", help="unadjusted Langevin (biased)")

    p = add("solve-mu", "mean-field fixed point on a 1-D grid")
    _model_args(p)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--q", type=float, default=0.0)
    p.add_argument("--m", type=int, default=2048, help="grid points")
    p.add_argument("--damping", type=float, default=0.5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=10000)

    p = add("verify-bounds", "theoretical bounds against exact Gaussian distances")
    _model_args(p, b_default=0.25)
    p.add_argument("--n", type=_int_list, default=[20, 50, 100, 200, 400])
    p.add_argument("--k", type=_int_list, default=[2, 3, 4, 5, 6, 7, 8])
    p.add_argument("--epsilon", type=float, default=0.1)

    p = add("lemma-check", "marginal score identity at random points")
    _model_args(p)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-10)
    return parser, subs


def _apply_config(parser, subs, argv):
    """Second parse with defaults taken from the ``--config`` JSON file."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    try:
        cfg = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PlanError(f"cannot read config {known.config}: {exc}")
    if not isinstance(cfg, dict):
        raise PlanError("config must be a JSON object")
    cfg = {str(k).replace("-", "_"): v for k, v in cfg.items()}
    command = cfg.pop("command", None)
    if not any(a in COMMANDS for a in argv):
        if command not in COMMANDS:
            raise PlanError("no command given on the command line or in the config")
        argv = [command] + list(argv)
    else:
        command = next(a for a in argv if a in COMMANDS)
    sp = subs[command]
    dests = {act.dest: act for act in sp._actions}
    unknown = sorted(set(cfg) - set(dests))
    if unknown:
        raise PlanError(f"unknown config keys for {command}: {unknown}")
    for key, val in cfg.items():
        if dests[key].type is _int_list:
            try:
                val = _int_list(val)
            except argparse.ArgumentTypeError as exc:
                raise PlanError(f"config key {key}: {exc}")
        sp.set_defaults(**{key: val})
    return parser.parse_args(argv)


# -- shared output helpers -----------------------------------------------------------


def _write_rows(path: Path, fields, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow(r)


def _fmt(x) -> str:
    return repr(float(x))


def _write_summary(out: Path, command: str, seed: int, checks: dict, extra: dict | None = None) -> None:
    summary = {
        "command": command,
        "seed": seed,
        "version": version_string(),
        "checks": {k: bool(v) for k, v in checks.items()},
        "passed": all(checks.values()),
    }
    if extra:
        summary.update(extra)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _grid(ns, ks, need_k_lt_n=True):
    pts = sorted({(n, k) for n in ns for k in ks})
    for n, k in pts:
        if n < 2 or k < 1 or (need_k_lt_n and k >= n) or k > n:
            raise PlanError(f"invalid (n, k) = ({n}, {k}): need n >= 2 and 1 <= k < n")
    return pts


def _pool_map(fn, items):
    workers = min(worker_count(), max(len(items), 1))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _gaussian_model(args):
    if not args.a > 0 or not args.b >= 0:
        raise PlanError(f"need a > 0 and b >= 0, got a={args.a}, b={args.b}")


# -- commands -------------------------------------------------------------------------

EXACT_FIELDS = ["a", "b", "n", "k", "w2sq", "kl", "fisher", "kl_reversed"]


def _exact_row(a, b, n, k):
    d = gaussian.marginal_divergences(a, b, n, k)
    return {
        "a": _fmt(a),
        "b": _fmt(b),
        "n": n,
        "k": k,
        "w2sq": _fmt(d.w2sq),
        "kl": _fmt(d.kl),
        "fisher": _fmt(d.fisher),
        "kl_reversed": _fmt(d.kl_reversed),
    }


def cmd_gaussian_exact(args, out: Path) -> int:
    _gaussian_model(args)
    pts = _grid(args.n, args.k, need_k_lt_n=False)
    rows = _pool_map(lambda nk: _exact_row(args.a, args.b, *nk), pts)
    _write_rows(out / "gaussian_exact.csv", EXACT_FIELDS, rows)
    for r in rows:
        print(f"n={r['n']} k={r['k']}  W2^2={float(r['w2sq']):.10g}  KL={float(r['kl']):.10g}  "
              f"Fisher={float(r['fisher']):.10g}")
    checks = {"finite_nonnegative": all(float(r[f]) >= 0 for r in rows for f in EXACT_FIELDS[4:])}
    _write_summary(out, "gaussian-exact", args.seed, checks)
    return 0 if all(checks.values()) else 1


SWEEP_FIELDS = EXACT_FIELDS + ["k_over_n", "subadditivity_kl", "ratio_to_baseline"]


def _sweep_row(a, b, n, k):
    row = _exact_row(a, b, n, k)
    h_global = gaussian.marginal_divergences(a, b, n, n).kl
    base = bounds.subadditivity_bound(h_global, n, k)
    row["k_over_n"] = _fmt(k / n)
    row["subadditivity_kl"] = _fmt(base)
    row["ratio_to_baseline"] = _fmt(float(row["kl"]) / base) if base > 0 else ""
    return row


def cmd_scaling_sweep(args, out: Path) -> int:
    _gaussian_model(args)
    if args.b == 0:
        raise PlanError("b = 0 gives identically zero distances; nothing to fit")
    pts = _grid(args.n, args.k)
    if len(set(args.n)) < 2:
        raise PlanError("a slope needs at least two values of n")
    rows = _pool_map(lambda nk: _sweep_row(args.a, args.b, *nk), pts)
    _write_rows(out / "scaling_sweep.csv", SWEEP_FIELDS, rows)

    checks, series, slopes = {}, {}, {}
    fit = None
    for k in sorted(set(args.k)):
        sel = [r for r in rows if r["k"] == k]
        if len(sel) < 2:
            continue
        x = np.array([float(r["k_over_n"]) for r in sel])
        y = np.array([float(r["w2sq"]) for r in sel])
        slope, icpt = np.polyfit(np.log(x), np.log(y), 1)
        slopes[k] = float(slope)
        series[f"W2^2, k={k}"] = (x, y)
        if fit is None:
            fit = (float(slope), float(icpt))
        checks[f"slope_k{k}"] = abs(slope - 2.0) <= args.slope_tol
        ratio = [float(r["ratio_to_baseline"]) for r in sel]  # sel is sorted by n
        checks[f"beats_baseline_k{k}"] = all(r2 < r1 for r1, r2 in zip(ratio, ratio[1:]))
        print(f"k={k}: log-log slope of W2^2 vs k/n = {slope:.4f}")
    if not series:
        raise PlanError("every k needs at least two admissible n")
    first = next(iter(slopes.values()))
    svg = loglog_svg(
        series,
        title=f"Exact W2^2(P^n_k, mu^k), a={args.a:g}, b={args.b:g}",
        xlabel="k/n",
        ylabel="W2^2",
        fit=fit,
        note=f"fitted slope {first:.2f} (target 2.00 +/- {args.slope_tol:.2f})",
    )
    (out / "scaling_sweep.svg").write_text(svg)
    _write_summary(out, "scaling-sweep", args.seed, checks, {"slopes": {str(k): v for k, v in slopes.items()}})
    return 0 if all(checks.values()) else 1


def cmd_sample(args, out: Path) -> int:
    try:
        spec = ModelSpec(
            beta=args.beta,
            a=args.a,
            b=args.b,
            q=args.q,
            confinement="quartic" if args.q else "quadratic",
        )
        cfg = sampler.SamplerConfig(
            n_samples=args.samples,
            seed=args.seed,
            step=args.step,
            burn_in=args.burn_in,
            thin=args.thin,
            mala=not args.ula,
            chains=args.chains,
            workers=worker_count(),
        )
        if not 1 <= args.k <= args.n:
            raise PlanError(f"k must lie in [1, n], got {args.k}")
        cfg.resolve(spec, args.n)
    except ChaosmeterError as exc:
        raise PlanError(str(exc))
    ens = sampler.sample_gibbs(spec, args.n, cfg)
    sampler.save_ensemble(ens, out / "ensemble.chme")
    sampler.write_marginal_csv(ens, args.k, out / "marginal.csv")
    mom = sampler.exchangeable_moments(ens)
    checks = {"finite": bool(np.all(np.isfinite(ens.samples)))}
    rows = [
        {"kind": "variance", "value": _fmt(mom.diag), "std_error": _fmt(mom.diag_se), "exact": ""},
        {"kind": "covariance", "value": _fmt(mom.offdiag), "std_error": _fmt(mom.offdiag_se), "exact": ""},
    ]
    if spec.is_gaussian and spec.beta == 1.0:
        cs = gaussian.GaussianCovSpec(args.a, args.b, args.n)
        exact = (cs.d_n * (1 + cs.c_n), cs.d_n * cs.c_n)
        for row, ex, (val, se) in zip(rows, exact, [(mom.diag, mom.diag_se), (mom.offdiag, mom.offdiag_se)]):
            row["exact"] = _fmt(ex)
            checks[f"{row['kind']}_within_3se"] = abs(val - ex) <= 3 * se
    _write_rows(out / "moments.csv", ["kind", "value", "std_error", "exact"], rows)
    for w in ens.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(f"S={ens.S} n={ens.n} variance={mom.diag:.6g}+/-{mom.diag_se:.2g} "
          f"covariance={mom.offdiag:.6g}+/-{mom.offdiag_se:.2g}")
    extra = {"acceptance_rate": ens.acceptance_rate, "warnings": ens.warnings,
             "config": {k: getattr(ens.config, k) for k in ("step", "burn_in", "thin", "chains", "mala")}}
    _write_summary(out, "sample", args.seed, checks, extra)
    return 0 if all(checks.values()) else 1


def cmd_solve_mu(args, out: Path) -> int:
    try:
        spec = ModelSpec(beta=args.beta, a=args.a, b=args.b, q=args.q,
                         confinement="quartic" if args.q else "quadratic")
        if args.m < 64:
            raise PlanError("need at least 64 grid points")
        lo, hi, _ = meanfield.default_grid(spec)
        res = meanfield.solve_fixed_point(spec, (lo, hi, args.m), damping=args.damping,
                                          tol=args.tol, max_iter=args.max_iter)
    except ChaosmeterError as exc:
        if isinstance(exc, ValueError):
            raise PlanError(str(exc))
        raise
    meanfield.write_csv(res.density, out / "mu.csv")
    checks = {"converged": res.converged}
    extra = {"iterations": res.iterations, "residual": res.residual,
             "second_moment": res.density.moment(2)}
    if spec.is_gaussian:
        var = 1.0 / (spec.beta * (spec.a + spec.b))
        err = res.density.l1(meanfield.gaussian_on_grid(var, lo, hi, args.m))
        extra["l1_to_gaussian"] = err
        checks["l1_to_gaussian"] = err <= 1e-3
    print(f"iterations={res.iterations} residual={res.residual:.3g} second moment={res.density.moment(2):.10g}")
    _write_summary(out, "solve-mu", args.seed, checks, extra)
    return 0 if all(checks.values()) else 1


def cmd_verify_bounds(args, out: Path) -> int:
    _gaussian_model(args)
    pts = _grid(args.n, args.k)
    reps = _pool_map(lambda nk: bounds.gaussian_bound_reports(args.a, args.b, *nk, epsilon=args.epsilon), pts)
    flat = [r for group in reps for r in group]
    bounds.write_bound_reports(flat, out / "bounds.csv")
    checks = {}
    for name in sorted({r.name for r in flat}):
        mine = [r for r in flat if r.name == name and r.applicable]
        if mine:
            checks[name] = all(r.satisfied for r in mine)
    bad = sum(1 for r in flat if r.satisfied is False)
    print(f"{len(flat)} bound evaluations, {bad} violations")
    _write_summary(out, "verify-bounds", args.seed, checks, {"violations": bad})
    return 0 if all(checks.values()) else 1


def cmd_lemma_check(args, out: Path) -> int:
    _gaussian_model(args)
    if not 1 <= args.k < args.n:
        raise PlanError(f"need 1 <= k < n, got n={args.n}, k={args.k}")
    if args.trials < 1:
        raise PlanError("trials must be positive")
    rng = np.random.default_rng(args.seed)
    sd = 1.0 / math.sqrt(args.a + args.b)
    rows = []
    for t in range(args.trials):
        x = 3 * sd * rng.standard_normal(args.k)
        res = gaussian.lemma31_check(args.a, args.b, args.n, args.k, x)
        rows.append({"trial": t, "max_abs_diff": _fmt(res.max_abs_diff)})
    worst = max(float(r["max_abs_diff"]) for r in rows)
    _write_rows(out / "lemma_check.csv", ["trial", "max_abs_diff"], rows)
    print(f"max_abs_diff={worst:.3e} over {args.trials} trials")
    checks = {"max_abs_diff": worst <= args.tol}
    _write_summary(out, "lemma-check", args.seed, checks, {"max_abs_diff": worst})
    return 0 if all(checks.values()) else 1


HANDLERS = {
    "gaussian-exact": cmd_gaussian_exact,
    "scaling-sweep": cmd_scaling_sweep,
    "sample": cmd_sample,
    "solve-mu": cmd_solve_mu,
    "verify-bounds": cmd_verify_bounds,
    "lemma-check": cmd_lemma_check,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = _apply_config(parser, subs, argv)
    except PlanError as exc:
        print(f"chaosmeter: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse usage errors exit with 2
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](args, out)
    except PlanError as exc:
        print(f"chaosmeter: error: {exc}", file=sys.stderr)
        return 2
    except ChaosmeterError as exc:
        if isinstance(exc, ValueError):
            print(f"chaosmeter: error: {exc}", file=sys.stderr)
            return 2
        print(f"chaosmeter: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
