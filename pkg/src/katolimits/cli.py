"""Command-line front end.

Exit status: 0 on success, 2 for invalid input, 1 when a numerical procedure
fails to produce a trustworthy result.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Sequence

import numpy as np

from . import fixtures, io, kato, linalg, means, renyi, sweep
from .errors import InputError, NumericalError

SUBCOMMANDS = ("limit", "map-limit", "neg-limit", "sup", "inf", "mean", "mean-limit", "renyi", "sweep", "selftest")
DEFAULT_P_MAX = 4096


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be positive, got {text!r}")
    return v


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol-rank", type=_positive, default=linalg.TOL_RANK)
    common.add_argument("--tol-group", type=_positive, default=linalg.TOL_GROUP)
    common.add_argument("--p-max", type=_positive, default=DEFAULT_P_MAX,
                        help="largest exponent of the dyadic sweep grid (at most 16384)")
    common.add_argument("--alpha", type=float, default=None)
    common.add_argument("--format", choices=("table", "json"), default="table")

    parser = argparse.ArgumentParser(
        prog="katolimits",
        description="Limits of Phi(A^p)^{1/p}, operator means and Renyi divergences.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("limit", "lim (K A^p K*)^{1/p}")
    p.add_argument("--K", required=True, help="matrix file")
    p.add_argument("--A", required=True, help="PSD matrix file")

    for name, text in (("map-limit", "lim Phi(A^p)^{1/p}"), ("neg-limit", "lim Phi(A^-p)^{-1/p}")):
        p = add(name, text)
        p.add_argument("--map", required=True, help="map file")
        p.add_argument("--A", required=True, help="PSD matrix file")
    sub.choices["neg-limit"].add_argument(
        "--regularized-p", type=_positive, default=None,
        help="also report lim_eps Phi((A + eps I)^-p)^{-1/p} at this p",
    )

    for name, text in (("sup", "spectral-order supremum"), ("inf", "spectral-order infimum")):
        p = add(name, text)
        p.add_argument("--A", required=True)
        p.add_argument("--B", required=True)

    p = add("mean", "Kubo-Ando mean A sigma B")
    p.add_argument("--mean", required=True, help="name[:alpha], e.g. geometric:0.5")
    p.add_argument("--A", required=True)
    p.add_argument("--B", required=True)

    p = add("mean-limit", "lim (A^p #_alpha B)^{1/p}")
    p.add_argument("--A", required=True)
    p.add_argument("--B", required=True)

    p = add("renyi", "alpha -> 0 limits and, with --alpha, Renyi divergences")
    p.add_argument("--rho", required=True)
    p.add_argument("--sigma", required=True)

    p = add("sweep", "evaluate a p-indexed family on the dyadic grid up to --p-max")
    p.add_argument("--family", choices=("map", "neg-map", "mean", "sandwich"), required=True)
    p.add_argument("--map")
    p.add_argument("--mean")
    p.add_argument("--A", required=True)
    p.add_argument("--B")
    p.add_argument("--target", help="matrix file to measure errors against")

    add("selftest", "run the embedded reference fixtures")
    return parser


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _fmt_scalar(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "+inf" if x == math.inf else f"{float(x):.10g}"
    return str(x)


def _fmt_matrix(M: np.ndarray) -> list[str]:
    M = np.asarray(M)
    if M.size == 0:
        return [f"  (empty {M.shape[0]}x{M.shape[1]})"]
    real = np.max(np.abs(M.imag)) <= 1e-12 * max(1.0, np.max(np.abs(M)))
    lines = []
    for row in M:
        if real:
            cells = [f"{z.real: .8f}" for z in row]
        else:
            cells = [f"{z.real: .6f}{z.imag:+.6f}j" for z in row]
        lines.append("  " + "  ".join(cells))
    return lines


def render_table(report: dict) -> str:
    out = []
    for key, value in report.items():
        if isinstance(value, np.ndarray) and value.ndim == 2:
            out.append(f"{key}:")
            out.extend(_fmt_matrix(value))
        elif isinstance(value, (list, tuple)) and value and isinstance(value[0], np.ndarray) and value[0].ndim == 2:
            for i, M in enumerate(value):
                out.append(f"{key}[{i}]:")
                out.extend(_fmt_matrix(M))
        elif isinstance(value, (list, tuple, np.ndarray)):
            items = [
                "[" + ", ".join(_fmt_scalar(x) for x in v) + "]" if isinstance(v, (list, tuple, np.ndarray)) else _fmt_scalar(v)
                for v in value
            ]
            out.append(f"{key}: " + ", ".join(items))
        elif isinstance(value, dict):
            out.append(f"{key}: " + ", ".join(f"{k}={_fmt_scalar(v)}" for k, v in value.items()))
        else:
            out.append(f"{key}: {_fmt_scalar(value)}")
    return "\n".join(out)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _grid(p_max: float) -> tuple:
    if p_max < 1 or p_max > sweep.P_CAP:
        raise InputError(f"--p-max must lie in [1, {sweep.P_CAP:g}]")
    k = int(math.floor(math.log2(p_max) + 1e-12))
    return tuple(float(2 ** j) for j in range(k + 1))


def _mean_spec(text: str, alpha: float | None) -> means.MeanSpec:
    if alpha is not None and ":" not in text and text.strip().lower() != "logarithmic":
        text = f"{text}:{alpha!r}"
    return means.parse_mean(text)


def _cmd_limit(args) -> dict:
    K = io.load_matrix(args.K, "K")
    A = io.load_matrix(args.A, "A")
    res = kato.congruence_limit(K, A, args.tol_rank)
    return {
        "limit": res.limit,
        "m": res.m,
        "selected_indices": list(res.selected_indices),
        "selected_values": res.selected_values,
        "predicted_spectrum": res.predicted_spectrum,
        "orthonormal_frame": res.orthonormal_frame,
    }


def _cmd_map_limit(args, negative: bool) -> dict:
    spec = io.load_map(args.map)
    A = io.load_matrix(args.A, "A")
    fn = kato.neg_map_limit if negative else kato.map_limit
    res = fn(spec, A, args.tol_rank)
    report = {"limit": res.limit, "coefficients": res.coefficients, "projections": list(res.projections)}
    if negative and args.regularized_p is not None:
        eps = kato.epsilon_neg_limit(spec, A, args.regularized_p)
        report["regularized_limit"] = eps.limit
        report["regularized_delta"] = eps.delta
        report["regularized_monotone"] = eps.monotone
    return report


def _cmd_order(args, which: str) -> dict:
    A = io.load_matrix(args.A, "A")
    B = io.load_matrix(args.B, "B")
    if which == "sup":
        return {"sup": kato.spectral_sup(A, B)}
    return {"inf": kato.spectral_inf(A, B, args.tol_group)}


def _cmd_mean(args) -> dict:
    spec = _mean_spec(args.mean, args.alpha)
    A = io.load_matrix(args.A, "A")
    B = io.load_matrix(args.B, "B")
    return {"mean": spec.name, "value": means.mean_eval(spec, A, B)}


def _cmd_mean_limit(args) -> dict:
    if args.alpha is None:
        raise InputError("mean-limit needs --alpha")
    A = io.load_matrix(args.A, "A")
    B = io.load_matrix(args.B, "B")
    return {"alpha": args.alpha, "limit": means.geometric_limit(A, B, args.alpha)}


def _cmd_renyi(args) -> dict:
    rho = io.load_matrix(args.rho, "rho")
    sigma = io.load_matrix(args.sigma, "sigma")
    z = renyi.zero_limits(rho, sigma, args.tol_rank)
    report = {
        "d0": z.d0,
        "d0_tilde": z.d0_tilde,
        "q0_tilde": z.q0_tilde,
        "commutes": z.commutes,
        "equality": z.equality,
        "witness_projection": z.witness_projection,
    }
    if args.alpha is not None:
        d, dt = renyi.renyi_divergences(rho, sigma, args.alpha, args.tol_rank)
        report.update({"alpha": args.alpha, "d_alpha": d, "d_tilde_alpha": dt})
    return report


def _cmd_sweep(args) -> dict:
    grid = _grid(args.p_max)
    A = io.load_matrix(args.A, "A")
    target = io.load_matrix(args.target, "target") if args.target else None

    def need(flag):
        value = getattr(args, flag)
        if value is None:
            raise InputError(f"--family {args.family} needs --{flag}")
        return value

    if args.family in ("map", "neg-map"):
        spec = io.load_map(need("map"))
        rep = sweep.sweep_map(spec, A, grid, target, negative=args.family == "neg-map", tol_rank=args.tol_rank)
    elif args.family == "mean":
        spec = _mean_spec(need("mean"), args.alpha)
        rep = sweep.sweep_mean(spec, A, io.load_matrix(need("B"), "B"), grid, target)
    else:
        rep = sweep.sweep_sandwich(A, io.load_matrix(need("B"), "B"), grid, target)
    report = {
        "p_grid": list(rep.p_grid),
        "last_iterate": rep.last,
        "eigenvalue_tracks": [list(t) for t in rep.eigenvalue_tracks],
        "monotone_flag": rep.monotone_flag,
        "violations": rep.violations,
        "cauchy_delta": rep.cauchy_delta,
    }
    if rep.errors is not None:
        report["errors"] = list(rep.errors)
    return report


def _cmd_selftest(args) -> tuple[dict, int]:
    results = []
    failed = 0
    for check in fixtures.SELFTEST:
        try:
            ok, detail = check.run()
        except (InputError, NumericalError) as exc:
            ok, detail = False, f"raised {type(exc).__name__}: {exc}"
        failed += not ok
        results.append({"name": check.name, "passed": bool(ok), "detail": detail})
    report = {"passed": len(results) - failed, "total": len(results), "fixtures": results}
    return report, 0 if failed == 0 else 1


def _dispatch(args) -> tuple[dict, int]:
    cmd = args.command
    if cmd == "selftest":
        return _cmd_selftest(args)
    if cmd == "limit":
        return _cmd_limit(args), 0
    if cmd in ("map-limit", "neg-limit"):
        return _cmd_map_limit(args, cmd == "neg-limit"), 0
    if cmd in ("sup", "inf"):
        return _cmd_order(args, cmd), 0
    if cmd == "mean":
        return _cmd_mean(args), 0
    if cmd == "mean-limit":
        return _cmd_mean_limit(args), 0
    if cmd == "renyi":
        return _cmd_renyi(args), 0
    return _cmd_sweep(args), 0


def _render_selftest(report: dict) -> str:
    lines = [
        f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}  ({r['detail']})" for r in report["fixtures"]
    ]
    lines.append(f"{report['passed']}/{report['total']} fixtures passed")
    return "\n".join(lines)


def run(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    """Parse ``argv``, run the job and write the report; returns the exit code."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        report, code = _dispatch(args)
    except InputError as exc:
        print(f"katolimits {args.command}: input error: {exc}", file=stderr)
        return 2
    except NumericalError as exc:
        print(f"katolimits {args.command}: numerical failure: {exc}", file=stderr)
        return 1
    if args.format == "json":
        print(io.dumps(report), file=stdout)
    elif args.command == "selftest":
        print(_render_selftest(report), file=stdout)
    else:
        print(render_table(report), file=stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
