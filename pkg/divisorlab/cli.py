"""Command-line frontend. Every subcommand parses flags, validates them into a RunConfig, runs
one computation and emits a table in the requested format.

Exit codes: 0 success, 1 computation error, 2 usage error.
"""
import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from .arith import d_k_point, d_k_table
from .checks import run_checks
from .convolution import averaged_delta_parts, decompose_check, delta_Nh
from .errors import DivisorLabError
from .experiments import (
    DEFAULT_N_GRID,
    beta_estimate,
    main_split_check,
    singular_average_check,
    theorem_scan,
)
from .export import Table, model_table, write
from .laurent import main_term_polynomial
from .models import RunConfig
from .singular import q_polynomial, ramanujan_c, singular_series
from .utils import geometric_grid

logger = logging.getLogger("divisorlab")

# Flags handled by argparse alone and kept out of RunConfig.
_CONTROL_FLAGS = {"verbose", "quick"}


class UsageError(Exception):
    pass


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["csv", "json", "gnuplot-data", "xlsx"], default="csv")
    parser.add_argument("--output", help="output file (standard output when omitted)")
    parser.add_argument("--verbose", action="store_true", help="log progress to stderr")


def _singular_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--q-max", dest="q_max", type=int, default=1000)
    parser.add_argument("--trunc", dest="local_trunc", type=int, help="series truncation order T")
    parser.add_argument("--tail-mode", dest="tail_estimate_mode", choices=["crude", "gcd-weighted"], default="gcd-weighted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divisorlab", description="General additive divisor problem toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dk", help="d_k(n) at a point or over a range")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--lo", type=int)
    p.add_argument("--hi", type=int)
    _common(p)

    p = sub.add_parser("main-term", help="coefficients of p_{k-1}, highest power first")
    p.add_argument("--k", type=int, required=True)
    _common(p)

    p = sub.add_parser("ramanujan", help="the Ramanujan sum c_q(h)")
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    _common(p)

    p = sub.add_parser("qpoly", help="coefficients of Q_k(x, q) in log x, highest power first")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--trunc", dest="local_trunc", type=int)
    _common(p)

    p = sub.add_parser("singular", help="truncated singular series and its tail bound")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--h", type=int, required=True)
    _singular_flags(p)
    _common(p)

    p = sub.add_parser("delta", help="D_k(N,h) and Δ_k(N;h)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--h", type=int, required=True)
    _singular_flags(p)
    _common(p)

    for name, text in (("avg-delta", "Σ_{h<=H} Δ_k(N;h)"), ("decompose", "the M_k + R_k identity check")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--N", type=int, required=True)
        window = p.add_mutually_exclusive_group(required=True)
        window.add_argument("--H", type=int)
        window.add_argument("--theta", type=float)
        if name == "avg-delta":
            _singular_flags(p)
        _common(p)

    p = sub.add_parser("beta", help="β_k estimate from the mean square of Δ_k")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--xmin", type=int, default=10**4)
    p.add_argument("--xmax", type=int, default=10**6)
    p.add_argument("--ratio", type=float, default=2.0)
    _common(p)

    p = sub.add_parser("scan", help="averaged delta against the comparison envelopes over an N grid")
    p.add_argument("--k", type=int, required=True)
    window = p.add_mutually_exclusive_group()
    window.add_argument("--H", type=int)
    window.add_argument("--theta", dest="thetas", type=float, nargs="+", help="one slope is fitted per value (default 0.4 to 0.8)")
    p.add_argument("--nmin", type=int, default=DEFAULT_N_GRID[0])
    p.add_argument("--nmax", type=int, default=DEFAULT_N_GRID[-1])
    p.add_argument("--ratio", type=float, default=2.0)
    p.add_argument("--beta", type=float, help="override β_k in the theorem envelope")
    p.add_argument("--workers", type=int, default=1)
    _singular_flags(p)
    _common(p)

    for name, text in (("average-check", "Σ_h ∫𝔖_k against H ∫(Res ζ^k x^(s-1))^2"), ("split", "smooth main term against its split form")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--k", type=int, required=True)
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--H", type=int, required=True)
        if name == "average-check":
            _singular_flags(p)
        _common(p)

    p = sub.add_parser("verify", help="run the oracle and property suite")
    p.add_argument("--quick", action="store_true", help="reduced sizes")
    _common(p)
    return parser


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        flag = "--" + str(err["loc"][0]).replace("_", "-") if err["loc"] else None
        msg = err["msg"].removeprefix("Value error, ")
        parts.append(f"{flag}: {msg}" if flag else msg)
    return "; ".join(parts)


def _config(args: argparse.Namespace) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if k not in _CONTROL_FLAGS and v is not None}
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise UsageError(_validation_message(exc)) from exc


def _one_row(title: str, config: RunConfig, columns: list[str], row: list) -> Table:
    payload = {"config": config.model_dump(mode="json", exclude={"command", "workers", "format", "output"}), "rows": [dict(zip(columns, row))]}
    return Table(title, columns, [row], payload)


def _cmd_dk(cfg: RunConfig) -> Table:
    if cfg.n is not None:
        rows = [[cfg.n, d_k_point(cfg.n, cfg.k)]]
    elif cfg.lo is not None and cfg.hi is not None:
        table = d_k_table(cfg.k, cfg.lo, cfg.hi)
        rows = [[cfg.lo + i, int(v)] for i, v in enumerate(table.values.tolist())]
    else:
        raise UsageError("--n or both --lo and --hi are required")
    columns = ["n", f"d_{cfg.k}(n)"]
    payload = {"config": {"k": cfg.k}, "rows": [dict(zip(columns, r)) for r in rows]}
    return Table("dk", columns, rows, payload)


def _coefficient_table(title: str, cfg: RunConfig, coeffs: list[float]) -> Table:
    columns = [f"L^{len(coeffs) - 1 - i}" for i in range(len(coeffs))]
    return _one_row(title, cfg, columns, coeffs)


def _cmd_main_term(cfg: RunConfig) -> Table:
    return _coefficient_table("main-term", cfg, main_term_polynomial(cfg.k).descending())


def _cmd_ramanujan(cfg: RunConfig) -> Table:
    return _one_row("ramanujan", cfg, ["c_q(h)"], [ramanujan_c(cfg.q, cfg.h)])


def _cmd_qpoly(cfg: RunConfig) -> Table:
    qp = q_polynomial(cfg.q, cfg.k, cfg.local_trunc)
    logger.info("Q_%s(x, %s) has degree %s in log x", cfg.k, cfg.q, qp.degree)
    return _coefficient_table("qpoly", cfg, qp.poly.descending())


def _cmd_singular(cfg: RunConfig) -> Table:
    value, tail = singular_series(cfg.x, cfg.h, cfg.k, cfg.singular())
    return _one_row("singular", cfg, ["value", "tail_bound"], [value, tail])


def _cmd_delta(cfg: RunConfig) -> Table:
    table = d_k_table(cfg.k, cfg.N + 1, 2 * cfg.N + cfg.h)
    result = delta_Nh(cfg.N, cfg.h, cfg.k, table, cfg.singular())
    return model_table("delta", [result], result)


def _window(cfg: RunConfig) -> int:
    return cfg.H if cfg.H is not None else cfg.h_rule().window(cfg.N)


def _cmd_avg_delta(cfg: RunConfig) -> Table:
    H = _window(cfg)
    table = d_k_table(cfg.k, cfg.N + 1, 2 * cfg.N + H)
    parts = averaged_delta_parts(cfg.N, H, cfg.k, table, cfg.singular())
    columns = list(type(parts).model_fields) + ["delta"]
    row = [getattr(parts, c) for c in columns]
    return _one_row("avg-delta", cfg, columns, row)


def _cmd_decompose(cfg: RunConfig) -> Table:
    H = _window(cfg)
    table = d_k_table(cfg.k, 1, 2 * cfg.N + H)
    dec = decompose_check(cfg.N, H, cfg.k, table)
    columns = list(type(dec).model_fields) + ["relative_residual"]
    return _one_row("decompose", cfg, columns, [getattr(dec, c) for c in columns])


def _cmd_beta(cfg: RunConfig) -> Table:
    grid = geometric_grid(cfg.xmin, cfg.xmax, cfg.ratio)
    est = beta_estimate(cfg.k, grid, d_k_table(cfg.k, 1, grid[-1]))
    rows = [[X, ms] for X, ms in zip(est.X_grid, est.mean_square)]
    return Table("beta", ["X", "mean_square"], rows, est)


def _cmd_scan(cfg: RunConfig) -> Table:
    grid = geometric_grid(cfg.nmin, cfg.nmax, cfg.ratio)
    report = theorem_scan(cfg.k, grid, cfg.h_rules(), cfg.singular(), workers=cfg.workers, beta=cfg.beta)
    for fit in report.fitted_slopes:
        logger.info("growth slope for %s: %.4f ± %.4f", fit.h_rule, fit.slope, fit.stderr)
    return model_table("scan", report.rows, report)


def _cmd_average_check(cfg: RunConfig) -> Table:
    check = singular_average_check(cfg.k, cfg.N, cfg.H, cfg.singular())
    return model_table("average-check", [check], check)


def _cmd_split(cfg: RunConfig) -> Table:
    check = main_split_check(cfg.k, cfg.N, cfg.H)
    return model_table("split", [check], check)


COMMANDS = {
    "dk": _cmd_dk,
    "main-term": _cmd_main_term,
    "ramanujan": _cmd_ramanujan,
    "qpoly": _cmd_qpoly,
    "singular": _cmd_singular,
    "delta": _cmd_delta,
    "avg-delta": _cmd_avg_delta,
    "decompose": _cmd_decompose,
    "beta": _cmd_beta,
    "scan": _cmd_scan,
    "average-check": _cmd_average_check,
    "split": _cmd_split,
}


def _verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    results = run_checks(quick=args.quick)
    columns = ["check", "ok", "detail", "seconds"]
    rows = [[r.name, r.ok, r.detail, r.seconds] for r in results]
    payload = {"rows": [dict(zip(columns, row)) for row in rows]}
    write(Table("verify", columns, rows, payload), cfg.format, cfg.output)
    return 0 if all(r.ok for r in results) else 1


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _config(args)
        if args.command == "verify":
            return _verify(args, cfg)
        write(COMMANDS[args.command](cfg), cfg.format, cfg.output)
    except UsageError as exc:
        print(f"divisorlab {args.command}: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        print(f"divisorlab {args.command}: {_validation_message(exc)}", file=sys.stderr)
        return 2
    except DivisorLabError as exc:
        print(f"divisorlab {args.command}: {exc.detail}", file=sys.stderr)
        return 1
    except Exception:
        logger.exception("divisorlab %s failed", args.command)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
