"""Desk-scale experiments: log-log exponent fits, β_k estimates from the mean square of Δ_k,
scans of Σ_{h<=H} Δ_k(N;h) against the comparison envelopes, and finite-scale checks of the
averaged singular integral."""
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .arith import d_k_table
from .convolution import (
    averaged_delta_parts,
    decompose_check,
    main_term_square_integral,
    mean_square_delta,
    smooth_main_integral,
)
from .errors import DomainError, RankError
from .models import (
    BETA_K,
    MIN_SLOPE_POINTS,
    AverageCheck,
    BetaEstimate,
    ExponentFit,
    HRule,
    ScanConfigEcho,
    ScanReport,
    ScanRow,
    SingularSeriesConfig,
    SlopeFit,
    SplitCheck,
)
from .singular import BOUND_EPSILON, averaged_singular_integral, q_bound_ratio
from .utils import geometric_grid

logger = logging.getLogger("divisorlab")

TRIVIAL_EXPONENT = 1.05
DEFAULT_N_GRID = geometric_grid(2**14, 2**23)


class QGrowth(NamedTuple):
    ratio_small: float
    ratio_large: float
    allowed: float
    ok: bool


def fit_exponent(points: Sequence[tuple[float, float]]) -> ExponentFit:
    """Least squares of log y on log x."""
    if len(points) < 2:
        raise DomainError("an exponent fit needs at least two points")
    x = np.array([p[0] for p in points], dtype=np.float64)
    y = np.array([p[1] for p in points], dtype=np.float64)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("exponent fits need positive x and y")
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([np.ones_like(lx), lx])
    coef, _, rank, _ = np.linalg.lstsq(design, ly, rcond=None)
    if rank < 2:
        raise RankError("all x values coincide")
    intercept, slope = float(coef[0]), float(coef[1])
    if len(points) > 2:
        sxx = float(np.sum((lx - lx.mean()) ** 2))
        resid = ly - design @ coef
        stderr = float(np.sqrt(np.sum(resid**2) / (len(points) - 2) / sxx))
    else:
        stderr = float("nan")
    return ExponentFit(slope=slope, intercept=intercept, stderr=stderr)


def beta_floor(k: int) -> float:
    """(k-1)/(2k), the lower bound for β_k."""
    return (k - 1) / (2 * k)


def beta_estimate(k: int, X_grid: Sequence[int], table) -> BetaEstimate:
    """β̂ = (e - 1)/2 from ∫_1^X Δ_k^2 ≈ X^e."""
    X_grid = [int(X) for X in X_grid]
    if len(X_grid) < MIN_SLOPE_POINTS:
        raise DomainError(f"X grid needs at least {MIN_SLOPE_POINTS} points")
    if any(b <= a for a, b in zip(X_grid, X_grid[1:])):
        raise DomainError("X grid must be strictly increasing")
    started = time.perf_counter()
    ms = [mean_square_delta(X, k, table) for X in X_grid]
    logger.info("mean squares of Δ_%s on %s points in %.3fs", k, len(X_grid), time.perf_counter() - started)
    base = dict(k=k, X_grid=X_grid, mean_square=ms, floor=beta_floor(k))
    # Δ_1 is the sawtooth ⌊x⌋ - x and carries no arithmetic information
    if k == 1 or min(ms) <= 0.0:
        logger.warning("β_%s estimate is degenerate", k)
        return BetaEstimate(**base, degenerate=True)
    fit = fit_exponent(list(zip(X_grid, ms)))
    return BetaEstimate(**base, exponent=fit.slope, beta_hat=(fit.slope - 1) / 2, stderr=fit.stderr / 2)


def resolve_beta(k: int, beta: Optional[float] = None) -> float:
    if beta is not None:
        return beta
    if k not in BETA_K:
        raise DomainError(f"no default β_{k}; pass an explicit value")
    return BETA_K[k]


def envelope_row(k: int, N: int, H: int, beta: float, value: float) -> dict:
    """The comparison envelopes for one grid cell and the ratios of |value| to them."""
    trivial = H * N**TRIVIAL_EXPONENT
    square, power = float(H) ** 2, float(N) ** (1 + beta)
    theorem = square + power
    alpha = (1 + beta) / 2
    return dict(
        trivial_envelope=trivial,
        theorem_envelope=theorem,
        dominant="H^2" if square >= power else "N^(1+beta)",
        proof_envelope=square + H * N**alpha + power,
        ratio_trivial=abs(value) / trivial,
        ratio_theorem=abs(value) / theorem,
        conjecture_comparison_root=H * N**0.5,
        conjecture_comparison_k=H * N ** (1 - 1 / k),
        k3_comparison=square + H**0.5 * N ** (13 / 12) if k == 3 else None,
    )


def _scan_cell(job: tuple[int, int, int, float, SingularSeriesConfig, str]) -> ScanRow:
    k, N, H, beta, cfg, label = job
    started = time.perf_counter()
    table = d_k_table(k, 1, 2 * N + H)
    parts = averaged_delta_parts(N, H, k, table, cfg)
    dec = decompose_check(N, H, k, table)
    value = parts.delta
    row = ScanRow(
        h_rule=label,
        N=N,
        H=H,
        averaged_delta=value,
        double_sum=parts.double_sum,
        main_integral=parts.main_integral,
        tail_bound=parts.tail_bound,
        identity_residual=dec.relative_residual,
        **envelope_row(k, N, H, beta, value),
    )
    logger.info("scan cell k=%s N=%s H=%s done in %.2fs", k, N, H, time.perf_counter() - started)
    return row


def _run_jobs(jobs: list, workers: int) -> list[ScanRow]:
    if workers <= 1:
        return [_scan_cell(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_scan_cell, jobs))


def _fit_rule(label: str, rows: list[ScanRow]) -> Optional[SlopeFit]:
    values = [(row.N, abs(row.averaged_delta)) for row in rows]
    if len(rows) >= MIN_SLOPE_POINTS and all(v > 0 for _, v in values):
        fit = fit_exponent(values)
        return SlopeFit(h_rule=label, slope=fit.slope, stderr=fit.stderr)
    logger.warning("no growth slope for %s: %s rows, zero values present or too few rows", label, len(rows))
    return None


def theorem_scan(
    k: int,
    N_grid: Sequence[int],
    h_rules: Union[HRule, Sequence[HRule]],
    cfg: Optional[SingularSeriesConfig] = None,
    workers: int = 1,
    beta: Optional[float] = None,
) -> ScanReport:
    """Averaged delta over N_grid for every H-rule, with one fitted growth slope per rule."""
    cfg = cfg or SingularSeriesConfig()
    rules = [h_rules] if isinstance(h_rules, HRule) else list(h_rules)
    N_grid = [int(N) for N in N_grid]
    if not N_grid:
        raise DomainError("empty N grid")
    if not rules:
        raise DomainError("no H-rule given")
    if any(b <= a for a, b in zip(N_grid, N_grid[1:])):
        raise DomainError("N grid must be strictly increasing")
    if N_grid[0] < 2:
        raise DomainError("N must be at least 2")
    beta = resolve_beta(k, beta)
    for rule in rules:
        if rule.H is not None and rule.H > N_grid[0]:
            logger.warning("H=%s exceeds N on part of the grid; clamped to N there", rule.H)
    jobs = [(k, N, rule.window(N), beta, cfg, rule.label) for rule in rules for N in N_grid]
    rows = _run_jobs(jobs, workers)

    slopes = []
    for rule in rules:
        fit = _fit_rule(rule.label, [row for row in rows if row.h_rule == rule.label])
        if fit is not None:
            slopes.append(fit)

    echo = ScanConfigEcho(k=k, h_rules=[rule.label for rule in rules], beta=beta, N_grid=N_grid, singular=cfg)
    return ScanReport(
        k=k,
        config=echo,
        rows=rows,
        fitted_slopes=slopes,
        identity_residuals=[row.identity_residual for row in rows],
    )


def ratio_trend_ok(report: ScanReport, factor: float = 3.0) -> bool:
    """Per H-rule, the last-point ratio to the theorem envelope is at most factor times the first."""
    by_rule: dict[str, list[ScanRow]] = {}
    for row in report.rows:
        by_rule.setdefault(row.h_rule, []).append(row)
    return all(rows[-1].ratio_theorem <= factor * rows[0].ratio_theorem for rows in by_rule.values())


def singular_average_check(k: int, N: float, H: int, cfg: Optional[SingularSeriesConfig] = None) -> AverageCheck:
    """Σ_{h<=H} ∫ 𝔖_k(x,h) dx against H ∫ (Res ζ(s)^k x^(s-1))^2 dx."""
    cfg = cfg or SingularSeriesConfig()
    lhs = averaged_singular_integral(N, H, k, cfg)
    rhs = H * main_term_square_integral(N, k)
    return AverageCheck(
        k=k,
        N=int(N),
        H=H,
        lhs=lhs,
        rhs_main=rhs,
        discrepancy=abs(lhs - rhs),
        scale=float(N) ** TRIVIAL_EXPONENT,
    )


def main_split_check(k: int, N: float, H: int) -> SplitCheck:
    """∫ u_k(x) Res ζ(s)^k x^(s-1) dx against H ∫ (Res ζ(s)^k x^(s-1))^2 dx; they differ by O(H^2 N^ε)."""
    if H < 1:
        raise DomainError(f"H must be at least 1, got {H}")
    smooth = smooth_main_integral(N, H, k)
    split = H * main_term_square_integral(N, k)
    discrepancy = abs(smooth - split)
    return SplitCheck(
        k=k,
        N=int(N),
        H=H,
        smooth=smooth,
        split_main=split,
        discrepancy=discrepancy,
        discrepancy_over_H2=discrepancy / H**2,
    )


def q_growth_check(k: int, x: float, q_small: int, q_large: int, slack: float = 1.5) -> QGrowth:
    """Growth of max_q |Q_k(x,q)| / (q^ε (log x)^(k-1)) when q_max goes from q_small to q_large."""
    if not 1 <= q_small < q_large:
        raise DomainError("need 1 <= q_small < q_large")
    r1 = q_bound_ratio(x, k, q_small)
    r2 = q_bound_ratio(x, k, q_large)
    allowed = (q_large / q_small) ** BOUND_EPSILON * slack
    return QGrowth(r1, r2, allowed, r2 <= allowed * r1)
