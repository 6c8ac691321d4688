"""Exact summatory objects: D_k(x), Δ_k(x), the shifted convolution D_k(N,h) and its error term,
the h-averaged sums with their decomposition, and mean-square integrals of Δ_k."""
import logging
import time
from math import isqrt
from typing import NamedTuple, Optional

import numpy as np

from .arith import DivisorTable
from .errors import DivisorOverflowError, DomainError
from .laurent import main_term_polynomial, window_main_term, zeta_residue_polynomial
from .models import AveragedParts, Decomposition, ShiftedSumResult, SingularSeriesConfig, SummatoryPoint
from .singular import (
    averaged_singular_integral,
    averaged_singular_integral_tail,
    main_square_integral,
    singular_series_integral,
    singular_series_integral_tail,
)
from .utils import U64_MAX, exact_dot, exact_sum, gauss_legendre, pairwise_sum

logger = logging.getLogger("divisorlab")

QUADRATURE_NODES = 4
SMOOTH_PANELS = 256
SMOOTH_NODES = 8


class RemainderEnvelope(NamedTuple):
    r_term: float
    envelope: float


def _require(table: DivisorTable, k: int, a: int, b: int) -> None:
    if table.k != k:
        raise DomainError(f"table holds d_{table.k}, not d_{k}")
    if not table.covers(a, b):
        raise DomainError(f"table [{table.lo}, {table.hi}] does not cover [{a}, {b}]")


def _require_prefix(table: DivisorTable, k: int, hi: int) -> None:
    _require(table, k, 1, hi)
    if table.lo != 1:
        raise DomainError("summatory values need a table starting at 1")


def _summatory_floats(table: DivisorTable, lo: int, hi: int) -> np.ndarray:
    """D_k(m) as floats for lo <= m <= hi."""
    return table.prefix[lo:hi + 1].astype(np.float64)


def _delta_values(table: DivisorTable, k: int, lo: int, hi: int) -> np.ndarray:
    """Δ_k(m) for integers lo <= m <= hi."""
    m = np.arange(lo, hi + 1, dtype=np.float64)
    return _summatory_floats(table, lo, hi) - main_term_polynomial(k).x_times(m)


def divisor_summatory(x: int, k: int, table: DivisorTable) -> SummatoryPoint:
    if x < 1:
        raise DomainError(f"x must be at least 1, got {x}")
    _require_prefix(table, k, x)
    D = table.summatory(x)
    main = float(main_term_polynomial(k).x_times(float(x)))
    return SummatoryPoint(x=x, D=D, main=main, delta=float(D) - main)


def hyperbola_summatory(x: int) -> int:
    """Σ_{n<=x} d(n) by the Dirichlet hyperbola method."""
    if x < 1:
        return 0
    r = isqrt(x)
    return 2 * sum(x // d for d in range(1, r + 1)) - r * r


def shifted_convolution(N: int, h: int, k: int, table: DivisorTable) -> int:
    """Σ_{N<n<=2N} d_k(n) d_k(n+h), exactly."""
    if N < 1 or h < 0:
        raise DomainError(f"need N >= 1 and h >= 0, got N={N}, h={h}")
    _require(table, k, N + 1, 2 * N + h)
    return exact_dot(table.window(N + 1, 2 * N), table.window(N + 1 + h, 2 * N + h))


def shifted_convolution_naive(N: int, h: int, k: int, table: DivisorTable) -> int:
    _require(table, k, N + 1, 2 * N + h)
    return sum(table.value(n) * table.value(n + h) for n in range(N + 1, 2 * N + 1))


def delta_Nh(N: int, h: int, k: int, table: DivisorTable, cfg: Optional[SingularSeriesConfig] = None) -> ShiftedSumResult:
    cfg = cfg or SingularSeriesConfig()
    if h < 1:
        raise DomainError(f"h must be at least 1, got {h}")
    D = shifted_convolution(N, h, k, table)
    main = singular_series_integral(N, h, k, cfg)
    return ShiftedSumResult(
        N=N,
        h=h,
        k=k,
        D_Nh=D,
        main_integral=main,
        delta_Nh=float(D) - main,
        tail_bound=singular_series_integral_tail(N, h, k, cfg),
    )


def window_increments(N: int, H: int, table: DivisorTable) -> np.ndarray:
    """D_k(n+H) - D_k(n) = Σ_{n<m<=n+H} d_k(m) for N < n <= 2N, from a local cumulative sum."""
    vals = table.window(N + 1, 2 * N + H)
    if exact_sum(vals) > int(U64_MAX):
        raise DivisorOverflowError(detail=f"window sums of d_{table.k} overflow 64 bits on [{N + 1}, {2 * N + H}]")
    c = np.zeros(len(vals) + 1, dtype=np.uint64)
    np.cumsum(vals, dtype=np.uint64, out=c[1:])
    return c[H + 1:H + N + 1] - c[1:N + 1]


def averaged_double_sum(N: int, H: int, k: int, table: DivisorTable) -> int:
    """Σ_{h<=H} D_k(N,h) = Σ_{N<n<=2N} d_k(n) (D_k(n+H) - D_k(n)) in one pass."""
    if N < 1 or H < 0:
        raise DomainError(f"need N >= 1 and H >= 0, got N={N}, H={H}")
    _require(table, k, N + 1, 2 * N + H)
    if H == 0:
        return 0
    return exact_dot(table.window(N + 1, 2 * N), window_increments(N, H, table))


def averaged_delta_parts(
    N: int, H: int, k: int, table: DivisorTable, cfg: Optional[SingularSeriesConfig] = None
) -> AveragedParts:
    cfg = cfg or SingularSeriesConfig()
    if not 1 <= H <= N:
        raise DomainError(f"need 1 <= H <= N, got H={H}, N={N}")
    started = time.perf_counter()
    double_sum = averaged_double_sum(N, H, k, table)
    main = averaged_singular_integral(N, H, k, cfg)
    tail = averaged_singular_integral_tail(N, H, k, cfg)
    logger.debug("averaged delta N=%s H=%s k=%s in %.3fs", N, H, k, time.perf_counter() - started)
    return AveragedParts(N=N, H=H, k=k, double_sum=double_sum, main_integral=main, tail_bound=tail)


def averaged_delta(N: int, H: int, k: int, table: DivisorTable, cfg: Optional[SingularSeriesConfig] = None) -> float:
    """Σ_{h<=H} Δ_k(N;h)."""
    return averaged_delta_parts(N, H, k, table, cfg).delta


def averaged_delta_naive(N: int, H: int, k: int, table: DivisorTable, cfg: Optional[SingularSeriesConfig] = None) -> float:
    """The same sum, one delta_Nh per h."""
    return pairwise_sum([delta_Nh(N, h, k, table, cfg).delta_Nh for h in range(1, H + 1)])


def decompose_check(N: int, H: int, k: int, table: DivisorTable) -> Decomposition:
    """M_k(N,H) + R_k(N,H) against the exact Σ_{N<n<=2N} d_k(n)(D_k(n+H) - D_k(n))."""
    if N < 1 or H < 0:
        raise DomainError(f"need N >= 1 and H >= 0, got N={N}, H={H}")
    _require_prefix(table, k, 2 * N + H)
    lhs = averaged_double_sum(N, H, k, table)
    if H == 0:
        return Decomposition(N=N, H=H, k=k, lhs=lhs, m_term=0.0, r_term=0.0, residual=0.0)
    d = table.window(N + 1, 2 * N).astype(np.float64)
    n = np.arange(N + 1, 2 * N + 1, dtype=np.float64)
    m_term = pairwise_sum(d * window_main_term(n, H, k))
    delta = _delta_values(table, k, N + 1, 2 * N + H)
    r_term = pairwise_sum(d * (delta[H:H + N] - delta[:N]))
    residual = abs(m_term + r_term - float(lhs))
    return Decomposition(N=N, H=H, k=k, lhs=lhs, m_term=m_term, r_term=r_term, residual=residual)


def remainder_envelope(N: int, H: int, k: int, table: DivisorTable) -> RemainderEnvelope:
    """|R_k(N,H)| next to its Cauchy–Schwarz envelope (Σ d_k(n)^2)^(1/2) (Σ (Δ_k(n+H) - Δ_k(n))^2)^(1/2)."""
    if not 1 <= H <= N:
        raise DomainError(f"need 1 <= H <= N, got H={H}, N={N}")
    _require_prefix(table, k, 2 * N + H)
    d = table.window(N + 1, 2 * N).astype(np.float64)
    delta = _delta_values(table, k, N + 1, 2 * N + H)
    diff = delta[H:H + N] - delta[:N]
    r_term = pairwise_sum(d * diff)
    envelope = float(np.sqrt(pairwise_sum(d * d)) * np.sqrt(pairwise_sum(diff * diff)))
    return RemainderEnvelope(abs(r_term), envelope)


def main_term_square_integral(N: float, k: int) -> float:
    """∫_N^{2N} (Res ζ(s)^k x^(s-1))^2 dx."""
    return main_square_integral(N, k)


def _unit_interval_integrals(table: DivisorTable, k: int, lo: int, hi: int, power: int) -> np.ndarray:
    """∫_n^{n+1} |Δ_k(t)|^power dt for lo <= n < hi by Gauss–Legendre on each unit interval."""
    u, w = gauss_legendre(QUADRATURE_NODES)
    n = np.arange(lo, hi, dtype=np.float64)
    D = _summatory_floats(table, lo, hi - 1)
    t = n[:, None] + u[None, :]
    vals = D[:, None] - main_term_polynomial(k).x_times(t)
    vals = vals * vals if power == 2 else np.abs(vals)
    return vals @ w


def _check_X(X: int, k: int, table: DivisorTable) -> None:
    if X < 1:
        raise DomainError(f"X must be at least 1, got {X}")
    _require_prefix(table, k, X)


def mean_square_delta(X: int, k: int, table: DivisorTable) -> float:
    """∫_1^X Δ_k(t)^2 dt."""
    _check_X(X, k, table)
    if X == 1:
        return 0.0
    return pairwise_sum(_unit_interval_integrals(table, k, 1, X, 2))


def mean_abs_delta(X: int, k: int, table: DivisorTable) -> float:
    """∫_1^X |Δ_k(t)| dt."""
    _check_X(X, k, table)
    if X == 1:
        return 0.0
    return pairwise_sum(_unit_interval_integrals(table, k, 1, X, 1))


def averaging_diagnostic(x: int, H: int, k: int, table: DivisorTable) -> float:
    """|Δ_k(x) - (1/H) ∫_x^{x+H} Δ_k(y) dy| / H."""
    if x < 1 or H < 1:
        raise DomainError(f"need x >= 1 and H >= 1, got x={x}, H={H}")
    _require_prefix(table, k, x + H)
    u, w = gauss_legendre(QUADRATURE_NODES)
    n = np.arange(x, x + H, dtype=np.float64)
    D = _summatory_floats(table, x, x + H - 1)
    vals = D[:, None] - main_term_polynomial(k).x_times(n[:, None] + u[None, :])
    mean = pairwise_sum(vals @ w) / H
    point = float(table.summatory(x)) - float(main_term_polynomial(k).x_times(float(x)))
    return abs(point - mean) / H


def smooth_main_integral(N: float, H: int, k: int) -> float:
    """∫_N^{2N} u_k(x) Res ζ(s)^k x^(s-1) dx by composite Gauss–Legendre quadrature."""
    if N < 2 or H < 0:
        raise DomainError(f"need N >= 2 and H >= 0, got N={N}, H={H}")
    u, w = gauss_legendre(SMOOTH_NODES)
    width = float(N) / SMOOTH_PANELS
    x = N + width * (np.arange(SMOOTH_PANELS, dtype=np.float64)[:, None] + u[None, :])
    f = window_main_term(x, H, k) * zeta_residue_polynomial(k).at(x)
    return width * pairwise_sum((f @ w).ravel())
