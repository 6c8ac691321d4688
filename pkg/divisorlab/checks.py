"""Oracle and property suite run by `divisorlab verify` and verify_tables.py.

Each check returns (ok, detail); run_checks times them, logs the outcome and never stops at the
first failure.
"""
import logging
import time
from math import gcd
from typing import Callable, NamedTuple

import mpmath
import numpy as np

from .arith import d_k_naive_sum, d_k_point, d_k_table, primes_upto
from .convolution import (
    averaged_delta_naive,
    averaged_delta_parts,
    averaged_double_sum,
    decompose_check,
    hyperbola_summatory,
    mean_square_delta,
    shifted_convolution,
    shifted_convolution_naive,
)
from .experiments import beta_estimate, q_growth_check, ratio_trend_ok, singular_average_check, theorem_scan
from .laurent import (
    DEFAULT_STIELTJES,
    contour_residue_oracle,
    exp_log_series,
    main_term_polynomial,
    stieltjes_oracle,
    window_integrand,
    window_main_term,
    window_main_term_derivative,
    zeta_power_integrand,
)
from .models import HRule, SingularSeriesConfig
from .singular import (
    LocalFactorParams,
    local_factor,
    local_factor_direct,
    psi_de,
    psi_de_value,
    q_integrand,
    q_polynomial,
    ramanujan_c_direct,
    ramanujan_row,
    singular_series,
    singular_series_integral,
)
from .utils import geometric_grid

logger = logging.getLogger("divisorlab")


class CheckResult(NamedTuple):
    name: str
    ok: bool
    detail: str
    seconds: float


def check_main_term_constant(quick: bool) -> tuple[bool, str]:
    a0 = main_term_polynomial(2).coeffs[0]
    err = abs(a0 - (2 * DEFAULT_STIELTJES.gamma[0] - 1))
    return err < 1e-12, f"|a0 - (2γ0 - 1)| = {err:.3g}"


def check_main_term_oracle(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for k in range(1, 4 if quick else 7):
        for x in (10.0, 1e3, 1e6):
            exact = main_term_polynomial(k).at(x)
            oracle = contour_residue_oracle(zeta_power_integrand(k, x, divide_by_s=True))
            worst = max(worst, abs(exact - oracle) / abs(oracle))
    return worst <= 1e-8, f"max relative error {worst:.3g}"


def check_stieltjes(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for n, g in enumerate(DEFAULT_STIELTJES.gamma[:4 if quick else None]):
        worst = max(worst, abs(stieltjes_oracle(n) - g) / abs(g))
    return worst <= 1e-12, f"max relative error {worst:.3g}"


def check_exp_law(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for a, b in ((0.5, 1.25), (np.log(2.0), np.log(3.0)), (6.9, -2.3)):
        prod = exp_log_series(a, 12) * exp_log_series(b, 12)
        direct = exp_log_series(a + b, 12).coeffs
        worst = max(worst, float(np.max(np.abs(prod.coeffs - direct) / np.maximum(1.0, np.abs(direct)))))
    return worst <= 1e-12, f"max coefficient error {worst:.3g}"


def check_window_main_term(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for k, x, H in ((2, 100.0, 10.0), (3, 1e3, 50.0)):
        oracle = contour_residue_oracle(window_integrand(k, x, H))
        worst = max(worst, abs(window_main_term(x, H, k) - oracle) / abs(oracle))
    if worst > 1e-7:
        return False, f"contour oracle relative error {worst:.3g}"
    H = 10.0
    for k in range(1, 5):
        for x in (1e2, 1e3, 1e4):
            step = 1e-4 * x
            numeric = (window_main_term(x + step, H, k) - window_main_term(x - step, H, k)) / (2 * step)
            exact = window_main_term_derivative(x, H, k)
            if abs(exact - numeric) > 1e-6 * abs(numeric) + 1e-9:
                return False, f"u'_{k}({x:g}) = {exact:.10g}, central difference {numeric:.10g}"
    return True, f"contour relative error {worst:.3g}, derivative k <= 4"


def check_q_polynomial_oracle(quick: bool) -> tuple[bool, str]:
    x, worst = 1e3, 0.0
    for q in (2, 6, 12):
        for k in (3, 4):
            value = q_polynomial(q, k)(x)
            oracle = contour_residue_oracle(q_integrand(q, k, x))
            if abs(value - oracle) > 1e-7 * abs(oracle) + 1e-10 * np.log(x) ** (k - 1):
                return False, f"Q_{k}({x:g}, {q}) = {value:.10g}, contour {oracle:.10g}"
            worst = max(worst, abs(value - oracle) / max(abs(oracle), 1e-300))
    return True, f"max relative error {worst:.3g}"


def check_psi_values(quick: bool) -> tuple[bool, str]:
    t = 0.125 * np.exp(2j * np.pi * np.arange(12) / 12)
    worst = 0.0
    for d, e, q, k in ((6, 3, 12, 3), (2, 1, 8, 4), (30, 5, 30, 2), (1, 1, 9, 3)):
        series = psi_de(d, e, q, k, T=24).evaluate(t)
        direct = psi_de_value(d, e, q, k, 1.0 + t)
        worst = max(worst, float(np.max(np.abs(series - direct) / np.maximum(1e-6, np.abs(direct)))))
    return worst <= 1e-8, f"max relative error {worst:.3g}"


def check_singular_integral(quick: bool) -> tuple[bool, str]:
    cfg = SingularSeriesConfig(q_max=30 if quick else 100)
    N = 1e4
    exact = singular_series_integral(N, 1, 3, cfg)
    quadrature = float(mpmath.quad(lambda x: singular_series(float(x), 1, 3, cfg).value, [N, 1.5 * N, 2 * N]))
    rel = abs(exact - quadrature) / abs(quadrature)
    return rel <= 1e-8, f"relative error {rel:.3g} against adaptive quadrature"


def check_divisor_table(quick: bool) -> tuple[bool, str]:
    x = 300 if quick else 10**4
    for k in range(1, 7):
        table = d_k_table(k, 1, x)
        rng = np.random.default_rng(k)
        sample = rng.integers(1, x + 1, size=500 if quick else 5000)
        bad = [int(n) for n in sample if table.value(int(n)) != d_k_point(int(n), k)]
        if bad:
            return False, f"table/point mismatch for k={k} at n={bad[0]}"
    naive = d_k_naive_sum(x, 3)
    table_sum = d_k_table(3, 1, x).summatory(x)
    return naive == table_sum, f"D_3({x}) table {table_sum}, tuple count {naive}"


def check_ramanujan(quick: bool) -> tuple[bool, str]:
    limit = 100 if quick else 500
    hs = np.arange(1, limit + 1)
    rows = {q: ramanujan_row(q, hs) for q in range(1, limit + 1)}
    for q, row in rows.items():
        if q > 1 and int(row[:q].sum()) != 0:
            return False, f"Σ_h c_{q}(h) over a period is {int(row[:q].sum())}"
        if np.any(np.abs(row) > np.gcd(q, hs)):
            return False, f"|c_{q}(h)| exceeds gcd(h, q)"
        for h in range(1, limit + 1):
            if row[h - 1] != ramanujan_c_direct(q, h):
                return False, f"Hölder form differs from the divisor sum at q={q}, h={h}"
    for q1 in range(1, 40):
        for q2 in range(1, 40):
            if gcd(q1, q2) == 1 and q1 * q2 <= limit:
                if np.any(rows[q1 * q2] != rows[q1] * rows[q2]):
                    return False, f"multiplicativity fails for q1={q1}, q2={q2}"
    return True, f"q, h <= {limit}"


def check_local_factors(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    for p in primes_upto(13 if quick else 50).tolist():
        for a in range(6):
            for k in range(1, 7):
                params = LocalFactorParams(p=p, a=a, k=k, T=k + 4)
                closed = local_factor(params).coeffs
                direct = local_factor_direct(params).coeffs
                worst = max(worst, float(np.max(np.abs(closed - direct) / np.maximum(1.0, np.abs(direct)))))
    return worst <= 1e-12, f"max coefficient error {worst:.3g}"


def check_decomposition(quick: bool) -> tuple[bool, str]:
    worst = 0.0
    Ns = (100, 1000) if quick else (100, 1000, 10**4)
    for k in (2, 3, 4):
        table = d_k_table(k, 1, 2 * Ns[-1] + 100)
        for N in Ns:
            for H in (1, 10, 100):
                worst = max(worst, decompose_check(N, H, k, table).relative_residual)
    return worst <= 1e-6, f"max relative residual {worst:.3g}"


def check_naive_sums(quick: bool) -> tuple[bool, str]:
    for k in (2, 3):
        table = d_k_table(k, 1, 1100)
        for N in range(1, 501, 37 if quick else 1):
            for h in range(0, 21):
                if shifted_convolution(N, h, k, table) != shifted_convolution_naive(N, h, k, table):
                    return False, f"D_{k}({N},{h}) differs from the naive loop"
            for H in (1, 7, 20):
                naive = sum(shifted_convolution_naive(N, h, k, table) for h in range(1, H + 1))
                if averaged_double_sum(N, H, k, table) != naive:
                    return False, f"averaged sum differs at k={k}, N={N}, H={H}"
    return True, "N <= 500, h <= 20"


def check_hyperbola(quick: bool) -> tuple[bool, str]:
    x = 10**4 if quick else 10**6
    table = d_k_table(2, 1, x)
    for n in [*range(1, 300), *np.random.default_rng(2).integers(300, x + 1, size=50).tolist(), x]:
        if table.summatory(n) != hyperbola_summatory(n):
            return False, f"D_2({n}) table {table.summatory(n)}, hyperbola {hyperbola_summatory(n)}"
    return True, f"x <= {x}"


def check_mean_square(quick: bool) -> tuple[bool, str]:
    X, per_unit = (300, 100) if quick else (1000, 100)
    table = d_k_table(2, 1, X)
    p = main_term_polynomial(2)
    n = np.repeat(np.arange(1, X, dtype=np.float64), per_unit)
    t = n + (np.tile(np.arange(per_unit), X - 1) + 0.5) / per_unit
    D = table.prefix[n.astype(np.int64)].astype(np.float64)
    riemann = float(np.sum((D - p.x_times(t)) ** 2)) / per_unit
    rel = abs(mean_square_delta(X, 2, table) - riemann) / riemann
    return rel <= 1e-4, f"relative difference {rel:.3g} from the midpoint sum at X={X}"


def check_averaged_delta(quick: bool) -> tuple[bool, str]:
    N, H = (300, 10) if quick else (1000, 30)
    cfg = SingularSeriesConfig(q_max=50)
    table = d_k_table(3, 1, 2 * N + H)
    parts = averaged_delta_parts(N, H, 3, table, cfg)
    naive = averaged_delta_naive(N, H, 3, table, cfg)
    diff = abs(parts.delta - naive)
    return diff <= 1e-6 * abs(naive) + 1e-9 * parts.double_sum, f"difference {diff:.3g} at N={N}, H={H}"


def check_singular_average(quick: bool) -> tuple[bool, str]:
    exact = singular_average_check(3, 10**4, 100, SingularSeriesConfig(q_max=1))
    if exact.discrepancy != 0.0:
        return False, f"q_max = 1 discrepancy {exact.discrepancy}"
    N, H = (10**4, 100) if quick else (10**5, 1000)
    full = singular_average_check(3, N, H, SingularSeriesConfig(q_max=1000))
    rel = full.discrepancy / full.rhs_main
    return rel < 0.05, f"relative discrepancy {rel:.3g} at N={N}, H={H}"


def check_series_convergence(quick: bool) -> tuple[bool, str]:
    q1 = 200 if quick else 1000
    small = singular_series(1e6, 1, 3, SingularSeriesConfig(q_max=q1))
    large = singular_series(1e6, 1, 3, SingularSeriesConfig(q_max=2 * q1))
    change = abs(large.value - small.value)
    return change <= small.tail_bound, f"change {change:.3g}, tail bound {small.tail_bound:.3g}"


def check_q_growth(quick: bool) -> tuple[bool, str]:
    q1 = 500 if quick else 10**4
    for k in (3, 4):
        for x in (1e3, 1e6):
            g = q_growth_check(k, x, q1, 2 * q1)
            if not g.ok:
                return False, f"k={k}, x={x:g}: ratio {g.ratio_small:.4g} -> {g.ratio_large:.4g}"
    return True, f"q_max {q1} -> {2 * q1}"


def check_beta2(quick: bool) -> tuple[bool, str]:
    top = 10**5 if quick else 10**6
    grid = geometric_grid(10**4, top)
    est = beta_estimate(2, grid, d_k_table(2, 1, top))
    return 0.17 <= est.beta_hat <= 0.33, f"β̂_2 = {est.beta_hat:.4f} ± {est.stderr:.2g}"


def check_theorem_trend(quick: bool) -> tuple[bool, str]:
    grid = geometric_grid(2**12, 2**16) if quick else geometric_grid(2**14, 2**23)
    report = theorem_scan(3, grid, HRule(theta=0.7), workers=1 if quick else 8)
    first, last = report.rows[0].ratio_theorem, report.rows[-1].ratio_theorem
    slope = report.fitted_slopes[0].slope if report.fitted_slopes else float("nan")
    # growth of the averaged delta stays under the larger of the two theorem exponents
    slope_ok = slope <= max(2 * 0.7, 4 / 3) + 0.15
    return ratio_trend_ok(report) and slope_ok, f"ratio {first:.3g} -> {last:.3g}, slope {slope:.3f}"


def check_determinism(quick: bool) -> tuple[bool, str]:
    grid = geometric_grid(2**10, 2**13)
    cfg = SingularSeriesConfig(q_max=100)
    dumps = {w: theorem_scan(3, grid, HRule(theta=0.5), cfg, workers=w).model_dump_json() for w in (1, 2, 8)}
    return dumps[1] == dumps[2] == dumps[8], "worker counts 1, 2 and 8"


CHECKS: list[tuple[str, Callable[[bool], tuple[bool, str]]]] = [
    ("main-term constant", check_main_term_constant),
    ("main-term contour oracle", check_main_term_oracle),
    ("window main term", check_window_main_term),
    ("exponential law", check_exp_law),
    ("stieltjes constants", check_stieltjes),
    ("divisor table", check_divisor_table),
    ("ramanujan identities", check_ramanujan),
    ("local factors", check_local_factors),
    ("psi pointwise values", check_psi_values),
    ("Q contour oracle", check_q_polynomial_oracle),
    ("singular integral quadrature", check_singular_integral),
    ("hyperbola summatory", check_hyperbola),
    ("mean square midpoint sum", check_mean_square),
    ("decomposition identity", check_decomposition),
    ("naive double sums", check_naive_sums),
    ("averaged delta naive loop", check_averaged_delta),
    ("singular average", check_singular_average),
    ("series convergence", check_series_convergence),
    ("Q bound growth", check_q_growth),
    ("beta_2 recovery", check_beta2),
    ("theorem trend", check_theorem_trend),
    ("determinism", check_determinism),
]


def run_checks(quick: bool = False) -> list[CheckResult]:
    results = []
    for name, check in CHECKS:
        started = time.perf_counter()
        try:
            ok, detail = check(quick)
        except Exception as exc:
            logger.exception("check %s raised", name)
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - started
        (logger.info if ok else logger.warning)("%s: %s (%s, %.2fs)", name, "ok" if ok else "FAILED", detail, elapsed)
        results.append(CheckResult(name, ok, detail, elapsed))
    return results
