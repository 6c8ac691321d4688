"""Truncated Laurent series at s = 1 in the variable t = s - 1, and residue-defined
polynomials in L = log x.

A LaurentSeries with pole order m stores c_{-m}, ..., c_{T-m}; coefficients above t^{T-m}
are unknown rather than zero, and no operation reads past them.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, log
from typing import Callable, Optional

import mpmath
import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .arith import K_MAX
from .errors import DomainError, NumericError, SingularityError
from .utils import log_power_antiderivative

logger = logging.getLogger("divisorlab")

# γ_0 .. γ_10, twenty significant digits.
STIELTJES_GAMMA = (
    0.57721566490153286061,
    -0.072815845483676724861,
    -0.0096903631928723184845,
    0.0020538344203033458662,
    0.0023253700654673000076,
    0.00079332381730106270175,
    -0.00023876934543019960987,
    -0.00052728956705775104607,
    -0.00035212335380303950960,
    -0.000034394774418088048178,
    0.00020533281490906479468,
)

CONTOUR_RADIUS = 0.125
CONTOUR_TOL = 1e-9
CONTOUR_MAX_NODES = 1 << 16
ETA_TERMS = 40


class StieltjesConstants(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: tuple[float, ...] = Field(STIELTJES_GAMMA, min_length=1)

    @property
    def max_index(self) -> int:
        return len(self.gamma) - 1


DEFAULT_STIELTJES = StieltjesConstants()


@dataclass(frozen=True)
class LaurentSeries:
    pole_order: int
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 1 or len(c) == 0:
            raise DomainError("a series needs at least one coefficient")
        m = int(self.pole_order)
        if m < 0:
            raise DomainError("pole order must be nonnegative")
        while m > 0 and c[0] == 0.0 and len(c) > 1:
            c = c[1:]
            m -= 1
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "pole_order", m)

    @property
    def trunc_order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def max_power(self) -> int:
        return self.trunc_order - self.pole_order

    def coefficient(self, j: int) -> float:
        if j > self.max_power:
            raise DomainError(f"t^{j} lies beyond the truncation t^{self.max_power}")
        if j < -self.pole_order:
            return 0.0
        return float(self.coeffs[j + self.pole_order])

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def evaluate(self, t):
        t = np.asarray(t, dtype=np.complex128)
        acc = np.zeros_like(t)
        for c in self.coeffs[::-1]:
            acc = acc * t + c
        return acc * t ** (-self.pole_order)

    def __neg__(self) -> "LaurentSeries":
        return LaurentSeries(self.pole_order, -self.coeffs)

    def __add__(self, other) -> "LaurentSeries":
        if not isinstance(other, LaurentSeries):
            other = constant(float(other), self.max_power)
        return series_add(self, other)

    __radd__ = __add__

    def __sub__(self, other) -> "LaurentSeries":
        return self + (-other if isinstance(other, LaurentSeries) else -float(other))

    def __mul__(self, other) -> "LaurentSeries":
        if isinstance(other, LaurentSeries):
            return series_mul(self, other)
        return LaurentSeries(self.pole_order, self.coeffs * float(other))

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentSeries":
        return series_pow(self, n)


def constant(c: float, order: int) -> LaurentSeries:
    out = np.zeros(max(order, 0) + 1)
    out[0] = c
    return LaurentSeries(0, out)


def monomial(j: int, order: int) -> LaurentSeries:
    """t^j known through t^order (j >= 0)."""
    out = np.zeros(max(order, j) + 1)
    out[j] = 1.0
    return LaurentSeries(0, out)


def series_add(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    m = max(a.pole_order, b.pole_order)
    top = min(a.max_power, b.max_power)
    out = np.zeros(top + m + 1)
    for s in (a, b):
        used = top + s.pole_order + 1
        if used > 0:
            start = m - s.pole_order
            out[start:start + used] += s.coeffs[:used]
    return LaurentSeries(m, out)


def series_mul(a: LaurentSeries, b: LaurentSeries) -> LaurentSeries:
    order = min(a.trunc_order, b.trunc_order)
    prod = np.convolve(a.coeffs[:order + 1], b.coeffs[:order + 1])[:order + 1]
    return LaurentSeries(a.pole_order + b.pole_order, prod)


def _invert_unit(u: np.ndarray) -> np.ndarray:
    out = np.zeros(len(u))
    out[0] = 1.0 / u[0]
    for n in range(1, len(u)):
        out[n] = -np.dot(u[1:n + 1], out[n - 1::-1][:n]) / u[0]
    return out


def series_inv(a: LaurentSeries) -> LaurentSeries:
    if a.is_zero():
        raise SingularityError("cannot invert the zero series")
    if a.pole_order > 0:
        inv = _invert_unit(a.coeffs)
        return LaurentSeries(0, np.concatenate([np.zeros(a.pole_order), inv]))
    r = int(np.flatnonzero(a.coeffs)[0])
    if r == 0:
        return LaurentSeries(0, _invert_unit(a.coeffs))
    # a = t^r u with u known through t^(T-r); 1/a has a pole of order r
    return LaurentSeries(r, _invert_unit(a.coeffs[r:]))


def series_pow(a: LaurentSeries, n: int) -> LaurentSeries:
    if n < 0:
        return series_pow(series_inv(a), -n)
    result = constant(1.0, a.trunc_order)
    base = a
    while n:
        if n & 1:
            result = series_mul(result, base)
        n >>= 1
        if n:
            base = series_mul(base, base)
    return result


def exp_log_series(L: float, T: int) -> LaurentSeries:
    """x^(s-1) = exp(t L) as a Taylor series through t^T."""
    if T < 0:
        raise DomainError("truncation order must be nonnegative")
    coeffs = np.empty(T + 1)
    term = 1.0
    for n in range(T + 1):
        coeffs[n] = term
        term *= L / (n + 1)
    return LaurentSeries(0, coeffs)


def default_order(k: int, g: StieltjesConstants = DEFAULT_STIELTJES) -> int:
    return min(k + 4, g.max_index + 1)


def zeta_series(k: int, T: Optional[int] = None, g: StieltjesConstants = DEFAULT_STIELTJES) -> LaurentSeries:
    """ζ(s)^k around s = 1, pole order k, built from the Stieltjes expansion of ζ."""
    if k < 1:
        raise DomainError(f"k must be at least 1, got {k}")
    if T is None:
        T = default_order(k, g)
    if T - 1 > g.max_index:
        raise DomainError(f"truncation order {T} needs γ_{T - 1}, table ends at γ_{g.max_index}")
    if T < k - 1:
        raise DomainError(f"truncation order {T} cannot reach the residue of a pole of order {k}")
    coeffs = np.empty(T + 1)
    coeffs[0] = 1.0
    for n in range(T):
        coeffs[n + 1] = (-1) ** n * g.gamma[n] / factorial(n)
    return series_pow(LaurentSeries(1, coeffs), k)


def residue(a: LaurentSeries) -> float:
    if a.pole_order == 0:
        return 0.0
    if a.max_power < -1:
        raise DomainError("truncation window does not reach t^-1")
    return float(a.coeffs[a.pole_order - 1])


@dataclass(frozen=True)
class LogPolynomial:
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))
        nz = np.flatnonzero(c)
        c = c[:nz[-1] + 1] if len(nz) else np.zeros(1)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, L):
        acc = np.zeros_like(np.asarray(L, dtype=np.float64))
        for a in self.coeffs[::-1]:
            acc = acc * L + a
        return float(acc) if acc.ndim == 0 else acc

    def at(self, x):
        """P(log x)."""
        return self(np.log(x))

    def x_times(self, x):
        """x P(log x)."""
        return x * self(np.log(x))

    def __add__(self, other: "LogPolynomial") -> "LogPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        out = np.zeros(n)
        out[:len(self.coeffs)] += self.coeffs
        out[:len(other.coeffs)] += other.coeffs
        return LogPolynomial(out)

    def __sub__(self, other: "LogPolynomial") -> "LogPolynomial":
        return self + other.scale(-1.0)

    def __mul__(self, other) -> "LogPolynomial":
        if isinstance(other, LogPolynomial):
            return LogPolynomial(np.convolve(self.coeffs, other.coeffs))
        return self.scale(float(other))

    __rmul__ = __mul__

    def scale(self, c: float) -> "LogPolynomial":
        return LogPolynomial(self.coeffs * c)

    def square(self) -> "LogPolynomial":
        return self * self

    def derivative(self) -> "LogPolynomial":
        if self.degree == 0:
            return LogPolynomial(np.zeros(1))
        return LogPolynomial(self.coeffs[1:] * np.arange(1, len(self.coeffs)))

    def antiderivative(self) -> "LogPolynomial":
        """R with  ∫ P(log x) dx = x R(log x)."""
        out = np.zeros(len(self.coeffs))
        for j, a in enumerate(self.coeffs):
            if a:
                out[:j + 1] += a * log_power_antiderivative(j)
        return LogPolynomial(out)

    def integrate(self, a: float, b: float) -> float:
        """∫_a^b P(log x) dx in closed form."""
        r = self.antiderivative()
        return float(r.x_times(b) - r.x_times(a))

    def descending(self) -> list[float]:
        return [float(c) for c in self.coeffs[::-1]]


def residue_polynomial(F: LaurentSeries, shift: float = 0.0) -> LogPolynomial:
    """Res_{t=0} F(t) exp(t (L + shift)) as a polynomial in L.

    L is carried as a second variable: the coefficient of L^j is the residue of
    F(t) exp(t shift) t^j / j!, i.e. the t^(-1-j) coefficient of F(t) exp(t shift) over j!.
    """
    if F.pole_order == 0:
        return LogPolynomial(np.zeros(1))
    G = F * exp_log_series(shift, F.trunc_order) if shift else F
    coeffs = np.array([G.coefficient(-1 - j) / factorial(j) for j in range(F.pole_order)])
    return LogPolynomial(coeffs)


def _check_k(k: int) -> None:
    if not 1 <= k <= K_MAX:
        raise DomainError(f"k must lie in [1, {K_MAX}], got {k}")


@lru_cache(maxsize=None)
def main_term_polynomial(k: int) -> LogPolynomial:
    """p_{k-1}(L) = Res ζ(s)^k x^(s-1) / s."""
    _check_k(k)
    z = zeta_series(k)
    inv_s = series_inv(LaurentSeries(0, np.concatenate([[1.0, 1.0], np.zeros(z.trunc_order - 1)])))
    return residue_polynomial(z * inv_s)


@lru_cache(maxsize=None)
def zeta_residue_polynomial(k: int) -> LogPolynomial:
    """Res ζ(s)^k x^(s-1), the derivative of x p_{k-1}(log x)."""
    _check_k(k)
    return residue_polynomial(zeta_series(k))


def window_main_term(x, H, k: int):
    """u_k(x) = y p_{k-1}(log y) evaluated between x and x + H."""
    p = main_term_polynomial(k)
    if np.isscalar(H) and H == 0:
        return 0.0 if np.isscalar(x) else np.zeros(np.shape(x))
    return p.x_times(x + H) - p.x_times(x)


def window_main_term_derivative(x, H, k: int):
    r = zeta_residue_polynomial(k)
    return r.at(x + H) - r.at(x)


@lru_cache(maxsize=4)
def _eta_weights(n: int) -> np.ndarray:
    with mpmath.workdps(60):
        d = []
        acc = mpmath.mpf(0)
        for i in range(n + 1):
            acc += mpmath.factorial(n + i - 1) * mpmath.mpf(4) ** i / (mpmath.factorial(n - i) * mpmath.factorial(2 * i))
            d.append(n * acc)
        dn = d[n]
        return np.array([float((-1) ** j * (d[j] - dn) / dn) for j in range(n)])


def zeta(s, terms: int = ETA_TERMS):
    """ζ(s) for complex s with Re s > 0 through the accelerated alternating series."""
    s = np.asarray(s, dtype=np.complex128)
    w = _eta_weights(terms)
    logs = np.log(np.arange(1, terms + 1, dtype=np.float64))
    powers = np.exp(-np.multiply.outer(s, logs))
    eta = -(powers @ w)
    return eta / (1.0 - np.exp((1.0 - s) * log(2.0)))


def contour_residue_oracle(
    build: Callable[[np.ndarray], np.ndarray],
    radius: float = CONTOUR_RADIUS,
    tol: float = CONTOUR_TOL,
) -> float:
    """(1/2πi) ∮_{|s-1|=radius} build(s) ds by the trapezoidal rule, doubling nodes to convergence."""
    if not 0.0 < radius <= 0.5:
        raise DomainError(f"contour radius must lie in (0, 1/2], got {radius}")
    nodes = 16
    previous = None
    while nodes <= CONTOUR_MAX_NODES:
        theta = 2.0 * np.pi * np.arange(nodes) / nodes
        w = radius * np.exp(1j * theta)
        vals = np.asarray(build(1.0 + w)) * w
        current = complex(vals.mean())
        if previous is not None:
            floor = 1e-14 * float(np.abs(vals).mean())
            if abs(current - previous) <= max(tol * abs(current), floor):
                return current.real
        previous = current
        nodes *= 2
    raise NumericError(f"contour quadrature did not converge with {CONTOUR_MAX_NODES} nodes")


def zeta_power_integrand(k: int, x: float = 1.0, divide_by_s: bool = False) -> Callable[[np.ndarray], np.ndarray]:
    """s -> ζ(s)^k x^(s-1) [/ s]."""
    L = log(x)

    def build(s):
        out = zeta(s) ** k * np.exp((s - 1.0) * L)
        return out / s if divide_by_s else out

    return build


def window_integrand(k: int, x: float, H: float) -> Callable[[np.ndarray], np.ndarray]:
    """s -> ζ(s)^k ((x+H)^s - x^s) / s."""

    def build(s):
        return zeta(s) ** k * (np.exp(s * log(x + H)) - np.exp(s * log(x))) / s

    return build


def _f_derivative_polys(n: int, count: int) -> list[list]:
    """P_j with d^j/dx^j (log x)^n / x = x^(-1-j) P_j(log x), j < count."""
    polys = [[mpmath.mpf(0)] * n + [mpmath.mpf(1)]]
    for j in range(count - 1):
        p = polys[-1]
        nxt = [-(1 + j) * c for c in p]
        for i in range(1, len(p)):
            nxt[i - 1] += i * p[i]
        polys.append(nxt)
    return polys


def stieltjes_oracle(n: int, m: int = 200, corrections: int = 12, dps: int = 40) -> float:
    """γ_n by Euler–Maclaurin summation of (log j)^n / j with a high-precision tail correction."""
    if n < 0:
        raise DomainError("Stieltjes index must be nonnegative")
    with mpmath.workdps(dps):
        logs = [mpmath.log(j) for j in range(1, m + 1)]
        head = mpmath.fsum(logs[j - 1] ** n / j for j in range(1, m))
        Lm = logs[-1]
        value = head + Lm**n / (2 * m) - Lm ** (n + 1) / (n + 1)
        polys = _f_derivative_polys(n, 2 * corrections)
        for r in range(1, corrections + 1):
            p = polys[2 * r - 1]
            deriv = mpmath.fsum(c * Lm**i for i, c in enumerate(p)) / mpmath.mpf(m) ** (2 * r)
            value -= mpmath.bernoulli(2 * r) / mpmath.factorial(2 * r) * deriv
        return float(value)
