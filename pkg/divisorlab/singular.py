"""Ramanujan sums, local Euler factors, Ψ_{d,e}, the polynomials Q_k(x,q) and the
truncated singular series with its closed-form x-integrals."""
import logging
import threading
from dataclasses import dataclass
from functools import lru_cache
from math import comb, gcd, log
from typing import NamedTuple, Optional

import mpmath
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .arith import K_MAX, d_k_prime_power, divisors, euler_phi, factor_int, is_prime, mobius, mobius_table, phi_table
from .errors import DomainError
from .laurent import LaurentSeries, LogPolynomial, default_order, residue_polynomial, zeta, zeta_series
from .models import SingularSeriesConfig
from .utils import log_power_antiderivative, pairwise_sum

logger = logging.getLogger("divisorlab")

BOUND_EPSILON = 0.1
BOUND_SAFETY = 2.0
# Σ_{m>=1} m^-1.8 = ζ(1.8) < 2.25
_ZETA_1_8_BOUND = 2.25


class SeriesValue(NamedTuple):
    value: float
    tail_bound: float


class LocalFactorParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=2)
    a: int = Field(ge=0)
    k: int = Field(ge=1, le=K_MAX)
    T: int = Field(ge=0)

    @field_validator("p")
    @classmethod
    def check_prime(cls, p: int) -> int:
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        return p


@dataclass(frozen=True)
class QPolynomial:
    q: int
    k: int
    poly: LogPolynomial

    @property
    def degree(self) -> int:
        return self.poly.degree

    def __call__(self, x):
        return self.poly.at(x)


def _check_qh(q: int, h: int) -> None:
    if q < 1:
        raise DomainError(f"q must be at least 1, got {q}")
    if h < 1:
        raise DomainError(f"h must be at least 1, got {h}")


def ramanujan_c(q: int, h: int) -> int:
    _check_qh(q, h)
    g = gcd(q, h)
    return mobius(q // g) * euler_phi(q) // euler_phi(q // g)


def ramanujan_c_direct(q: int, h: int) -> int:
    _check_qh(q, h)
    return sum(d * mobius(q // d) for d in divisors(gcd(q, h)))


@lru_cache(maxsize=8)
def _mu_phi(limit: int) -> tuple[np.ndarray, np.ndarray]:
    return mobius_table(limit), phi_table(limit)


def _tables_for(q: int) -> tuple[np.ndarray, np.ndarray]:
    limit = 1 << max(10, int(q).bit_length())
    return _mu_phi(limit)


def ramanujan_row(q: int, hs) -> np.ndarray:
    """c_q(h) for every h in hs."""
    hs = np.asarray(hs, dtype=np.int64)
    if q < 1 or (hs.size and hs.min() < 1):
        raise DomainError("ramanujan_row needs q >= 1 and h >= 1")
    mu, phi = _tables_for(q)
    g = np.gcd(np.int64(q), hs)
    r = q // g
    return mu[r] * (phi[q] // phi[r])


def ramanujan_column(qs, h: int) -> np.ndarray:
    """c_q(h) for every q in qs."""
    qs = np.asarray(qs, dtype=np.int64)
    if h < 1:
        raise DomainError(f"h must be at least 1, got {h}")
    mu, phi = _tables_for(int(qs.max()))
    g = np.gcd(qs, np.int64(h))
    r = qs // g
    return mu[r] * (phi[qs] // phi[r])


def period_sum(q: int, H: int) -> int:
    """S_q(H) = Σ_{h<=H} c_q(h); full periods vanish for q > 1."""
    if H < 0:
        raise DomainError("H must be nonnegative")
    if q == 1:
        return H
    r = H % q
    if r == 0:
        return 0
    return int(ramanujan_row(q, np.arange(1, r + 1)).sum())


def _local_polynomial(p: int, a: int, k: int) -> list[int]:
    """Integer coefficients g_j of z^-a [1 - (1-z)^k Σ_{m<a} d_k(p^m) z^m]."""
    partial = [d_k_prime_power(k, m) for m in range(a)]
    binom = [(-1) ** i * comb(k, i) for i in range(k + 1)]
    prod = [0] * (k + a)
    for i, b in enumerate(binom):
        for m, c in enumerate(partial):
            prod[i + m] += b * c
    poly = [(1 if j == 0 else 0) - (prod[j] if j < len(prod) else 0) for j in range(k + a)]
    if any(poly[:a]):
        raise DomainError(f"local factor identity failed at p={p}, a={a}, k={k}")
    return poly[a:] if a else [1]


@lru_cache(maxsize=None)
def _local_coeffs(p: int, a: int, k: int, T: int) -> np.ndarray:
    g = _local_polynomial(p, a, k)
    lp = log(p)
    out = np.zeros(T + 1)
    for j, gj in enumerate(g):
        if gj:
            weight = gj / float(p) ** j
            term = 1.0
            for n in range(T + 1):
                out[n] += weight * term
                term *= -j * lp / (n + 1)
    out.setflags(write=False)
    return out


def local_factor(params: LocalFactorParams) -> LaurentSeries:
    """Taylor expansion at s = 1 of (1 - p^-s)^k Σ_ν d_k(p^(ν+a)) p^(-νs)."""
    return LaurentSeries(0, _local_coeffs(params.p, params.a, params.k, params.T).copy())


def local_factor_direct(params: LocalFactorParams, tol: float = 1e-14, dps: int = 30) -> LaurentSeries:
    """The same expansion by summing the ν-series until its terms fall below tol."""
    p, a, k, T = params.p, params.a, params.k, params.T
    with mpmath.workdps(dps):
        lp = mpmath.log(p)
        head = [mpmath.mpf(0)] * (T + 1)
        for i in range(k + 1):
            w = (-1) ** i * comb(k, i) * mpmath.mpf(p) ** (-i)
            for n in range(T + 1):
                head[n] += w * (-i * lp) ** n / mpmath.factorial(n)
        tail = [mpmath.mpf(0)] * (T + 1)
        nu = 0
        while True:
            w = d_k_prime_power(k, nu + a) * mpmath.mpf(p) ** (-nu)
            terms = [w * (-nu * lp) ** n / mpmath.factorial(n) for n in range(T + 1)]
            for n in range(T + 1):
                tail[n] += terms[n]
            # terms decay geometrically once ν log p exceeds the polynomial growth
            if nu > 2 * (T + k) and max(abs(c) for c in terms) < tol:
                break
            nu += 1
        prod = [mpmath.fsum(head[i] * tail[n - i] for i in range(n + 1)) for n in range(T + 1)]
        return LaurentSeries(0, np.array([float(c) for c in prod]))


def _check_psi_args(d: int, e: int, q: int) -> None:
    if q < 1 or d < 1 or e < 1:
        raise DomainError("Ψ needs positive d, e, q")
    if q % d:
        raise DomainError(f"d={d} does not divide q={q}")
    if d % e:
        raise DomainError(f"e={e} does not divide d={d}")


def _psi_coeffs(d: int, e: int, q: int, k: int, T: int) -> np.ndarray:
    pref = d * mobius(d) * mobius(e) / (euler_phi(d) * e)
    out = np.zeros(T + 1)
    if pref == 0:
        return out
    out[0] = 1.0
    for p, a in factor_int(e * q // d):
        out = np.convolve(out, _local_coeffs(p, a, k, T))[:T + 1]
    return pref * out


def psi_de(d: int, e: int, q: int, k: int, T: Optional[int] = None) -> LaurentSeries:
    _check_psi_args(d, e, q)
    if T is None:
        T = default_order(k)
    return LaurentSeries(0, _psi_coeffs(d, e, q, k, T))


def psi_de_value(d: int, e: int, q: int, k: int, s, tol: float = 1e-17):
    """Ψ_{d,e}(s, q, k) at complex s by direct ν-summation of each local factor."""
    _check_psi_args(d, e, q)
    s = np.asarray(s, dtype=np.complex128)
    value = np.full(s.shape, d * mobius(d) * mobius(e) / (euler_phi(d) * e), dtype=np.complex128)
    if not value.any():
        return value
    for p, a in factor_int(e * q // d):
        z = np.exp(-s * log(p))
        acc = np.zeros_like(s)
        zn = np.ones_like(s)
        nu = 0
        while True:
            term = d_k_prime_power(k, nu + a) * zn
            acc = acc + term
            if nu > 2 and np.max(np.abs(term)) < tol * np.max(np.abs(acc)):
                break
            zn = zn * z
            nu += 1
        value = value * (1.0 - z) ** k * acc
    return value


def q_integrand(q: int, k: int, x: float):
    """s -> ζ(s)^k Σ_{d|q} Σ_{e|d} Ψ_{d,e}(s,q,k) (ex/(dq))^(s-1), for the contour oracle."""
    terms = [(d, e) for d in divisors(q) if mobius(d) for e in divisors(d) if mobius(e)]

    def build(s):
        s = np.asarray(s, dtype=np.complex128)
        acc = np.zeros_like(s)
        for d, e in terms:
            acc = acc + psi_de_value(d, e, q, k, s) * np.exp((s - 1.0) * log(e * x / (d * q)))
        return zeta(s) ** k * acc

    return build


def _exp_coeffs(c: float, T: int) -> np.ndarray:
    out = np.empty(T + 1)
    term = 1.0
    for n in range(T + 1):
        out[n] = term
        term *= c / (n + 1)
    return out


def _build_q_polynomial(q: int, k: int, T: int) -> QPolynomial:
    G = np.zeros(T + 1)
    for d in divisors(q):
        if mobius(d) == 0:
            continue
        for e in divisors(d):
            if mobius(e) == 0:
                continue
            psi = _psi_coeffs(d, e, q, k, T)
            G += np.convolve(psi, _exp_coeffs(log(e / (d * q)), T))[:T + 1]
    poly = residue_polynomial(zeta_series(k, T) * LaurentSeries(0, G))
    return QPolynomial(q=q, k=k, poly=poly)


class QPolynomialCache:
    """Q_k(·, q) keyed by (q, k, T); safe under concurrent lookup and insertion."""

    def __init__(self):
        self._lock = threading.Lock()
        self._items: dict[tuple[int, int, int], QPolynomial] = {}

    def get(self, q: int, k: int, T: int) -> QPolynomial:
        key = (q, k, T)
        with self._lock:
            hit = self._items.get(key)
        if hit is not None:
            return hit
        built = _build_q_polynomial(q, k, T)
        with self._lock:
            return self._items.setdefault(key, built)

    def __len__(self) -> int:
        with self._lock:
            return len(self._items)


Q_CACHE = QPolynomialCache()


def _order(k: int, cfg: Optional[SingularSeriesConfig] = None) -> int:
    if cfg is not None and cfg.local_trunc is not None:
        if cfg.local_trunc < k - 1:
            raise DomainError(f"local truncation {cfg.local_trunc} is too short for k={k}")
        return cfg.local_trunc
    return default_order(k)


def q_polynomial(q: int, k: int, T: Optional[int] = None) -> QPolynomial:
    if q < 1:
        raise DomainError(f"q must be at least 1, got {q}")
    if not 1 <= k <= K_MAX:
        raise DomainError(f"k must lie in [1, {K_MAX}], got {k}")
    return Q_CACHE.get(q, k, default_order(k) if T is None else T)


@lru_cache(maxsize=16)
def _q_matrix(q_max: int, k: int, T: int) -> np.ndarray:
    """Row q-1 holds the coefficients of Q_k(x, q) in powers of log x."""
    mat = np.zeros((q_max, k))
    degrees = set()
    for q in range(1, q_max + 1):
        c = q_polynomial(q, k, T).poly.coeffs
        degrees.add(len(c) - 1)
        mat[q - 1, :len(c)] = c
    logger.info("Q_%s polynomials for q <= %s: observed degrees %s", k, q_max, sorted(degrees))
    mat.setflags(write=False)
    return mat


def q_values(x: float, k: int, q_max: int, T: Optional[int] = None) -> np.ndarray:
    """Q_k(x, q) for q = 1..q_max."""
    T = default_order(k) if T is None else T
    powers = np.log(x) ** np.arange(k)
    return _q_matrix(q_max, k, T) @ powers


def q_bound_ratio(x: float, k: int, q_max: int, eps: float = BOUND_EPSILON, T: Optional[int] = None) -> float:
    """max_{q<=q_max} |Q_k(x,q)| / (q^eps (log x)^(k-1))."""
    qs = np.arange(1, q_max + 1, dtype=np.float64)
    scale = qs**eps * np.log(x) ** (k - 1)
    return float(np.max(np.abs(q_values(x, k, q_max, T)) / scale))


def _gcd_weighted_tail(h: int, q_max: int) -> float:
    """Upper bound for Σ_{q>q_max} gcd(h,q) q^-1.8."""
    total = 0.0
    for g in divisors(h):
        m = q_max // g
        inner = m ** -0.8 / 0.8 if m >= 1 else _ZETA_1_8_BOUND
        total += g ** -0.8 * inner
    return total


def _tail_weight(h: int, cfg: SingularSeriesConfig) -> float:
    if cfg.tail_estimate_mode == "crude":
        return h * cfg.q_max ** -0.8 / 0.8
    return _gcd_weighted_tail(h, cfg.q_max)


def _tail_weight_sum(H: int, cfg: SingularSeriesConfig) -> float:
    """Σ_{h<=H} of the per-h tail weight, with the gcd sum swapped as Σ_g ⌊H/g⌋ g^-0.8 (...)."""
    if cfg.tail_estimate_mode == "crude":
        return H * (H + 1) / 2 * cfg.q_max ** -0.8 / 0.8
    g = np.arange(1, H + 1)
    m = cfg.q_max // g
    inner = np.full(H, _ZETA_1_8_BOUND)
    inner[m >= 1] = m[m >= 1].astype(np.float64) ** -0.8 / 0.8
    return pairwise_sum((H // g) * g.astype(np.float64) ** -0.8 * inner)


def _tail_amplitude(x: float, k: int, cfg: SingularSeriesConfig) -> float:
    """(C (log x)^(k-1))^2 with C calibrated from the computed Q_k(x, q)."""
    C = BOUND_SAFETY * q_bound_ratio(x, k, cfg.q_max, BOUND_EPSILON, _order(k, cfg))
    return float((C * np.log(x) ** (k - 1)) ** 2)


def singular_series(x: float, h: int, k: int, cfg: Optional[SingularSeriesConfig] = None) -> SeriesValue:
    """Σ_{q<=q_max} c_q(h)/q^2 Q_k(x,q)^2 with an estimate of the omitted tail."""
    cfg = cfg or SingularSeriesConfig()
    if x < 2:
        raise DomainError(f"x must be at least 2, got {x}")
    if h < 1:
        raise DomainError(f"h must be at least 1, got {h}")
    qs = np.arange(1, cfg.q_max + 1)
    c = ramanujan_column(qs, h)
    Q = q_values(x, k, cfg.q_max, _order(k, cfg))
    value = pairwise_sum(c / qs.astype(np.float64) ** 2 * Q**2)
    return SeriesValue(value, _tail_amplitude(x, k, cfg) * _tail_weight(h, cfg))


@lru_cache(maxsize=64)
def _antiderivative_matrix(degree: int) -> np.ndarray:
    M = np.zeros((degree + 1, degree + 1))
    for j in range(degree + 1):
        M[j, :j + 1] = log_power_antiderivative(j)
    return M


@lru_cache(maxsize=64)
def _square_integrals(N: float, k: int, q_max: int, T: int) -> np.ndarray:
    """∫_N^{2N} Q_k(x,q)^2 dx for q = 1..q_max, in closed form."""
    C = _q_matrix(q_max, k, T)
    S = np.zeros((q_max, 2 * k - 1))
    for i in range(k):
        for j in range(k):
            S[:, i + j] += C[:, i] * C[:, j]
    R = S @ _antiderivative_matrix(2 * k - 2)
    powers = np.arange(2 * k - 1)
    upper = 2 * N * (R @ np.log(2 * N) ** powers)
    lower = N * (R @ np.log(N) ** powers)
    out = upper - lower
    out.setflags(write=False)
    return out


def singular_series_integral(N: float, h: int, k: int, cfg: Optional[SingularSeriesConfig] = None) -> float:
    """∫_N^{2N} 𝔖_k(x,h) dx, integrating each Q_k(x,q)^2 exactly."""
    cfg = cfg or SingularSeriesConfig()
    if N < 2:
        raise DomainError(f"N must be at least 2, got {N}")
    if h < 1:
        raise DomainError(f"h must be at least 1, got {h}")
    qs = np.arange(1, cfg.q_max + 1)
    weights = ramanujan_column(qs, h) / qs.astype(np.float64) ** 2
    return pairwise_sum(weights * _square_integrals(float(N), k, cfg.q_max, _order(k, cfg)))


def singular_series_integral_tail(N: float, h: int, k: int, cfg: Optional[SingularSeriesConfig] = None) -> float:
    cfg = cfg or SingularSeriesConfig()
    amp = max(_tail_amplitude(N, k, cfg), _tail_amplitude(2 * N, k, cfg))
    return float(N) * amp * _tail_weight(h, cfg)


def period_sums(q_max: int, H: int) -> np.ndarray:
    """S_q(H) for q = 1..q_max."""
    return np.array([period_sum(q, H) for q in range(1, q_max + 1)], dtype=np.float64)


def averaged_singular_integral(N: float, H: int, k: int, cfg: Optional[SingularSeriesConfig] = None) -> float:
    """Σ_{h<=H} ∫_N^{2N} 𝔖_k(x,h) dx with the h-sum moved inside as S_q(H)."""
    cfg = cfg or SingularSeriesConfig()
    if not 1 <= H <= N:
        raise DomainError(f"need 1 <= H <= N, got H={H}, N={N}")
    qs = np.arange(1, cfg.q_max + 1, dtype=np.float64)
    weights = period_sums(cfg.q_max, H) / qs**2
    return pairwise_sum(weights * _square_integrals(float(N), k, cfg.q_max, _order(k, cfg)))


def averaged_singular_integral_tail(N: float, H: int, k: int, cfg: Optional[SingularSeriesConfig] = None) -> float:
    cfg = cfg or SingularSeriesConfig()
    amp = max(_tail_amplitude(N, k, cfg), _tail_amplitude(2 * N, k, cfg))
    return float(N) * amp * _tail_weight_sum(H, cfg)


def main_square_integral(N: float, k: int) -> float:
    """∫_N^{2N} Q_k(x,1)^2 dx."""
    if N < 2:
        raise DomainError(f"N must be at least 2, got {N}")
    return float(_square_integrals(float(N), k, 1, default_order(k))[0])
