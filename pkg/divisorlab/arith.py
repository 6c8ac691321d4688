"""Exact integer arithmetic for multiplicative functions.

Smallest-prime-factor sieving, factorization, μ, φ, p-adic valuation and the generalized
divisor function d_k, pointwise and as a segmented-sieve table.
"""
import logging
import time
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import comb, isqrt
from typing import Optional

import numpy as np

from .errors import DivisorOverflowError, DomainError, ResourceError
from .utils import U64_MAX, exact_sum

logger = logging.getLogger("divisorlab")

# Largest sieve / table size accepted; a uint32 spf table of this size needs 800 MB.
SIEVE_LIMIT_MAX = 2 * 10**8
TABLE_ENTRIES_MAX = 2 * 10**8
DEFAULT_BLOCK_SIZE = 1 << 20
K_MAX = 8

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@dataclass(frozen=True)
class SpfTable:
    limit: int
    spf: np.ndarray

    def __getitem__(self, n: int) -> int:
        return int(self.spf[n])


@dataclass(frozen=True)
class Factorization:
    pairs: tuple[tuple[int, int], ...]

    def value(self) -> int:
        out = 1
        for p, nu in self.pairs:
            out *= p**nu
        return out

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class DivisorTable:
    k: int
    lo: int
    hi: int
    values: np.ndarray

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def covers(self, a: int, b: int) -> bool:
        return self.lo <= a and b <= self.hi

    def value(self, n: int) -> int:
        if not self.lo <= n <= self.hi:
            raise DomainError(f"n={n} outside table range [{self.lo}, {self.hi}]")
        return int(self.values[n - self.lo])

    def window(self, a: int, b: int) -> np.ndarray:
        """d_k(n) for a <= n <= b."""
        if not self.covers(a, b):
            raise DomainError(f"range [{a}, {b}] outside table range [{self.lo}, {self.hi}]")
        return self.values[a - self.lo:b - self.lo + 1]

    @cached_property
    def prefix(self) -> np.ndarray:
        """prefix[i] = Σ d_k(n) over lo <= n < lo + i, so prefix[x] = D_k(x) when lo = 1."""
        if exact_sum(self.values) > int(U64_MAX):
            raise DivisorOverflowError(detail=f"prefix sums of d_{self.k} overflow 64 bits below {self.hi}")
        out = np.zeros(len(self) + 1, dtype=np.uint64)
        np.cumsum(self.values, dtype=np.uint64, out=out[1:])
        return out

    def summatory(self, x: int) -> int:
        if self.lo != 1:
            raise DomainError("summatory values need a table starting at 1")
        if not 0 <= x <= self.hi:
            raise DomainError(f"x={x} outside table range [1, {self.hi}]")
        return int(self.prefix[x])


def _check_k(k: int) -> None:
    if not 1 <= k <= K_MAX:
        raise DomainError(f"k must lie in [1, {K_MAX}], got {k}")


def sieve_spf(limit: int) -> SpfTable:
    if limit < 2:
        raise DomainError(f"sieve limit must be at least 2, got {limit}")
    if limit > SIEVE_LIMIT_MAX:
        raise ResourceError(f"sieve limit {limit} exceeds the bound {SIEVE_LIMIT_MAX}")
    try:
        spf = np.zeros(limit + 1, dtype=np.uint32)
    except MemoryError as exc:
        raise ResourceError(f"cannot allocate spf table up to {limit}") from exc
    for p in range(2, isqrt(limit) + 1):
        if spf[p] == 0:
            block = spf[p * p::p]
            block[block == 0] = p
    rest = np.flatnonzero(spf == 0)
    rest = rest[rest >= 2]
    spf[rest] = rest
    return SpfTable(limit=limit, spf=spf)


def primes_upto(limit: int) -> np.ndarray:
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    for p in range(2, isqrt(limit) + 1):
        if is_prime[p]:
            is_prime[p * p::p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def factorize(n: int, t: SpfTable) -> Factorization:
    if not 2 <= n <= t.limit:
        raise DomainError(f"n={n} outside the sieve range [2, {t.limit}]")
    pairs = []
    while n > 1:
        p = int(t.spf[n])
        nu = 0
        while n % p == 0:
            n //= p
            nu += 1
        pairs.append((p, nu))
    return Factorization(tuple(pairs))


@lru_cache(maxsize=65536)
def factor_int(n: int) -> Factorization:
    """Trial-division factorization for values not covered by a sieve."""
    if n < 1:
        raise DomainError(f"cannot factor {n}")
    pairs = []
    p = 2
    while p * p <= n:
        if n % p == 0:
            nu = 0
            while n % p == 0:
                n //= p
                nu += 1
            pairs.append((p, nu))
        p += 1 if p == 2 else 2
    if n > 1:
        pairs.append((n, 1))
    return Factorization(tuple(pairs))


def divisors(n: int) -> list[int]:
    out = [1]
    for p, nu in factor_int(n):
        out = [d * p**j for d in out for j in range(nu + 1)]
    return sorted(out)


def mobius(n: int) -> int:
    if n < 1:
        raise DomainError(f"μ(n) needs n >= 1, got {n}")
    f = factor_int(n)
    if any(nu > 1 for _, nu in f):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(n: int) -> int:
    if n < 1:
        raise DomainError(f"φ(n) needs n >= 1, got {n}")
    out = n
    for p, _ in factor_int(n):
        out -= out // p
    return out


def valuation(n: int, p: int) -> int:
    if n < 1:
        raise DomainError(f"valuation needs n >= 1, got {n}")
    if not is_prime(p):
        raise DomainError(f"{p} is not prime")
    nu = 0
    while n % p == 0:
        n //= p
        nu += 1
    return nu


def mobius_table(limit: int) -> np.ndarray:
    mu = np.ones(limit + 1, dtype=np.int64)
    mu[0] = 0
    for p in primes_upto(limit).tolist():
        mu[::p] *= -1
        mu[::p * p] = 0
    return mu


def phi_table(limit: int) -> np.ndarray:
    phi = np.arange(limit + 1, dtype=np.int64)
    for p in primes_upto(limit).tolist():
        phi[::p] -= phi[::p] // p
    return phi


def d_k_prime_power(k: int, nu: int) -> int:
    return comb(k + nu - 1, nu)


def d_k_point(n: int, k: int, table: Optional[SpfTable] = None) -> int:
    if n < 1:
        raise DomainError(f"d_k(n) needs n >= 1, got {n}")
    _check_k(k)
    if n == 1 or k == 1:
        return 1
    f = factorize(n, table) if table is not None and n <= table.limit else factor_int(n)
    out = 1
    for _, nu in f:
        out *= d_k_prime_power(k, nu)
        if out > int(U64_MAX):
            raise DivisorOverflowError(n)
    return out


def d_k_naive_sum(x: int, k: int) -> int:
    """Number of ordered k-tuples of positive integers with product <= x."""

    @lru_cache(maxsize=None)
    def count(y: int, j: int) -> int:
        if j == 1:
            return y
        return sum(count(y // a, j - 1) for a in range(1, y + 1))

    return count(x, k) if x >= 1 else 0


def _sieve_segment(k: int, a: int, b: int, base: np.ndarray, coefs: np.ndarray, caps: np.ndarray) -> np.ndarray:
    length = b - a + 1
    vals = np.ones(length, dtype=np.uint64)
    rem = np.arange(a, b + 1, dtype=np.uint64)
    for p in base.tolist():
        s1 = (-a) % p
        if s1 >= length:
            continue
        view_v = vals[s1::p]
        view_r = rem[s1::p]
        first = a + s1
        e = np.ones(len(view_v), dtype=np.int64)
        pj, step = p * p, p
        while pj <= b:
            o = ((-first) % pj) // p
            if o < len(e):
                e[o::step] += 1
            pj *= p
            step *= p
        bad = view_v > caps[e]
        if bad.any():
            raise DivisorOverflowError(first + int(np.flatnonzero(bad)[0]) * p)
        view_v *= coefs[e]
        view_r //= np.power(np.uint64(p), e.astype(np.uint64))
    big = rem > 1
    bad = big & (vals > U64_MAX // np.uint64(k))
    if bad.any():
        raise DivisorOverflowError(a + int(np.flatnonzero(bad)[0]))
    vals[big] *= np.uint64(k)
    return vals


def d_k_table(k: int, lo: int, hi: int, block_size: int = DEFAULT_BLOCK_SIZE) -> DivisorTable:
    _check_k(k)
    if not 1 <= lo <= hi:
        raise DomainError(f"table range needs 1 <= lo <= hi, got [{lo}, {hi}]")
    if hi - lo + 1 > TABLE_ENTRIES_MAX:
        raise ResourceError(f"table of {hi - lo + 1} entries exceeds the bound {TABLE_ENTRIES_MAX}")
    started = time.perf_counter()
    try:
        values = np.ones(hi - lo + 1, dtype=np.uint64)
    except MemoryError as exc:
        raise ResourceError(f"cannot allocate d_k table [{lo}, {hi}]") from exc
    if k > 1:
        base = primes_upto(isqrt(hi))
        max_e = hi.bit_length()
        coefs = np.array([d_k_prime_power(k, e) for e in range(max_e + 1)], dtype=np.uint64)
        caps = U64_MAX // coefs
        for a in range(lo, hi + 1, block_size):
            b = min(a + block_size - 1, hi)
            values[a - lo:b - lo + 1] = _sieve_segment(k, a, b, base, coefs, caps)
    logger.info("built d_%s table on [%s, %s] in %.3fs", k, lo, hi, time.perf_counter() - started)
    return DivisorTable(k=k, lo=lo, hi=hi, values=values)
