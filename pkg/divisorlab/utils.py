from functools import lru_cache
from math import factorial
from typing import Sequence

import numpy as np

U64_MAX = np.uint64(np.iinfo(np.uint64).max)
PAIRWISE_LEAF = 4096


def exact_dot(a: np.ndarray, b: np.ndarray) -> int:
    """Exact sum of a[i]*b[i] for nonnegative uint64 arrays, returned as a Python int.

    Products and partial sums stay in uint64 inside blocks small enough not to wrap;
    block totals are combined as Python integers.
    """
    if len(a) != len(b):
        raise ValueError("exact_dot operands differ in length")
    if len(a) == 0:
        return 0
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    amax = int(a.max())
    bmax = int(b.max())
    if amax == 0 or bmax == 0:
        return 0
    pmax = amax * bmax
    if pmax > int(U64_MAX):
        return sum(int(x) * int(y) for x, y in zip(a.tolist(), b.tolist()))
    block = max(1, min(len(a), int(U64_MAX) // pmax))
    total = 0
    for start in range(0, len(a), block):
        prod = a[start:start + block] * b[start:start + block]
        total += int(prod.sum(dtype=np.uint64))
    return total


def exact_sum(a: np.ndarray) -> int:
    a = np.asarray(a, dtype=np.uint64)
    if len(a) == 0:
        return 0
    amax = int(a.max())
    if amax == 0:
        return 0
    block = max(1, min(len(a), int(U64_MAX) // amax))
    total = 0
    for start in range(0, len(a), block):
        total += int(a[start:start + block].sum(dtype=np.uint64))
    return total


def pairwise_sum(values: Sequence[float] | np.ndarray) -> float:
    """Tree summation with fixed leaf boundaries, so the result never depends on who computed the leaves."""
    arr = np.asarray(values, dtype=np.float64)
    n = len(arr)
    if n == 0:
        return 0.0
    if n <= PAIRWISE_LEAF:
        return float(np.add.reduce(arr))
    leaves = [float(np.add.reduce(arr[i:i + PAIRWISE_LEAF])) for i in range(0, n, PAIRWISE_LEAF)]
    while len(leaves) > 1:
        paired = [leaves[i] + leaves[i + 1] for i in range(0, len(leaves) - 1, 2)]
        if len(leaves) % 2:
            paired.append(leaves[-1])
        leaves = paired
    return leaves[0]


def log_power_antiderivative(j: int) -> np.ndarray:
    """Coefficients r_i with  ∫ (log x)^j dx = x * Σ r_i (log x)^i."""
    out = np.zeros(j + 1)
    for i in range(j + 1):
        out[i] = (-1) ** (j - i) * factorial(j) / factorial(i)
    return out


@lru_cache(maxsize=16)
def gauss_legendre(nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    return (x + 1.0) / 2.0, w / 2.0


def geometric_grid(lo: float, hi: float, ratio: float = 2.0) -> list[int]:
    if lo <= 0 or hi < lo or ratio <= 1.0:
        raise ValueError("geometric grid needs 0 < lo <= hi and ratio > 1")
    out = []
    value = float(lo)
    while value <= hi * (1 + 1e-12):
        n = int(round(value))
        if not out or n > out[-1]:
            out.append(n)
        value *= ratio
    return out


def format_number(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if value is None:
        return ""
    return str(value)
