from math import log

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from divisorlab.arith import d_k_table
from divisorlab.convolution import (
    averaged_delta,
    averaged_delta_naive,
    averaged_delta_parts,
    averaged_double_sum,
    averaging_diagnostic,
    decompose_check,
    delta_Nh,
    divisor_summatory,
    hyperbola_summatory,
    main_term_square_integral,
    mean_abs_delta,
    mean_square_delta,
    remainder_envelope,
    shifted_convolution,
    shifted_convolution_naive,
    smooth_main_integral,
    window_increments,
)
from divisorlab.errors import DomainError
from divisorlab.laurent import DEFAULT_STIELTJES, main_term_polynomial, window_main_term, zeta_residue_polynomial
from divisorlab.models import SingularSeriesConfig
from divisorlab.singular import averaged_singular_integral, q_values, ramanujan_c_direct

GAMMA0 = DEFAULT_STIELTJES.gamma[0]
_D2 = d_k_table(2, 1, 1000)
_D3 = d_k_table(3, 1, 1000)


def test_summatory_examples(d1_table, d2_table):
    assert divisor_summatory(4, 2, d2_table).D == 8
    point = divisor_summatory(777, 1, d1_table)
    assert point.D == 777
    assert point.delta == 0.0


def test_summatory_matches_hyperbola(d2_table):
    assert divisor_summatory(10_000, 2, d2_table).D == hyperbola_summatory(10_000)
    assert all(d2_table.summatory(x) == hyperbola_summatory(x) for x in range(1, 300))


def test_summatory_rejects_wrong_table(d2_table):
    with pytest.raises(DomainError):
        divisor_summatory(10, 3, d2_table)


def test_shifted_convolution_examples(d1_table, d2_table):
    assert shifted_convolution(2, 1, 2, d2_table) == 12
    assert shifted_convolution(1234, 17, 1, d1_table) == 1234


@settings(max_examples=150)
@given(st.integers(1, 400), st.integers(0, 20))
def test_shifted_convolution_matches_naive(N, h):
    for table in (_D2, _D3):
        assert shifted_convolution(N, h, table.k, table) == shifted_convolution_naive(N, h, table.k, table)


def test_window_increments(d3_table):
    N, H = 300, 25
    inc = window_increments(N, H, d3_table)
    expected = [d3_table.summatory(n + H) - d3_table.summatory(n) for n in range(N + 1, 2 * N + 1)]
    assert inc.tolist() == expected


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("H", [0, 1, 7, 40])
def test_averaged_double_sum_matches_loop(k, H):
    table = d_k_table(k, 1, 1200)
    N = 500
    assert averaged_double_sum(N, H, k, table) == sum(shifted_convolution_naive(N, h, k, table) for h in range(1, H + 1))


def test_delta_Nh_k1_closed_form(d1_table, small_cfg):
    N, h = 2000, 6
    result = delta_Nh(N, h, 1, d1_table, small_cfg)
    qs = np.arange(1, small_cfg.q_max + 1)
    c = np.array([ramanujan_c_direct(int(q), h) for q in qs])
    series = float(np.sum(c / qs**2 * q_values(float(N), 1, small_cfg.q_max) ** 2))
    assert result.D_Nh == N
    assert result.main_integral == pytest.approx(N * series, rel=1e-12)
    assert result.delta_Nh == pytest.approx(N - N * series, rel=1e-9, abs=1e-9 * N)


def test_delta_Nh_triangle_inequality(d3_table):
    for h in (1, 2, 6, 30):
        r = delta_Nh(3000, h, 3, d3_table)
        assert abs(r.delta_Nh) <= r.D_Nh + abs(r.main_integral)
        assert r.tail_bound > 0


def test_delta_Nh_takes_both_signs():
    N = 10**5
    table = d_k_table(3, 1, 2 * N + 100)
    deltas = [delta_Nh(N, h, 3, table).delta_Nh for h in range(1, 101)]
    assert min(deltas) < 0 < max(deltas)


def test_delta_Nh_domain(d3_table):
    with pytest.raises(DomainError):
        delta_Nh(100, 0, 3, d3_table)


def test_averaged_delta_matches_naive_loop(d3_table, small_cfg):
    N, H = 1000, 30
    parts = averaged_delta_parts(N, H, 3, d3_table, small_cfg)
    naive = averaged_delta_naive(N, H, 3, d3_table, small_cfg)
    assert parts.delta == pytest.approx(naive, rel=1e-6, abs=1e-9 * parts.double_sum)


def test_averaged_delta_with_one_shift(d3_table, small_cfg):
    single = delta_Nh(1000, 1, 3, d3_table, small_cfg).delta_Nh
    assert averaged_delta(1000, 1, 3, d3_table, small_cfg) == pytest.approx(single, rel=1e-9, abs=1e-6)


def test_averaged_delta_k1(d1_table, small_cfg):
    N, H = 2000, 12
    parts = averaged_delta_parts(N, H, 1, d1_table, small_cfg)
    assert parts.double_sum == N * H
    assert parts.main_integral == pytest.approx(averaged_singular_integral(N, H, 1, small_cfg))
    assert parts.delta == pytest.approx(N * H - parts.main_integral, abs=1e-6)


def test_averaged_delta_domain(d3_table):
    with pytest.raises(DomainError):
        averaged_delta_parts(100, 0, 3, d3_table)
    with pytest.raises(DomainError):
        averaged_delta_parts(100, 101, 3, d3_table)


def test_decomposition_residual(d3_table):
    dec = decompose_check(1000, 50, 3, d3_table)
    assert dec.relative_residual <= 1e-6
    assert dec.lhs == averaged_double_sum(1000, 50, 3, d3_table)


def test_decomposition_zero_window(d3_table):
    dec = decompose_check(1000, 0, 3, d3_table)
    assert (dec.lhs, dec.m_term, dec.r_term) == (0, 0.0, 0.0)


def test_decomposition_k1(d1_table):
    N, H = 2000, 40
    dec = decompose_check(N, H, 1, d1_table)
    assert dec.lhs == N * H
    assert dec.m_term == pytest.approx(N * H, rel=1e-12)
    assert abs(dec.r_term) <= 1e-6 * N * H


def test_decomposition_needs_table_from_one():
    with pytest.raises(DomainError):
        decompose_check(100, 10, 2, d_k_table(2, 101, 300))


def test_remainder_within_envelope(d3_table):
    env = remainder_envelope(2000, 100, 3, d3_table)
    dec = decompose_check(2000, 100, 3, d3_table)
    assert env.r_term == pytest.approx(abs(dec.r_term))
    assert env.r_term <= env.envelope


def test_main_term_square_integral():
    assert main_term_square_integral(5000, 1) == pytest.approx(5000, rel=1e-12)
    N = 1e4
    expected, _ = quad(lambda x: (log(x) + 2 * GAMMA0) ** 2, N, 2 * N, epsrel=1e-13)
    assert main_term_square_integral(N, 2) == pytest.approx(expected, rel=1e-10)
    cfg = SingularSeriesConfig(q_max=1)
    assert main_term_square_integral(N, 3) == pytest.approx(averaged_singular_integral(N, 7, 3, cfg) / 7, rel=1e-15)


def test_mean_square_k1_is_sawtooth(d1_table):
    assert mean_square_delta(1, 1, d1_table) == 0.0
    assert mean_square_delta(1000, 1, d1_table) == pytest.approx(999 / 3, rel=1e-12)
    assert mean_abs_delta(1000, 1, d1_table) == pytest.approx(999 / 2, rel=1e-12)


def test_mean_square_against_dense_grid(d2_table):
    X, per_unit = 1000, 100
    p = main_term_polynomial(2)
    n = np.repeat(np.arange(1, X, dtype=np.float64), per_unit)
    t = n + (np.tile(np.arange(per_unit), X - 1) + 0.5) / per_unit
    D = d2_table.prefix[n.astype(np.int64)].astype(np.float64)
    riemann = float(np.sum((D - p.x_times(t)) ** 2)) / per_unit
    assert mean_square_delta(X, 2, d2_table) == pytest.approx(riemann, rel=1e-4)


def test_mean_square_is_monotone(d3_table):
    values = [mean_square_delta(X, 3, d3_table) for X in (10, 100, 500, 1000, 5000, 10_000)]
    assert values == sorted(values)


def test_averaging_diagnostic_k1(d1_table):
    for H in (1, 5, 40):
        assert averaging_diagnostic(500, H, 1, d1_table) == pytest.approx(1 / (2 * H), rel=1e-12)


@pytest.mark.parametrize("x", [1000, 2345, 7000])
@pytest.mark.parametrize("H", [1, 10, 100])
def test_averaging_diagnostic_bound(d3_table, x, H):
    local = sum(d3_table.value(n) for n in range(x + 1, x + H + 1)) / H
    assert averaging_diagnostic(x, H, 3, d3_table) <= local + 2 * log(x + H) ** 2


def test_averaging_diagnostic_single_interval(d2_table):
    x = 1234
    p = main_term_polynomial(2)
    D = d2_table.summatory(x)
    integral, _ = quad(lambda t: D - p.x_times(t), x, x + 1, epsrel=1e-13)
    point = D - p.x_times(float(x))
    assert averaging_diagnostic(x, 1, 2, d2_table) == pytest.approx(abs(point - integral), rel=1e-8, abs=1e-10)


def test_smooth_main_integral():
    N, H, k = 1e4, 100, 3
    r = zeta_residue_polynomial(k)
    expected, _ = quad(lambda x: window_main_term(x, H, k) * r.at(x), N, 2 * N, epsrel=1e-13)
    assert smooth_main_integral(N, H, k) == pytest.approx(expected, rel=1e-9)
    assert smooth_main_integral(N, 0, k) == 0.0
