from concurrent.futures import ThreadPoolExecutor
from math import gcd, log

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pydantic import ValidationError
from scipy.integrate import quad

from divisorlab.errors import DomainError
from divisorlab.laurent import DEFAULT_STIELTJES, contour_residue_oracle, zeta_residue_polynomial
from divisorlab.models import SingularSeriesConfig
from divisorlab.singular import (
    LocalFactorParams,
    QPolynomialCache,
    _tail_weight,
    _tail_weight_sum,
    averaged_singular_integral,
    local_factor,
    local_factor_direct,
    main_square_integral,
    period_sum,
    psi_de,
    psi_de_value,
    q_integrand,
    q_polynomial,
    q_values,
    ramanujan_c,
    ramanujan_c_direct,
    ramanujan_column,
    ramanujan_row,
    singular_series,
    singular_series_integral,
)

GAMMA0 = DEFAULT_STIELTJES.gamma[0]


def test_ramanujan_examples():
    assert all(ramanujan_c(1, h) == 1 for h in range(1, 50))
    assert ramanujan_c(6, 4) == -1
    assert ramanujan_c(5, 5) == 4


def test_ramanujan_domain():
    with pytest.raises(DomainError):
        ramanujan_c(0, 3)
    with pytest.raises(DomainError):
        ramanujan_row(3, [0, 1])


@settings(max_examples=300)
@given(st.integers(1, 400), st.integers(1, 400))
def test_hoelder_matches_divisor_sum(q, h):
    assert ramanujan_c(q, h) == ramanujan_c_direct(q, h)
    assert abs(ramanujan_c(q, h)) <= gcd(q, h)


def test_rows_and_columns_match_scalar():
    hs = np.arange(1, 61)
    for q in (1, 2, 12, 30, 49, 60):
        assert ramanujan_row(q, hs).tolist() == [ramanujan_c(q, int(h)) for h in hs]
    qs = np.arange(1, 101)
    assert ramanujan_column(qs, 12).tolist() == [ramanujan_c(int(q), 12) for q in qs]


def test_period_sums():
    assert period_sum(1, 17) == 17
    assert all(period_sum(q, q * m) == 0 for q in range(2, 30) for m in range(1, 4))
    assert period_sum(12, 29) == sum(ramanujan_c(12, h) for h in range(1, 30))
    assert period_sum(7, 0) == 0


def test_local_factor_trivial_cases():
    assert local_factor(LocalFactorParams(p=5, a=0, k=3, T=6)).coeffs.tolist() == [1.0] + [0.0] * 6
    assert local_factor(LocalFactorParams(p=7, a=1, k=1, T=4)).coeffs.tolist() == [1.0] + [0.0] * 4


@pytest.mark.parametrize("p", [2, 3, 7, 31])
@pytest.mark.parametrize("a", [1, 2, 4])
@pytest.mark.parametrize("k", [2, 3, 5])
def test_local_factor_closed_form_matches_direct_sum(p, a, k):
    params = LocalFactorParams(p=p, a=a, k=k, T=k + 4)
    closed = local_factor(params).coeffs
    direct = local_factor_direct(params).coeffs
    assert np.all(np.abs(closed - direct) <= 1e-12 * np.maximum(1.0, np.abs(direct)))


def test_local_factor_params_validation():
    with pytest.raises(ValidationError, match="not prime"):
        LocalFactorParams(p=4, a=1, k=2, T=3)
    with pytest.raises(ValidationError):
        LocalFactorParams(p=3, a=-1, k=2, T=3)
    with pytest.raises(ValidationError):
        LocalFactorParams(p=3, a=1, k=9, T=3)


def test_psi_trivial_cases():
    assert psi_de(1, 1, 1, 3).coeffs.tolist() == [1.0] + [0.0] * 7
    assert psi_de(4, 1, 4, 3).is_zero()
    with pytest.raises(DomainError):
        psi_de(3, 1, 4, 2)
    with pytest.raises(DomainError):
        psi_de(6, 4, 12, 2)


@pytest.mark.parametrize("d,e,q,k", [(6, 3, 12, 3), (2, 1, 8, 4), (30, 5, 30, 2), (1, 1, 9, 3)])
def test_psi_series_matches_pointwise_value(d, e, q, k):
    series = psi_de(d, e, q, k, T=24)
    t = 0.125 * np.exp(2j * np.pi * np.arange(12) / 12)
    np.testing.assert_allclose(series.evaluate(t), psi_de_value(d, e, q, k, 1.0 + t), rtol=1e-8, atol=1e-14)


def test_q_polynomial_at_one_is_zeta_residue():
    for k in range(1, 7):
        np.testing.assert_allclose(q_polynomial(1, k).poly.coeffs, zeta_residue_polynomial(k).coeffs, rtol=1e-13)
    np.testing.assert_allclose(q_polynomial(1, 2).poly.coeffs, [2 * GAMMA0, 1.0], rtol=1e-14)


@pytest.mark.parametrize("q", [2, 6, 12])
@pytest.mark.parametrize("k", [3, 4])
def test_q_polynomial_against_contour_oracle(q, k):
    x = 1e3
    value = q_polynomial(q, k)(x)
    oracle = contour_residue_oracle(q_integrand(q, k, x))
    assert value == pytest.approx(oracle, rel=1e-7, abs=1e-10 * log(x) ** (k - 1))


def test_q_degree_does_not_exceed_k_minus_one():
    assert all(q_polynomial(q, 4).degree <= 3 for q in range(1, 40))


def test_cache_returns_one_instance_under_threads():
    cache = QPolynomialCache()
    with ThreadPoolExecutor(max_workers=8) as pool:
        got = list(pool.map(lambda _: cache.get(30, 3, 7), range(32)))
    assert all(g is got[0] for g in got)
    assert len(cache) == 1


def test_series_with_only_q_one():
    cfg = SingularSeriesConfig(q_max=1)
    x = 1e6
    q1 = q_values(x, 3, 1)[0]
    assert singular_series(x, 5, 3, cfg).value == q1**2


def test_series_change_within_tail_bound():
    small = singular_series(1e6, 1, 3, SingularSeriesConfig(q_max=1000))
    large = singular_series(1e6, 1, 3, SingularSeriesConfig(q_max=2000))
    assert abs(large.value - small.value) < small.tail_bound


def test_series_depends_on_h_through_gcds_only():
    cfg = SingularSeriesConfig(q_max=10)
    assert singular_series(1e4, 6, 3, cfg).value == singular_series(1e4, 6 + 2520, 3, cfg).value


def test_series_domain():
    with pytest.raises(DomainError):
        singular_series(1.5, 1, 3)
    with pytest.raises(DomainError):
        singular_series(100.0, 0, 3)


def test_crude_tail_is_larger_for_large_h():
    crude = SingularSeriesConfig(q_max=100, tail_estimate_mode="crude")
    weighted = SingularSeriesConfig(q_max=100)
    assert _tail_weight(720, weighted) < _tail_weight(720, crude)


@pytest.mark.parametrize("mode", ["crude", "gcd-weighted"])
def test_averaged_tail_weight_swaps_the_sum(mode):
    cfg = SingularSeriesConfig(q_max=64, tail_estimate_mode=mode)
    H = 300
    assert _tail_weight_sum(H, cfg) == pytest.approx(sum(_tail_weight(h, cfg) for h in range(1, H + 1)), rel=1e-12)


def test_k1_integral_is_linear_in_N():
    cfg = SingularSeriesConfig(q_max=50)
    assert singular_series_integral(2e4, 3, 1, cfg) == pytest.approx(2 * singular_series_integral(1e4, 3, 1, cfg), rel=1e-12)


def test_integral_against_quadrature():
    cfg = SingularSeriesConfig(q_max=100)
    N = 1e4
    expected, _ = quad(lambda x: singular_series(x, 1, 3, cfg).value, N, 2 * N, epsrel=1e-13, limit=200)
    assert singular_series_integral(N, 1, 3, cfg) == pytest.approx(expected, rel=1e-9)


def test_averaged_integral_matches_double_loop(small_cfg):
    N, H = 1e3, 20
    naive = sum(singular_series_integral(N, h, 3, small_cfg) for h in range(1, H + 1))
    assert averaged_singular_integral(N, H, 3, small_cfg) == pytest.approx(naive, rel=1e-9)


def test_averaged_integral_q_one_term():
    N, H = 5e3, 40
    cfg = SingularSeriesConfig(q_max=1)
    assert averaged_singular_integral(N, H, 3, cfg) == H * main_square_integral(N, 3)


def test_main_square_integral_k1():
    assert main_square_integral(1e4, 1) == pytest.approx(1e4, rel=1e-12)


def test_averaged_integral_domain(small_cfg):
    with pytest.raises(DomainError):
        averaged_singular_integral(100, 101, 3, small_cfg)
