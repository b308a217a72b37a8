import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hcmu_surfaces.core import (FootballParams, KAtZero, RawC1, SingularityKind, conformal_factor,
                                default_window, dp_dK, invert_x, K_of_x, make_x_map, p_of_K,
                                validate_params, x_of_K)
from hcmu_surfaces.errors import DegenerateMetric, RejectedParams

CASES = [(1.0, 0.0), (2.0, -0.5), (1.0, -0.5)]


def test_conical_exponents_for_unit_football():
    P = validate_params(1, 0)
    assert P.kind is SingularityKind.CONICAL
    assert P.exponents() == pytest.approx((-1.5, 3.0, -1.5), abs=1e-15)
    assert P.delta == pytest.approx(1 / 6, abs=1e-15)


def test_cusp_detection_and_snap():
    P = validate_params(1, -0.5 + 5e-13)
    assert P.is_cusp and P.k2 == -0.5
    assert P.exponents() is None


@pytest.mark.parametrize("k1,k2", [(1, 1), (0, 1), (1, -0.7), (1, -0.6), (float("nan"), 0)])
def test_rejected_params(k1, k2):
    with pytest.raises(RejectedParams):
        validate_params(k1, k2)


def test_cubic_roots_and_derivative():
    P = validate_params(2, -0.5)
    for r in (2, -0.5, -1.5):
        assert abs(p_of_K(P, r)) < 1e-14
    K = np.linspace(-0.4, 1.9, 50)
    h = 1e-6
    fd = (p_of_K(P, K + h) - p_of_K(P, K - h)) / (2 * h)
    assert np.allclose(fd, dp_dK(P, K), atol=1e-8)


def test_conformal_factor_domain():
    P = validate_params(1, 0)
    assert conformal_factor(P, 0.5) == pytest.approx(0.5)
    for K in (0.0, 1.0, 1.2, -0.1):
        with pytest.raises(DegenerateMetric):
            conformal_factor(P, K)


@pytest.mark.parametrize("k1,k2", CASES)
def test_x_of_K_derivative_is_one_over_2p(k1, k2):
    P = validate_params(k1, k2)
    m = make_x_map(P)
    mp_x = _mp_x(P)
    for K in np.linspace(k2 + 0.05 * (k1 - k2), k1 - 0.05 * (k1 - k2), 15):
        d = mpmath.diff(mp_x, mpmath.mpf(K))
        assert float(d) == pytest.approx(1 / (2 * p_of_K(P, K)), rel=1e-12)
        assert x_of_K(m, K) - float(mp_x(K) - mp_x(0.5 * (k1 + k2))) == pytest.approx(0, abs=1e-12)


def _mp_x(P):
    """Antiderivative of 1/(2p) by mpmath quadrature (independent of the log formula)."""
    k1, k2 = mpmath.mpf(P.k1), mpmath.mpf(P.k2)

    def f(K):
        K = mpmath.mpf(K)
        return mpmath.quad(lambda t: 3 / (2 * (k1 - t) * (t - k2) * (t + k1 + k2)),
                           [(k1 + k2) / 2, K])
    return f


@pytest.mark.parametrize("k1,k2", CASES)
def test_roundtrip(k1, k2):
    P = validate_params(k1, k2)
    m = make_x_map(P)
    w = m.window
    K = np.linspace(w.k_lo, w.k_hi, 1000)
    assert np.max(np.abs(K_of_x(m, x_of_K(m, K)) - K)) < 1e-10


def test_clamp_flags_extremum():
    P = validate_params(1, 0)
    m = make_x_map(P)
    lo, hi = m.x_range
    K, flag = invert_x(m, np.array([lo - 1, hi + 1, 0.0]))
    assert K[0] == m.window.k_lo and K[1] == m.window.k_hi
    assert list(flag) == [True, True, False]


def test_normalizations_agree():
    P = validate_params(1, 0)
    a = make_x_map(P)
    b = make_x_map(P, RawC1(a.c1))
    c = make_x_map(P, KAtZero(0.3))
    assert x_of_K(a, 0.7) == x_of_K(b, 0.7)
    assert x_of_K(c, 0.3) == pytest.approx(0, abs=1e-15)


def test_window_margin_validation():
    with pytest.raises(RejectedParams):
        default_window(validate_params(1, 0), margin=0.7)


@settings(max_examples=60, deadline=None)
@given(k1=st.floats(0.2, 5), frac=st.floats(-0.49, 0.9), t=st.floats(0.01, 0.99))
def test_roundtrip_property(k1, frac, t):
    k2 = frac * k1
    if abs(k2 + k1 / 2) < 1e-3:
        return
    P = FootballParams(k1, k2)
    m = make_x_map(P)
    K = P.k2 + t * (P.k1 - P.k2)
    K = min(max(K, m.window.k_lo), m.window.k_hi)
    assert K_of_x(m, x_of_K(m, K)) == pytest.approx(K, abs=1e-10 * max(1, k1))
    assert math.isfinite(x_of_K(m, K))


def test_x_of_K_quadrature_value():
    m = make_x_map(validate_params(1, 0))
    assert x_of_K(m, 0.25) == pytest.approx(-1.207078, abs=1e-6)
