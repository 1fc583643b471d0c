import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from loraplan import specfun
from loraplan.errors import DomainError
from loraplan.specfun import hyp2f1_ring, ring_integral, ring_integral_log, ring_integral_numeric

ETAS = [2.0, 2.0001, 2.5, 2.75, 3.0, 4.0, 6.0]
ZS = [0.0, 1e-12, 1e-3, 0.5, 1.0, 1.999, 2.0, 2.001, 3.0, 10.0, 1e3, 1e6, 1e12, 1e20]


def mp_hyp(eta, z):
    with mpmath.workdps(40):
        b = mpmath.mpf(2) / mpmath.mpf(eta)
        return float(mpmath.hyp2f1(1, b, 1 + b, -mpmath.mpf(z)))


@pytest.mark.parametrize("eta", ETAS)
def test_hyp2f1_matches_mpmath(eta):
    got = np.array([hyp2f1_ring(eta, z) for z in ZS])
    want = np.array([mp_hyp(eta, z) for z in ZS])
    assert_allclose(got, want, rtol=1e-13)


def test_hyp2f1_eta2_is_log_ratio():
    # b = 1: 2F1(1, 1; 2; -z) = ln(1 + z) / z
    for z in [1e-8, 0.3, 2.0, 7.5, 1e4, 1e15]:
        assert_allclose(hyp2f1_ring(2.0, z), math.log1p(z) / z, rtol=1e-14)


def test_hyp2f1_continuous_across_switch():
    for eta in [2.0, 2.75, 4.0]:
        below = hyp2f1_ring(eta, np.nextafter(specfun.Z_SWITCH, 0))
        above = hyp2f1_ring(eta, np.nextafter(specfun.Z_SWITCH, 10))
        assert_allclose(below, above, rtol=1e-14)


@given(st.floats(2.0, 6.0), st.floats(0.0, 1e8), st.floats(1e-6, 1e8))
@settings(max_examples=200, deadline=None)
def test_hyp2f1_bounded_and_decreasing(eta, z, dz):
    f0 = hyp2f1_ring(eta, z)
    f1 = hyp2f1_ring(eta, z + dz * (1 + z))
    assert 0.0 < f1 <= f0 <= 1.0


@pytest.mark.parametrize("bad", [(1.9, 1.0), (float("nan"), 1.0), (2.75, -1.0), (2.75, float("inf"))])
def test_hyp2f1_domain(bad):
    with pytest.raises(DomainError):
        hyp2f1_ring(*bad)


def test_ring_integral_matches_quadrature_grid():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(300):
        eta = rng.uniform(2, 4)
        gamma = 10 ** rng.uniform(-3, 3)
        d1 = 10 ** rng.uniform(0, 4)
        la, lb = np.sort(rng.uniform(0, 1e4, 2))
        got = ring_integral(d1, gamma, la, lb, eta)
        want = ring_integral_numeric(d1, gamma, la, lb, eta, rtol=1e-11)
        worst = max(worst, abs(got - want) / abs(want))
    assert worst < 1e-9


def test_ring_integral_eta2_matches_log_form():
    rng = np.random.default_rng(5)
    for _ in range(200):
        gamma = 10 ** rng.uniform(-3, 3)
        d1 = rng.uniform(1, 5000)
        la, lb = np.sort(rng.uniform(0, 1e4, 2))
        assert_allclose(ring_integral(d1, gamma, la, lb, 2.0), ring_integral_log(d1, gamma, la, lb),
                        rtol=1e-11)


def test_ring_integral_far_thin_ring():
    # both radii deep in the tail; a naive antiderivative difference loses every digit here
    d1, gamma, eta = 10.0, 1e-3, 2.75
    la, lb = 9999.0, 10000.0
    want = ring_integral_numeric(d1, gamma, la, lb, eta, rtol=1e-12)
    assert_allclose(ring_integral(d1, gamma, la, lb, eta), want, rtol=1e-11)


def test_ring_integral_full_disc_eta2():
    # int_0^R x k / (x^2 + k) dx = (k/2) ln(1 + R^2 / k)
    k = 3.0 * 40.0 ** 2
    assert_allclose(ring_integral(40.0, 3.0, 0.0, 900.0, 2.0), 0.5 * k * math.log1p(900.0 ** 2 / k),
                    rtol=1e-13)


def test_ring_integral_empty_ring_is_zero():
    assert ring_integral(100.0, 2.0, 350.0, 350.0, 2.75) == 0.0


@given(st.floats(2.0, 4.0), st.floats(1e-3, 1e3), st.floats(1.0, 1e4),
       st.lists(st.floats(0.0, 1e4), min_size=3, max_size=3))
@settings(max_examples=200, deadline=None)
def test_ring_integral_additive(eta, gamma, d1, radii):
    a, m, b = sorted(radii)
    whole = ring_integral(d1, gamma, a, b, eta)
    parts = ring_integral(d1, gamma, a, m, eta) + ring_integral(d1, gamma, m, b, eta)
    assert_allclose(whole, parts, rtol=1e-11, atol=1e-300)


@given(st.floats(2.0, 4.0), st.floats(1e-3, 1e3), st.floats(1.0, 1e4),
       st.floats(0.0, 1e4), st.floats(0.0, 1e4))
@settings(max_examples=200, deadline=None)
def test_ring_integral_bounds(eta, gamma, d1, x, y):
    la, lb = min(x, y), max(x, y)
    val = ring_integral(d1, gamma, la, lb, eta)
    # integrand is positive and below x
    assert 0.0 <= val <= 0.5 * (lb - la) * (lb + la) * (1 + 1e-12)


@given(st.floats(2.0, 4.0), st.floats(1.0, 5e3), st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
@settings(max_examples=100, deadline=None)
def test_ring_integral_increasing_in_gamma_and_d1(eta, d1, g1, g2):
    lo, hi = min(g1, g2), max(g1, g2)
    assert ring_integral(d1, lo, 10.0, 3000.0, eta) <= ring_integral(d1, hi, 10.0, 3000.0, eta) * (1 + 1e-12)
    assert ring_integral(d1, lo, 10.0, 3000.0, eta) <= ring_integral(2 * d1, lo, 10.0, 3000.0, eta) * (1 + 1e-12)


@pytest.mark.parametrize("args", [
    (0.0, 1.0, 0.0, 1.0, 2.75),
    (10.0, 0.0, 0.0, 1.0, 2.75),
    (10.0, 1.0, 5.0, 1.0, 2.75),
    (10.0, 1.0, -1.0, 1.0, 2.75),
    (10.0, 1.0, 0.0, 1.0, 1.5),
    (10.0, 1.0, 0.0, float("inf"), 2.75),
])
def test_ring_integral_domain(args):
    with pytest.raises(DomainError):
        ring_integral(*args)


def test_python_and_compiled_series_agree():
    rng = np.random.default_rng(2)
    for _ in range(50):
        b = 2.0 / rng.uniform(2, 4)
        w = rng.uniform(0, 2 / 3)
        z = 10 ** rng.uniform(0.31, 15)
        assert_allclose(specfun._pfaff_sum(b, w)[0], specfun._pfaff_sum_py(b, w)[0], rtol=1e-15)
        assert_allclose(specfun._large_z(b, z)[0], specfun._large_z_py(b, z)[0], rtol=1e-15)


def test_vectorized_wrapper():
    out = specfun.ring_integral_vec(100.0, [0.5, 1.0, 2.0], 0.0, 500.0, 2.75)
    assert out.shape == (3,)
    assert_allclose(out[1], ring_integral(100.0, 1.0, 0.0, 500.0, 2.75))
