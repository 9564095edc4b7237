import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recoil_lab import (
    ConvergenceError,
    Direction,
    DomainError,
    Tier,
    Velocity,
    WaveVector,
    aberrate_bradley,
    aberrate_cos,
    aberrate_exact,
    aberrate_first_order,
    boost_wavevectors,
    deaberrate_exact,
    doppler_frequency,
    lorentz_factor,
    solid_angle_jacobian,
    transform_wavevector,
    transform_wavevector_spherical,
)
from recoil_lab.constants import C_SI

betas = st.floats(min_value=0.0, max_value=0.9)
small_betas = st.floats(min_value=1e-8, max_value=1e-3)
thetas = st.floats(min_value=0.0, max_value=math.pi)


def test_doppler_example():
    assert doppler_frequency(4.0e15, 1e-3, math.cos(math.pi / 3)) == pytest.approx(4.002e15, rel=1e-15)
    assert doppler_frequency(4.0e15, 0.0, 0.3) == 4.0e15


def test_doppler_exact_includes_gamma():
    w = doppler_frequency(1.0, 0.6, 0.0, Tier.EXACT)
    assert w == pytest.approx(1.25, rel=1e-15)


def test_doppler_rejects_superluminal():
    with pytest.raises(DomainError):
        doppler_frequency(1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        doppler_frequency(1.0, 0.1, 1.5)


def test_lorentz_factor_small_beta():
    assert lorentz_factor(1e-5) == pytest.approx(1.00000000005, rel=1e-15)


def test_aberration_known_value():
    assert aberrate_exact(2.0, 0.05) == pytest.approx(1.954036195652166, rel=1e-14)


def test_aberration_fixed_points():
    assert aberrate_exact(0.0, 0.3) == 0.0
    assert aberrate_exact(math.pi, 0.3) == pytest.approx(math.pi, abs=1e-15)


@given(thetas, betas)
def test_deaberration_inverts(theta, beta):
    assert deaberrate_exact(aberrate_exact(theta, beta), beta) == pytest.approx(theta, abs=1e-12)


@given(thetas, small_betas)
def test_first_order_and_bradley_track_exact(theta, beta):
    exact = aberrate_exact(theta, beta)
    assert abs(aberrate_first_order(theta, beta) - exact) <= 2 * beta**2 + 1e-15
    assert abs(aberrate_bradley(theta, beta) - exact) <= 2 * beta**2 + 1e-15


def test_bradley_gives_up_when_beta_is_huge():
    with pytest.raises(ConvergenceError):
        aberrate_bradley(2.5, 0.99)


@given(st.floats(min_value=-1, max_value=1), betas)
def test_aberrate_cos_on_unit_circle(c, beta):
    cp, sp = aberrate_cos(c, beta)
    assert cp**2 + sp**2 == pytest.approx(1.0, abs=1e-12)


@given(st.floats(min_value=-1, max_value=1), st.floats(min_value=0, max_value=1e-3))
def test_jacobian_matches_finite_difference(c, beta):
    # dcos'/dcos for the exact map (c + b)/(1 + b c) is (1 - b^2)/(1 + b c)^2,
    # so the inverse (solid-angle) Jacobian is its reciprocal
    h = 1e-6
    lo, hi = max(c - h, -1.0), min(c + h, 1.0)
    fd = (hi - lo) / (aberrate_cos(hi, beta)[0] - aberrate_cos(lo, beta)[0])
    assert solid_angle_jacobian(c, beta, "exact") == pytest.approx(fd, rel=1e-6)
    assert solid_angle_jacobian(c, beta) == pytest.approx(fd, rel=1e-6 + 2 * beta**2)


def test_jacobian_integrates_to_four_pi():
    c, w = np.polynomial.legendre.leggauss(32)
    for beta in (0.0, 0.1, 0.5):
        total = 2 * math.pi * np.sum(w / solid_angle_jacobian(c, beta, Tier.EXACT))
        assert total == pytest.approx(4 * math.pi, rel=1e-13)


@given(thetas, st.floats(min_value=0, max_value=2 * math.pi), betas)
@settings(max_examples=50)
def test_exact_boost_keeps_wavevector_null(theta, phi, beta):
    n = Direction.from_angles(theta, phi)
    k = WaveVector.from_direction(n, 1e15)
    kp = transform_wavevector(k, Velocity.from_beta(beta, (0.3, -0.2, 0.9)), Tier.EXACT)
    g = lorentz_factor(beta)
    vhat = np.array([0.3, -0.2, 0.9]) / np.linalg.norm([0.3, -0.2, 0.9])
    expected_omega = 1e15 * g * (1 + beta * float(n.as_array() @ vhat))
    assert kp.omega() == pytest.approx(expected_omega, rel=1e-12)


def test_first_order_boost_is_additive():
    k = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, -2.0]])
    v = np.array([0.0, 0.0, 1e-3 * C_SI])
    out = boost_wavevectors(k, v)
    np.testing.assert_allclose(out[:, 2], k[:, 2] + np.array([1.0, 2.0]) * 1e-3, rtol=0, atol=1e-15)


@given(thetas, small_betas)
@settings(max_examples=50)
def test_spherical_route_agrees_to_first_order(theta, beta):
    k = WaveVector.from_direction(Direction.from_angles(theta, 0.4), 1.0)
    v = Velocity.from_beta(beta, (0.0, 0.0, 1.0))
    a = transform_wavevector(k, v).as_array()
    b = transform_wavevector_spherical(k, v).as_array()
    assert np.linalg.norm(a - b) <= 3 * beta**2 + 1e-15


def test_velocity_validation():
    with pytest.raises(DomainError):
        Velocity.from_array([C_SI, 0.0, 0.0])
    v = Velocity.from_beta(0.5, (2.0, 0.0, 0.0))
    assert v.beta() == pytest.approx(0.5)
    assert (v * 0.5).beta() == pytest.approx(0.25)


def test_direction_normalizes_and_negates():
    n = Direction.from_array([0.0, 3.0, 4.0])
    np.testing.assert_allclose(n.as_array(), [0.0, 0.6, 0.8])
    np.testing.assert_allclose((-n).as_array(), [0.0, -0.6, -0.8])
    with pytest.raises(DomainError):
        Direction.from_array([0.0, 0.0, 0.0])


def test_tier_coerce():
    assert Tier.coerce("first-order") is Tier.FIRST_ORDER
    assert Tier.coerce("exact") is Tier.EXACT
    with pytest.raises(DomainError):
        Tier.coerce("second")
