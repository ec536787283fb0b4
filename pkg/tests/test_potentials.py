import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lowscat import (ConfigError, TotalPotential, anisotropic_power, check_conditions, coulomb,
                     power_law, power_law_short_range, zero_perturbation)
from lowscat.errors import DomainError
from lowscat.potentials import g, hessian_v1, t_tilde, third_derivative_contraction

MODELS = [power_law(1.0, 0.5), coulomb(2.0), power_law(0.7, 1.8),
          power_law_short_range(1.0, 0.8, 1.0, 1.5)]


@pytest.mark.parametrize("pot", MODELS, ids=lambda p: p.name + str(p.mu))
@pytest.mark.parametrize("r", [1.0, 1.7, 12.0, 3e3])
def test_radial_derivatives_match_finite_differences(pot, r):
    h = 1e-4 * r
    for n in (1, 2, 3):
        c = max(r, 1.0 + 2 * h)      # keep the stencil inside r >= 1
        f = [float(pot.deriv(c + k * h, n - 1)) for k in (-2, -1, 1, 2)]
        fd = (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * h)
        assert fd == pytest.approx(float(pot.deriv(c, n)), rel=1e-7)


def test_radius_below_one_rejected():
    with pytest.raises(DomainError):
        power_law(1.0, 1.0).value(0.5)
    with pytest.raises(DomainError):
        g(coulomb(), -0.1, 2.0)


@given(r=st.floats(1.0, 1e6), mu=st.floats(0.1, 1.9), gamma=st.floats(0.2, 5.0))
def test_t_tilde_closed_form(r, mu, gamma):
    # zero-energy radial arrival time for V1 = -gamma r^-mu
    k = 1.0 + mu / 2.0
    exact = (r**k - 1.0) / (k * math.sqrt(2.0 * gamma))
    assert t_tilde(power_law(gamma, mu), r) == pytest.approx(exact, rel=1e-10, abs=1e-14)


@given(x=st.lists(st.floats(-50, 50), min_size=3, max_size=3).filter(
    lambda v: np.linalg.norm(v) > 1.5))
def test_hessian_is_second_derivative(x):
    pot = power_law(1.0, 0.7)
    x = np.array(x)
    h = 1e-5 * np.linalg.norm(x)
    H = np.empty((3, 3))
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        gp = pot.deriv(np.linalg.norm(x + e)) * (x + e) / np.linalg.norm(x + e)
        gm = pot.deriv(np.linalg.norm(x - e)) * (x - e) / np.linalg.norm(x - e)
        H[:, k] = (gp - gm) / (2 * h)
    assert np.allclose(hessian_v1(pot, x), H, rtol=1e-6, atol=1e-9 * np.abs(H).max())


def test_third_derivative_contraction_matches_hessian_differences():
    pot = coulomb(1.0)
    y = np.array([3.0, -2.0, 1.5])
    z = np.array([0.3, 0.1, -0.7])
    h = 1e-5
    # D^3 V(y){z, z} = d/ds [D^2 V(y + s z) z] at s = 0
    fd = (hessian_v1(pot, y + h * z) @ z - hessian_v1(pot, y - h * z) @ z) / (2 * h)
    assert np.allclose(third_derivative_contraction(pot, y, z), fd, rtol=1e-7)


def test_anisotropic_perturbation_gradient_and_hessian():
    p = anisotropic_power(0.4, 0.3, 1.0, [1.0, 2.0])
    x = np.array([4.0, -3.0])
    h = 1e-6
    grad = np.array([(p.v2(x + h * e) - p.v2(x - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(p.grad_v2(x), grad, rtol=1e-7)
    hess = np.stack([(p.grad_v2(x + h * e) - p.grad_v2(x - h * e)) / (2 * h) for e in np.eye(2)],
                    axis=1)
    assert np.allclose(p.hess_v2(x), hess, rtol=1e-6)
    # homogeneous decay of degree -(mu + eps2)
    far = np.array([3e4, 1e4])
    ratio = p.v2(2 * far) / p.v2(far)
    assert ratio == pytest.approx(2.0 ** -1.3, rel=1e-6)


def test_total_potential_adds_parts():
    pot = power_law(1.0, 1.0)
    pert = anisotropic_power(0.2, 0.25, 1.0)
    V = TotalPotential(pot, pert)
    x = np.array([[3.0, 4.0], [10.0, 0.0]])
    assert np.allclose(V.value(x), -1.0 / np.array([5.0, 10.0]) + pert.v2(x))
    Z = TotalPotential(pot, zero_perturbation(2))
    assert np.allclose(Z.grad(x), x / np.linalg.norm(x, axis=1)[:, None] ** 3)


def test_conditions_accept_standard_models():
    for pot in MODELS[:3]:
        rep = check_conditions(pot)
        assert rep.ok, rep.margins
    rep = check_conditions(power_law(1.0, 1.0), anisotropic_power(0.1, 0.25, 1.0))
    assert rep.ok
    assert "perturbation_decay" in rep.margins


def test_conditions_flag_out_of_range_decay():
    rep = check_conditions(power_law(1.0, 2.1))
    assert not rep.ok
    assert rep.margins["mu_range"] == pytest.approx(-0.1)


def test_convention_violation_reported():
    rep = check_conditions(power_law(1.0, 1.0), anisotropic_power(0.1, 0.4, 1.0))
    assert rep.margins["perturbation_rate"] == pytest.approx(0.25 - 0.4)
    assert not rep.ok


def test_bad_model_parameters():
    with pytest.raises(ConfigError):
        anisotropic_power(0.1, -0.2, 1.0)
    with pytest.raises(ConfigError):
        power_law_short_range(1.0, 1.0, 1.0, 0.5)
