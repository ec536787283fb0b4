import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lowscat import (ConfigError, NotEscapingError, coulomb, integrate_newton, omega_plus,
                     planar_orbit, power_law, spiral_example, virial_check)
from lowscat.asymptotics import (as_field, energy_drift, free_potential, loglog_slope,
                                 spiral_amplitude_ratio, spiral_potential, swept_angle)
from lowscat.errors import CoreEntryError


@given(v=st.lists(st.floats(-3, 3), min_size=2, max_size=2).filter(
    lambda v: np.hypot(*v) > 0.1 and 2 * v[0] + v[1] >= 0))   # moving away from the core
def test_free_motion_is_a_straight_line(v):
    v = np.array(v)
    x0 = np.array([2.0, 1.0])
    t = np.linspace(0.0, 50.0, 11)
    tr = integrate_newton(free_potential(), x0, v, (0.0, 50.0), t_eval=t)
    assert np.allclose(tr.positions, x0 + t[:, None] * v, atol=1e-8)
    assert np.allclose(tr.velocities, v)


def test_free_motion_direction_limit():
    v = np.array([0.6, -0.8])
    te = np.geomspace(1.0, 1e8, 400)
    tr = integrate_newton(free_potential(), np.array([3.0, 4.0]), v, (0.0, 1e8), t_eval=te)
    rep = omega_plus(tr)
    assert np.allclose(rep.omega_plus, v, atol=1e-8)
    assert rep.decay_exponent_fit == pytest.approx(1.0, abs=0.05)


def test_energy_conserved_on_coulomb_orbit():
    pot = coulomb(1.0)
    te = np.geomspace(1e-3, 1e4, 200)
    tr = integrate_newton(pot, np.array([5.0, 0.0]), np.array([0.0, 0.7]), (0.0, 1e4), tol=1e-12,
                          t_eval=te)
    assert energy_drift(tr, pot) <= 1e-9


def test_core_entry_detected():
    with pytest.raises(CoreEntryError):
        integrate_newton(coulomb(1.0), np.array([5.0, 0.0]), np.array([-1.0, 0.0]), (0.0, 100.0))


@pytest.mark.parametrize("bad", [1e-3, 1e-15])
def test_tolerance_range_enforced(bad):
    with pytest.raises(ConfigError):
        integrate_newton(free_potential(), [2.0, 0.0], [1.0, 0.0], (0.0, 1.0), tol=bad)


def test_bound_orbit_not_escaping():
    te = np.linspace(0.0, 2e3, 500)
    tr = integrate_newton(coulomb(1.0), np.array([5.0, 0.0]), np.array([0.0, 0.4]), (0.0, 2e3),
                          tol=1e-10, t_eval=te)
    with pytest.raises(NotEscapingError):
        omega_plus(tr)


@pytest.mark.parametrize("mu", [0.5, 1.0, 1.5])
def test_zero_energy_orbit_growth_and_virial(mu):
    pot = power_law(1.0, mu)
    orb = planar_orbit(pot, 0.0, 2.0, -0.8, t_max=1e10)
    tr = orb.trajectory(np.geomspace(1.0, 1e10, 500))
    rep = omega_plus(tr)
    assert np.allclose(rep.omega_plus, [1.0, 0.0], atol=1e-4)
    out = virial_check(tr, pot)
    assert out["virial_velocity"] and out["virial_position"]
    assert out["position_growth"] == pytest.approx(2.0 / (2.0 + mu), abs=0.02)
    assert out["speed_growth"] == pytest.approx(2.0 / (2.0 + mu) - 1.0, abs=0.02)


def test_positive_energy_growth_is_ballistic():
    pot = coulomb(1.0)
    orb = planar_orbit(pot, 0.5, 2.0, 0.7, t_max=1e8)
    out = virial_check(orb.trajectory(np.geomspace(1.0, 1e8, 400)), pot)
    assert out["position_growth"] == pytest.approx(1.0, abs=0.02)
    assert out["position_growth_pass"] and out["speed_growth_pass"]


def test_loglog_slope_of_power():
    t = np.geomspace(1.0, 1e4, 50)
    assert loglog_slope(t, 3 * t**0.7) == pytest.approx(0.7, rel=1e-12)
    assert math.isnan(loglog_slope(t[:1], t[:1]))


@pytest.mark.parametrize("mu,c", [(1.0, 1.0), (0.5, 2.0), (1.5, 0.5)])
def test_spiral_orbit_follows_log_spiral(mu, c):
    p, tr, drift = spiral_example(mu, c, 0.2, span=1e3)
    assert drift <= 1e-6
    r = np.linalg.norm(tr.positions, axis=1)
    assert swept_angle(tr) == pytest.approx(c * math.log(r[-1] / r[0]), rel=1e-6)
    # zero energy along the whole orbit
    e = tr.energies(spiral_potential(p))
    assert np.max(np.abs(e)) <= 1e-8 * np.max(np.abs(spiral_potential(p).value(tr.positions)))


def test_spiral_potential_gradient():
    mu, c = 1.0, 1.0
    p, _, _ = spiral_example(mu, c, 0.2, span=10.0)
    V = spiral_potential(p)
    x = np.array([3.0, -2.0])
    h = 1e-6
    fd = np.array([(V.value(x + h * e) - V.value(x - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(V.grad(x), fd, rtol=1e-7)


def test_spiral_parameter_checks():
    # A/B for mu = c = 1, and invalid parameters
    a = 2.0 / 3.0
    assert spiral_amplitude_ratio(1.0, 1.0) == pytest.approx((1 - a) * 2.0 / (2 * a - 1))
    with pytest.raises(ConfigError):
        spiral_example(2.5, 1.0, 0.2)
    with pytest.raises(ConfigError):
        spiral_example(1.0, -1.0, 0.2)


def test_as_field_rejects_plain_objects():
    with pytest.raises(ConfigError):
        as_field(object())
