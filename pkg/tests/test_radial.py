import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from lowscat import (ConeError, Cone, ScatteringData, TotalPotential, allowed_angle, apse_orbit,
                     coulomb, integrate_newton, kappa_sensitivity, L_of_theta1, planar_orbit,
                     power_law, radial_field, solve_mixed_radial, theta1_of_L, theta_tp,
                     turning_point, zero_perturbation)
from lowscat.errors import AdmissibilityError, ConfigError, NoTurningPointError
from lowscat.radial import KAPPA0_SQ, normalize_direction

mus = st.sampled_from([0.3, 0.5, 1.0, 1.5, 1.8])
energies = st.sampled_from([0.0, 0.01, 0.5, 2.0])


@given(mu=mus, lam=energies, r1=st.floats(1.0, 500.0), frac=st.floats(-0.95, 0.95))
def test_shooting_round_trip(mu, lam, r1, frac):
    pot = power_law(1.0, mu)
    L_max = 0.999 * math.sqrt(KAPPA0_SQ) * r1 * math.sqrt(2 * lam + 2 * r1**-mu)
    th_max = abs(theta1_of_L(pot, lam, r1, L_max))
    th = frac * th_max
    L = L_of_theta1(pot, lam, r1, th)
    assert theta1_of_L(pot, lam, r1, L) == pytest.approx(th, abs=1e-11)
    assert L * th <= 0.0


@given(mu=mus, lam=energies, L=st.floats(0.1, 20.0))
def test_theta1_odd_and_turning_point_root(mu, lam, L):
    pot = power_law(1.0, mu)
    r = 2.0 * math.sqrt(L * L / (2 * lam + 2)) + 2.0
    assume(L * L <= KAPPA0_SQ * r * r * (2 * lam + 2 * r**-mu))
    assert theta1_of_L(pot, lam, r, -L) == pytest.approx(-theta1_of_L(pot, lam, r, L), rel=1e-14)
    try:
        rt = turning_point(pot, lam, L)
    except NoTurningPointError:     # the root lies below r = 1
        return
    assert 2 * lam + 2 * rt**-mu - L * L / rt**2 == pytest.approx(0.0, abs=1e-12 * L * L / rt**2)


@given(lam=st.floats(0.01, 3.0), L=st.floats(1.6, 10.0), gamma=st.floats(0.5, 2.0))
def test_coulomb_turning_angle_closed_form(lam, L, gamma):
    # the turning point must lie in r >= 1
    assume(L * L >= 2.0 * lam + 2.0 * gamma + 1e-6)
    exact = math.pi - math.atan(math.sqrt(2 * lam) * L / gamma)
    assert theta_tp(coulomb(gamma), lam, L) == pytest.approx(exact, abs=1e-10)


@given(lam=st.floats(0.0, 3.0), r1=st.floats(1.0, 100.0))
def test_coulomb_allowed_angle_closed_form(lam, r1):
    exact = math.pi - math.atan(math.sqrt(2 * lam * (2 * lam * r1 * r1 + 2 * r1)))
    assert allowed_angle(coulomb(1.0), lam, r1) == pytest.approx(exact, abs=1e-9)


@pytest.mark.parametrize("lam", [0.0, 0.3])
@pytest.mark.parametrize("mu", [0.5, 1.5])
def test_sensitivity_against_small_angle_shooting(mu, lam):
    pot = power_law(1.0, mu)
    r1 = 3.0
    th = 1e-4
    L = L_of_theta1(pot, lam, r1, th)
    kap2 = (L / (r1 * math.sqrt(2 * lam + 2 * r1**-mu))) ** 2
    assert kap2 / th**2 == pytest.approx(kappa_sensitivity(pot, lam, r1), rel=1e-6)


def test_angle_beyond_admissible_range_rejected():
    pot = power_law(1.0, 1.0)
    with pytest.raises(AdmissibilityError):
        L_of_theta1(pot, 0.5, 2.0, 3.1)


def _orbit_energy_and_momentum(traj, pot):
    x, v = traj.positions, traj.velocities
    e = traj.energies(TotalPotential(pot, zero_perturbation(2)))
    lz = x[:, 0] * v[:, 1] - x[:, 1] * v[:, 0]
    return e, lz


@pytest.mark.parametrize("lam", [0.0, 0.7])
def test_planar_orbit_invariants(lam):
    pot = power_law(1.0, 1.2)
    orb = planar_orbit(pot, lam, 4.0, -1.0, t_max=1e5)
    tr = orb.trajectory(np.geomspace(1.0, 1e5, 300))
    e, lz = _orbit_energy_and_momentum(tr, pot)
    assert np.max(np.abs(e - lam)) <= 1e-10 * max(1.0, lam)
    assert np.max(np.abs(lz - orb.L)) <= 1e-10 * abs(orb.L)
    # initial data: |x(1)| = r1 at angle theta1 to the asymptote (1, 0)
    assert np.linalg.norm(tr.positions[0]) == pytest.approx(4.0, rel=1e-13)
    assert math.atan2(tr.positions[0, 1], tr.positions[0, 0]) == pytest.approx(-1.0, abs=1e-12)


def test_time_radius_maps_are_inverse():
    orb = planar_orbit(coulomb(1.0), 0.2, 2.0, 0.6, t_max=1e4)
    t = np.geomspace(1.0, 1e4, 50)
    assert np.allclose(orb.t_of_r(orb.r_of_t(t)), t, rtol=1e-12)


@pytest.mark.parametrize("lam,th", [(0.0, -0.9), (0.4, 0.5), (1.0, -1.3)])
def test_planar_orbit_matches_direct_integration(lam, th):
    pot = power_law(1.0, 0.8)
    orb = planar_orbit(pot, lam, 3.0, th, t_max=1e3)
    t = np.geomspace(1.0, 1e3, 40)
    tr = orb.trajectory(t)
    ref = integrate_newton(TotalPotential(pot, zero_perturbation(2)), tr.positions[0],
                           tr.velocities[0], (1.0, 1e3), tol=1e-12, t_eval=t)
    err = np.linalg.norm(ref.positions - tr.positions, axis=1) / np.linalg.norm(tr.positions, axis=1)
    assert err.max() <= 1e-8


def test_apse_orbit_symmetry_and_energy():
    pot = power_law(1.0, 1.0)
    tr = apse_orbit(pot, 0.2, 3.0, 1e4)
    r = np.linalg.norm(tr.positions, axis=1)
    i0 = int(np.argmin(np.abs(tr.times)))
    assert r[i0] == pytest.approx(turning_point(pot, 0.2, 3.0), rel=1e-12)
    mirror = np.interp(-tr.times[::-1], tr.times, r)
    assert np.allclose(mirror, r[::-1], rtol=1e-8)
    e, lz = _orbit_energy_and_momentum(tr, pot)
    assert np.max(np.abs(e - 0.2)) <= 1e-9
    assert np.allclose(lz, 3.0, rtol=1e-9)
    # outgoing asymptote along (1, 0)
    assert tr.positions[-1, 1] / r[-1] == pytest.approx(0.0, abs=0.05)


@given(mu=mus, lam=energies, ang=st.floats(-0.6, 0.6), r=st.floats(1.001, 1e4))
def test_radial_field_speed_and_plane(mu, lam, ang, r):
    pot = power_law(1.0, mu)
    w = np.array([0.0, 1.0, 0.0])
    x = r * np.array([math.sin(ang), math.cos(ang), 0.0])
    F = radial_field(pot, x, w, lam)
    assert np.linalg.norm(F) == pytest.approx(math.sqrt(2 * lam + 2 * r**-mu), rel=1e-12)
    assert abs(F[2]) <= 1e-14 * np.linalg.norm(F)
    # outward radial velocity, bent towards omega
    assert F @ x > 0


def test_mixed_radial_orbit_points_at_omega():
    pot = coulomb(1.0)
    w = normalize_direction([0.6, 0.8])
    x = np.array([3.0, 8.0])
    _, traj, F1 = solve_mixed_radial(pot, ScatteringData(x, w, 0.3), t_grid=np.geomspace(1, 1e8, 50))
    assert np.allclose(traj.positions[0], x, rtol=1e-12)
    assert np.allclose(traj.velocities[0], F1)
    xh = traj.positions[-1] / np.linalg.norm(traj.positions[-1])
    assert np.linalg.norm(xh - w) < 1e-3


def test_mixed_radial_rejects_points_outside_cone():
    with pytest.raises(ConeError):
        solve_mixed_radial(coulomb(1.0), ScatteringData([-5.0, 0.1], [1.0, 0.0], 0.0), sigma=0.5)


def test_cone_membership_and_validation():
    c = Cone(2.0, 0.5, np.array([1.0, 0.0]))
    assert c.contains([3.0, 1.0]) and not c.contains([1.5, 0.0]) and not c.contains([1.0, 3.0])
    inc = Cone(2.0, 0.5, np.array([1.0, 0.0]), sign=-1)
    assert inc.contains([-3.0, 1.0])
    with pytest.raises(ConfigError):
        Cone(2.0, 1.5, np.array([1.0, 0.0]))
    with pytest.raises(ConfigError):
        ScatteringData([2.0, 0.0], [1.0, 1.0], 0.0)
