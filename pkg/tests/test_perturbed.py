import math

import numpy as np
import pytest

from lowscat import (ConeError, ScatteringData, TotalPotential, anisotropic_power, coulomb,
                     integrate_newton, power_law, radial_field, solve_mixed_perturbed,
                     velocity_field, zero_perturbation)
from lowscat.perturbed import (bound_probe, flow_consistency, lambda_continuity, picard_map,
                               make_context, truncated_field_convergence)
from lowscat.linforce import WeightedGridFunction

W = np.array([1.0, 0.0])


@pytest.mark.parametrize("lam", [0.0, 0.4])
def test_zero_perturbation_reduces_to_radial_field(mu1_pot, lam):
    x = np.array([20.0, 6.0])
    F = velocity_field(mu1_pot, zero_perturbation(2), x, W, lam)
    assert np.array_equal(F, radial_field(mu1_pot, x, W, lam))
    _, _, sample, rep = solve_mixed_perturbed(mu1_pot, None, ScatteringData(x, W, lam))
    assert np.allclose(sample.F, sample.F1, rtol=1e-12)
    assert rep.iterations == 0


@pytest.mark.parametrize("lam", [0.0, 0.3])
def test_fixed_point_orbit_solves_newton_equation(mu1_pot, weak_dipole, lam):
    x = np.array([96.0, 32.0])
    _, y, sample, rep = solve_mixed_perturbed(mu1_pot, weak_dipole, ScatteringData(x, W, lam))
    assert rep.fixed_point_residual <= 1e-8 * max(1.0, rep.norm)
    assert rep.contraction_ratio < 0.5
    total = TotalPotential(mu1_pot, weak_dipole)
    assert abs(sample.energy_defect(total)) <= 1e-8 * abs(float(total.value(x)))
    # independent route: integrate from (x, F(x)) and compare with the fixed-point orbit
    m = y.times <= 1e4
    ref = integrate_newton(total, x, sample.F, (1.0, 1e4), tol=1e-12, t_eval=y.times[m])
    err = np.linalg.norm(ref.positions - y.positions[m], axis=1) / np.linalg.norm(y.positions[m], axis=1)
    assert err.max() <= 1e-7
    # and its direction tends to omega
    far = y.positions[-1] / np.linalg.norm(y.positions[-1])
    assert np.linalg.norm(far - W) < 1e-2


def test_picard_map_fixes_the_solution(mu1_pot, weak_dipole):
    data = ScatteringData(np.array([64.0, 10.0]), W, 0.0)
    ctx = make_context(mu1_pot, weak_dipole, data)
    z, _, _, _ = solve_mixed_perturbed(mu1_pot, weak_dipole, data, ctx=ctx)
    again = picard_map(WeightedGridFunction(ctx.grid, z.values, ctx.s), ctx)
    assert np.max(np.abs(again.values - z.values)) <= 1e-8 * max(1.0, np.max(np.abs(z.values)))


def test_field_correction_scales_with_strength(mu1_pot):
    x = np.array([96.0, -20.0])
    F1 = radial_field(mu1_pot, x, W, 0.0)
    d1 = velocity_field(mu1_pot, anisotropic_power(0.01, 0.25, 1.0, [0, 1]), x, W, 0.0) - F1
    d2 = velocity_field(mu1_pot, anisotropic_power(0.02, 0.25, 1.0, [0, 1]), x, W, 0.0) - F1
    assert np.linalg.norm(d2 - 2 * d1) <= 0.05 * np.linalg.norm(d1)


def test_flow_consistency_perturbed(mu1_pot, weak_dipole):
    out = flow_consistency(mu1_pot, weak_dipole, ScatteringData(np.array([80.0, 30.0]), W, 0.2))
    assert out["max_error"] <= 1e-5


def test_flow_consistency_free_coulomb():
    out = flow_consistency(coulomb(1.0), None, ScatteringData(np.array([6.0, 2.0]), W, 0.0))
    assert out["max_error"] <= 1e-8


def test_field_continuity_at_threshold(mu1_pot, weak_dipole):
    # the radial part of F(lam) - F(0) decays like lam^1/2, the perturbative part more slowly;
    # the two can partly cancel, so only the deep tail is required to shrink monotonically
    lams = tuple(10.0 ** -k for k in range(1, 11))
    out = lambda_continuity(mu1_pot, weak_dipole, np.array([120.0, -40.0]), W, lams)
    dev = out["deviations"]
    assert dev[-1] < 1e-3 * dev[0]
    assert all(dev[i + 1] < dev[i] for i in range(5, 9))


def test_outside_cone_rejected(mu1_pot, weak_dipole):
    with pytest.raises(ConeError):
        solve_mixed_perturbed(mu1_pot, weak_dipole, ScatteringData(np.array([40.0, 60.0]), W, 0.0),
                              R0=32.0, sigma=0.3)


def test_derivative_probe_exponent_zero_energy():
    pts = [np.array([r, 0.2 * r]) for r in np.geomspace(20.0, 2000.0, 4)]
    out = bound_probe(power_law(1.0, 1.0), None, "dF", pts, W)
    assert out["fitted_exponent"] == pytest.approx(out["predicted_exponent"], abs=0.02)


def test_truncated_perturbations_converge(mu1_pot, weak_dipole):
    data = ScatteringData(np.array([80.0, 20.0]), W, 0.0)
    rows = truncated_field_convergence(mu1_pot, weak_dipole, data, [1e2, 1e3, 1e4])
    dev = [r["field_deviation"] for r in rows]
    jac = [r["jacobian_deviation"] for r in rows]
    assert dev[0] > dev[1] > dev[2] and jac[0] > jac[1] > jac[2]
    assert dev[-1] < 0.02 * math.hypot(*velocity_field(mu1_pot, weak_dipole, data.x, W, 0.0))
