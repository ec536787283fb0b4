"""Low-energy classical scattering for slowly decaying attractive potentials.

Modules: ``potentials`` (model potentials and condition audits), ``radial``
(spherically symmetric orbits and the radial mixed problem), ``asymptotics``
(asymptotic directions, rates, the spiral counterexample), ``linforce``
(decaying solutions of z'' - q z = f), ``perturbed`` (fixed-point solution
of the perturbed mixed problem, velocity field), ``eikonal`` (phase function
and orbit classification) and ``cli``.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConeError, LowscatError, NoMatchError, NotEscapingError,
                     NumericalError)
from .potentials import (Perturbation, RadialPotential, TotalPotential, anisotropic_power,
                         check_conditions, coulomb, power_law, power_law_short_range,
                         zero_perturbation)
from .radial import (Cone, PlanarOrbit, ScatteringData, Trajectory, allowed_angle, apse_orbit,
                     kappa_sensitivity, L_of_theta1, planar_orbit, radial_field,
                     solve_mixed_radial, theta1_of_L, theta_tp, turning_point)
from .asymptotics import integrate_newton, omega_plus, spiral_example, virial_check
from .linforce import CoefficientPath, WeightedGridFunction, log_grid, solve_decaying
from .perturbed import select_R0, solve_mixed_perturbed, velocity_field
from .eikonal import classify_orbit, eikonal_residual, phase, phase_gradient

__all__ = [
    "ConfigError", "ConeError", "LowscatError", "NoMatchError", "NotEscapingError",
    "NumericalError", "Perturbation", "RadialPotential", "TotalPotential", "anisotropic_power",
    "check_conditions", "coulomb", "power_law", "power_law_short_range", "zero_perturbation",
    "Cone", "PlanarOrbit", "ScatteringData", "Trajectory", "allowed_angle", "apse_orbit",
    "kappa_sensitivity", "L_of_theta1", "planar_orbit", "radial_field", "solve_mixed_radial",
    "theta1_of_L", "theta_tp", "turning_point", "integrate_newton", "omega_plus",
    "spiral_example", "virial_check", "CoefficientPath", "WeightedGridFunction", "log_grid",
    "solve_decaying", "select_R0", "solve_mixed_perturbed", "velocity_field", "classify_orbit",
    "eikonal_residual", "phase", "phase_gradient", "__version__",
]
