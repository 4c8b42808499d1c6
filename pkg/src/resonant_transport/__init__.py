"""Weakly coupled thermostatted oscillator lattices: simulation and energy transport.

The subpackages follow the data flow: :mod:`lattice` (geometry, temperatures,
potentials), :mod:`dynamics` (SDE integrators), :mod:`resavg` (resonant
averaging and the effective drift), :mod:`observables` (energy flows and
estimators), :mod:`transport` (conductivity, Green-Kubo, Fourier sweeps) and
:mod:`harness` (configs, experiments, reports).
"""

__version__ = "0.1.0"

from .state import PhaseState
from .lattice import (
    LatticeSpec,
    PotentialModel,
    TemperatureProfile,
    build_chain,
    build_lattice,
    custom_potential,
    get_model,
    hamiltonian,
    linear_temperature_profile,
    local_energy,
    uniform_temperature_profile,
)
from .dynamics import (
    SimParams,
    rotating_noise_increment,
    sample_mu0,
    simulate,
    step_effective,
    step_full_rotating,
    step_ou_exact,
    to_lab_frame,
    to_rotating_frame,
)
from .resavg import (
    angle_derivative,
    effective_drift,
    resonant_average,
    resonant_potential,
)
from .observables import (
    EstimatorResult,
    energy_flow,
    resonant_flow,
    stationary_flow,
    time_average,
)
from .transport import (
    ConductivityQuery,
    conductivity,
    fourier_sweep,
    generator_apply,
    green_kubo_correlation,
    green_kubo_total,
    low_temperature_rescale,
    solve_eta,
)

__all__ = [
    "__version__",
    "PhaseState",
    "LatticeSpec",
    "PotentialModel",
    "TemperatureProfile",
    "build_chain",
    "build_lattice",
    "custom_potential",
    "get_model",
    "hamiltonian",
    "linear_temperature_profile",
    "local_energy",
    "uniform_temperature_profile",
    "SimParams",
    "rotating_noise_increment",
    "sample_mu0",
    "simulate",
    "step_effective",
    "step_full_rotating",
    "step_ou_exact",
    "to_lab_frame",
    "to_rotating_frame",
    "angle_derivative",
    "effective_drift",
    "resonant_average",
    "resonant_potential",
    "EstimatorResult",
    "energy_flow",
    "resonant_flow",
    "stationary_flow",
    "time_average",
    "ConductivityQuery",
    "conductivity",
    "fourier_sweep",
    "generator_apply",
    "green_kubo_correlation",
    "green_kubo_total",
    "low_temperature_rescale",
    "solve_eta",
]
