"""Stationary 1-D scattering from counter-propagating classical trajectories.

The wavefunction in each region of a piecewise-constant potential is split
into a right- and a left-moving plane wave.  Trajectories on those waves move
classically; at steps they spawn reflected and transmitted trajectories with
the local amplitude ratios.  Running the ensemble until the outgoing
amplitudes stop changing gives exact reflection and transmission
probabilities, which :mod:`bipolar_scattering.oracle` checks against
transfer-matrix solutions.
"""

__version__ = "0.1.0"

from .config import SimulationConfig, parse_config
from .dynamics import propagate_to_event, recombine, run, spawn, tunnel_leg
from .errors import (
    ConfigError,
    EnergyAtStepEdge,
    NotConverged,
    ScatteringError,
)
from .observe import Monitor, ScatteringResult, combine_incidences, converged, probabilities, reconstruct
from .oracle import solve_exact, step_coefficients
from .potential import PiecewisePotential, build_potential, classical_momentum, square_barrier
from .waves import ComponentWave, Trajectory, flux, sample_wave, superpose

__all__ = [
    "ComponentWave",
    "ConfigError",
    "EnergyAtStepEdge",
    "Monitor",
    "NotConverged",
    "PiecewisePotential",
    "ScatteringError",
    "ScatteringResult",
    "SimulationConfig",
    "Trajectory",
    "build_potential",
    "classical_momentum",
    "combine_incidences",
    "converged",
    "flux",
    "parse_config",
    "probabilities",
    "propagate_to_event",
    "recombine",
    "reconstruct",
    "run",
    "sample_wave",
    "solve_exact",
    "spawn",
    "square_barrier",
    "step_coefficients",
    "superpose",
    "tunnel_leg",
]
