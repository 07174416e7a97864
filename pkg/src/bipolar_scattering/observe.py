"""Edge monitors, convergence control and wavefunction reconstruction."""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GridTooCoarse, NoSignal
from .waves import Trajectory, superpose

#: amplitude changes below this (relative to the incident amplitude) are not jumps
JUMP_FLOOR = 1e-13


@dataclass(frozen=True)
class Jump:
    t: float
    cycle: int
    delta_p: float  # signed change of the probability readout
    amplitude: float  # |change of flux-normalised amplitude|
    bound: float  # largest |dP| compatible with ``amplitude``

    @property
    def magnitude(self) -> float:
        return self.bound


@dataclass
class Monitor:
    """Probe at an edge of the region of interest watching one outgoing component.

    The probability readout is flux-normalised: P = (p_out / p_in) (r / r_inc)^2.
    Each change of the crossing amplitude is logged as a :class:`Jump`.
    """

    position: float
    side: str  # "left" (reflected) or "right" (transmitted)
    p_out: float
    p_in: float
    r_inc: float = 1.0
    E: float = 0.0
    hbar: float = 1.0
    history: list[tuple[float, float, float]] = field(default_factory=list)
    jumps: list[Jump] = field(default_factory=list)

    def _scale(self) -> float:
        return math.sqrt(self.p_out / self.p_in) / self.r_inc

    @property
    def probability(self) -> float:
        if not self.history:
            return 0.0
        return (self.p_out / self.p_in) * (self.history[-1][1] / self.r_inc) ** 2

    @property
    def last_jump(self) -> Jump | None:
        return self.jumps[-1] if self.jumps else None

    def value_at(self, t: float) -> complex:
        """Latest recorded component value carried forward to time ``t``."""
        if not self.history:
            return 0j
        t0, r, s = self.history[-1]
        return r * cmath.exp(1j * (s - self.E * (t - t0)) / self.hbar)

    def record(self, traj: Trajectory, cycle: int = 0) -> Jump | None:
        if self.history and traj.t < self.history[-1][0]:
            raise ValueError("monitor records must be time ordered")
        old = self.value_at(traj.t)
        new = traj.r * cmath.exp(1j * traj.s / self.hbar)
        P_old = self.probability
        if self.history and traj.t == self.history[-1][0]:
            self.history[-1] = (traj.t, traj.r, traj.s)
        else:
            self.history.append((traj.t, traj.r, traj.s))
        amp = abs(new - old) * self._scale()
        if amp <= JUMP_FLOOR:
            return None
        jump = Jump(
            traj.t,
            cycle,
            self.probability - P_old,
            amp,
            2.0 * math.sqrt(P_old) * amp + amp * amp,
        )
        self.jumps.append(jump)
        return jump


def record_outgoing(mon: Monitor, traj: Trajectory, cycle: int = 0) -> Monitor:
    mon.record(traj, cycle)
    return mon


def probabilities(
    mon_L: Monitor | None,
    mon_R: Monitor | None,
    p_in: float | None = None,
    p_out_L: float | None = None,
    p_out_R: float | None = None,
    r_inc: float | None = None,
    converged: bool = True,
) -> tuple[float, float]:
    """(P_refl, P_trans) from the latest steady amplitude at each monitor.

    Optional momenta override the ones the monitors were built with.  A
    monitor without records reads 0 once the run is converged.
    """
    out = []
    for mon, p_out in ((mon_L, p_out_L), (mon_R, p_out_R)):
        if mon is None:
            out.append(0.0)
            continue
        if not mon.history:
            if not converged:
                raise NoSignal(f"{mon.side} monitor has recorded nothing yet")
            out.append(0.0)
            continue
        ratio = (p_out if p_out is not None else mon.p_out) / (
            p_in if p_in is not None else mon.p_in
        )
        r0 = r_inc if r_inc is not None else mon.r_inc
        out.append(ratio * (mon.history[-1][1] / r0) ** 2)
    return out[0], out[1]


def converged(monitors, tol: float, min_cycles: int = 1, cycles_done: int | None = None) -> bool:
    """True when every monitor's most recent jump is below ``tol``."""
    monitors = [m for m in monitors if m is not None]
    if not monitors or any(not m.jumps for m in monitors):
        return False
    done = cycles_done if cycles_done is not None else max(
        max(j.cycle for j in m.jumps) for m in monitors
    )
    if max(done, 1) < min_cycles:
        return False
    return all(m.last_jump.magnitude < tol for m in monitors)


@dataclass
class ScatteringResult:
    E: float
    P_refl: float
    P_trans: float
    error_bar: float
    cycles_used: int
    t_final: float
    converged: bool = True
    x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    psi: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    snapshots: list = field(default_factory=list)  # (t, x, psi)
    monitors: dict = field(default_factory=dict)
    trajectories: list = field(default_factory=list)
    deaths: dict = field(default_factory=dict)
    event_log: list = field(default_factory=list)
    components: dict = field(default_factory=dict)
    incident: str = "left"
    mode: str = "continuous"
    mass: float = 1.0
    hbar: float = 1.0
    potential: object = None
    spawn_events: list = field(default_factory=list)
    # components in the frame the engine ran in (mirrored for right incidence)
    mirrored: bool = False
    engine_components: dict = field(default_factory=dict, repr=False)

    def stationary_psi(self, x) -> np.ndarray:
        """Stationary state at arbitrary points, from the newest trajectory of each component."""
        x = np.asarray(x, dtype=float)
        xe = -x if self.mirrored else x
        psi = superpose(self.engine_components.values(), xe, self.t_final, self.potential, steady=True)
        return psi * np.exp(1j * self.E * self.t_final / self.hbar)

    @property
    def psi_samples(self) -> list[tuple[float, complex]]:
        return list(zip(self.x.tolist(), self.psi.tolist()))

    @property
    def jump_history(self) -> dict[str, list[Jump]]:
        return {k: list(m.jumps) for k, m in self.monitors.items()}


def combine_incidences(left: ScatteringResult, right: ScatteringResult, a: complex, b: complex, x) -> np.ndarray:
    """Stationary state for incident amplitude ``a`` from the left and ``b`` from the right.

    Both runs must share potential and energy; each carries unit incident
    amplitude, so any two-sided boundary condition is their linear combination.
    """
    if left.incident != "left" or right.incident != "right":
        raise ValueError("need one left-incident and one right-incident result")
    if left.E != right.E:
        raise ValueError(f"energies differ: {left.E} vs {right.E}")
    return a * left.stationary_psi(x) + b * right.stationary_psi(x)


def reconstruct(components, x_grid, t, potential=None, steady=False, p_max=None, hbar=1.0):
    """Superposed wavefunction on ``x_grid``; warns if the grid cannot resolve fringes."""
    x = np.asarray(x_grid, dtype=float)
    if p_max and len(x) > 1:
        lam = 2 * math.pi * hbar / p_max
        if np.max(np.diff(x)) > lam / 4:
            warnings.warn(
                f"grid spacing {np.max(np.diff(x)):.3g} exceeds a quarter wavelength "
                f"({lam / 4:.3g})",
                GridTooCoarse,
                stacklevel=2,
            )
    return superpose(components, x, t, potential=potential, steady=steady)


def table(x, psi) -> np.ndarray:
    """Columns x, Re psi, Im psi, |psi|^2."""
    psi = np.asarray(psi)
    return np.column_stack([x, psi.real, psi.imag, np.abs(psi) ** 2])
