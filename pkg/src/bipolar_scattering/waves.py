"""Bipolar component waves and the trajectories that carry them.

Each component is a plane wave ``r exp(i s / hbar)`` living in one region and
travelling in one direction.  Its trajectories are independent classical
points; every trajectory marks a possible discontinuity of the component and
carries the field values for the stretch of the wave *behind* it, up to the
next trajectory.  Ahead of the frontmost trajectory the component does not
exist yet.
"""

from __future__ import annotations

import bisect
import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import AheadOfWavefront

PLUS = 1
MINUS = -1


@dataclass(frozen=True)
class Trajectory:
    """State of one trajectory at time ``t``.

    ``p`` is signed: its real part (allowed legs) or imaginary part
    (tunneling legs) has the sign of ``direction``.  ``x`` is complex only
    part-way along a tunneling leg.
    """

    x: complex
    p: complex
    r: float
    s: float
    t: float
    region: int = 0
    direction: int = PLUS
    weight: float = 0.0
    id: int = -1
    parent_id: int | None = None
    order: int = 0
    jump: float = 0.0

    def __post_init__(self):
        if self.r < 0:
            raise ValueError(f"amplitude must be non-negative, got {self.r}")

    @property
    def on_tunnel_leg(self) -> bool:
        return self.p.real == 0.0

    def value(self, hbar: float = 1.0) -> complex:
        """Component value at the trajectory's own position."""
        return self.r * cmath.exp(1j * self.s / hbar)

    def at(self, x: float, t: float, E: float, hbar: float = 1.0) -> "Trajectory":
        """Field values the same plane wave takes at real ``x`` and time ``t``.

        On a forbidden leg the spatial factor is the analytic continuation
        ``exp(-kappa |dx|)``; it changes r and leaves s alone.
        """
        dx = x - self.x.real
        r = self.r * math.exp(-(self.p.imag * dx) / hbar) if dx else self.r
        s = self.s + self.p.real * dx - E * (t - self.t)
        return replace(self, x=complex(x), r=r, s=s, t=t)

    def psi(self, x, t, E: float, hbar: float = 1.0):
        """Complex value of the plane wave through this trajectory; vectorised in x."""
        dx = np.asarray(x, dtype=float) - self.x.real
        return (
            self.r
            * np.exp(1j * (self.s + self.p * dx - E * (t - self.t)) / hbar)
        )

    def position(self, t: float, mass: float) -> complex:
        """Position at time ``t``; moves along the imaginary axis on tunneling legs."""
        dt = t - self.t
        if self.on_tunnel_leg:
            return self.x + 1j * self.direction * (abs(self.p) / mass) * dt
        return self.x + (self.p.real / mass) * dt


@dataclass(frozen=True)
class FluxValue:
    j: float

    def __float__(self):
        return self.j


def flux(p: complex, r: float, m: float) -> FluxValue:
    """Probability flux (Re p / m) r^2; zero for evanescent legs."""
    if r < 0:
        raise ValueError("r must be non-negative")
    if p.real == 0.0:
        return FluxValue(0.0)
    return FluxValue(p.real / m * r * r)


def to_fields(value: complex, s_ref: float, hbar: float = 1.0) -> tuple[float, float]:
    """(r, s) with r >= 0 for a complex component value.

    s is chosen on the branch closest to ``s_ref`` so that phases stay
    unwrapped along a trajectory lineage.
    """
    r = abs(value)
    if r == 0.0:
        return 0.0, s_ref
    ref = cmath.exp(-1j * s_ref / hbar)
    return r, s_ref + hbar * cmath.phase(value * ref)


@dataclass
class ComponentWave:
    """One piece Psi_{X+} or Psi_{X-} of the bipolar decomposition."""

    region_index: int
    direction: int
    p: complex
    E: float
    mass: float
    hbar: float = 1.0
    trajectories: list[Trajectory] = field(default_factory=list)
    generation: int = 0
    # passage key: a trajectory passes point x at time key + direction * x / v
    _keys: list[float] = field(default_factory=list, repr=False)

    @property
    def label(self) -> str:
        return f"{_region_name(self.region_index)}{'+' if self.direction > 0 else '-'}"

    @property
    def speed(self) -> float:
        return abs(self.p) / self.mass

    @property
    def allowed(self) -> bool:
        return self.p.imag == 0.0

    def add(self, traj: Trajectory) -> None:
        """Append a trajectory; trajectories must arrive in passage order."""
        key = traj.t - self.direction * traj.x.real / self.speed
        if self._keys and key < self._keys[-1] - 1e-9:
            raise ValueError(f"{self.label}: trajectory {traj.id} out of passage order")
        self.trajectories.append(traj)
        self._keys.append(key)
        self.generation = max(self.generation, traj.order)

    def covering(self, x: float, t: float, guard: float = 0.0) -> Trajectory | None:
        """Trajectory whose segment covers ``x`` at time ``t`` (None if ahead of front)."""
        i = bisect.bisect_right(self._keys, t - self.direction * x / self.speed + guard) - 1
        return self.trajectories[i] if i >= 0 else None

    @property
    def wavefront(self) -> Trajectory | None:
        return self.trajectories[0] if self.trajectories else None

    @property
    def newest(self) -> Trajectory | None:
        return self.trajectories[-1] if self.trajectories else None

    def value_at(self, x: float, t: float, guard: float = 0.0) -> complex:
        traj = self.covering(x, t, guard)
        if traj is None:
            raise AheadOfWavefront(f"{self.label} has not reached x={x} at t={t}")
        return complex(traj.psi(x, t, self.E, self.hbar))

    def values(self, x: np.ndarray, t: float, steady: bool = False) -> np.ndarray:
        """Component values on a grid; zero ahead of the wavefront.

        With ``steady`` the newest trajectory's plane wave is used everywhere,
        which is the stationary state the trajectory series has reached.
        """
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        if not self.trajectories:
            return out
        if steady:
            return self.newest.psi(x, t, self.E, self.hbar)
        keys = np.asarray(self._keys)
        idx = np.searchsorted(keys, t - self.direction * x / self.speed, side="right") - 1
        for i in np.unique(idx[idx >= 0]):
            sel = idx == i
            out[sel] = self.trajectories[i].psi(x[sel], t, self.E, self.hbar)
        return out


def _region_name(i: int) -> str:
    return chr(ord("A") + i) if i < 26 else f"R{i}"


def sample_wave(c: ComponentWave, x: float, t: float) -> complex:
    """Value of component ``c`` at (x, t) from the trajectory covering x."""
    return c.value_at(x, t)


def superpose(
    components: Iterable[ComponentWave],
    x_grid: Sequence[float],
    t: float,
    potential=None,
    steady: bool = False,
) -> np.ndarray:
    """Pointwise sum of the components present at each grid point.

    Grid points sitting exactly on a step are attributed to the region on
    their left.
    """
    x = np.asarray(x_grid, dtype=float)
    if potential is not None:
        region = np.searchsorted(np.asarray(potential.steps), x, side="left")
    else:
        region = np.zeros(x.shape, dtype=int)
    psi = np.zeros(x.shape, dtype=complex)
    for c in components:
        sel = region == c.region_index
        if sel.any():
            psi[sel] += c.values(x[sel], t, steady=steady)
    return psi
