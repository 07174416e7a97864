"""Piecewise-constant potentials and the classical momenta they induce.

Regions are indexed left to right, ``0..l`` for ``l`` steps.  All quantities
are in atomic units unless a different ``hbar`` is supplied.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Sequence

from .errors import (
    EnergyAtStepEdge,
    InfiniteInteriorRegion,
    NonMonotonicSteps,
    SizeMismatch,
)

#: Momentum assigned to a hard-wall region. Only the spawn rules consume it.
HARD_WALL_MOMENTUM = complex(0.0, math.inf)


@dataclass(frozen=True)
class Boundary:
    """Marker for a point sitting exactly on step ``k`` (steps count from 1)."""

    k: int


@dataclass(frozen=True)
class RegionMomentum:
    region_index: int
    p: complex
    classically_allowed: bool

    @property
    def hard_wall(self) -> bool:
        return math.isinf(self.p.imag)


@dataclass(frozen=True)
class PiecewisePotential:
    steps: tuple[float, ...]
    region_values: tuple[float, ...]

    def __post_init__(self):
        steps = tuple(float(x) for x in self.steps)
        values = tuple(float(v) for v in self.region_values)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "region_values", values)
        if len(values) != len(steps) + 1:
            raise SizeMismatch(
                f"need len(values) == len(steps) + 1, got {len(values)} values "
                f"for {len(steps)} steps"
            )
        if any(not math.isfinite(x) for x in steps):
            raise NonMonotonicSteps("step positions must be finite")
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise NonMonotonicSteps(f"steps must be strictly increasing: {steps}")
        for i, v in enumerate(values):
            if math.isnan(v) or v == -math.inf:
                raise InfiniteInteriorRegion(f"region {i} has value {v}")
            if v == math.inf and i != len(values) - 1:
                raise InfiniteInteriorRegion(
                    f"only the rightmost region may be a hard wall (region {i})"
                )
            if v == math.inf and len(steps) == 0:
                raise InfiniteInteriorRegion("a hard wall needs a step in front of it")

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    @property
    def n_regions(self) -> int:
        return len(self.region_values)

    @property
    def hard_wall(self) -> bool:
        return self.region_values[-1] == math.inf

    def width(self, region: int) -> float:
        """Width of ``region``; infinite for the two outer regions."""
        if region <= 0 or region >= self.n_regions - 1:
            return math.inf
        return self.steps[region] - self.steps[region - 1]

    def region_of(self, x: float) -> int | Boundary:
        """Region index containing ``x``, or ``Boundary(k)`` if ``x`` is on step k."""
        i = bisect.bisect_left(self.steps, x)
        if i < len(self.steps) and self.steps[i] == x:
            return Boundary(i + 1)
        return i

    def momenta(self, E: float, m: float, hbar: float = 1.0, edge_tol: float = 1e-12):
        return [
            RegionMomentum(i, p, p.imag == 0.0)
            for i, p in (
                (i, classical_momentum(E, v, m, hbar, edge_tol))
                for i, v in enumerate(self.region_values)
            )
        ]

    def mirrored(self) -> "PiecewisePotential":
        """The same landscape reflected through x = 0."""
        if self.hard_wall:
            raise InfiniteInteriorRegion("a hard wall cannot be mirrored to the left")
        return PiecewisePotential(
            tuple(-x for x in reversed(self.steps)), tuple(reversed(self.region_values))
        )


def build_potential(steps: Sequence[float], values: Sequence[float]) -> PiecewisePotential:
    if len(values) == 0:
        raise SizeMismatch("values must not be empty")
    return PiecewisePotential(tuple(steps), tuple(values))


def square_barrier(height: float, width: float, left: float = 0.0) -> PiecewisePotential:
    """Barrier (``height > 0``) or well (``height < 0``) on ``[left, left + width]``."""
    return PiecewisePotential((left, left + width), (0.0, height, 0.0))


def classical_momentum(
    E: float, V: float, m: float, hbar: float = 1.0, edge_tol: float = 1e-12
) -> complex:
    """Local momentum sqrt(2m(E-V)); ``i*hbar*kappa`` on the forbidden side.

    The returned value has units of momentum for any ``hbar``; kappa itself is
    ``p.imag / hbar``.
    """
    if m <= 0:
        raise ValueError(f"mass must be positive, got {m}")
    if V == math.inf:
        return HARD_WALL_MOMENTUM
    if abs(E - V) < edge_tol * max(abs(E), abs(V), 1.0):
        raise EnergyAtStepEdge(f"E={E!r} coincides with region value V={V!r}")
    if E > V:
        return complex(math.sqrt(2.0 * m * (E - V)), 0.0)
    return complex(0.0, math.sqrt(2.0 * m * (V - E)))
