"""Time-independent reference solutions.

Everything here comes from matching psi and psi' across each step.  Nothing
is shared with the trajectory engine, so agreement between the two is a
genuine cross-check.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
import numpy as np

from .errors import BranchPole, SingularMatching

LEFT = "left"
RIGHT = "right"


def _momentum(E, V, m):
    # independent of potential.classical_momentum on purpose
    if V == math.inf:
        return None
    return cmath.sqrt(2.0 * m * (E - V)) if E > V else 1j * math.sqrt(2.0 * m * (V - E))


def step_coefficients(p_A: complex, p_B: complex) -> tuple[complex, complex]:
    """Reflection and transmission amplitudes (R, T) for a wave incident from A."""
    d = p_A + p_B
    if d == 0:
        raise SingularMatching("p_A + p_B vanishes")
    return (p_A - p_B) / d, 2 * p_A / d


def interface_matrix(p_left: complex, p_right: complex) -> np.ndarray:
    """Maps right-side (a, b) at the interface to left-side (a, b) there.

    Convention: psi = a e^{ipx'} + b e^{-ipx'} with x' measured from the
    interface.  det = p_right / p_left.
    """
    q = p_right / p_left
    return 0.5 * np.array([[1 + q, 1 - q], [1 - q, 1 + q]], dtype=complex)


def propagation_matrix(p: complex, w: float, hbar: float = 1.0) -> np.ndarray:
    """Shifts the coefficient reference point back by ``w`` inside one region."""
    return np.diag([cmath.exp(-1j * p * w / hbar), cmath.exp(1j * p * w / hbar)])


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 map between (right-moving, left-moving) coefficient pairs."""

    matrix: np.ndarray

    @classmethod
    def interface(cls, p_left: complex, p_right: complex) -> "TransferMatrix":
        return cls(interface_matrix(p_left, p_right))

    @classmethod
    def propagation(cls, p: complex, w: float, hbar: float = 1.0) -> "TransferMatrix":
        return cls(propagation_matrix(p, w, hbar))

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.matrix))

    def __matmul__(self, other):
        if isinstance(other, TransferMatrix):
            return TransferMatrix(self.matrix @ other.matrix)
        return tuple(self.matrix @ np.asarray(other, dtype=complex))


@dataclass
class ExactSolution:
    E: float
    momenta: list
    # (a_j, b_j) per region; region j uses x' = x - ref[j]
    coefficients: list
    refs: list
    steps: tuple
    P_refl: float
    P_trans: float
    hbar: float = 1.0
    boundary: str = LEFT

    def psi(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        region = np.searchsorted(np.asarray(self.steps), x, side="left")
        out = np.zeros(x.shape, dtype=complex)
        for j, ((a, b), p, ref) in enumerate(zip(self.coefficients, self.momenta, self.refs)):
            sel = region == j
            if p is None or not sel.any():
                continue
            xp = x[sel] - ref
            out[sel] = a * np.exp(1j * p * xp / self.hbar) + b * np.exp(-1j * p * xp / self.hbar)
        return out


def solve_exact(steps, values, E, m, hbar=1.0, boundary=LEFT) -> ExactSolution:
    """Stationary solution with unit incident amplitude and outgoing-only far side.

    Left incidence uses psi_A = e^{i p_A x} + R e^{-i p_A x}; right incidence is
    the mirror image, psi = e^{-i p x} + ... on the right.
    """
    steps = tuple(float(s) for s in steps)
    values = tuple(float(v) for v in values)
    if boundary == RIGHT:
        mirrored = solve_exact(
            tuple(-s for s in reversed(steps)), tuple(reversed(values)), E, m, hbar, LEFT
        )
        return _unmirror(mirrored)
    n = len(values)
    momenta = [_momentum(E, v, m) for v in values]
    for j, p in enumerate(momenta):
        if p is not None and p == 0:
            raise SingularMatching(f"E equals the potential of region {j}")
    if momenta[0] is None or momenta[0].imag != 0:
        raise SingularMatching("incident region is classically forbidden")
    # reference points: region 0 uses x = 0 (global phase of the incident wave),
    # other regions their left edge
    refs = [0.0] + [steps[j - 1] for j in range(1, n)]
    coeffs = [None] * n
    wall = momenta[-1] is None
    if wall:
        coeffs[-1] = (0j, 0j)
        # psi vanishes at the wall: a e^{ipL} + b e^{-ipL} = 0 in region n-2
        j = n - 2
        p = momenta[j]
        L = steps[-1] - refs[j]
        coeffs[j] = (cmath.exp(-1j * p * L / hbar), -cmath.exp(1j * p * L / hbar))
        start = j
    else:
        coeffs[-1] = (1 + 0j, 0j)
        start = n - 1
    for j in range(start, 0, -1):
        L = steps[j - 1] - refs[j - 1]
        chain = TransferMatrix.propagation(momenta[j - 1], L, hbar) @ TransferMatrix.interface(
            momenta[j - 1], momenta[j]
        )
        coeffs[j - 1] = chain @ coeffs[j]
    a0 = coeffs[0][0]
    if abs(a0) == 0 or not np.isfinite(a0):
        raise SingularMatching("incident coefficient vanished during matching")
    coeffs = [(a / a0, b / a0) for a, b in coeffs]
    P_refl = abs(coeffs[0][1]) ** 2
    if wall or momenta[-1].imag != 0:
        P_trans = 0.0
    else:
        P_trans = (momenta[-1].real / momenta[0].real) * abs(coeffs[-1][0]) ** 2
    return ExactSolution(E, momenta, coeffs, refs, steps, P_refl, P_trans, hbar, LEFT)


def _unmirror(sol: ExactSolution) -> ExactSolution:
    # x -> -x: a e^{ip(x - ref)} becomes a e^{-ip(x' + ref)} with x' = -x
    n = len(sol.momenta)
    steps = tuple(-s for s in reversed(sol.steps))
    coeffs, refs, momenta = [], [], []
    for j in range(n - 1, -1, -1):
        a, b = sol.coefficients[j]
        coeffs.append((b, a))
        refs.append(-sol.refs[j])
        momenta.append(sol.momenta[j])
    return ExactSolution(
        sol.E, momenta, coeffs, refs, steps, sol.P_refl, sol.P_trans, sol.hbar, RIGHT
    )


def barrier_transmission(E, V0, w, m, hbar=1.0) -> float:
    """Closed-form transmission through a square barrier (V0 > 0) or well (V0 < 0)."""
    if E > V0:
        k = math.sqrt(2 * m * (E - V0)) / hbar
        return 1.0 / (1.0 + V0 * V0 * math.sin(k * w) ** 2 / (4 * E * (E - V0)))
    kappa = math.sqrt(2 * m * (V0 - E)) / hbar
    return 1.0 / (1.0 + V0 * V0 * math.sinh(kappa * w) ** 2 / (4 * E * (V0 - E)))


def well_resonances(V0, w, m, E_max, hbar=1.0) -> list[float]:
    """Energies 0 < E < E_max of perfect transmission, where sin(k_B w) = 0."""
    out = []
    n = 1
    while True:
        E = (n * math.pi * hbar / w) ** 2 / (2 * m) + V0
        if E >= E_max:
            return out
        if E > 0 and E != V0:
            out.append(E)
        n += 1


def kappa(E, V0, m, hbar=1.0) -> float:
    return math.sqrt(2 * m * (V0 - E)) / hbar


def delta(E, V0) -> float:
    """Phase angle with tan(delta) = kappa / k = sqrt(V0/E - 1)."""
    return math.atan(math.sqrt(V0 / E - 1.0))


def appendix_hardwall_s(x, k, F, B, m, hbar=1.0):
    """Phase of the general hard-wall bipolar component, x < 0.

    Solves -cot(s/hbar) = (m F / hbar) [-cot(kx)/k + B] on the branch that is
    continuous, increasing, and tends to 0 as x -> 0-.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x >= 0):
        raise ValueError("appendix_hardwall_s is defined for x < 0")
    c = m * F / hbar
    kx = k * x
    n = np.floor(-kx / math.pi)  # kx in (-(n+1) pi, -n pi]
    on_pole = np.isclose(kx, -n * math.pi, rtol=0.0, atol=1e-13)
    with np.errstate(divide="ignore", invalid="ignore"):
        y = c * (np.cos(kx) / np.sin(kx) / k - B)
        theta = np.arctan2(1.0, y) - math.pi - n * math.pi
    theta = np.where(on_pole, -n * math.pi, theta)
    if not np.all(np.isfinite(theta)):
        raise BranchPole("branch continuation failed")
    s = hbar * theta
    return s if s.ndim else float(s)


def appendix_hardwall_r(x, k, F, B, m, hbar=1.0):
    """Amplitude r = sqrt(m F / s') of the same decomposition."""
    x = np.asarray(x, dtype=float)
    c = m * F / hbar
    kx = k * x
    dtheta = c / (np.sin(kx) ** 2 + c * c * (np.cos(kx) / k - B * np.sin(kx)) ** 2)
    r = np.sqrt(m * F / (hbar * dtheta))
    return r if r.ndim else float(r)


def appendix_tunneling_p(x, k, kappa, delta, hbar=1.0):
    """Momentum of the semi-bound up-step decomposition below the barrier."""
    x = np.asarray(x, dtype=float)
    # written in u = e^{-2 kappa x} so the tail cannot overflow
    u = np.exp(-2 * kappa * np.maximum(x, 0.0))
    tail = 2 * hbar * kappa * u * math.sin(2 * delta) / (u * u + 1 - 2 * u * math.cos(2 * delta))
    p = np.where(x <= 0, hbar * k, tail)
    return p if p.ndim else float(p)


@dataclass(frozen=True)
class AppendixLM:
    """Lagrangian manifolds of the two semi-bound decompositions."""

    k: float
    kappa: float
    F: float
    B: float = 0.0
    m: float = 1.0
    hbar: float = 1.0

    @property
    def delta(self) -> float:
        return math.atan2(self.kappa, self.k)

    def s(self, x):
        return appendix_hardwall_s(x, self.k, self.F, self.B, self.m, self.hbar)

    def r(self, x):
        return appendix_hardwall_r(x, self.k, self.F, self.B, self.m, self.hbar)

    def p(self, x):
        return appendix_tunneling_p(x, self.k, self.kappa, self.delta, self.hbar)


def probability_curve(steps, values, energies, m, hbar=1.0) -> tuple[np.ndarray, np.ndarray]:
    refl, trans = [], []
    for E in energies:
        sol = solve_exact(steps, values, E, m, hbar)
        refl.append(sol.P_refl)
        trans.append(sol.P_trans)
    return np.array(refl), np.array(trans)

