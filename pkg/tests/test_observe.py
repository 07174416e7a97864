import math
import warnings

import numpy as np
import pytest
from conftest import M, V0, barrier, upstep

from bipolar_scattering.config import SimulationConfig
from bipolar_scattering.dynamics import run
from bipolar_scattering.errors import GridTooCoarse, NoSignal
from bipolar_scattering.observe import (
    Monitor,
    converged,
    probabilities,
    reconstruct,
    record_outgoing,
)
from bipolar_scattering.waves import MINUS, Trajectory


def _traj(r, s, t):
    return Trajectory(-1 + 0j, -12 + 0j, r, s, t, direction=MINUS)


def test_monitor_history_and_jumps():
    mon = Monitor(-1.0, "left", 12.0, 12.0, E=0.036)
    record_outgoing(mon, _traj(0.17157, 0.0, 100.0))
    assert mon.history == [(100.0, 0.17157, 0.0)]
    assert mon.probability == pytest.approx(0.17157**2)
    # the same plane wave a little later is not a jump
    assert mon.record(_traj(0.17157, -0.036 * 50, 150.0)) is None
    j = mon.record(_traj(0.2, -0.036 * 60, 160.0), cycle=1)
    assert j.cycle == 1 and j.amplitude == pytest.approx(0.2 - 0.17157)
    assert j.delta_p == pytest.approx(0.04 - 0.17157**2)
    assert abs(j.delta_p) <= j.bound
    with pytest.raises(ValueError):
        mon.record(_traj(0.2, 0.0, 10.0))


def test_probabilities_single_step():
    r = run(upstep(0.018))
    P_refl, P_trans = probabilities(r.monitors["left"], r.monitors["right"])
    assert P_refl == pytest.approx(0.02944, abs=1e-5)
    assert P_trans == pytest.approx(0.97056, abs=1e-5)
    assert P_refl + P_trans == pytest.approx(1.0, abs=1e-14)
    assert r.monitors["left"].history[0][1] == pytest.approx(0.17157, abs=1e-5)


def test_probabilities_without_signal():
    mon = Monitor(1.0, "right", 12.0, 12.0)
    assert probabilities(None, mon) == (0.0, 0.0)
    with pytest.raises(NoSignal):
        probabilities(None, mon, converged=False)


def test_converged_rule():
    a = Monitor(-1.0, "left", 1.0, 1.0)
    b = Monitor(1.0, "right", 1.0, 1.0)
    assert not converged([a, b], 1e-4)
    a.record(Trajectory(0j, -1 + 0j, 0.5, 0.0, 1.0))
    b.record(Trajectory(0j, 1 + 0j, 0.5, 0.0, 1.0))
    assert not converged([a, b], 1e-4)
    a.record(Trajectory(0j, -1 + 0j, 0.5 + 1e-6, 0.0, 2.0), cycle=3)
    assert not converged([a, b], 1e-4)
    b.record(Trajectory(0j, 1 + 0j, 0.5 - 1e-6, 0.0, 2.0), cycle=3)
    assert converged([a, b], 1e-4)
    assert not converged([a, b], 1e-4, min_cycles=4)


def test_error_bar_is_last_jump(barrier_above):
    r = barrier_above
    last = max((m.last_jump for m in r.monitors.values()), key=lambda j: j.bound)
    assert r.error_bar == last.bound
    assert abs(r.P_refl + r.P_trans - 1) < 3e-4


def test_jumps_decrease_after_second_cycle(barrier_above):
    for mon in barrier_above.monitors.values():
        amps = [j.amplitude for j in mon.jumps if j.cycle >= 1]
        assert all(b < a for a, b in zip(amps, amps[1:]))


def test_reconstruct_warns_on_coarse_grid(barrier_above):
    comps = barrier_above.components.values()
    with pytest.warns(GridTooCoarse):
        reconstruct(comps, np.linspace(-1, 2, 5), 100.0, p_max=12.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        reconstruct(comps, np.linspace(-1, 2, 400), 100.0, p_max=12.0)


def test_reconstruct_is_idempotent(barrier_above):
    comps = barrier_above.engine_components.values()
    x = np.linspace(-1, 2, 301)
    a = reconstruct(comps, x, 800.0, barrier_above.potential)
    b = reconstruct(comps, x, 800.0, barrier_above.potential)
    assert np.array_equal(a, b)


def _jump_at(x0, t, comps, pot, eps=1e-7):
    v = reconstruct(comps, [x0 - eps, x0 + eps], t, pot)
    return abs(v[0] - v[1])


def test_snapshots_show_travelling_wavefronts():
    r = run(barrier(2 * V0, snapshot_times=(0.0, 250.0, 500.0, 2000.0)))
    comps, pot = r.engine_components.values(), r.potential
    kA, kB = 12.0, math.sqrt(2 * M * V0)
    t_hit = 2000 / kA  # front reaches the first step
    # t = 250: the first reflected front is a kink left of the first step
    x_refl = -(250 - t_hit) * kA / M
    assert _jump_at(x_refl, 250.0, comps, pot) > 0.1
    # t = 500: fronts of C+ and B- move away from the second step
    t2 = t_hit + 1.0 * M / kB
    assert _jump_at(1.0 + (500 - t2) * kA / M, 500.0, comps, pot) > 0.5
    assert _jump_at(1.0 - (500 - t2) * kB / M, 500.0, comps, pot) > 0.1
    assert [s[0] for s in r.snapshots] == [0.0, 250.0, 500.0, 2000.0]
    t0, x, psi0 = r.snapshots[0]
    assert np.allclose(np.abs(psi0[x < -1.0 + 1e-12]), 1.0)
    assert np.all(psi0[x > -1.0] == 0)


def test_stationary_psi_matches_final_table(barrier_above):
    r = barrier_above
    assert np.allclose(r.stationary_psi(r.x), r.psi, atol=1e-13)
    assert np.isclose(np.abs(r.psi_samples[0][1]), np.abs(r.psi[0]))


def test_two_sided_incidence_is_a_superposition():
    from bipolar_scattering.observe import combine_incidences
    from bipolar_scattering.oracle import solve_exact

    base = dict(steps=(0.0, 1.0), values=(0.0, V0, 0.004), E=0.03, tol=1e-9)
    left = run(SimulationConfig(**base))
    right = run(SimulationConfig(**base, incident="right"))
    x = np.linspace(-1, 2, 61)
    a, b = 0.6, 0.8j
    psi = combine_incidences(left, right, a, b, x)
    exact = a * solve_exact(base["steps"], base["values"], 0.03, M).psi(x) + b * solve_exact(
        base["steps"], base["values"], 0.03, M, boundary="right"
    ).psi(x)
    assert np.max(np.abs(psi - exact)) < 1e-4
    with pytest.raises(ValueError):
        combine_incidences(right, left, a, b, x)
