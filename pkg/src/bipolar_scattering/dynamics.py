"""Event-driven evolution of the bipolar trajectory ensemble.

Between steps every trajectory moves uniformly, so arrival times are known in
closed form and the simulation jumps from event to event.  At a step the
incident field values are replaced by locally reflected and transmitted
trajectories.  When both sides of a step carry incident waves, the spawned
contributions to each outgoing component are added as complex numbers, with
the other side's field taken exactly at the arrival time from the trajectory
covering the step.

Only arrivals that carry a discontinuity spawn.  A trajectory in the bulk of
a component lies on the same plane wave as its predecessor, so its spawns
would reproduce fields that already exist; it is retired at the step instead.
"""

from __future__ import annotations

import cmath
import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from .config import CONTINUOUS, WAVEPACKET, SimulationConfig
from .errors import (
    DegenerateMomenta,
    NoIncidentWave,
    NotConverged,
    SemiInfiniteForbidden,
    Unbounded,
)
from .observe import JUMP_FLOOR, Monitor, ScatteringResult, converged, reconstruct
from .potential import PiecewisePotential, build_potential
from .waves import MINUS, PLUS, ComponentWave, Trajectory, flux, to_fields

ARRIVE = 0
CROSS = 1


@dataclass(frozen=True)
class SpawnEvent:
    step_index: int  # 0-based
    t: float
    incident: tuple  # incident field values at the step, one per side
    pieces: tuple  # (reflected, transmitted) from spawn() for each incident value
    spawned: tuple  # merged outgoing trajectories actually born
    triggers: tuple = ()  # ids of the arrivals that carried a discontinuity


def local_amplitudes(p_inc: complex, p_trans: complex, tol: float = 1e-300) -> tuple[complex, complex]:
    """Local reflection and transmission ratios for a wave meeting a step."""
    d = p_inc + p_trans
    if abs(d) < tol:
        raise DegenerateMomenta(f"p_inc + p_trans = {d}")
    return (p_inc - p_trans) / d, 2 * p_inc / d


def _normalised(raw: complex, r_inc: float, s_inc: float, hbar: float) -> tuple[float, float]:
    # r >= 0 convention: any sign or complex phase of the ratio goes into s
    raw = raw * r_inc
    if raw == 0:
        return 0.0, s_inc
    return abs(raw), s_inc + hbar * cmath.phase(raw)


def spawn(incident: Trajectory, p_inc: complex, p_trans: complex, hbar: float = 1.0):
    """Reflected and transmitted trajectories born where ``incident`` meets a step.

    ``p_inc`` and ``p_trans`` are the unsigned momenta of the two sides (positive
    real or positive imaginary).  An infinite ``p_trans`` is a hard wall: the
    reflection keeps r and gains pi in phase, and nothing is transmitted.
    """
    d = incident.direction
    if math.isinf(abs(p_trans)):
        refl = replace(
            incident, p=-d * p_inc, s=incident.s + math.pi * hbar, direction=-d, parent_id=incident.id
        )
        return refl, None
    R, T = local_amplitudes(p_inc, p_trans)
    r_refl, s_refl = _normalised(R, incident.r, incident.s, hbar)
    r_trans, s_trans = _normalised(T, incident.r, incident.s, hbar)
    j_refl = abs(float(flux(p_inc, r_refl, 1.0)))
    j_trans = abs(float(flux(p_trans, r_trans, 1.0)))
    total = j_refl + j_trans
    share = j_refl / total if total > 0 else 1.0
    refl = replace(
        incident,
        p=-d * p_inc,
        r=r_refl,
        s=s_refl,
        direction=-d,
        weight=incident.weight * share,
        parent_id=incident.id,
    )
    trans = replace(
        incident,
        p=d * p_trans,
        r=r_trans,
        s=s_trans,
        region=incident.region + d,
        weight=incident.weight * (1 - share),
        parent_id=incident.id,
    )
    return refl, trans


def recombine(contributions, hbar: float = 1.0) -> tuple[float, float]:
    """Merge same-component contributions by adding their complex values.

    ``contributions`` is a sequence of (r, s) pairs or trajectories.  Returns
    the merged (r, s); s stays on the branch of the first contribution.
    """
    pairs = [(c.r, c.s) if isinstance(c, Trajectory) else c for c in contributions]
    if not pairs:
        raise ValueError("nothing to recombine")
    if len(pairs) == 1:
        return pairs[0]
    s_ref = pairs[0][1]
    total = sum(r * cmath.exp(1j * (s - s_ref) / hbar) for r, s in pairs)
    r, s = to_fields(total, 0.0, hbar)
    return r, s_ref + s


def tunnel_leg(traj: Trajectory, leg_length: float, kappa: float, m: float, E: float, hbar: float = 1.0) -> Trajectory:
    """Carry a trajectory across a forbidden region along the imaginary axis.

    The leg lasts m w / (hbar kappa); returning to the real axis damps r by
    exp(-kappa w).  Only the time phase -E dt is accrued.
    """
    if math.isinf(leg_length):
        raise SemiInfiniteForbidden("the forbidden region has no far edge")
    dt = m * leg_length / (hbar * kappa) if leg_length else 0.0
    return replace(
        traj,
        x=complex(traj.x.real + traj.direction * leg_length, 0.0),
        r=traj.r * math.exp(-kappa * leg_length),
        s=traj.s - E * dt,
        t=traj.t + dt,
    )


def downstream_step(traj: Trajectory, pot: PiecewisePotential) -> int | None:
    """0-based index of the step ahead of ``traj``, or None if it leaves the system."""
    if traj.direction > 0:
        return traj.region if traj.region < pot.n_steps else None
    return traj.region - 1 if traj.region >= 1 else None


def propagate_to_event(traj: Trajectory, pot: PiecewisePotential, E: float, m: float, hbar: float = 1.0):
    """Exact advance to the next step: (trajectory there, arrival time)."""
    k = downstream_step(traj, pot)
    if k is None:
        raise Unbounded(f"no step downstream of trajectory {traj.id}")
    x_step = pot.steps[k]
    if traj.on_tunnel_leg:
        kappa = abs(traj.p.imag) / hbar
        arrived = tunnel_leg(traj, abs(x_step - traj.x.real), kappa, m, E, hbar)
        return arrived, arrived.t
    t_arr = traj.t + m * abs(x_step - traj.x.real) / abs(traj.p.real)
    return traj.at(x_step, t_arr, E, hbar), t_arr


class Scheduler:
    """Min-heap of (time, seq, kind, trajectory id); seq breaks ties deterministically."""

    def __init__(self, sync: float = 1e-9):
        self.sync = sync
        self._heap: list = []
        self._seq = 0

    def push(self, t: float, kind: int, tid: int) -> None:
        heapq.heappush(self._heap, (t, self._seq, kind, tid))
        self._seq += 1

    def __len__(self):
        return len(self._heap)

    def peek_time(self) -> float:
        return self._heap[0][0]

    def pop_batch(self) -> list:
        """All events within ``sync`` of the earliest one."""
        t0 = self._heap[0][0]
        batch = []
        while self._heap and self._heap[0][0] <= t0 + self.sync:
            batch.append(heapq.heappop(self._heap))
        return batch


class Engine:
    """One continuous-wave or wavepacket run at a single energy (left incidence)."""

    def __init__(self, pot: PiecewisePotential, E: float, m: float = 2000.0, hbar: float = 1.0,
                 x_L: float = -1.0, x_R: float = 1.0, launch=(-4.0, -1.0), n_points: int = 51,
                 mode: str = CONTINUOUS, tol: float = 1e-4, max_cycles: int = 50, min_cycles: int = 1,
                 sync: float = 1e-9, edge_tol: float = 1e-12, max_events: int = 200_000):
        self.pot, self.E, self.m, self.hbar = pot, E, m, hbar
        self.x_L, self.x_R = x_L, x_R
        self.mode, self.tol = mode, tol
        self.max_cycles, self.min_cycles, self.max_events = max_cycles, min_cycles, max_events
        self.sync = sync
        self.p = [rm.p for rm in pot.momenta(E, m, hbar, edge_tol)]
        if self.p[0].imag != 0:
            raise NoIncidentWave("the incident region is classically forbidden at this energy")
        self.l = pot.n_steps
        self.components: dict[tuple[int, int], ComponentWave] = {}
        for j, p in enumerate(self.p):
            if math.isinf(abs(p)):
                continue
            for d in (PLUS, MINUS):
                self.components[(j, d)] = ComponentWave(j, d, d * p, E, m, hbar)
        self.sched = Scheduler(sync)
        self.trajectories: list[Trajectory] = []
        self.live: dict[int, Trajectory] = {}
        self.deaths: dict[int, float] = {}
        self.event_log: list = []
        self.in_flight = 0
        self.t = 0.0
        self.n_events = 0
        self.tail_ids: set[int] = set()
        self.tail_seen = False
        self.spawn_events: list[SpawnEvent] = []
        p_in = self.p[0].real
        self.mon_L = Monitor(x_L, "left", p_in, p_in, 1.0, E, hbar) if self.l > 0 else None
        p_out = self.p[-1]
        self.mon_R = None
        if not math.isinf(abs(p_out)) and p_out.imag == 0:
            self.mon_R = Monitor(x_R, "right", p_out.real, p_in, 1.0, E, hbar)
        self._launch(launch, n_points)

    # bookkeeping -----------------------------------------------------------
    def _is_jump(self, traj: Trajectory) -> bool:
        return traj.jump > JUMP_FLOOR

    def _counts(self, traj: Trajectory) -> bool:
        # discontinuities descending from a wavepacket's tail do not hold up convergence
        return self._is_jump(traj) and traj.id not in self.tail_ids

    def _born(self, traj: Trajectory, tail: bool = False) -> Trajectory:
        traj = replace(traj, id=len(self.trajectories))
        if tail:
            self.tail_ids.add(traj.id)
        self.trajectories.append(traj)
        self.components[(traj.region, traj.direction)].add(traj)
        self._schedule(traj)
        return traj

    def _schedule(self, traj: Trajectory) -> None:
        outgoing_left = traj.region == 0 and traj.direction < 0
        outgoing_right = traj.region == self.l and traj.direction > 0
        if outgoing_left or outgoing_right:
            mon = self.mon_L if outgoing_left else self.mon_R
            if mon is None:
                # evanescent tail of a semi-infinite forbidden region: kept for
                # reconstruction, never moves on
                self.deaths[traj.id] = math.inf
                return
            t_c = traj.t + self.m * abs(mon.position - traj.x.real) / abs(traj.p.real)
            kind, t_ev = CROSS, t_c
        else:
            k = downstream_step(traj, self.pot)
            x_step = self.pot.steps[k]
            t_ev = traj.t + self.m * abs(x_step - traj.x.real) / abs(traj.p)
            kind = ARRIVE
        self.live[traj.id] = traj
        if self._counts(traj):
            self.in_flight += 1
        self.sched.push(t_ev, kind, traj.id)

    def _retire(self, traj: Trajectory, t: float) -> None:
        self.deaths[traj.id] = t
        del self.live[traj.id]
        if self._counts(traj):
            self.in_flight -= 1

    def _launch(self, interval, n_points) -> None:
        a, b = interval
        p = self.p[0].real
        xs = np.linspace(b, a, n_points) if n_points > 1 else np.array([b])
        dx0 = (b - a) / (n_points - 1) if n_points > 1 else 1.0
        for i, x in enumerate(xs):
            self._born(Trajectory(complex(x), complex(p), 1.0, p * x, 0.0, 0, PLUS,
                                  weight=dx0, jump=1.0 if i == 0 else 0.0))
        if self.mode == WAVEPACKET:
            # zero-amplitude tail closes the packet
            self._born(Trajectory(complex(a), complex(p), 0.0, p * a, 0.0, 0, PLUS, jump=1.0), tail=True)

    # events ------------------------------------------------------------------
    def _cross(self, traj: Trajectory, t: float) -> None:
        mon = self.mon_L if traj.region == 0 and traj.direction < 0 else self.mon_R
        rec = traj.at(mon.position, t, self.E, self.hbar)
        jump = mon.record(rec, cycle=math.ceil(traj.order / 2))
        if traj.id in self.tail_ids and jump is not None:
            self.tail_seen = True
        self._retire(traj, t)
        self.event_log.append((t, "cross", mon.side, (traj.id,), ()))
        return jump

    def _incident_at(self, k: int, region: int, direction: int, t: float):
        comp = self.components.get((region, direction))
        if comp is None:
            return None
        cover = comp.covering(self.pot.steps[k], t, self.sync)
        if cover is None:
            return None
        # also exact on tunneling legs: at() applies the exp(-kappa |dx|) continuation
        return cover.at(self.pot.steps[k], t, self.E, self.hbar)

    def _spawn_at(self, k: int, arrivals: list[Trajectory], t: float) -> None:
        x_k = self.pot.steps[k]
        triggers = [a for a in arrivals if self._is_jump(a)]
        for a in arrivals:
            self._retire(a, t)
        if not triggers:
            self.event_log.append((t, "absorb", k, tuple(a.id for a in arrivals), ()))
            return
        left, right = k, k + 1
        p_left, p_right = self.p[left], self.p[right]
        contributions: dict[tuple[int, int], list] = {}
        incident, pieces = [], []
        for region, d, p_in, p_tr in ((left, PLUS, p_left, p_right), (right, MINUS, p_right, p_left)):
            inc = self._incident_at(k, region, d, t)
            if inc is None:
                continue
            incident.append(inc)
            pieces.append(spawn(inc, p_in, p_tr, self.hbar))
            for out in pieces[-1]:
                if out is not None:
                    contributions.setdefault((out.region, out.direction), []).append(out)
        merged = {key: recombine(c, self.hbar) for key, c in contributions.items()}
        fluxes = {key: abs(float(flux(self.p[key[0]], r, 1.0))) for key, (r, _) in merged.items()}
        total_flux = sum(fluxes.values())
        lead = max(triggers, key=lambda a: a.jump)
        weight = sum(a.weight for a in triggers)
        born = []
        for key, (r, s) in merged.items():
            comp = self.components[key]
            prev = comp.covering(x_k, t, self.sync)
            prev_val = 0j if prev is None else complex(prev.psi(x_k, t, self.E, self.hbar))
            jump = abs(r * cmath.exp(1j * s / self.hbar) - prev_val)
            if prev is not None and jump <= JUMP_FLOOR:
                continue
            reflected = key[1] != lead.direction
            interior = 0 < key[0] < self.l
            share = fluxes[key] / total_flux if total_flux > 0 else 1.0 / len(merged)
            traj = self._born(Trajectory(
                complex(x_k), comp.p, r, s, t, key[0], key[1],
                weight=weight * share,
                parent_id=lead.id,
                order=lead.order + (1 if reflected and interior else 0),
                jump=jump,
            ), tail=lead.id in self.tail_ids)
            born.append(traj)
        self.event_log.append((t, "spawn", k, tuple(a.id for a in arrivals), tuple(b.id for b in born)))
        self.spawn_events.append(
            SpawnEvent(k, t, tuple(incident), tuple(pieces), tuple(born), tuple(a.id for a in triggers))
        )

    # main loop -----------------------------------------------------------------
    @property
    def monitors(self):
        return [m for m in (self.mon_L, self.mon_R) if m is not None]

    @property
    def cycles_used(self) -> int:
        cyc = [j.cycle for m in self.monitors for j in m.jumps]
        return max([1] + cyc)

    def _converged(self) -> bool:
        if self.in_flight == 0:
            return True
        return converged(self.monitors, self.tol, self.min_cycles, self.cycles_used)

    @property
    def error_bar(self) -> float:
        if self.in_flight == 0:
            return 0.0
        return max((m.last_jump.magnitude for m in self.monitors if m.jumps), default=math.inf)

    def step(self) -> None:
        """Process one batch of simultaneous events."""
        batch = self.sched.pop_batch()
        self.t = batch[0][0]
        self.n_events += len(batch)
        by_step: dict[int, list] = {}
        for t_ev, _, kind, tid in batch:
            traj = self.live[tid]
            if kind == CROSS:
                self._cross(traj, t_ev)
            else:
                arrived, _ = propagate_to_event(traj, self.pot, self.E, self.m, self.hbar)
                by_step.setdefault(downstream_step(traj, self.pot), []).append(arrived)
        for k in sorted(by_step):
            self._spawn_at(k, by_step[k], min(a.t for a in by_step[k]))

    def run(self, snapshot_times=(), grid=None):
        """Process events until convergence; returns (converged, snapshots).

        Results are frozen at the moment of convergence (see ``final``);
        events after that are processed only to serve later snapshot times.
        """
        snaps = sorted(snapshot_times)
        taken = []
        while self.sched:
            t_next = self.sched.peek_time()
            while snaps and snaps[0] < t_next:
                taken.append(self.snapshot(snaps.pop(0), grid))
            if self.final is not None and not snaps:
                break
            self.step()
            if self.final is None:
                if self.tail_seen:
                    # the packet ended before the monitors settled
                    self._freeze(False, grid)
                    break
                if self._converged():
                    self._freeze(True, grid)
                elif self.cycles_used > self.max_cycles or self.n_events > self.max_events:
                    self._freeze(False, grid)
                    break
        if self.final is None:
            self._freeze(self._converged(), grid)
        if self.final["converged"]:
            taken.extend(self.snapshot(ts, grid) for ts in snaps)
        return self.final["converged"], taken

    final = None

    def _freeze(self, ok: bool, grid) -> None:
        self.final = {
            "converged": ok,
            "t": self.t,
            "P_refl": self.mon_L.probability if self.mon_L else 0.0,
            "P_trans": self.mon_R.probability if self.mon_R else 0.0,
            "error_bar": self.error_bar,
            "cycles_used": self.cycles_used,
            "psi": None if grid is None else (
                self.stationary_psi(grid) if self.mode == CONTINUOUS
                else reconstruct(self.components.values(), grid, self.t, self.pot)
            ),
        }

    def snapshot(self, t: float, grid) -> tuple:
        psi = reconstruct(self.components.values(), grid, t, self.pot)
        return t, np.asarray(grid), psi

    def stationary_psi(self, grid) -> np.ndarray:
        """Current stationary estimate with the e^{-iEt} factor removed."""
        psi = reconstruct(self.components.values(), grid, self.t, self.pot, steady=True)
        return psi * cmath.exp(1j * self.E * self.t / self.hbar)


def plot_grid(cfg: SimulationConfig, p_max: float) -> np.ndarray:
    x_L, x_R = cfg.monitors
    if cfg.plot_points:
        n = cfg.plot_points
    else:
        lam = 2 * math.pi * cfg.hbar / p_max
        n = max(201, int(math.ceil((x_R - x_L) / (lam / cfg.points_per_wavelength))) + 1)
    return np.linspace(x_L, x_R, n)


def _mirror_config(cfg: SimulationConfig) -> SimulationConfig:
    x_L, x_R = cfg.monitors
    a, b = cfg.launch
    return replace(
        cfg,
        steps=tuple(-s for s in reversed(cfg.steps)),
        values=tuple(reversed(cfg.values)),
        x_L=-x_R,
        x_R=-x_L,
        launch_start=-b,
        launch_end=-a,
        incident="left",
    )


def _mirror_traj(traj: Trajectory, l: int) -> Trajectory:
    return replace(traj, x=complex(-traj.x.real, traj.x.imag), p=-traj.p,
                   region=l - traj.region, direction=-traj.direction)


def run(config: SimulationConfig, raise_on_stall: bool = True) -> ScatteringResult:
    """Propagate until the monitors report convergence and collect the results."""
    if config.E is None:
        raise ValueError("run() needs a single energy; use cli.run_sweep for sweeps")
    right = config.incident == "right"
    cfg = _mirror_config(config) if right else config
    pot = build_potential(cfg.steps, cfg.values)
    x_L, x_R = cfg.monitors
    engine = Engine(
        pot, cfg.E, cfg.m, cfg.hbar, x_L, x_R, cfg.launch, cfg.launch_points, cfg.mode,
        cfg.tol, cfg.max_cycles, cfg.min_cycles, cfg.sync, cfg.edge_tol, cfg.max_events,
    )
    p_max = max(abs(p.real) for p in engine.p if not math.isinf(abs(p)))
    grid = plot_grid(cfg, p_max)
    ok, snaps = engine.run(cfg.snapshot_times, grid)
    final = engine.final
    psi = final["psi"]
    monitors = {}
    if engine.mon_L:
        monitors["left"] = engine.mon_L
    if engine.mon_R:
        monitors["right"] = engine.mon_R
    trajectories = engine.trajectories
    components = engine.components
    if right:
        grid, psi = -grid[::-1], psi[::-1]
        snaps = [(t, -x[::-1], v[::-1]) for t, x, v in snaps]
        trajectories = [_mirror_traj(tr, pot.n_steps) for tr in trajectories]
        monitors = {{"left": "right", "right": "left"}[k]: m for k, m in monitors.items()}
        components = {(pot.n_steps - j, -d): c for (j, d), c in components.items()}
    result = ScatteringResult(
        E=cfg.E,
        P_refl=final["P_refl"],
        P_trans=final["P_trans"],
        error_bar=final["error_bar"],
        cycles_used=final["cycles_used"],
        t_final=final["t"],
        converged=ok,
        x=grid,
        psi=psi,
        snapshots=snaps,
        monitors=monitors,
        trajectories=trajectories,
        deaths=dict(engine.deaths),
        event_log=engine.event_log,
        components=components,
        incident=config.incident,
        mode=cfg.mode,
        mass=cfg.m,
        hbar=cfg.hbar,
        potential=pot,
        spawn_events=engine.spawn_events,
        mirrored=right,
        engine_components=engine.components,
    )
    if not ok and raise_on_stall:
        raise NotConverged(result)
    return result
