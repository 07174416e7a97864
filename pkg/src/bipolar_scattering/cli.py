"""Command-line driver: single runs and energy sweeps from a TOML config.

    bipolar-scatter run configs/barrier_above.toml --oracle --out out/
    bipolar-scatter run configs/barrier_above.toml --sweep 0.004,0.07,50 --jobs 4

Exit codes: 0 converged, 2 configuration error, 3 not converged (outputs are
still written with the best estimate), 4 energy on a region value.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import FIELD_TYPES, SimulationConfig, parse_config
from .dynamics import run
from .errors import ConfigError, EnergyAtStepEdge, NoIncidentWave, NotConverged
from .oracle import solve_exact

log = logging.getLogger("bipolar_scattering")

EXIT_OK, EXIT_CONFIG, EXIT_STALLED, EXIT_DEGENERATE = 0, 2, 3, 4

RESULT_COLUMNS = [
    ("E", "hartree"),
    ("P_refl", "1"),
    ("P_trans", "1"),
    ("error_bar", "1"),
    ("cycles", "1"),
    ("t_final", "a.u. time"),
    ("converged", "bool"),
]
ORACLE_COLUMNS = [("P_refl_exact", "1"), ("P_trans_exact", "1")]


@dataclass
class RunRecord:
    E: float
    status: int
    result: object = None  # ScatteringResult, absent for degenerate energies
    message: str = ""
    exact: tuple | None = None

    def row(self, oracle: bool) -> list:
        r = self.result
        if r is None:
            row = [self.E] + [math.nan] * 4 + [math.nan, False]
        else:
            row = [r.E, r.P_refl, r.P_trans, r.error_bar, r.cycles_used, r.t_final, r.converged]
        if oracle:
            row += list(self.exact) if self.exact else [math.nan, math.nan]
        return row


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def write_table(path: Path, columns, rows) -> None:
    """Tab-separated table with a '#' header of ``name[unit]`` entries."""
    header = "# " + "\t".join(f"{n}[{u}]" for n, u in columns)
    lines = [header] + ["\t".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def _oracle(cfg: SimulationConfig, E: float):
    try:
        sol = solve_exact(cfg.steps, cfg.values, E, cfg.m, cfg.hbar, cfg.incident)
    except (ZeroDivisionError, ValueError):
        return math.nan, math.nan
    return sol.P_refl, sol.P_trans


def simulate(cfg: SimulationConfig) -> RunRecord:
    """One energy; never raises for physics outcomes, only reports a status."""
    exact = _oracle(cfg, cfg.E) if cfg.oracle else None
    try:
        result = run(cfg)
        return RunRecord(cfg.E, EXIT_OK, result, exact=exact)
    except NotConverged as exc:
        return RunRecord(cfg.E, EXIT_STALLED, exc.result, str(exc), exact)
    except EnergyAtStepEdge as exc:
        return RunRecord(cfg.E, EXIT_DEGENERATE, None, str(exc), exact)
    except NoIncidentWave as exc:
        return RunRecord(cfg.E, EXIT_CONFIG, None, str(exc), exact)


def _component_label(traj) -> str:
    region = chr(ord("A") + traj.region) if traj.region < 26 else f"R{traj.region}"
    return region + ("+" if traj.direction > 0 else "-")


def trajectory_rows(result) -> list:
    """One row per trajectory: birth and end vertices of its straight path."""
    rows = []
    for tr in result.trajectories:
        t_death = result.deaths.get(tr.id)
        status = 0 if t_death is None else (2 if math.isinf(t_death) else 1)
        t_end = result.t_final if status != 1 else t_death
        end = tr.position(max(t_end, tr.t), result.mass) if status != 2 else tr.x
        rows.append([
            tr.id,
            _component_label(tr),
            -1 if tr.parent_id is None else tr.parent_id,
            tr.order,
            tr.r,
            tr.s,
            tr.t,
            tr.x.real,
            t_end if status != 2 else tr.t,
            end.real,
            end.imag,
            status,
        ])
    return rows


TRAJECTORY_COLUMNS = [
    ("id", "1"),
    ("component", "label"),
    ("parent", "1"),
    ("order", "1"),
    ("r", "a.u."),
    ("s", "hbar"),
    ("t_birth", "a.u. time"),
    ("x_birth", "bohr"),
    ("t_end", "a.u. time"),
    ("x_end", "bohr"),
    ("y_end", "bohr"),
    ("status", "0 live/1 retired/2 evanescent"),
]
PSI_COLUMNS = [("x", "bohr"), ("re_psi", "a.u."), ("im_psi", "a.u."), ("abs2_psi", "a.u.")]


def write_outputs(cfg: SimulationConfig, records: list[RunRecord], out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    columns = RESULT_COLUMNS + (ORACLE_COLUMNS if cfg.oracle else [])
    path = out / f"{cfg.name}_result.tsv"
    write_table(path, columns, [rec.row(cfg.oracle) for rec in sorted(records, key=lambda r: r.E)])
    written.append(path)
    if len(records) != 1 or records[0].result is None:
        return written
    res = records[0].result
    path = out / f"{cfg.name}_psi.tsv"
    write_table(path, PSI_COLUMNS, _psi_rows(res.x, res.psi))
    written.append(path)
    if res.snapshots:
        path = out / f"{cfg.name}_snapshots.tsv"
        rows = []
        for t, x, psi in res.snapshots:
            rows += [[t] + row for row in _psi_rows(x, psi)]
        write_table(path, [("t", "a.u. time")] + PSI_COLUMNS, rows)
        written.append(path)
    path = out / f"{cfg.name}_trajectories.tsv"
    write_table(path, TRAJECTORY_COLUMNS, trajectory_rows(res))
    written.append(path)
    return written


def _psi_rows(x, psi) -> list:
    return [[a, b.real, b.imag, abs(b) ** 2] for a, b in zip(np.asarray(x), np.asarray(psi))]


def run_scenario(cfg: SimulationConfig, out=None) -> tuple[int, list[RunRecord]]:
    """Run a config (single energy or sweep), write its tables, return (exit code, records)."""
    energies = cfg.energies()
    configs = [cfg.at_energy(E) for E in energies]
    if len(configs) > 1 and cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            records = list(pool.map(simulate, configs))
    else:
        records = [simulate(c) for c in configs]
    write_outputs(cfg, records, Path(out if out is not None else cfg.out))
    statuses = {r.status for r in records}
    for code in (EXIT_CONFIG, EXIT_DEGENERATE, EXIT_STALLED):
        if code in statuses:
            return code, records
    return EXIT_OK, records


def _flag(name: str) -> list[str]:
    kebab = name.replace("_", "-")
    flags = [f"--{kebab}"]
    if kebab.lower() != kebab:
        flags.append(f"--{kebab.lower()}")
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bipolar-scatter",
        description="Counter-propagating-wave trajectory scattering for piecewise-constant potentials.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run a scenario config")
    p.add_argument("config", nargs="?", help="TOML config file")
    p.add_argument("--sweep", metavar="MIN,MAX,COUNT", help="energy sweep (replaces E)")
    p.add_argument("--snapshots", metavar="T1,T2,...", help="snapshot times")
    defaults = SimulationConfig()
    for f in fields(SimulationConfig):
        if f.name == "oracle":
            p.add_argument("--oracle", action="store_const", const=True, default=None,
                           help="add exact transfer-matrix columns")
            continue
        p.add_argument(*_flag(f.name), dest=f.name, default=None, metavar=f.name.upper(),
                       help=f"{FIELD_TYPES[f.name]} (default: {getattr(defaults, f.name)!r})")
    return parser


def overrides_from_args(args) -> dict:
    out = {name: getattr(args, name) for name in FIELD_TYPES if getattr(args, name, None) is not None}
    if args.sweep:
        parts = args.sweep.split(",")
        if len(parts) != 3:
            raise ConfigError("--sweep expects MIN,MAX,COUNT", field="sweep")
        out["sweep_min"], out["sweep_max"], out["sweep_count"] = parts
        out["E"] = None
    if args.snapshots:
        out["snapshot_times"] = args.snapshots
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = parse_config(args.config, overrides_from_args(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    code, records = run_scenario(cfg)
    for rec in records:
        if rec.result is not None:
            r = rec.result
            line = (f"E={r.E:.6g} P_refl={r.P_refl:.6f} P_trans={r.P_trans:.6f} "
                    f"error_bar={r.error_bar:.2e} cycles={r.cycles_used}")
            if rec.exact:
                line += f" exact_P_trans={rec.exact[1]:.6f}"
            print(line if rec.status == EXIT_OK else f"{line} NOT CONVERGED")
        else:
            print(f"E={rec.E:.6g} skipped: {rec.message}", file=sys.stderr)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
