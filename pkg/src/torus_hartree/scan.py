"""Thermodynamic-limit scan harness.

A plan fixes a potential, ascending rho and L ladders, a cutoff rule
M = ceil(kappa L), an initial-state family, and integrator settings.
Every (rho, L) point runs independently with a seed derived from the
master seed and the ladder indices, so tables are bit-reproducible for
any worker count.  The summary reports, for each monitored column, the
value at the largest L per rho (a proxy for the L limit) and the trend
across the rho ladder; no extrapolation is attempted.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dataclass_field

import numpy as np
from numpy.random import SeedSequence

from . import diagnostics
from .evolution import IntegratorConfig, evolve
from .field import TorusLattice, make_state
from .potential import make_potential

__all__ = [
    "ScanPlan",
    "ScanRecord",
    "SCAN_COLUMNS",
    "load_plan",
    "run_scan",
    "write_scan_csv",
    "iterated_limit_summary",
    "WORKERS_ENV",
]

WORKERS_ENV = "TORUS_HARTREE_WORKERS"

DEFAULT_SUMMARY_COLUMNS = ("beta_gap", "energy_gap", "condensate_fraction",
                           "kinetic_tail", "tail_half_M")


@dataclass
class ScanPlan:
    potential: dict
    rho_values: list
    L_values: list
    family: str
    family_params: dict
    t_final: float
    dt: float
    method: str = "split_strang"
    kappa: float = 1.0
    stride: int = 1
    master_seed: int = 0
    dealiasing: bool = True
    write_trajectories: bool = True
    summary_columns: tuple = DEFAULT_SUMMARY_COLUMNS

    def __post_init__(self):
        for name in ("rho_values", "L_values"):
            vals = [float(v) for v in getattr(self, name)]
            if not vals:
                raise ValueError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(vals, vals[1:])):
                raise ValueError(f"{name} must be strictly ascending")
            setattr(self, name, vals)
        if not self.kappa > 0.0:
            raise ValueError("kappa must be positive")
        if self.t_final < 0.0:
            raise ValueError("t_final must be non-negative")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if "seed" in self.family_params:
            raise ValueError("per-point seeds come from master_seed; "
                             "remove 'seed' from family_params")

    def cutoff(self, L: float) -> int:
        return int(math.ceil(self.kappa * L))

    def resolve_params(self, rho: float) -> dict:
        """Apply per-point parameter rules (currently the eps rule)."""
        params = dict(self.family_params)
        rule = params.pop("eps_rule", None)
        if "eps0" in params:
            eps0 = float(params.pop("eps0"))
            rule = rule or "inv_sqrt_rho"
            if rule == "inv_sqrt_rho":
                params["eps"] = eps0 / math.sqrt(rho)
            elif rule == "fixed":
                params["eps"] = eps0
            else:
                raise ValueError(f"unknown eps_rule {rule!r}")
        elif rule is not None:
            raise ValueError("eps_rule requires eps0")
        if "k0" in params:
            params["k0"] = tuple(int(v) for v in params["k0"])
        return params


def load_plan(path) -> ScanPlan:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: plan must be a JSON object")
    known = set(ScanPlan.__dataclass_fields__)
    extra = set(doc) - known
    if extra:
        raise ValueError(f"{path}: unknown plan keys {sorted(extra)}")
    missing = {"potential", "rho_values", "L_values", "family",
               "family_params", "t_final", "dt"} - set(doc)
    if missing:
        raise ValueError(f"{path}: missing plan keys {sorted(missing)}")
    return ScanPlan(**doc)


SCAN_COLUMNS = [
    "rho", "L", "M", "seed", "n_particles", "status", "final_t", "mass",
    "energy", "energy_per_particle", "energy_gap", "S", "T", "k_star",
    "condensate_fraction", "l1_dev", "l2_dev", "tail_half_M", "beta_gap",
    "kinetic_tail", "u_mass_sq", "max_mass_dev", "max_energy_drift",
    "min_s_margin", "min_t_margin", "runtime_s",
]

_NUMERIC_FIELDS = [c for c in SCAN_COLUMNS
                   if c not in ("rho", "L", "M", "seed", "status", "k_star")]


@dataclass
class ScanRecord:
    rho: float
    L: float
    M: int
    seed: str
    status: str = "ok"
    n_particles: float = math.nan
    final_t: float = math.nan
    mass: float = math.nan
    energy: float = math.nan
    energy_per_particle: float = math.nan
    energy_gap: float = math.nan
    S: float = math.nan
    T: float = math.nan
    k_star: str = ""
    condensate_fraction: float = math.nan
    l1_dev: float = math.nan
    l2_dev: float = math.nan
    tail_half_M: float = math.nan
    beta_gap: float = math.nan
    kinetic_tail: float = math.nan
    u_mass_sq: float = math.nan
    max_mass_dev: float = math.nan
    max_energy_drift: float = math.nan
    min_s_margin: float = math.nan
    min_t_margin: float = math.nan
    runtime_s: float = math.nan


def _trajectory_filename(rho: float, L: float) -> str:
    return f"traj_rho{rho:g}_L{L:g}.csv"


def _run_point(plan: ScanPlan, model, i_rho: int, i_L: int, out_dir) -> ScanRecord:
    rho = plan.rho_values[i_rho]
    L = plan.L_values[i_L]
    M = plan.cutoff(L)
    seed_label = f"{plan.master_seed}:{i_rho}:{i_L}"
    rec = ScanRecord(rho=rho, L=L, M=M, seed=seed_label)
    started = time.perf_counter()
    try:
        lattice = TorusLattice(L, M)
        seed = SeedSequence([int(plan.master_seed), i_rho, i_L])
        params = plan.resolve_params(rho)
        if plan.family in ("perturbed_condensate", "perturbed",
                           "perturbed-condensate"):
            params["seed"] = seed
        state = make_state(plan.family, lattice, rho, **params)

        if plan.t_final > 0.0:
            config = IntegratorConfig(method=plan.method, dt=plan.dt,
                                      dealiasing=plan.dealiasing)
            traj = evolve(state, model, plan.t_final, config,
                          stride=plan.stride, keep_states=False)
        else:
            ctx = diagnostics.TrajectoryContext.from_state(state, model)
            traj = _StaticTrajectory(
                records=[diagnostics.make_record(state, model, ctx)],
                context=ctx)

        records = traj.records
        final = records[-1]
        rec.n_particles = rho * L**3
        rec.final_t = final.t
        rec.mass = final.mass
        rec.energy = final.energy
        rec.energy_per_particle = final.energy_per_particle
        rec.energy_gap = abs(final.energy_per_particle - 0.5 * model.b)
        rec.S = final.S
        rec.T = final.T
        rec.k_star = " ".join(str(v) for v in final.k_star)
        rec.condensate_fraction = final.condensate_fraction
        rec.l1_dev = final.l1_dev
        rec.l2_dev = final.l2_dev
        rec.tail_half_M = final.tail_half_M
        rec.beta_gap = final.beta_gap
        rec.kinetic_tail = final.kinetic_tail
        rec.u_mass_sq = final.u_mass_sq
        rec.max_mass_dev = max(abs(r.mass - 1.0) for r in records)
        e0 = records[0].energy
        if math.isfinite(e0) and e0 != 0.0:
            rec.max_energy_drift = max(abs(r.energy - e0) / abs(e0)
                                       for r in records)
        audit = diagnostics.envelope_audit(traj)
        s_margins = [e["s_margin"] for e in audit["records"] if e.get("in_domain")]
        t_margins = [e["t_margin"] for e in audit["records"] if e.get("in_domain")]
        if s_margins:
            rec.min_s_margin = min(s_margins)
            rec.min_t_margin = min(t_margins)

        if out_dir is not None and plan.write_trajectories:
            diagnostics.write_trajectory_csv(
                records, os.path.join(out_dir, _trajectory_filename(rho, L)))
    except Exception as exc:  # failure isolation: the scan must continue
        rec.status = f"failed: {type(exc).__name__}: {exc}"
    rec.runtime_s = time.perf_counter() - started
    return rec


@dataclass
class _StaticTrajectory:
    records: list
    context: object
    states: list | None = dataclass_field(default=None)


def run_scan(plan: ScanPlan, out_dir=None, workers=None) -> list:
    """Execute all plan points; rows come back rho-major, then L.

    Per-point failures are recorded in the row's status and do not stop
    the scan.  When ``out_dir`` is given, writes table.csv, summary.json,
    and one trajectory CSV per point.
    """
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    workers = max(1, int(workers))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    model = make_potential(plan.potential)

    points = [(i_rho, i_L)
              for i_rho in range(len(plan.rho_values))
              for i_L in range(len(plan.L_values))]
    if workers == 1:
        records = [_run_point(plan, model, i, j, out_dir) for i, j in points]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                lambda ij: _run_point(plan, model, ij[0], ij[1], out_dir),
                points))

    if out_dir is not None:
        write_scan_csv(records, os.path.join(out_dir, "table.csv"))
        summary = iterated_limit_summary(records, plan.summary_columns)
        with open(os.path.join(out_dir, "summary.json"), "w",
                  encoding="ascii") as fh:
            json.dump(summary, fh, indent=1, sort_keys=True)
            fh.write("\n")
    return records


def write_scan_csv(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SCAN_COLUMNS)
        for rec in records:
            row = []
            for col in SCAN_COLUMNS:
                val = getattr(rec, col)
                if col in ("seed", "status", "k_star"):
                    row.append(val)
                elif col == "M":
                    row.append(str(int(val)))
                else:
                    row.append(diagnostics.format_float(val))
            writer.writerow(row)


def iterated_limit_summary(records, columns=DEFAULT_SUMMARY_COLUMNS) -> dict:
    """Largest-L value per rho for each column, plus the trend across rho.

    Trends are classified as decreasing, increasing, flat (relative
    changes below 1e-9), mixed, or undefined (missing data).
    """
    ok = [r for r in records if r.status == "ok"]
    rhos = sorted({r.rho for r in ok})
    out_columns = {}
    for col in columns:
        proxies = []
        for rho in rhos:
            rows = [r for r in ok if r.rho == rho]
            if not rows:
                continue
            best = max(rows, key=lambda r: r.L)
            proxies.append({"rho": rho, "L": best.L,
                            "value": getattr(best, col)})
        values = [p["value"] for p in proxies]
        if len(values) < 2 or any(not math.isfinite(v) for v in values):
            trend = "undefined"
        else:
            scale = max(abs(v) for v in values)
            tol = 1e-9 * scale
            diffs = [b - a for a, b in zip(values, values[1:])]
            if all(abs(d) <= tol for d in diffs):
                trend = "flat"
            elif all(d < -tol for d in diffs):
                trend = "decreasing"
            elif all(d > tol for d in diffs):
                trend = "increasing"
            else:
                trend = "mixed"
        entry = {"proxies": proxies, "trend": trend}
        if trend == "flat":
            entry["value"] = values[0]
        out_columns[col] = entry
    return {
        "rho_values": rhos,
        "points_total": len(records),
        "points_failed": sum(1 for r in records if r.status != "ok"),
        "columns": out_columns,
    }
