"""Problem preparation and noisy-sweep execution shared by the CLI and the tests."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .krylov import MomentVector, compute_moments
from .model import ModelParams, build_gauged_hamiltonian, exact_ground_energy, neel_reference
from .noise import allocate_shots, sample_perturbation, zero_noise
from .solvers import fractional_error, pqse, qse, tqse

__all__ = ["Problem", "prepare_problem", "run_cell", "SWEEP_COLUMNS", "SOLVERS"]

SOLVERS = ("qse", "tqse", "pqse")
SWEEP_COLUMNS = ["N", "mu", "x", "D_or_Dmax", "budget", "seed", "instance", "solver",
                 "energy", "frac_error", "status", "partitions"]


@dataclass(frozen=True)
class Problem:
    """Everything a solver run needs: the moments and the exact-energy oracle."""

    params: ModelParams
    moments: MomentVector
    e_gs: float
    e_int: float
    sector_dim: int

    def frac_error(self, energy_rescaled: float) -> float:
        return fractional_error(energy_rescaled, self.moments.scale, self.e_gs, self.e_int)


def prepare_problem(params: ModelParams, k_max: int, scale: float | None = None) -> Problem:
    """Build the Neel-sector operator, its ground-state oracle and moments up to ``k_max``.

    ``scale`` defaults to ``N``.
    """
    op = build_gauged_hamiltonian(params, sector="balanced")
    gs = exact_ground_energy(params, op)
    psi = neel_reference(params.N, op.basis)
    mom = compute_moments(op, psi, k_max, scale=float(params.N) if scale is None else scale)
    return Problem(params, mom, gs.energy, gs.interaction_energy, op.dimension)


def run_cell(problem: Problem, solver: str, D: int, budget: float | None, seed: int,
             instances, d_cap: int | None = None) -> list[dict]:
    """Run one ``(solver, D, budget)`` grid cell over the given noise instances.

    ``budget=None`` means noiseless. Failures are recorded in the row, never raised.
    """
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}")
    p = problem.params
    base = {"N": p.N, "mu": p.mu, "x": p.x, "D_or_Dmax": D,
            "budget": "inf" if budget is None else budget, "seed": seed, "solver": solver}
    rows = []
    alloc = None
    alloc_error = ""
    if budget is not None:
        try:
            alloc = allocate_shots(problem.moments, D, budget)
        except ValueError as exc:
            alloc_error = str(exc)
    for inst in instances:
        row = dict(base, instance=inst, energy="", frac_error="", status="failed", partitions="")
        if alloc_error:
            row["status"] = f"error: {alloc_error}"
            rows.append(row)
            continue
        try:
            noise = zero_noise(D) if alloc is None else sample_perturbation(problem.moments, alloc, seed, inst)
            if solver == "qse" or (solver == "tqse" and alloc is None):
                res = qse(problem.moments, D)
            elif solver == "tqse":
                res = tqse(problem.moments, noise, D)
            else:
                res = pqse(problem.moments, noise, D, d_cap or D)
            row["status"] = res.status
            row["partitions"] = "-".join(map(str, res.partitions))
            if np.isfinite(res.energy):
                row["energy"] = res.energy * problem.moments.scale
                row["frac_error"] = problem.frac_error(res.energy)
        except (ValueError, np.linalg.LinAlgError) as exc:
            row["status"] = f"error: {exc}"
        rows.append(row)
    return rows
