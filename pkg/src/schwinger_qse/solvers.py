"""Subspace-expansion ground-state solvers driven purely by moments.

All energies are in rescaled units (``H / scale``); multiply by
``moments.scale`` for physical units.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .krylov import MomentVector, assemble_hankel
from .noise import NoiseSample, noisy_moments, perturbed_hankel

__all__ = [
    "EnergyResult",
    "PolyState",
    "solve_gevp",
    "qse",
    "tqse",
    "pqse",
    "state_variance",
    "fractional_error",
]

MACHINE_FLOOR = 1e-14
TIE_TOL = 1e-12


@dataclass
class EnergyResult:
    energy: float
    coeffs: np.ndarray
    status: str = "ok"
    smallest_kept: float = float("nan")
    discarded: int = 0
    partitions: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class PolyState:
    """``sum_j coeffs[j] (H/scale)^j |psi0>``."""

    coeffs: np.ndarray

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def moments_of(self, mu: np.ndarray, r_max: int) -> np.ndarray:
        """``nu_r = <psi|(H/s)^r|psi>`` for ``r = 0..r_max`` from raw moments ``mu``."""
        aa = np.convolve(self.coeffs, self.coeffs)
        need = len(aa) - 1 + r_max
        if need >= len(mu):
            raise ValueError(f"state of degree {self.degree} needs moments up to {need}")
        return np.array([aa @ mu[r : r + len(aa)] for r in range(r_max + 1)])


def _failed(dim: int, discarded: int = 0) -> EnergyResult:
    return EnergyResult(float("nan"), np.full(dim, np.nan), "failed", float("nan"), discarded)


def solve_gevp(S: np.ndarray, H: np.ndarray, epsilon_cut: float = 0.0) -> EnergyResult:
    """Lowest root of ``H c = E S c`` by canonical orthogonalisation.

    Eigenvectors of ``S`` with eigenvalue ``<= epsilon_cut`` are dropped
    (``epsilon_cut = 0`` drops only those below ``1e-14 * ||S||``). The
    returned ``coeffs`` have unit ``S``-norm. Status is ``unstable`` when the
    machine-floor cut removed directions, ``failed`` when nothing survives.
    """
    S = np.asarray(S, dtype=float)
    H = np.asarray(H, dtype=float)
    dim = S.shape[0]
    if S.shape != H.shape or S.shape != (dim, dim):
        raise ValueError("S and H must be square and of equal size")
    if not (np.all(np.isfinite(S)) and np.all(np.isfinite(H))):
        return _failed(dim)
    w, V = np.linalg.eigh(0.5 * (S + S.T))
    norm = np.max(np.abs(w)) if dim else 0.0
    cut = epsilon_cut if epsilon_cut > 0 else MACHINE_FLOOR * norm
    keep = w > cut
    n_drop = int(dim - keep.sum())
    if not keep.any():
        return _failed(dim, n_drop)
    X = V[:, keep] / np.sqrt(w[keep])
    Hp = X.T @ (0.5 * (H + H.T)) @ X
    e, y = np.linalg.eigh(Hp)
    c = X @ y[:, 0]
    status = "unstable" if (n_drop and epsilon_cut <= 0) else "ok"
    return EnergyResult(float(e[0]), c, status, float(w[keep].min()), n_drop)


def qse(moments: MomentVector, D: int) -> EnergyResult:
    pair = assemble_hankel(moments, D)
    return solve_gevp(pair.S, pair.H, 0.0)


def tqse(moments: MomentVector, noise: NoiseSample, D: int) -> EnergyResult:
    """QSE on the perturbed Hankel pair, cutting S-eigenvalues below ``||Delta_S||_2``."""
    exact, delta = perturbed_hankel(moments, noise, D)
    threshold = float(np.linalg.norm(delta.S, 2)) if np.any(delta.S) else 0.0
    return solve_gevp(exact.S + delta.S, exact.H + delta.H, threshold)


def state_variance(state: PolyState, moments) -> float:
    """Energy variance of a polynomial state, normalised by its norm."""
    mu = np.asarray(getattr(moments, "values", moments), dtype=float)
    nu = state.moments_of(mu, 2)
    return float(nu[2] / nu[0] - (nu[1] / nu[0]) ** 2)


def pqse(moments: MomentVector, noise: NoiseSample, D_max: int, d_cap: int) -> EnergyResult:
    """Partitioned QSE using only the noisy moments.

    Starting from ``psi0``, repeatedly build Krylov partitions of size
    ``d = 2..d_cap`` on the current state, solve each small GEVP and keep the
    partition whose optimal state has the smallest energy variance (smaller
    ``d`` on ties). Partition sizes satisfy ``sum(d_i - 1) = D_max - 1``.
    """
    if D_max < 1:
        raise ValueError("D_max must be >= 1")
    if d_cap < 2:
        raise ValueError("d_cap must be >= 2")
    if noise.n_moments < 2 * D_max - 1:
        raise ValueError(f"noise sample covers {noise.n_moments} moments, need {2 * D_max - 1}")
    mu = noisy_moments(moments, noise)
    top = len(mu) - 1

    state = PolyState(np.array([1.0]))
    energy = float(mu[1])
    partitions: list[int] = []
    status = "ok"
    best = None
    while state.degree < D_max - 1:
        choice = None
        for d in range(2, min(d_cap, D_max - state.degree) + 1):
            r_need = 2 * d - 1
            if 2 * state.degree + r_need > top:
                break
            nu = state.moments_of(mu, r_need)
            idx = np.add.outer(np.arange(d), np.arange(d))
            res = solve_gevp(nu[idx], nu[idx + 1], 0.0)
            if res.status == "failed":
                continue
            cand = PolyState(np.convolve(state.coeffs, res.coeffs))
            if 2 * cand.degree + 2 <= top:
                var = abs(state_variance(cand, mu))
            else:
                # top moment missing: no variance available, rank last
                var = np.inf
            if not np.isfinite(res.energy):
                continue
            if choice is None or var < choice[0] - TIE_TOL:
                choice = (var, d, cand, res.energy)
        if choice is None:
            status = "failed" if not partitions else "unstable"
            break
        _, d, state, energy = choice
        partitions.append(d)
        best = state
    if status == "failed":
        return EnergyResult(float("nan"), np.array([1.0]), "failed", partitions=partitions)
    coeffs = best.coeffs if best is not None else state.coeffs
    return EnergyResult(float(energy), coeffs, status, partitions=partitions)


def fractional_error(energy_rescaled: float, scale: float, e_gs: float, e_int: float) -> float:
    """``|E * scale - E_gs| / E_int``."""
    return abs(energy_rescaled * scale - e_gs) / e_int
