"""Hamiltonian moments and the Hankel overlap matrices built from them."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

__all__ = [
    "OverflowGuardError",
    "MomentVector",
    "HankelPair",
    "compute_moments",
    "assemble_hankel",
    "moment_variance",
    "moments_to_csv",
    "moments_from_csv",
    "spectral_radius",
    "reachable_dimension",
]

NORM_LIMIT = 1e280
VARIANCE_RTOL = 1e-12


class OverflowGuardError(FloatingPointError):
    pass


@dataclass(frozen=True)
class MomentVector:
    """``values[k] = <psi0|(H/scale)^k|psi0>`` for ``k = 0..k_max``."""

    values: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) == 0:
            raise ValueError("moments must be a non-empty 1-d array")
        if vals[0] != 1.0:
            raise ValueError(f"mu_0 must be exactly 1, got {vals[0]!r}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self):
        return len(self.values)

    def rescaled(self, scale: float) -> "MomentVector":
        """Same moments expressed with a different per-step scale."""
        k = np.arange(len(self.values))
        return MomentVector(self.values * (self.scale / scale) ** k, scale)


@dataclass(frozen=True)
class HankelPair:
    S: np.ndarray
    H: np.ndarray

    @property
    def dim(self) -> int:
        return self.S.shape[0]


def compute_moments(op, psi0: np.ndarray, k_max: int, scale: float = 1.0) -> MomentVector:
    """Moments of ``op / scale`` in ``psi0`` up to order ``k_max``.

    Only two Krylov vectors are held at a time: with ``v_j = (H/s)^j psi0``,
    ``mu_{2j} = v_j . v_j`` and ``mu_{2j+1} = v_j . v_{j+1}``.

    Raises
    ------
    OverflowGuardError
        If a Krylov vector norm exceeds 1e280; use a larger ``scale``.
    """
    if k_max < 0:
        raise ValueError("k_max must be >= 0")
    if not scale > 0:
        raise ValueError("scale must be positive")
    mat = getattr(op, "matrix", op)
    v = np.asarray(psi0, dtype=float)
    norm = np.linalg.norm(v)
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"reference state is not normalised (norm {norm})")
    mu = np.empty(k_max + 1)
    mu[0] = 1.0
    j = 0
    while 2 * j + 1 <= k_max:
        w = (mat @ v) / scale
        nrm = np.linalg.norm(w)
        if not np.isfinite(nrm) or nrm > NORM_LIMIT:
            raise OverflowGuardError(
                f"Krylov vector norm {nrm:.3e} at power {j + 1}; increase the scale"
            )
        mu[2 * j + 1] = v @ w
        if 2 * j + 2 <= k_max:
            mu[2 * j + 2] = w @ w
        v = w
        j += 1
    return MomentVector(mu, scale)


def assemble_hankel(moments: MomentVector, D: int) -> HankelPair:
    """``S[i, j] = mu[i+j]`` and ``H[i, j] = mu[i+j+1]`` for ``i, j < D``."""
    if D < 1:
        raise ValueError("D must be >= 1")
    if 2 * D - 1 > moments.k_max:
        raise ValueError(f"D={D} needs moments up to {2 * D - 1}, have {moments.k_max}")
    idx = np.add.outer(np.arange(D), np.arange(D))
    mu = np.asarray(moments.values)
    return HankelPair(mu[idx].copy(), mu[idx + 1].copy())


def moment_variance(moments: MomentVector, k: int) -> float:
    """Single-shot variance ``mu_{2k} - mu_k**2`` of the ``k``-th moment estimator.

    Values within ``1e-12 * mu_{2k}`` of zero are roundoff and returned as 0.
    """
    if 2 * k > moments.k_max:
        raise ValueError(f"variance of moment {k} needs mu_{2 * k}, have up to {moments.k_max}")
    var = float(moments[2 * k] - moments[k] ** 2)
    if var <= VARIANCE_RTOL * abs(float(moments[2 * k])):
        return 0.0
    return var


def moments_to_csv(moments: MomentVector) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "mu_k", "scale"])
    for k, v in enumerate(moments.values):
        writer.writerow([k, repr(float(v)), repr(moments.scale)])
    return buf.getvalue()


def moments_from_csv(text: str) -> MomentVector:
    rows = [r for r in csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#"))]
    if not rows:
        raise ValueError("no moment rows")
    rows.sort(key=lambda r: int(r["k"]))
    ks = [int(r["k"]) for r in rows]
    if ks != list(range(len(ks))):
        raise ValueError("moment rows must cover k = 0..k_max without gaps")
    scales = {float(r["scale"]) for r in rows}
    if len(scales) != 1:
        raise ValueError("mixed scales in moment file")
    return MomentVector(np.array([float(r["mu_k"]) for r in rows]), scales.pop())


def spectral_radius(op) -> float:
    """Largest ``|eigenvalue|`` of a symmetric operator (dense below 2000 states, Lanczos above)."""
    import scipy.sparse.linalg as spla

    mat = getattr(op, "matrix", op)
    if mat.shape[0] <= 2000:
        dense = mat.toarray() if hasattr(mat, "toarray") else np.asarray(mat)
        return float(np.max(np.abs(np.linalg.eigvalsh(dense))))
    return float(abs(spla.eigsh(mat, k=1, which="LM", return_eigenvectors=False)[0]))


def reachable_dimension(op, psi0: np.ndarray, tol: float = 1e-10) -> int:
    """Dimension of the full Krylov space of ``psi0``: distinct eigenvalues with nonzero weight."""
    mat = getattr(op, "matrix", op)
    dense = mat.toarray() if hasattr(mat, "toarray") else np.asarray(mat)
    w, V = np.linalg.eigh(dense)
    weight = (V.T @ psi0) ** 2
    levels = []
    for e, p in zip(w, weight):
        if p <= tol**2:
            continue
        if levels and abs(e - levels[-1]) <= tol * max(1.0, abs(e)):
            continue
        levels.append(e)
    return len(levels)
