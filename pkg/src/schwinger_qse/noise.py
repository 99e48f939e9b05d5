"""Shot allocation across moment estimates and Gaussian shot-noise sampling.

Moments ``k = 1..2D+1`` are measured; ``mu_0 = 1`` is known exactly. Shots are
spread so the relative error is the same for every moment,
``M_k = cal * Var_k / mu_k**2``, and ``cal`` is fixed by the call budget
``sum_k k * M_k`` (a degree-``k`` circuit costs ``k`` calls).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .krylov import HankelPair, MomentVector, assemble_hankel, moment_variance

__all__ = [
    "ShotAllocation",
    "NoiseSample",
    "allocate_shots",
    "sample_perturbation",
    "zero_noise",
    "perturbed_hankel",
    "noisy_moments",
    "noise_to_csv",
]


@dataclass(frozen=True)
class ShotAllocation:
    """Per-moment shot counts; ``M[i]`` and ``variance[i]`` belong to moment ``k = i + 1``."""

    M: np.ndarray
    variance: np.ndarray
    budget: float
    calibration: float
    D: int
    exact: bool = False

    @property
    def ks(self) -> np.ndarray:
        return np.arange(1, len(self.M) + 1)

    @property
    def total_calls(self) -> float:
        return float(np.sum(self.ks * self.M))

    @property
    def sigma(self) -> np.ndarray:
        """Standard deviation of each moment estimate (0 where no shots are needed)."""
        out = np.zeros(len(self.M))
        live = self.M > 0
        out[live] = np.sqrt(self.variance[live] / self.M[live])
        return out


@dataclass(frozen=True)
class NoiseSample:
    """Additive errors ``delta[i]`` on moment ``k = i + 1``."""

    delta: np.ndarray
    seed: int
    instance: int

    @property
    def n_moments(self) -> int:
        return len(self.delta)


def allocate_shots(moments: MomentVector, D: int, budget: float) -> ShotAllocation:
    """Distribute ``budget`` calls over moments ``1..2D+1``.

    If every single-shot variance vanishes (eigenstate reference) the result
    has all-zero shots and ``exact=True``.
    """
    if D < 1:
        raise ValueError("D must be >= 1")
    if not budget >= 1:
        raise ValueError("budget must be >= 1")
    K = 2 * D + 1
    if 2 * K > moments.k_max:
        raise ValueError(f"allocation for D={D} needs moments up to {2 * K}, have {moments.k_max}")
    ks = np.arange(1, K + 1)
    var = np.array([moment_variance(moments, int(k)) for k in ks])
    mu = np.asarray(moments.values[1 : K + 1])
    ratio = np.zeros(K)
    live = var > 0
    if np.any(live & (mu == 0.0)):
        raise ValueError("a noisy moment has zero mean; relative-error allocation is undefined")
    ratio[live] = var[live] / mu[live] ** 2
    weighted = float(np.sum(ks * ratio))
    if weighted == 0.0:
        return ShotAllocation(np.zeros(K), var, float(budget), 0.0, D, exact=True)
    cal = budget / weighted
    return ShotAllocation(cal * ratio, var, float(budget), cal, D)


def _stream(seed: int, instance: int, k: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(instance), int(k)]))


def sample_perturbation(moments: MomentVector, alloc: ShotAllocation, seed: int,
                        instance: int) -> NoiseSample:
    """Draw ``delta_k ~ N(0, sqrt(Var_k / M_k))`` independently per moment.

    Each ``(seed, instance, k)`` has its own generator, so a draw does not
    depend on which other instances were sampled or in what order.
    """
    sigma = alloc.sigma
    delta = np.zeros(len(sigma))
    for i, s in enumerate(sigma):
        if s > 0:
            delta[i] = s * _stream(seed, instance, i + 1).standard_normal()
    return NoiseSample(delta, int(seed), int(instance))


def zero_noise(D: int) -> NoiseSample:
    return NoiseSample(np.zeros(2 * D + 1), 0, 0)


def noisy_moments(moments: MomentVector, noise: NoiseSample) -> np.ndarray:
    """Moments ``0..len(delta)`` with the sampled errors added (``mu_0`` untouched)."""
    K = noise.n_moments
    if K > moments.k_max:
        raise ValueError("noise sample covers more moments than available")
    out = np.array(moments.values[: K + 1], dtype=float)
    out[1:] += noise.delta
    return out


def perturbed_hankel(moments: MomentVector, noise: NoiseSample, D: int) -> tuple[HankelPair, HankelPair]:
    """Return ``(exact, delta)`` Hankel pairs; the noisy pair is their sum."""
    if 2 * D - 1 > noise.n_moments:
        raise ValueError(f"noise sample too short for D={D}")
    exact = assemble_hankel(moments, D)
    d = np.concatenate([[0.0], noise.delta])
    idx = np.add.outer(np.arange(D), np.arange(D))
    return exact, HankelPair(d[idx], d[idx + 1])


def noise_to_csv(alloc: ShotAllocation, sample: NoiseSample) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["instance", "k", "M_k", "sigma_k", "delta_k"])
    for k, M, s, d in zip(alloc.ks, alloc.M, alloc.sigma, sample.delta):
        writer.writerow([sample.instance, int(k), repr(float(M)), repr(float(s)), repr(float(d))])
    return buf.getvalue()
