import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schwinger_qse.krylov import MomentVector, compute_moments
from schwinger_qse.noise import (
    allocate_shots,
    noise_to_csv,
    perturbed_hankel,
    sample_perturbation,
)
from test_krylov import N2_MOMENTS

N2 = MomentVector(np.array(N2_MOMENTS, dtype=float))
# Var_k / mu_k^2 = 1/9, 1/25, 25/49; calibration = 100 / (1/9 + 2/25 + 75/49)
N2_SHOTS = [6.453482246338637, 2.323253608681909, 29.633336845432517]


def test_n2_allocation():
    alloc = allocate_shots(N2, 1, 100)
    np.testing.assert_allclose(alloc.M, N2_SHOTS, rtol=1e-13)
    np.testing.assert_allclose(alloc.variance, [0.25, 0.25, 6.25])
    assert alloc.total_calls == pytest.approx(100)
    assert alloc.calibration == pytest.approx(551250 / 9491)


def test_requires_enough_moments():
    with pytest.raises(ValueError, match="moments up to"):
        allocate_shots(N2, 2, 100)


@settings(max_examples=30, deadline=None)
@given(st.floats(1, 1e12), st.integers(1, 3))
def test_budget_accounting_and_linearity(budget, D):
    from schwinger_qse.model import ModelParams, build_gauged_hamiltonian, neel_reference

    op = build_gauged_hamiltonian(ModelParams(6, 1.5, 0.5), "balanced")
    mom = compute_moments(op, neel_reference(6, op.basis), 4 * D + 2, 6.0)
    a = allocate_shots(mom, D, budget)
    assert abs(a.total_calls - budget) <= 0.5
    assert np.all(a.M >= 0)
    np.testing.assert_allclose(allocate_shots(mom, D, 2 * budget).M, 2 * a.M, rtol=1e-12)
    # equal relative error on every moment
    rel = a.sigma / np.abs(mom.values[1 : 2 * D + 2])
    np.testing.assert_allclose(rel, rel[0], rtol=1e-10)


def test_eigenstate_is_exact(sector):
    op, _ = sector(4)
    _, V = np.linalg.eigh(op.matrix.toarray())
    mom = compute_moments(op, V[:, 0], 10, 4.0)
    a = allocate_shots(mom, 2, 1e6)
    assert a.exact and np.all(a.M == 0)
    s = sample_perturbation(mom, a, 1, 2)
    assert np.all(s.delta == 0)


def test_deterministic_and_order_free(sector):
    op, psi = sector(6)
    mom = compute_moments(op, psi, 30, 6.0)
    a = allocate_shots(mom, 5, 1e6)
    first = [sample_perturbation(mom, a, 7, i).delta for i in range(5)]
    again = [sample_perturbation(mom, a, 7, i).delta for i in reversed(range(5))][::-1]
    for x, y in zip(first, again):
        np.testing.assert_array_equal(x, y)
    assert not np.array_equal(first[0], first[1])
    assert not np.array_equal(first[0], sample_perturbation(mom, a, 8, 0).delta)


def test_empirical_width(sector):
    op, psi = sector(6)
    mom = compute_moments(op, psi, 14, 6.0)
    a = allocate_shots(mom, 3, 1e5)
    draws = np.array([sample_perturbation(mom, a, 3, i).delta for i in range(10_000)])
    np.testing.assert_allclose(draws.std(axis=0), a.sigma, rtol=0.05)


def test_huge_budget_small_noise(sector):
    op, psi = sector(8)
    mom = compute_moments(op, psi, 22, 8.0)
    a = allocate_shots(mom, 5, 1e15)
    worst = [np.abs(sample_perturbation(mom, a, 0, i).delta).max() for i in range(200)]
    assert np.mean(np.array(worst) < 1e-4) > 0.99


def test_perturbation_is_hankel(sector):
    op, psi = sector(6)
    mom = compute_moments(op, psi, 22, 6.0)
    D = 5
    noise = sample_perturbation(mom, allocate_shots(mom, D, 1e6), 0, 0)
    _, d = perturbed_hankel(mom, noise, D)
    delta = np.concatenate([[0.0], noise.delta])
    for i in range(D):
        for j in range(D):
            assert d.S[i, j] == delta[i + j]
            assert d.H[i, j] == delta[i + j + 1]
    # the two matrices share antidiagonals offset by one
    assert d.S[1, 2] == d.H[0, 2] == d.H[1, 1]


def test_csv():
    a = allocate_shots(N2, 1, 100)
    text = noise_to_csv(a, sample_perturbation(N2, a, 0, 4))
    lines = text.strip().splitlines()
    assert lines[0] == "instance,k,M_k,sigma_k,delta_k"
    assert len(lines) == 4 and lines[1].startswith("4,1,")
