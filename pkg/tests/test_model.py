import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from schwinger_qse.model import (
    CapacityError,
    ModelParams,
    PauliTerm,
    balanced_basis,
    build_gauged_hamiltonian,
    build_pauli_hamiltonian,
    exact_ground_energy,
    format_pauli_terms,
    gauss_sector_matrix,
    link_qubits,
    load_model_params,
    neel_index,
    neel_reference,
    parse_pauli_terms,
    pauli_decompose,
)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]])
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0])


def by_block(terms, prefix):
    return [t for t in terms if t.block.startswith(prefix)]


class TestParams:
    def test_default_m(self):
        assert [link_qubits(N) for N in (2, 4, 6, 7, 14, 26)] == [1, 2, 2, 3, 3, 4]
        assert link_qubits(8, "appendix") == 4

    def test_rejects_small_N(self):
        with pytest.raises(ValueError):
            ModelParams(1)

    def test_conflicting_m(self):
        with pytest.raises(ValueError, match="explicit"):
            ModelParams(4, m=5)

    def test_explicit_small_link_warns(self):
        with pytest.warns(UserWarning, match="truncation"):
            ModelParams(12, m=1, truncation="explicit")

    @given(st.integers(2, 200))
    def test_paper_default_covers_quarter(self, N):
        p = ModelParams(N)
        assert p.link_dim >= N / 4
        assert p.n_qubits == N + p.m * (N - 1)


class TestPauliDecompose:
    def test_single_qubit_paulis(self):
        A = 0.3 * I2 + 0.1 * X - 0.7 * Y + 2.0 * Z
        got = pauli_decompose(A)
        assert got == pytest.approx({(0, 0): 0.3, (1, 0): 0.1, (1, 1): -0.7, (0, 1): 2.0})

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 3), st.integers(0, 2**31 - 1))
    def test_round_trip(self, n, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
        rebuilt = np.zeros_like(A)
        single = {(0, 0): I2, (1, 0): X, (1, 1): Y, (0, 1): Z}
        for (xm, zm), c in pauli_decompose(A, tol=0).items():
            op = np.ones((1, 1))
            for j in range(n):
                bit = n - 1 - j
                op = np.kron(op, single[((xm >> bit) & 1, (zm >> bit) & 1)])
            rebuilt += c * op
        np.testing.assert_allclose(rebuilt, A, atol=1e-12)


class TestPauliHamiltonian:
    def test_n2_field_block_is_half_identity_plus_z(self):
        terms = by_block(build_pauli_hamiltonian(ModelParams(2, 1.5, 0.5)), "field")
        assert sorted((t.weight, t.coeff) for t in terms) == [(0, 0.5), (1, 0.5)]
        assert {t.label for t in terms} == {"III", "IZI"}

    def test_n2_interaction_weights(self):
        # The raising operator is traceless, so no weight-2 strings survive; see notes.
        terms = by_block(build_pauli_hamiltonian(ModelParams(2, 1.5, 0.5)), "int")
        weights = sorted(t.weight for t in terms)
        assert weights == [3, 3, 3, 3]
        assert {t.label for t in terms} == {"XXX", "XYY", "YXY", "YYX"}
        assert all(abs(t.coeff) == pytest.approx(0.5 / 4) for t in terms)

    @pytest.mark.parametrize("N", [2, 4, 6])
    def test_x0_has_no_interactions(self, N):
        p = ModelParams(N, 1.5, 0.0)
        terms = build_pauli_hamiltonian(p)
        assert not by_block(terms, "int")
        field_per_link = len(pauli_decompose(np.diag((np.arange(p.link_dim) - p.link_dim / 2) ** 2)))
        assert len(terms) == N + (N - 1) * field_per_link

    def test_odd_N_constant_offset(self):
        terms = build_pauli_hamiltonian(ModelParams(3, 2.0, 0.5))
        offset = by_block(terms, "offset")
        assert len(offset) == 1 and offset[0].coeff == pytest.approx(-1.0)

    def test_coefficients_real_and_nonzero(self):
        for t in build_pauli_hamiltonian(ModelParams(6, 1.5, 0.5)):
            assert isinstance(t.coeff, float) and t.coeff != 0.0
            assert t.hamming_weight == sum(t.xbits) + sum(t.zbits)

    @pytest.mark.parametrize("N", [2, 3, 4, 5, 6])
    @pytest.mark.parametrize("x", [0.5, 5.0])
    def test_gauss_sector_spectrum_matches_gauged(self, N, x):
        p = ModelParams(N, 1.5, x)
        projected = gauss_sector_matrix(build_pauli_hamiltonian(p), p)
        gauged = build_gauged_hamiltonian(p, "balanced").matrix.toarray()
        np.testing.assert_allclose(np.linalg.eigvalsh(projected), np.linalg.eigvalsh(gauged), atol=1e-9)

    def test_text_round_trip(self):
        terms = build_pauli_hamiltonian(ModelParams(4, 1.5, 0.5))
        text = format_pauli_terms(terms)
        first = text.splitlines()[0].split()
        assert len(first[1]) == len(first[2]) == ModelParams(4).n_qubits
        back = parse_pauli_terms(text)
        assert [(t.coeff, t.xbits, t.zbits) for t in back] == [(t.coeff, t.xbits, t.zbits) for t in terms]


class TestGaugedHamiltonian:
    def test_n2_sector_matrix(self):
        H = build_gauged_hamiltonian(ModelParams(2, 1.5, 0.5)).matrix.toarray()
        # |up,down> = index 1, |down,up> = index 2
        np.testing.assert_allclose(H[np.ix_([1, 2], [1, 2])], [[-1.5, 0.5], [0.5, 2.5]])

    @pytest.mark.parametrize("N", [3, 5, 8])
    def test_symmetric(self, N):
        H = build_gauged_hamiltonian(ModelParams(N, 1.5, 0.7)).matrix
        assert abs(H - H.T).max() == 0.0

    @pytest.mark.parametrize("N", [4, 7])
    def test_conserves_magnetisation(self, N):
        H = build_gauged_hamiltonian(ModelParams(N, 1.5, 0.5)).matrix.tocoo()
        ups = lambda s: N - bin(s).count("1")  # noqa: E731
        assert all(ups(int(r)) == ups(int(c)) for r, c in zip(H.row, H.col))

    def test_balanced_sector_is_invariant_block(self):
        p = ModelParams(6, 1.5, 0.5)
        full = build_gauged_hamiltonian(p).matrix.toarray()
        sec = build_gauged_hamiltonian(p, "balanced")
        np.testing.assert_array_equal(full[np.ix_(sec.basis, sec.basis)], sec.matrix.toarray())

    def test_capacity(self):
        with pytest.raises(CapacityError):
            build_gauged_hamiltonian(ModelParams(27))
        with pytest.raises(CapacityError):
            build_gauged_hamiltonian(ModelParams(10), cap=8)


class TestNeel:
    def test_indices(self):
        assert neel_index(2) == 0b01
        assert neel_index(4) == 0b0101
        psi = neel_reference(4)
        assert psi[0b0101] == 1.0 and np.linalg.norm(psi) == 1.0

    @given(st.integers(2, 12))
    def test_staggered_spins(self, N):
        idx = neel_index(N)
        spins = [1 - 2 * ((idx >> (N - n)) & 1) for n in range(1, N + 1)]
        assert spins == [-((-1) ** n) for n in range(1, N + 1)]
        assert idx in set(balanced_basis(N).tolist())

    @pytest.mark.parametrize("N", [2, 4, 5, 8])
    def test_free_ground_state(self, N):
        p = ModelParams(N, 1.5, 0.0)
        op = build_gauged_hamiltonian(p)
        psi = neel_reference(N)
        e = psi @ (op.matrix @ psi)
        assert e == pytest.approx(np.linalg.eigvalsh(op.matrix.toarray())[0])
        np.testing.assert_allclose(op.matrix @ psi, e * psi)


class TestGroundEnergy:
    def test_n2_weak(self):
        gs = exact_ground_energy(ModelParams(2, 1.5, 0.5))
        assert gs.energy == pytest.approx(0.5 - math.sqrt(4.25), abs=1e-12)
        assert gs.interaction_energy == pytest.approx(-1.5 - (0.5 - math.sqrt(4.25)), abs=1e-12)

    def test_n2_strong(self):
        assert exact_ground_energy(ModelParams(2, 1.5, 5.0)).energy == pytest.approx(0.5 - math.sqrt(29), abs=1e-12)

    def test_x0_no_interaction_energy(self):
        assert exact_ground_energy(ModelParams(6, 1.5, 0.0)).interaction_energy == 0.0

    def test_lanczos_matches_dense(self):
        p = ModelParams(10, 1.5, 0.5)
        dense = exact_ground_energy(p)
        lanczos = exact_ground_energy(p, dense_cap=8)
        assert lanczos.method == "lanczos"
        assert lanczos.energy == pytest.approx(dense.energy, abs=1e-9)

    def test_sector_matches_full_space(self):
        p = ModelParams(6, 1.5, 0.5)
        full = np.linalg.eigvalsh(build_gauged_hamiltonian(p).matrix.toarray())
        # the full space contains lower states in other sectors; the oracle is the Neel sector's minimum
        assert exact_ground_energy(p).energy >= full[0] - 1e-12


def test_load_config(tmp_path):
    path = tmp_path / "m.yaml"
    path.write_text("n_sites: 6\nmu: 1.5\nx: 5\n")
    p = load_model_params(path)
    assert (p.N, p.mu, p.x, p.m) == (6, 1.5, 5.0, 2)
    with pytest.raises(KeyError):
        load_model_params({"mu": 1})


def test_pauli_term_label():
    t = PauliTerm(1.0, (1, 1, 0, 0), (0, 1, 1, 0))
    assert t.label == "XYZI" and t.weight == 3 and t.hamming_weight == 4
