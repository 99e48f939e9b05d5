"""Single-flavour lattice Schwinger model.

Two representations are built here:

* the explicit-field qubit Hamiltonian, as a list of :class:`PauliTerm`
  acting on ``N + m (N - 1)`` qubits (sites interleaved with ``m``-qubit
  gauge-link registers: ``site 1, link 1, site 2, ..., site N``);
* the gauge-eliminated spin Hamiltonian on ``N`` qubits, as a sparse
  real-symmetric matrix.

Conventions
-----------
Spin states: computational bit 0 is spin up (``sigma3 = +1``), bit 1 is spin
down. Site ``n`` (1-based) is bit ``N - n`` of the basis index, so site 1 is
the most significant bit and a basis index printed in binary reads the chain
left to right. The Neel reference state has ``sigma3(n) = -(-1)**n``, i.e.
``up, down, up, down, ...`` which is binary ``0101...``.

Gauge-link registers store ``l = 0 .. Lambda - 1`` (most significant bit
first) and represent the field value ``L = l - Lambda / 2``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

__all__ = [
    "CapacityError",
    "ModelParams",
    "PauliTerm",
    "SparseOperator",
    "GroundState",
    "link_qubits",
    "pauli_decompose",
    "build_pauli_hamiltonian",
    "build_gauged_hamiltonian",
    "gauss_sector_matrix",
    "balanced_basis",
    "neel_index",
    "neel_reference",
    "exact_ground_energy",
    "load_model_params",
    "format_pauli_terms",
    "parse_pauli_terms",
]

GAUGED_CAP = 26
DENSE_CAP = 14
TRUNCATION_POLICIES = ("paper_default", "appendix", "explicit")


class CapacityError(RuntimeError):
    """Requested system is larger than the configured memory cap."""


def link_qubits(n_sites: int, rule: str = "paper_default") -> int:
    """Qubits per gauge link.

    ``paper_default`` gives ``ceil(log2(N/2 + 1))``; ``appendix`` gives the
    looser ``ceil(log2(N) + 1)`` used in the asymptotic cost remarks.
    """
    if rule == "paper_default":
        return max(1, math.ceil(math.log2(n_sites / 2 + 1)))
    if rule == "appendix":
        return max(1, math.ceil(math.log2(n_sites) + 1))
    raise ValueError(f"unknown link-qubit rule {rule!r}")


@dataclass(frozen=True)
class ModelParams:
    """Lattice size, rescaled mass ``mu``, rescaled coupling ``x`` and link register width ``m``."""

    N: int
    mu: float = 1.5
    x: float = 0.5
    m: int | None = None
    truncation: str = "paper_default"

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise ValueError(f"N must be an integer >= 2, got {self.N}")
        if self.truncation not in TRUNCATION_POLICIES:
            raise ValueError(
                f"truncation must be one of {TRUNCATION_POLICIES}, got {self.truncation!r}"
            )
        if self.truncation == "explicit":
            if self.m is None:
                raise ValueError("truncation='explicit' requires m")
            m = int(self.m)
        else:
            m = link_qubits(self.N, self.truncation)
            if self.m is not None and int(self.m) != m:
                raise ValueError(
                    f"m={self.m} conflicts with truncation={self.truncation!r} (m={m}); "
                    "use truncation='explicit'"
                )
        if m < 1:
            raise ValueError("m must be >= 1")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "x", float(self.x))
        if self.link_dim < self.N / 4:
            warnings.warn(
                f"gauge link dimension {self.link_dim} < N/4 = {self.N / 4}: "
                "field truncation will cut physical states",
                stacklevel=2,
            )

    @property
    def link_dim(self) -> int:
        return 2**self.m

    @property
    def n_qubits(self) -> int:
        """Qubits in the explicit-field representation."""
        return self.N + self.m * (self.N - 1)

    def with_x(self, x: float) -> "ModelParams":
        return ModelParams(self.N, self.mu, x, self.m, "explicit" if self.truncation == "explicit" else self.truncation)


@dataclass(frozen=True)
class PauliTerm:
    """Real coefficient times the Pauli string with symplectic bits ``(xbits, zbits)``.

    A qubit with both bits set carries ``Y`` (the ``i`` from ``ZX = iY`` is
    implicit), so the operator is ``coeff * prod_j i**(x_j z_j) X**x_j Z**z_j``.
    """

    coeff: float
    xbits: tuple[int, ...]
    zbits: tuple[int, ...]
    block: str = ""

    @property
    def n_qubits(self) -> int:
        return len(self.xbits)

    @property
    def hamming_weight(self) -> int:
        # Y counts twice: once in each register
        return sum(self.xbits) + sum(self.zbits)

    @property
    def weight(self) -> int:
        return sum(1 for a, b in zip(self.xbits, self.zbits) if a or b)

    @property
    def label(self) -> str:
        chars = "IZXY"
        return "".join(chars[2 * a + b] for a, b in zip(self.xbits, self.zbits))

    def masks(self) -> tuple[int, int]:
        """Integer bitmasks with qubit 0 as the most significant bit."""
        return _bits_to_int(self.xbits), _bits_to_int(self.zbits)


def _bits_to_int(bits: Sequence[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def _int_to_bits(value: int, n: int) -> tuple[int, ...]:
    return tuple((value >> (n - 1 - j)) & 1 for j in range(n))


def _popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    count = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        count += (a & np.uint64(1)).astype(np.int64)
        a = a >> np.uint64(1)
    return count


def pauli_decompose(matrix: np.ndarray, tol: float = 1e-12) -> dict[tuple[int, int], complex]:
    """Decompose a ``2^n x 2^n`` matrix into Pauli strings.

    Returns ``{(xmask, zmask): coefficient}`` for coefficients with magnitude
    above ``tol``. Uses one Walsh-Hadamard transform per X-pattern, so the cost
    is ``O(4^n n)`` rather than ``O(8^n)``.
    """
    a = np.asarray(matrix)
    dim = a.shape[0]
    n = dim.bit_length() - 1
    if a.shape != (dim, dim) or 2**n != dim:
        raise ValueError("matrix must be square with power-of-two dimension")
    b = np.arange(dim)
    # rows[x, b] = A[b ^ x, b]
    rows = a[b[None, :] ^ b[:, None], b[None, :]]
    had = scipy.linalg.hadamard(dim)
    # sum_b (-1)^{|z & b|} A[b^x, b], indexed [x, z]
    transformed = rows @ had / dim
    ypairs = _popcount(b[:, None] & b[None, :])
    phase = (-1j) ** (ypairs % 4)
    coeffs = transformed * phase
    out = {}
    for xm, zm in zip(*np.nonzero(np.abs(coeffs) > tol)):
        out[(int(xm), int(zm))] = complex(coeffs[xm, zm])
    return out


def _field_block(m: int) -> np.ndarray:
    lam = 2**m
    levels = np.arange(lam) - lam / 2
    return np.diag(levels**2)


def _raising_block(m: int) -> np.ndarray:
    """Truncated raising operator ``sum_{l < Lambda-1} |l+1><l|`` (no wrap-around)."""
    lam = 2**m
    return np.eye(lam, k=-1)


def _interaction_block(m: int) -> np.ndarray:
    """``sigma+ (x) R (x) sigma- + h.c.`` on ``[site n, link n, site n+1]``."""
    up_from_down = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|, sigma+ with bit 0 = up
    op = np.kron(np.kron(up_from_down, _raising_block(m)), up_from_down.T)
    return op + op.T


def _site_position(n: int, m: int) -> int:
    return (n - 1) * (m + 1)


def _embed(local: dict[tuple[int, int], complex], offset: int, width: int, n_total: int,
           scale: float, block: str) -> list[PauliTerm]:
    terms = []
    shift = n_total - offset - width
    for (xm, zm), c in local.items():
        if abs(c.imag) > 1e-12:
            raise ValueError(f"non-Hermitian Pauli coefficient in block {block}")
        coeff = scale * c.real
        if coeff == 0.0:
            continue
        terms.append(
            PauliTerm(coeff, _int_to_bits(xm << shift, n_total), _int_to_bits(zm << shift, n_total), block)
        )
    return terms


def build_pauli_hamiltonian(params: ModelParams) -> list[PauliTerm]:
    """Explicit-field Hamiltonian ``H0 + x V`` as Pauli terms.

    Terms are grouped by block (``spin:n``, ``field:n``, ``int:n``) and are not
    merged across blocks. The identity parts of the on-site mass terms sum to
    ``mu/2 * sum_n (-1)^n``; that constant is emitted once as block
    ``offset`` and vanishes for even ``N``.
    """
    N, m = params.N, params.m
    n_sys = params.n_qubits
    terms: list[PauliTerm] = []
    zero = (0,) * n_sys

    offset = 0.5 * params.mu * sum((-1) ** n for n in range(1, N + 1))
    if offset != 0.0:
        terms.append(PauliTerm(offset, zero, zero, "offset"))

    for n in range(1, N + 1):
        z = [0] * n_sys
        z[_site_position(n, m)] = 1
        terms.append(PauliTerm((-1) ** n * params.mu / 2, zero, tuple(z), f"spin:{n}"))

    field_local = pauli_decompose(_field_block(m))
    int_local = pauli_decompose(_interaction_block(m)) if params.x != 0.0 else {}
    for n in range(1, N):
        link = _site_position(n, m) + 1
        terms += _embed(field_local, link, m, n_sys, 1.0, f"field:{n}")
        if int_local:
            terms += _embed(int_local, _site_position(n, m), m + 2, n_sys, params.x, f"int:{n}")
    return terms


def _spins(states: np.ndarray, N: int) -> np.ndarray:
    """sigma3 values, shape (len(states), N), column j is site j+1."""
    shifts = np.arange(N - 1, -1, -1, dtype=np.int64)
    bits = (states[:, None] >> shifts[None, :]) & 1
    return 1 - 2 * bits


def balanced_basis(N: int) -> np.ndarray:
    """Sorted basis indices with ``L(N) = 0``, the sector containing the Neel state."""
    stag = sum((-1) ** n for n in range(1, N + 1))
    n_up = (N - stag) // 2
    states = np.arange(2**N, dtype=np.int64)
    ups = N - _popcount(states)
    return states[ups == n_up]


@dataclass(frozen=True)
class SparseOperator:
    """Real-symmetric sparse Hamiltonian on either all ``2^N`` states or a sector.

    ``basis`` lists the computational-basis indices spanned (sorted), or is
    ``None`` for the full space.
    """

    matrix: sp.csr_matrix
    N: int
    basis: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def __matmul__(self, v):
        return self.matrix @ v

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def index_of(self, state: int) -> int:
        if self.basis is None:
            return int(state)
        i = int(np.searchsorted(self.basis, state))
        if i >= len(self.basis) or self.basis[i] != state:
            raise KeyError(f"basis state {state} is outside this sector")
        return i


def _gauged_diagonal(states: np.ndarray, params: ModelParams) -> np.ndarray:
    N = params.N
    s3 = _spins(states, N).astype(float)
    stag = np.array([(-1.0) ** n for n in range(1, N + 1)])
    diag = (stag[None, :] * (params.mu / 2) * (1 + s3)).sum(axis=1)
    flux = 0.5 * np.cumsum(s3 + stag[None, :], axis=1)
    diag += (flux[:, : N - 1] ** 2).sum(axis=1)
    return diag


def build_gauged_hamiltonian(params: ModelParams, sector: str = "full",
                             cap: int = GAUGED_CAP) -> SparseOperator:
    """Gauge-eliminated Hamiltonian.

    ``sector="full"`` acts on all ``2^N`` states; ``sector="balanced"`` restricts
    to the ``L(N) = 0`` sector (exact, since the Hamiltonian conserves it).
    """
    N = params.N
    if N > cap:
        raise CapacityError(f"N={N} exceeds the gauged-Hamiltonian cap of {cap}")
    if sector == "full":
        states = np.arange(2**N, dtype=np.int64)
        basis = None
    elif sector == "balanced":
        states = balanced_basis(N)
        basis = states
    else:
        raise ValueError(f"unknown sector {sector!r}")

    dim = len(states)
    rows = [np.arange(dim)]
    cols = [np.arange(dim)]
    vals = [_gauged_diagonal(states, params)]
    if params.x != 0.0:
        for n in range(1, N):
            hi, lo = N - n, N - n - 1
            pair = np.int64((1 << hi) | (1 << lo))
            differ = ((states >> hi) & 1) != ((states >> lo) & 1)
            src = np.nonzero(differ)[0]
            targets = states[src] ^ pair
            dst = targets if basis is None else np.searchsorted(basis, targets)
            rows.append(dst)
            cols.append(src)
            vals.append(np.full(len(src), params.x))
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    mat.sum_duplicates()
    return SparseOperator(mat, N, basis)


def gauss_sector_matrix(terms: Iterable[PauliTerm], params: ModelParams) -> np.ndarray:
    """Explicit-field Hamiltonian projected onto the Gauss-law sector with ``L(0)=L(N)=0``.

    Rows/columns follow :func:`balanced_basis` order, so the result is directly
    comparable with ``build_gauged_hamiltonian(params, "balanced")``. Spin
    configurations whose flux leaves the encodable range are dropped.
    """
    N, m = params.N, params.m
    n_sys = params.n_qubits
    lam = params.link_dim
    spins = balanced_basis(N)
    s3 = _spins(spins, N)
    stag = np.array([(-1) ** n for n in range(1, N + 1)])
    flux = np.cumsum(s3 + stag[None, :], axis=1) // 2
    encoded = []
    kept = []
    for i, state in enumerate(spins):
        levels = flux[i, : N - 1] + lam // 2
        if np.any(levels < 0) or np.any(levels >= lam):
            continue
        word = 0
        for n in range(1, N + 1):
            word = (word << 1) | int((state >> (N - n)) & 1)
            if n < N:
                word = (word << m) | int(levels[n - 1])
        encoded.append(word)
        kept.append(i)
    index = {w: k for k, w in enumerate(encoded)}
    dim = len(encoded)
    out = np.zeros((dim, dim), dtype=complex)
    words = np.array(encoded, dtype=np.int64)
    for term in terms:
        xm, zm = term.masks()
        phase0 = 1j ** (bin(xm & zm).count("1") % 4)
        signs = 1 - 2 * (_popcount(words & np.int64(zm)) % 2)
        for col, w in enumerate(encoded):
            row = index.get(w ^ xm)
            if row is not None:
                out[row, col] += term.coeff * phase0 * signs[col]
    if np.max(np.abs(out.imag), initial=0.0) > 1e-10:
        raise ValueError("projected explicit Hamiltonian is not real")
    if dim != len(spins):
        warnings.warn(f"{len(spins) - dim} Gauss-law states lie outside the field truncation")
    return out.real


def neel_index(N: int) -> int:
    """Basis index of the Neel state ``up, down, up, ...`` (binary ``0101...``)."""
    return sum(1 << (N - n) for n in range(2, N + 1, 2))


def neel_reference(N: int, basis: np.ndarray | None = None) -> np.ndarray:
    """Neel product state as a real unit vector, in the full space or a sector basis."""
    if N < 2:
        raise ValueError("N must be >= 2")
    idx = neel_index(N)
    if basis is None:
        psi = np.zeros(2**N)
        psi[idx] = 1.0
        return psi
    psi = np.zeros(len(basis))
    i = int(np.searchsorted(basis, idx))
    if i >= len(basis) or basis[i] != idx:
        raise KeyError("Neel state is not in the given basis")
    psi[i] = 1.0
    return psi


@dataclass(frozen=True)
class GroundState:
    energy: float
    interaction_energy: float
    free_energy: float
    method: str
    residual: float = 0.0
    vector: np.ndarray | None = field(default=None, repr=False, compare=False)


def exact_ground_energy(params: ModelParams, op: SparseOperator | None = None,
                        dense_cap: int = DENSE_CAP, tol: float = 1e-10,
                        return_vector: bool = False) -> GroundState:
    """Ground energy of the gauged Hamiltonian in the Neel sector.

    Also reports ``E_int = E(x=0) - E_gs``. Dense diagonalisation is used up to
    ``dense_cap`` sites, Lanczos (``eigsh``) beyond that.
    """
    if op is None or op.basis is None:
        op = build_gauged_hamiltonian(params, sector="balanced")
    free = float(np.min(_gauged_diagonal(op.basis, params.with_x(0.0))))
    if params.N <= dense_cap:
        w, v = np.linalg.eigh(op.matrix.toarray())
        energy, vec, method, resid = float(w[0]), v[:, 0], "dense", 0.0
    else:
        v0 = neel_reference(params.N, op.basis)
        w, v = spla.eigsh(op.matrix, k=1, which="SA", tol=tol, v0=v0 + 1e-3)
        energy, vec, method = float(w[0]), v[:, 0], "lanczos"
        resid = float(np.linalg.norm(op.matrix @ vec - energy * vec))
        if resid > 1e-6 * max(1.0, abs(energy)):
            raise RuntimeError(f"eigsh did not converge: residual {resid:.3e}")
    if params.x == 0.0:
        energy = min(energy, free)
    return GroundState(energy, free - energy, free, method, resid, vec if return_vector else None)


def load_model_params(source) -> ModelParams:
    """Build :class:`ModelParams` from a mapping or a flat YAML file.

    Keys: ``n_sites``, ``mu``, ``x``, ``m``, ``truncation``.
    """
    import yaml

    if isinstance(source, dict):
        cfg = dict(source)
    else:
        with open(source) as fh:
            cfg = yaml.safe_load(fh) or {}
    known = {"n_sites", "mu", "x", "m", "truncation"}
    if "n_sites" not in cfg:
        raise KeyError("missing required key 'n_sites'")
    kwargs = {k: cfg[k] for k in known if k in cfg}
    return ModelParams(
        N=int(kwargs["n_sites"]),
        mu=float(kwargs.get("mu", 1.5)),
        x=float(kwargs.get("x", 0.5)),
        m=None if kwargs.get("m") is None else int(kwargs["m"]),
        truncation=str(kwargs.get("truncation", "paper_default")),
    )


def format_pauli_terms(terms: Iterable[PauliTerm]) -> str:
    """One term per line: ``coeff xbits zbits`` with qubit 0 first."""
    lines = []
    for t in terms:
        lines.append(f"{t.coeff!r} {''.join(map(str, t.xbits))} {''.join(map(str, t.zbits))}")
    return "\n".join(lines) + "\n"


def parse_pauli_terms(text: str) -> list[PauliTerm]:
    terms = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        coeff, xs, zs = line.split()
        if len(xs) != len(zs):
            raise ValueError(f"bit strings differ in length: {line!r}")
        terms.append(PauliTerm(float(coeff), tuple(int(c) for c in xs), tuple(int(c) for c in zs)))
    return terms
