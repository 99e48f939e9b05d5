"""Fault-tolerant gate and qubit counts for the LCU block encoding.

Every count here is an upper bound taken from closed-form cost theorems and
evaluated in exact integer arithmetic (Fibonacci numbers and binomials as
Python ints). Binet's formula appears only as a cross-check.

Fibonacci convention: ``F(1) = F(2) = 1``.
"""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

__all__ = [
    "GateCost",
    "CostOptions",
    "WeightCensus",
    "ProcessorSpec",
    "PROCESSORS",
    "fib",
    "fib_binet",
    "closed_form_sums",
    "direct_sums",
    "hamming_census",
    "brute_force_census",
    "cost_G",
    "cost_G_summation_form",
    "cost_U",
    "cost_U_phases_summation_form",
    "cost_projector_rotation",
    "rz_to_t_factor",
    "toffoli_cost",
    "step_cost",
    "swap_step_cost",
    "algorithm_cost",
    "campaign_cost",
    "hardware_runtime",
    "load_processors",
    "cost_sweep_rows",
    "cost_sweep_csv",
]

TOFFOLI_POLICIES = ("all_to_all_multi_ancilla", "all_to_all_one_ancilla", "linear_nearest_neighbour")
PHASE_POLICIES = ("G_tilde", "U")
PHI = (1 + math.sqrt(5)) / 2


@dataclass(frozen=True)
class GateCost:
    """Upper-bound gate tallies. ``t_with_rotations`` folds in Rz synthesis."""

    t_gates: float = 0
    cnot_gates: float = 0
    rz_gates: float = 0
    qubits: int = 0
    rz_to_t: float = 0.0
    upper_bound: bool = True

    @property
    def t_with_rotations(self) -> float:
        return self.t_gates + self.rz_gates * self.rz_to_t

    def __add__(self, other: "GateCost") -> "GateCost":
        return GateCost(
            self.t_gates + other.t_gates,
            self.cnot_gates + other.cnot_gates,
            self.rz_gates + other.rz_gates,
            max(self.qubits, other.qubits),
            max(self.rz_to_t, other.rz_to_t),
        )

    def scaled(self, k: float) -> "GateCost":
        return replace(self, t_gates=k * self.t_gates, cnot_gates=k * self.cnot_gates,
                       rz_gates=k * self.rz_gates)

    def triple(self) -> tuple:
        return (self.t_gates, self.cnot_gates, self.rz_gates)


@dataclass(frozen=True)
class CostOptions:
    toffoli_policy: str = "all_to_all_one_ancilla"
    eps_alpha: float = 1.0
    phases_in: str = "G_tilde"
    truncation: str = "paper_default"
    rz_proof_variant: bool = False

    def __post_init__(self):
        if self.toffoli_policy not in TOFFOLI_POLICIES:
            raise ValueError(f"toffoli_policy must be one of {TOFFOLI_POLICIES}")
        if self.phases_in not in PHASE_POLICIES:
            raise ValueError(f"phases_in must be one of {PHASE_POLICIES}")
        if not 0 < self.eps_alpha <= 1:
            raise ValueError("eps_alpha must lie in (0, 1]")


@lru_cache(maxsize=None)
def fib(n: int) -> int:
    if n < 0:
        raise ValueError("negative Fibonacci index")
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def fib_binet(n: int) -> float:
    return (PHI**n - (-PHI) ** (-n)) / math.sqrt(5)


# ---------------------------------------------------------------- sums

def closed_form_sums(m: int, alpha=1, beta=0) -> dict:
    """Closed forms of the four census sums (exact integers for integer ``alpha, beta``).

    ``sumF``         = sum_{b=2}^{m+2} F(b+1)              = F(m+5) - 3
    ``sum_bF``       = sum_{b=2}^{m+2} b F(b+1)            = (m+2) F(m+5) - F(m+6) + 2
    ``affine_fib``   = sum_{b=2}^{m+2} F(b+1)(alpha b + beta)
    ``affine_binom`` = sum_{b=0}^{m} C(m, b)(alpha b + beta) = alpha m 2^(m-1) + beta 2^m
    """
    if m < 0:
        raise ValueError("m must be >= 0")
    F5, F6 = fib(m + 5), fib(m + 6)
    binom = alpha * m * 2**m // 2 if isinstance(alpha, int) else alpha * m * 2 ** (m - 1)
    return {
        "sumF": F5 - 3,
        "sum_bF": (m + 2) * F5 - F6 + 2,
        "affine_fib": alpha * m * F5 - alpha * F6 + (2 * alpha + beta) * F5 + (2 * alpha - 3 * beta),
        "affine_binom": binom + beta * 2**m,
    }


def closed_form_sums_binet(m: int, alpha=1.0, beta=0.0) -> dict:
    """Same sums with Fibonacci numbers from Binet's formula (floating point)."""
    F5, F6 = fib_binet(m + 5), fib_binet(m + 6)
    return {
        "sumF": F5 - 3,
        "sum_bF": (m + 2) * F5 - F6 + 2,
        "affine_fib": alpha * m * F5 - alpha * F6 + (2 * alpha + beta) * F5 + (2 * alpha - 3 * beta),
        "affine_binom": alpha * m * 2 ** (m - 1) + beta * 2**m,
    }


def direct_sums(m: int, alpha=1, beta=0) -> dict:
    bs = range(2, m + 3)
    return {
        "sumF": sum(fib(b + 1) for b in bs),
        "sum_bF": sum(b * fib(b + 1) for b in bs),
        "affine_fib": sum(fib(b + 1) * (alpha * b + beta) for b in bs),
        "affine_binom": sum(math.comb(m, b) * (alpha * b + beta) for b in range(m + 1)),
    }


# ---------------------------------------------------------------- censuses

@dataclass(frozen=True)
class WeightCensus:
    """Pauli-term counts per Hamming weight ``b`` (Y counted twice).

    ``interaction_by_weight`` counts the same interaction terms by ordinary
    Pauli weight ``w`` (number of non-identity factors).
    """

    field_counts: dict
    spin_count_at_b1: int
    interaction_counts: dict
    interaction_by_weight: dict = field(default_factory=dict)
    is_bound: bool = False


def hamming_census(m: int) -> WeightCensus:
    """Upper bounds: ``C(m, b)`` for the field, ``F(b+1)`` for interactions on ``2 <= b <= 2(m+2)``."""
    if m < 1:
        raise ValueError("m must be >= 1")
    fld = {b: math.comb(m, b) for b in range(m + 1)}
    inter = {b: fib(b + 1) for b in range(2, 2 * (m + 2) + 1)}
    by_w = {w: 2 ** (w - 1) for w in range(2, m + 3)}
    return WeightCensus(fld, 1, inter, by_w, is_bound=True)


def brute_force_census(m: int) -> WeightCensus:
    """Counts obtained by decomposing the field and interaction blocks explicitly."""
    from .model import _field_block, _interaction_block, pauli_decompose

    if m < 1:
        raise ValueError("m must be >= 1")
    if m > 8:
        raise ValueError("brute-force census is capped at m = 8")

    def census(mat):
        by_b, by_w = Counter(), Counter()
        for (xm, zm) in pauli_decompose(mat):
            by_b[bin(xm).count("1") + bin(zm).count("1")] += 1
            by_w[bin(xm | zm).count("1")] += 1
        return dict(by_b), dict(by_w)

    fld, _ = census(_field_block(m))
    inter, inter_w = census(_interaction_block(m))
    return WeightCensus(fld, 1, inter, inter_w)


# ---------------------------------------------------------------- components

def _check_theorem_range(N: int, m: int):
    if N < 2:
        raise ValueError("N must be >= 2")
    if m < 2:
        raise ValueError(f"m={m} is outside the cost theorems' validity (m >= 2)")


def _resolve_m(N: int, options: CostOptions, m: int | None) -> int:
    if m is not None:
        return int(m)
    from .model import link_qubits

    return max(2, link_qubits(N, options.truncation))


def _n_system(N: int, m: int) -> int:
    return N + m * (N - 1)


def cost_G(N: int, m: int) -> GateCost:
    """State preparation of the LCU coefficient register, evaluated from the theorem."""
    _check_theorem_range(N, m)
    F5, F6, P = fib(m + 5), fib(m + 6), 2**m
    t = 56 - 16 * m + 8 * m * F5 - 8 * F6 - 16 * P + 4 * N + 4 * m * P + 8 * N * m
    cnot = 54 - 22 * m - 2 * F5 - 8 * F6 + 8 * m * F5 - 14 * P + 25 * N + 4 * m * P + 11 * N * m
    rz = -48 + 12 * F5 + 12 * P + 6 * N
    return GateCost(t, cnot, rz, 2 * N + 2 * m * (N - 1) + m)


def swap_step_cost(N: int, m: int) -> GateCost:
    """Partial-swap copying of the translation-invariant terms (quoted tallies)."""
    return GateCost(8 * N * m + 4 * N - 16 * m - 8, 11 * N * m + 25 * N - 22 * m - 4, 6 * N - 12)


def _census_sum(m: int, alpha: int, beta: int) -> int:
    binom = sum(math.comb(m, b) * (alpha * b + beta) for b in range(m + 1))
    fibs = sum(fib(b + 1) * (alpha * b + beta) for b in range(2, m + 3))
    return binom + fibs


def cost_G_summation_form(N: int, m: int, include_spin: bool = False) -> GateCost:
    """Independent tally of the G preparation from the census sums.

    Multicontrolled-rotation costs ``alpha b + beta`` per term with
    ``(8, -16)`` T, ``(8, -14)`` CNOT, ``(0, 12)`` Rz, summed over the field
    census ``b = 0..m`` and the interaction census ``b = 2..m+2``, plus the
    swap step. The spin-term gates (``2(N-1)`` CNOT, ``6(N-1)`` Rz) are not
    part of the theorem's total and are only added with ``include_spin``.
    """
    _check_theorem_range(N, m)
    swap = swap_step_cost(N, m)
    t = _census_sum(m, 8, -16) + swap.t_gates
    cnot = _census_sum(m, 8, -14) + swap.cnot_gates
    rz = _census_sum(m, 0, 12) + swap.rz_gates
    if include_spin:
        cnot += 2 * (N - 1)
        rz += 6 * (N - 1)
    return GateCost(t, cnot, rz, 2 * N + 2 * m * (N - 1) + m)


def cost_U(N: int, m: int, options: CostOptions = CostOptions()) -> GateCost:
    """Controlled-Pauli select operator, with sign phases in ``G~`` or in ``U``."""
    if N < 2:
        raise ValueError("N must be >= 2")
    qubits = 3 * _n_system(N, m) + m
    if options.phases_in == "G_tilde":
        return GateCost(6 * N + 6 * m * N - 6 * m, 8 * N + 8 * m * N - 8 * m, 0, qubits)
    _check_theorem_range(N, m)
    F5, F6, P = fib(m + 5), fib(m + 6), 2**m
    t = (N - 1) * (32 + 6 * m - 4 * F6 + 4 * m * F5 - 8 * P + 2 * m * P) + 6 * N
    cnot = (N - 1) * (29 + 8 * m - 4 * F6 + 4 * m * F5 - 7 * P + 2 * m * P) + 8 * N
    return GateCost(t, cnot, 0, qubits)


def cost_U_phases_summation_form(N: int, m: int) -> GateCost:
    """Phases-in-U cost tallied from the census sums with ``(4, -8)`` T and ``(4, -7)`` CNOT."""
    _check_theorem_range(N, m)
    base = cost_U(N, m, CostOptions(phases_in="G_tilde"))
    return GateCost(
        base.t_gates + (N - 1) * _census_sum(m, 4, -8),
        base.cnot_gates + (N - 1) * _census_sum(m, 4, -7),
        0,
        base.qubits,
    )


def toffoli_cost(n: int, register_span: int | None = None,
                 policy: str = "all_to_all_one_ancilla") -> GateCost:
    """Multicontrolled NOT on ``n`` qubits (controls plus target).

    ``register_span`` is the linear extent ``k`` for the nearest-neighbour
    decomposition, which needs ``n > 6`` and ``k > n + 1``.
    """
    if n < 3:
        raise ValueError(f"n={n}: decompositions need n >= 3")
    if policy == "all_to_all_multi_ancilla":
        return GateCost(4 * n - 8, 4 * n - 7, 0)
    if policy == "all_to_all_one_ancilla":
        return GateCost(32 * n - 96, 24 * n - 72, 0)
    if policy == "linear_nearest_neighbour":
        if n <= 6:
            raise ValueError(f"LNN decomposition requires n > 6 (got n={n})")
        if register_span is None or register_span <= n + 1:
            raise ValueError(f"LNN decomposition requires k > n + 1 (got k={register_span}, n={n})")
        return GateCost(16 * n - 32, 8 * register_span + 14 * n - 44, 0)
    raise ValueError(f"unknown Toffoli policy {policy!r}")


def cost_projector_rotation(N: int, m: int, options: CostOptions = CostOptions()) -> GateCost:
    """Projector-controlled phase: two G preparations, two ``N_G``-qubit Toffolis and one Rz.

    With the default one-ancilla policy the extras are the theorem's
    ``128mN + 128N - 128m - 192`` T and ``96mN + 96N - 96m - 144`` CNOT.
    """
    _check_theorem_range(N, m)
    n_g = 2 * N + 2 * m * (N - 1)
    tof = toffoli_cost(n_g, n_g + 2, options.toffoli_policy)
    g = cost_G(N, m)
    return GateCost(
        2 * g.t_gates + 2 * tof.t_gates,
        2 * g.cnot_gates + 2 * tof.cnot_gates,
        2 * g.rz_gates + 1,
        g.qubits + 1,
    )


def rz_to_t_factor(N: int, m: int, options: CostOptions = CostOptions()) -> float:
    """Average T gates per synthesised Rz (base-2 logarithms)."""
    if N < 2 or m < 1:
        raise ValueError("need N >= 2 and m >= 1")
    if options.rz_proof_variant:
        terms = (N - 1) * 2**m + 2 ** (m - 1) * (N - 1) + N
    else:
        terms = (N - 1) * 2**m + N * 2 ** (m + 1) + N
    return 3 * math.log2(terms) + 3 * math.log2(12 * m + 48) + 3 * math.log2(1 / options.eps_alpha)


def step_cost(N: int, options: CostOptions = CostOptions(), m: int | None = None) -> GateCost:
    """One ``Pi_phi U`` call, rotations folded in."""
    m = _resolve_m(N, options, m)
    c = cost_U(N, m, options) + cost_projector_rotation(N, m, options)
    return replace(c, qubits=3 * _n_system(N, m) + m + 1, rz_to_t=rz_to_t_factor(N, m, options))


def algorithm_cost(N: int, k: int, options: CostOptions = CostOptions(), m: int | None = None) -> GateCost:
    """One degree-``k`` moment circuit: ``2 G + k (U + Pi_phi)``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    m = _resolve_m(N, options, m)
    total = cost_G(N, m).scaled(2) + step_cost(N, options, m).scaled(k)
    return replace(total, qubits=3 * _n_system(N, m) + m + 1, rz_to_t=rz_to_t_factor(N, m, options))


def campaign_cost(N: int, budget_calls: float, options: CostOptions = CostOptions(),
                  m: int | None = None, total_shots: float | None = None) -> GateCost:
    """Whole-campaign cost: ``budget_calls`` steps, plus two G preparations per shot if given."""
    if budget_calls < 0:
        raise ValueError("budget_calls must be >= 0")
    m = _resolve_m(N, options, m)
    total = step_cost(N, options, m).scaled(budget_calls)
    if total_shots:
        total = total + cost_G(N, m).scaled(2 * total_shots)
    return replace(total, qubits=3 * _n_system(N, m) + m + 1, rz_to_t=rz_to_t_factor(N, m, options))


# ---------------------------------------------------------------- hardware

@dataclass(frozen=True)
class ProcessorSpec:
    name: str
    t1_seconds: float | None
    t2_seconds: float
    two_qubit_gate_seconds: float

    def __post_init__(self):
        for v in (self.t1_seconds, self.t2_seconds, self.two_qubit_gate_seconds):
            if v is not None and not v > 0:
                raise ValueError(f"{self.name}: times must be positive")


# IonQ Forte T1 is quoted as a 10-100 s range; the lower end is used.
PROCESSORS = {
    "Eagle r3": ProcessorSpec("Eagle r3", 275e-6, 117e-6, 636e-9),
    "Sycamore": ProcessorSpec("Sycamore", 22.9e-6, 15.5e-6, 20e-9),
    "H2-1": ProcessorSpec("H2-1", None, 1410.0, 6.46e-3),
    "Forte": ProcessorSpec("Forte", 10.0, 1.0, 931e-6),
}


def load_processors(path) -> dict[str, ProcessorSpec]:
    """Processor table from CSV with columns ``name, t1, t2, two_qubit_gate_time`` (seconds; empty t1 allowed)."""
    out = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(line for line in fh if not line.startswith("#")):
            t1 = row.get("t1", "").strip()
            out[row["name"]] = ProcessorSpec(
                row["name"], float(t1) if t1 else None, float(row["t2"]), float(row["two_qubit_gate_time"])
            )
    return out


def hardware_runtime(cost: GateCost, proc: ProcessorSpec, parallel: bool = False,
                     total_qubits: int | None = None) -> dict:
    """Wall-clock estimate from the two-qubit gate count.

    Serial: every CNOT in sequence. Parallel: layers of ``total_qubits / 2``
    simultaneous CNOTs.
    """
    if parallel:
        q = total_qubits if total_qubits is not None else cost.qubits
        if not q or q < 2:
            raise ValueError("parallel runtime needs total_qubits >= 2")
        layers = math.ceil(cost.cnot_gates / (q / 2))
        seconds = layers * proc.two_qubit_gate_seconds
    else:
        seconds = cost.cnot_gates * proc.two_qubit_gate_seconds
    out = {"seconds": seconds, "fraction_t2": seconds / proc.t2_seconds}
    if proc.t1_seconds is not None:
        out["fraction_t1"] = seconds / proc.t1_seconds
    return out


# ---------------------------------------------------------------- sweeps

SWEEP_COLUMNS = ["N", "m", "construction", "policy", "phases_in", "t", "cnot", "rz", "t_with_rot", "qubits", "error"]


def cost_sweep_rows(Ns, options_list=None, m_rule: str = "paper_default") -> list[dict]:
    """Per-step costs over an ``N`` grid for each option set; policy violations recorded per row."""
    if options_list is None:
        options_list = [CostOptions(toffoli_policy=p, phases_in=ph, truncation=m_rule)
                        for ph in PHASE_POLICIES for p in TOFFOLI_POLICIES]
    rows = []
    for N in Ns:
        for opt in options_list:
            m = _resolve_m(N, opt, None)
            parts = {
                "G": lambda: cost_G(N, m),
                "U": lambda: cost_U(N, m, opt),
                "Pi": lambda: cost_projector_rotation(N, m, opt),
                "step": lambda: step_cost(N, opt, m),
            }
            for name, fn in parts.items():
                row = {"N": N, "m": m, "construction": name, "policy": opt.toffoli_policy,
                       "phases_in": opt.phases_in}
                try:
                    c = fn()
                    c = replace(c, rz_to_t=rz_to_t_factor(N, m, opt))
                    row.update(t=c.t_gates, cnot=c.cnot_gates, rz=c.rz_gates,
                               t_with_rot=c.t_with_rotations, qubits=c.qubits, error="")
                except ValueError as exc:
                    row.update(t="", cnot="", rz="", t_with_rot="", qubits="", error=str(exc))
                rows.append(row)
    return rows


def cost_sweep_csv(rows: list[dict], header: str = "") -> str:
    buf = io.StringIO()
    if header:
        buf.write(header)
    writer = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()
