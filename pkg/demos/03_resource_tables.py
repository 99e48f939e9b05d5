"""Fault-tolerant cost of one block-encoding step and a hardware runtime estimate.

Prints per-step T, CNOT and rotation counts for both placements of the
coefficient sign phases, then converts a gate count to wall-clock time on
the bundled processor table.
"""
from schwinger_qse.model import link_qubits
from schwinger_qse.resources import PROCESSORS, CostOptions, cost_G, hardware_runtime, step_cost

print(f"{'N':>5} {'m':>2} {'phases':>8} {'T':>10} {'CNOT':>10} {'Rz':>6} {'T+rot':>12} {'qubits':>7}")
for N in (16, 64, 256, 1024):
    for phases in ("G_tilde", "U"):
        opts = CostOptions(phases_in=phases)
        c = step_cost(N, opts)
        m = max(2, link_qubits(N))
        print(f"{N:5d} {m:2d} {phases:>8} {c.t_gates:10d} {c.cnot_gates:10d} {c.rz_gates:6d} "
              f"{c.t_with_rotations:12.3e} {c.qubits:7d}")

g = cost_G(100, 5)
print(f"\nState preparation G at N=100, m=5: {g.triple()}")
for name, proc in PROCESSORS.items():
    rt = hardware_runtime(g, proc)
    print(f"  {name:9s} serial CNOT time {rt['seconds']:.3e} s  ({rt['fraction_t2']:.2e} of T2)")
