"""Shot noise: thresholded versus partitioned subspace expansion.

For an 8-site chain, each call budget is split across moments in
proportion to their single-shot variance, Gaussian noise is drawn per
seed, and both solvers are run over a grid of Krylov sizes. The best
median over D is reported per budget and fitted as a power law.
"""
import numpy as np

from schwinger_qse.analysis import SweepPoint, best_median_curve, fit
from schwinger_qse.model import ModelParams
from schwinger_qse.pipeline import prepare_problem, run_cell

D_GRID = range(2, 9)
BUDGETS = [1e4, 1e6, 1e8, 1e10]
SEEDS = range(40)

problem = prepare_problem(ModelParams(8, 1.5, 0.5), k_max=4 * max(D_GRID) + 2)
curves = {}
for solver in ("tqse", "pqse"):
    pts = []
    for budget in BUDGETS:
        for D in D_GRID:
            for row in run_cell(problem, solver, D, budget, seed=7, instances=SEEDS):
                err = row["frac_error"]
                pts.append(SweepPoint(8, budget, err if err != "" else np.inf, D=D))
    curves[solver] = best_median_curve(pts)

print(f"{'budget':>8} {'TQSE median':>12} {'PQSE median':>12}")
for t, p in zip(curves["tqse"], curves["pqse"]):
    print(f"{t.control:8.0e} {t.frac_error:12.3e} {p.frac_error:12.3e}")

model = fit(curves["pqse"], "loglog_in_calls")
print(f"PQSE: error ~ calls^{model.chi:.3f} (R2={model.r2:.3f})")
