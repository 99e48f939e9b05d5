"""Noiseless Krylov convergence for a 12-site chain.

Builds the Neel-sector Hamiltonian, computes moments once, then solves the
Hankel eigenproblem for growing Krylov dimension D. The fractional error
drops roughly one decade per extra Krylov vector; a log-linear fit turns
that into the D needed for a target accuracy.
"""
from schwinger_qse.analysis import SweepPoint, extrapolate_requirement, fit
from schwinger_qse.model import ModelParams
from schwinger_qse.pipeline import prepare_problem
from schwinger_qse.solvers import qse

params = ModelParams(12, mu=1.5, x=0.5)
problem = prepare_problem(params, k_max=17)
print(f"N={params.N}: sector dimension {problem.sector_dim}, E_gs={problem.e_gs:.6f}, E_int={problem.e_int:.6f}")

points = []
for D in range(2, 10):
    err = problem.frac_error(qse(problem.moments, D).energy)
    points.append(SweepPoint(params.N, D, err))
    print(f"  D={D:2d}  dE/E_int = {err:.3e}")

model = fit(points[:-1], "loglinear_in_D")
req = extrapolate_requirement(model, 1e-4)
print(f"log10 error ~ {model.chi:.3f} D + {model.lam:.3f} (R2={model.r2:.3f})")
print(f"D for 1e-4: {req['value']:.2f} +/- {req['se']:.2f}")
