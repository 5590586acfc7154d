"""How fragile is an optimum to phase noise? Compare the phase Hessian's
prediction with direct Monte Carlo sampling."""
import numpy as np

from _common import config
from opo_cqfc.analysis import monte_carlo_phase, phase_hessian
from opo_cqfc.netmodel import mhz_to_rad
from opo_cqfc.objective import Problem
from opo_cqfc.optim import hybrid_optimize

prob = Problem(topology="two_opo", L_in=0.01, L_out=0.1, omega_opt=mhz_to_rad(100.0)).with_(x_u=0.2)
res = hybrid_optimize(prob, config())
print(f"optimum Q- = {res.Q_minus_db:.4f} dB")

rep = phase_hessian(res.best_z, prob)
print("Hessian eigenvalues:", np.array2string(rep.eigenvalues, precision=3))
print("leading eigenvector over", rep.variables, "=", np.round(rep.eigenvectors[:, 0], 3))

for sigma in (0.025, 0.05, 0.1, 0.2):
    mc = monte_carlo_phase(res.best_z, prob, sigma, 10_000, seed=1)
    print(f"sigma {sigma:5.3f}: Monte Carlo {mc.mean_Q_minus_db:8.4f} dB, Hessian {mc.hessian_prediction_db:8.4f} dB")
