"""Optimize the average squeezing over 0..100 MHz for one OPO and for the
coupled network, then print both spectra."""
import numpy as np

from _common import config
from opo_cqfc.netmodel import mhz_to_rad
from opo_cqfc.objective import Problem, spectra_at
from opo_cqfc.optim import hybrid_optimize
from opo_cqfc.spectrum import to_db

f = np.array([0.0, 25.0, 50.0, 75.0, 100.0])
for topology in ("single", "two_opo"):
    prob = Problem(topology=topology, kind="band", L_in=0.01, L_out=0.01,
                   omega_B=mhz_to_rad(100.0), h_B=mhz_to_rad(1.0)).with_(x_u=0.4)
    res = hybrid_optimize(prob, config())
    pm, _, _ = spectra_at(res.best_z, prob, mhz_to_rad(f))
    print(f"{topology:8s} band mean Q- = {res.Q_minus_db:.3f} dB; Q-(f) =", np.round(to_db(pm), 3))
