"""Sweep the target frequency and locate the switch between the two
operating regimes of the coupled network."""
import numpy as np

from _common import FULL, config
from opo_cqfc.analysis import detect_regime_switch, sweep
from opo_cqfc.netmodel import mhz_to_rad, rad_to_mhz
from opo_cqfc.objective import Problem

template = Problem(topology="two_opo", L_in=0.01, L_out=0.01).with_(x_u=0.1)
f = np.arange(2.0, 101.0 if FULL else 21.0, 2.0)
table = sweep(template, {"omega_opt": list(mhz_to_rad(f))}, config(),
              progress=lambda r: print(f"{rad_to_mhz(r.point['omega_opt']):5.1f} MHz  Q- {r.Q_minus_db:8.4f}  "
                                       f"Tc1 {r.params['Tc1']:.4f}  Tc2 {r.params['Tc2']:.4f}", flush=True))
star = detect_regime_switch(table)
print("no switch detected" if star is None else f"high-frequency regime starts at {rad_to_mhz(star):.0f} MHz")
