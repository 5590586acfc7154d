"""Correlations between optimal phases across a frequency sweep, using
only the high-frequency regime."""
import numpy as np

from _common import FULL, config
from opo_cqfc.analysis import detect_regime_switch, phase_correlations, sweep
from opo_cqfc.netmodel import mhz_to_rad, rad_to_mhz
from opo_cqfc.objective import Problem

template = Problem(topology="two_opo", L_in=0.01, L_out=0.1).with_(x_u=0.3)
f = np.arange(2.0, 101.0, 2.0 if FULL else 8.0)
table = sweep(template, {"omega_opt": list(mhz_to_rad(f))}, config())
star = detect_regime_switch(table)
print("switch at", None if star is None else f"{rad_to_mhz(star):.0f} MHz")
for (tag, a, b), r in sorted(phase_correlations(table, omega_star=star).items()):
    if {a, b} == {"phi1", "phi2"}:
        print(f"r({tag or 'raw'} {a}, {tag or 'raw'} {b}) = {r:.4f}")
