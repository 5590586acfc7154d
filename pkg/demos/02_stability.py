"""Stability margin across the oscillation threshold, for one OPO and for
a batch of random two-OPO networks."""
import numpy as np

from opo_cqfc.netmodel import SingleOpoParams, TwoOpoParams, build_single_opo, build_two_opo, mhz_to_rad
from opo_cqfc.stability import check_stability

for x in (0.5, 0.99, 1.0, 1.01):
    p = SingleOpoParams(T1=0.1, T2=0.2, L=0.01, omega0=0.0, x=x, theta_xi=0.0, L_tl=0.0)
    rep = check_stability(build_single_opo(p))
    print(f"x = {x:4.2f}  margin = {rep.margin: .3e} rad/s  stable = {rep.stable}")

rng = np.random.default_rng(1)
n = 2000
u = lambda lo, hi: rng.uniform(lo, hi, n)
nets = TwoOpoParams(
    Tp1=u(0, 0.9), Tp2=u(0, 0.9), Lp=np.full(n, 0.01), Tc1=u(0, 0.9), Tc2=u(0, 0.9), Lc=np.full(n, 0.01),
    omega_p=u(-1, 1) * mhz_to_rad(100), omega_c=u(-1, 1) * mhz_to_rad(100),
    x_p=u(0, 0.6), x_c=u(0, 0.6), theta_p=u(0, 2 * np.pi), theta_c=u(0, 2 * np.pi),
    phi1=u(0, 2 * np.pi), phi2=u(0, 2 * np.pi), L1=np.full(n, 0.05), L2=np.full(n, 0.05), L3=np.full(n, 0.05),
)
rep = check_stability(build_two_opo(nets))
print(f"random two-OPO networks with x <= 0.6: {rep.stable.mean():.1%} stable")
