"""Network parameters and frequency-domain state-space construction.

Two topologies are supported: a single degenerate OPO with an output
transmission line, and the coherent-feedback network of a plant OPO coupled
to a controller OPO through two lossy, phase-shifted transmission lines.

All rates and detunings are angular frequencies (rad/s). Every parameter
field may be a scalar or a 1-D array; array fields broadcast against each
other and the builders then return a *batched* :class:`StateSpace` whose
matrices carry a leading batch axis. The optimizers rely on this to evaluate
whole populations at once.
"""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
TWO_PI = 2.0 * np.pi


def mhz_to_rad(f_mhz):
    """Convert ω/2π in MHz to angular frequency in rad/s."""
    return np.multiply(f_mhz, 1e6 * TWO_PI)


def rad_to_mhz(omega):
    """Convert angular frequency in rad/s to ω/2π in MHz."""
    return np.divide(omega, 1e6 * TWO_PI)


@dataclass(frozen=True)
class FixedSetup:
    """Physical constants shared by every OPO in a network.

    ``controller_cavity_length`` defaults to the plant's effective length.
    """

    effective_cavity_length: float = 0.087
    pump_wavelength: float = 775e-9
    signal_wavelength: float = 1550e-9
    threshold_power: float = 14.86
    speed_of_light: float = SPEED_OF_LIGHT
    controller_cavity_length: Optional[float] = None

    def __post_init__(self):
        if not self.effective_cavity_length > 0:
            raise ValueError("effective_cavity_length must be positive")
        if self.controller_cavity_length is not None and not self.controller_cavity_length > 0:
            raise ValueError("controller_cavity_length must be positive")
        if not self.threshold_power > 0:
            raise ValueError("threshold_power must be positive")

    @property
    def plant_length(self) -> float:
        return self.effective_cavity_length

    @property
    def controller_length(self) -> float:
        if self.controller_cavity_length is None:
            return self.effective_cavity_length
        return self.controller_cavity_length


def _check_unit_interval(obj, names):
    for name in names:
        v = np.asarray(getattr(obj, name), dtype=float)
        # NaN fails both comparisons
        if not np.all((v >= 0.0) & (v <= 1.0)):
            raise ValueError(f"{name} must lie in [0, 1], got {getattr(obj, name)!r}")


def _check_nonnegative(obj, names):
    for name in names:
        v = np.asarray(getattr(obj, name), dtype=float)
        if not np.all((v >= 0.0) & (v < np.inf)):
            raise ValueError(f"{name} must be non-negative, got {getattr(obj, name)!r}")


@dataclass(frozen=True)
class SingleOpoParams:
    """Single-OPO network: mirror transmittances T1, T2, intracavity loss L,
    detuning omega0 (rad/s), scaled pump amplitude x, pump phase theta_xi and
    output-line loss L_tl."""

    T1: float
    T2: float
    L: float
    omega0: float
    x: float
    theta_xi: float
    L_tl: float = 0.0

    def __post_init__(self):
        _check_unit_interval(self, ("T1", "T2", "L", "L_tl"))
        _check_nonnegative(self, ("x",))


@dataclass(frozen=True)
class TwoOpoParams:
    """Coherent-feedback network of a plant (p) and controller (c) OPO.

    Transmission-line losses L1, L2, L3 are beamsplitter reflectances
    r_i**2; the corresponding transmittivities are sqrt(1 - L_i).
    """

    Tp1: float
    Tp2: float
    Lp: float
    Tc1: float
    Tc2: float
    Lc: float
    omega_p: float
    omega_c: float
    x_p: float
    x_c: float
    theta_p: float
    theta_c: float
    phi1: float
    phi2: float
    L1: float
    L2: float
    L3: float

    def __post_init__(self):
        _check_unit_interval(self, ("Tp1", "Tp2", "Lp", "Tc1", "Tc2", "Lc", "L1", "L2", "L3"))
        _check_nonnegative(self, ("x_p", "x_c"))


@dataclass(frozen=True)
class StateSpace:
    """Doubled-up frequency-domain model of a linear network.

    ``A`` is the 2m x 2m drift matrix, ``K`` the 2n x 2m coupling matrix and
    ``S`` the 2n x 2n scattering matrix, all in Δ-block form. Batched models
    carry extra leading axes on all three arrays.
    """

    n_ports: int
    n_modes: int
    A: np.ndarray
    K: np.ndarray
    S: np.ndarray

    @property
    def batch_shape(self) -> tuple:
        return self.A.shape[:-2]

    def __getitem__(self, idx) -> "StateSpace":
        """Select one (or a slice of) batch member(s)."""
        return StateSpace(self.n_ports, self.n_modes, self.A[idx], self.K[idx], self.S[idx])


def delta_block(a, b):
    """Return Δ(a, b) = [[a, b], [b*, a*]] for (batched) square or rectangular blocks."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    top = np.concatenate([a, b], axis=-1)
    bottom = np.concatenate([b.conj(), a.conj()], axis=-1)
    return np.concatenate([top, bottom], axis=-2)


def leakage_rate(T, l_eff, c=SPEED_OF_LIGHT):
    """Cavity leakage rate c*T/(2*l_eff) in rad/s for a mirror of power transmittance T."""
    T_arr = np.asarray(T, dtype=float)
    if not np.all((T_arr >= 0.0) & (T_arr <= 1.0)):
        raise ValueError(f"transmittance must lie in [0, 1], got {T!r}")
    if not l_eff > 0:
        raise ValueError(f"effective cavity length must be positive, got {l_eff!r}")
    out = c * T_arr / (2.0 * l_eff)
    return out if out.ndim else float(out)


def pump_power(x, P_th):
    """Pump power in watts for scaled pump amplitude x = sqrt(P / P_th)."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise ValueError(f"scaled pump amplitude must be non-negative, got {x!r}")
    if not P_th > 0:
        raise ValueError(f"threshold power must be positive, got {P_th!r}")
    out = x_arr**2 * P_th
    return out if out.ndim else float(out)


def _zeros(shape, rows, cols):
    return np.zeros(shape + (rows, cols), dtype=complex)


def build_single_opo(p: SingleOpoParams, setup: FixedSetup = FixedSetup()) -> StateSpace:
    """State-space model of the single-OPO network (4 ports, 1 mode).

    Port order: output line (port 1), left mirror, loss mirror, line tap.
    """
    T1, T2, L, w0, x, th, Ltl = np.broadcast_arrays(
        *(np.asarray(getattr(p, f.name), dtype=float) for f in fields(p))
    )
    shape = T1.shape
    l, c = setup.plant_length, setup.speed_of_light
    k1, k2, k3 = (leakage_rate(T, l, c) for T in (T1, T2, L))
    gamma = np.asarray(k1 + k2 + k3)
    eta = 0.5 * gamma + 1j * w0
    xi = 0.5 * gamma * x * np.exp(1j * th)
    tB, rB = np.sqrt(1.0 - Ltl), np.sqrt(Ltl)

    A = _zeros(shape, 2, 2)
    A[..., 0, 0] = -eta
    A[..., 0, 1] = xi
    A[..., 1, 0] = np.conj(xi)
    A[..., 1, 1] = -np.conj(eta)

    K = _zeros(shape, 4, 1)
    K[..., 0, 0] = np.sqrt(k2) * tB
    K[..., 1, 0] = np.sqrt(k1)
    K[..., 2, 0] = np.sqrt(k3)
    K[..., 3, 0] = np.sqrt(k2) * rB

    S = _zeros(shape, 4, 4)
    S[..., 0, 1] = tB
    S[..., 0, 3] = -rB
    S[..., 1, 0] = 1.0
    S[..., 2, 2] = 1.0
    S[..., 3, 1] = rB
    S[..., 3, 3] = tB

    return StateSpace(4, 1, A, delta_block(K, np.zeros_like(K)), delta_block(S, np.zeros_like(S)))


@dataclass(frozen=True)
class TwoOpoAux:
    """Derived feedback quantities; recomputed from parameters, never stored as state."""

    kp: tuple
    kc: tuple
    gamma_p: np.ndarray
    gamma_c: np.ndarray
    t: tuple
    r: tuple
    phi: np.ndarray
    nu: np.ndarray
    nu1: np.ndarray
    nu2: np.ndarray
    nu12: np.ndarray
    eta_p: np.ndarray
    eta_c: np.ndarray
    xi_p: np.ndarray
    xi_c: np.ndarray


def two_opo_aux(p: TwoOpoParams, setup: FixedSetup = FixedSetup()) -> TwoOpoAux:
    vals = np.broadcast_arrays(*(np.asarray(getattr(p, f.name), dtype=float) for f in fields(p)))
    (Tp1, Tp2, Lp, Tc1, Tc2, Lc, wp, wc, xp, xc, thp, thc, ph1, ph2, L1, L2, L3) = vals
    c = setup.speed_of_light
    kp = tuple(np.asarray(leakage_rate(T, setup.plant_length, c)) for T in (Tp1, Tp2, Lp))
    kc = tuple(np.asarray(leakage_rate(T, setup.controller_length, c)) for T in (Tc1, Tc2, Lc))
    gp, gc = kp[0] + kp[1] + kp[2], kc[0] + kc[1] + kc[2]
    t = tuple(np.sqrt(1.0 - Li) for Li in (L1, L2, L3))
    r = tuple(np.sqrt(Li) for Li in (L1, L2, L3))
    phi = ph1 + ph2
    nu1 = np.sqrt(kc[1] * kp[0]) * t[0] * np.exp(1j * ph1)
    nu2 = np.sqrt(kc[1] * kp[1]) * t[1] * np.exp(1j * ph2)
    nu = np.sqrt(kp[0] * kp[1]) * t[0] * t[1] * np.exp(1j * phi)
    return TwoOpoAux(
        kp=kp, kc=kc, gamma_p=gp, gamma_c=gc, t=t, r=r, phi=phi,
        nu=nu, nu1=nu1, nu2=nu2, nu12=np.conj(nu1) - nu2,
        eta_p=0.5 * gp + 1j * wp + nu,
        eta_c=0.5 * gc + 1j * wc,
        xi_p=0.5 * gp * xp * np.exp(1j * thp),
        xi_c=0.5 * gc * xc * np.exp(1j * thc),
    )


def build_two_opo(p: TwoOpoParams, setup: FixedSetup = FixedSetup()) -> StateSpace:
    """State-space model of the two-OPO feedback network (7 ports, 2 modes).

    Mode order is (plant, controller). Port 1 is the measured output.
    """
    aux = two_opo_aux(p, setup)
    shape = aux.phi.shape
    kp1, kp2, kp3 = (np.sqrt(k) for k in aux.kp)
    kc1, kc2, kc3 = (np.sqrt(k) for k in aux.kc)
    t1, t2, t3 = aux.t
    r1, r2, r3 = aux.r
    e_phi = np.exp(1j * aux.phi)
    e1 = np.exp(1j * np.asarray(p.phi1, dtype=float))
    e2 = np.exp(1j * np.asarray(p.phi2, dtype=float))

    A = _zeros(shape, 4, 4)
    A[..., 0, 0] = -aux.eta_p
    A[..., 0, 1] = -aux.nu2
    A[..., 1, 0] = -aux.nu1
    A[..., 1, 1] = -aux.eta_c
    A[..., 0, 2] = aux.xi_p
    A[..., 1, 3] = aux.xi_c
    A[..., 2:, 2:] = np.conj(A[..., :2, :2])
    A[..., 2:, :2] = np.conj(A[..., :2, 2:])

    plant_out = kp1 * t1 * t2 * e_phi + kp2
    K = _zeros(shape, 7, 2)
    K[..., 0, 0] = t3 * plant_out
    K[..., 0, 1] = kc2 * t2 * t3 * e2
    K[..., 1, 0] = kp1 * r1
    K[..., 2, 0] = kp1 * t1 * r2 * e1
    K[..., 2, 1] = kc2 * r2
    K[..., 3, 0] = r3 * plant_out
    K[..., 3, 1] = kc2 * t2 * r3 * e2
    K[..., 4, 1] = kc1
    K[..., 5, 0] = kp3
    K[..., 6, 1] = kc3

    S = _zeros(shape, 7, 7)
    S[..., 0, 0] = t1 * t2 * t3 * e_phi
    S[..., 0, 1] = -r1 * t2 * t3 * e_phi
    S[..., 0, 2] = -r2 * t3 * e2
    S[..., 0, 3] = -r3
    S[..., 1, 0] = r1
    S[..., 1, 1] = t1
    S[..., 2, 0] = t1 * r2 * e1
    S[..., 2, 1] = -r1 * r2 * e1
    S[..., 2, 2] = t2
    S[..., 3, 0] = t1 * t2 * r3 * e_phi
    S[..., 3, 1] = -r1 * t2 * r3 * e_phi
    S[..., 3, 2] = -r2 * r3 * e2
    S[..., 3, 3] = t3
    S[..., 4, 4] = 1.0
    S[..., 5, 5] = 1.0
    S[..., 6, 6] = 1.0

    return StateSpace(7, 2, A, delta_block(K, np.zeros_like(K)), delta_block(S, np.zeros_like(S)))


def two_opo_hamiltonian_blocks(p: TwoOpoParams, setup: FixedSetup = FixedSetup()):
    """Return (Omega, W) of the bilinear Hamiltonian for the feedback network.

    Only used for consistency checks: the drift block of ``build_two_opo``
    must equal -K^dag K / 2 - i Omega.
    """
    aux = two_opo_aux(p, setup)
    shape = aux.phi.shape
    Om = _zeros(shape, 2, 2)
    Om[..., 0, 0] = np.asarray(p.omega_p, dtype=float) + aux.nu.imag
    Om[..., 0, 1] = 0.5j * aux.nu12
    Om[..., 1, 0] = -0.5j * np.conj(aux.nu12)
    Om[..., 1, 1] = p.omega_c
    W = _zeros(shape, 2, 2)
    W[..., 0, 0] = aux.xi_p
    W[..., 1, 1] = aux.xi_c
    return Om, W
