"""Transfer functions, output-field noise moments and squeezing spectra.

Everything here broadcasts: a batched :class:`~opo_cqfc.netmodel.StateSpace`
combined with an array of sideband frequencies yields arrays of spectra.
Frequencies are angular (rad/s).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import FixedSetup, SingleOpoParams, StateSpace, leakage_rate

DEFAULT_PORT = 0
_TINY_M = 1e-15


@dataclass(frozen=True)
class TransferBlocks:
    """Upper blocks Z^-(ω) and Z^+(ω) of the doubled-up transfer matrix."""

    Zminus: np.ndarray
    Zplus: np.ndarray
    omega: float


@dataclass(frozen=True)
class SpectrumPoint:
    """Noise moments and extremal quadrature spectra at one sideband frequency."""

    omega: float
    N_pos: float
    N_neg: float
    M: complex
    P_minus: float
    P_plus: float
    theta_opt: float


def _shifted_drift(ss: StateSpace, omega):
    omega = np.asarray(omega, dtype=float)
    dim = ss.A.shape[-1]
    return ss.A + 1j * omega[..., None, None] * np.eye(dim)


def transfer_matrix(ss: StateSpace, omega) -> TransferBlocks:
    """Full Z^-(ω), Z^+(ω) from Z(ω) = [I + K (A + iω)^-1 K^dag] S.

    Raises ``numpy.linalg.LinAlgError`` when A + iω is singular (a marginally
    stable model).
    """
    n = ss.n_ports
    shifted = _shifted_drift(ss, omega)
    Kd = np.swapaxes(ss.K.conj(), -1, -2)
    shape = np.broadcast_shapes(shifted.shape[:-2], Kd.shape[:-2])
    R = np.linalg.solve(
        np.broadcast_to(shifted, shape + shifted.shape[-2:]),
        np.broadcast_to(Kd, shape + Kd.shape[-2:]),
    )
    Z = (np.eye(2 * n) + ss.K @ R) @ ss.S
    return TransferBlocks(Z[..., :n, :n], Z[..., :n, n:], omega)


def port_rows(ss: StateSpace, omega, port: int = DEFAULT_PORT):
    """Rows ``port`` of Z^-(ω) and Z^+(ω) only.

    Solves (A + iω)^T u = K[port]^T for the single needed row instead of
    forming the full transfer matrix.
    """
    n = ss.n_ports
    if not 0 <= port < n:
        raise IndexError(f"port {port} out of range for a {n}-port network")
    shifted = _shifted_drift(ss, omega)
    k_row = ss.K[..., port, :]
    shape = np.broadcast_shapes(shifted.shape[:-2], k_row.shape[:-1])
    u = np.linalg.solve(
        np.broadcast_to(np.swapaxes(shifted, -1, -2), shape + shifted.shape[-2:]),
        np.broadcast_to(k_row, shape + k_row.shape[-1:])[..., None],
    )[..., 0]
    Kd = np.swapaxes(ss.K.conj(), -1, -2)
    inner = np.einsum("...i,...ij->...j", u, Kd)
    inner[..., port] += 1.0
    row = np.einsum("...i,...ij->...j", inner, ss.S)
    return row[..., :n], row[..., n:]


def noise_moments(ss: StateSpace, omega, port: int = DEFAULT_PORT):
    """Return (N(ω), N(-ω), M(ω)) for output ``port`` with vacuum inputs."""
    omega = np.asarray(omega, dtype=float)
    zm_pos, zp_pos = port_rows(ss, omega, port)
    _, zp_neg = port_rows(ss, -omega, port)
    N_pos = np.sum(np.abs(zp_pos) ** 2, axis=-1)
    N_neg = np.sum(np.abs(zp_neg) ** 2, axis=-1)
    M = np.sum(zm_pos * zp_neg, axis=-1)
    return N_pos, N_neg, M


def quadrature_spectrum(ss: StateSpace, omega, theta, port: int = DEFAULT_PORT):
    """Squeezing spectrum P(ω, θ) of the homodyne quadrature at phase θ."""
    N_pos, N_neg, M = noise_moments(ss, omega, port)
    return 1.0 + N_pos + N_neg + 2.0 * np.real(M * np.exp(-2j * np.asarray(theta)))


def _theta_opt(M):
    theta = np.mod((np.angle(M) - np.pi) / 2.0, np.pi)
    # θ and θ - π name the same quadrature; fold values just below π onto 0
    theta = np.where(np.pi - theta < 1e-9, 0.0, theta)
    return np.where(np.abs(M) < _TINY_M, 0.0, theta)


def extremal_spectra(ss: StateSpace, omega, port: int = DEFAULT_PORT) -> SpectrumPoint:
    """Squeezed (P^-) and anti-squeezed (P^+) spectra plus the optimal homodyne phase."""
    N_pos, N_neg, M = noise_moments(ss, omega, port)
    base = 1.0 + N_pos + N_neg
    absM = 2.0 * np.abs(M)
    return SpectrumPoint(
        omega=omega,
        N_pos=N_pos,
        N_neg=N_neg,
        M=M,
        P_minus=base - absM,
        P_plus=base + absM,
        theta_opt=_theta_opt(M),
    )


def squeezing_extrema(ss: StateSpace, omega, port: int = DEFAULT_PORT):
    """Just (P^-, P^+); the hot path used by the objectives."""
    N_pos, N_neg, M = noise_moments(ss, omega, port)
    base = 1.0 + N_pos + N_neg
    absM = 2.0 * np.abs(M)
    return base - absM, base + absM


def to_db(P):
    """10*log10(P); P must be positive."""
    P_arr = np.asarray(P, dtype=float)
    if np.any(~(P_arr > 0)):
        raise ValueError(f"power spectral density must be positive, got {P!r}")
    out = 10.0 * np.log10(P_arr)
    return out if out.ndim else float(out)


def _single_opo_rates(p: SingleOpoParams, setup: FixedSetup):
    l, c = setup.plant_length, setup.speed_of_light
    k1, k2, k3 = (np.asarray(leakage_rate(T, l, c)) for T in (p.T1, p.T2, p.L))
    gamma = k1 + k2 + k3
    TB = 1.0 - np.asarray(p.L_tl, dtype=float)
    xi_abs = 0.5 * gamma * np.asarray(p.x, dtype=float)
    return k1, k2, k3, gamma, TB, xi_abs


def analytic_single_opo(p: SingleOpoParams, omega, setup: FixedSetup = FixedSetup()):
    """Closed-form (P^-, P^+) of the single-OPO network at any detuning.

    P^± = 1 ± 2 κ2 T_B |ξ| (sqrt(μ² + γ² ω0²) ± γ|ξ|) / |λ(ω)|², with
    μ = γ²/4 + |ξ|² + ω² - ω0² and λ(ω) = (η* - iω)(η - iω) - |ξ|².
    """
    omega = np.asarray(omega, dtype=float)
    _, k2, _, gamma, TB, xi_abs = _single_opo_rates(p, setup)
    w0 = np.asarray(p.omega0, dtype=float)
    eta = 0.5 * gamma + 1j * w0
    lam = (np.conj(eta) - 1j * omega) * (eta - 1j * omega) - xi_abs**2
    mu = 0.25 * gamma**2 + xi_abs**2 + omega**2 - w0**2
    root = np.sqrt(mu**2 + gamma**2 * w0**2)
    pref = 2.0 * k2 * TB * xi_abs / np.abs(lam) ** 2
    return 1.0 - pref * (root - gamma * xi_abs), 1.0 + pref * (root + gamma * xi_abs)


def analytic_single_opo_moments(p: SingleOpoParams, omega, setup: FixedSetup = FixedSetup()):
    """Closed-form (N(ω), M(ω)) at output port 1 of the single-OPO network."""
    omega = np.asarray(omega, dtype=float)
    _, k2, _, gamma, TB, xi_abs = _single_opo_rates(p, setup)
    eta = 0.5 * gamma + 1j * np.asarray(p.omega0, dtype=float)
    xi = xi_abs * np.exp(1j * np.asarray(p.theta_xi, dtype=float))
    lam = (np.conj(eta) - 1j * omega) * (eta - 1j * omega) - xi_abs**2
    lam2 = np.abs(lam) ** 2
    N = gamma * k2 * TB * xi_abs**2 / lam2
    M = (gamma * (np.conj(eta) - 1j * omega) - lam) / lam2 * k2 * TB * xi
    return N, M


def resonant_single_opo(escape_efficiency, T_B, x, Omega):
    """The familiar zero-detuning Lorentzian spectra in scaled units.

    ``Omega`` is 2ω/γ. Returns (P^-, P^+).
    """
    rho_tb = np.asarray(escape_efficiency) * np.asarray(T_B)
    x = np.asarray(x, dtype=float)
    Omega = np.asarray(Omega, dtype=float)
    P_minus = 1.0 - rho_tb * 4.0 * x / ((1.0 + x) ** 2 + Omega**2)
    P_plus = 1.0 + rho_tb * 4.0 * x / ((1.0 - x) ** 2 + Omega**2)
    return P_minus, P_plus
