"""Decision-vector encoding and the squeezing objectives.

A decision vector ``z`` holds only the free parameters; losses are fixed per
problem. Layouts::

    single : [T1, T2, omega0, x, theta_xi]
    two_opo: [Tp1, Tp2, omega_p, x_p, theta_p, Tc1, Tc2, omega_c, x_c, theta_c, phi1, phi2]

All evaluators accept either one vector of shape ``(d,)`` or a population of
shape ``(N, d)``; populations are evaluated in a single vectorized pass.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .netmodel import (
    TWO_PI,
    FixedSetup,
    SingleOpoParams,
    StateSpace,
    TwoOpoParams,
    build_single_opo,
    build_two_opo,
    mhz_to_rad,
)
from .spectrum import squeezing_extrema
from .stability import StabilityError, stability_margin

log = logging.getLogger(__name__)

SINGLE_VARS = ("T1", "T2", "omega0", "x", "theta_xi")
TWO_OPO_VARS = (
    "Tp1", "Tp2", "omega_p", "x_p", "theta_p",
    "Tc1", "Tc2", "omega_c", "x_c", "theta_c", "phi1", "phi2",
)
PHASE_VARS = {"single": ("theta_xi",), "two_opo": ("theta_p", "theta_c", "phi1", "phi2")}
_BOUND_SLACK = 1e-12


@dataclass(frozen=True)
class BoundBox:
    """Upper limits on detuning (rad/s), mirror transmittance and pump amplitude.

    Phases always range over [0, 2π] and detunings over [-omega_u, omega_u].
    """

    omega_u: float = mhz_to_rad(100.0)
    T_u: float = 0.9
    x_u: float = 0.3

    def __post_init__(self):
        if self.omega_u < 0 or self.T_u < 0 or self.x_u < 0:
            raise ValueError("bounds must be non-negative")
        if self.T_u > 1:
            raise ValueError("T_u cannot exceed 1")


@dataclass(frozen=True)
class Problem:
    """One squeezing-optimization task.

    ``L_in`` is the intracavity loss (L for the single OPO, Lp for the plant,
    and Lc unless ``L_c`` is given). ``L_out`` is the transmission-line loss
    (L_tl for the single OPO; L1 = L2 = L3 unless overridden individually).
    ``kind`` is ``"point"`` (minimize J at omega_opt) or ``"band"`` (minimize
    the mean of P^- over [0, omega_B] sampled every h_B).
    """

    topology: str = "two_opo"
    bounds: BoundBox = field(default_factory=BoundBox)
    L_in: float = 0.01
    L_out: float = 0.05
    L_c: Optional[float] = None
    L1: Optional[float] = None
    L2: Optional[float] = None
    L3: Optional[float] = None
    kind: str = "point"
    omega_opt: float = 0.0
    omega_B: float = mhz_to_rad(100.0)
    h_B: float = mhz_to_rad(1.0)
    g: float = 0.001
    penalty: float = 1e6
    port: int = 0
    setup: FixedSetup = field(default_factory=FixedSetup)

    def __post_init__(self):
        if self.topology not in PHASE_VARS:
            raise ValueError(f"unknown topology {self.topology!r}")
        if self.kind not in ("point", "band"):
            raise ValueError(f"unknown objective kind {self.kind!r}")
        if self.g < 0:
            raise ValueError("weight g must be non-negative")
        if self.penalty <= 10:
            raise ValueError("penalty must dominate every feasible objective value")
        for name in ("L_in", "L_out", "L_c", "L1", "L2", "L3"):
            v = getattr(self, name)
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.kind == "band":
            if self.h_B <= 0 or self.omega_B < 0:
                raise ValueError("band objective needs h_B > 0 and omega_B >= 0")
            n = self.omega_B / self.h_B
            if abs(n - round(n)) > 1e-9 * max(1.0, n):
                raise ValueError("omega_B must be a multiple of h_B")

    @property
    def variables(self) -> tuple:
        return SINGLE_VARS if self.topology == "single" else TWO_OPO_VARS

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def phase_indices(self) -> list:
        return [self.variables.index(v) for v in PHASE_VARS[self.topology]]

    @property
    def lower(self) -> np.ndarray:
        return np.array([self._bound(v)[0] for v in self.variables])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self._bound(v)[1] for v in self.variables])

    def _bound(self, name):
        b = self.bounds
        if name.startswith(("theta", "phi")):
            return 0.0, TWO_PI
        if name.startswith("omega"):
            return -b.omega_u, b.omega_u
        if name.startswith("T"):
            return 0.0, b.T_u
        return 0.0, b.x_u

    @property
    def band_grid(self) -> np.ndarray:
        n_b = int(round(self.omega_B / self.h_B))
        return np.arange(n_b + 1) * self.h_B

    def fixed_losses(self) -> dict:
        if self.topology == "single":
            return {"L": self.L_in, "L_tl": self.L_out}
        pick = lambda v: self.L_out if v is None else v
        return {
            "Lp": self.L_in,
            "Lc": self.L_in if self.L_c is None else self.L_c,
            "L1": pick(self.L1),
            "L2": pick(self.L2),
            "L3": pick(self.L3),
        }

    def with_(self, **changes) -> "Problem":
        """Copy with fields replaced; ``T_u``, ``x_u``, ``omega_u`` go to the bound box."""
        box = {k: changes.pop(k) for k in ("T_u", "x_u", "omega_u") if k in changes}
        if box:
            changes["bounds"] = replace(changes.get("bounds", self.bounds), **box)
        return replace(self, **changes)


def _as_population(z, dim):
    z = np.asarray(z, dtype=float)
    if z.shape[-1] != dim or z.ndim not in (1, 2):
        raise ValueError(f"decision vector must have trailing length {dim}, got shape {z.shape}")
    return z


def in_bounds(z, prob: Problem) -> np.ndarray:
    z = _as_population(z, prob.dim)
    lo, hi = prob.lower - _BOUND_SLACK, prob.upper + _BOUND_SLACK
    return np.all((z >= lo) & (z <= hi), axis=-1)


def decode(z, prob: Problem):
    """Map a decision vector (or population) to network parameters."""
    z = _as_population(z, prob.dim)
    if not np.all(in_bounds(z, prob)):
        raise ValueError("decision vector outside the bound box")
    z = np.clip(z, prob.lower, prob.upper)
    cols = {name: z[..., i] for i, name in enumerate(prob.variables)}
    if z.ndim == 1:
        cols = {k: float(v) for k, v in cols.items()}
    cols.update(prob.fixed_losses())
    if prob.topology == "single":
        return SingleOpoParams(**cols)
    return TwoOpoParams(**cols)


def encode(params, prob: Problem) -> np.ndarray:
    """Inverse of :func:`decode` on the bound box."""
    return np.stack([np.asarray(getattr(params, v), dtype=float) for v in prob.variables], axis=-1)


def build(z, prob: Problem) -> StateSpace:
    params = decode(z, prob)
    if prob.topology == "single":
        return build_single_opo(params, prob.setup)
    return build_two_opo(params, prob.setup)


def _expand(ss: StateSpace) -> StateSpace:
    return StateSpace(ss.n_ports, ss.n_modes, ss.A[..., None, :, :], ss.K[..., None, :, :], ss.S[..., None, :, :])


def spectra_at(z, prob: Problem, omega):
    """(P^-, P^+, margin) for each member of ``z``; spectra are NaN where unstable.

    With a population of N vectors and ``omega`` of shape (F,), the spectra
    have shape (N, F).
    """
    z2 = np.atleast_2d(_as_population(z, prob.dim))
    ss = build(z2, prob)
    omega = np.asarray(omega, dtype=float)
    out_shape = (z2.shape[0],) + omega.shape
    P_minus = np.full(out_shape, np.nan)
    P_plus = np.full(out_shape, np.nan)
    try:
        margin = stability_margin(ss.A)
    except StabilityError as exc:
        log.warning("stability check failed (%s); treating batch as unstable", exc)
        margin = np.full(z2.shape[0], np.inf)
    ok = margin < 0.0
    if np.any(ok):
        sub = ss[ok]
        if omega.ndim:
            sub = _expand(sub)
        try:
            pm, pp = squeezing_extrema(sub, omega, prob.port)
        except np.linalg.LinAlgError as exc:
            log.warning("transfer-matrix solve failed (%s); falling back per member", exc)
            pm, pp = _per_member(sub, omega, prob.port)
        P_minus[ok], P_plus[ok] = pm, pp
    if np.ndim(z) == 1:
        return P_minus[0], P_plus[0], margin[0]
    return P_minus, P_plus, margin


def _per_member(ss, omega, port):
    n = ss.batch_shape[0]
    pm = np.full((n,) + np.shape(omega), np.nan)
    pp = np.full_like(pm, np.nan)
    for i in range(n):
        try:
            pm[i], pp[i] = squeezing_extrema(ss[i], omega, port)
        except np.linalg.LinAlgError:
            pass
    return pm, pp


def _finalize(J, prob):
    J = np.where(np.isfinite(J), J, prob.penalty)
    return J


def eval_point(z, prob: Problem):
    """J = P^- + g P^- P^+ at omega_opt, or the penalty for unstable networks."""
    P_minus, P_plus, _ = spectra_at(z, prob, prob.omega_opt)
    J = _finalize(P_minus + prob.g * P_minus * P_plus, prob)
    return float(J) if np.ndim(z) == 1 else J


def eval_band(z, prob: Problem):
    """Mean of P^- over the inclusive band grid k*h_B, k = 0..N_B."""
    P_minus, _, _ = spectra_at(z, prob, prob.band_grid)
    J = _finalize(np.mean(P_minus, axis=-1), prob)
    return float(J) if np.ndim(z) == 1 else J


def evaluate(z, prob: Problem):
    """Objective dispatch on ``prob.kind``."""
    return eval_point(z, prob) if prob.kind == "point" else eval_band(z, prob)


def point_report(z, prob: Problem) -> dict:
    """Squeezing figures of merit for one decision vector.

    For band problems the reported P^± are band means (so Q^- is the
    logarithm of the mean, not the mean of the logarithm).
    """
    z = _as_population(z, prob.dim)
    omega = prob.omega_opt if prob.kind == "point" else prob.band_grid
    P_minus, P_plus, margin = spectra_at(z, prob, omega)
    if prob.kind == "band":
        P_minus, P_plus = np.mean(P_minus), np.mean(P_plus)
    stable = bool(margin < 0.0)
    return {
        "J": evaluate(z, prob),
        "P_minus": float(P_minus),
        "P_plus": float(P_plus),
        "Q_minus_db": float(10 * np.log10(P_minus)) if stable else float("nan"),
        "Q_plus_db": float(10 * np.log10(P_plus)) if stable else float("nan"),
        "stability_margin": float(margin),
        "stable": stable,
    }
