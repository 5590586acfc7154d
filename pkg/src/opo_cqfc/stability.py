"""Dynamical stability of a network from the eigenvalues of its drift matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .netmodel import StateSpace


class StabilityError(RuntimeError):
    """The eigensolver failed; callers should treat the model as unstable."""


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    margin: float
    eigenvalues: np.ndarray


# margins within this fraction of the drift-matrix scale count as exactly zero
MARGINAL_RTOL = 1e-9


def _eigen(A):
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise StabilityError("drift matrix contains non-finite entries")
    try:
        eig = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise StabilityError(str(exc)) from exc
    margin = np.max(eig.real, axis=-1)
    scale = np.max(np.abs(A), axis=(-2, -1))
    margin = np.where(np.abs(margin) <= MARGINAL_RTOL * scale, 0.0, margin)
    return eig, margin


def stability_margin(A) -> np.ndarray:
    """Largest real part of the eigenvalues of each (batched) drift matrix, in rad/s."""
    return _eigen(A)[1]


def check_stability(ss: StateSpace) -> StabilityReport:
    """All eigenvalues must have strictly negative real parts.

    Margins lost in eigensolver rounding are snapped to 0 and therefore count
    as unstable, so an optimizer can never sit on the threshold.
    """
    eig, margin = _eigen(ss.A)
    stable = margin < 0.0
    if np.ndim(margin) == 0:
        return StabilityReport(bool(stable), float(margin), eig)
    return StabilityReport(stable, margin, eig)
