"""Post-optimization analytics.

Parameter sweeps over problem settings, detection of the switch between the
low- and high-frequency operating regimes, phase-Hessian robustness,
Monte Carlo phase perturbation and Pearson correlations of optimal phases.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .netmodel import TWO_PI, SingleOpoParams
from .objective import Problem, evaluate, spectra_at
from .optim import HybridConfig, hybrid_optimize
from .spectrum import analytic_single_opo

log = logging.getLogger(__name__)


class HessianError(RuntimeError):
    """Finite-difference stencil hit an unstable network even after shrinking the step."""


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepRow:
    point: dict
    params: dict
    z: np.ndarray
    best_J: float
    Q_minus_db: float
    Q_plus_db: float
    stability_margin: float
    seed: int
    ok: bool = True
    error: Optional[str] = None


@dataclass
class SweepTable:
    axes: dict
    rows: list
    template: Problem

    def __len__(self):
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        """Values of an axis, an optimal parameter, or a result field for every row."""
        out = []
        for r in self.rows:
            if name in r.point:
                out.append(r.point[name])
            elif name in r.params:
                out.append(r.params[name])
            else:
                out.append(getattr(r, name))
        return np.asarray(out, dtype=float)

    def sorted_by(self, axis: str) -> "SweepTable":
        rows = sorted(self.rows, key=lambda r: r.point[axis])
        return SweepTable(dict(self.axes), rows, self.template)

    def merged(self, other: "SweepTable") -> "SweepTable":
        axes = {k: sorted(set(self.axes.get(k, [])) | set(other.axes.get(k, [])))
                for k in set(self.axes) | set(other.axes)}
        return SweepTable(axes, self.rows + other.rows, self.template)


def point_seed(master_seed: int, point: dict) -> int:
    """Seed derived from the master seed and the grid point itself, so a
    point gets the same seed whatever grid it belongs to."""
    key = repr((int(master_seed), sorted((k, float(v)) for k, v in point.items())))
    return int.from_bytes(hashlib.sha256(key.encode()).digest()[:4], "little")


def _run_point(template: Problem, point: dict, cfg: HybridConfig) -> SweepRow:
    seed = point_seed(cfg.master_seed, point)
    try:
        prob = template.with_(**point)
        res = hybrid_optimize(prob, replace(cfg, master_seed=seed))
        return SweepRow(
            point=dict(point),
            params=dict(zip(prob.variables, (float(v) for v in res.best_z))),
            z=res.best_z,
            best_J=res.best_J,
            Q_minus_db=res.Q_minus_db,
            Q_plus_db=res.Q_plus_db,
            stability_margin=res.stability_margin,
            seed=seed,
            ok=not res.all_unstable,
        )
    except Exception as exc:  # noqa: BLE001 - a failed point must not abort the sweep
        log.warning("sweep point %r failed: %s", point, exc)
        nan = float("nan")
        return SweepRow(point=dict(point), params={}, z=np.full(template.dim, nan),
                        best_J=template.penalty, Q_minus_db=nan, Q_plus_db=nan,
                        stability_margin=nan, seed=seed, ok=False, error=str(exc))


def sweep(template: Problem, grid: dict, cfg: HybridConfig = HybridConfig(), workers: int = 1,
          progress: Optional[Callable[[SweepRow], None]] = None) -> SweepTable:
    """Independent hybrid optimization at every point of the Cartesian grid.

    ``grid`` maps axis names (Problem fields or the bound-box limits
    ``T_u``, ``x_u``, ``omega_u``) to value sequences; rows come out in grid
    order with the last axis varying fastest.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("sweep grid must be nonempty")
    names = list(grid)
    points = [dict(zip(names, vals)) for vals in itertools.product(*(grid[n] for n in names))]

    def one(point):
        row = _run_point(template, point, cfg)
        if progress is not None:
            progress(row)
        return row

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one, points))
    else:
        rows = [one(p) for p in points]
    return SweepTable({n: list(grid[n]) for n in names}, rows, template)


def _threshold(row: SweepRow, template: Problem) -> float:
    return float(row.point.get("T_u", template.bounds.T_u))


def detect_regime_switch(table: SweepTable, axis: str = "omega_opt", level: float = 0.9) -> Optional[float]:
    """Smallest ``axis`` value where the optimal T_c2 leaves the upper-bound
    plateau: it falls below ``level``·T_u after having been at least 0.95·T_u
    at a smaller value. Returns None if there is no switch.

    With large line losses the high-frequency regime keeps T_c2 well above
    T_u/2 (around 0.7·T_u), so the trigger sits just under the plateau.
    """
    if not 0.0 < level < 0.95:
        raise ValueError("level must lie in (0, 0.95)")
    varying = [k for k, v in table.axes.items() if k != axis and len(set(v)) > 1]
    if varying:
        raise ValueError(f"regime detection needs a one-axis sweep; {varying} also vary")
    plateau = False
    for row in table.sorted_by(axis).rows:
        if not row.ok:
            continue
        tc2, t_u = row.params["Tc2"], _threshold(row, table.template)
        if tc2 >= 0.95 * t_u:
            plateau = True
        elif plateau and tc2 < level * t_u:
            return float(row.point[axis])
    log.info("no switch detected")
    return None


def refine_regime_switch(template: Problem, coarse: Sequence[float], step: float,
                         cfg: HybridConfig = HybridConfig(), axis: str = "omega_opt", **kw):
    """Coarse sweep, then resample at ``step`` inside the bracket that contains
    the switch. Returns (switch value or None, merged table)."""
    table = sweep(template, {axis: list(coarse)}, cfg, **kw)
    star = detect_regime_switch(table, axis)
    if star is None:
        return None, table
    below = [v for v in coarse if v < star]
    if not below:
        return star, table
    lo = max(below)
    fine = [v for v in np.arange(lo + step, star - 0.5 * step, step)
            if not np.any(np.isclose(v, coarse))]
    if fine:
        table = table.merged(sweep(template, {axis: fine}, cfg, **kw)).sorted_by(axis)
    return detect_regime_switch(table, axis), table


# ---------------------------------------------------------------- Hessian


@dataclass(frozen=True)
class HessianReport:
    H: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, matching eigenvalues (descending)
    step: float
    variables: tuple = field(default=())


def p_minus_objective(prob: Problem) -> Callable[[np.ndarray], np.ndarray]:
    """P^- at omega_opt as a vectorized objective (NaN where unstable)."""
    return lambda Z: spectra_at(Z, prob, prob.omega_opt)[0]


def _stencil(z0, idx, h):
    p = len(idx)
    pts = [z0]
    for a in range(p):
        for s in (1, -1):
            z = z0.copy()
            z[idx[a]] += s * h
            pts.append(z)
    for a, b in itertools.combinations(range(p), 2):
        for sa, sb in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            z = z0.copy()
            z[idx[a]] += sa * h
            z[idx[b]] += sb * h
            pts.append(z)
    return np.array(pts)


def _fd_hessian(f, p, h):
    H = np.empty((p, p))
    f0 = f[0]
    for a in range(p):
        H[a, a] = (f[1 + 2 * a] - 2.0 * f0 + f[2 + 2 * a]) / h**2
    k = 1 + 2 * p
    for a, b in itertools.combinations(range(p), 2):
        pp, pm, mp, mm = f[k:k + 4]
        H[a, b] = H[b, a] = (pp - pm - mp + mm) / (4.0 * h**2)
        k += 4
    return H


def phase_hessian(z_opt, prob: Problem, step: float = 1e-3,
                  objective: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                  wrap: bool = True) -> HessianReport:
    """Central finite-difference Hessian of the objective in the phase coordinates.

    Central differences at ``step`` and ``2*step`` are combined by Richardson
    extrapolation, (4 H(h) - H(2h)) / 3, which removes the O(h²) truncation
    error while keeping the roundoff of step ``h``. The default objective is
    the problem's J; phases of stencil points are wrapped into [0, 2π). An
    unstable stencil point triggers one retry with the step shrunk tenfold,
    then :class:`HessianError`.
    """
    z0 = np.asarray(z_opt, dtype=float).copy()
    idx = prob.phase_indices
    fn = objective if objective is not None else (lambda Z: evaluate(Z, prob))
    h = step
    for attempt in range(2):
        near, far = _stencil(z0, idx, h), _stencil(z0, idx, 2 * h)
        pts = np.vstack([near, far])
        if wrap:
            pts[:, idx] = np.mod(pts[:, idx], TWO_PI)
        f = np.asarray(fn(pts), dtype=float)
        if np.all(np.isfinite(f)) and np.all(f < prob.penalty):
            break
        if attempt == 0:
            log.info("unstable stencil point at step %g; retrying with %g", h, 0.1 * h)
            h *= 0.1
    else:
        raise HessianError(f"stencil unstable even at step {h:g}")
    p = len(idx)
    H = (4.0 * _fd_hessian(f[:len(near)], p, h) - _fd_hessian(f[len(near):], p, 2 * h)) / 3.0
    H = 0.5 * (H + H.T)
    w, V = np.linalg.eigh(H)
    order = np.argsort(w)[::-1]
    return HessianReport(H, w[order], V[:, order], h, tuple(prob.variables[i] for i in idx))


# ---------------------------------------------------------------- Monte Carlo


@dataclass(frozen=True)
class MonteCarloResult:
    mean_Q_minus_db: float
    hessian_prediction_db: float
    P_minus_opt: float
    n_samples: int
    n_excluded: int
    warning: Optional[str] = None

    @property
    def exclusion_rate(self) -> float:
        total = self.n_samples + self.n_excluded
        return self.n_excluded / total if total else 0.0


def monte_carlo_phase(z_opt, prob: Problem, sigma: float, n: int, seed: int = 0,
                      chunk: int = 2000, max_rounds: int = 1000) -> MonteCarloResult:
    """Average P^- over i.i.d. N(0, σ²) perturbations of every phase coordinate.

    Unstable samples are redrawn and counted. The Hessian prediction uses
    the phase Hessian of P^- (not J): 10 log10(P^-(z) + σ² tr(H) / 2).
    """
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if n < 1:
        raise ValueError("n must be at least 1")
    z0 = np.asarray(z_opt, dtype=float)
    pm = p_minus_objective(prob)
    P0 = float(pm(z0[None, :])[0])
    if not np.isfinite(P0):
        raise ValueError("z_opt is not a stable network")
    if sigma == 0:
        q = float(10 * np.log10(P0))
        return MonteCarloResult(q, q, P0, n, 0)
    H = phase_hessian(z0, prob, objective=pm).H
    predicted = float(10 * np.log10(P0 + 0.5 * sigma**2 * np.trace(H)))

    rng = np.random.default_rng(seed)
    idx = prob.phase_indices
    values = []
    have = excluded = rounds = 0
    while have < n:
        rounds += 1
        if rounds > max_rounds:
            raise RuntimeError("too many unstable Monte Carlo samples")
        m = min(chunk, n - have)
        Z = np.repeat(z0[None, :], m, axis=0)
        Z[:, idx] = np.mod(Z[:, idx] + rng.normal(0.0, sigma, (m, len(idx))), TWO_PI)
        P = pm(Z)
        good = np.isfinite(P)
        excluded += int(np.sum(~good))
        values.append(P[good])
        have += int(np.sum(good))
    P = np.concatenate(values)
    warning = None
    if excluded > 0.01 * (n + excluded):
        warning = f"{excluded} unstable samples redrawn ({excluded / (n + excluded):.1%})"
        log.warning(warning)
    return MonteCarloResult(float(10 * np.log10(P.mean())), predicted, P0, len(P), excluded, warning)


# ---------------------------------------------------------------- correlations


def pearson(xs, ys) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pearson needs two 1-D sequences of equal length")
    if len(x) < 2:
        raise ValueError("pearson needs at least two samples")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = np.sqrt(np.dot(dx, dx)), np.sqrt(np.dot(dy, dy))
    if sx == 0 or sy == 0:
        raise ValueError("pearson is undefined for a constant sequence")
    return float(np.clip(np.dot(dx, dy) / (sx * sy), -1.0, 1.0))


PHASE_NAMES = ("theta_p", "theta_c", "phi1", "phi2")


def phase_correlations(table: SweepTable, omega_star: Optional[float] = None,
                       axis: str = "omega_opt") -> dict:
    """r of raw, sine and cosine optimal phases for all six phase pairs.

    With ``omega_star`` only rows at or above it are used. Pairs whose
    correlation is undefined map to NaN.
    """
    rows = [r for r in table.rows if r.ok and (omega_star is None or r.point[axis] >= omega_star)]
    cols = {p: np.array([r.params[p] for r in rows]) for p in PHASE_NAMES}
    out = {}
    for a, b in itertools.combinations(PHASE_NAMES, 2):
        for tag, fn in (("", lambda v: v), ("sin", np.sin), ("cos", np.cos)):
            try:
                r = pearson(fn(cols[a]), fn(cols[b]))
            except ValueError:
                r = float("nan")
            out[(tag, a, b)] = r
    return out


# ---------------------------------------------------------------- oracles


def single_opo_scan_optimum(prob: Problem, n: int = 4001):
    """Grid-scan reference optimum of the single-OPO point problem.

    Fixes T2 = T_u, x = x_u, omega0 = 0 and scans T1 over [0, T_u] with the
    closed-form spectra. Returns (T1, J, Q_minus_db).
    """
    if prob.topology != "single" or prob.kind != "point":
        raise ValueError("scan oracle covers the single-OPO point problem only")
    b = prob.bounds
    T1 = np.linspace(0.0, b.T_u, n)
    p = SingleOpoParams(T1=T1, T2=b.T_u, L=prob.L_in, omega0=0.0, x=b.x_u, theta_xi=0.0, L_tl=prob.L_out)
    pm, pp = analytic_single_opo(p, prob.omega_opt, prob.setup)
    J = pm + prob.g * pm * pp
    k = int(np.argmin(J))
    return float(T1[k]), float(J[k]), float(10 * np.log10(pm[k]))
