"""Island-model hybrid: several algorithms evolve separate populations and
exchange their best solutions over a fully connected topology between epochs."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..objective import Problem, evaluate, point_report
from .algorithms import ALGORITHMS, Algorithm, Population

log = logging.getLogger(__name__)

_MIGRATION_STREAM = 1_000_003


@dataclass(frozen=True)
class AlgorithmSpec:
    """Algorithm kind plus constructor keyword arguments (per-epoch budgets)."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ALGORITHMS:
            raise ValueError(f"unknown algorithm kind {self.kind!r}; choose from {sorted(ALGORITHMS)}")
        for key in ("generations", "iterations", "n_stop"):
            if key in self.params and self.params[key] <= 0:
                raise ValueError(f"{key} must be positive")

    def make(self) -> Algorithm:
        return ALGORITHMS[self.kind](**self.params)


def default_islands() -> tuple:
    """Eight islands: two bee colonies, two DE variants, PSO, GA, basin-hopping
    compass search and simulated annealing.

    Per-epoch budgets are the reference whole-run budgets divided by 10
    (PSO keeps one generation per epoch).
    """
    return (
        AlgorithmSpec("bee_colony", {"generations": 20}),
        AlgorithmSpec("bee_colony", {"generations": 20}),
        AlgorithmSpec("differential_evolution", {"generations": 80}),
        AlgorithmSpec("de_pbest", {"generations": 100}),
        AlgorithmSpec("particle_swarm", {"generations": 1}),
        AlgorithmSpec("genetic", {"generations": 100}),
        AlgorithmSpec("basin_hopping", {"n_stop": 5, "max_evals": 15000}),
        AlgorithmSpec("simulated_annealing", {"iterations": 2000}),
    )


@dataclass(frozen=True)
class HybridConfig:
    islands: tuple = field(default_factory=default_islands)
    n_pop: int = 30
    n_ev: int = 30
    master_seed: int = 0
    workers: int = 1
    # search transmittances as amplitudes sqrt(T); see SearchSpace
    amplitude_coordinates: bool = True

    def __post_init__(self):
        if len(self.islands) < 2:
            raise ValueError("the hybrid needs at least two islands")
        if self.n_pop < 5:
            raise ValueError("n_pop must be at least 5")
        if self.n_ev < 1:
            raise ValueError("n_ev must be positive")


@dataclass
class OptResult:
    best_z: np.ndarray
    best_J: float
    Q_minus_db: float
    Q_plus_db: float
    stability_margin: float
    history: list
    seed: int
    evaluations: int
    all_unstable: bool = False

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "best_z": [float(v) for v in self.best_z],
            "best_J": float(self.best_J),
            "Q_minus_db": float(self.Q_minus_db),
            "Q_plus_db": float(self.Q_plus_db),
            "stability_margin": float(self.stability_margin),
            "evaluations": int(self.evaluations),
            "all_unstable": bool(self.all_unstable),
            "history": [[int(e), int(k), float(f)] for e, k, f in self.history],
        }


class CountingFitness:
    """Vectorized objective wrapper: counts evaluations and maps NaN to the penalty."""

    def __init__(self, fn: Callable[[np.ndarray], np.ndarray], penalty: float):
        self.fn = fn
        self.penalty = penalty
        self.count = 0

    def __call__(self, Z):
        Z = np.atleast_2d(Z)
        self.count += len(Z)
        F = np.asarray(self.fn(Z), dtype=float)
        return np.where(np.isfinite(F), F, self.penalty)


def island_rng(master_seed: int, island: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([master_seed, island, epoch])


def migrate(islands: Sequence[Population], rng=None) -> list:
    """Fully connected exchange of best individuals.

    Every island receives the best of every other island (snapshot taken
    before any exchange); each migrant replaces the receiver's current worst
    iff it is strictly better. A migrant already present in the receiver is
    skipped, so identical islands stay unchanged. Migrants arrive worst-first
    so the global best is never displaced by a later arrival.
    """
    if len(islands) < 2:
        raise ValueError("migration needs at least two islands")
    donors = [p.best() for p in islands]
    order = np.argsort([-d.fitness for d in donors], kind="stable")
    out = []
    for i, pop in enumerate(islands):
        Z, F = pop.Z.copy(), pop.F.copy()
        for j in order:
            if j == i:
                continue
            if np.any(np.all(Z == donors[j].z, axis=1) & (F == donors[j].fitness)):
                continue
            w = int(np.argmax(F))
            if donors[j].fitness < F[w]:
                Z[w], F[w] = donors[j].z, donors[j].fitness
        out.append(Population(Z, F))
    return out


def run_islands(
    fitness_factory: Callable[[], CountingFitness],
    lo,
    hi,
    cfg: HybridConfig,
    on_epoch: Optional[Callable[[int, list], None]] = None,
):
    """Generic island-model driver on an arbitrary vectorized objective.

    Returns (populations, history, evaluations).
    """
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    algos = [spec.make() for spec in cfg.islands]
    fits = [fitness_factory() for _ in cfg.islands]
    pops = [
        Population.random(fits[k], lo, hi, cfg.n_pop, island_rng(cfg.master_seed, k, 0))
        for k in range(len(algos))
    ]
    history = []

    def step(k, epoch):
        return algos[k].evolve(pops[k], fits[k], lo, hi, island_rng(cfg.master_seed, k, epoch))

    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for epoch in range(1, cfg.n_ev + 1):
            if pool is None:
                pops = [step(k, epoch) for k in range(len(algos))]
            else:
                pops = list(pool.map(lambda k: step(k, epoch), range(len(algos))))
            history.extend((epoch, k, float(p.F.min())) for k, p in enumerate(pops))
            if on_epoch is not None:
                on_epoch(epoch, pops)
            if epoch < cfg.n_ev:
                pops = migrate(pops, island_rng(cfg.master_seed, _MIGRATION_STREAM, epoch))
    finally:
        if pool is not None:
            pool.shutdown()
    return pops, history, sum(f.count for f in fits)


class SearchSpace:
    """Coordinates seen by the optimizers.

    With ``amplitude=True`` every mirror transmittance T is searched as
    u = sqrt(T), the amplitude that multiplies the field coupling. Narrow
    optima at small T (weak feedback coupling) then occupy a much larger
    share of the box. Other coordinates pass through unchanged.
    """

    def __init__(self, prob: Problem, amplitude: bool = True):
        self.mask = np.array([amplitude and v.startswith("T") for v in prob.variables])
        self.lower = self.to_search(prob.lower)
        self.upper = self.to_search(prob.upper)

    def to_search(self, z):
        return np.where(self.mask, np.sqrt(np.maximum(z, 0.0)), z)

    def to_problem(self, u):
        return np.where(self.mask, np.square(u), u)


def hybrid_optimize(prob: Problem, cfg: HybridConfig = HybridConfig()) -> OptResult:
    """Minimize the problem's objective with the island hybrid; deterministic in ``cfg.master_seed``."""
    space = SearchSpace(prob, cfg.amplitude_coordinates)
    pops, history, n_evals = run_islands(
        lambda: CountingFitness(lambda U: evaluate(space.to_problem(U), prob), prob.penalty),
        space.lower, space.upper, cfg,
    )
    k = int(np.argmin([p.F.min() for p in pops]))
    best = pops[k].best()
    best = best._replace(z=np.minimum(space.to_problem(best.z), prob.upper))
    report = point_report(best.z, prob)
    # re-verification on emission
    if not np.isclose(report["J"], best.fitness, rtol=1e-12, atol=0.0):
        log.warning("best objective changed on re-evaluation: %r vs %r", report["J"], best.fitness)
    all_unstable = not report["stable"]
    if all_unstable:
        log.warning("no stable network found; returning penalty-valued best")
    return OptResult(
        best_z=best.z,
        best_J=float(report["J"]),
        Q_minus_db=report["Q_minus_db"],
        Q_plus_db=report["Q_plus_db"],
        stability_margin=report["stability_margin"],
        history=history,
        seed=cfg.master_seed,
        evaluations=n_evals,
        all_unstable=all_unstable,
    )
