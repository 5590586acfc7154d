"""Population-based global optimizers with a common ``evolve`` interface.

Every algorithm object is stateful across calls (adaptive rates, velocities,
trial counters) so that an island can call ``evolve`` once per epoch and
continue where it left off. ``evolve`` must return a population of the same
size whose best fitness is no worse than the input's.

``fitness`` is always vectorized: it maps an (N, d) array of in-box points to
an (N,) array of finite objective values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

Fitness = Callable[[np.ndarray], np.ndarray]


class Individual(NamedTuple):
    z: np.ndarray
    fitness: float


@dataclass(frozen=True)
class Population:
    Z: np.ndarray
    F: np.ndarray

    def __len__(self):
        return len(self.F)

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.F))

    @property
    def worst_index(self) -> int:
        return int(np.argmax(self.F))

    def best(self) -> Individual:
        i = self.best_index
        return Individual(self.Z[i].copy(), float(self.F[i]))

    def copy(self) -> "Population":
        return Population(self.Z.copy(), self.F.copy())

    @classmethod
    def random(cls, fitness: Fitness, lo, hi, size: int, rng) -> "Population":
        Z = lo + rng.random((size, len(lo))) * (hi - lo)
        return cls(Z, fitness(Z))


def _greedy(pop: Population, Z_new, F_new) -> Population:
    better = F_new < pop.F
    Z = np.where(better[:, None], Z_new, pop.Z)
    F = np.where(better, F_new, pop.F)
    return Population(Z, F)


def _distinct_indices(rng, n, k):
    """For each row i pick k distinct indices from range(n), all different from i."""
    keys = rng.random((n, n))
    keys[np.arange(n), np.arange(n)] = np.inf
    return np.argsort(keys, axis=1)[:, :k]


class Algorithm:
    """Base class; subclasses implement ``_run``."""

    name = "base"

    def evolve(self, pop: Population, fitness: Fitness, lo, hi, rng) -> Population:
        if len(pop) == 0:
            return pop
        out = self._run(pop.copy(), fitness, np.asarray(lo, float), np.asarray(hi, float), rng)
        # elitism is part of the contract, enforce it regardless of the variant
        if out.F.min() > pop.F.min():
            i, j = out.worst_index, pop.best_index
            Z, F = out.Z.copy(), out.F.copy()
            Z[i], F[i] = pop.Z[j], pop.F[j]
            out = Population(Z, F)
        return out

    def _run(self, pop, fitness, lo, hi, rng) -> Population:
        raise NotImplementedError

    def __repr__(self):
        params = ", ".join(f"{k}={v}" for k, v in vars(self).items() if not k.startswith("_"))
        return f"{type(self).__name__}({params})"


class DifferentialEvolution(Algorithm):
    """DE/rand/1/bin with self-adaptive per-individual F and CR.

    Each generation every individual resets its F to U(0.1, 1) with
    probability tau_F and its CR to U(0, 1) with probability tau_CR before
    producing a trial vector; successful parameters survive with the trial.
    """

    name = "differential_evolution"

    def __init__(self, generations: int = 27, tau_F: float = 0.1, tau_CR: float = 0.1):
        self.generations = generations
        self.tau_F = tau_F
        self.tau_CR = tau_CR
        self._F = None
        self._CR = None

    def _run(self, pop, fitness, lo, hi, rng):
        n, d = pop.Z.shape
        if self._F is None or len(self._F) != n:
            self._F = np.full(n, 0.5)
            self._CR = np.full(n, 0.9)
        for _ in range(self.generations):
            F = np.where(rng.random(n) < self.tau_F, 0.1 + 0.9 * rng.random(n), self._F)
            CR = np.where(rng.random(n) < self.tau_CR, rng.random(n), self._CR)
            r = _distinct_indices(rng, n, 3)
            mutant = pop.Z[r[:, 0]] + F[:, None] * (pop.Z[r[:, 1]] - pop.Z[r[:, 2]])
            cross = rng.random((n, d)) < CR[:, None]
            cross[np.arange(n), rng.integers(d, size=n)] = True
            trial = np.clip(np.where(cross, mutant, pop.Z), lo, hi)
            f_trial = fitness(trial)
            better = f_trial <= pop.F
            self._F = np.where(better, F, self._F)
            self._CR = np.where(better, CR, self._CR)
            pop = Population(np.where(better[:, None], trial, pop.Z), np.where(better, f_trial, pop.F))
        return pop


class DEPBest(Algorithm):
    """DE current-to-pbest/1/bin with adaptive mean F and CR.

    Mutation pulls each individual towards a random member of the best
    ``p``-fraction of the population; successful F (Lehmer mean) and CR
    (arithmetic mean) steer the sampling means.
    """

    name = "de_pbest"

    def __init__(self, generations: int = 33, p: float = 0.1, c: float = 0.1):
        self.generations = generations
        self.p = p
        self.c = c
        self._mu_F = 0.5
        self._mu_CR = 0.5

    def _run(self, pop, fitness, lo, hi, rng):
        n, d = pop.Z.shape
        n_best = max(1, int(math.ceil(self.p * n)))
        for _ in range(self.generations):
            CR = np.clip(rng.normal(self._mu_CR, 0.1, n), 0.0, 1.0)
            F = self._mu_F + 0.1 * rng.standard_cauchy(n)
            while np.any(F <= 0):
                bad = F <= 0
                F[bad] = self._mu_F + 0.1 * rng.standard_cauchy(bad.sum())
            F = np.minimum(F, 1.0)
            top = np.argsort(pop.F)[:n_best]
            pbest = pop.Z[top[rng.integers(n_best, size=n)]]
            r = _distinct_indices(rng, n, 2)
            mutant = pop.Z + F[:, None] * (pbest - pop.Z) + F[:, None] * (pop.Z[r[:, 0]] - pop.Z[r[:, 1]])
            cross = rng.random((n, d)) < CR[:, None]
            cross[np.arange(n), rng.integers(d, size=n)] = True
            trial = np.clip(np.where(cross, mutant, pop.Z), lo, hi)
            f_trial = fitness(trial)
            better = f_trial < pop.F
            if np.any(better):
                sF, sCR = F[better], CR[better]
                self._mu_CR = (1 - self.c) * self._mu_CR + self.c * sCR.mean()
                self._mu_F = (1 - self.c) * self._mu_F + self.c * (sF**2).sum() / sF.sum()
            pop = Population(np.where(better[:, None], trial, pop.Z), np.where(better, f_trial, pop.F))
        return pop


class ParticleSwarm(Algorithm):
    """Constriction-coefficient PSO with a global-best neighbourhood.

    The island population holds the personal bests, so migrants become
    personal bests of the particle they replace.
    """

    name = "particle_swarm"

    def __init__(self, generations: int = 1, chi: float = 0.7298, c1: float = 2.05, c2: float = 2.05,
                 vmax_frac: float = 0.5):
        self.generations = generations
        self.chi = chi
        self.c1 = c1
        self.c2 = c2
        self.vmax_frac = vmax_frac
        self._X = None
        self._V = None

    def _run(self, pop, fitness, lo, hi, rng):
        n, d = pop.Z.shape
        span = hi - lo
        if self._X is None or self._X.shape != pop.Z.shape:
            self._X = pop.Z.copy()
            self._V = (rng.random((n, d)) - 0.5) * span * 0.1
        X, V = self._X, self._V
        P, fP = pop.Z, pop.F
        vmax = self.vmax_frac * span
        for _ in range(self.generations):
            g = P[np.argmin(fP)]
            r1, r2 = rng.random((n, d)), rng.random((n, d))
            V = self.chi * (V + self.c1 * r1 * (P - X) + self.c2 * r2 * (g - X))
            V = np.clip(V, -vmax, vmax)
            X = np.clip(X + V, lo, hi)
            fX = fitness(X)
            better = fX < fP
            P = np.where(better[:, None], X, P)
            fP = np.where(better, fX, fP)
        self._X, self._V = X, V
        return Population(P, fP)


class BeeColony(Algorithm):
    """Artificial bee colony: employed, onlooker and scout phases.

    A food source abandoned after ``limit`` failed trials (default
    N_pop * dim) is re-sampled uniformly, except the current best.
    """

    name = "bee_colony"

    def __init__(self, generations: int = 7, limit: int | None = None):
        self.generations = generations
        self.limit = limit
        self._trials = None

    def _neighbours(self, Z, idx, rng, lo, hi):
        n, d = Z.shape
        k = (idx + rng.integers(1, n, size=len(idx))) % n
        j = rng.integers(d, size=len(idx))
        phi = rng.uniform(-1.0, 1.0, size=len(idx))
        V = Z[idx].copy()
        rows = np.arange(len(idx))
        V[rows, j] = Z[idx, j] + phi * (Z[idx, j] - Z[k, j])
        return np.clip(V, lo, hi)

    def _run(self, pop, fitness, lo, hi, rng):
        n, d = pop.Z.shape
        limit = self.limit if self.limit is not None else n * d
        if self._trials is None or len(self._trials) != n:
            self._trials = np.zeros(n, dtype=int)
        Z, F, trials = pop.Z.copy(), pop.F.copy(), self._trials
        idx_all = np.arange(n)
        for _ in range(self.generations):
            V = self._neighbours(Z, idx_all, rng, lo, hi)
            fV = fitness(V)
            better = fV < F
            Z[better], F[better] = V[better], fV[better]
            trials = np.where(better, 0, trials + 1)

            quality = 1.0 / (1.0 + F - F.min())
            chosen = rng.choice(n, size=n, p=quality / quality.sum())
            V = self._neighbours(Z, chosen, rng, lo, hi)
            fV = fitness(V)
            for c, v, fv in zip(chosen, V, fV):
                if fv < F[c]:
                    Z[c], F[c], trials[c] = v, fv, 0
                else:
                    trials[c] += 1

            best = int(np.argmin(F))
            stale = np.flatnonzero(trials > limit)
            stale = stale[stale != best]
            if len(stale):
                Zs = lo + rng.random((len(stale), d)) * (hi - lo)
                Z[stale], F[stale], trials[stale] = Zs, fitness(Zs), 0
        self._trials = trials
        return Population(Z, F)


class GeneticAlgorithm(Algorithm):
    """Generational GA: binary tournament, SBX crossover, polynomial mutation, one elite."""

    name = "genetic"

    def __init__(self, generations: int = 33, p_cross: float = 0.9, eta_c: float = 15.0,
                 p_mut: float | None = None, eta_m: float = 20.0):
        self.generations = generations
        self.p_cross = p_cross
        self.eta_c = eta_c
        self.p_mut = p_mut
        self.eta_m = eta_m

    def _sbx(self, a, b, lo, hi, rng):
        u = rng.random(a.shape)
        beta = np.where(u <= 0.5, (2 * u) ** (1 / (self.eta_c + 1)), (1 / (2 * (1 - u))) ** (1 / (self.eta_c + 1)))
        c1 = 0.5 * ((1 + beta) * a + (1 - beta) * b)
        c2 = 0.5 * ((1 - beta) * a + (1 + beta) * b)
        swap = rng.random(a.shape) < 0.5
        mix = rng.random(a.shape[0]) < self.p_cross
        c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
        c1 = np.where(mix[:, None], c1, a)
        c2 = np.where(mix[:, None], c2, b)
        return np.clip(c1, lo, hi), np.clip(c2, lo, hi)

    def _mutate(self, Z, lo, hi, rng):
        n, d = Z.shape
        pm = self.p_mut if self.p_mut is not None else 1.0 / d
        span = np.where(hi > lo, hi - lo, 1.0)
        u = rng.random((n, d))
        d1, d2 = (Z - lo) / span, (hi - Z) / span
        m = 1.0 / (self.eta_m + 1)
        lower = (2 * u + (1 - 2 * u) * (1 - d1) ** (self.eta_m + 1)) ** m - 1
        upper = 1 - (2 * (1 - u) + 2 * (u - 0.5) * (1 - d2) ** (self.eta_m + 1)) ** m
        delta = np.where(u < 0.5, lower, upper)
        mask = rng.random((n, d)) < pm
        return np.clip(Z + mask * delta * span, lo, hi)

    def _run(self, pop, fitness, lo, hi, rng):
        n, d = pop.Z.shape
        for _ in range(self.generations):
            m = n + n % 2
            a, b = rng.integers(n, size=(2, m))
            parents = np.where(pop.F[a] <= pop.F[b], a, b)
            c1, c2 = self._sbx(pop.Z[parents[0::2]], pop.Z[parents[1::2]], lo, hi, rng)
            kids = self._mutate(np.vstack([c1, c2])[:n], lo, hi, rng)
            f_kids = fitness(kids)
            elite = pop.best_index
            worst = int(np.argmax(f_kids))
            if pop.F[elite] < f_kids[worst] and pop.F[elite] < f_kids.min():
                kids[worst], f_kids[worst] = pop.Z[elite], pop.F[elite]
            pop = Population(kids, f_kids)
        return pop


class SimulatedAnnealing(Algorithm):
    """Corana-style annealing run as one chain per population member.

    Each step perturbs one coordinate (cycled) of every chain by U(-v, v);
    the per-coordinate step ``v`` is adapted every ``n_s`` sweeps towards a
    60% acceptance rate and the temperature decays geometrically over the
    evaluation budget ``iterations``. The returned population holds the
    best point each chain has visited.
    """

    name = "simulated_annealing"

    def __init__(self, iterations: int = 667, n_s: int = 5, t_ratio: float = 1e-4, v0_frac: float = 0.25):
        self.iterations = iterations
        self.n_s = n_s
        self.t_ratio = t_ratio
        self.v0_frac = v0_frac
        self._X = None
        self._fX = None
        self._v = None
        self._T = None

    def _run(self, pop, fitness, lo, hi, rng):
        n, d = pop.Z.shape
        span = hi - lo
        if self._X is None or self._X.shape != pop.Z.shape:
            self._X, self._fX = pop.Z.copy(), pop.F.copy()
            self._v = np.tile(self.v0_frac * span, (n, 1))
            finite = pop.F[pop.F < np.max(pop.F)]
            self._T0 = float(np.std(finite)) if finite.size > 1 else 1.0
            self._T0 = max(self._T0, 1e-3)
            self._T = self._T0
        X, fX, v = self._X, self._fX, self._v
        B, fB = pop.Z.copy(), pop.F.copy()
        steps = max(1, self.iterations // n)
        decay = self.t_ratio ** (1.0 / max(1, steps))
        accepted = np.zeros((n, d))
        tried = np.zeros((n, d))
        rows = np.arange(n)
        for s in range(steps):
            j = s % d
            Y = X.copy()
            Y[:, j] = np.clip(X[:, j] + v[:, j] * rng.uniform(-1.0, 1.0, n), lo[j], hi[j])
            fY = fitness(Y)
            delta = fY - fX
            with np.errstate(over="ignore"):
                accept = (delta <= 0) | (rng.random(n) < np.exp(-np.maximum(delta, 0) / self._T))
            X = np.where(accept[:, None], Y, X)
            fX = np.where(accept, fY, fX)
            accepted[rows, j] += accept
            tried[rows, j] += 1
            improved = fX < fB
            B = np.where(improved[:, None], X, B)
            fB = np.where(improved, fX, fB)
            if (s + 1) % (self.n_s * d) == 0:
                ratio = accepted / np.maximum(tried, 1)
                factor = np.where(ratio > 0.6, 1 + 2 * (ratio - 0.6) / 0.4,
                                  np.where(ratio < 0.4, 1 / (1 + 2 * (0.4 - ratio) / 0.4), 1.0))
                v = np.minimum(v * factor, span)
                accepted[:] = 0
                tried[:] = 0
            self._T *= decay
        self._X, self._fX, self._v = X, fX, v
        return Population(B, fB)


def compass_search(z0, f0, fitness: Fitness, lo, hi, start_frac=0.3, stop_frac=1e-6, max_evals=20000):
    """Complete-poll compass search from ``z0``; returns (z, f, evaluations).

    All 2d poll points are evaluated together; the best improving one is
    taken, otherwise the step is halved. Steps are fractions of the box width.
    """
    d = len(z0)
    span = np.where(hi > lo, hi - lo, 0.0)
    z, f = np.asarray(z0, float).copy(), float(f0)
    step = start_frac
    dirs = np.vstack([np.eye(d), -np.eye(d)])
    used = 0
    while step >= stop_frac and used < max_evals:
        poll = np.clip(z + step * dirs * span, lo, hi)
        fp = fitness(poll)
        used += len(poll)
        k = int(np.argmin(fp))
        if fp[k] < f:
            z, f = poll[k], float(fp[k])
        else:
            step *= 0.5
    return z, f, used


class CompassSearch(Algorithm):
    """Local compass search applied to the best individual of the population."""

    name = "compass_search"

    def __init__(self, start_frac: float = 0.3, stop_frac: float = 1e-6, max_evals: int = 20000):
        self.start_frac = start_frac
        self.stop_frac = stop_frac
        self.max_evals = max_evals

    def _run(self, pop, fitness, lo, hi, rng):
        i = pop.best_index
        z, f, _ = compass_search(pop.Z[i], pop.F[i], fitness, lo, hi, self.start_frac, self.stop_frac, self.max_evals)
        Z, F = pop.Z.copy(), pop.F.copy()
        Z[i], F[i] = z, f
        return Population(Z, F)


class BasinHopping(Algorithm):
    """Monotonic basin hopping around compass search.

    Starting from the population best, perturb uniformly within
    ``perturb`` times the box width, descend with compass search, and accept
    only improvements. Stops after ``n_stop`` consecutive failures or once
    ``max_evals`` evaluations have been spent in this call. Rejected local
    optima that beat the population's worst member are kept as well.
    """

    name = "basin_hopping"

    def __init__(self, n_stop: int = 5, perturb: float = 0.05, inner: CompassSearch | None = None,
                 max_hops: int = 50, max_evals: int = 5000):
        self.n_stop = n_stop
        self.perturb = perturb
        self.inner = inner if inner is not None else CompassSearch(max_evals=2000)
        self.max_hops = max_hops
        self.max_evals = max_evals

    def _run(self, pop, fitness, lo, hi, rng):
        span = hi - lo
        Z, F = pop.Z.copy(), pop.F.copy()
        i = pop.best_index
        cur, fcur = Z[i].copy(), float(F[i])
        inner = self.inner
        cur, fcur, used = compass_search(cur, fcur, fitness, lo, hi, inner.start_frac, inner.stop_frac,
                                         min(inner.max_evals, self.max_evals))
        fails = hops = 0
        while fails < self.n_stop and hops < self.max_hops and used < self.max_evals:
            hops += 1
            start = np.clip(cur + rng.uniform(-1, 1, len(cur)) * self.perturb * span, lo, hi)
            f_start = float(fitness(start[None, :])[0])
            budget = min(inner.max_evals, self.max_evals - used)
            z, f, n = compass_search(start, f_start, fitness, lo, hi, inner.start_frac, inner.stop_frac, budget)
            used += n + 1
            if f < fcur:
                cur, fcur, fails = z, f, 0
            else:
                fails += 1
                w = int(np.argmax(F))
                if f < F[w] and w != i:
                    Z[w], F[w] = z, f
        Z[i], F[i] = cur, fcur
        return Population(Z, F)


ALGORITHMS = {
    cls.name: cls
    for cls in (DifferentialEvolution, DEPBest, ParticleSwarm, BeeColony, GeneticAlgorithm,
                SimulatedAnnealing, CompassSearch, BasinHopping)
}
