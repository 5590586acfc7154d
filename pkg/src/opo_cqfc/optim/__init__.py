"""Global optimizers and the island-model hybrid."""
from .algorithms import (
    ALGORITHMS,
    Algorithm,
    BasinHopping,
    BeeColony,
    CompassSearch,
    DEPBest,
    DifferentialEvolution,
    GeneticAlgorithm,
    Individual,
    ParticleSwarm,
    Population,
    SimulatedAnnealing,
    compass_search,
)
from .island import (
    AlgorithmSpec,
    CountingFitness,
    HybridConfig,
    OptResult,
    SearchSpace,
    default_islands,
    hybrid_optimize,
    migrate,
    run_islands,
)

__all__ = [
    "ALGORITHMS", "Algorithm", "AlgorithmSpec", "BasinHopping", "BeeColony", "CompassSearch",
    "CountingFitness", "DEPBest", "DifferentialEvolution", "GeneticAlgorithm", "HybridConfig",
    "Individual", "OptResult", "ParticleSwarm", "SearchSpace", "Population", "SimulatedAnnealing",
    "compass_search", "default_islands", "hybrid_optimize", "migrate", "run_islands",
]
