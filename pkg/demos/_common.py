"""Shared helpers for the demo scripts."""
import sys

from opo_cqfc.optim import AlgorithmSpec, HybridConfig

FULL = "--full" in sys.argv


def config(seed=0):
    """Default hybrid with --full, otherwise a three-island setup that runs in seconds."""
    if FULL:
        return HybridConfig(master_seed=seed)
    islands = (
        AlgorithmSpec("differential_evolution", {"generations": 40}),
        AlgorithmSpec("de_pbest", {"generations": 40}),
        AlgorithmSpec("basin_hopping", {"n_stop": 3, "max_evals": 4000}),
    )
    return HybridConfig(islands=islands, n_ev=10, master_seed=seed)
