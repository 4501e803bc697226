"""Multi-UAV mission planning with a weighted-random NSGA-II."""

from .model import Scenario, load_scenario, save_scenario, generate_scenario, TABLE1, DatasetSpec
from .plan import Chromosome, decode
from .weights import StrategyKind, StrategyTriple, weighted_random_individual
from .moea import RunConfig, RunResult, evolve

__all__ = [
    "Scenario", "load_scenario", "save_scenario", "generate_scenario", "TABLE1", "DatasetSpec",
    "Chromosome", "decode", "StrategyKind", "StrategyTriple", "weighted_random_individual",
    "RunConfig", "RunResult", "evolve",
]
