"""Multi-objective placement of chained application components on fog infrastructure."""

from .domain import (
    Application,
    Component,
    Device,
    FeasibilityReport,
    Infrastructure,
    Link,
    ModelError,
    Placement,
    Tier,
    build_application,
    validate_placement,
)
from .objectives import ObjectiveVector, evaluate, evaluate_batch
from .pareto import ParetoFront, brute_force_pareto, dominates, hypervolume
from .optimizer import LowLatency, Nsga2Params, WeightedIdeal, nsga2_run, select_placement
from .baselines import BaselineResult, edge_ward_place, fspp_place
from .scenarios import InfraConfig, SweepConfig, build_case_study, build_infrastructure, run_sweep

__version__ = "0.1.0"
