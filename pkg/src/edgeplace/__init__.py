"""Placement optimization for chained-microservice applications on edge clusters.

Given a cluster of bandwidth-connected servers and a set of applications,
each a chain of microservices with a priority weight, the toolkit sizes
replica counts against total cluster resources, searches per-server
placements that minimize priority-weighted expected response time, and
repairs any capacity overshoot.  A FastAPI service and a CLI expose the
same operations; scenarios and schemes travel as YAML documents.
"""

__version__ = "0.1.0"

from .annealing import DeployResult, SaParams, SweepTrace, camd_deploy
from .baselines import (
    DEPLOYER_NAMES,
    ceil_sized_deploy,
    exhaustive_optimal,
    greedy_spread_deploy,
    random_deploy,
    run_deployer,
)
from .errors import (
    EdgeplaceError,
    EnumerationInfeasibleError,
    ScenarioFormatError,
    SearchSpaceError,
    UndersizedClusterError,
    UnservableMicroserviceError,
)
from .experiments import ExperimentConfig, ExperimentResult, preset, run_experiment
from .files import parse_scenario, parse_scheme, render_scenario, render_scheme
from .generator import GeneratorConfig, generate_scenario
from .latency import LatencyReport, enumerate_paths_latency, objective
from .model import (
    ApplicationSpec,
    BandwidthMatrix,
    DeploymentScheme,
    MicroserviceSpec,
    RequestDistribution,
    Scenario,
    ServerSpec,
    validate_scenario,
    validate_scheme,
)
from .repair import RepairLog, repair
from .sizing import SizingPlan, solve_scale

__all__ = [
    "ApplicationSpec",
    "BandwidthMatrix",
    "DEPLOYER_NAMES",
    "DeployResult",
    "DeploymentScheme",
    "EdgeplaceError",
    "EnumerationInfeasibleError",
    "ExperimentConfig",
    "ExperimentResult",
    "GeneratorConfig",
    "LatencyReport",
    "MicroserviceSpec",
    "RepairLog",
    "RequestDistribution",
    "SaParams",
    "Scenario",
    "ScenarioFormatError",
    "SearchSpaceError",
    "ServerSpec",
    "SizingPlan",
    "SweepTrace",
    "UndersizedClusterError",
    "UnservableMicroserviceError",
    "camd_deploy",
    "ceil_sized_deploy",
    "enumerate_paths_latency",
    "exhaustive_optimal",
    "generate_scenario",
    "greedy_spread_deploy",
    "objective",
    "parse_scenario",
    "parse_scheme",
    "preset",
    "random_deploy",
    "render_scenario",
    "render_scheme",
    "repair",
    "run_deployer",
    "run_experiment",
    "solve_scale",
    "validate_scenario",
    "validate_scheme",
]
