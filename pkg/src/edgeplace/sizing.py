"""Instance sizing: how many replicas of each microservice the cluster gets.

The allocation has a fixed ratio structure and a single free scale:

* across applications, weight proportional to request volume x priority;
* within an application, weight proportional to the inverse processing rate
  (slow stages are the bottleneck, so they get more replicas);
* the scale is the largest multiplier that spends the whole cluster budget —
  one candidate scale spends total CPU, one spends total memory, and the
  smaller of the two wins (its resource is the "binding" one).

Continuous counts are floored to integers and clamped to a minimum of one so
every application stays servable. Flooring keeps totals under budget;
per-server feasibility is not this module's concern (placement is random
here, the repair pass restores capacity later).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndersizedClusterError
from .model import ApplicationSpec, DeploymentScheme, Scenario


@dataclass(frozen=True)
class SizingPlan:
    """Sized instance counts plus how the scale was determined.

    ``chain_count`` is the continuous per-application scale (how many
    parallel chain-equivalents the app is budgeted for); it is exposed for
    transparency but only the per-microservice ``instance_counts`` feed the
    deployers.
    """

    chain_count: dict[int, float]
    instance_counts: dict[tuple[int, int], int]
    binding_resource: str  # "cpu" | "memory"

    def totals_for(self, app: int) -> list[int]:
        return [n for (k, _v), n in sorted(self.instance_counts.items()) if k == app]


def chain_ratios(s: Scenario) -> np.ndarray:
    """Per-application weights, proportional to request volume x priority."""
    w = np.array(
        [s.requests.total(k) * app.priority for k, app in enumerate(s.applications)],
        dtype=float,
    )
    return w / w.sum()


def intra_app_ratios(app: ApplicationSpec) -> np.ndarray:
    """Per-stage weights within one application, proportional to 1/rate."""
    w = np.array([1.0 / ms.processing_rate for ms in app.chain], dtype=float)
    return w / w.sum()


def continuous_counts(s: Scenario) -> tuple[dict[tuple[int, int], float], float, float, str]:
    """Pre-rounding solution: counts, both candidate scales, binding resource.

    With the ratio structure pinned, the budget equations reduce to one
    linear equation each in the scale: scale x (structure resource cost) =
    total resource. The smaller scale is taken.
    """
    cr = chain_ratios(s)
    structure: dict[tuple[int, int], float] = {}
    cpu_cost = 0.0
    mem_cost = 0.0
    for k, app in enumerate(s.applications):
        ir = intra_app_ratios(app)
        for v, ms in enumerate(app.chain):
            coeff = cr[k] * ir[v]
            structure[(k, v)] = coeff
            cpu_cost += coeff * ms.cpu_demand
            mem_cost += coeff * ms.mem_demand
    lam_cpu = s.total_cpu / cpu_cost
    lam_mem = s.total_mem / mem_cost
    lam = min(lam_cpu, lam_mem)
    binding = "cpu" if lam_cpu <= lam_mem else "memory"
    counts = {key: lam * coeff for key, coeff in structure.items()}
    return counts, lam_cpu, lam_mem, binding


def solve_scale(s: Scenario) -> SizingPlan:
    """Integer instance counts saturating the binding cluster resource.

    Raises :class:`UndersizedClusterError` when one instance of every
    microservice already exceeds a total-capacity budget.
    """
    min_cpu = sum(ms.cpu_demand for _, _, ms in s.microservices())
    min_mem = sum(ms.mem_demand for _, _, ms in s.microservices())
    if min_cpu > s.total_cpu or min_mem > s.total_mem:
        raise UndersizedClusterError(
            "cluster cannot host one instance of every microservice "
            f"(need {min_cpu} Hz / {min_mem} B, have {s.total_cpu} Hz / {s.total_mem} B)"
        )

    counts, lam_cpu, lam_mem, binding = continuous_counts(s)
    lam = min(lam_cpu, lam_mem)
    cr = chain_ratios(s)
    return SizingPlan(
        chain_count={k: float(lam * cr[k]) for k in range(s.n_apps)},
        instance_counts={key: max(1, int(np.floor(val))) for key, val in counts.items()},
        binding_resource=binding,
    )


def random_initial_placement(
    s: Scenario, plan: SizingPlan, rng: np.random.Generator
) -> DeploymentScheme:
    """Spread each microservice's sized count uniformly at random over servers.

    Each instance independently picks a server from the caller's generator;
    capacity may be violated here, repair handles that later.
    """
    n = s.n_servers
    counts: dict[tuple[int, int], tuple[int, ...]] = {}
    for (k, v), total in sorted(plan.instance_counts.items()):
        picks = rng.integers(0, n, size=total)
        counts[(k, v)] = tuple(int(x) for x in np.bincount(picks, minlength=n))
    return DeploymentScheme(counts)
