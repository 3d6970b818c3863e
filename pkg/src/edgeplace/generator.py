"""Random scenario generation.

Draws every cluster and workload quantity uniformly from a configured
range, with defaults matching the evaluation setup the toolkit is
calibrated against: a handful of servers with 5-20 GHz of CPU and
80-640 GB of memory, pairwise links of 1 +/- 0.2 Gbps, microservices
demanding 0.1-0.5 GHz and 0.5-4 GB with 2.4-12 Mcycles per request, and
payloads of 1-100 KB.  Generation is deterministic per seed, and every
emitted scenario passes validate_scenario.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .model import (
    ApplicationSpec,
    BandwidthMatrix,
    MicroserviceSpec,
    RequestDistribution,
    Scenario,
    ServerSpec,
    validate_scenario,
)

GHZ = 10**9
GB = 10**9
KB = 10**3
MCYCLES = 10**6


def _check_range(name: str, rng: tuple[float, float]) -> None:
    lo, hi = rng
    if lo > hi:
        raise ValueError(f"{name} must satisfy min <= max, got ({lo}, {hi})")


@dataclass(frozen=True)
class GeneratorConfig:
    """Ranges and counts for random scenario generation.

    ``priority_mode`` is either the string ``"uniform"`` (draw one uniform
    weight per application and normalize to sum 1) or an explicit sequence
    of weights, one per application, normalized the same way.
    """

    server_count: int = 3
    app_count: int = 3
    chain_length_range: tuple[int, int] = (2, 4)
    request_total_range: tuple[int, int] = (2000, 3000)
    cpu_capacity_range: tuple[int, int] = (5 * GHZ, 20 * GHZ)  # Hz
    mem_capacity_range: tuple[int, int] = (80 * GB, 640 * GB)  # bytes
    bandwidth_mean: float = 1e9  # bits/s
    bandwidth_jitter: float = 0.2e9  # bits/s
    ms_cpu_range: tuple[int, int] = (int(0.1 * GHZ), int(0.5 * GHZ))  # Hz
    ms_cycles_range: tuple[int, int] = (int(2.4 * MCYCLES), 12 * MCYCLES)
    ms_mem_range: tuple[int, int] = (int(0.5 * GB), 4 * GB)  # bytes
    edge_data_range: tuple[int, int] = (1 * KB, 100 * KB)  # bytes
    priority_mode: str | Sequence[float] = "uniform"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.server_count < 1:
            raise ValueError("server_count must be at least 1")
        if self.app_count < 1:
            raise ValueError("app_count must be at least 1")
        for name in (
            "chain_length_range",
            "request_total_range",
            "cpu_capacity_range",
            "mem_capacity_range",
            "ms_cpu_range",
            "ms_cycles_range",
            "ms_mem_range",
            "edge_data_range",
        ):
            _check_range(name, getattr(self, name))
        if self.chain_length_range[0] < 1:
            raise ValueError("chains must have at least one microservice")
        if not 0 <= self.bandwidth_jitter < self.bandwidth_mean:
            raise ValueError(
                "bandwidth_jitter must be non-negative and below bandwidth_mean "
                "(links must stay positive)"
            )
        if not isinstance(self.priority_mode, str):
            object.__setattr__(self, "priority_mode", tuple(self.priority_mode))
            if len(self.priority_mode) != self.app_count:
                raise ValueError(
                    f"priority_mode lists one weight per application: expected "
                    f"{self.app_count}, got {len(self.priority_mode)}"
                )
            if any(w <= 0 for w in self.priority_mode):
                raise ValueError("explicit priorities must be positive")
        elif self.priority_mode != "uniform":
            raise ValueError(
                f"priority_mode must be 'uniform' or an explicit weight list, "
                f"got {self.priority_mode!r}"
            )


def _int_uniform(rng: np.random.Generator, bounds: tuple[int, int]) -> int:
    """Uniform integer draw, bounds inclusive."""
    lo, hi = bounds
    return int(rng.integers(lo, hi + 1))


def generate_scenario(cfg: GeneratorConfig) -> Scenario:
    """Draw one scenario from the configured ranges, deterministically."""
    rng = np.random.default_rng(cfg.seed)

    servers = tuple(
        ServerSpec(
            id=i,
            cpu_capacity=_int_uniform(rng, cfg.cpu_capacity_range),
            mem_capacity=_int_uniform(rng, cfg.mem_capacity_range),
        )
        for i in range(cfg.server_count)
    )

    n = cfg.server_count
    bw = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            lo = cfg.bandwidth_mean - cfg.bandwidth_jitter
            hi = cfg.bandwidth_mean + cfg.bandwidth_jitter
            bw[i, j] = bw[j, i] = rng.uniform(lo, hi)

    if isinstance(cfg.priority_mode, str):
        weights = rng.uniform(0.0, 1.0, size=cfg.app_count)
        while weights.sum() <= 0.0:  # vanishing chance, but keep it sound
            weights = rng.uniform(0.0, 1.0, size=cfg.app_count)
    else:
        weights = np.asarray(cfg.priority_mode, dtype=np.float64)
    priorities = weights / weights.sum()

    applications = []
    totals = []
    for k in range(cfg.app_count):
        length = _int_uniform(rng, cfg.chain_length_range)
        totals.append(_int_uniform(rng, cfg.request_total_range))
        request_size = _int_uniform(rng, cfg.edge_data_range)
        chain = []
        for v in range(length):
            chain.append(
                MicroserviceSpec(
                    cpu_demand=_int_uniform(rng, cfg.ms_cpu_range),
                    mem_demand=_int_uniform(rng, cfg.ms_mem_range),
                    cycles_per_request=_int_uniform(rng, cfg.ms_cycles_range),
                    out_edge_data=(
                        _int_uniform(rng, cfg.edge_data_range) if v < length - 1 else None
                    ),
                )
            )
        applications.append(
            ApplicationSpec(
                id=k,
                priority=float(priorities[k]),
                request_data_size=request_size,
                chain=tuple(chain),
            )
        )

    arrivals = np.zeros((cfg.app_count, n), dtype=np.float64)
    for k, total in enumerate(totals):
        arrivals[k] = rng.multinomial(total, [1.0 / n] * n)

    scenario = Scenario(
        servers=servers,
        bandwidth=BandwidthMatrix(bw),
        applications=tuple(applications),
        requests=RequestDistribution(arrivals),
    )
    problems = validate_scenario(scenario)
    if problems:  # defensive: generation should never emit an invalid scenario
        raise AssertionError(f"generated scenario failed validation: {problems}")
    return scenario
