"""Expected response latency of chained microservices under round-robin routing.

A request enters at a random ingress server (weighted by where arrivals
land), then visits one instance of every chain stage in order. Each stage
picks the serving server with probability proportional to that stage's
per-server instance counts. The latency of one concrete server path is

* transmission: for every consecutive pair of servers on the path, the hop
  payload (request data into stage 0, inter-stage payload after that) at the
  pairwise bandwidth — zero when both ends are the same server, plus
* computing: per stage, the slot's total request load divided by the stage's
  deployed instance count and by the per-instance processing rate (a fluid,
  no-queueing model: load is spread evenly, requests do not queue).

The expected latency is the average over the path distribution. Because the
per-stage server choices are independent, the expectation factorizes over
hops; :func:`expected_transmission_delay` exploits that, and
:func:`enumerate_paths_latency` recomputes the same number by brute-force
path enumeration as the ground-truth oracle.

All functions are pure in (Scenario, DeploymentScheme) and thread-safe.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass

import numpy as np

from .errors import EnumerationInfeasibleError, UnservableMicroserviceError
from .model import DeploymentScheme, Scenario, server_usage

#: Default cap on the number of explicit paths the enumeration oracle visits.
DEFAULT_PATH_CAP = 10**6

#: Objective surrogate for schemes that leave some microservice unservable.
#: Keeps optimizer comparisons total-ordered: every servable scheme wins.
UNSERVABLE_OBJECTIVE = sys.float_info.max


def ingress_distribution(s: Scenario, app: int) -> np.ndarray:
    """Probability that a request of ``app`` arrives at each server."""
    row = s.requests.arrivals[app]
    total = row.sum()
    if not total > 0:
        raise ValueError(f"applications[{app}]: arrivals row sums to zero")
    return row / total


def routing_distribution(s: Scenario, d: DeploymentScheme, app: int, pos: int) -> np.ndarray:
    """Probability that each server handles a request for microservice (app, pos).

    Round-robin routing: proportional to per-server instance counts.
    """
    vec = np.asarray(d.block(app, pos), dtype=float)
    total = vec.sum()
    if total < 1:
        raise UnservableMicroserviceError(app, pos)
    return vec / total


def computing_delay(s: Scenario, d: DeploymentScheme, app: int) -> float:
    """Total computing time of one application's chain, in seconds.

    Depends only on per-stage instance totals, not on which servers host
    them: load R is split evenly over N instances each sustaining o req/s.
    """
    spec = s.applications[app]
    load = s.requests.total(app)
    delay = 0.0
    for v, ms in enumerate(spec.chain):
        n = d.total_instances(app, v)
        if n < 1:
            raise UnservableMicroserviceError(app, v)
        delay += load / n / ms.processing_rate
    return delay


def _hop_cost_matrix(s: Scenario) -> np.ndarray:
    """Seconds per byte between server pairs; zero on the diagonal."""
    n = s.n_servers
    m = np.zeros((n, n), dtype=float)
    if n > 1:
        off = ~np.eye(n, dtype=bool)
        m[off] = 8.0 / s.bandwidth.bw[off]
    return m


def _hops(
    s: Scenario, d: DeploymentScheme, app: int
) -> list[tuple[np.ndarray, int, np.ndarray]]:
    """(source dist, payload bytes, destination dist) per hop, ingress hop first."""
    spec = s.applications[app]
    dists = [ingress_distribution(s, app)]
    dists += [routing_distribution(s, d, app, v) for v in range(len(spec.chain))]
    payloads = [spec.request_data_size] + [ms.out_edge_data for ms in spec.chain[:-1]]
    return [(dists[h], payloads[h], dists[h + 1]) for h in range(len(payloads))]


def expected_transmission_delay(s: Scenario, d: DeploymentScheme, app: int) -> float:
    """Expected inter-server transfer time of one application, in seconds.

    Factorized form: per-hop server choices are independent, so the
    expectation is the sum over hops of src-dist x (payload / bandwidth) x
    dst-dist, with co-located pairs contributing zero.
    """
    cost = _hop_cost_matrix(s)
    total = 0.0
    for p_src, payload, p_dst in _hops(s, d, app):
        total += payload * float(p_src @ cost @ p_dst)
    return total


def enumerate_paths_latency(
    s: Scenario, d: DeploymentScheme, app: int, max_paths: int = DEFAULT_PATH_CAP
) -> float:
    """Expected latency by explicit enumeration of every processing path.

    Exponential in chain length; exists as the ground-truth oracle for the
    factorized evaluator. Only servers with nonzero probability count toward
    the path cap.
    """
    spec = s.applications[app]
    dists = [ingress_distribution(s, app)]
    dists += [routing_distribution(s, d, app, v) for v in range(len(spec.chain))]
    payloads = [spec.request_data_size] + [ms.out_edge_data for ms in spec.chain[:-1]]

    supports = [np.flatnonzero(p) for p in dists]
    n_paths = 1
    for sup in supports:
        n_paths *= len(sup)
        if n_paths > max_paths:
            raise EnumerationInfeasibleError(
                f"app {app}: {n_paths}+ paths exceed the cap of {max_paths}"
            )

    t_com = computing_delay(s, d, app)
    bw = s.bandwidth.bw
    expected = 0.0
    for path in itertools.product(*supports):
        prob = 1.0
        for h, srv in enumerate(path):
            prob *= dists[h][srv]
        t_tran = 0.0
        for h in range(len(payloads)):
            a, b = path[h], path[h + 1]
            if a != b:
                t_tran += payloads[h] * 8.0 / bw[a, b]
        expected += prob * (t_tran + t_com)
    return expected


@dataclass(frozen=True)
class LatencyReport:
    """Evaluation of one scheme: latencies, weighted objective, constraint data.

    ``per_app_latency`` has an entry only for applications whose whole chain
    is servable; ``objective`` is the priority-weighted sum over those
    entries. Capacity overshoot is reported per server in canonical units
    (Hz / bytes), zero where the constraint holds.
    """

    per_app_latency: dict[int, float]
    objective: float
    cpu_violation: tuple[int, ...]
    mem_violation: tuple[int, ...]
    min_instance_ok: dict[tuple[int, int], bool]

    @property
    def all_servable(self) -> bool:
        return all(self.min_instance_ok.values())

    @property
    def capacity_ok(self) -> bool:
        return not any(self.cpu_violation) and not any(self.mem_violation)

    @property
    def feasible(self) -> bool:
        return self.all_servable and self.capacity_ok

    @property
    def search_objective(self) -> float:
        """Objective for optimizer comparisons: unservable schemes rank last."""
        return self.objective if self.all_servable else UNSERVABLE_OBJECTIVE


def objective(s: Scenario, d: DeploymentScheme) -> LatencyReport:
    """Weighted expected latency plus constraint bookkeeping.

    Infeasible schemes are evaluated, not rejected: capacity overshoot and
    per-microservice servability are data in the report. An application's
    latency is computed only when its whole chain has at least one instance
    per stage; scheme entries that are absent count as zero instances.
    """
    min_ok: dict[tuple[int, int], bool] = {}
    for k, v, _ in s.microservices():
        min_ok[(k, v)] = sum(d.counts.get((k, v), ())) >= 1

    per_app: dict[int, float] = {}
    weighted = 0.0
    for k, app in enumerate(s.applications):
        if not all(min_ok[(k, v)] for v in range(len(app.chain))):
            continue
        t = computing_delay(s, d, k) + expected_transmission_delay(s, d, k)
        per_app[k] = t
        weighted += app.priority * t

    cpu_used, mem_used = server_usage(s, d)
    cpu_cap = np.array([srv.cpu_capacity for srv in s.servers], dtype=np.int64)
    mem_cap = np.array([srv.mem_capacity for srv in s.servers], dtype=np.int64)
    cpu_over = np.maximum(cpu_used - cpu_cap, 0)
    mem_over = np.maximum(mem_used - mem_cap, 0)

    return LatencyReport(
        per_app_latency=per_app,
        objective=weighted,
        cpu_violation=tuple(int(x) for x in cpu_over),
        mem_violation=tuple(int(x) for x in mem_over),
        min_instance_ok=min_ok,
    )
