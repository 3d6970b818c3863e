"""Core value types for the placement problem.

A Scenario bundles everything that is fixed for one time slot: the server
cluster (CPU/memory capacities, pairwise bandwidth), the applications
(priority-weighted linear chains of microservices), and where each
application's requests arrive. A DeploymentScheme is the decision variable:
how many instances of each microservice run on each server.

Canonical units are fixed here and used for all internal math:

* CPU (capacity and per-instance demand): Hz, stored as int
* memory: bytes, stored as int
* CPU work per request: cycles, stored as int
* data sizes: bytes, stored as int
* bandwidth: bits/s, float
* request arrivals: requests per slot, float (generators emit whole counts)

Keeping CPU/memory as integers makes capacity accounting exact, so
feasibility checks never disagree by a rounding ulp.

All types are immutable after construction (frozen dataclasses; matrices are
marked read-only) and safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np


@dataclass(frozen=True)
class ServerSpec:
    """One edge server. Ids must be dense 0..n-1 within a scenario."""

    id: int
    cpu_capacity: int  # Hz
    mem_capacity: int  # bytes


@dataclass(frozen=True, eq=False)
class BandwidthMatrix:
    """Symmetric |S| x |S| matrix of inter-server rates in bits/s.

    The diagonal is never read: transfers between instances on the same
    server cost nothing, by case split rather than by an infinite entry.
    """

    bw: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bw, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "bw", arr)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BandwidthMatrix):
            return NotImplemented
        return self.bw.shape == other.bw.shape and bool(np.array_equal(self.bw, other.bw))


@dataclass(frozen=True)
class MicroserviceSpec:
    """Resource footprint of one instance plus per-request work.

    ``out_edge_data`` is the payload shipped to the next microservice in the
    chain; it is None for the last chain element.
    """

    cpu_demand: int  # Hz per instance
    mem_demand: int  # bytes per instance
    cycles_per_request: int
    out_edge_data: int | None = None  # bytes

    @property
    def processing_rate(self) -> float:
        """Requests/s one instance sustains: cpu_demand / cycles_per_request."""
        return self.cpu_demand / self.cycles_per_request


@dataclass(frozen=True)
class ApplicationSpec:
    """A priority-weighted linear chain of microservices.

    The chain is strictly sequential: stage v+1 consumes stage v's output.
    Branching workflows are rejected at the file boundary; nothing in the
    latency model supports them.
    """

    id: int
    priority: float  # in (0,1); priorities sum to 1 across a scenario
    request_data_size: int  # bytes carried from the ingress server to stage 0
    chain: tuple[MicroserviceSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))


@dataclass(frozen=True, eq=False)
class RequestDistribution:
    """|A| x |S| matrix: requests of each application arriving per server."""

    arrivals: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.arrivals, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "arrivals", arr)

    def total(self, app: int) -> float:
        """Total requests of one application across all ingress servers."""
        return float(self.arrivals[app].sum())

    def __eq__(self, other) -> bool:
        if not isinstance(other, RequestDistribution):
            return NotImplemented
        return self.arrivals.shape == other.arrivals.shape and bool(
            np.array_equal(self.arrivals, other.arrivals)
        )


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance for one time slot."""

    servers: tuple[ServerSpec, ...]
    bandwidth: BandwidthMatrix
    applications: tuple[ApplicationSpec, ...]
    requests: RequestDistribution

    def __post_init__(self):
        object.__setattr__(self, "servers", tuple(self.servers))
        object.__setattr__(self, "applications", tuple(self.applications))

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    @property
    def n_apps(self) -> int:
        return len(self.applications)

    def microservices(self) -> Iterator[tuple[int, int, MicroserviceSpec]]:
        """Yield (app index, chain position, spec) for every microservice."""
        for k, app in enumerate(self.applications):
            for v, ms in enumerate(app.chain):
                yield k, v, ms

    @property
    def total_cpu(self) -> int:
        return sum(s.cpu_capacity for s in self.servers)

    @property
    def total_mem(self) -> int:
        return sum(s.mem_capacity for s in self.servers)


@dataclass(frozen=True)
class DeploymentScheme:
    """Per-microservice, per-server instance counts.

    ``counts`` maps (application index, chain position) to a vector of
    per-server counts. Vectors are stored as tuples of ints, so schemes
    compare by value and cannot be mutated in place; optimizers build a new
    scheme per change via :meth:`with_block`.
    """

    counts: Mapping[tuple[int, int], tuple[int, ...]]

    def __post_init__(self):
        normalized = {
            (int(a), int(p)): tuple(int(c) for c in vec)
            for (a, p), vec in self.counts.items()
        }
        object.__setattr__(self, "counts", normalized)

    def block(self, app: int, pos: int) -> tuple[int, ...]:
        """The count vector of one microservice."""
        try:
            return self.counts[(app, pos)]
        except KeyError:
            raise KeyError(f"scheme has no entry for (app={app}, pos={pos})") from None

    def total_instances(self, app: int, pos: int) -> int:
        """Total instances of one microservice, summed over servers."""
        return sum(self.block(app, pos))

    def with_block(self, app: int, pos: int, vec: Sequence[int]) -> "DeploymentScheme":
        """A new scheme identical except for one microservice's vector."""
        new_counts = dict(self.counts)
        new_counts[(app, pos)] = tuple(int(c) for c in vec)
        return DeploymentScheme(new_counts)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DeploymentScheme):
            return NotImplemented
        return self.counts == other.counts


def total_instances(scheme: DeploymentScheme, app: int, pos: int) -> int:
    """Row sum of one microservice's count vector."""
    return scheme.total_instances(app, pos)


PRIORITY_SUM_TOL = 1e-9


def validate_scenario(s: Scenario) -> list[str]:
    """Check every model invariant; an empty list means the scenario is valid.

    Violations are data, not faults: each entry names the offending field and
    index. Pure function — equal inputs give equal outputs.
    """
    issues: list[str] = []
    n = s.n_servers

    if n == 0:
        issues.append("servers: empty server list")
    for i, srv in enumerate(s.servers):
        if srv.id != i:
            issues.append(f"servers[{i}].id: expected dense id {i}, got {srv.id}")
        if srv.cpu_capacity <= 0:
            issues.append(f"servers[{i}].cpu_capacity: non-positive")
        if srv.mem_capacity <= 0:
            issues.append(f"servers[{i}].mem_capacity: non-positive")

    bw = s.bandwidth.bw
    if bw.ndim != 2 or bw.shape != (n, n):
        issues.append(f"bandwidth.bw: shape {bw.shape} does not match {n} servers")
    else:
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue  # diagonal unused
                if not bw[i, j] > 0:
                    issues.append(f"bandwidth.bw[{i}][{j}]: non-positive bandwidth")
                elif bw[i, j] != bw[j, i]:
                    issues.append(f"bandwidth.bw[{i}][{j}]: not symmetric")

    if len(s.applications) == 0:
        issues.append("applications: empty application list")
    priority_sum = 0.0
    for k, app in enumerate(s.applications):
        if app.id != k:
            issues.append(f"applications[{k}].id: expected dense id {k}, got {app.id}")
        if not (0.0 < app.priority < 1.0) and len(s.applications) > 1:
            issues.append(f"applications[{k}].priority: {app.priority} not in (0,1)")
        elif len(s.applications) == 1 and not (0.0 < app.priority <= 1.0):
            issues.append(f"applications[{k}].priority: {app.priority} not in (0,1]")
        priority_sum += app.priority
        if len(app.chain) < 1:
            issues.append(f"applications[{k}].chain: empty chain")
        if app.request_data_size <= 0:
            issues.append(f"applications[{k}].request_data_size: non-positive")
        for v, ms in enumerate(app.chain):
            loc = f"applications[{k}].chain[{v}]"
            if ms.cpu_demand <= 0:
                issues.append(f"{loc}.cpu_demand: non-positive")
            if ms.mem_demand <= 0:
                issues.append(f"{loc}.mem_demand: non-positive")
            if ms.cycles_per_request <= 0:
                issues.append(f"{loc}.cycles_per_request: non-positive")
            last = v == len(app.chain) - 1
            if last and ms.out_edge_data is not None:
                issues.append(f"{loc}.out_edge_data: set on the last chain element")
            if not last and (ms.out_edge_data is None or ms.out_edge_data <= 0):
                issues.append(f"{loc}.out_edge_data: missing or non-positive")
    if s.applications and abs(priority_sum - 1.0) > PRIORITY_SUM_TOL:
        issues.append(f"applications: priority sum {priority_sum!r} != 1")

    arr = s.requests.arrivals
    if arr.ndim != 2 or arr.shape != (len(s.applications), n):
        issues.append(
            f"requests.arrivals: shape {arr.shape} does not match "
            f"{len(s.applications)} applications x {n} servers"
        )
    else:
        for k in range(arr.shape[0]):
            if (arr[k] < 0).any():
                issues.append(f"requests.arrivals[{k}]: negative entry")
            if not arr[k].sum() > 0:
                issues.append(f"requests.arrivals[{k}]: row sums to zero")

    return issues


def validate_scheme(s: Scenario, d: DeploymentScheme) -> list[str]:
    """Structural check of a scheme against a scenario.

    Flags missing/unknown (app, pos) entries, wrong vector lengths, and
    negative counts. Capacity and min-instance feasibility are *not* checked
    here — those are reported by the latency evaluator as data.
    """
    issues: list[str] = []
    expected = {(k, v) for k, v, _ in s.microservices()}
    for key in expected:
        if key not in d.counts:
            issues.append(f"scheme: missing entry for (app={key[0]}, pos={key[1]})")
    for key, vec in d.counts.items():
        if key not in expected:
            issues.append(f"scheme: unknown microservice (app={key[0]}, pos={key[1]})")
            continue
        if len(vec) != s.n_servers:
            issues.append(
                f"scheme[(app={key[0]}, pos={key[1]})]: vector length {len(vec)} "
                f"!= {s.n_servers} servers"
            )
        if any(c < 0 for c in vec):
            issues.append(f"scheme[(app={key[0]}, pos={key[1]})]: negative count")
    return issues


def server_usage(s: Scenario, d: DeploymentScheme) -> tuple[np.ndarray, np.ndarray]:
    """Per-server (cpu, mem) consumed by a scheme, exact integer arithmetic.

    Microservices the scheme has no entry for contribute nothing (zero
    instances everywhere); entries for microservices the scenario does not
    define are ignored — validate_scheme flags both as structural issues.
    """
    cpu = np.zeros(s.n_servers, dtype=np.int64)
    mem = np.zeros(s.n_servers, dtype=np.int64)
    for k, v, ms in s.microservices():
        vec = d.counts.get((k, v))
        if vec is None:
            continue
        for i, c in enumerate(vec):
            if c:
                cpu[i] += c * ms.cpu_demand
                mem[i] += c * ms.mem_demand
    return cpu, mem
