"""Capacity repair: turn an over-packed scheme into a feasible one.

Servers are scanned in index order. While a server exceeds its CPU or
memory capacity, one hosted instance is evicted at a time: migrated to the
best-fitting server with room for it, otherwise removed. Eviction prefers
instances of low-priority applications (largest CPU demand first within a
priority level), and a removal that would wipe out a microservice's last
replica is refused while any other way of relieving the server exists. Only
when every instance left on an overloaded server is an unmovable last
replica is one taken off, and even then the drop stays provisional: once
the scan finishes, each such replica is re-placed wherever later evictions
freed room for it (logged as a migration). A microservice is flagged
infeasible only when its last replica fits on no server of the repaired
cluster.

Migration targets never themselves overflow (a target must have residual
room for the instance), so a single ascending scan terminates with every
server within capacity. Capacity arithmetic is exact: demands and
capacities are canonical integers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import DeploymentScheme, Scenario, server_usage


@dataclass(frozen=True)
class RepairAction:
    """One migration (``to`` set) or removal (``to`` is None)."""

    action: str  # "migrate" | "remove"
    app: int
    pos: int
    src: int
    dst: int | None = None


@dataclass
class RepairLog:
    actions: list[RepairAction] = field(default_factory=list)
    #: Microservices whose last replica had to be dropped (min-instance
    #: constraint no longer satisfiable anywhere in the cluster).
    infeasible: list[tuple[int, int]] = field(default_factory=list)

    @property
    def migrations(self) -> list[RepairAction]:
        return [a for a in self.actions if a.action == "migrate"]

    @property
    def removals(self) -> list[RepairAction]:
        return [a for a in self.actions if a.action == "remove"]

    def csv_rows(self) -> list[dict[str, str]]:
        """Rows for the repair-log CSV: action, app, position, from, to."""
        return [
            {
                "action": a.action,
                "app": str(a.app),
                "position": str(a.pos),
                "from": str(a.src),
                "to": "" if a.dst is None else str(a.dst),
            }
            for a in self.actions
        ]


def pick_target(
    s: Scenario,
    residual_cpu: np.ndarray,
    residual_mem: np.ndarray,
    demand: tuple[int, int],
) -> int | None:
    """Best-fit server for one instance, or None if nowhere fits.

    Among servers whose residual CPU and memory both cover the demand:
    maximum residual CPU, ties by maximum residual memory, then lowest index.
    """
    cpu_d, mem_d = demand
    best: int | None = None
    for i in range(s.n_servers):
        if residual_cpu[i] >= cpu_d and residual_mem[i] >= mem_d:
            if best is None or (residual_cpu[i], residual_mem[i], -i) > (
                residual_cpu[best],
                residual_mem[best],
                -best,
            ):
                best = i
    return best


def _eviction_order(s: Scenario, counts: dict, server: int) -> list[tuple[int, int]]:
    """Microservices hosted on a server, in the order they should be evicted.

    Lowest application priority first, then largest CPU demand, then stable
    (app, pos) order for determinism.
    """
    hosted = [
        (k, v)
        for (k, v), vec in counts.items()
        if vec[server] > 0
    ]
    return sorted(
        hosted,
        key=lambda kv: (
            s.applications[kv[0]].priority,
            -s.applications[kv[0]].chain[kv[1]].cpu_demand,
            kv[0],
            kv[1],
        ),
    )


def repair(s: Scenario, d: DeploymentScheme) -> tuple[DeploymentScheme, RepairLog]:
    """Restore per-server CPU/memory feasibility by migrating, else removing.

    Idempotent: a feasible input comes back unchanged with an empty log.
    Never adds instances; totals only shrink when no server can take an
    evicted instance.
    """
    counts = {key: list(vec) for key, vec in d.counts.items()}
    cpu_used, mem_used = server_usage(s, d)
    cpu_cap = np.array([srv.cpu_capacity for srv in s.servers], dtype=np.int64)
    mem_cap = np.array([srv.mem_capacity for srv in s.servers], dtype=np.int64)
    log = RepairLog()

    #: Last replicas taken off an overloaded server with nowhere to go at
    #: the time; re-placement is retried after the scan, when later
    #: evictions may have freed room.
    deferred: list[tuple[tuple[int, int], int]] = []

    def over(i: int) -> bool:
        return cpu_used[i] > cpu_cap[i] or mem_used[i] > mem_cap[i]

    def evict(key: tuple[int, int], src: int, dst: int | None) -> None:
        k, v = key
        ms = s.applications[k].chain[v]
        counts[key][src] -= 1
        cpu_used[src] -= ms.cpu_demand
        mem_used[src] -= ms.mem_demand
        if dst is None:
            log.actions.append(RepairAction("remove", k, v, src))
        else:
            counts[key][dst] += 1
            cpu_used[dst] += ms.cpu_demand
            mem_used[dst] += ms.mem_demand
            log.actions.append(RepairAction("migrate", k, v, src, dst))

    for srv in range(s.n_servers):
        while over(srv):
            order = _eviction_order(s, counts, srv)
            moved = False
            for key in order:
                ms = s.applications[key[0]].chain[key[1]]
                target = pick_target(
                    s, cpu_cap - cpu_used, mem_cap - mem_used, (ms.cpu_demand, ms.mem_demand)
                )
                if target is not None:
                    evict(key, srv, target)
                    moved = True
                    break
                if sum(counts[key]) > 1:
                    evict(key, srv, None)
                    moved = True
                    break
                # last replica with nowhere to go: try the next candidate first
            if not moved:
                # every instance left here is an unmovable last replica;
                # take one off to restore capacity and retry it at the end
                key = order[0]
                k, v = key
                ms = s.applications[k].chain[v]
                counts[key][srv] -= 1
                cpu_used[srv] -= ms.cpu_demand
                mem_used[srv] -= ms.mem_demand
                deferred.append((key, srv))

    for key, src in deferred:
        k, v = key
        ms = s.applications[k].chain[v]
        target = pick_target(
            s, cpu_cap - cpu_used, mem_cap - mem_used, (ms.cpu_demand, ms.mem_demand)
        )
        if target is None:
            log.actions.append(RepairAction("remove", k, v, src))
            log.infeasible.append(key)
        else:
            # the origin server can never be the target: it was too full for
            # this instance when the drop happened and only fills up further
            counts[key][target] += 1
            cpu_used[target] += ms.cpu_demand
            mem_used[target] += ms.mem_demand
            log.actions.append(RepairAction("migrate", k, v, src, target))

    repaired = DeploymentScheme({key: tuple(vec) for key, vec in counts.items()})
    return repaired, log
