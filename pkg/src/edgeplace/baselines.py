"""Comparison deployers and an exhaustive optimum for tiny instances.

Three baselines bracket the annealing deployer:

* ``greedy_spread_deploy`` — per-instance greedy placement with a one-shot
  re-placement of neighbouring stages after each stage lands.
* ``ceil_sized_deploy`` — sizes each microservice at the bare minimum
  (ceiling of load over per-instance rate) and places greedily.
* ``random_deploy`` — the sizing plan scattered uniformly at random.

All deployers finish with the capacity-repair pass, so their schemes
satisfy per-server CPU and memory limits, and all are deterministic given
(scenario, seed).  ``exhaustive_optimal`` enumerates every feasible scheme
under per-microservice count caps and is the ground truth the others are
judged against; it is only practical on tiny instances.
"""

from __future__ import annotations

import math
from collections.abc import Iterator, Mapping

import numpy as np

from .annealing import DeployResult, SaParams, block_order, camd_deploy
from .errors import SearchSpaceError, UndersizedClusterError
from .latency import _hop_cost_matrix, ingress_distribution, objective
from .model import DeploymentScheme, Scenario
from .repair import repair
from .sizing import random_initial_placement, solve_scale


def _instance_prices(
    s: Scenario,
    counts: dict[tuple[int, int], list[int]],
    k: int,
    v: int,
) -> np.ndarray:
    """Per-server cost of hosting one replica of (k, v), adjacent hops only.

    Prices the expected transmission of the replica's share of traffic:
    shipping its input from the predecessor stage (or from the request
    ingress) and, when the successor stage already has instances placed,
    shipping its output onward.  Placement-independent terms are omitted —
    argmin over servers is all a greedy step needs.
    """
    app = s.applications[k]
    cost = _hop_cost_matrix(s)
    if v == 0:
        p_in = ingress_distribution(s, k)
        w_in = app.request_data_size
    else:
        prev = np.asarray(counts[(k, v - 1)], dtype=np.float64)
        p_in = prev / prev.sum()
        w_in = app.chain[v - 1].out_edge_data
    q = w_in * (p_in @ cost)
    succ = counts.get((k, v + 1))
    if succ is not None and sum(succ) > 0:
        nxt = np.asarray(succ, dtype=np.float64)
        q = q + app.chain[v].out_edge_data * (cost @ (nxt / nxt.sum()))
    return q


def _greedy_fill(
    s: Scenario,
    counts: dict[tuple[int, int], list[int]],
    cpu_used: np.ndarray,
    mem_used: np.ndarray,
    k: int,
    v: int,
    total: int,
) -> None:
    """Place ``total`` instances of (k, v), one at a time, cheapest server first.

    Each instance lands on the feasible server (residual CPU and memory
    cover the demand) with the lowest hop price, ties broken by lowest
    index.  When no server has room the cheapest server overall is used;
    the repair pass settles capacity afterwards.
    """
    ms = s.applications[k].chain[v]
    cpu_cap = np.array([srv.cpu_capacity for srv in s.servers], dtype=np.int64)
    mem_cap = np.array([srv.mem_capacity for srv in s.servers], dtype=np.int64)
    q = _instance_prices(s, counts, k, v)
    block = counts.setdefault((k, v), [0] * s.n_servers)
    for _ in range(total):
        feasible = [
            i
            for i in range(s.n_servers)
            if cpu_used[i] + ms.cpu_demand <= cpu_cap[i]
            and mem_used[i] + ms.mem_demand <= mem_cap[i]
        ]
        pool = feasible if feasible else range(s.n_servers)
        best = min(pool, key=lambda i: (q[i], i))
        block[best] += 1
        cpu_used[best] += ms.cpu_demand
        mem_used[best] += ms.mem_demand


def _redeploy_block(
    s: Scenario,
    counts: dict[tuple[int, int], list[int]],
    cpu_used: np.ndarray,
    mem_used: np.ndarray,
    k: int,
    v: int,
) -> None:
    """Lift a placed block off its servers and greedily re-place it.

    Run after a neighbouring stage lands, so the block can react to
    traffic it could not see when it was first placed.
    """
    block = counts.get((k, v))
    if block is None:
        return
    total = sum(block)
    if total == 0:
        return
    ms = s.applications[k].chain[v]
    for i, n in enumerate(block):
        cpu_used[i] -= ms.cpu_demand * n
        mem_used[i] -= ms.mem_demand * n
        block[i] = 0
    _greedy_fill(s, counts, cpu_used, mem_used, k, v, total)


def _finish(s: Scenario, counts: dict[tuple[int, int], list[int]]) -> DeployResult:
    scheme = DeploymentScheme({key: tuple(vec) for key, vec in counts.items()})
    repaired, log = repair(s, scheme)
    return DeployResult(scheme=repaired, repair_log=log)


def greedy_spread_deploy(s: Scenario, seed: int = 0) -> DeployResult:
    """Greedy per-instance placement with one-shot neighbour re-placement.

    Instance totals come from the resource-proportional sizing plan.
    Stages are visited in priority order; after a stage is fully placed its
    already-placed neighbours are re-placed greedily once, letting earlier
    stages adapt to where their consumers actually landed.  Deterministic
    regardless of the seed (kept for a uniform deployer signature).
    """
    del seed
    plan = solve_scale(s)
    counts: dict[tuple[int, int], list[int]] = {}
    cpu_used = np.zeros(s.n_servers, dtype=np.int64)
    mem_used = np.zeros(s.n_servers, dtype=np.int64)
    for k, v in block_order(s):
        _greedy_fill(s, counts, cpu_used, mem_used, k, v, plan.instance_counts[(k, v)])
        if v > 0:
            _redeploy_block(s, counts, cpu_used, mem_used, k, v - 1)
        _redeploy_block(s, counts, cpu_used, mem_used, k, v + 1)
    return _finish(s, counts)


def ceil_sized_deploy(s: Scenario, seed: int = 0) -> DeployResult:
    """Bare-minimum sizing (ceiling of load over rate) with greedy placement.

    Each microservice gets exactly enough instances to keep up with its
    application's request volume; the cheap sizing is paired with the same
    per-instance greedy placement, without the neighbour re-placement pass.
    """
    del seed
    counts: dict[tuple[int, int], list[int]] = {}
    cpu_used = np.zeros(s.n_servers, dtype=np.int64)
    mem_used = np.zeros(s.n_servers, dtype=np.int64)
    for k, v in block_order(s):
        app = s.applications[k]
        total = math.ceil(s.requests.total(k) / app.chain[v].processing_rate)
        _greedy_fill(s, counts, cpu_used, mem_used, k, v, total)
    return _finish(s, counts)


def random_deploy(s: Scenario, seed: int = 0) -> DeployResult:
    """The sizing plan scattered uniformly at random, then repaired."""
    plan = solve_scale(s)
    rng = np.random.default_rng(seed)
    scheme = random_initial_placement(s, plan, rng)
    repaired, log = repair(s, scheme)
    return DeployResult(scheme=repaired, repair_log=log)


def _vectors_with_total(n_servers: int, total: int) -> Iterator[tuple[int, ...]]:
    if n_servers == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _vectors_with_total(n_servers - 1, total - first):
            yield (first, *rest)


def _cap_for(caps: int | Mapping[tuple[int, int], int], key: tuple[int, int]) -> int:
    cap = caps if isinstance(caps, int) else caps[key]
    if cap < 1:
        raise ValueError(f"count cap for {key} must be at least 1, got {cap}")
    return cap


def exhaustive_optimal(
    s: Scenario,
    caps: int | Mapping[tuple[int, int], int],
    max_states: int = 10**7,
) -> tuple[DeploymentScheme, float]:
    """Globally optimal scheme among all count vectors with totals <= caps.

    Enumerates, for every microservice, every placement vector with total
    instances between 1 and its cap, takes the Cartesian product, discards
    schemes violating per-server CPU/memory capacity, and returns the
    feasible scheme with the smallest objective (first found wins ties, and
    the enumeration order is deterministic).

    ``caps`` is a single cap for every microservice or a per-microservice
    mapping.  Raises SearchSpaceError when the product of per-microservice
    choices exceeds ``max_states``, and UndersizedClusterError when no
    enumerated scheme is feasible.
    """
    keys = [(k, v) for k, v in block_order(s)]
    n = s.n_servers
    states = 1
    for key in keys:
        cap = _cap_for(caps, key)
        choices = sum(math.comb(t + n - 1, n - 1) for t in range(1, cap + 1))
        states *= choices
        if states > max_states:
            raise SearchSpaceError(
                f"exhaustive search needs more than {max_states} states"
            )

    per_key_vectors = [
        [
            vec
            for total in range(1, _cap_for(caps, key) + 1)
            for vec in _vectors_with_total(n, total)
        ]
        for key in keys
    ]

    best_scheme: DeploymentScheme | None = None
    best_obj = math.inf

    def walk(idx: int, partial: dict[tuple[int, int], tuple[int, ...]]) -> None:
        nonlocal best_scheme, best_obj
        if idx == len(keys):
            d = DeploymentScheme(dict(partial))
            report = objective(s, d)
            if report.capacity_ok and report.objective < best_obj:
                best_scheme, best_obj = d, report.objective
            return
        for vec in per_key_vectors[idx]:
            partial[keys[idx]] = vec
            walk(idx + 1, partial)
        del partial[keys[idx]]

    walk(0, {})
    if best_scheme is None:
        raise UndersizedClusterError("no feasible scheme within the search bounds")
    return best_scheme, best_obj


def _camd(s: Scenario, params: SaParams) -> DeployResult:
    return camd_deploy(s, params)


def _greedy(s: Scenario, params: SaParams) -> DeployResult:
    return greedy_spread_deploy(s, seed=params.seed)


def _ceil(s: Scenario, params: SaParams) -> DeployResult:
    return ceil_sized_deploy(s, seed=params.seed)


def _random(s: Scenario, params: SaParams) -> DeployResult:
    return random_deploy(s, seed=params.seed)


#: Uniform dispatch table: name -> deployer(scenario, SaParams) -> DeployResult.
DEPLOYERS = {
    "camd": _camd,
    "greedy_spread": _greedy,
    "ceil_sized": _ceil,
    "random": _random,
}

DEPLOYER_NAMES = tuple(DEPLOYERS)


def run_deployer(name: str, s: Scenario, params: SaParams) -> DeployResult:
    """Run one of the registered deployers by name."""
    try:
        fn = DEPLOYERS[name]
    except KeyError:
        known = ", ".join(DEPLOYER_NAMES)
        raise ValueError(f"unknown algorithm {name!r} (known: {known})") from None
    return fn(s, params)
