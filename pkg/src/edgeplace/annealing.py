"""Deployment search: block-coordinate descent with simulated annealing.

The scheme is optimized one microservice at a time.  A *block* is the
placement vector of a single microservice (one chain position of one
application); while a block is being optimized every other block is frozen,
so the only part of the objective that moves is the traffic on the block's
two adjacent hops.  That part is linear in the block's counts, which makes
every proposal evaluable in O(1):

    E(n) = base + q . n / N

where ``N`` is the block's (fixed) instance total and ``q[i]`` prices a
replica on server ``i`` by the expected cost of shipping its input from the
predecessor stage and its output to the successor stage.  ``base`` is
everything else — the other applications, the computing delay (a function
of totals only), and the hops not touching this block.

Within a block, simulated annealing explores single-instance swaps
(one replica moves from a donor server to another server), keeping the
total fixed so replica sizing is never disturbed.  Blocks are visited in
priority order and sweeps repeat until a full sweep leaves the scheme
unchanged or a sweep budget runs out.  Each sweep-end scheme is repaired
to respect per-server CPU and memory capacity, and the candidate with
the best post-repair objective is returned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .latency import (
    _hop_cost_matrix,
    ingress_distribution,
    objective,
    routing_distribution,
)
from .model import DeploymentScheme, Scenario, server_usage
from .repair import RepairLog, repair
from .sizing import random_initial_placement, solve_scale


@dataclass(frozen=True)
class SaParams:
    """Knobs for the annealing search.

    The initial temperature is set per block as ``t_initial_fraction``
    times the block-start *movable* energy — the part of the objective
    that the block's placement can actually change (its share of the two
    adjacent transmission hops).  Scaling to the movable energy rather
    than the full objective is what makes the schedule meaningful: the
    full objective is dominated by the computing delay, which no swap can
    touch, so a temperature proportional to it would accept every
    proposal at every level and the walk would never cool.  Cooling
    multiplies by ``alpha`` after every ``moves_per_temp`` proposals
    until the temperature falls below ``t_min_ratio`` times its initial
    value.  ``capacity_penalty`` optionally adds a soft cost for
    exceeding server capacity during the search (weight times the summed
    relative CPU/memory overshoot); at the default 0.0 the search is
    guided by latency alone and feasibility is left to the repair pass.
    """

    t_initial_fraction: float = 0.1
    alpha: float = 0.95
    moves_per_temp: int = 50
    t_min_ratio: float = 1e-3
    max_sweeps: int = 10
    seed: int = 0
    capacity_penalty: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.t_initial_fraction <= 0.0:
            raise ValueError("t_initial_fraction must be positive")
        if not 0.0 < self.t_min_ratio < 1.0:
            raise ValueError(f"t_min_ratio must be in (0, 1), got {self.t_min_ratio}")
        if self.moves_per_temp < 1:
            raise ValueError("moves_per_temp must be at least 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        if self.capacity_penalty < 0.0:
            raise ValueError("capacity_penalty must be non-negative")


@dataclass(frozen=True)
class SweepRecord:
    sweep: int  # 1-based
    objective: float  # objective at the end of this sweep
    best_objective: float  # best sweep-end objective so far
    accepted: int  # proposals accepted during this sweep


@dataclass
class SweepTrace:
    records: list[SweepRecord] = field(default_factory=list)
    #: "converged" when a full sweep left the scheme unchanged,
    #: "max_sweeps" when the sweep budget ran out first.
    termination: str = ""

    def csv_rows(self) -> list[dict[str, str]]:
        return [
            {
                "sweep": str(r.sweep),
                "current_objective": format(r.objective, ".9g"),
                "best_objective": format(r.best_objective, ".9g"),
                "accepted_moves": str(r.accepted),
            }
            for r in self.records
        ]


@dataclass(frozen=True)
class DeployResult:
    """What a deployment algorithm hands back."""

    scheme: DeploymentScheme
    repair_log: RepairLog
    trace: SweepTrace | None = None


def block_order(s: Scenario) -> list[tuple[int, int]]:
    """Blocks in optimization order.

    Applications by descending priority (ties: lower id first), and within
    an application the chain positions in order.  Higher-priority traffic
    gets first claim on the good placements each sweep.
    """
    apps = sorted(s.applications, key=lambda a: (-a.priority, a.id))
    return [(a.id, v) for a in apps for v in range(len(a.chain))]


def _draw_move(block: tuple[int, ...], rng: np.random.Generator) -> tuple[int, int] | None:
    """Draw (donor, receiver) for a single-instance swap, or None if impossible.

    The donor is uniform over servers currently holding at least one
    instance; the receiver is uniform over all other servers.
    """
    if len(block) < 2:
        return None
    occupied = [i for i, n in enumerate(block) if n >= 1]
    src = occupied[int(rng.integers(len(occupied)))]
    dst = int(rng.integers(len(block) - 1))
    if dst >= src:
        dst += 1
    return src, dst


def propose_swap(block: tuple[int, ...], rng: np.random.Generator) -> tuple[int, ...]:
    """One neighbour of a block: move one instance between two servers.

    Returns the block unchanged when there is only one server to stand on.
    The instance total is preserved, so sizing survives any number of moves.
    """
    move = _draw_move(block, rng)
    if move is None:
        return tuple(block)
    src, dst = move
    counts = list(block)
    counts[src] -= 1
    counts[dst] += 1
    return tuple(counts)


def accept_move(delta: float, temperature: float, rng: np.random.Generator) -> bool:
    """Metropolis rule: downhill always, uphill with probability exp(-d/T).

    Only uphill moves consume a random draw.
    """
    if delta < 0.0:
        return True
    return math.exp(-delta / temperature) > rng.random()


class BlockEvaluator:
    """Energy of schemes that differ from a base scheme in one block only.

    ``latency(counts)`` reproduces the full weighted objective exactly for
    any placement of the block with the same instance total; everything
    outside the block's two adjacent hops is folded into a constant.
    """

    def __init__(
        self,
        s: Scenario,
        d: DeploymentScheme,
        key: tuple[int, int],
        penalty_weight: float = 0.0,
    ) -> None:
        k, v = key
        app = s.applications[k]
        chain = app.chain
        base_counts = np.asarray(d.block(k, v), dtype=np.int64)
        self.total = int(base_counts.sum())

        cost = _hop_cost_matrix(s)  # seconds per byte, zero diagonal
        if v == 0:
            p_in = ingress_distribution(s, k)
            w_in = app.request_data_size
        else:
            p_in = routing_distribution(s, d, k, v - 1)
            w_in = chain[v - 1].out_edge_data
        q = w_in * (p_in @ cost)
        if v + 1 < len(chain):
            p_out = routing_distribution(s, d, k, v + 1)
            q = q + chain[v].out_edge_data * (cost @ p_out)
        #: Per-server price of one replica's share of the adjacent hops,
        #: already weighted by the application's priority.
        self.q = app.priority * q

        self._latency_base = objective(s, d).objective - self._moving(base_counts)

        ms = chain[v]
        self.cpu_demand = ms.cpu_demand
        self.mem_demand = ms.mem_demand
        self.penalty_weight = penalty_weight
        cpu_used, mem_used = server_usage(s, d)
        self._cpu_without = cpu_used - self.cpu_demand * base_counts
        self._mem_without = mem_used - self.mem_demand * base_counts
        self._cpu_cap = np.array([srv.cpu_capacity for srv in s.servers], dtype=np.int64)
        self._mem_cap = np.array([srv.mem_capacity for srv in s.servers], dtype=np.int64)

    def _moving(self, counts: np.ndarray) -> float:
        return float(self.q @ counts) / self.total

    def latency(self, counts) -> float:
        """Full weighted objective with this block placed as ``counts``."""
        return self._latency_base + self._moving(np.asarray(counts, dtype=np.int64))

    def _server_penalty(self, i: int, n_i: int) -> float:
        cpu = self._cpu_without[i] + self.cpu_demand * n_i - self._cpu_cap[i]
        mem = self._mem_without[i] + self.mem_demand * n_i - self._mem_cap[i]
        over = 0.0
        if cpu > 0:
            over += cpu / self._cpu_cap[i]
        if mem > 0:
            over += mem / self._mem_cap[i]
        return over

    def penalty(self, counts) -> float:
        """Summed relative capacity overshoot with this block as ``counts``."""
        return sum(self._server_penalty(i, n) for i, n in enumerate(counts))

    def energy(self, counts) -> float:
        return self.latency(counts) + self.penalty_weight * self.penalty(counts)

    def move_delta(self, counts, src: int, dst: int) -> float:
        """Energy change from shifting one instance src -> dst. O(1)."""
        delta = (self.q[dst] - self.q[src]) / self.total
        if self.penalty_weight > 0.0:
            before = self._server_penalty(src, counts[src]) + self._server_penalty(
                dst, counts[dst]
            )
            after = self._server_penalty(src, counts[src] - 1) + self._server_penalty(
                dst, counts[dst] + 1
            )
            delta += self.penalty_weight * (after - before)
        return delta


def anneal_block(
    s: Scenario,
    d: DeploymentScheme,
    key: tuple[int, int],
    params: SaParams,
    rng: np.random.Generator,
) -> tuple[DeploymentScheme, int]:
    """Anneal one block with all others frozen.

    The Metropolis walk explores with the raw search energy, on a
    temperature schedule scaled to the block's movable energy so it
    starts permissive and actually freezes.  A frozen walk slides toward
    co-location (the cost matrix has a zero diagonal), which usually
    overloads the cheap servers — so the block adopts the best state the
    walk *visited*, ranked by (capacity overshoot, energy): a placement
    that fits the servers always beats one that does not, and energy
    breaks ties among equally-fitting states.  The annealing path passes
    through the well-fitting, cheaply-placed states on its way down, and
    the adoption rule is what harvests them, leaving the repair pass with
    little or nothing to undo.  The start state is the initial best, so a
    block never gets worse.

    Returns the scheme with the block replaced and the number of accepted
    proposals.
    """
    block = d.block(*key)
    if len(block) < 2:
        return d, 0

    ev = BlockEvaluator(s, d, key, params.capacity_penalty)
    counts = list(block)
    accepted = 0

    n = len(counts)
    q = ev.q.tolist()
    total = ev.total
    plain = params.capacity_penalty == 0.0

    # Integer per-server usage for this block's placement (other blocks
    # folded in), kept incrementally so feasibility checks are exact.
    cpu_used = (ev._cpu_without + ev.cpu_demand * np.asarray(counts)).tolist()
    mem_used = (ev._mem_without + ev.mem_demand * np.asarray(counts)).tolist()
    cpu_cap = ev._cpu_cap.tolist()
    mem_cap = ev._mem_cap.tolist()
    cpu_dem = ev.cpu_demand
    mem_dem = ev.mem_demand

    def overshoot() -> float:
        # Summed relative capacity overshoot; exactly 0.0 iff the current
        # placement fits every server (integer arithmetic, no drift).
        over = 0.0
        for i in range(n):
            c = cpu_used[i] - cpu_cap[i]
            if c > 0:
                over += c / cpu_cap[i]
            m_ = mem_used[i] - mem_cap[i]
            if m_ > 0:
                over += m_ / mem_cap[i]
        return over

    def local_energy(c: list[int]) -> float:
        # Block-local part of the search energy; exact recompute, no drift.
        val = sum(qi * ci for qi, ci in zip(q, c)) / total
        if not plain:
            val += params.capacity_penalty * ev.penalty(c)
        return val

    temperature = params.t_initial_fraction * local_energy(counts)
    if temperature <= 0.0:
        # The block already contributes nothing the walk could reduce
        # (e.g. perfectly co-located with both neighbours); nothing to do.
        return d, 0
    t_min = params.t_min_ratio * temperature

    best_counts = list(counts)
    best_key = (overshoot(), local_energy(counts))

    # Hot loop: draws are buffered per temperature level (three uniforms per
    # proposal — donor, receiver, acceptance) and the O(1) move delta is used
    # directly; the move distribution matches propose_swap / accept_move.
    while temperature > t_min:
        draws = rng.random(3 * params.moves_per_temp).tolist()
        for m in range(params.moves_per_temp):
            occupied = [i for i, c in enumerate(counts) if c > 0]
            src = occupied[int(draws[3 * m] * len(occupied))]
            dst = int(draws[3 * m + 1] * (n - 1))
            if dst >= src:
                dst += 1
            if plain:
                delta = (q[dst] - q[src]) / total
            else:
                delta = ev.move_delta(counts, src, dst)
            if delta < 0.0 or math.exp(-delta / temperature) > draws[3 * m + 2]:
                counts[src] -= 1
                counts[dst] += 1
                cpu_used[src] -= cpu_dem
                cpu_used[dst] += cpu_dem
                mem_used[src] -= mem_dem
                mem_used[dst] += mem_dem
                accepted += 1
                state_key = (overshoot(), local_energy(counts))
                if state_key < best_key:
                    best_key = state_key
                    best_counts = list(counts)
        temperature *= params.alpha

    return d.with_block(*key, tuple(best_counts)), accepted


def camd_deploy(s: Scenario, params: SaParams | None = None) -> DeployResult:
    """Capacity-aware deployment: size, anneal block-by-block, repair.

    Replica counts come from the resource-proportional sizing rule; the
    initial placement is a seeded uniform scatter.  Sweeps of per-block
    annealing run until a sweep leaves the scheme unchanged (or the sweep
    budget is spent).  The initial placement and every sweep-end scheme
    are candidates: each is passed through capacity repair, and the
    candidate whose *repaired* objective is lowest is returned — what
    matters is the quality of the scheme that actually runs, after
    feasibility is enforced.  (Keeping the initial scatter in the running
    guards the rare pathologically tight cluster where every annealed
    placement repairs worse than a uniform one.)  The trace records the
    raw (pre-repair) search objectives per sweep.
    """
    params = params or SaParams()
    plan = solve_scale(s)
    rng = np.random.default_rng(params.seed)
    d = random_initial_placement(s, plan, rng)

    order = block_order(s)
    trace = SweepTrace()
    best_obj = math.inf
    best_result = repair(s, d)
    # Rank candidates by search_objective so a repair that had to drop a
    # microservice's last replica never outranks a fully servable scheme.
    best_final = objective(s, best_result[0]).search_objective
    for sweep in range(1, params.max_sweeps + 1):
        before = d
        accepted = 0
        for key in order:
            d, acc = anneal_block(s, d, key, params, rng)
            accepted += acc
        obj = objective(s, d).objective
        best_obj = min(best_obj, obj)
        repaired, log = repair(s, d)
        final = objective(s, repaired).search_objective
        if final < best_final:
            best_result, best_final = (repaired, log), final
        trace.records.append(SweepRecord(sweep, obj, best_obj, accepted))
        if d == before:
            trace.termination = "converged"
            break
    else:
        trace.termination = "max_sweeps"

    repaired, log = best_result
    return DeployResult(scheme=repaired, repair_log=log, trace=trace)
