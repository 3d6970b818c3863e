"""Experiment sweeps: run deployers across scenario families, emit CSV.

A sweep varies one scenario dimension (per-app request volume, server
count, or chain length) over a set of values.  Each sweep point is
replicated with fresh random scenarios, every registered algorithm runs on
the same scenario within a replication, and the results land in a CSV with
a fixed column order: one ``result`` row per (sweep value, replication,
algorithm) and one ``summary`` row per (sweep value, algorithm) carrying
the mean objective plus, on baseline rows, the relative reduction the
annealing deployer achieved against that baseline.

Three presets cover the standard study shapes: ``fig2`` sweeps request
volume over {2000..3000} on a 3-server cluster, ``fig3`` sweeps cluster
size over {3, 5, 7} with longer chains, and ``fig4`` sweeps chain length.
"""

from __future__ import annotations

import csv
import time
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field, replace

from .annealing import SaParams
from .baselines import DEPLOYER_NAMES, run_deployer
from .errors import ScenarioFormatError
from .generator import GeneratorConfig, generate_scenario
from .latency import objective

SWEEP_VARIABLES = ("requests", "servers", "chain_length")

#: Fixed column order of the results CSV.
RESULT_COLUMNS = (
    "row_type",
    "sweep_variable",
    "sweep_value",
    "replication",
    "algorithm",
    "seed",
    "objective",
    "per_app_latency",
    "cpu_feasible",
    "mem_feasible",
    "all_servable",
    "runtime_s",
    "mean_objective",
    "camd_reduction_pct",
)

PLOT_COLUMNS = ("sweep_value", "algorithm", "mean_objective")


@dataclass(frozen=True)
class ExperimentConfig:
    """One sweep: what to vary, how often, and which algorithms to run.

    Replication ``r`` of any sweep point uses seed ``base_seed + r`` for
    both scenario generation and the deployers, so a sweep is reproducible
    from (config, base_seed) alone and each replication is independent.
    """

    sweep: str = "requests"
    values: tuple[int, ...] = (2000, 2250, 2500, 2750, 3000)
    replications: int = 10
    algorithms: tuple[str, ...] = DEPLOYER_NAMES
    base: GeneratorConfig = field(default_factory=GeneratorConfig)
    sa: SaParams = field(default_factory=SaParams)
    base_seed: int = 0

    def __post_init__(self) -> None:
        if self.sweep not in SWEEP_VARIABLES:
            raise ValueError(
                f"sweep must be one of {SWEEP_VARIABLES}, got {self.sweep!r}"
            )
        if not self.values:
            raise ValueError("values must be non-empty")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not self.algorithms:
            raise ValueError("algorithms must be non-empty")
        unknown = [a for a in self.algorithms if a not in DEPLOYER_NAMES]
        if unknown:
            raise ValueError(
                f"unknown algorithms {unknown}; known: {list(DEPLOYER_NAMES)}"
            )


def scenario_config(e: ExperimentConfig, value: int, replication: int) -> GeneratorConfig:
    """Generator config for one sweep point and replication."""
    seed = e.base_seed + replication
    if e.sweep == "requests":
        return replace(e.base, request_total_range=(value, value), seed=seed)
    if e.sweep == "servers":
        return replace(e.base, server_count=value, seed=seed)
    return replace(e.base, chain_length_range=(value, value), seed=seed)


@dataclass(frozen=True)
class RunRecord:
    """One algorithm's outcome on one generated scenario."""

    sweep_value: int
    replication: int
    algorithm: str
    seed: int
    objective: float
    per_app_latency: Mapping[int, float]
    cpu_feasible: bool
    mem_feasible: bool
    all_servable: bool
    runtime_s: float


@dataclass(frozen=True)
class SummaryRecord:
    """Mean objective of one algorithm at one sweep point.

    ``camd_reduction_pct`` is only set on baseline rows when the annealing
    deployer also ran: how much lower (in percent) its mean objective is
    than this baseline's.
    """

    sweep_value: int
    algorithm: str
    mean_objective: float
    camd_reduction_pct: float | None = None


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    records: tuple[RunRecord, ...]
    summaries: tuple[SummaryRecord, ...]


def run_experiment(e: ExperimentConfig) -> ExperimentResult:
    """Run the full sweep; rows come back sorted and summarized."""
    records: list[RunRecord] = []
    for value in e.values:
        for rep in range(e.replications):
            cfg = scenario_config(e, value, rep)
            scenario = generate_scenario(cfg)
            params = replace(e.sa, seed=cfg.seed)
            for algo in e.algorithms:
                start = time.perf_counter()
                result = run_deployer(algo, scenario, params)
                runtime = time.perf_counter() - start
                report = objective(scenario, result.scheme)
                records.append(
                    RunRecord(
                        sweep_value=value,
                        replication=rep,
                        algorithm=algo,
                        seed=cfg.seed,
                        objective=report.objective,
                        per_app_latency=dict(report.per_app_latency),
                        cpu_feasible=not any(report.cpu_violation),
                        mem_feasible=not any(report.mem_violation),
                        all_servable=report.all_servable,
                        runtime_s=runtime,
                    )
                )
    records.sort(key=lambda r: (r.sweep_value, r.replication, r.algorithm))
    return ExperimentResult(
        config=e, records=tuple(records), summaries=tuple(summarize(e, records))
    )


def summarize(e: ExperimentConfig, records: Sequence[RunRecord]) -> list[SummaryRecord]:
    means: dict[tuple[int, str], float] = {}
    for value in e.values:
        for algo in e.algorithms:
            objs = [
                r.objective
                for r in records
                if r.sweep_value == value and r.algorithm == algo
            ]
            means[(value, algo)] = sum(objs) / len(objs)
    summaries = []
    for value in e.values:
        camd_mean = means.get((value, "camd"))
        for algo in sorted(e.algorithms):
            mean = means[(value, algo)]
            reduction = None
            if camd_mean is not None and algo != "camd" and mean > 0:
                reduction = (mean - camd_mean) / mean * 100.0
            summaries.append(SummaryRecord(value, algo, mean, reduction))
    return summaries


def _fmt(x: float) -> str:
    return format(x, ".9g")


def _fmt_latencies(per_app: Mapping[int, float]) -> str:
    return ";".join(f"{k}:{_fmt(v)}" for k, v in sorted(per_app.items()))


def result_csv_rows(result: ExperimentResult) -> list[dict[str, str]]:
    """Results CSV content: result rows first, then summary rows."""
    sweep_var = result.config.sweep
    rows: list[dict[str, str]] = []
    for r in result.records:
        rows.append(
            {
                "row_type": "result",
                "sweep_variable": sweep_var,
                "sweep_value": str(r.sweep_value),
                "replication": str(r.replication),
                "algorithm": r.algorithm,
                "seed": str(r.seed),
                "objective": _fmt(r.objective),
                "per_app_latency": _fmt_latencies(r.per_app_latency),
                "cpu_feasible": str(r.cpu_feasible).lower(),
                "mem_feasible": str(r.mem_feasible).lower(),
                "all_servable": str(r.all_servable).lower(),
                "runtime_s": _fmt(r.runtime_s),
                "mean_objective": "",
                "camd_reduction_pct": "",
            }
        )
    for summ in result.summaries:
        rows.append(
            {
                "row_type": "summary",
                "sweep_variable": sweep_var,
                "sweep_value": str(summ.sweep_value),
                "replication": "",
                "algorithm": summ.algorithm,
                "seed": "",
                "objective": "",
                "per_app_latency": "",
                "cpu_feasible": "",
                "mem_feasible": "",
                "all_servable": "",
                "runtime_s": "",
                "mean_objective": _fmt(summ.mean_objective),
                "camd_reduction_pct": (
                    "" if summ.camd_reduction_pct is None else _fmt(summ.camd_reduction_pct)
                ),
            }
        )
    return rows


def plot_csv_rows(result: ExperimentResult) -> list[dict[str, str]]:
    """Plot-data CSV: one (sweep value, algorithm) mean per row."""
    return [
        {
            "sweep_value": str(summ.sweep_value),
            "algorithm": summ.algorithm,
            "mean_objective": _fmt(summ.mean_objective),
        }
        for summ in result.summaries
    ]


def write_csv(path: str, columns: Sequence[str], rows: Iterable[Mapping[str, str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns))
        writer.writeheader()
        writer.writerows(rows)


def preset(name: str) -> ExperimentConfig:
    """Named sweep setups: fig2 (requests), fig3 (servers), fig4 (chain length)."""
    shared = dict(app_count=3, priority_mode=(0.5, 0.3, 0.2))
    if name == "fig2":
        return ExperimentConfig(
            sweep="requests",
            values=(2000, 2250, 2500, 2750, 3000),
            base=GeneratorConfig(server_count=3, chain_length_range=(2, 4), **shared),
        )
    if name == "fig3":
        return ExperimentConfig(
            sweep="servers",
            values=(3, 5, 7),
            base=GeneratorConfig(
                chain_length_range=(5, 7), request_total_range=(2000, 2000), **shared
            ),
        )
    if name == "fig4":
        return ExperimentConfig(
            sweep="chain_length",
            values=(2, 4, 6),
            base=GeneratorConfig(
                server_count=3, request_total_range=(2000, 2000), **shared
            ),
        )
    raise ValueError(f"unknown preset {name!r} (known: fig2, fig3, fig4)")


PRESET_NAMES = ("fig2", "fig3", "fig4")


def experiment_config_from_dict(doc: Mapping, where: str = "experiment") -> ExperimentConfig:
    """Build an ExperimentConfig from a parsed YAML/JSON mapping.

    Recognized keys: preset (applied first), sweep, values, replications,
    algorithms, base_seed, sa {SaParams fields}, generator {GeneratorConfig
    fields}.  Unknown keys are rejected so typos fail loudly.
    """
    if not isinstance(doc, Mapping):
        raise ScenarioFormatError(f"{where}: expected a mapping")
    known = {
        "preset",
        "sweep",
        "values",
        "replications",
        "algorithms",
        "base_seed",
        "sa",
        "generator",
    }
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ScenarioFormatError(f"{where}: unknown keys {unknown}")

    try:
        cfg = preset(doc["preset"]) if "preset" in doc else ExperimentConfig()
        updates: dict = {}
        if "sweep" in doc:
            updates["sweep"] = doc["sweep"]
        if "values" in doc:
            updates["values"] = tuple(int(v) for v in doc["values"])
        if "replications" in doc:
            updates["replications"] = int(doc["replications"])
        if "algorithms" in doc:
            updates["algorithms"] = tuple(doc["algorithms"])
        if "base_seed" in doc:
            updates["base_seed"] = int(doc["base_seed"])
        if "sa" in doc:
            updates["sa"] = replace(cfg.sa, **dict(doc["sa"]))
        if "generator" in doc:
            gen = dict(doc["generator"])
            for key, value in gen.items():
                if key.endswith("_range") or key == "priority_mode":
                    if isinstance(value, (list, tuple)):
                        gen[key] = tuple(value)
            updates["base"] = replace(cfg.base, **gen)
        return replace(cfg, **updates) if updates else cfg
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"{where}: {exc}") from exc
