"""Request/response models for the HTTP service.

Scenario and scheme payloads travel as plain mappings in the same shape as
the YAML file formats (unit strings like ``"10 GHz"`` welcome); the core
parsers validate them and produce precise errors, so the envelope models
here stay thin.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..annealing import SaParams
from ..baselines import DEPLOYER_NAMES
from ..generator import GeneratorConfig
from ..latency import LatencyReport


class SaParamsModel(BaseModel):
    """Annealing knobs; defaults match the library's SaParams."""

    t_initial_fraction: float = 0.1
    alpha: float = 0.95
    moves_per_temp: int = 50
    t_min_ratio: float = 1e-3
    max_sweeps: int = 10
    seed: int = 0
    capacity_penalty: float = 0.0

    def to_params(self) -> SaParams:
        return SaParams(**self.model_dump())


class GenerateRequest(BaseModel):
    """Overrides for GeneratorConfig; omitted fields keep library defaults.

    Ranges are [min, max] pairs in canonical units (Hz, bytes, bits/s).
    ``priority_mode`` is "uniform" or an explicit weight list.
    """

    server_count: int | None = None
    app_count: int | None = None
    chain_length_range: tuple[int, int] | None = None
    request_total_range: tuple[int, int] | None = None
    cpu_capacity_range: tuple[int, int] | None = None
    mem_capacity_range: tuple[int, int] | None = None
    bandwidth_mean: float | None = None
    bandwidth_jitter: float | None = None
    ms_cpu_range: tuple[int, int] | None = None
    ms_cycles_range: tuple[int, int] | None = None
    ms_mem_range: tuple[int, int] | None = None
    edge_data_range: tuple[int, int] | None = None
    priority_mode: str | tuple[float, ...] | None = None
    seed: int = 0

    def to_config(self) -> GeneratorConfig:
        overrides = {k: v for k, v in self.model_dump().items() if v is not None}
        return GeneratorConfig(**overrides)


class ScenarioEnvelope(BaseModel):
    scenario: dict


class ValidateResponse(BaseModel):
    valid: bool
    problems: list[str]


class MicroserviceRef(BaseModel):
    app: int
    position: int


class EvaluationModel(BaseModel):
    """LatencyReport over the wire.

    ``cpu_violation`` / ``mem_violation`` hold per-server capacity overshoot
    in canonical units (zero where the constraint holds); ``unservable``
    lists microservices with no instances.
    """

    objective: float
    per_app_latency: dict[int, float]
    cpu_violation: list[int]
    mem_violation: list[int]
    unservable: list[MicroserviceRef]
    all_servable: bool
    capacity_ok: bool
    feasible: bool

    @classmethod
    def from_report(cls, report: LatencyReport) -> "EvaluationModel":
        return cls(
            objective=report.objective,
            per_app_latency=dict(report.per_app_latency),
            cpu_violation=list(report.cpu_violation),
            mem_violation=list(report.mem_violation),
            unservable=[
                MicroserviceRef(app=k, position=v)
                for (k, v), ok in sorted(report.min_instance_ok.items())
                if not ok
            ],
            all_servable=report.all_servable,
            capacity_ok=report.capacity_ok,
            feasible=report.feasible,
        )


class EvaluateRequest(BaseModel):
    scenario: dict
    scheme: dict


class DeployRequest(BaseModel):
    scenario: dict
    algorithm: str = "camd"
    params: SaParamsModel = Field(default_factory=SaParamsModel)


class DeployResponse(BaseModel):
    algorithm: str
    scheme: dict
    evaluation: EvaluationModel
    #: Annealing trace rows (camd only): sweep, current_objective,
    #: best_objective, accepted_moves.
    trace: list[dict[str, str]] | None
    termination: str | None
    #: Repair actions: action, app, position, from, to.
    repair_log: list[dict[str, str]]
    #: Microservices whose last replica had to be dropped during repair.
    repair_infeasible: list[MicroserviceRef]
    runtime_s: float


class CompareRequest(BaseModel):
    scenario: dict
    algorithms: tuple[str, ...] = DEPLOYER_NAMES
    params: SaParamsModel = Field(default_factory=SaParamsModel)


class CompareEntry(BaseModel):
    algorithm: str
    objective: float
    all_servable: bool
    capacity_ok: bool
    runtime_s: float


class CompareResponse(BaseModel):
    results: list[CompareEntry]


class SweepRequest(BaseModel):
    """An experiment to run: a preset name, config overrides, or both."""

    preset: str | None = None
    config: dict = Field(default_factory=dict)


class SweepResponse(BaseModel):
    columns: list[str]
    rows: list[dict[str, str]]
    plot_columns: list[str]
    plot_rows: list[dict[str, str]]


class HealthResponse(BaseModel):
    status: str
    version: str
