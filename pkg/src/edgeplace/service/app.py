"""FastAPI application: the placement toolkit as an HTTP control plane.

Every endpoint is a pure request/response computation on the payload —
the service keeps no state between calls, so one instance can serve many
clusters and concurrent requests freely.  Malformed or invalid inputs are
HTTP 400 with the parser/validator diagnostics in the detail; an
infeasible-but-well-formed scheme is not an error, its evaluation simply
reports the violations.
"""

from __future__ import annotations

import time

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..annealing import SaParams
from ..baselines import run_deployer
from ..errors import EdgeplaceError, ScenarioFormatError
from ..experiments import (
    PLOT_COLUMNS,
    RESULT_COLUMNS,
    experiment_config_from_dict,
    plot_csv_rows,
    result_csv_rows,
    run_experiment,
)
from ..files import scenario_from_dict, scenario_to_dict, scheme_from_dict, scheme_to_dict
from ..generator import generate_scenario
from ..latency import objective
from ..model import DeploymentScheme, Scenario, validate_scenario, validate_scheme
from .schemas import (
    CompareEntry,
    CompareRequest,
    CompareResponse,
    DeployRequest,
    DeployResponse,
    EvaluateRequest,
    EvaluationModel,
    GenerateRequest,
    HealthResponse,
    MicroserviceRef,
    ScenarioEnvelope,
    SweepRequest,
    SweepResponse,
    ValidateResponse,
)


def _bad_request(message: str, problems: list[str] | None = None) -> HTTPException:
    detail: dict = {"message": message}
    if problems:
        detail["problems"] = problems
    return HTTPException(status_code=400, detail=detail)


def _load_scenario(doc: dict) -> Scenario:
    """Parse and validate a scenario payload, or raise HTTP 400."""
    try:
        scenario = scenario_from_dict(doc)
    except ScenarioFormatError as exc:
        raise _bad_request(str(exc)) from exc
    problems = validate_scenario(scenario)
    if problems:
        raise _bad_request("invalid scenario", problems)
    return scenario


def _load_scheme(doc: dict, scenario: Scenario) -> DeploymentScheme:
    """Parse a scheme payload and reject structural mismatches with HTTP 400.

    Missing entries are allowed (they evaluate as unservable); unknown
    microservices, wrong vector lengths, and negative counts are not.
    """
    try:
        scheme = scheme_from_dict(doc)
    except ScenarioFormatError as exc:
        raise _bad_request(str(exc)) from exc
    structural = [
        p for p in validate_scheme(scenario, scheme) if "missing entry" not in p
    ]
    if structural:
        raise _bad_request("scheme does not fit the scenario", structural)
    return scheme


def create_app() -> FastAPI:
    app = FastAPI(
        title="edgeplace",
        version=__version__,
        description=(
            "Instance sizing, placement optimization, and latency evaluation "
            "for chained microservices on bandwidth-connected edge clusters."
        ),
    )

    @app.get("/health", response_model=HealthResponse)
    def health() -> HealthResponse:
        return HealthResponse(status="ok", version=__version__)

    @app.post("/generate", response_model=ScenarioEnvelope)
    def generate(req: GenerateRequest) -> ScenarioEnvelope:
        try:
            cfg = req.to_config()
        except ValueError as exc:
            raise _bad_request(str(exc)) from exc
        return ScenarioEnvelope(scenario=scenario_to_dict(generate_scenario(cfg)))

    @app.post("/validate", response_model=ValidateResponse)
    def validate(req: ScenarioEnvelope) -> ValidateResponse:
        try:
            scenario = scenario_from_dict(req.scenario)
        except ScenarioFormatError as exc:
            raise _bad_request(str(exc)) from exc
        problems = validate_scenario(scenario)
        return ValidateResponse(valid=not problems, problems=problems)

    @app.post("/evaluate", response_model=EvaluationModel)
    def evaluate(req: EvaluateRequest) -> EvaluationModel:
        scenario = _load_scenario(req.scenario)
        scheme = _load_scheme(req.scheme, scenario)
        return EvaluationModel.from_report(objective(scenario, scheme))

    def _run(scenario: Scenario, algorithm: str, params: SaParams) -> DeployResponse:
        start = time.perf_counter()
        try:
            result = run_deployer(algorithm, scenario, params)
        except ValueError as exc:  # unknown algorithm
            raise _bad_request(str(exc)) from exc
        except EdgeplaceError as exc:  # e.g. undersized cluster
            raise _bad_request(str(exc)) from exc
        runtime = time.perf_counter() - start
        report = objective(scenario, result.scheme)
        return DeployResponse(
            algorithm=algorithm,
            scheme=scheme_to_dict(result.scheme),
            evaluation=EvaluationModel.from_report(report),
            trace=result.trace.csv_rows() if result.trace is not None else None,
            termination=result.trace.termination if result.trace is not None else None,
            repair_log=result.repair_log.csv_rows(),
            repair_infeasible=[
                MicroserviceRef(app=k, position=v)
                for k, v in result.repair_log.infeasible
            ],
            runtime_s=runtime,
        )

    @app.post("/deploy", response_model=DeployResponse)
    def deploy(req: DeployRequest) -> DeployResponse:
        scenario = _load_scenario(req.scenario)
        try:
            params = req.params.to_params()
        except ValueError as exc:
            raise _bad_request(str(exc)) from exc
        return _run(scenario, req.algorithm, params)

    @app.post("/compare", response_model=CompareResponse)
    def compare(req: CompareRequest) -> CompareResponse:
        scenario = _load_scenario(req.scenario)
        try:
            params = req.params.to_params()
        except ValueError as exc:
            raise _bad_request(str(exc)) from exc
        results = []
        for algorithm in req.algorithms:
            run = _run(scenario, algorithm, params)
            results.append(
                CompareEntry(
                    algorithm=algorithm,
                    objective=run.evaluation.objective,
                    all_servable=run.evaluation.all_servable,
                    capacity_ok=run.evaluation.capacity_ok,
                    runtime_s=run.runtime_s,
                )
            )
        return CompareResponse(results=results)

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        doc = dict(req.config)
        if req.preset is not None and "preset" not in doc:
            doc["preset"] = req.preset
        try:
            cfg = experiment_config_from_dict(doc)
        except (ScenarioFormatError, ValueError) as exc:
            raise _bad_request(str(exc)) from exc
        result = run_experiment(cfg)
        return SweepResponse(
            columns=list(RESULT_COLUMNS),
            rows=result_csv_rows(result),
            plot_columns=list(PLOT_COLUMNS),
            plot_rows=plot_csv_rows(result),
        )

    return app
