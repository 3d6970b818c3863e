"""Command-line client for the placement service.

Every subcommand is a thin HTTP client: it assembles a request, sends it
to the service, and writes the response to files or the terminal.  By
default the service runs in-process (no server needed); pass ``--url`` (or
set ``EDGEPLACE_URL``) to talk to a remote instance instead, and ``serve``
runs one.  Output files default into ``$EDGEPLACE_OUT_DIR`` (falling back
to the working directory) unless explicit paths are given.
"""

from __future__ import annotations

import asyncio
import json
import os
from pathlib import Path

import click
import httpx

from .baselines import DEPLOYER_NAMES
from .errors import ScenarioFormatError
from .experiments import PRESET_NAMES, write_csv
from .files import (
    load_yaml,
    render_scenario,
    render_scheme,
    scenario_from_dict,
    scheme_from_dict,
)
from .service import create_app

TRACE_COLUMNS = ("sweep", "current_objective", "best_objective", "accepted_moves")
REPAIR_COLUMNS = ("action", "app", "position", "from", "to")
COMPARE_COLUMNS = ("algorithm", "objective", "all_servable", "capacity_ok", "runtime_s")


def _describe_error(resp: httpx.Response) -> str:
    try:
        detail = resp.json().get("detail")
    except (ValueError, AttributeError):
        return f"service returned HTTP {resp.status_code}"
    if isinstance(detail, dict):
        message = detail.get("message", "request failed")
        problems = detail.get("problems") or []
        if problems:
            return message + "".join(f"\n  - {p}" for p in problems)
        return message
    if detail is None:
        return f"service returned HTTP {resp.status_code}"
    return detail if isinstance(detail, str) else json.dumps(detail)


def _post(url: str | None, path: str, payload: dict) -> dict:
    """POST to the remote service, or to an in-process instance when no URL."""
    if url:
        resp = httpx.post(url.rstrip("/") + path, json=payload, timeout=None)
    else:

        async def call() -> httpx.Response:
            transport = httpx.ASGITransport(app=create_app())
            async with httpx.AsyncClient(
                transport=transport, base_url="http://edgeplace", timeout=None
            ) as client:
                return await client.post(path, json=payload)

        resp = asyncio.run(call())
    if resp.status_code != 200:
        raise click.ClickException(_describe_error(resp))
    return resp.json()


def _read_document(path: str) -> dict:
    try:
        doc = load_yaml(Path(path).read_text(), Path(path).name)
    except ScenarioFormatError as exc:
        raise click.ClickException(str(exc)) from exc
    if not isinstance(doc, dict):
        raise click.ClickException(f"{Path(path).name}: expected a mapping document")
    return doc


def _out_path(value: str | None, default_name: str) -> Path:
    if value is not None:
        return Path(value)
    return Path(os.environ.get("EDGEPLACE_OUT_DIR", ".")) / default_name


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    click.echo(f"wrote {path}")


def _write_rows(path: Path, columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(str(path), columns, rows)
    click.echo(f"wrote {path}")


@click.group()
@click.option(
    "--url",
    envvar="EDGEPLACE_URL",
    default=None,
    help="Base URL of a running service; default executes in-process.",
)
@click.pass_context
def main(ctx: click.Context, url: str | None) -> None:
    """Placement optimization for chained microservices on edge clusters."""
    ctx.obj = url


@main.command()
@click.option("--servers", type=int, default=None, help="Number of servers.")
@click.option("--apps", type=int, default=None, help="Number of applications.")
@click.option(
    "--chain-length", nargs=2, type=int, default=None, metavar="MIN MAX",
    help="Chain length range.",
)
@click.option(
    "--requests", "request_range", nargs=2, type=int, default=None, metavar="MIN MAX",
    help="Per-application request total range.",
)
@click.option(
    "--priorities", default=None,
    help="Comma-separated application weights (normalized), e.g. 0.5,0.3,0.2.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "-o", "--output", type=click.Path(dir_okay=False), default=None,
    help="Scenario file [default: scenario.yaml in $EDGEPLACE_OUT_DIR].",
)
@click.pass_obj
def generate(
    url: str | None,
    servers: int | None,
    apps: int | None,
    chain_length: tuple[int, int] | None,
    request_range: tuple[int, int] | None,
    priorities: str | None,
    seed: int,
    output: str | None,
) -> None:
    """Draw a random scenario and write it as YAML."""
    payload: dict = {"seed": seed}
    if servers is not None:
        payload["server_count"] = servers
    if apps is not None:
        payload["app_count"] = apps
    if chain_length:
        payload["chain_length_range"] = list(chain_length)
    if request_range:
        payload["request_total_range"] = list(request_range)
    if priorities is not None:
        try:
            payload["priority_mode"] = [float(w) for w in priorities.split(",")]
        except ValueError as exc:
            raise click.ClickException(f"--priorities: {exc}") from exc
    resp = _post(url, "/generate", payload)
    scenario = scenario_from_dict(resp["scenario"])
    _write(_out_path(output, "scenario.yaml"), render_scenario(scenario))


def _echo_evaluation(evaluation: dict) -> None:
    click.echo(f"objective: {evaluation['objective']:.9g} s")
    for app, latency in sorted(evaluation["per_app_latency"].items(), key=lambda i: int(i[0])):
        click.echo(f"  app {app}: {latency:.9g} s")
    for ref in evaluation["unservable"]:
        click.echo(f"  unservable: app {ref['app']} position {ref['position']}")
    for i, over in enumerate(evaluation["cpu_violation"]):
        if over:
            click.echo(f"  cpu overshoot on server {i}: {over} Hz")
    for i, over in enumerate(evaluation["mem_violation"]):
        if over:
            click.echo(f"  memory overshoot on server {i}: {over} bytes")
    click.echo(f"feasible: {str(evaluation['feasible']).lower()}")


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("scheme_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--json", "as_json", is_flag=True, help="Print the full report as JSON.")
@click.pass_obj
def evaluate(url: str | None, scenario_file: str, scheme_file: str, as_json: bool) -> None:
    """Evaluate a deployment scheme against a scenario.

    Constraint violations are part of the report, not an error: the command
    exits 0 whenever both files parse and fit together.
    """
    payload = {
        "scenario": _read_document(scenario_file),
        "scheme": _read_document(scheme_file),
    }
    evaluation = _post(url, "/evaluate", payload)
    if as_json:
        click.echo(json.dumps(evaluation, indent=2))
    else:
        _echo_evaluation(evaluation)


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--algo", "algorithm", type=click.Choice(DEPLOYER_NAMES), default="camd",
    show_default=True, help="Deployment algorithm.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--t-initial-fraction", type=float, default=None)
@click.option("--alpha", type=float, default=None)
@click.option("--moves-per-temp", type=int, default=None)
@click.option("--t-min-ratio", type=float, default=None)
@click.option("--max-sweeps", type=int, default=None)
@click.option("--capacity-penalty", type=float, default=None)
@click.option(
    "-o", "--output", type=click.Path(dir_okay=False), default=None,
    help="Scheme file [default: scheme.yaml in $EDGEPLACE_OUT_DIR].",
)
@click.option(
    "--trace", "trace_path", type=click.Path(dir_okay=False), default=None,
    help="Annealing trace CSV [default: trace.csv in $EDGEPLACE_OUT_DIR].",
)
@click.option(
    "--repair-log", "repair_path", type=click.Path(dir_okay=False), default=None,
    help="Repair log CSV [default: repair_log.csv in $EDGEPLACE_OUT_DIR].",
)
@click.pass_obj
def deploy(
    url: str | None,
    scenario_file: str,
    algorithm: str,
    seed: int,
    t_initial_fraction: float | None,
    alpha: float | None,
    moves_per_temp: int | None,
    t_min_ratio: float | None,
    max_sweeps: int | None,
    capacity_penalty: float | None,
    output: str | None,
    trace_path: str | None,
    repair_path: str | None,
) -> None:
    """Compute a deployment scheme and write it (plus trace and repair log)."""
    params: dict = {"seed": seed}
    overrides = {
        "t_initial_fraction": t_initial_fraction,
        "alpha": alpha,
        "moves_per_temp": moves_per_temp,
        "t_min_ratio": t_min_ratio,
        "max_sweeps": max_sweeps,
        "capacity_penalty": capacity_penalty,
    }
    params.update({k: v for k, v in overrides.items() if v is not None})
    payload = {
        "scenario": _read_document(scenario_file),
        "algorithm": algorithm,
        "params": params,
    }
    resp = _post(url, "/deploy", payload)

    scheme = scheme_from_dict(resp["scheme"])
    _write(_out_path(output, "scheme.yaml"), render_scheme(scheme))
    if resp["trace"] is not None:
        _write_rows(_out_path(trace_path, "trace.csv"), TRACE_COLUMNS, resp["trace"])
        click.echo(f"annealing finished: {resp['termination']}")
    _write_rows(_out_path(repair_path, "repair_log.csv"), REPAIR_COLUMNS, resp["repair_log"])
    for ref in resp["repair_infeasible"]:
        click.echo(
            f"warning: app {ref['app']} position {ref['position']} no longer fits "
            "anywhere; its last replica was dropped"
        )
    _echo_evaluation(resp["evaluation"])


@main.command()
@click.argument("scenario_file", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--algos", default=",".join(DEPLOYER_NAMES), show_default=True,
    help="Comma-separated algorithm names.",
)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option(
    "--csv", "csv_path", type=click.Path(dir_okay=False), default=None,
    help="Also write the comparison table as CSV.",
)
@click.pass_obj
def compare(
    url: str | None, scenario_file: str, algos: str, seed: int, csv_path: str | None
) -> None:
    """Run several algorithms on one scenario and tabulate the objectives."""
    payload = {
        "scenario": _read_document(scenario_file),
        "algorithms": [a.strip() for a in algos.split(",") if a.strip()],
        "params": {"seed": seed},
    }
    resp = _post(url, "/compare", payload)
    rows = [
        {
            "algorithm": r["algorithm"],
            "objective": format(r["objective"], ".9g"),
            "all_servable": str(r["all_servable"]).lower(),
            "capacity_ok": str(r["capacity_ok"]).lower(),
            "runtime_s": format(r["runtime_s"], ".3g"),
        }
        for r in resp["results"]
    ]
    widths = {
        c: max(len(c), *(len(row[c]) for row in rows)) if rows else len(c)
        for c in COMPARE_COLUMNS
    }
    click.echo("  ".join(c.ljust(widths[c]) for c in COMPARE_COLUMNS))
    for row in rows:
        click.echo("  ".join(row[c].ljust(widths[c]) for c in COMPARE_COLUMNS))
    if csv_path is not None:
        _write_rows(Path(csv_path), COMPARE_COLUMNS, rows)


@main.command()
@click.option(
    "--preset", type=click.Choice(PRESET_NAMES), default=None,
    help="Named sweep setup (request volume, cluster size, or chain length).",
)
@click.option(
    "--config", "config_file", type=click.Path(exists=True, dir_okay=False), default=None,
    help="Experiment config YAML; overrides preset fields.",
)
@click.option("--replications", type=int, default=None, help="Override replication count.")
@click.option("--seed", "base_seed", type=int, default=None, help="Override base seed.")
@click.option(
    "-o", "--output", type=click.Path(dir_okay=False), default=None,
    help="Results CSV [default: results.csv in $EDGEPLACE_OUT_DIR].",
)
@click.option(
    "--plot-data", "plot_path", type=click.Path(dir_okay=False), default=None,
    help="Per-figure plot data CSV [default: plot_data.csv in $EDGEPLACE_OUT_DIR].",
)
@click.pass_obj
def sweep(
    url: str | None,
    preset: str | None,
    config_file: str | None,
    replications: int | None,
    base_seed: int | None,
    output: str | None,
    plot_path: str | None,
) -> None:
    """Run an experiment sweep and write results + plot-data CSVs."""
    if preset is None and config_file is None:
        raise click.UsageError("pass --preset and/or --config")
    config = _read_document(config_file) if config_file else {}
    if replications is not None:
        config["replications"] = replications
    if base_seed is not None:
        config["base_seed"] = base_seed
    resp = _post(url, "/sweep", {"preset": preset, "config": config})
    _write_rows(_out_path(output, "results.csv"), resp["columns"], resp["rows"])
    _write_rows(_out_path(plot_path, "plot_data.csv"), resp["plot_columns"], resp["plot_rows"])
    points = sorted({row["sweep_value"] for row in resp["plot_rows"]}, key=float)
    click.echo(f"sweep points: {len(points)} ({', '.join(points)})")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
