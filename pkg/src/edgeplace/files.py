"""Scenario and scheme files: structured YAML with explicit units.

Quantities may be written either as plain numbers (already in canonical
units) or as ``"<number> <unit>"`` strings, e.g. ``cpu_capacity: 10 GHz`` or
``out_edge_data: 55 KB``. Decimal multipliers throughout (1 KB = 1000 bytes,
1 Gbps = 1e9 bits/s); conversion happens once at the file boundary, all
internal math is canonical (see :mod:`edgeplace.model`).

Rendering is deterministic: the same scenario/scheme always produces the
same bytes, and ``parse(render(x)) == x`` field-for-field. Integer
quantities are rendered with the largest unit that divides them evenly;
floats are rendered as canonical plain numbers.
"""

from __future__ import annotations

from typing import Any

import numpy as np
import yaml

from .errors import ScenarioFormatError
from .model import (
    ApplicationSpec,
    BandwidthMatrix,
    DeploymentScheme,
    MicroserviceSpec,
    RequestDistribution,
    Scenario,
    ServerSpec,
)

_UNIT_TABLES: dict[str, dict[str, float]] = {
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "bytes": {"b": 1.0, "kb": 1e3, "mb": 1e6, "gb": 1e9, "tb": 1e12},
    "rate": {"bps": 1.0, "kbps": 1e3, "mbps": 1e6, "gbps": 1e9},
    "cycles": {"cycles": 1.0, "kcycles": 1e3, "mcycles": 1e6, "gcycles": 1e9},
}

# Preferred rendering order, largest first.
_RENDER_UNITS: dict[str, list[tuple[str, int]]] = {
    "frequency": [("GHz", 10**9), ("MHz", 10**6), ("kHz", 10**3), ("Hz", 1)],
    "bytes": [("TB", 10**12), ("GB", 10**9), ("MB", 10**6), ("KB", 10**3), ("B", 1)],
    "cycles": [("Gcycles", 10**9), ("Mcycles", 10**6), ("Kcycles", 10**3), ("cycles", 1)],
}


def parse_quantity(value: Any, kind: str, where: str) -> float:
    """Convert a number or a ``"<number> <unit>"`` string to canonical units."""
    table = _UNIT_TABLES[kind]
    if isinstance(value, bool):
        raise ScenarioFormatError(f"{where}: expected a quantity, got a boolean")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        parts = value.strip().split()
        if len(parts) == 2:
            num_s, unit = parts
        elif len(parts) == 1:
            num_s, unit = parts[0], None
        else:
            raise ScenarioFormatError(f"{where}: cannot parse quantity {value!r}")
        try:
            num = float(num_s)
        except ValueError:
            raise ScenarioFormatError(f"{where}: cannot parse number in {value!r}") from None
        if unit is None:
            return num
        factor = table.get(unit.lower())
        if factor is None:
            raise ScenarioFormatError(
                f"{where}: unknown {kind} unit {unit!r} (expected one of {sorted(table)})"
            )
        return num * factor
    raise ScenarioFormatError(f"{where}: expected a quantity, got {type(value).__name__}")


def parse_int_quantity(value: Any, kind: str, where: str) -> int:
    """Quantity parse plus rounding to the canonical integer grid."""
    return int(round(parse_quantity(value, kind, where)))


def render_quantity(value: int, kind: str) -> str:
    """Render an integer canonical value with the largest evenly-dividing unit."""
    for unit, factor in _RENDER_UNITS[kind]:
        if value % factor == 0:
            return f"{value // factor} {unit}"
    return f"{value} {_RENDER_UNITS[kind][-1][0]}"


def _require(mapping: Any, key: str, where: str) -> Any:
    if not isinstance(mapping, dict):
        raise ScenarioFormatError(f"{where}: expected a mapping")
    if key not in mapping:
        raise ScenarioFormatError(f"{where}: missing field {key!r}")
    return mapping[key]


def _as_list(value: Any, where: str) -> list:
    if not isinstance(value, list):
        raise ScenarioFormatError(f"{where}: expected a list")
    return value


def scenario_from_dict(doc: Any) -> Scenario:
    """Build a Scenario from parsed YAML/JSON data, converting units."""
    servers = []
    for i, item in enumerate(_as_list(_require(doc, "servers", "scenario"), "servers")):
        where = f"servers[{i}]"
        servers.append(
            ServerSpec(
                id=int(_require(item, "id", where)),
                cpu_capacity=parse_int_quantity(
                    _require(item, "cpu_capacity", where), "frequency", f"{where}.cpu_capacity"
                ),
                mem_capacity=parse_int_quantity(
                    _require(item, "mem_capacity", where), "bytes", f"{where}.mem_capacity"
                ),
            )
        )

    bw_doc = _require(_require(doc, "bandwidth", "scenario"), "bw", "bandwidth")
    rows = []
    for i, row in enumerate(_as_list(bw_doc, "bandwidth.bw")):
        rows.append(
            [
                parse_quantity(cell, "rate", f"bandwidth.bw[{i}][{j}]")
                for j, cell in enumerate(_as_list(row, f"bandwidth.bw[{i}]"))
            ]
        )
    lengths = {len(r) for r in rows}
    if len(lengths) > 1:
        raise ScenarioFormatError("bandwidth.bw: ragged rows")

    applications = []
    for k, item in enumerate(_as_list(_require(doc, "applications", "scenario"), "applications")):
        where = f"applications[{k}]"
        chain = []
        chain_doc = _as_list(_require(item, "chain", where), f"{where}.chain")
        for v, ms in enumerate(chain_doc):
            ms_where = f"{where}.chain[{v}]"
            out_edge = ms.get("out_edge_data") if isinstance(ms, dict) else None
            chain.append(
                MicroserviceSpec(
                    cpu_demand=parse_int_quantity(
                        _require(ms, "cpu_demand", ms_where), "frequency", f"{ms_where}.cpu_demand"
                    ),
                    mem_demand=parse_int_quantity(
                        _require(ms, "mem_demand", ms_where), "bytes", f"{ms_where}.mem_demand"
                    ),
                    cycles_per_request=parse_int_quantity(
                        _require(ms, "cycles_per_request", ms_where),
                        "cycles",
                        f"{ms_where}.cycles_per_request",
                    ),
                    out_edge_data=(
                        None
                        if out_edge is None
                        else parse_int_quantity(out_edge, "bytes", f"{ms_where}.out_edge_data")
                    ),
                )
            )
        applications.append(
            ApplicationSpec(
                id=int(_require(item, "id", where)),
                priority=float(_require(item, "priority", where)),
                request_data_size=parse_int_quantity(
                    _require(item, "request_data_size", where),
                    "bytes",
                    f"{where}.request_data_size",
                ),
                chain=tuple(chain),
            )
        )

    arrivals_doc = _require(_require(doc, "requests", "scenario"), "arrivals", "requests")
    arrivals = []
    for k, row in enumerate(_as_list(arrivals_doc, "requests.arrivals")):
        out_row = []
        for i, cell in enumerate(_as_list(row, f"requests.arrivals[{k}]")):
            if not isinstance(cell, (int, float)) or isinstance(cell, bool):
                raise ScenarioFormatError(f"requests.arrivals[{k}][{i}]: expected a number")
            out_row.append(float(cell))
        arrivals.append(out_row)

    return Scenario(
        servers=tuple(servers),
        bandwidth=BandwidthMatrix(np.array(rows, dtype=float)),
        applications=tuple(applications),
        requests=RequestDistribution(np.array(arrivals, dtype=float)),
    )


def scenario_to_dict(s: Scenario) -> dict:
    """Inverse of :func:`scenario_from_dict`; values keep exact canonical magnitude."""
    def num(x: float):
        # floats that carry an integral value round-trip more readably as ints
        return int(x) if float(x).is_integer() else float(x)

    return {
        "servers": [
            {
                "id": srv.id,
                "cpu_capacity": render_quantity(srv.cpu_capacity, "frequency"),
                "mem_capacity": render_quantity(srv.mem_capacity, "bytes"),
            }
            for srv in s.servers
        ],
        "bandwidth": {"bw": [[num(x) for x in row] for row in s.bandwidth.bw.tolist()]},
        "applications": [
            {
                "id": app.id,
                "priority": float(app.priority),
                "request_data_size": render_quantity(app.request_data_size, "bytes"),
                "chain": [
                    {
                        "cpu_demand": render_quantity(ms.cpu_demand, "frequency"),
                        "mem_demand": render_quantity(ms.mem_demand, "bytes"),
                        "cycles_per_request": render_quantity(ms.cycles_per_request, "cycles"),
                        **(
                            {"out_edge_data": render_quantity(ms.out_edge_data, "bytes")}
                            if ms.out_edge_data is not None
                            else {}
                        ),
                    }
                    for ms in app.chain
                ],
            }
            for app in s.applications
        ],
        "requests": {"arrivals": [[num(x) for x in row] for row in s.requests.arrivals.tolist()]},
    }


def load_yaml(text: str, what: str) -> Any:
    """Parse a YAML document, turning syntax errors into ScenarioFormatError.

    The error message carries ``what`` (typically a file name) and the line
    of the first problem when the parser reports one.
    """
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        at = f" at line {mark.line + 1}" if mark is not None else ""
        raise ScenarioFormatError(f"{what}: invalid YAML{at}: {exc}") from exc


def parse_scenario(text: str) -> Scenario:
    doc = load_yaml(text, "scenario")
    if doc is None:
        raise ScenarioFormatError("scenario: empty document")
    return scenario_from_dict(doc)


def render_scenario(s: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(s), sort_keys=False, default_flow_style=None)


def scheme_to_dict(d: DeploymentScheme) -> dict:
    return {
        "scheme": [
            {"app": a, "position": p, "counts": list(d.counts[(a, p)])}
            for a, p in sorted(d.counts)
        ]
    }


def scheme_from_dict(doc: Any) -> DeploymentScheme:
    entries = _as_list(_require(doc, "scheme", "scheme"), "scheme")
    counts: dict[tuple[int, int], tuple[int, ...]] = {}
    for i, item in enumerate(entries):
        where = f"scheme[{i}]"
        app = int(_require(item, "app", where))
        pos = int(_require(item, "position", where))
        vec = _as_list(_require(item, "counts", where), f"{where}.counts")
        for j, c in enumerate(vec):
            if not isinstance(c, int) or isinstance(c, bool):
                raise ScenarioFormatError(f"{where}.counts[{j}]: expected an integer")
        if (app, pos) in counts:
            raise ScenarioFormatError(f"{where}: duplicate entry for (app={app}, pos={pos})")
        counts[(app, pos)] = tuple(vec)
    return DeploymentScheme(counts)


def parse_scheme(text: str) -> DeploymentScheme:
    doc = load_yaml(text, "scheme")
    if doc is None:
        raise ScenarioFormatError("scheme: empty document")
    return scheme_from_dict(doc)


def render_scheme(d: DeploymentScheme) -> str:
    return yaml.safe_dump(scheme_to_dict(d), sort_keys=False, default_flow_style=None)
