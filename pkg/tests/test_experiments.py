"""Experiment sweeps: presets, record bookkeeping, and CSV output."""

from __future__ import annotations

import csv
from dataclasses import replace

import pytest

from edgeplace.annealing import SaParams
from edgeplace.errors import ScenarioFormatError
from edgeplace.experiments import (
    PLOT_COLUMNS,
    PRESET_NAMES,
    RESULT_COLUMNS,
    ExperimentConfig,
    experiment_config_from_dict,
    plot_csv_rows,
    preset,
    result_csv_rows,
    run_experiment,
    scenario_config,
    write_csv,
)
from edgeplace.generator import GeneratorConfig


def test_preset_names():
    assert PRESET_NAMES == ("fig2", "fig3", "fig4")


def test_fig2_preset_sweeps_request_volume():
    cfg = preset("fig2")
    assert cfg.sweep == "requests"
    assert cfg.values == (2000, 2250, 2500, 2750, 3000)
    assert cfg.base.server_count == 3
    assert cfg.base.chain_length_range == (2, 4)
    assert cfg.base.app_count == 3
    assert cfg.base.priority_mode == (0.5, 0.3, 0.2)


def test_fig3_preset_sweeps_cluster_size():
    cfg = preset("fig3")
    assert cfg.sweep == "servers"
    assert cfg.values == (3, 5, 7)
    assert cfg.base.chain_length_range == (5, 7)
    assert cfg.base.request_total_range == (2000, 2000)


def test_fig4_preset_sweeps_chain_length():
    cfg = preset("fig4")
    assert cfg.sweep == "chain_length"
    assert cfg.values == (2, 4, 6)
    assert cfg.base.server_count == 3
    assert cfg.base.request_total_range == (2000, 2000)


def test_unknown_preset_is_rejected():
    with pytest.raises(ValueError, match="unknown preset 'fig9'"):
        preset("fig9")


def test_scenario_config_applies_the_sweep_variable():
    e = ExperimentConfig(sweep="requests", values=(2500,), base_seed=100)
    cfg = scenario_config(e, 2500, replication=3)
    assert cfg.request_total_range == (2500, 2500)
    assert cfg.seed == 103

    e = ExperimentConfig(sweep="servers", values=(5,))
    assert scenario_config(e, 5, 0).server_count == 5

    e = ExperimentConfig(sweep="chain_length", values=(4,))
    assert scenario_config(e, 4, 1).chain_length_range == (4, 4)


@pytest.mark.parametrize(
    ("kwargs", "message"),
    [
        (dict(sweep="latency"), "sweep must be one of"),
        (dict(values=()), "values must be non-empty"),
        (dict(replications=0), "replications must be at least 1"),
        (dict(algorithms=()), "algorithms must be non-empty"),
        (dict(algorithms=("camd", "magic")), "unknown algorithms"),
    ],
)
def test_experiment_config_validation(kwargs, message):
    with pytest.raises(ValueError, match=message):
        ExperimentConfig(**kwargs)


def _tiny_experiment() -> ExperimentConfig:
    return ExperimentConfig(
        sweep="requests",
        values=(2000, 2200),
        replications=2,
        algorithms=("camd", "random"),
        base=GeneratorConfig(server_count=2, app_count=1, chain_length_range=(1, 2)),
        sa=SaParams(max_sweeps=2, moves_per_temp=10),
        base_seed=5,
    )


def test_run_experiment_produces_sorted_complete_records():
    result = run_experiment(_tiny_experiment())
    assert len(result.records) == 2 * 2 * 2  # values x replications x algorithms
    keys = [(r.sweep_value, r.replication, r.algorithm) for r in result.records]
    assert keys == sorted(keys)
    # both algorithms see the same scenario within a replication
    by_rep = {}
    for r in result.records:
        by_rep.setdefault((r.sweep_value, r.replication), set()).add(r.seed)
    assert all(len(seeds) == 1 for seeds in by_rep.values())
    assert {r.seed for r in result.records} == {5, 6}  # base_seed + replication


def test_run_experiment_objectives_are_reproducible():
    a = run_experiment(_tiny_experiment())
    b = run_experiment(_tiny_experiment())
    assert [r.objective for r in a.records] == [r.objective for r in b.records]


def test_summaries_average_the_records():
    result = run_experiment(_tiny_experiment())
    assert len(result.summaries) == 2 * 2  # values x algorithms
    for summ in result.summaries:
        objs = [
            r.objective
            for r in result.records
            if r.sweep_value == summ.sweep_value and r.algorithm == summ.algorithm
        ]
        assert summ.mean_objective == pytest.approx(sum(objs) / len(objs), rel=1e-12)
        if summ.algorithm == "camd":
            assert summ.camd_reduction_pct is None
        else:
            camd_mean = next(
                s.mean_objective
                for s in result.summaries
                if s.sweep_value == summ.sweep_value and s.algorithm == "camd"
            )
            expected = (summ.mean_objective - camd_mean) / summ.mean_objective * 100
            assert summ.camd_reduction_pct == pytest.approx(expected, rel=1e-12)


def test_result_csv_rows_schema():
    result = run_experiment(_tiny_experiment())
    rows = result_csv_rows(result)
    assert len(rows) == len(result.records) + len(result.summaries)
    assert all(set(row) == set(RESULT_COLUMNS) for row in rows)

    first = rows[0]
    assert first["row_type"] == "result"
    assert first["sweep_variable"] == "requests"
    assert float(first["objective"]) == pytest.approx(result.records[0].objective, rel=1e-8)
    assert first["cpu_feasible"] in ("true", "false")
    assert first["mean_objective"] == "" and first["camd_reduction_pct"] == ""
    # single app: "0:<latency>"
    app, latency = first["per_app_latency"].split(":")
    assert app == "0" and float(latency) > 0

    tail = rows[len(result.records):]
    assert all(row["row_type"] == "summary" for row in tail)
    for row in tail:
        assert row["replication"] == "" and row["objective"] == ""
        assert float(row["mean_objective"]) > 0
        if row["algorithm"] == "camd":
            assert row["camd_reduction_pct"] == ""


def test_plot_csv_rows_mirror_the_summaries():
    result = run_experiment(_tiny_experiment())
    rows = plot_csv_rows(result)
    assert len(rows) == len(result.summaries)
    for row, summ in zip(rows, result.summaries):
        assert tuple(row) == PLOT_COLUMNS
        assert row["algorithm"] == summ.algorithm
        assert float(row["mean_objective"]) == pytest.approx(summ.mean_objective, rel=1e-8)


def test_write_csv_is_deterministic(tmp_path):
    rows = [{"a": "1", "b": "x"}, {"a": "2", "b": ""}]
    p1, p2 = tmp_path / "one.csv", tmp_path / "two.csv"
    write_csv(str(p1), ("a", "b"), rows)
    write_csv(str(p2), ("a", "b"), rows)
    assert p1.read_bytes() == p2.read_bytes()
    with open(p1, newline="") as fh:
        parsed = list(csv.DictReader(fh))
    assert parsed == rows


def test_config_from_empty_dict_is_the_default():
    assert experiment_config_from_dict({}) == ExperimentConfig()


def test_config_from_dict_applies_preset_then_overrides():
    cfg = experiment_config_from_dict(
        {
            "preset": "fig2",
            "replications": 2,
            "values": [2000, 3000],
            "algorithms": ["camd", "random"],
            "base_seed": 9,
            "sa": {"alpha": 0.9, "max_sweeps": 3},
            "generator": {"server_count": 2, "chain_length_range": [1, 2]},
        }
    )
    expected = replace(
        preset("fig2"),
        replications=2,
        values=(2000, 3000),
        algorithms=("camd", "random"),
        base_seed=9,
        sa=replace(preset("fig2").sa, alpha=0.9, max_sweeps=3),
        base=replace(preset("fig2").base, server_count=2, chain_length_range=(1, 2)),
    )
    assert cfg == expected


@pytest.mark.parametrize(
    ("doc", "message"),
    [
        ([1, 2], "expected a mapping"),
        ({"foo": 1}, r"unknown keys \['foo'\]"),
        ({"sweep": "latency"}, "sweep must be one of"),
        ({"replications": "lots"}, "invalid literal"),
        ({"algorithms": ["magic"]}, "unknown algorithms"),
        ({"sa": {"alpha": 2.0}}, "alpha"),
        ({"generator": {"server_count": 0}}, "server_count"),
    ],
)
def test_config_from_dict_rejects_bad_documents(doc, message):
    with pytest.raises(ScenarioFormatError, match=message):
        experiment_config_from_dict(doc, where="sweep config")


def test_config_from_dict_error_names_the_source():
    with pytest.raises(ScenarioFormatError, match="^sweep config:"):
        experiment_config_from_dict({"bogus": 1}, where="sweep config")
