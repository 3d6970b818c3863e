"""HTTP service endpoints, exercised in-process."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

import edgeplace
from edgeplace.experiments import RESULT_COLUMNS
from edgeplace.files import scenario_from_dict, scenario_to_dict, scheme_from_dict, scheme_to_dict
from edgeplace.generator import GeneratorConfig, generate_scenario
from edgeplace.model import ApplicationSpec, validate_scheme
from edgeplace.service import create_app
from scenariolib import KB, build, ms, pipeline_scenario, scheme


@pytest.fixture(scope="module")
def client() -> TestClient:
    return TestClient(create_app())


@pytest.fixture()
def pipeline_doc() -> dict:
    return scenario_to_dict(pipeline_scenario())


def _pipeline_scheme_doc() -> dict:
    return scheme_to_dict(scheme({(0, 0): (2, 0), (0, 1): (0, 1)}))


def test_health(client):
    body = client.get("/health").json()
    assert body == {"status": "ok", "version": edgeplace.__version__}


def test_generate_matches_the_library(client):
    req = {"server_count": 2, "app_count": 1, "seed": 3}
    resp = client.post("/generate", json=req)
    assert resp.status_code == 200
    got = scenario_from_dict(resp.json()["scenario"])
    want = generate_scenario(GeneratorConfig(server_count=2, app_count=1, seed=3))
    assert got == want
    assert client.post("/generate", json=req).json() == resp.json()


def test_generate_rejects_bad_config(client):
    resp = client.post("/generate", json={"server_count": 0})
    assert resp.status_code == 400
    assert "server_count must be at least 1" in resp.json()["detail"]["message"]


def test_validate_accepts_a_sound_scenario(client, pipeline_doc):
    body = client.post("/validate", json={"scenario": pipeline_doc}).json()
    assert body == {"valid": True, "problems": []}


def test_validate_reports_problems_without_erroring(client, pipeline_doc):
    pipeline_doc["servers"][0]["cpu_capacity"] = -1
    resp = client.post("/validate", json={"scenario": pipeline_doc})
    assert resp.status_code == 200
    body = resp.json()
    assert body["valid"] is False
    assert any("non-positive" in p for p in body["problems"])


def test_validate_rejects_malformed_documents(client, pipeline_doc):
    del pipeline_doc["servers"][0]["cpu_capacity"]
    resp = client.post("/validate", json={"scenario": pipeline_doc})
    assert resp.status_code == 400
    assert "missing field" in resp.json()["detail"]["message"]


def test_evaluate_returns_the_closed_form_latency(client, pipeline_doc):
    resp = client.post(
        "/evaluate", json={"scenario": pipeline_doc, "scheme": _pipeline_scheme_doc()}
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["objective"] == pytest.approx(1.5 + 8.0e-4, rel=1e-12)
    assert body["per_app_latency"]["0"] == pytest.approx(body["objective"], rel=1e-12)
    assert body["cpu_violation"] == [0, 0]
    assert body["mem_violation"] == [0, 0]
    assert body["unservable"] == []
    assert body["all_servable"] and body["capacity_ok"] and body["feasible"]


def test_evaluate_treats_missing_entries_as_unservable(client, pipeline_doc):
    doc = scheme_to_dict(scheme({(0, 0): (2, 0)}))  # stage 1 absent
    body = client.post("/evaluate", json={"scenario": pipeline_doc, "scheme": doc}).json()
    assert body["unservable"] == [{"app": 0, "position": 1}]
    assert body["all_servable"] is False and body["feasible"] is False
    assert body["per_app_latency"] == {}
    assert body["objective"] == 0.0


def test_evaluate_reports_capacity_violations_as_success(client, pipeline_doc):
    doc = scheme_to_dict(scheme({(0, 0): (21, 0), (0, 1): (0, 1)}))
    body = client.post("/evaluate", json={"scenario": pipeline_doc, "scheme": doc}).json()
    assert body["cpu_violation"][0] > 0
    assert body["capacity_ok"] is False and body["feasible"] is False
    assert body["all_servable"] is True


def test_evaluate_rejects_structural_mismatches(client, pipeline_doc):
    doc = scheme_to_dict(
        scheme({(0, 0): (2, 0, 0), (0, 1): (0, 1, 0)})  # three servers, scenario has two
    )
    resp = client.post("/evaluate", json={"scenario": pipeline_doc, "scheme": doc})
    assert resp.status_code == 400
    assert any("vector length" in p for p in resp.json()["detail"]["problems"])


def test_evaluate_rejects_malformed_schemes(client, pipeline_doc):
    doc = {"scheme": [{"app": 0, "position": 0, "counts": [1.5, 0]}]}
    resp = client.post("/evaluate", json={"scenario": pipeline_doc, "scheme": doc})
    assert resp.status_code == 400
    assert "expected an integer" in resp.json()["detail"]["message"]


@pytest.fixture(scope="module")
def small_doc() -> dict:
    s = generate_scenario(GeneratorConfig(server_count=2, app_count=2, seed=1))
    return scenario_to_dict(s)


def test_deploy_camd_returns_trace_and_valid_scheme(client, small_doc):
    req = {"scenario": small_doc, "algorithm": "camd", "params": {"seed": 4}}
    resp = client.post("/deploy", json=req)
    assert resp.status_code == 200
    body = resp.json()
    assert body["algorithm"] == "camd"
    assert body["termination"] in ("converged", "max_sweeps")
    assert body["trace"], "camd must report its annealing trace"
    assert set(body["trace"][0]) == {
        "sweep",
        "current_objective",
        "best_objective",
        "accepted_moves",
    }
    assert body["repair_infeasible"] == []
    assert body["runtime_s"] > 0
    assert body["evaluation"]["feasible"] is True

    s = scenario_from_dict(small_doc)
    assert validate_scheme(s, scheme_from_dict(body["scheme"])) == []
    assert client.post("/deploy", json=req).json()["scheme"] == body["scheme"]


def test_deploy_baselines_have_no_trace(client, small_doc):
    body = client.post(
        "/deploy", json={"scenario": small_doc, "algorithm": "random"}
    ).json()
    assert body["trace"] is None and body["termination"] is None


def test_deploy_rejects_unknown_algorithms(client, small_doc):
    resp = client.post("/deploy", json={"scenario": small_doc, "algorithm": "magic"})
    assert resp.status_code == 400
    assert "unknown algorithm" in resp.json()["detail"]["message"]


def test_deploy_rejects_bad_annealing_params(client, small_doc):
    resp = client.post(
        "/deploy", json={"scenario": small_doc, "params": {"alpha": 2.0}}
    )
    assert resp.status_code == 400
    assert "alpha" in resp.json()["detail"]["message"]


def test_deploy_rejects_undersized_clusters(client):
    app = ApplicationSpec(
        id=0, priority=1.0, request_data_size=KB, chain=(ms(rate=100, mem_gb=150.0),)
    )
    doc = scenario_to_dict(build([app], [[100.0, 0.0]], mem_gb=70.0))  # 140 GB total
    resp = client.post("/deploy", json={"scenario": doc})
    assert resp.status_code == 400
    assert "cannot host" in resp.json()["detail"]["message"]


def test_deploy_flags_instances_no_server_can_hold(client):
    # aggregate memory (200 GB) covers the 150 GB instance, but no single
    # server does: sizing succeeds, repair drops the replica and says so
    app = ApplicationSpec(
        id=0, priority=1.0, request_data_size=KB, chain=(ms(rate=100, mem_gb=150.0),)
    )
    doc = scenario_to_dict(build([app], [[100.0, 0.0]]))  # two 100 GB servers
    resp = client.post("/deploy", json={"scenario": doc})
    assert resp.status_code == 200
    body = resp.json()
    assert body["repair_infeasible"] == [{"app": 0, "position": 0}]
    assert body["evaluation"]["all_servable"] is False


def test_compare_runs_every_requested_algorithm(client, small_doc):
    resp = client.post(
        "/compare",
        json={"scenario": small_doc, "algorithms": ["camd", "random"]},
    )
    assert resp.status_code == 200
    entries = resp.json()["results"]
    assert [e["algorithm"] for e in entries] == ["camd", "random"]
    for e in entries:
        assert e["objective"] > 0
        assert isinstance(e["all_servable"], bool)
        assert isinstance(e["capacity_ok"], bool)
        assert e["runtime_s"] > 0


def test_compare_defaults_to_all_algorithms(client, small_doc):
    entries = client.post("/compare", json={"scenario": small_doc}).json()["results"]
    assert [e["algorithm"] for e in entries] == ["camd", "greedy_spread", "ceil_sized", "random"]


def test_sweep_runs_a_tiny_config(client):
    req = {
        "config": {
            "values": [2000],
            "replications": 1,
            "algorithms": ["random"],
            "generator": {"server_count": 2, "app_count": 1, "chain_length_range": [1, 2]},
        }
    }
    resp = client.post("/sweep", json=req)
    assert resp.status_code == 200
    body = resp.json()
    assert body["columns"] == list(RESULT_COLUMNS)
    assert len(body["rows"]) == 2  # one result row + one summary row
    assert body["rows"][0]["row_type"] == "result"
    assert body["rows"][1]["row_type"] == "summary"
    assert body["plot_columns"] == ["sweep_value", "algorithm", "mean_objective"]
    assert len(body["plot_rows"]) == 1


def test_sweep_preset_with_overrides(client):
    req = {
        "preset": "fig2",
        "config": {"values": [2000], "replications": 1, "algorithms": ["ceil_sized"]},
    }
    body = client.post("/sweep", json=req).json()
    assert body["rows"][0]["sweep_variable"] == "requests"
    assert body["rows"][0]["algorithm"] == "ceil_sized"


def test_sweep_rejects_unknown_presets_and_keys(client):
    resp = client.post("/sweep", json={"preset": "fig9"})
    assert resp.status_code == 400
    assert "unknown preset" in resp.json()["detail"]["message"]

    resp = client.post("/sweep", json={"config": {"bogus": 1}})
    assert resp.status_code == 400
    assert "unknown keys" in resp.json()["detail"]["message"]
