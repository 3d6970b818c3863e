"""Model invariants: scenario validation, scheme structure, usage accounting."""

from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest

from edgeplace.model import (
    ApplicationSpec,
    BandwidthMatrix,
    DeploymentScheme,
    MicroserviceSpec,
    RequestDistribution,
    Scenario,
    ServerSpec,
    server_usage,
    validate_scenario,
    validate_scheme,
)
from scenariolib import GB, GHZ, KB, build, grid_bandwidth, ms


def test_hand_built_scenarios_are_valid(pipeline, sizing_case, two_apps):
    for s in (pipeline, sizing_case, two_apps):
        assert validate_scenario(s) == []


def test_non_dense_server_ids_flagged(pipeline):
    servers = (replace(pipeline.servers[0], id=1), pipeline.servers[1])
    problems = validate_scenario(replace(pipeline, servers=servers))
    assert any("servers[0].id" in p for p in problems)


def test_non_positive_capacities_flagged(pipeline):
    servers = (
        replace(pipeline.servers[0], cpu_capacity=0),
        replace(pipeline.servers[1], mem_capacity=-1),
    )
    problems = validate_scenario(replace(pipeline, servers=servers))
    assert any("servers[0].cpu_capacity: non-positive" in p for p in problems)
    assert any("servers[1].mem_capacity: non-positive" in p for p in problems)


def test_bandwidth_shape_mismatch_flagged(pipeline):
    bad = replace(pipeline, bandwidth=grid_bandwidth(3))
    assert any("bandwidth.bw: shape" in p for p in validate_scenario(bad))


def test_bandwidth_sign_and_symmetry_flagged(pipeline):
    asym = np.array([[0.0, 1e9], [2e9, 0.0]])
    problems = validate_scenario(replace(pipeline, bandwidth=BandwidthMatrix(asym)))
    assert any("not symmetric" in p for p in problems)

    nonpos = np.array([[0.0, 0.0], [0.0, 0.0]])
    problems = validate_scenario(replace(pipeline, bandwidth=BandwidthMatrix(nonpos)))
    assert any("bandwidth.bw[0][1]: non-positive" in p for p in problems)


def test_bandwidth_diagonal_is_ignored(pipeline):
    bw = pipeline.bandwidth.bw.copy()
    np.fill_diagonal(bw, -5.0)
    assert validate_scenario(replace(pipeline, bandwidth=BandwidthMatrix(bw))) == []


def test_priority_must_be_strictly_between_zero_and_one(two_apps):
    apps = (
        replace(two_apps.applications[0], priority=1.0),
        replace(two_apps.applications[1], priority=0.0),
    )
    problems = validate_scenario(replace(two_apps, applications=apps))
    assert any("applications[0].priority" in p for p in problems)
    assert any("applications[1].priority" in p for p in problems)


def test_single_app_priority_one_is_allowed(pipeline):
    assert pipeline.applications[0].priority == 1.0
    assert validate_scenario(pipeline) == []


def test_priority_sum_must_be_one(two_apps):
    apps = (
        replace(two_apps.applications[0], priority=0.6),
        replace(two_apps.applications[1], priority=0.3),
    )
    problems = validate_scenario(replace(two_apps, applications=apps))
    assert any("priority sum" in p for p in problems)


def test_priority_sum_tolerates_float_noise(two_apps):
    apps = (
        replace(two_apps.applications[0], priority=0.7 + 2e-10),
        replace(two_apps.applications[1], priority=0.3),
    )
    assert validate_scenario(replace(two_apps, applications=apps)) == []


def test_empty_chain_flagged(pipeline):
    apps = (replace(pipeline.applications[0], chain=()),)
    problems = validate_scenario(replace(pipeline, applications=apps))
    assert any("applications[0].chain: empty chain" in p for p in problems)


def test_out_edge_data_rules(pipeline):
    app = pipeline.applications[0]
    # payload on the last stage is meaningless
    tail = replace(app.chain[1], out_edge_data=10 * KB)
    problems = validate_scenario(
        replace(pipeline, applications=(replace(app, chain=(app.chain[0], tail)),))
    )
    assert any("chain[1].out_edge_data: set on the last" in p for p in problems)
    # a mid-chain stage must declare one
    head = replace(app.chain[0], out_edge_data=None)
    problems = validate_scenario(
        replace(pipeline, applications=(replace(app, chain=(head, app.chain[1])),))
    )
    assert any("chain[0].out_edge_data: missing" in p for p in problems)


def test_non_positive_microservice_demands_flagged(pipeline):
    app = pipeline.applications[0]
    bad = replace(app.chain[0], cpu_demand=0, cycles_per_request=-3)
    problems = validate_scenario(
        replace(pipeline, applications=(replace(app, chain=(bad, app.chain[1])),))
    )
    assert any("chain[0].cpu_demand: non-positive" in p for p in problems)
    assert any("chain[0].cycles_per_request: non-positive" in p for p in problems)


def test_arrivals_shape_and_sign(pipeline):
    wrong_shape = replace(pipeline, requests=RequestDistribution(np.ones((2, 2))))
    assert any("requests.arrivals: shape" in p for p in validate_scenario(wrong_shape))

    negative = replace(pipeline, requests=RequestDistribution(np.array([[5.0, -1.0]])))
    assert any("negative entry" in p for p in validate_scenario(negative))

    zero_row = replace(pipeline, requests=RequestDistribution(np.array([[0.0, 0.0]])))
    assert any("row sums to zero" in p for p in validate_scenario(zero_row))


def test_processing_rate():
    spec = ms(rate=100, cpu_ghz=0.5)
    assert spec.cpu_demand == int(0.5 * GHZ)
    assert spec.cycles_per_request == 5_000_000
    assert spec.processing_rate == pytest.approx(100.0)


def test_request_distribution_total(two_apps):
    assert two_apps.requests.total(0) == pytest.approx(1000.0)
    assert two_apps.requests.total(1) == pytest.approx(1000.0)


def test_scenario_helpers(pipeline):
    assert pipeline.n_servers == 2
    assert pipeline.n_apps == 1
    assert pipeline.total_cpu == 2 * 10 * GHZ
    assert pipeline.total_mem == 2 * 100 * GB
    listed = list(pipeline.microservices())
    assert [(k, v) for k, v, _ in listed] == [(0, 0), (0, 1)]
    assert listed[0][2] is pipeline.applications[0].chain[0]


def test_scheme_counts_are_normalized_to_int_tuples():
    d = DeploymentScheme({(0, 0): [np.int64(2), np.int64(0)]})
    vec = d.block(0, 0)
    assert vec == (2, 0)
    assert all(type(c) is int for c in vec)


def test_scheme_block_missing_entry_message():
    d = DeploymentScheme({(0, 0): (1, 0)})
    with pytest.raises(KeyError, match=r"no entry for \(app=0, pos=1\)"):
        d.block(0, 1)


def test_scheme_with_block_leaves_original_untouched():
    d = DeploymentScheme({(0, 0): (1, 0)})
    d2 = d.with_block(0, 0, (0, 1))
    assert d.block(0, 0) == (1, 0)
    assert d2.block(0, 0) == (0, 1)
    assert d2.total_instances(0, 0) == 1


def test_scheme_equality_ignores_entry_order():
    a = DeploymentScheme({(0, 0): (1, 0), (0, 1): (0, 1)})
    b = DeploymentScheme({(0, 1): (0, 1), (0, 0): (1, 0)})
    assert a == b
    assert a != DeploymentScheme({(0, 0): (1, 0), (0, 1): (1, 0)})


def test_validate_scheme_flags_every_structural_problem(pipeline):
    d = DeploymentScheme(
        {
            (0, 0): (1, 0, 0),  # wrong vector length
            (2, 0): (1, 0),  # no such application
        }
    )
    problems = validate_scheme(pipeline, d)
    assert any("missing entry for (app=0, pos=1)" in p for p in problems)
    assert any("unknown microservice (app=2, pos=0)" in p for p in problems)
    assert any("vector length 3" in p for p in problems)

    negative = DeploymentScheme({(0, 0): (1, -1), (0, 1): (1, 0)})
    assert any("negative count" in p for p in validate_scheme(pipeline, negative))


def test_validate_scheme_accepts_complete_scheme(pipeline):
    d = DeploymentScheme({(0, 0): (2, 0), (0, 1): (0, 1)})
    assert validate_scheme(pipeline, d) == []


def test_server_usage_is_exact_integer_arithmetic(pipeline):
    d = DeploymentScheme({(0, 0): (2, 0), (0, 1): (0, 1)})
    cpu, mem = server_usage(pipeline, d)
    assert cpu.tolist() == [2 * int(0.5 * GHZ), 1 * GHZ]
    assert mem.tolist() == [2 * GB, 1 * GB]
    assert cpu.dtype == np.int64 and mem.dtype == np.int64


def test_server_usage_treats_missing_entries_as_zero(pipeline):
    d = DeploymentScheme({(0, 0): (2, 0)})
    cpu, mem = server_usage(pipeline, d)
    assert cpu.tolist() == [int(1.0 * GHZ), 0]
    assert mem.tolist() == [2 * GB, 0]


def test_builders_produce_expected_shapes():
    s = build(
        [
            ApplicationSpec(
                id=0, priority=1.0, request_data_size=KB, chain=(ms(rate=50),)
            )
        ],
        [[10.0, 0.0, 0.0]],
    )
    assert isinstance(s, Scenario)
    assert s.n_servers == 3
    assert s.bandwidth.bw.shape == (3, 3)
    assert isinstance(s.servers[0], ServerSpec)
    assert isinstance(s.applications[0].chain[0], MicroserviceSpec)
    assert validate_scenario(s) == []
