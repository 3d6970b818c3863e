from __future__ import annotations

import pytest

from scenariolib import pipeline_scenario, sizing_scenario, two_app_scenario


@pytest.fixture
def pipeline():
    return pipeline_scenario()


@pytest.fixture
def sizing_case():
    return sizing_scenario()


@pytest.fixture
def two_apps():
    return two_app_scenario()
