import os

import pytest

from dmnchat.botgen import assemble_agent
from dmnchat.dmn_xml import parse_dmn

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def fixture_text(name: str) -> str:
    with open(fixture_path(name), encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def membership_model():
    return parse_dmn(fixture_text("membership.dmn"))


@pytest.fixture(scope="session")
def kpi_model():
    return parse_dmn(fixture_text("kpi.dmn"))


@pytest.fixture(scope="session")
def membership_bundle(membership_model):
    return assemble_agent(membership_model, seed=42)


@pytest.fixture(scope="session")
def kpi_bundle(kpi_model):
    return assemble_agent(kpi_model, seed=42)


@pytest.fixture()
def membership_xml():
    return fixture_text("membership.dmn")


@pytest.fixture()
def kpi_xml():
    return fixture_text("kpi.dmn")
