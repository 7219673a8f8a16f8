from __future__ import annotations

from pathlib import Path

import pytest

from privarch import (
    build_safe_architecture_v1,
    build_safe_architecture_v2,
    parse_grants,
    parse_spec,
    parse_trace,
    relax_with_local_constraints,
)

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def read_fixture(name: str) -> str:
    return (FIXTURES / name).read_text()


@pytest.fixture(scope="session")
def coppa_doc():
    return parse_spec(read_fixture("coppa.parch"))


@pytest.fixture(scope="session")
def coppa_v1_doc():
    return parse_spec(read_fixture("coppa_v1.parch"))


@pytest.fixture(scope="session")
def coppa_safe_doc():
    return parse_spec(read_fixture("coppa_safe.parch"))


@pytest.fixture(scope="session")
def coppa_relaxed_doc():
    return parse_spec(read_fixture("coppa_safe_relaxed.parch"))


@pytest.fixture(scope="session")
def safe_v1(coppa_v1_doc):
    return build_safe_architecture_v1(
        coppa_v1_doc.architecture, coppa_v1_doc.constraints, coppa_v1_doc.options
    )


@pytest.fixture(scope="session")
def safe_v2(coppa_doc):
    return build_safe_architecture_v2(
        coppa_doc.architecture, coppa_doc.constraints, coppa_doc.options
    )


@pytest.fixture(scope="session")
def relaxed_v2(safe_v2):
    grants = parse_grants(read_fixture("coppa.grants"), safe_v2.arch)
    return relax_with_local_constraints(safe_v2, grants)


@pytest.fixture(scope="session")
def witness_events(coppa_relaxed_doc):
    trace = parse_trace(
        read_fixture("coppa_witness.trace"), coppa_relaxed_doc.architecture
    )
    return list(trace)
