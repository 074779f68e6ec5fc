from __future__ import annotations

from pathlib import Path

import pytest

from atwl.syntax import parse_file

FIXTURES = Path(__file__).parent / "fixtures"

GOLDEN = FIXTURES / "cluster-calendar.atwl"
LISTING = FIXTURES / "example_workflow.atwl"
MUTATIONS = {
    "E001": FIXTURES / "duplicate_id.atwl",
    "E002": FIXTURES / "undeclared_input.atwl",
    "E003": FIXTURES / "given_as_output.atwl",
    "E004": FIXTURES / "cycle.atwl",
}


@pytest.fixture(scope="session")
def golden_workflow():
    result = parse_file(GOLDEN)
    assert result.ok, [d.format() for d in result.diagnostics]
    return result.workflow


@pytest.fixture(scope="session")
def listing_workflow():
    result = parse_file(LISTING)
    assert result.ok, [d.format() for d in result.diagnostics]
    return result.workflow
