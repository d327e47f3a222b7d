from __future__ import annotations

from pathlib import Path

import pytest

from acclab import fixture_path
from acclab.workbench import load_protocol, load_spec, prepare

GOLDEN = Path(__file__).parent / "golden"

# criterion number -> (ok, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def fixture(name: str) -> str:
    return str(fixture_path(name))


def setup_for(msr: str, acc: str, bound: int = 4, parties: int | None = None, lemma: str | None = None):
    p = load_protocol(fixture(msr))
    s = load_spec(fixture(acc), p)
    return prepare(p, s, lemma, bound, parties)


@pytest.fixture(scope="session")
def db_setup():
    return setup_for("db.msr", "db.acc", bound=4)


@pytest.fixture(scope="session")
def db_single_setup():
    return setup_for("db_single.msr", "db.acc", bound=5)


@pytest.fixture(scope="session")
def campaign_summary():
    from acclab.campaign import run_campaign
    return run_campaign(200, seed=0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
