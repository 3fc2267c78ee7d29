from pathlib import Path

import pytest

from proddiv.textprep import TokenizedDoc

DATA = Path(__file__).parent / "data"

# crit number -> (passed, detail); filled by the acceptance module
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


SIX_DOCS = [
    "market engine chassis engine dealer fleet",
    "market engine vaccine patent dealer",
    "market vaccine patent trial trial clinic",
    "market engine fleet dealer dealer",
    "market clinic trial vaccine engine",
    "market fleet chassis patent dealer clinic",
]


@pytest.fixture
def six_docs():
    return [TokenizedDoc(i + 1, 2010, s.split()) for i, s in enumerate(SIX_DOCS)]


@pytest.fixture
def sic12_path():
    return DATA / "sic12.csv"


@pytest.fixture
def sic12_rows():
    import csv

    with open(DATA / "sic12.csv", newline="") as fh:
        return {int(r["code"]): (r["division"], r["major_group"], r["industry_group"]) for r in csv.DictReader(fh)}
