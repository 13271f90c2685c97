import sys
from pathlib import Path

import pytest

from kog.parser import parse_file

CORPUS = Path(__file__).resolve().parent.parent / "src" / "kog" / "corpus"
POSITIVE = ["editor", "active", "groups", "discovery", "clients", "upgrade"]


@pytest.fixture
def corpus():
    def load(name):
        return parse_file(CORPUS / f"{name}.kog")
    return load


def pytest_terminal_summary(terminalreporter):
    results = None
    for mod in list(sys.modules.values()):
        results = getattr(mod, "ACCEPTANCE_RESULTS", None)
        if results:
            break
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        title, ok, detail = results[n]
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  ({detail})"
        terminalreporter.write_line(line)
