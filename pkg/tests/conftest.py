import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))
sys.path.insert(0, str(ROOT / "tests"))

from paramfuzz.dmir import parse_file  # noqa: E402

CORPUS = ROOT / "src" / "paramfuzz" / "corpus"
CORPUS_FILES = sorted(CORPUS.glob("*.dmir"))


@pytest.fixture(scope="session")
def corpus_programs():
    return {p.stem: parse_file(p) for p in CORPUS_FILES}


@pytest.fixture(scope="session")
def bugbench():
    return parse_file(CORPUS / "bugbench.dmir")


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
