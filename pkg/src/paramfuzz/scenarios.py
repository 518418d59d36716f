"""Bundled scenarios: pinned reproducers with their expected outcomes.

A scenario file is JSON under ``corpus/scenarios``; its program is named
relative to the corpus directory::

    {"name": ..., "program": "<corpus file>.dmir", "case": {...},
     "expect_title": <title or null>, "expect_verdicts": [<title or null>, ...],
     "serial_clean": true}

``expect_verdicts`` is the full set of outcomes over every interleaving and
is only checked for two-thread cases small enough to enumerate.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dmir import parse_file
from .vkernel import TestCase, boot, count_yield_points, enumerate_interleavings, run_case

CORPUS_DIR = Path(__file__).resolve().parent / "corpus"
SCENARIO_DIR = CORPUS_DIR / "scenarios"
MAX_ENUM_YIELDS = 12


@dataclass
class Scenario:
    name: str
    program: Path
    case: TestCase
    expect_title: Optional[str]
    expect_verdicts: Optional[set]
    serial_clean: bool = False

    @classmethod
    def load(cls, path: Path) -> "Scenario":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        ev = doc.get("expect_verdicts")
        return cls(
            doc["name"],
            (Path(path).resolve().parent.parent / doc["program"]),
            TestCase.from_json(doc["case"]),
            doc.get("expect_title"),
            set(ev) if ev is not None else None,
            bool(doc.get("serial_clean", False)),
        )


@dataclass
class ScenarioResult:
    name: str
    ok: bool
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: " + "; ".join(
            f"{what} {'ok' if good else 'FAILED'} ({detail})" for what, good, detail in self.checks
        )


class SerialChooser:
    """Runs threads to completion one after another in a fixed order."""

    def __init__(self, order) -> None:
        self.rank = {t: i for i, t in enumerate(order)}

    def choose(self, runnable: list[int], steps: list[int]) -> int:
        return min(range(len(runnable)), key=lambda i: self.rank[runnable[i]])


def load_scenarios(directory: Path = SCENARIO_DIR) -> list[Scenario]:
    return [Scenario.load(p) for p in sorted(Path(directory).glob("*.json"))]


def check_scenario(sc: Scenario) -> ScenarioResult:
    kernel = boot(parse_file(sc.program))
    out = ScenarioResult(sc.name, True)

    def record(what: str, good: bool, detail: str) -> None:
        out.checks.append((what, good, detail))
        out.ok = out.ok and good

    res = run_case(kernel, sc.case)
    record("pinned", res.fatal is None and res.title == sc.expect_title, f"got {res.title}")
    if sc.serial_clean:
        bad = []
        for order in itertools.permutations(range(len(sc.case.threads))):
            r = run_case(kernel, sc.case, SerialChooser(order))
            if r.title is not None or r.fatal is not None:
                bad.append(f"{list(order)} -> {r.title or r.fatal}")
        record("serial", not bad, ", ".join(bad) or "all orders clean")
    if sc.expect_verdicts is not None and len(sc.case.threads) == 2:
        n = count_yield_points(kernel, sc.case)
        if n > MAX_ENUM_YIELDS:
            record("enumerate", False, f"{n} yield points, limit {MAX_ENUM_YIELDS}")
        else:
            ex = enumerate_interleavings(kernel, sc.case)
            got = ex.verdict_set
            record("enumerate", got == sc.expect_verdicts, f"{ex.runs} runs, verdicts {sorted(got, key=str)}")
    return out


def scenario_check(directory: Path = SCENARIO_DIR) -> list[ScenarioResult]:
    return [check_scenario(sc) for sc in load_scenarios(directory)]
