"""Exhaustive interleaving enumeration (depth-first over scheduler choices)."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Optional

from .case import TestCase
from .kernel import Kernel
from .sched import ExecutionResult, PrefixChooser, run_case


class ExplosionError(Exception):
    pass


@dataclass
class Exploration:
    runs: int = 0
    verdicts: Counter = field(default_factory=Counter)  # title (or None) -> number of schedules
    witness: dict = field(default_factory=dict)  # title (or None) -> first trace reaching it
    max_depth: int = 0

    @property
    def verdict_set(self) -> set[Optional[str]]:
        return set(self.verdicts)


def enumerate_interleavings(kernel: Kernel, case: TestCase, max_runs: int = 200_000) -> Exploration:
    """Run ``case`` under every distinct sequence of scheduler choices.

    The search tree is explored depth first: after each run the deepest
    decision with an untried alternative is bumped and everything below it
    is reset to the first choice.
    """
    out = Exploration()
    prefix: list[int] = []
    while True:
        chooser = PrefixChooser(prefix)
        res: ExecutionResult = run_case(kernel, case, chooser)
        out.runs += 1
        title = res.title if res.fatal is None else f"FATAL:{res.fatal}"
        out.verdicts[title] += 1
        out.witness.setdefault(title, res.trace)
        out.max_depth = max(out.max_depth, len(chooser.taken))
        taken, widths = chooser.taken, chooser.widths
        i = len(taken) - 1
        while i >= 0 and taken[i] + 1 >= widths[i]:
            i -= 1
        if i < 0:
            return out
        if out.runs >= max_runs:
            raise ExplosionError(f"more than {max_runs} interleavings")
        prefix = taken[:i] + [taken[i] + 1]


def count_yield_points(kernel: Kernel, case: TestCase) -> int:
    """Scheduling stops in one run of ``case``; the size measure that gates enumeration."""
    return run_case(kernel, case, PrefixChooser([])).steps
