"""Corpus of coverage-contributing cases and the crash database."""

from __future__ import annotations

import bisect
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

from ..rng import SplitMix64
from ..vkernel.case import TestCase
from ..vkernel.sched import ExecutionResult


@dataclass(frozen=True)
class CorpusEntry:
    case: TestCase
    edges: frozenset  # edges this entry was first to reach
    coverage: frozenset  # everything it reaches


class Corpus:
    """Minimized cases, picked with weight proportional to how rare their edges are."""

    def __init__(self) -> None:
        self.entries: list[CorpusEntry] = []
        self.freq: Counter = Counter()
        self._cum: Optional[list[float]] = None

    def __len__(self) -> int:
        return len(self.entries)

    def add(self, case: TestCase, edges, coverage) -> CorpusEntry:
        e = CorpusEntry(case, frozenset(edges), frozenset(coverage))
        self.entries.append(e)
        self.freq.update(e.coverage)
        self._cum = None
        return e

    def weight(self, e: CorpusEntry) -> float:
        return sum(1.0 / self.freq[x] for x in e.coverage) or 1.0

    def pick(self, rng: SplitMix64) -> CorpusEntry:
        if self._cum is None:
            acc = 0.0
            cum = []
            for e in self.entries:
                acc += self.weight(e)
                cum.append(acc)
            self._cum = cum
        x = rng.random() * self._cum[-1]
        return self.entries[min(bisect.bisect_right(self._cum, x), len(self.entries) - 1)]

    def cases(self) -> list[TestCase]:
        return [e.case for e in self.entries]

    def revalidate(self, executor: Callable[[TestCase], ExecutionResult]) -> list[int]:
        """Indices of entries that no longer reach their tagged edges."""
        return [i for i, e in enumerate(self.entries) if not e.edges <= executor(e.case).coverage]

    def save(self, directory: Path) -> None:
        directory.mkdir(parents=True, exist_ok=True)
        for i, e in enumerate(self.entries):
            doc = {"edges": sorted(e.edges), "case": e.case.to_json()}
            (directory / f"{i:05d}.case.json").write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory: Path, executor: Callable[[TestCase], ExecutionResult]) -> "Corpus":
        """Read a saved corpus, dropping entries that no longer reach their edges."""
        out = cls()
        for p in sorted(Path(directory).glob("*.case.json")):
            doc = json.loads(p.read_text(encoding="utf-8"))
            case = TestCase.from_json(doc["case"])
            edges = frozenset(doc["edges"])
            res = executor(case)
            if edges <= res.coverage:
                out.add(case, edges, res.coverage)
        return out


@dataclass
class CrashRecord:
    title: str
    first_case: TestCase
    first_seed: int
    first_exec: int
    count: int = 1
    repro: Optional[TestCase] = None
    repro_trace: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "count": self.count,
            "first_exec": self.first_exec,
            "first_seed": self.first_seed,
            "repro_threads": len(self.repro.threads) if self.repro else None,
            "repro_calls": self.repro.n_calls if self.repro else None,
        }


class CrashDB:
    def __init__(self) -> None:
        self.records: dict[str, CrashRecord] = {}

    def __contains__(self, title: str) -> bool:
        return title in self.records

    def titles(self) -> list[str]:
        return sorted(self.records)

    def add(self, title: str, case: TestCase, exec_no: int) -> tuple[CrashRecord, bool]:
        rec = self.records.get(title)
        if rec is not None:
            rec.count += 1
            return rec, False
        rec = CrashRecord(title, case, case.seed, exec_no)
        self.records[title] = rec
        return rec, True

    def save(self, directory: Path) -> None:
        for title in self.titles():
            rec = self.records[title]
            d = directory / title
            d.mkdir(parents=True, exist_ok=True)
            (d / "first.case.json").write_text(rec.first_case.dumps(), encoding="utf-8")
            (d / "repro.case.json").write_text((rec.repro or rec.first_case).dumps(), encoding="utf-8")
            info = rec.to_json()
            info["repro_trace"] = [list(t) for t in rec.repro_trace]
            (d / "info.json").write_text(json.dumps(info, indent=1) + "\n", encoding="utf-8")

    @staticmethod
    def load_repros(directory: Path) -> dict[str, TestCase]:
        """title -> stored reproducer, read back from a campaign's crashes/ tree."""
        out = {}
        for p in sorted(Path(directory).rglob("repro.case.json")):
            title = p.parent.relative_to(directory).as_posix()
            out[title] = TestCase.loads(p.read_text(encoding="utf-8"))
        return out
