"""Deterministic cooperative scheduler and the run_case entry point.

Each logical thread is a generator. It stops at every call boundary,
``yield`` statement, helper call and lock request; at each stop the
scheduler picks the next thread to advance from the runnable set (threads
not waiting on a held lock). A choice is recorded in the trace only when
two or more threads were runnable, so single-threaded cases have an empty
trace. When live threads remain but none is runnable the case ends with a
DEADLOCK verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from ..rng import SplitMix64, derive_seed
from .case import TestCase
from .kernel import CaseCtx, Kernel
from .report import BugFound, BugReport, EngineFatal

WILDCARD_SALT = 0x5744_4344  # separates the '#' stream from the scheduling stream


class Chooser(Protocol):
    def choose(self, runnable: list[int], steps: list[int]) -> int: ...


class RandomChooser:
    """Uniform choice among runnable threads, driven by the schedule seed."""

    def __init__(self, seed: int) -> None:
        self.rng = SplitMix64(seed)

    def choose(self, runnable: list[int], steps: list[int]) -> int:
        return self.rng.below(len(runnable))


class ReplayError(Exception):
    pass


class TraceChooser:
    """Replays a recorded trace of (thread, step) choices."""

    def __init__(self, trace) -> None:
        self.trace = [tuple(t) for t in trace]
        self.pos = 0

    def choose(self, runnable: list[int], steps: list[int]) -> int:
        if self.pos >= len(self.trace):
            raise ReplayError("trace exhausted before the case finished")
        tid, step = self.trace[self.pos]
        self.pos += 1
        if tid not in runnable or steps[tid] != step:
            raise ReplayError(f"trace entry {self.pos - 1} ({tid}, {step}) does not fit the execution")
        return runnable.index(tid)


class PrefixChooser:
    """Follows a forced prefix of choice indices, then always picks index 0.

    Records the branching factor of every decision so an explorer can
    enumerate the remaining alternatives depth-first.
    """

    def __init__(self, prefix: list[int]) -> None:
        self.prefix = prefix
        self.taken: list[int] = []
        self.widths: list[int] = []

    def choose(self, runnable: list[int], steps: list[int]) -> int:
        i = len(self.taken)
        c = self.prefix[i] if i < len(self.prefix) else 0
        self.taken.append(c)
        self.widths.append(len(runnable))
        return c


@dataclass
class ExecutionResult:
    coverage: frozenset
    verdict: Optional[BugReport]
    statuses: list[list[str]]
    trace: list[tuple[int, int]]
    fatal: Optional[str] = None
    steps: int = 0  # scheduling stops taken, all threads together

    @property
    def title(self) -> Optional[str]:
        return self.verdict.title if self.verdict is not None else None

    def to_json(self) -> dict:
        return {
            "coverage": sorted(self.coverage),
            "verdict": self.verdict.to_json() if self.verdict is not None else None,
            "statuses": self.statuses,
            "trace": [list(t) for t in self.trace],
            "fatal": self.fatal,
        }

    @classmethod
    def from_json(cls, d: dict) -> "ExecutionResult":
        v = d.get("verdict")
        return cls(
            frozenset(d["coverage"]),
            BugReport.from_json(v) if v else None,
            [list(s) for s in d["statuses"]],
            [tuple(t) for t in d["trace"]],  # type: ignore[misc]
            d.get("fatal"),
        )

    def key(self) -> tuple:
        """Everything determinism promises to reproduce."""
        return (self.coverage, self.title, tuple(tuple(s) for s in self.statuses), self.fatal)


def _thread(kernel: Kernel, ctx: CaseCtx, tid: int, calls, out: list[str]):
    gen_call = kernel.gen_call
    for call in calls:
        yield None  # call boundary
        out.append((yield from gen_call(call, tid, ctx)))


def run_case(kernel: Kernel, case: TestCase, chooser: Optional[Chooser] = None, reset: bool = True) -> ExecutionResult:
    if reset:
        kernel.reset()
    if chooser is None:
        chooser = RandomChooser(case.seed)
    ctx = CaseCtx(derive_seed(case.seed, WILDCARD_SALT))
    n = len(case.threads)
    statuses: list[list[str]] = [[] for _ in range(n)]
    gens = [_thread(kernel, ctx, t, calls, statuses[t]) for t, calls in enumerate(case.threads)]
    pending: list = [None] * n
    alive = [True] * n
    steps = [0] * n
    trace: list[tuple[int, int]] = []
    locks = kernel.locks
    verdict = None
    fatal = None
    live = n
    while live:
        runnable = [t for t in range(n) if alive[t] and (pending[t] is None or pending[t][0] not in locks)]
        if not runnable:
            blocked = min(t for t in range(n) if alive[t])
            verdict = BugReport("DEADLOCK", *pending[blocked][1])
            break
        if len(runnable) == 1:
            t = runnable[0]
        else:
            t = runnable[chooser.choose(runnable, steps)]
            trace.append((t, steps[t]))
        req = pending[t]
        if req is not None:
            locks[req[0]] = t
        steps[t] += 1
        try:
            pending[t] = next(gens[t])
        except StopIteration:
            alive[t] = False
            pending[t] = None
            live -= 1
        except BugFound as b:
            verdict = b.report
            break
        except EngineFatal as e:
            fatal = str(e)
            break
    for g in gens:
        g.close()
    kernel.verdict = verdict
    return ExecutionResult(frozenset(kernel.cov), verdict, statuses, trace, fatal, sum(steps))


def replay(kernel: Kernel, case: TestCase, trace) -> ExecutionResult:
    return run_case(kernel, case, TraceChooser(trace))
