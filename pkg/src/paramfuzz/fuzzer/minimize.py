"""Greedy test-case minimization against a coverage or crash target."""

from __future__ import annotations

from typing import Callable, Union

from ..vkernel.case import Call, TestCase, well_formed
from ..vkernel.sched import ExecutionResult

Target = Union[frozenset, str]
Executor = Callable[[TestCase], ExecutionResult]


class MinimizeError(Exception):
    pass


def achieves(res: ExecutionResult, target: Target) -> bool:
    if isinstance(target, str):
        return res.fatal is None and res.title == target
    return target <= res.coverage


def _single_removals(case: TestCase):
    """Well-formed cases with exactly one call removed, last calls first."""
    positions = [(ti, ci) for ti, ci, _ in case.calls()]
    for ti, ci in reversed(positions):
        threads = [list(t) for t in case.threads]
        del threads[ti][ci]
        cand = case.with_threads(threads)
        if cand.threads and well_formed(cand) is None:
            yield cand


def _cascade_removals(case: TestCase):
    """A producer removed together with every call consuming its handle."""
    for ti, ci, c in reversed(list(case.calls())):
        if c.ret is None:
            continue
        threads = [list(t) for t in case.threads]
        del threads[ti][ci]
        threads = [[x for x in t if x.fd != c.ret] for t in threads]
        cand = case.with_threads(threads)
        if cand.threads and well_formed(cand) is None:
            yield cand


def _simplified(c: Call):
    if c.kind == "op":
        for i, a in enumerate(c.args):
            plain = "" if isinstance(a, str) else 0
            if a != plain:
                args = list(c.args)
                args[i] = plain
                yield c.with_(args=tuple(args))
    if c.kind in ("write_param", "syz_mod_dev") and c.seed != 0:
        yield c.with_(seed=0)
    if c.kind in ("open", "syz_mod_dev") and c.flags != "read":
        yield c.with_(flags="read")


def _simplifications(case: TestCase):
    for ti, ci, c in case.calls():
        for new in _simplified(c):
            threads = [list(t) for t in case.threads]
            threads[ti][ci] = new
            yield case.with_threads(threads)


def minimize(case: TestCase, target: Target, executor: Executor) -> TestCase:
    """Remove calls, then simplify arguments, while ``target`` still holds.

    Every candidate is judged by running it through ``executor`` with its own
    schedule seed, so the result replays deterministically. The loop stops at
    a fixpoint where no single call removal keeps the target.
    """
    if not achieves(executor(case), target):
        raise MinimizeError("the case does not reach its target on replay")
    changed = True
    while changed:
        changed = False
        for gen in (_single_removals, _cascade_removals, _simplifications):
            progress = True
            while progress:
                progress = False
                for cand in gen(case):
                    if achieves(executor(cand), target):
                        case = cand
                        progress = changed = True
                        break
    return case


def is_locally_minimal(case: TestCase, target: Target, executor: Executor) -> bool:
    return not any(achieves(executor(c), target) for c in _single_removals(case))
