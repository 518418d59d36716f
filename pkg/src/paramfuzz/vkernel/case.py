"""Test cases: per-thread call sequences plus a schedule seed, with a stable JSON form."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Optional

CALL_KINDS = ("open", "op", "write_param", "syz_mod_dev")
MAX_THREADS = 4
MAX_CALLS = 16

# serialization order of call fields; unset optionals are omitted
_CALL_FIELDS = ("kind", "desc", "path", "dev", "value", "seed", "flags", "fd", "op", "args", "ret")


@dataclass(frozen=True)
class Call:
    kind: str
    desc: str
    path: Optional[str] = None  # open: /dev pattern; write_param / syz_mod_dev: parameter pattern
    dev: Optional[str] = None  # syz_mod_dev: /dev pattern
    value: Optional[str] = None
    seed: int = 0
    flags: Optional[str] = None
    fd: Optional[str] = None  # resource consumed
    op: Optional[str] = None
    args: tuple = ()
    ret: Optional[str] = None  # resource produced

    def to_json(self) -> dict:
        out = {}
        for name in _CALL_FIELDS:
            v = getattr(self, name)
            if name == "args":
                if self.kind == "op":
                    out[name] = list(v)
                continue
            if name == "seed":
                if self.kind in ("write_param", "syz_mod_dev"):
                    out[name] = v
                continue
            if v is not None:
                out[name] = v
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Call":
        unknown = set(d) - set(_CALL_FIELDS)
        if unknown:
            raise ValueError(f"unknown call fields {sorted(unknown)}")
        if d.get("kind") not in CALL_KINDS:
            raise ValueError(f"unknown call kind {d.get('kind')!r}")
        kw = dict(d)
        kw["args"] = tuple(kw.get("args", ()))
        return cls(**kw)

    def with_(self, **kw) -> "Call":
        return replace(self, **kw)


@dataclass(frozen=True)
class TestCase:
    threads: tuple[tuple[Call, ...], ...]
    seed: int = 0
    __test__ = False  # keep pytest from collecting this class

    def to_json(self) -> dict:
        return {"seed": self.seed, "threads": [[c.to_json() for c in t] for t in self.threads]}

    @classmethod
    def from_json(cls, d: dict) -> "TestCase":
        threads = tuple(tuple(Call.from_json(c) for c in t) for t in d["threads"])
        return cls(threads, int(d.get("seed", 0)))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def loads(cls, text: str) -> "TestCase":
        return cls.from_json(json.loads(text))

    @property
    def n_calls(self) -> int:
        return sum(len(t) for t in self.threads)

    def calls(self):
        for ti, t in enumerate(self.threads):
            for ci, c in enumerate(t):
                yield ti, ci, c

    def with_threads(self, threads) -> "TestCase":
        return TestCase(tuple(tuple(t) for t in threads if t), self.seed)

    def with_seed(self, seed: int) -> "TestCase":
        return TestCase(self.threads, seed)


def well_formed(case: TestCase, max_threads: int = MAX_THREADS, max_calls: int = MAX_CALLS) -> Optional[str]:
    """None if ``case`` is well formed, otherwise the reason it is not."""
    if not case.threads:
        return "no threads"
    if len(case.threads) > max_threads:
        return "too many threads"
    produced: dict[str, int] = {}
    for ti, t in enumerate(case.threads):
        if not t:
            return "empty thread"
        if len(t) > max_calls:
            return "too many calls in a thread"
        for c in t:
            if c.ret is not None:
                if c.ret in produced:
                    return f"resource {c.ret} produced twice"
                produced[c.ret] = ti
    for ti, t in enumerate(case.threads):
        seen_local: set[str] = set()
        for c in t:
            if c.kind == "op":
                if c.fd is None or c.fd not in produced:
                    return f"call consumes unknown resource {c.fd}"
                # same-thread producers must come first
                if produced[c.fd] == ti and c.fd not in seen_local:
                    return f"resource {c.fd} consumed before it is produced"
            if c.ret is not None:
                seen_local.add(c.ret)
    return None


def single(calls, seed: int = 0) -> TestCase:
    return TestCase((tuple(calls),), seed)


__all__ = ["Call", "TestCase", "well_formed", "single", "CALL_KINDS", "MAX_THREADS", "MAX_CALLS"]
