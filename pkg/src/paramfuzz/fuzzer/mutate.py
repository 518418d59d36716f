"""Test-case mutation, including the relation move.

Every operator either returns a well-formed case or None, in which case the
mutator falls through to another operator.
"""

from __future__ import annotations

from typing import Optional, Sequence

from ..rng import SplitMix64
from ..vkernel.case import Call, TestCase, well_formed
from .build import Builder, follows_value, fresh_resource, resources_of

RELATION_P = 0.3
NEW_THREAD_P = 0.2

# generic operators and their weights
OPERATORS = (
    ("insert", 30),
    ("remove", 10),
    ("replace", 8),
    ("mutate_arg", 30),
    ("splice", 8),
    ("reseed", 14),
)


def _threads(case: TestCase) -> list[list[Call]]:
    return [list(t) for t in case.threads]


def _finish(case: TestCase, threads: list[list[Call]], builder: Builder, seed: Optional[int] = None) -> Optional[TestCase]:
    out = TestCase(tuple(tuple(t) for t in threads if t), case.seed if seed is None else seed)
    if not out.threads:
        return None
    if well_formed(out, builder.max_threads, builder.max_calls) is not None:
        return None
    return out


def _types_elsewhere(builder: Builder, threads: list[list[Call]], ti: int) -> dict[str, str]:
    return {
        c.ret: builder.resource_type(c)  # type: ignore[misc]
        for tj, t in enumerate(threads)
        if tj != ti
        for c in t
        if c.ret is not None
    }


def remove_with_dependents(threads: list[list[Call]], ti: int, ci: int) -> list[list[Call]]:
    """Drop one call and, if it produced a handle, every call consuming it."""
    gone = threads[ti][ci]
    out = [list(t) for t in threads]
    del out[ti][ci]
    if gone.ret is not None:
        out = [[c for c in t if c.fd != gone.ret] for t in out]
    return out


class Mutator:
    def __init__(self, builder: Builder, relation_p: float = RELATION_P) -> None:
        self.b = builder
        self.relation_p = relation_p if builder.mode == "syzlang_mutation" else 0.0
        self.ops = [getattr(self, "op_" + name) for name, _ in OPERATORS]
        self.weights = [w for _, w in OPERATORS]
        self.stats: dict[str, int] = {name: 0 for name, _ in OPERATORS}
        self.stats["relation"] = 0

    def mutate(self, case: TestCase, corpus: Sequence[TestCase], rng: SplitMix64) -> TestCase:
        if self.relation_p and rng.chance(self.relation_p):
            out = self.op_relation(case, corpus, rng)
            if out is not None:
                self.stats["relation"] += 1
                return out
        for _ in range(8):
            i = rng.weighted_index(self.weights)
            out = self.ops[i](case, corpus, rng)
            if out is not None:
                self.stats[OPERATORS[i][0]] += 1
                return out
        self.stats["reseed"] += 1
        return case.with_seed(rng.next_u64())

    # -- generic operators -------------------------------------------------

    def op_insert(self, case, corpus, rng) -> Optional[TestCase]:
        b = self.b
        threads = _threads(case)
        if len(threads) < b.max_threads and rng.chance(NEW_THREAD_P):
            threads.append([])
        ti = rng.below(len(threads))
        t = threads[ti]
        pos = rng.randint(0, len(t))
        d = rng.choice(b.insertable)
        calls = b.instantiate(d, rng, t[:pos], resources_of(case), _types_elsewhere(b, threads, ti))
        if len(t) + len(calls) > b.max_calls:
            return None
        t[pos:pos] = calls
        return _finish(case, threads, b)

    def op_remove(self, case, corpus, rng) -> Optional[TestCase]:
        if case.n_calls <= 1:
            return None
        ti, ci, _ = rng.choice(list(case.calls()))
        return _finish(case, remove_with_dependents(_threads(case), ti, ci), self.b)

    def op_replace(self, case, corpus, rng) -> Optional[TestCase]:
        b = self.b
        ti, ci, old = rng.choice(list(case.calls()))
        threads = _threads(case)
        rtype = b.resource_type(old)
        if old.ret is not None:
            prods = b.producers.get(rtype, [])  # type: ignore[arg-type]
            if not prods:
                return None
            new = b.producer_call(rng.choice(prods), rng, old.ret)
        elif old.kind == "op":
            cons = b.consumers.get(rtype, [])  # type: ignore[arg-type]
            if not cons:
                return None
            new = b.op_call(rng.choice(cons), rng, old.fd)  # type: ignore[arg-type]
        else:
            if not b.write_params:
                return None
            new = b.write_call(rng.choice(b.write_params), rng)
        threads[ti][ci] = new
        return _finish(case, threads, b)

    def op_mutate_arg(self, case, corpus, rng) -> Optional[TestCase]:
        ti, ci, c = rng.choice(list(case.calls()))
        new = self.mutate_call(c, rng)
        if new is None:
            return None
        threads = _threads(case)
        threads[ti][ci] = new
        return _finish(case, threads, self.b)

    def mutate_call(self, c: Call, rng: SplitMix64) -> Optional[Call]:
        b = self.b
        d = b.full.by_name.get(c.desc)
        if d is None:
            return None
        if c.kind == "op":
            if not c.args:
                return None
            i = rng.below(len(c.args))
            spec = d.op_args()[i]
            v = c.args[i]
            if isinstance(v, int) and rng.chance(0.5):
                lo, hi = spec.gen.lo, spec.gen.hi  # type: ignore[attr-defined]
                v = min(hi, max(lo, v + rng.choice((-1, 1, -16, 16)) if rng.chance(0.7) else v ^ (1 << rng.below(32))))
            else:
                v = spec.gen.sample(rng)[0]
            args = list(c.args)
            args[i] = v
            return c.with_(args=tuple(args))
        if c.kind == "open":
            if rng.chance(0.5):
                return c.with_(flags=d.arg("flags").gen.sample(rng)[0])  # type: ignore[union-attr]
            return c.with_(path=d.arg("dev_path").gen.sample(rng)[0])  # type: ignore[union-attr]
        if c.kind == "write_param":
            r = rng.below(4)
            if r == 0:
                return c.with_(seed=d.arg("rng_seed").gen.sample(rng)[0])  # type: ignore[union-attr]
            if r == 1 and c.path in d.arg("param_path").gen.patterns:  # type: ignore[union-attr]
                return c.with_(path=d.arg("param_path").gen.sample(rng)[0])  # type: ignore[union-attr]
            return c.with_(value=d.arg("param_val").gen.sample(rng)[0])  # type: ignore[union-attr]
        # syz_mod_dev
        r = rng.below(5)
        if r == 0:
            path, value = b.mod_dev_param(d, rng)
            return c.with_(path=path, value=value)
        if r == 1:
            return c.with_(seed=d.arg("rng_seed").gen.sample(rng)[0])  # type: ignore[union-attr]
        if r == 2:
            return c.with_(flags=d.arg("flags").gen.sample(rng)[0])  # type: ignore[union-attr]
        value = follows_value(b, c.path, rng)  # type: ignore[arg-type]
        return c.with_(value=value) if value is not None else None

    def op_splice(self, case, corpus, rng) -> Optional[TestCase]:
        b = self.b
        if not corpus:
            return None
        donor = rng.choice(corpus)
        if donor is case or not donor.threads:
            return None
        src = [c for c in rng.choice(donor.threads) if c.desc in b.by_name]
        # keep only ops whose handles the donor thread produces itself
        own = {c.ret for c in src if c.ret}
        src = [c for c in src if c.kind != "op" or c.fd in own]
        if not src:
            return None
        taken = set(resources_of(case))
        rename = {}
        for c in src:
            if c.ret:
                rename[c.ret] = fresh_resource(taken)
                taken.add(rename[c.ret])
        src = [c.with_(ret=rename[c.ret]) if c.ret else c.with_(fd=rename[c.fd]) if c.fd else c for c in src]
        threads = _threads(case)
        if len(threads) < b.max_threads and rng.chance(0.5):
            threads.append(src[: b.max_calls])
        else:
            ti = rng.below(len(threads))
            room = b.max_calls - len(threads[ti])
            if room <= 0:
                return None
            threads[ti] += src[:room]
        return _finish(case, threads, b)

    def op_reseed(self, case, corpus, rng) -> Optional[TestCase]:
        return case.with_seed(rng.next_u64())

    # -- relation move -----------------------------------------------------

    def op_relation(self, case, corpus, rng) -> Optional[TestCase]:
        """Write a parameter of a device related to one the case touches, on another thread.

        A device is touched when an op runs on it or one of its attribute
        files is written.
        """
        b = self.b
        producers = {c.ret: c for _, _, c in case.calls() if c.ret}
        targets = []
        for ti, _, c in case.calls():
            if c.kind == "op":
                p = producers.get(c.fd)
                if p is None:
                    continue
                devs = b.devices_of(p.dev if p.kind == "syz_mod_dev" else p.path)  # type: ignore[arg-type]
            elif c.kind == "write_param":
                devs = b.devices_of_param(c.path)  # type: ignore[arg-type]
            else:
                continue
            targets += [(ti, dev) for dev in devs]
        if not targets:
            return None
        ti, dev = rng.choice(targets)
        related = [p for p in b.related.get(dev, ()) if b.path_desc.get(p) in b.by_name]
        if not related:
            return None
        path = rng.choice(related)
        call = b.write_call(b.by_name[b.path_desc[path]], rng, path=path)
        threads = _threads(case)
        others = [i for i in range(len(threads)) if i != ti and len(threads[i]) < b.max_calls]
        if len(threads) < b.max_threads and (not others or rng.chance(0.5)):
            threads.append([call])
        elif others:
            tj = rng.choice(others)
            threads[tj].insert(rng.randint(0, len(threads[tj])), call)
        else:
            return None
        # the base case's seed was tuned to the old thread set; a new
        # concurrent write needs its own interleaving
        return _finish(case, threads, b, seed=rng.next_u64())


def mutate(case: TestCase, corpus: Sequence[TestCase], builder: Builder, rng: SplitMix64, relation_p: float = RELATION_P) -> TestCase:
    """One mutation of ``case``; see :class:`Mutator`."""
    return Mutator(builder, relation_p).mutate(case, corpus, rng)
