"""Valid-value extraction for store callbacks.

``buf`` is the taint source. The store block is explored path by path;
along each path the result of the (single) conversion helper is
constrained by the conditions it passes through, kept as an interval set
over the helper's result domain. Conditions that do not read the input
are device state and fork both ways. At the end, the union of the sets
reaching ``return OK`` is the accepted set, the union reaching
``return EINVAL`` the rejected set. If the two overlap, acceptance depends
on device state and the attribute is left undetermined.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterator, Optional

from ..dmir import ast as A
from ..vkernel.values import EINVAL_NEG, S32_MAX, S32_MIN, U32_MAX
from .intervals import IntervalSet
from .records import AttributeRecord, ValueSpec

MAX_PATHS = 20_000
BYTEWISE = "byte-wise processing"


class Undetermined(Exception):
    pass


def helper_domain(h: A.HelperCall) -> IntervalSet:
    if h.helper == "kstrtouint":
        return IntervalSet.range(0, U32_MAX)
    if h.helper == "kstrtoint":
        return IntervalSet.range(S32_MIN, S32_MAX)
    if h.helper == "kstrtobool":
        return IntervalSet.range(0, 1)
    if h.helper == "match_string":
        return IntervalSet.points([EINVAL_NEG]) | IntervalSet.range(0, len(h.strings or []) - 1)
    return IntervalSet()  # scan: results are not constrained


@dataclass(frozen=True)
class _State:
    helper: Optional[A.HelperCall] = None
    vals: Optional[IntervalSet] = None
    taint: frozenset = frozenset()  # locals holding the helper result
    derived: frozenset = frozenset()  # locals computed from it
    raw: bool = False  # buf read without a helper


@dataclass
class _Outcome:
    code: str
    st: _State


def _reads(e) -> tuple[set[str], bool, bool]:
    """(local names read, whether buf is read, whether non-literal state is read)."""
    names: set[str] = set()
    buf = state = False
    for sub in A.iter_exprs(e):
        if isinstance(sub, A.Name):
            if sub.name == "buf":
                buf = True
            else:
                names.add(sub.name)
        elif isinstance(sub, (A.FieldRef, A.ParamRef)):
            state = True
    return names, buf, state


def _mentions_taint(block: A.Block, names: frozenset) -> bool:
    for s in A.iter_stmts(block):
        for e in A.stmt_exprs(s):
            r, buf, _ = _reads(e)
            if buf or r & names:
                return True
    return False


class _Explorer:
    def __init__(self, body: A.Body) -> None:
        self.body = body
        self.n_paths = 0
        self.bytewise = False

    def run(self) -> list[_Outcome]:
        return list(self.explore(((self.body.block.stmts, 0),), _State()))

    def explore(self, frames: tuple, st: _State) -> Iterator[_Outcome]:
        while frames:
            stmts, i = frames[-1]
            if i >= len(stmts):
                frames = frames[:-1]
                continue
            s = stmts[i]
            frames = frames[:-1] + ((stmts, i + 1),)
            if isinstance(s, A.Return):
                yield self.finish(s.code, st)
                return
            if isinstance(s, A.If):
                for taken, st2 in self.split(s.cond, st):
                    block = s.then if taken else s.orelse
                    inner = frames + ((block.stmts, 0),) if block is not None else frames
                    yield from self.explore(inner, st2)
                return
            if isinstance(s, A.Switch):
                yield from self.switch(s, frames, st)
                return
            if isinstance(s, A.ListIter):
                if isinstance(s.source, A.Name) or _mentions_taint(s.body, st.taint | st.derived):
                    raise Undetermined(BYTEWISE)
                # zero iterations, or one pass through the body
                yield from self.explore(frames, st)
                yield from self.explore(frames + ((s.body.stmts, 0),), st)
                return
            st = self.simple(s, st)
        yield self.finish("OK", st)

    def finish(self, code: str, st: _State) -> _Outcome:
        self.n_paths += 1
        if self.n_paths > MAX_PATHS:
            raise Undetermined("too many paths")
        return _Outcome(code, st)

    def simple(self, s, st: _State) -> _State:
        if isinstance(s, A.Let) and s.is_helper:
            if st.helper is not None:
                raise Undetermined("more than one conversion of the input")
            h: A.HelperCall = s.value  # type: ignore[assignment]
            dom = helper_domain(h)
            return replace(st, helper=h, vals=dom, taint=frozenset(s.names), derived=st.derived - set(s.names))
        if isinstance(s, (A.Let, A.Assign)):
            value = s.value
            names, buf, _ = _reads(value)
            dirty = bool(names & (st.taint | st.derived))
            if buf:
                st = replace(st, raw=True)
            target = s.names[0] if isinstance(s, A.Let) else (s.target.name if isinstance(s.target, A.Name) else None)
            if target is not None:
                taint = st.taint - {target}
                derived = (st.derived | {target}) if dirty or buf else (st.derived - {target})
                st = replace(st, taint=taint, derived=derived)
            return st
        for e in A.stmt_exprs(s):
            names, buf, _ = _reads(e)
            if buf:
                st = replace(st, raw=True)
        return st

    def split(self, cond, st: _State) -> list[tuple[bool, _State]]:
        names, buf, state = _reads(cond)
        if buf:
            raise Undetermined("condition on the raw input string")
        if names & st.derived:
            raise Undetermined("condition over a value derived from the input")
        tainted = names & st.taint
        if not tainted:
            return [(True, st), (False, st)]
        if st.helper is None or st.helper.helper == "scan":
            raise Undetermined("condition over a scanned value")
        if state or names - st.taint:
            raise Undetermined("condition mixes the input with device state")
        dom = helper_domain(st.helper)
        sat = _sat(cond, st.taint, dom)
        out = []
        for taken, part in ((True, sat), (False, dom - sat)):
            v = st.vals & part  # type: ignore[operator]
            if v:
                out.append((taken, replace(st, vals=v)))
        return out

    def switch(self, s: A.Switch, frames: tuple, st: _State) -> Iterator[_Outcome]:
        names, buf, state = _reads(s.subject)
        if buf:
            raise Undetermined("condition on the raw input string")
        if names & st.derived:
            raise Undetermined("condition over a value derived from the input")
        tainted = names & st.taint
        arms = [(b, None) for _, b in s.cases] + [(s.default, "default")]
        if not tainted:
            for b, _ in arms:
                yield from self.explore(frames + ((b.stmts, 0),) if b is not None else frames, st)
            return
        if not isinstance(s.subject, A.Name) or st.helper is None or st.helper.helper == "scan":
            raise Undetermined("condition over a value derived from the input")
        covered = IntervalSet.points(v for v, _ in s.cases)
        for (val, b) in s.cases:
            v = st.vals & IntervalSet.points([val])  # type: ignore[operator]
            if v:
                yield from self.explore(frames + ((b.stmts, 0),), replace(st, vals=v))
        rest = st.vals - covered  # type: ignore[operator]
        if rest:
            inner = frames + ((s.default.stmts, 0),) if s.default is not None else frames
            yield from self.explore(inner, replace(st, vals=rest))


_FLIP = {"<": ">", "<=": ">=", ">": "<", ">=": "<=", "==": "==", "!=": "!="}


def _lit(e) -> Optional[int]:
    if isinstance(e, A.IntLit):
        return e.value
    if isinstance(e, A.BoolLit):
        return int(e.value)
    return None


def _sat(e, taint: frozenset, dom: IntervalSet) -> IntervalSet:
    """Values of the tainted local for which ``e`` is true."""
    lit = _lit(e)
    if lit is not None:
        return dom if lit else IntervalSet()
    if isinstance(e, A.Name) and e.name in taint:
        return dom - IntervalSet.points([0])
    if isinstance(e, A.UnOp) and e.op == "!":
        return dom - _sat(e.operand, taint, dom)
    if isinstance(e, A.BinOp) and e.op == "&&":
        return _sat(e.left, taint, dom) & _sat(e.right, taint, dom)
    if isinstance(e, A.BinOp) and e.op == "||":
        return _sat(e.left, taint, dom) | _sat(e.right, taint, dom)
    if isinstance(e, A.BinOp) and e.op in _FLIP:
        op, left, right = e.op, e.left, e.right
        if _lit(left) is not None and isinstance(right, A.Name):
            op, left, right = _FLIP[op], right, left
        c = _lit(right)
        if isinstance(left, A.Name) and left.name in taint and c is not None:
            lo, hi = dom.lo, dom.hi
            rng = {
                "==": IntervalSet.range(c, c),
                "!=": IntervalSet.range(lo, c - 1) | IntervalSet.range(c + 1, hi),
                "<": IntervalSet.range(lo, c - 1),
                "<=": IntervalSet.range(lo, c),
                ">": IntervalSet.range(c + 1, hi),
                ">=": IntervalSet.range(c, hi),
            }[op]
            return dom & rng
    raise Undetermined("arithmetic on the input inside a condition")


def _reads_buf(body: A.Body) -> bool:
    for s in A.iter_stmts(body.block):
        if isinstance(s, A.Let) and s.is_helper:
            return True
        if isinstance(s, A.ListIter) and isinstance(s.source, A.Name):
            return True
        for e in A.stmt_exprs(s):
            if _reads(e)[1]:
                return True
    return False


def _divides_by_input(body: A.Body) -> bool:
    tainted: set[str] = set()
    for s in A.iter_stmts(body.block):
        if isinstance(s, A.Let) and s.is_helper:
            tainted.update(s.names)
        elif isinstance(s, A.Let):
            if _reads(s.value)[0] & tainted:
                tainted.update(s.names)
    for s in A.iter_stmts(body.block):
        for e in A.stmt_exprs(s):
            for sub in A.iter_exprs(e):
                if isinstance(sub, A.BinOp) and sub.op in ("/", "%"):
                    names, buf, _ = _reads(sub.right)
                    if buf or names & tainted:
                        return True
    return False


def analyze_store(body: A.Body) -> ValueSpec:
    if not _reads_buf(body):
        return ValueSpec("ignores_input")
    try:
        if _divides_by_input(body):
            raise Undetermined("input reaches a divisor")
        outcomes = _Explorer(body).run()
    except Undetermined as u:
        return ValueSpec("undetermined", reason=str(u))

    helpers = {id(o.st.helper): o.st.helper for o in outcomes if o.st.helper is not None}
    if not helpers:
        return _classify_raw(outcomes)
    if len(helpers) > 1:
        return ValueSpec("undetermined", reason="more than one conversion of the input")
    h = next(iter(helpers.values()))
    everything_ok = any(o.code == "OK" and o.st.helper is None for o in outcomes)
    everything_rejected = any(o.code == "EINVAL" and o.st.helper is None for o in outcomes)
    accepted = IntervalSet()
    rejected = IntervalSet()
    for o in outcomes:
        if o.st.helper is None:
            continue
        if o.code == "OK":
            accepted = accepted | o.st.vals  # type: ignore[operator]
        elif o.code == "EINVAL":
            rejected = rejected | o.st.vals  # type: ignore[operator]
    if h.helper == "scan":
        if everything_rejected or (rejected and accepted):
            return ValueSpec("undetermined", reason="acceptance depends on device state")
        if not any(o.code == "OK" and o.st.helper is not None for o in outcomes):
            return ValueSpec("undetermined", reason="no input is accepted")
        if everything_ok:
            return ValueSpec("any_string")
        return ValueSpec("formatted", format=h.fmt)
    if everything_rejected or (accepted & rejected) or (everything_ok and (rejected or everything_rejected)):
        return ValueSpec("undetermined", reason="acceptance depends on device state")
    if everything_ok:
        return ValueSpec("any_string")
    if not accepted:
        return ValueSpec("undetermined", reason="no input is accepted")
    if h.helper == "match_string":
        if EINVAL_NEG in accepted:
            return ValueSpec("any_string")
        seen: list[str] = []
        strings = h.strings or []
        for idx in accepted:
            s = strings[idx]
            if strings.index(s) == idx and s not in seen:
                seen.append(s)
        if not seen:
            return ValueSpec("undetermined", reason="no input is accepted")
        return ValueSpec("string_set", strings=tuple(seen))
    if not accepted.contiguous:
        return ValueSpec("undetermined", reason="accepted values do not form one range")
    kind = {"kstrtouint": "uint_range", "kstrtoint": "int_range", "kstrtobool": "bool"}[h.helper]
    return ValueSpec(kind, lo=accepted.lo, hi=accepted.hi)


def _classify_raw(outcomes: list[_Outcome]) -> ValueSpec:
    codes = {o.code for o in outcomes}
    if "EINVAL" in codes and "OK" in codes:
        return ValueSpec("undetermined", reason="acceptance depends on device state")
    if "OK" not in codes:
        return ValueSpec("undetermined", reason="no input is accepted")
    return ValueSpec("any_string")


def extract_valid_values(program: A.DmirProgram, record: AttributeRecord) -> ValueSpec:
    drv = program.drivers[record.driver]
    for body in drv.bodies():
        if body.kind == "store" and body.name == record.fname:
            return analyze_store(body)
    raise KeyError(f"no store callback for {record.driver}/{record.fname}")

