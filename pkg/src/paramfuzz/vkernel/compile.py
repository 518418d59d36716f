"""Translate DMIR bodies into Python closures.

Blocks that contain no scheduling point compile to plain functions; blocks
that may suspend (``yield``, lock acquisition, helper calls, or any nested
block that does) compile to generator functions. A generator yields
``None`` at a plain scheduling point and ``(lock_key, site)`` when it wants
a lock; the scheduler resumes it only once the lock has been granted.

Every compiled statement returns ``None`` to fall through or a status
string to return from the body.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Callable

from ..dmir import ast as A
from . import values as V
from .report import BugFound, BugReport, EngineFatal


class Frame:
    __slots__ = ("dev", "parent", "shared", "loc", "buf", "tid", "dev_id", "parent_id")

    def __init__(self, dev, parent, shared, buf, tid, dev_id, parent_id) -> None:
        self.dev = dev
        self.parent = parent
        self.shared = shared
        self.loc: dict = {}
        self.buf = buf
        self.tid = tid
        self.dev_id = dev_id
        self.parent_id = parent_id


@dataclass
class CompiledBody:
    body: A.Body
    fn: Callable
    is_gen: bool
    entry_edge: int


def suspends(stmt) -> bool:
    if isinstance(stmt, (A.Yield, A.Lock)):
        return True
    if isinstance(stmt, A.Let):
        return stmt.is_helper
    return any(block_suspends(b) for b in A.child_blocks(stmt))


def block_suspends(block: A.Block) -> bool:
    return any(suspends(s) for s in block.stmts)


class Compiler:
    def __init__(self, kernel, module: str, body: A.Body) -> None:
        self.k = kernel
        self.module = module
        self.body = body

    def bug(self, kind: str, sid: int) -> BugFound:
        return BugFound(BugReport(kind, self.body.driver, self.body.name, sid))

    # -- expressions -------------------------------------------------------

    def expr(self, e, sid: int) -> Callable:
        if isinstance(e, (A.IntLit, A.BoolLit, A.StrLit)):
            v = e.value
            return lambda f: v
        if isinstance(e, A.NullLit):
            return lambda f: 0
        if isinstance(e, A.Name):
            n = e.name
            if n == "buf":
                return lambda f: f.buf

            def get_local(f):
                try:
                    return f.loc[n]
                except KeyError:
                    raise EngineFatal(f"{self.body.driver}.{self.body.name}: local {n!r} read before assignment") from None

            return get_local
        if isinstance(e, A.FieldRef):
            return self.field_getter(e)
        if isinstance(e, A.ParamRef):
            params = self.k.params
            key = f"{e.module}.{e.name}"
            return lambda f: params[key]
        if isinstance(e, A.UnOp):
            inner = self.expr(e.operand, sid)
            if e.op == "!":
                return lambda f: not inner(f)

            def neg(f):
                try:
                    return V.wrap(-inner(f))
                except TypeError:
                    raise EngineFatal("negation of a non-integer") from None

            return neg
        if isinstance(e, A.BinOp):
            return self.binop(e, sid)
        raise TypeError(f"cannot compile {e!r}")

    def binop(self, e: A.BinOp, sid: int) -> Callable:
        lf = self.expr(e.left, sid)
        rf = self.expr(e.right, sid)
        op = e.op
        if op == "&&":
            return lambda f: bool(lf(f)) and bool(rf(f))
        if op == "||":
            return lambda f: bool(lf(f)) or bool(rf(f))
        if op == "==":
            return lambda f: lf(f) == rf(f)
        if op == "!=":
            return lambda f: lf(f) != rf(f)
        if op in ("<", "<=", ">", ">="):
            cmp = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge}[op]

            def compare(f):
                try:
                    return cmp(lf(f), rf(f))
                except TypeError:
                    raise EngineFatal(f"ordering comparison of incompatible values at stmt{sid}") from None

            return compare
        wrap = V.wrap
        if op in ("/", "%"):
            div = V.cdiv if op == "/" else V.cmod
            bug = self.bug

            def divide(f):
                a, b = lf(f), rf(f)
                if type(a) is str or type(b) is str:
                    raise EngineFatal(f"arithmetic on a string at stmt{sid}")
                if b == 0:
                    raise bug("DIV0", sid)
                return div(a, b)

            return divide
        fn = {"+": operator.add, "-": operator.sub, "*": operator.mul}[op]

        def arith(f):
            a, b = lf(f), rf(f)
            if type(a) is str or type(b) is str:
                raise EngineFatal(f"arithmetic on a string at stmt{sid}")
            return wrap(fn(a, b))

        return arith

    def field_getter(self, ref: A.FieldRef) -> Callable:
        name = ref.name
        if ref.scope == "self":
            return lambda f: f.dev[name]
        if ref.scope == "parent":
            return lambda f: f.parent[name]
        return lambda f: f.shared[name]

    def setter(self, lv) -> Callable:
        if isinstance(lv, A.Name):
            n = lv.name

            def set_local(f, v):
                f.loc[n] = v

            return set_local
        name = lv.name
        if lv.scope == "self":

            def set_self(f, v):
                f.dev[name] = v

            return set_self
        if lv.scope == "parent":

            def set_parent(f, v):
                f.parent[name] = v

            return set_parent

        def set_shared(f, v):
            f.shared[name] = v

        return set_shared

    def lock_key(self, ref) -> Callable:
        module = self.module
        if isinstance(ref, A.Name):
            key = ("module", module, ref.name)
            return lambda f: key
        name = ref.name
        if ref.scope == "self":
            return lambda f: ("dev", f.dev_id, name)
        if ref.scope == "parent":
            return lambda f: ("dev", f.parent_id, name)
        key = ("module", module, name)
        return lambda f: key

    # -- statements --------------------------------------------------------

    def block(self, block: A.Block) -> tuple[Callable, bool]:
        items = [self.stmt(s) for s in block.stmts]
        if not any(g for _, g in items):
            fns = [fn for fn, _ in items]
            if not fns:
                return (lambda f: None), False
            if len(fns) == 1:
                return fns[0], False

            def run_plain(f):
                for fn in fns:
                    r = fn(f)
                    if r is not None:
                        return r
                return None

            return run_plain, False

        def run_gen(f):
            for fn, is_gen in items:
                if is_gen:
                    r = yield from fn(f)
                else:
                    r = fn(f)
                if r is not None:
                    return r
            return None

        return run_gen, True

    def stmt(self, s) -> tuple[Callable, bool]:
        sid = s.sid
        cov_add = self.k.cov.add
        if isinstance(s, A.Assign):
            put = self.setter(s.target)
            val = self.expr(s.value, sid)

            def assign(f):
                put(f, val(f))

            return assign, False
        if isinstance(s, A.Let):
            if s.is_helper:
                return self.helper_let(s), True
            n = s.names[0]
            val = self.expr(s.value, sid)

            def let(f):
                f.loc[n] = val(f)

            return let, False
        if isinstance(s, A.Return):
            code = s.code
            return (lambda f: code), False
        if isinstance(s, A.Yield):

            def yield_point(f):
                yield None
                return None

            return yield_point, True
        if isinstance(s, A.Lock):
            keyf = self.lock_key(s.ref)
            site = (self.body.driver, self.body.name, sid)

            def lock(f):
                yield (keyf(f), site)
                return None

            return lock, True
        if isinstance(s, A.Unlock):
            keyf = self.lock_key(s.ref)
            locks = self.k.locks

            def unlock(f):
                key = keyf(f)
                if locks.get(key) == f.tid:
                    del locks[key]

            return unlock, False
        if isinstance(s, A.Alloc):
            put = self.setter(s.target)
            new_handle = self.k.new_handle
            return (lambda f: put(f, new_handle())), False
        if isinstance(s, A.Free):
            get = self.expr(s.target, sid)
            handles = self.k.handles
            bug = self.bug

            def free(f):
                h = get(f)
                if h == 0 or h is False:
                    return None
                st = handles.get(h)
                if st is None:
                    raise bug("NPD", sid)
                if st is False:
                    raise bug("DOUBLE_FREE", sid)
                handles[h] = False
                return None

            return free, False
        if isinstance(s, A.Use):
            get = self.expr(s.value, sid)
            handles = self.k.handles
            bug = self.bug

            def use(f):
                h = get(f)
                st = handles.get(h) if type(h) is int else None
                if st is None:
                    raise bug("NPD", sid)
                if st is False:
                    raise bug("UAF", sid)
                return None

            return use, False
        if isinstance(s, A.ListAdd):
            lst = self.expr(s.lst, sid)
            val = self.expr(s.value, sid)

            def list_add(f):
                lst(f).append(val(f))

            return list_add, False
        if isinstance(s, A.ListDel):
            lst = self.expr(s.lst, sid)
            val = self.expr(s.value, sid)

            def list_del(f):
                items = lst(f)
                v = val(f)
                if v in items:
                    items.remove(v)

            return list_del, False
        if isinstance(s, A.If):
            return self.if_stmt(s, cov_add)
        if isinstance(s, A.Switch):
            return self.switch_stmt(s, cov_add)
        if isinstance(s, A.ListIter):
            return self.list_iter(s, cov_add)
        raise TypeError(f"cannot compile {s!r}")

    def helper_let(self, s: A.Let) -> Callable:
        h: A.HelperCall = s.value  # type: ignore[assignment]
        names = s.names
        if h.helper == "match_string":
            strings = list(h.strings or [])
            n = names[0]

            def ms(f):
                yield None
                f.loc[n] = V.match_string(f.buf, strings)
                return None

            return ms
        if h.helper == "scan":
            fmt = h.fmt

            def sc(f):
                yield None
                got = V.scan(f.buf, fmt)
                if got is None:
                    return "EINVAL"
                for n, v in zip(names, got):
                    f.loc[n] = v
                return None

            return sc
        conv = {"kstrtouint": V.kstrtouint, "kstrtoint": V.kstrtoint, "kstrtobool": V.kstrtobool}[h.helper]
        n = names[0]

        def kstrto(f):
            yield None
            v = conv(f.buf)
            if v is None:
                return "EINVAL"
            f.loc[n] = v
            return None

        return kstrto

    def if_stmt(self, s: A.If, cov_add) -> tuple[Callable, bool]:
        cond = self.expr(s.cond, s.sid)
        then, then_gen = self.block(s.then)
        if s.orelse is not None:
            orelse, else_gen = self.block(s.orelse)
        else:
            orelse, else_gen = (lambda f: None), False
        et, ef = s.edge_true, s.edge_false
        if not (then_gen or else_gen):

            def if_plain(f):
                if cond(f):
                    cov_add(et)
                    return then(f)
                cov_add(ef)
                return orelse(f)

            return if_plain, False

        def if_gen(f):
            if cond(f):
                cov_add(et)
                if then_gen:
                    return (yield from then(f))
                return then(f)
            cov_add(ef)
            if else_gen:
                return (yield from orelse(f))
            return orelse(f)

        return if_gen, True

    def switch_stmt(self, s: A.Switch, cov_add) -> tuple[Callable, bool]:
        subject = self.expr(s.subject, s.sid)
        arms = {}
        any_gen = False
        for (val, b), eid in zip(s.cases, s.case_edges):
            fn, g = self.block(b)
            arms[val] = (eid, fn, g)
            any_gen |= g
        if s.default is not None:
            dfn, dgen = self.block(s.default)
        else:
            dfn, dgen = (lambda f: None), False
        any_gen |= dgen
        default = (s.default_edge, dfn, dgen)

        def pick(f):
            v = subject(f)
            if type(v) is str:
                raise EngineFatal(f"switch on a string at stmt{s.sid}")
            return arms.get(int(v), default)

        if not any_gen:

            def switch_plain(f):
                eid, fn, _ = pick(f)
                cov_add(eid)
                return fn(f)

            return switch_plain, False

        def switch_gen(f):
            eid, fn, g = pick(f)
            cov_add(eid)
            if g:
                return (yield from fn(f))
            return fn(f)

        return switch_gen, True

    def list_iter(self, s: A.ListIter, cov_add) -> tuple[Callable, bool]:
        var = s.var
        eb, ex = s.edge_body, s.edge_exit
        body, body_gen = self.block(s.body)
        if isinstance(s.source, A.Name):  # buf

            def items(f):
                return [ord(c) for c in f.buf]

        else:
            get = self.expr(s.source, s.sid)

            def items(f):
                return list(get(f))  # snapshot cursor; liveness is re-read by use()

        if not body_gen:

            def iter_plain(f):
                loc = f.loc
                for v in items(f):
                    cov_add(eb)
                    loc[var] = v
                    r = body(f)
                    if r is not None:
                        return r
                cov_add(ex)
                return None

            return iter_plain, False

        def iter_gen(f):
            loc = f.loc
            for v in items(f):
                cov_add(eb)
                loc[var] = v
                r = yield from body(f)
                if r is not None:
                    return r
            cov_add(ex)
            return None

        return iter_gen, True


def compile_body(kernel, module: str, body: A.Body) -> CompiledBody:
    fn, is_gen = Compiler(kernel, module, body).block(body.block)
    return CompiledBody(body, fn, is_gen, body.entry_edge)
