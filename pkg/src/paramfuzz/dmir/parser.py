"""Recursive-descent parser for ``.dmir`` source text."""

from __future__ import annotations

from typing import Optional

from . import ast as A
from .errors import LiteralTypeError, ParseError
from .lexer import Token, tokenize
from .resolve import assign_ids, resolve

MAX_GROUP_DEPTH = 8
INT64_MIN, INT64_MAX = -(1 << 63), (1 << 63) - 1

_BINARY_LEVELS = [
    ("||",),
    ("&&",),
    A.COMPARISONS,
    ("+", "-"),
    ("*", "/", "%"),
]


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = tokenize(text)
        self.i = 0
        # per-body state
        self._in_store = False

    # -- token helpers -----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Token] = None) -> ParseError:
        t = tok or self.tok
        return ParseError(msg, t.line, t.col)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "kw") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected '{text}', found '{found}'")
        t = self.tok
        self.i += 1
        return t

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            raise self.error(f"expected identifier, found '{self.tok.text or 'end of input'}'")
        t = self.tok
        self.i += 1
        return t

    def string(self) -> str:
        if self.tok.kind != "string":
            raise self.error("expected string literal")
        v = self.tok.value
        self.i += 1
        return v  # type: ignore[return-value]

    def one_of(self, choices: tuple[str, ...], what: str) -> str:
        t = self.tok
        if t.text not in choices or t.kind == "string":
            raise self.error(f"expected {what} ({', '.join(choices)}), found '{t.text}'")
        self.i += 1
        return t.text

    # -- top level ---------------------------------------------------------

    def program(self) -> A.DmirProgram:
        modules, buses, devices = [], [], []
        while self.tok.kind != "eof":
            if self.accept("bus"):
                buses.append(self.ident().text)
                self.expect(";")
            elif self.at("module"):
                modules.append(self.module())
            elif self.at("device"):
                devices.append(self.device())
            else:
                raise self.error(f"expected 'bus', 'module' or 'device', found '{self.tok.text}'")
        return A.DmirProgram(modules=modules, buses=buses, devices=devices)

    def module(self) -> A.ModuleDecl:
        line = self.expect("module").line
        name = self.ident().text
        self.expect("{")
        params, drivers, shared = [], [], []
        while not self.accept("}"):
            if self.at("param"):
                t = self.expect("param")
                pname = self.ident().text
                self.expect(":")
                ptype = self.one_of(A.PTYPES, "parameter type")
                self.expect("=")
                default = self.literal(ptype)
                self.expect(";")
                params.append(A.ParamDecl(pname, ptype, default, line=t.line))
            elif self.at("shared"):
                t = self.expect("shared")
                sname = self.ident().text
                self.expect(":")
                ftype = self.one_of(A.FIELD_TYPES, "field type")
                default = self.optional_default(ftype)
                self.expect(";")
                shared.append(A.SharedDecl(sname, ftype, default, line=t.line))
            elif self.at("driver"):
                drivers.append(self.driver(name))
            else:
                raise self.error(f"expected 'param', 'shared' or 'driver', found '{self.tok.text}'")
        return A.ModuleDecl(name=name, params=params, drivers=drivers, shared=shared, line=line)

    def driver(self, module: str) -> A.DriverDecl:
        line = self.expect("driver").line
        name = self.ident().text
        devnode = self.accept("devnode")
        self.expect("{")
        fields, members, ops = [], [], []
        probe = None
        while not self.accept("}"):
            if self.at("field"):
                t = self.expect("field")
                fname = self.ident().text
                self.expect(":")
                ftype = self.one_of(A.FIELD_TYPES, "field type")
                default = self.optional_default(ftype)
                self.expect(";")
                fields.append(A.FieldDecl(fname, ftype, default, line=t.line))
            elif self.at("attr"):
                members.append(self.attr(name, ()))
            elif self.at("group"):
                members.append(self.group(name, (), 1))
            elif self.at("op"):
                ops.append(self.op(name))
            elif self.at("probe"):
                t = self.expect("probe")
                if probe is not None:
                    raise self.error("duplicate probe", t)
                probe = A.Body("probe", name, "probe", self.block())
            else:
                raise self.error(f"expected driver member, found '{self.tok.text}'")
        return A.DriverDecl(name, module, devnode, fields, members, ops, probe, line=line)

    def group(self, driver: str, path: tuple[str, ...], depth: int) -> A.AttrGroupDecl:
        t = self.expect("group")
        if depth > MAX_GROUP_DEPTH:
            raise self.error(f"attribute groups nested deeper than {MAX_GROUP_DEPTH}", t)
        name = self.ident().text
        self.expect("{")
        members: list = []
        while not self.accept("}"):
            if self.at("attr"):
                members.append(self.attr(driver, path + (name,)))
            elif self.at("group"):
                members.append(self.group(driver, path + (name,), depth + 1))
            else:
                raise self.error(f"expected 'attr' or 'group', found '{self.tok.text}'")
        return A.AttrGroupDecl(name, members, line=t.line)

    def attr(self, driver: str, path: tuple[str, ...]) -> A.AttrDecl:
        t = self.expect("attr")
        fname = self.string()
        if not fname or "/" in fname or "#" in fname:
            raise self.error(f"invalid attribute file name {fname!r}", t)
        mode = self.one_of(("rw", "ro"), "attribute mode")
        self.expect("{")
        store = show = None
        while not self.accept("}"):
            kw = self.tok
            if self.accept("store"):
                if store is not None:
                    raise self.error("duplicate store block", kw)
                self._in_store = True
                store = A.Body("store", driver, fname, self.block())
                self._in_store = False
            elif self.accept("show"):
                if show is not None:
                    raise self.error("duplicate show block", kw)
                show = A.Body("show", driver, fname, self.block())
            else:
                raise self.error(f"expected 'store' or 'show', found '{kw.text}'")
        if mode == "rw" and store is None:
            raise self.error(f"attribute {fname!r} is rw but has no store block", t)
        if mode == "ro" and store is not None:
            raise self.error(f"attribute {fname!r} is ro but has a store block", t)
        return A.AttrDecl(fname, mode, store, show, path, line=t.line)

    def op(self, driver: str) -> A.OpDecl:
        t = self.expect("op")
        name = self.ident().text
        self.expect("(")
        args: list[tuple[str, str]] = []
        if not self.at(")"):
            while True:
                aname = self.ident().text
                self.expect(":")
                args.append((aname, self.one_of(A.ARG_TYPES, "argument type")))
                if not self.accept(","):
                    break
        self.expect(")")
        body = A.Body("op", driver, name, self.block(), args=args)
        return A.OpDecl(name, args, body, line=t.line)

    def device(self) -> A.DeviceDecl:
        t = self.expect("device")
        dev_id = self.ident().text
        self.expect(":")
        self.expect("driver")
        self.expect("=")
        driver = self.ident().text
        self.expect(",")
        if self.tok.text != "parent":
            raise self.error("expected 'parent'")
        self.i += 1
        self.expect("=")
        parent = self.ident().text
        devnode = None
        if self.accept(","):
            self.expect("devnode")
            self.expect("=")
            devnode = self.string()
            if not devnode or "/" in devnode or "#" in devnode:
                raise self.error(f"invalid devnode name {devnode!r}", t)
        self.expect(";")
        return A.DeviceDecl(dev_id, driver, parent, devnode, line=t.line)

    # -- literals ----------------------------------------------------------

    def optional_default(self, ftype: str):
        if self.accept("="):
            return self.literal(ftype)
        return default_for(ftype)

    def literal(self, ftype: str):
        t = self.tok
        neg = False
        if self.at("-"):
            neg = True
            self.i += 1
            t = self.tok
        if t.kind == "int":
            self.i += 1
            v = -t.value if neg else t.value  # type: ignore[operator]
            if ftype not in ("uint", "int"):
                raise LiteralTypeError(f"integer literal for {ftype}", t.line, t.col)
            if ftype == "uint" and v < 0:
                raise LiteralTypeError("negative literal for uint", t.line, t.col)
            if not INT64_MIN <= v <= INT64_MAX:
                raise LiteralTypeError("integer literal out of 64-bit range", t.line, t.col)
            return v
        if neg:
            raise self.error("expected integer after '-'")
        if t.kind == "string":
            self.i += 1
            if ftype != "string":
                raise LiteralTypeError(f"string literal for {ftype}", t.line, t.col)
            return t.value
        if t.text in ("true", "false") and t.kind == "kw":
            self.i += 1
            if ftype != "bool":
                raise LiteralTypeError(f"boolean literal for {ftype}", t.line, t.col)
            return t.text == "true"
        if t.text == "null" and t.kind == "kw":
            self.i += 1
            if ftype != "handle":
                raise LiteralTypeError(f"null literal for {ftype}", t.line, t.col)
            return 0
        raise self.error(f"expected literal, found '{t.text}'")

    # -- statements --------------------------------------------------------

    def block(self) -> A.Block:
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            stmts.append(self.stmt())
        return A.Block(stmts)

    def stmt(self) -> A.Stmt:
        t = self.tok
        line = t.line
        if self.accept("let"):
            names = [self.ident().text]
            while self.accept(","):
                names.append(self.ident().text)
            self.expect("=")
            if self.tok.kind == "ident" and self.tok.text in A.HELPERS and self.peek().text == "(":
                value = self.helper()
                if len(names) > 1 and value.helper != "scan":
                    raise self.error("only scan() binds several names", t)
            else:
                if len(names) > 1:
                    raise self.error("only scan() binds several names", t)
                value = self.expr()
            self.expect(";")
            return A.Let(names, value, line=line)
        if self.accept("if"):
            return self.if_rest(line)
        if self.accept("switch"):
            self.expect("(")
            subject = self.expr()
            self.expect(")")
            self.expect("{")
            cases, default, seen = [], None, set()
            while not self.accept("}"):
                if self.accept("case"):
                    neg = self.accept("-")
                    if self.tok.kind != "int":
                        raise self.error("case label must be an integer literal")
                    val = -self.tok.value if neg else self.tok.value  # type: ignore[operator]
                    if val in seen:
                        raise self.error(f"duplicate case {val}")
                    seen.add(val)
                    self.i += 1
                    self.expect(":")
                    cases.append((val, self.block()))
                elif self.accept("default"):
                    if default is not None:
                        raise self.error("duplicate default")
                    self.expect(":")
                    default = self.block()
                else:
                    raise self.error(f"expected 'case' or 'default', found '{self.tok.text}'")
            return A.Switch(subject, cases, default, line=line)
        if self.accept("return"):
            code = self.one_of(A.RETURN_CODES, "return code")
            self.expect(";")
            return A.Return(code, line=line)
        for kw, cls in (("lock", A.Lock), ("unlock", A.Unlock), ("alloc", A.Alloc), ("free", A.Free)):
            if self.accept(kw):
                self.expect("(")
                ref = self.lvalue()
                self.expect(")")
                self.expect(";")
                return cls(ref, line=line)  # type: ignore[arg-type]
        if self.accept("use"):
            self.expect("(")
            value = self.expr()
            self.expect(")")
            self.expect(";")
            return A.Use(value, line=line)
        for kw, cls in (("list_add", A.ListAdd), ("list_del", A.ListDel)):
            if self.accept(kw):
                self.expect("(")
                lst = self.lvalue()
                self.expect(",")
                value = self.expr()
                self.expect(")")
                self.expect(";")
                return cls(lst, value, line=line)  # type: ignore[arg-type]
        if self.accept("list_iter"):
            self.expect("(")
            src = self.lvalue()
            self.expect(")")
            self.expect("as")
            var = self.ident().text
            return A.ListIter(src, var, self.block(), line=line)
        if self.accept("yield"):
            self.expect(";")
            return A.Yield(line=line)
        target = self.lvalue()
        self.expect("=")
        value = self.expr()
        self.expect(";")
        return A.Assign(target, value, line=line)

    def if_rest(self, line: int) -> A.If:
        self.expect("(")
        cond = self.expr()
        self.expect(")")
        then = self.block()
        orelse = None
        if self.accept("else"):
            if self.at("if"):
                inner_line = self.expect("if").line
                orelse = A.Block([self.if_rest(inner_line)])
            else:
                orelse = self.block()
        return A.If(cond, then, orelse, line=line)

    def helper(self) -> A.HelperCall:
        t = self.ident()
        if not self._in_store:
            raise self.error(f"helper {t.text}() is only allowed inside store blocks", t)
        self.expect("(")
        if self.tok.text != "buf" or self.tok.kind != "ident":
            raise self.error(f"{t.text}() must consume buf")
        self.i += 1
        strings = fmt = None
        if t.text == "match_string":
            self.expect(",")
            self.expect("[")
            strings = [self.string()]
            while self.accept(","):
                strings.append(self.string())
            self.expect("]")
        elif t.text == "scan":
            self.expect(",")
            fmt = self.string()
            check_format(fmt, self, t)
        self.expect(")")
        return A.HelperCall(t.text, strings, fmt, line=t.line)

    def lvalue(self) -> A.LValue:
        t = self.tok
        if t.kind == "ident" and t.text in ("self", "parent") and self.peek().text == ".":
            self.i += 2
            return A.FieldRef(t.text, self.ident().text, line=t.line)
        if t.kind == "kw" and t.text == "shared":
            self.i += 1
            self.expect(".")
            return A.FieldRef("shared", self.ident().text, line=t.line)
        if t.kind == "ident":
            self.i += 1
            return A.Name(t.text, line=t.line)
        raise self.error(f"expected assignable location, found '{t.text}'")

    # -- expressions -------------------------------------------------------

    def expr(self, level: int = 0) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.unary()
        left = self.expr(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            t = self.tok
            self.i += 1
            right = self.expr(level + 1)
            if ops is A.COMPARISONS and self.tok.kind == "op" and self.tok.text in ops:
                raise self.error("chained comparisons need parentheses")
            left = A.BinOp(t.text, left, right, line=t.line)
        return left

    def unary(self) -> A.Expr:
        t = self.tok
        if self.accept("!"):
            return A.UnOp("!", self.unary(), line=t.line)
        if self.accept("-"):
            operand = self.unary()
            if isinstance(operand, A.IntLit):
                return A.IntLit(-operand.value, line=t.line)
            return A.UnOp("-", operand, line=t.line)
        return self.primary()

    def primary(self) -> A.Expr:
        t = self.tok
        if t.kind == "int":
            self.i += 1
            if t.value > INT64_MAX + 1:  # type: ignore[operator]
                raise self.error("integer literal out of 64-bit range", t)
            return A.IntLit(t.value, line=t.line)  # type: ignore[arg-type]
        if t.kind == "string":
            self.i += 1
            return A.StrLit(t.value, line=t.line)  # type: ignore[arg-type]
        if t.kind == "kw" and t.text in ("true", "false"):
            self.i += 1
            return A.BoolLit(t.text == "true", line=t.line)
        if t.kind == "kw" and t.text == "null":
            self.i += 1
            return A.NullLit(line=t.line)
        if t.kind == "kw" and t.text == "param":
            self.i += 1
            self.expect(".")
            mod = self.ident().text
            self.expect(".")
            return A.ParamRef(mod, self.ident().text, line=t.line)
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident" and t.text in A.HELPERS and self.peek().text == "(":
            raise self.error(f"helper {t.text}() may only appear as 'let x = {t.text}(...)'")
        if t.kind == "ident" or (t.kind == "kw" and t.text == "shared"):
            return self.lvalue()
        raise self.error(f"expected expression, found '{t.text or 'end of input'}'")


def check_format(fmt: str, p: "_Parser", t: Token) -> None:
    i = 0
    n = 0
    while i < len(fmt):
        if fmt[i] == "%":
            if i + 1 >= len(fmt) or fmt[i + 1] not in "uds%":
                raise p.error(f"unsupported scan directive in {fmt!r}", t)
            if fmt[i + 1] != "%":
                n += 1
            i += 2
        else:
            i += 1
    if n == 0:
        raise p.error(f"scan format {fmt!r} has no directives", t)


def scan_arity(fmt: str) -> int:
    return fmt.replace("%%", "").count("%")


def default_for(ftype: str):
    return {"uint": 0, "int": 0, "bool": False, "string": "", "handle": 0, "list": None}[ftype]


def parse(source_text: str) -> A.DmirProgram:
    """Parse, resolve and number a DMIR program.

    Raises ParseError, ResolveError or LiteralTypeError.
    """
    program = _Parser(source_text).program()
    resolve(program)
    assign_ids(program)
    return program


def parse_file(path) -> A.DmirProgram:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
