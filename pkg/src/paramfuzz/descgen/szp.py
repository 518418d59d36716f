"""Text form of descriptors (``.szp``), one descriptor per line.

    line   := NAME OWNER TARGET "(" [arg {"," arg}] ")" [("produces" | "consumes") RES]
    arg    := IDENT ":" ROLE GEN
    GEN    := TAG "[" [item {"," item}] "]"
    item   := JSON-string | integer ":" integer | IDENT-like token

OWNER and TARGET are JSON strings. Blank lines and lines starting with
``#`` are ignored.
"""

from __future__ import annotations

import json
import re

from . import gens as G
from .model import ArgSpec, Descriptor, GenError

_KIND_OF_PREFIX = {"open": "open_dev", "op": "driver_op", "write_param": "write_param", "syz_mod_dev": "syz_mod_dev"}


def render_one(d: Descriptor) -> str:
    args = ", ".join(f"{a.name}: {a.role} {a.gen.render()}" for a in d.arg_specs)
    line = f"{d.name} {json.dumps(d.owner)} {json.dumps(d.target)} ({args})"
    if d.produces_handle:
        line += f" produces {d.resource}"
    elif d.consumes_handle:
        line += f" consumes {d.resource}"
    return line


def render(descriptors) -> str:
    return "".join(render_one(d) + "\n" for d in descriptors)


_TOKEN = re.compile(
    r"""\s*(?:
        (?P<str>"(?:[^"\\]|\\.)*")
      | (?P<punct>[()\[\],:])
      | (?P<word>[^\s()\[\],:"]+)
    )""",
    re.VERBOSE,
)


def _tokens(line: str) -> list[tuple[str, str]]:
    out = []
    pos = 0
    line = line.rstrip()
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None or m.end() == pos:
            raise GenError(f"cannot tokenize near {line[pos:pos + 20]!r}")
        pos = m.end()
        kind = m.lastgroup
        out.append((kind, m.group(kind)))  # type: ignore[arg-type]
    return out


class _Cursor:
    def __init__(self, toks, lineno: int) -> None:
        self.toks = toks
        self.i = 0
        self.lineno = lineno

    def err(self, msg: str) -> GenError:
        return GenError(f"line {self.lineno}: {msg}")

    def next(self, kind=None, text=None) -> str:
        if self.i >= len(self.toks):
            raise self.err("unexpected end of line")
        k, t = self.toks[self.i]
        if (kind and k != kind) or (text and t != text):
            raise self.err(f"expected {text or kind}, found {t!r}")
        self.i += 1
        return t

    def peek(self):
        return self.toks[self.i][1] if self.i < len(self.toks) else None


def _parse_items(c: _Cursor) -> list:
    items: list = []
    c.next("punct", "[")
    while c.peek() != "]":
        k, t = c.toks[c.i]
        c.i += 1
        if k == "str":
            items.append(json.loads(t))
        elif k == "word":
            if c.peek() == ":":
                c.i += 1
                hi = c.next("word")
                items.append((int(t), int(hi)))
            else:
                items.append(t)
        else:
            raise c.err(f"unexpected {t!r} in generator")
        if c.peek() == ",":
            c.i += 1
    c.next("punct", "]")
    return items


def _build_gen(tag: str, items: list, c: _Cursor) -> G.Gen:
    if tag not in G.GEN_TAGS:
        raise c.err(f"unknown generator {tag!r}")
    if tag == "string_set":
        return G.StringSetGen(items)
    if tag in ("uint_range", "int_range", "int"):
        (lo, hi), = items
        return G.GEN_TAGS[tag](lo, hi)
    if tag in ("bool", "any_string", "ignores_input", "string"):
        return G.GEN_TAGS[tag]()
    if tag == "formatted":
        return G.FormattedGen(items[0])
    if tag == "undetermined":
        return G.RandomStringGen(items[0] if items else "")
    if tag == "ptype":
        return G.PtypeGen(items[0])
    if tag == "paths":
        return G.PathsGen(items)
    if tag == "params":
        return G.ParamsGen(items)
    if tag == "follows":
        return G.FollowsGen(items[0])
    return G.FlagsGen(items)


def parse_line(line: str, lineno: int = 0) -> Descriptor:
    c = _Cursor(_tokens(line), lineno)
    name = c.next("word")
    owner = json.loads(c.next("str"))
    target = json.loads(c.next("str"))
    prefix = name.split("$", 1)[0]
    if prefix not in _KIND_OF_PREFIX or "$" not in name:
        raise c.err(f"unknown descriptor prefix in {name!r}")
    c.next("punct", "(")
    args = []
    while c.peek() != ")":
        aname = c.next("word")
        c.next("punct", ":")
        role = c.next("word")
        tag = c.next("word")
        args.append(ArgSpec(aname, role, _build_gen(tag, _parse_items(c), c)))
        if c.peek() == ",":
            c.i += 1
    c.next("punct", ")")
    produces = consumes = False
    resource = None
    if c.peek() is not None:
        how = c.next("word")
        if how not in ("produces", "consumes"):
            raise c.err(f"expected produces/consumes, found {how!r}")
        resource = c.next("word")
        produces, consumes = how == "produces", how == "consumes"
    if c.peek() is not None:
        raise c.err(f"trailing text {c.peek()!r}")
    try:
        return Descriptor(name, _KIND_OF_PREFIX[prefix], owner, target, tuple(args), resource, produces, consumes)
    except ValueError as e:
        raise c.err(str(e)) from None


def parse(text: str) -> list[Descriptor]:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        out.append(parse_line(s, n))
    return out
