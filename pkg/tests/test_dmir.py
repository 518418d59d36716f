import pytest
from conftest import CORPUS_FILES
from hypothesis import given, settings
from strategies import attr_tree, render_members

from paramfuzz.dmir import (
    LiteralTypeError,
    ParseError,
    ResolveError,
    ast as A,
    control_flow_graph,
    flatten_attrs,
    parse,
    parse_file,
    pretty,
    program_hash,
)

ZEROING = """
bus scsi;
module sd {
  driver sd devnode {
    field mode: uint;
    attr "zeroing_mode" rw { store { let r = match_string(buf, ["off","unmap","zero"]); if (r >= 0) { self.mode = r; return OK; } return EINVAL; } }
  }
}
device d0: driver=sd, parent=scsi, devnode="d0";
"""


def test_minimal_module():
    p = parse("module m { param verbose: bool = false; }")
    assert len(p.modules) == 1
    assert len(p.modules[0].params) == 1
    assert p.modules[0].drivers == []


def test_zeroing_snippet_shape():
    p = parse(ZEROING)
    attr = flatten_attrs(p.drivers["sd"])[0]
    assert attr.fname == "zeroing_mode"
    # let, if, return at top level plus assign and return inside the if
    top = attr.store.block.stmts
    assert [type(s).__name__ for s in top] == ["Let", "If", "Return"]
    assert len(list(A.iter_stmts(attr.store.block))) == 5
    assert len(control_flow_graph(attr.store.block).edges) == 2


def test_self_parent_is_a_cycle():
    src = "bus b; module m { driver sd { } } device d1: driver=sd, parent=d1;"
    with pytest.raises(ResolveError, match="parent cycle"):
        parse(src)


@pytest.mark.parametrize(
    "src, exc",
    [
        ("module m { param p: uint = -1; }", LiteralTypeError),
        ("module m { param p: bool = 3; }", LiteralTypeError),
        ("module m { param p: uint = 1 }", ParseError),
        ("module m { driver d { } } module m { }", ResolveError),
        ("bus b; module m { driver d { } } device x: driver=nope, parent=b;", ResolveError),
        ("bus b; module m { driver d { } } device x: driver=d, parent=nowhere;", ResolveError),
        ("module m { driver d { field f: uint; op o() { let v = kstrtouint(buf); return OK; } } }", ParseError),
        ("module m { param p: uint = 1; } $", ParseError),
    ],
)
def test_rejects_bad_programs(src, exc):
    with pytest.raises(exc):
        parse(src)


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as ei:
        parse("module m {\n  param p: uint = 1\n}")
    assert ei.value.line >= 2


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_round_trip(path):
    p = parse_file(path)
    text = pretty(p)
    q = parse(text)
    assert q == p
    assert pretty(q) == text


@pytest.mark.parametrize("path", CORPUS_FILES, ids=lambda p: p.stem)
def test_ids_are_a_function_of_the_text(path):
    a, b = parse_file(path), parse_file(path)
    ids_a = [(body.name, body.entry_edge, body.block.block_id) for body in a.bodies()]
    ids_b = [(body.name, body.entry_edge, body.block.block_id) for body in b.bodies()]
    assert ids_a == ids_b
    assert program_hash(a) == program_hash(b)


def test_hash_ignores_comments_and_layout():
    a = parse(ZEROING)
    b = parse("# a comment\n" + ZEROING.replace("\n", "\n\n"))
    assert program_hash(a) == program_hash(b)


def test_edge_and_block_ids_unique(corpus_programs):
    for p in corpus_programs.values():
        blocks, edges = [], []
        for body in p.bodies():
            for blk in A.iter_blocks(body.block):
                blocks.append(blk.block_id)
            edges.append(body.entry_edge)
            edges += control_flow_graph(body.block).edge_ids
        assert len(blocks) == len(set(blocks))
        assert len(edges) == len(set(edges))


def _driver(members_src: str):
    return parse(f"module m {{ driver d {{ field x: uint;\n{members_src}\n }} }}").drivers["d"]


def test_flatten_flat():
    d = _driver('attr "a" ro { show { return OK; } } attr "b" ro { show { return OK; } }')
    assert [a.fname for a in flatten_attrs(d)] == ["a", "b"]


def test_flatten_nested():
    d = _driver(
        'group g { attr "x" ro { show { return OK; } } group h { attr "y" ro { show { return OK; } } } }'
        ' attr "z" ro { show { return OK; } }'
    )
    out = flatten_attrs(d)
    assert [a.fname for a in out] == ["x", "y", "z"]
    assert [a.rel_path for a in out] == ["g/x", "g/h/y", "z"]


def test_flatten_empty():
    assert flatten_attrs(_driver("")) == []


@settings(max_examples=80, deadline=None)
@given(attr_tree())
def test_flatten_matches_declaration_order(tree_flat):
    tree, flat = tree_flat
    d = _driver(render_members(tree))
    assert [a.fname for a in flatten_attrs(d)] == flat


def _block(src: str) -> A.Block:
    p = parse(f"module m {{ driver d {{ field x: uint; op o(a: uint) {{ {src} }} }} }}")
    return p.drivers["d"].ops[0].body.block


def test_cfg_straight_line():
    cfg = control_flow_graph(_block("self.x = 1; self.x = 2; self.x = 3; return OK;"))
    assert len(cfg.blocks) == 1
    assert cfg.edges == []


def test_cfg_diamond():
    cfg = control_flow_graph(_block("if (a > 1) { self.x = 1; } else { self.x = 2; } return OK;"))
    assert len(cfg.blocks) == 4  # entry, then, else, continuation
    assert len(cfg.edges) == 2
    # the diamond itself, without a statement after it
    cfg = control_flow_graph(_block("if (a > 1) { self.x = 1; } else { self.x = 2; }"))
    assert len(cfg.blocks) == 3


def test_cfg_switch():
    cfg = control_flow_graph(
        _block("switch (a) { case 0: { self.x = 1; } case 1: { self.x = 2; } case 2: { self.x = 3; } default: { self.x = 4; } }")
    )
    assert len(cfg.blocks) == 5
    assert len(cfg.edges) == 4
