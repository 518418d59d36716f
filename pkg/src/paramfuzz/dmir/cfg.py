"""Basic blocks and conditional edges of a DMIR code block.

A basic block is a maximal run of statements. The entry block always
exists; every branch arm (if/else arm, switch case or default, list_iter
body) opens a block, and statements following a branching statement open a
continuation block. ``if`` contributes two edges, ``switch`` one per case
plus one for default, ``list_iter`` two (enter body / leave loop).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast as A

EXIT = "exit"


@dataclass(frozen=True)
class BasicBlock:
    id: str  # "<block_id>.<segment>"
    block_id: int
    segment: int
    stmts: tuple[int, ...]  # statement ids


@dataclass(frozen=True)
class Edge:
    id: int
    src: str
    dst: str
    kind: str  # "true" | "false" | "case:<v>" | "default" | "body" | "exit"


@dataclass
class CFG:
    blocks: list[BasicBlock] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    block_of_stmt: dict[int, str] = field(default_factory=dict)

    @property
    def edge_ids(self) -> list[int]:
        return [e.id for e in self.edges]


def control_flow_graph(block: A.Block) -> CFG:
    cfg = CFG()
    _build(block, cfg, EXIT)
    return cfg


def _build(block: A.Block, cfg: CFG, follow: str) -> str:
    """Add ``block``'s basic blocks to ``cfg``; return its entry block id.

    ``follow`` is where control goes after the block's last statement.
    """
    # split the statement list into segments at branching statements
    segments: list[list] = [[]]
    for s in block.stmts:
        segments[-1].append(s)
        if isinstance(s, A.BRANCHING) and s is not block.stmts[-1]:
            segments.append([])

    ids = [f"{block.block_id}.{i}" for i in range(len(segments))]
    for i, seg in enumerate(segments):
        cfg.blocks.append(BasicBlock(ids[i], block.block_id, i, tuple(s.sid for s in seg)))
        for s in seg:
            cfg.block_of_stmt[s.sid] = ids[i]

    for i, seg in enumerate(segments):
        if not seg or not isinstance(seg[-1], A.BRANCHING):
            continue
        s = seg[-1]
        after = ids[i + 1] if i + 1 < len(ids) else follow
        src = ids[i]
        if isinstance(s, A.If):
            then_entry = _build(s.then, cfg, after)
            else_entry = _build(s.orelse, cfg, after) if s.orelse is not None else after
            cfg.edges.append(Edge(s.edge_true, src, then_entry, "true"))
            cfg.edges.append(Edge(s.edge_false, src, else_entry, "false"))
        elif isinstance(s, A.Switch):
            for (val, b), eid in zip(s.cases, s.case_edges):
                cfg.edges.append(Edge(eid, src, _build(b, cfg, after), f"case:{val}"))
            dflt = _build(s.default, cfg, after) if s.default is not None else after
            cfg.edges.append(Edge(s.default_edge, src, dflt, "default"))
        elif isinstance(s, A.ListIter):
            body_entry = _build(s.body, cfg, src)
            cfg.edges.append(Edge(s.edge_body, src, body_entry, "body"))
            cfg.edges.append(Edge(s.edge_exit, src, after, "exit"))
    cfg.edges.sort(key=lambda e: e.id)
    return ids[0]


def body_edge_ids(body: A.Body) -> list[int]:
    """Every coverage edge a body can report: its entry edge plus conditional edges."""
    return [body.entry_edge] + control_flow_graph(body.block).edge_ids


def program_edge_ids(program: A.DmirProgram) -> set[int]:
    out: set[int] = set()
    for body in program.bodies():
        out.update(body_edge_ids(body))
    return out


def flatten_attrs(driver: A.DriverDecl) -> list[A.AttrDecl]:
    """Depth-first, declaration-order list of a driver's attributes."""
    out: list[A.AttrDecl] = []

    def walk(members) -> None:
        for m in members:
            if isinstance(m, A.AttrGroupDecl):
                walk(m.members)
            else:
                out.append(m)

    walk(driver.attrs)
    return out
