"""Driver-Model IR: the small language every simulated driver is written in."""

from . import ast
from .ast import DmirProgram
from .cfg import CFG, body_edge_ids, control_flow_graph, flatten_attrs, program_edge_ids
from .errors import DmirError, LiteralTypeError, ParseError, ResolveError
from .parser import parse, parse_file
from .printer import pretty


def program_hash(program: DmirProgram) -> str:
    """Identity of a program: hash of its canonical printed form, blind to formatting and comments."""
    import hashlib

    return hashlib.sha256(pretty(program).encode("utf-8")).hexdigest()


__all__ = [
    "ast",
    "CFG",
    "DmirError",
    "DmirProgram",
    "LiteralTypeError",
    "ParseError",
    "ResolveError",
    "body_edge_ids",
    "control_flow_graph",
    "flatten_attrs",
    "parse",
    "parse_file",
    "pretty",
    "program_hash",
    "program_edge_ids",
]
