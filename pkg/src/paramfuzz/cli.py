"""Command line front end: ``paramfuzz <extract|relate|gen|fuzz|replay|report|check>``.

Every subcommand accepts ``--config FILE`` (TOML or JSON). Keys are the long
flag names with dashes or underscores; explicit flags win over the file, and
``PARAMFUZZ_SEED`` supplies the seed when neither sets one.

Exit status: 0 on success, 2 for invalid input, 3 when scenario checks fail.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Optional

from . import __version__

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("paramfuzz")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CHECK_FAILED = 3

SEED_ENV = "PARAMFUZZ_SEED"


class UsageError(Exception):
    pass


# -- configuration ---------------------------------------------------------


def load_config(path: str) -> dict:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None
    try:
        if p.suffix.lower() == ".json":
            doc = json.loads(raw.decode("utf-8"))
        else:
            doc = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, tomllib.TOMLDecodeError) as e:
        raise UsageError(f"config {path}: {e}") from None
    if not isinstance(doc, dict):
        raise UsageError(f"config {path}: top level must be a table/object")
    return {str(k).replace("-", "_"): v for k, v in doc.items()}


def _apply_config(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill unset options from --config, then from built-in defaults."""
    conf = load_config(args.config) if args.config else {}
    known = set(vars(args))
    for k in conf:
        if k not in known:
            raise UsageError(f"config key {k!r} is not an option of '{args.command}'")
    for k, v in vars(args).items():
        if v is None:
            if k in conf:
                setattr(args, k, conf[k])
            elif k in defaults:
                setattr(args, k, defaults[k])
    if "seed" in known and args.seed is None:
        env = os.environ.get(SEED_ENV)
        if env is not None:
            try:
                args.seed = int(env, 0)
            except ValueError:
                raise UsageError(f"{SEED_ENV}={env!r} is not an integer") from None
        else:
            args.seed = 0
    return args


def _need(args, *names) -> None:
    for n in names:
        if getattr(args, n, None) is None:
            raise UsageError(f"'{args.command}' needs --{n.replace('_', '-')} (flag or config key)")


def _snapshot(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config", "verbose")}


# -- subcommands -----------------------------------------------------------


def _load_program(path):
    from .dmir import parse_file

    return parse_file(path)


def _write_text(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def cmd_extract(args) -> int:
    from .dmir import program_hash
    from .extractor.inventory import build_inventory, dumps
    from .manifest import now, record_stage

    started = now()
    program = _load_program(args.program)
    out = _write_text(Path(args.out), dumps(build_inventory(program)))
    record_stage(out.parent, program_hash(program), "extract", _snapshot(args), [out], started)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_relate(args) -> int:
    from .dmir import program_hash
    from .manifest import now, record_stage
    from .relations import build_relations
    from .vkernel import boot

    started = now()
    program = _load_program(args.program)
    rel = build_relations(boot(program))
    for w in rel.pmap.warnings:
        log.warning("%s", w)
    out = _write_text(Path(args.out), rel.dumps())
    record_stage(out.parent, program_hash(program), "relate", _snapshot(args), [out], started)
    log.info("wrote %s", out)
    return EXIT_OK


def cmd_gen(args) -> int:
    from . import descgen
    from .dmir import program_hash
    from .extractor import Inventory
    from .manifest import now, record_stage
    from .relations import Relations, build_relations
    from .vkernel import boot

    started = now()
    program = _load_program(args.program)
    if args.inventory:
        inv = Inventory(json.loads(Path(args.inventory).read_text(encoding="utf-8")))
    else:
        inv = Inventory.from_program(program)
    if args.relations:
        rel = Relations.from_json(json.loads(Path(args.relations).read_text(encoding="utf-8")))
    else:
        rel = build_relations(boot(program))
    if inv.program_hash != program_hash(program):
        raise UsageError("inventory was extracted from a different program")
    ds = descgen.generate(inv, rel)
    out = _write_text(Path(args.out), descgen.render(ds.descriptors))
    meta = _write_text(descgen.meta_path(out), descgen.dumps_meta(ds))
    record_stage(out.parent, ds.program_hash, "gen", _snapshot(args), [out, meta], started)
    log.info("wrote %s and %s (%d descriptors)", out, meta, len(ds.descriptors))
    return EXIT_OK


def cmd_fuzz(args) -> int:
    from .fuzzer import CampaignConfig, run_campaign
    from .manifest import MANIFEST_NAME, now, record_stage

    started = now()
    cfg = CampaignConfig(
        program=args.program,
        mode=args.mode,
        budget_execs=int(args.budget_execs),
        budget_seconds=None if args.budget_seconds is None else float(args.budget_seconds),
        workers=int(args.workers),
        seed=int(args.seed),
        descs=args.descs,
        relation_p=float(args.relation_p),
    )
    report = run_campaign(cfg)
    out = Path(args.out)
    report.write(out)
    files = [p for p in sorted(out.rglob("*")) if p.is_file() and p.name != MANIFEST_NAME]
    record_stage(out, report.program_hash, "fuzz", cfg.to_json(), files, started)
    print(
        f"{cfg.mode} seed={cfg.seed}: {report.executions} execs, {len(report.coverage)} edges, "
        f"{len(report.titles)} titles"
    )
    for t in report.titles:
        print(f"  {t}")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .vkernel import TestCase, boot, run_case

    program = _load_program(args.program)
    try:
        case = TestCase.loads(Path(args.case).read_text(encoding="utf-8"))
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{args.case}: not a test case ({e})") from None
    res = run_case(boot(program), case)
    if args.json:
        print(json.dumps(res.to_json(), indent=1))
        return EXIT_OK
    for t, statuses in enumerate(res.statuses):
        print(f"thread {t}: {' '.join(statuses) if statuses else '-'}")
    print(f"verdict: {res.title or 'none'}")
    if res.fatal:
        print(f"fatal: {res.fatal}")
    print(f"coverage: {len(res.coverage)} edges")
    if args.trace:
        print("trace: " + (" ".join(f"{t}@{s}" for t, s in res.trace) or "-"))
    return EXIT_OK


def cmd_report(args) -> int:
    from .aggregate import compare

    cmp_ = compare(args.dirs)
    sys.stdout.write(cmp_.table())
    if args.out:
        out = Path(args.out)
        _write_text(out / "edges_over_time.csv", cmp_.series_csv("edges"))
        _write_text(out / "titles_over_time.csv", cmp_.series_csv("titles"))
        _write_text(out / "summary.json", json.dumps(cmp_.summary(), indent=2) + "\n")
    return EXIT_OK


def cmd_check(args) -> int:
    from .scenarios import SCENARIO_DIR, scenario_check

    results = scenario_check(Path(args.scenarios) if args.scenarios else SCENARIO_DIR)
    for r in results:
        print(r.line())
    if not results:
        print("no scenarios found")
        return EXIT_CHECK_FAILED
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK_FAILED


# -- parser ----------------------------------------------------------------

FUZZ_DEFAULTS = {"mode": "syzlang_mutation", "budget_execs": 100_000, "workers": 1, "relation_p": 0.3}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paramfuzz", description="Parameter-aware driver fuzzing on simulated kernels.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="TOML or JSON file with option values")
        sp.add_argument("-v", "--verbose", action="store_true")
        sp.set_defaults(func=func)
        return sp

    sp = add("extract", cmd_extract, "store functions, value specs, module params and impact counts")
    sp.add_argument("program", nargs="?")
    sp.add_argument("--out")

    sp = add("relate", cmd_relate, "device relation tree and parameter-to-driver map")
    sp.add_argument("program", nargs="?")
    sp.add_argument("--out")

    sp = add("gen", cmd_gen, "generate .szp descriptors plus .meta.json")
    sp.add_argument("program", nargs="?")
    sp.add_argument("--out")
    sp.add_argument("--inventory", help="use this inventory instead of extracting")
    sp.add_argument("--relations", help="use this relations file instead of rebuilding")

    sp = add("fuzz", cmd_fuzz, "run a fuzzing campaign")
    sp.add_argument("--program")
    sp.add_argument("--descs")
    sp.add_argument("--mode", choices=("baseline", "syzlang", "syzlang_mutation"))
    sp.add_argument("--budget-execs", type=int)
    sp.add_argument("--budget-seconds", type=float)
    sp.add_argument("--seed", type=lambda s: int(s, 0))
    sp.add_argument("--workers", type=int)
    sp.add_argument("--relation-p", type=float)
    sp.add_argument("--out")

    sp = add("replay", cmd_replay, "execute one test case and print its outcome")
    sp.add_argument("case", nargs="?")
    sp.add_argument("--program")
    sp.add_argument("--trace", action="store_const", const=True, help="print the interleaving trace")
    sp.add_argument("--json", action="store_const", const=True, help="print the ExecutionResult as JSON")

    sp = add("report", cmd_report, "compare campaign directories across modes and seeds")
    sp.add_argument("dirs", nargs="*")
    sp.add_argument("--out", help="directory for CSV/JSON outputs")

    sp = add("check", cmd_check, "run the bundled scenario checks")
    sp.add_argument("--scenarios", help="scenario directory (default: bundled)")
    return p


REQUIRED = {
    "extract": ("program", "out"),
    "relate": ("program", "out"),
    "gen": ("program", "out"),
    "fuzz": ("program", "out"),
    "replay": ("case", "program"),
    "report": (),
    "check": (),
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    from .aggregate import ManifestError
    from .descgen import GenError
    from .dmir import DmirError
    from .fuzzer import ConfigError
    from .vkernel import BootError

    try:
        _apply_config(args, FUZZ_DEFAULTS if args.command == "fuzz" else {"trace": False, "json": False})
        _need(args, *REQUIRED[args.command])
        if args.command == "report" and not args.dirs:
            raise UsageError("'report' needs at least one campaign directory")
        return args.func(args)
    except (UsageError, DmirError, BootError, ConfigError, GenError, ManifestError) as e:
        print(f"paramfuzz {args.command}: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as e:
        print(f"paramfuzz {args.command}: {e.filename}: no such file", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
