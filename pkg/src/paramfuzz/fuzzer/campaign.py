"""Campaign driver: the fuzzing loop, worker merging and output files.

A campaign runs in epochs. In each epoch every worker executes its share of
the budget against its own kernel, then the driver merges new corpus
entries, coverage and crashes in worker order and hands each worker the
entries the others found. With one worker everything happens in-process
and the run is a pure function of the configuration.
"""

from __future__ import annotations

import csv
import io
import json
import multiprocessing as mp
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .. import descgen
from ..dmir import parse_file, program_hash
from ..rng import SplitMix64, derive_seed
from ..vkernel import boot, run_case
from ..vkernel.case import MAX_CALLS, MAX_THREADS, TestCase
from .build import MODES, Builder
from .corpus import Corpus, CrashDB, CrashRecord
from .minimize import MinimizeError, minimize
from .mutate import RELATION_P, Mutator

GENERATE_P = 0.05  # chance of a fresh random case instead of a mutation
EPOCH = 1000  # executions per worker between merges; also the timeline resolution


class ConfigError(Exception):
    pass


@dataclass
class CampaignConfig:
    program: str
    mode: str = "syzlang_mutation"
    budget_execs: int = 100_000
    budget_seconds: Optional[float] = None
    workers: int = 1
    seed: int = 0
    descs: Optional[str] = None
    relation_p: float = RELATION_P
    max_threads: int = MAX_THREADS
    max_calls: int = MAX_CALLS

    def validate(self) -> None:
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}, not {self.mode!r}")
        if self.budget_execs < 0:
            raise ConfigError("budget_execs must be >= 0")
        if self.budget_seconds is not None and self.budget_seconds < 0:
            raise ConfigError("budget_seconds must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0.0 <= self.relation_p <= 1.0:
            raise ConfigError("relation_p must be within [0, 1]")
        if not 1 <= self.max_threads <= 16 or not 1 <= self.max_calls <= 256:
            raise ConfigError("thread/call caps out of range")
        if not Path(self.program).is_file():
            raise ConfigError(f"program {self.program!r} not found")
        if self.descs is not None and not Path(self.descs).is_file():
            raise ConfigError(f"descriptor file {self.descs!r} not found")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class TimelineRow:
    execs: int
    edges: int
    titles: int


@dataclass
class CampaignReport:
    config: CampaignConfig
    program_hash: str
    executions: int = 0
    minimize_executions: int = 0
    fatal: int = 0
    corpus: Corpus = field(default_factory=Corpus)
    crashes: CrashDB = field(default_factory=CrashDB)
    coverage: set = field(default_factory=set)
    timeline: list[TimelineRow] = field(default_factory=list)
    mutations: dict = field(default_factory=dict)

    @property
    def titles(self) -> list[str]:
        return self.crashes.titles()

    def to_json(self) -> dict:
        cfg = self.config
        return {
            "mode": cfg.mode,
            "seed": cfg.seed,
            "workers": cfg.workers,
            "budget_execs": cfg.budget_execs,
            "relation_p": cfg.relation_p,
            "program_hash": self.program_hash,
            "executions": self.executions,
            "minimize_executions": self.minimize_executions,
            "fatal_executions": self.fatal,
            "corpus_size": len(self.corpus),
            "edges": len(self.coverage),
            "titles": self.titles,
            "crashes": {t: self.crashes.records[t].to_json() for t in self.titles},
            "mutations": dict(sorted(self.mutations.items())),
            "timeline": [asdict(r) for r in self.timeline],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1) + "\n"

    def coverage_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "execs", "edges", "titles"])
        for r in self.timeline:
            # time is in virtual ticks (one per execution), so it is reproducible
            w.writerow([r.execs, r.execs, r.edges, r.titles])
        return buf.getvalue()

    def write(self, out: Path) -> list[Path]:
        out.mkdir(parents=True, exist_ok=True)
        self.corpus.save(out / "corpus")
        (out / "crashes").mkdir(exist_ok=True)
        self.crashes.save(out / "crashes")
        (out / "report.json").write_text(self.dumps(), encoding="utf-8")
        (out / "coverage.csv").write_text(self.coverage_csv(), encoding="utf-8")
        return [out / "report.json", out / "coverage.csv"]


class Worker:
    def __init__(self, program, ds, cfg: CampaignConfig, wid: int) -> None:
        self.kernel = boot(program)
        self.builder = Builder(ds, cfg.mode, cfg.max_threads, cfg.max_calls)
        self.mutator = Mutator(self.builder, cfg.relation_p)
        self.rng = SplitMix64(derive_seed(cfg.seed, wid))
        self.corpus = Corpus()
        self.corpus_cases: list[TestCase] = []
        self.cov: set = set()
        self.crashes = CrashDB()
        self.execs = 0
        self.min_execs = 0
        self.fatal = 0
        self.outbox_entries: list = []
        self.outbox_crashes: list = []
        self._epoch_start = 0

    def execute(self, case: TestCase):
        self.min_execs += 1
        return run_case(self.kernel, case)

    def _add_entry(self, case, edges, coverage, share: bool) -> None:
        self.corpus.add(case, edges, coverage)
        self.corpus_cases.append(case)
        if share:
            self.outbox_entries.append((case, frozenset(edges), frozenset(coverage)))

    def step(self, exec_base: int) -> None:
        rng = self.rng
        if not self.corpus.entries or rng.chance(GENERATE_P):
            case = self.builder.random_case(rng)
        else:
            case = self.mutator.mutate(self.corpus.pick(rng).case, self.corpus_cases, rng)
        res = run_case(self.kernel, case)
        self.execs += 1
        if res.fatal is not None:
            # engine errors are logged, never treated as crashes
            self.fatal += 1
            return
        new = res.coverage - self.cov
        if new and res.verdict is None:
            try:
                small = minimize(case, frozenset(new), self.execute)
            except MinimizeError:
                small = case
            self._add_entry(small, new, self.execute(small).coverage, share=True)
        self.cov |= res.coverage
        if res.verdict is not None:
            rec, fresh = self.crashes.add(res.title, case, exec_base + self.execs - self._epoch_start)  # type: ignore[arg-type]
            if fresh:
                try:
                    rec.repro = minimize(case, res.title, self.execute)  # type: ignore[arg-type]
                except MinimizeError:
                    rec.repro = case
                rec.repro_trace = self.execute(rec.repro).trace
                self.outbox_crashes.append(rec)
            else:
                self.outbox_crashes.append(("count", res.title))

    def run_epoch(self, n: int, exec_base: int, deadline: Optional[float]) -> dict:
        self._epoch_start = self.execs
        for i in range(n):
            if deadline is not None and i % 64 == 0 and time.monotonic() > deadline:
                break
            self.step(exec_base)
        out = {
            "entries": self.outbox_entries,
            "crashes": self.outbox_crashes,
            "coverage": frozenset(self.cov),
            "execs": self.execs,
            "min_execs": self.min_execs,
            "fatal": self.fatal,
            "mutations": dict(self.mutator.stats),
        }
        self.outbox_entries, self.outbox_crashes = [], []
        return out

    def import_entries(self, entries) -> None:
        for case, edges, coverage in entries:
            self._add_entry(case, edges, coverage, share=False)
            self.cov |= coverage


def _load_descriptors(cfg: CampaignConfig, program):
    if cfg.descs is None:
        return descgen.for_program(program)
    ds = descgen.load(cfg.descs)
    if ds.program_hash != program_hash(program):
        raise ConfigError("descriptor file was generated from a different program")
    return ds


def _proc_main(conn, program_path: str, descs_doc, cfg: CampaignConfig, wid: int) -> None:
    program = parse_file(program_path)
    worker = Worker(program, descs_doc, cfg, wid)
    while True:
        msg = conn.recv()
        if msg[0] == "stop":
            conn.close()
            return
        _, n, base, deadline, imports = msg
        worker.import_entries(imports)
        conn.send(worker.run_epoch(n, base, deadline))


def run_campaign(cfg: CampaignConfig) -> CampaignReport:
    cfg.validate()
    program = parse_file(cfg.program)
    ds = _load_descriptors(cfg, program)
    report = CampaignReport(cfg, program_hash(program))
    report.timeline.append(TimelineRow(0, 0, 0))
    if cfg.budget_execs == 0:
        return report
    deadline = time.monotonic() + cfg.budget_seconds if cfg.budget_seconds is not None else None
    k = cfg.workers
    local: list[Worker] = []
    procs, conns = [], []
    if k == 1:
        local.append(Worker(program, ds, cfg, 0))
    else:
        ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
        for wid in range(k):
            parent, child = ctx.Pipe()
            p = ctx.Process(target=_proc_main, args=(child, cfg.program, ds, cfg, wid), daemon=True)
            p.start()
            procs.append(p)
            conns.append(parent)
    pending_imports: list[list] = [[] for _ in range(k)]
    per_worker_execs = [0] * k
    per_worker_min = [0] * k
    per_worker_fatal = [0] * k
    mutations: list[dict] = [{} for _ in range(k)]
    try:
        while report.executions < cfg.budget_execs:
            if deadline is not None and time.monotonic() > deadline:
                break
            remaining = cfg.budget_execs - report.executions
            shares = [min(EPOCH, remaining // k + (1 if w < remaining % k else 0)) for w in range(k)]
            base = report.executions
            if k == 1:
                results = [local[0].run_epoch(shares[0], base, deadline)]
            else:
                for w, c in enumerate(conns):
                    c.send(("epoch", shares[w], base, deadline, pending_imports[w]))
                results = [c.recv() for c in conns]
            pending_imports = [[] for _ in range(k)]
            before = report.executions
            for w, r in enumerate(results):
                report.executions += r["execs"] - per_worker_execs[w]
                per_worker_execs[w] = r["execs"]
                per_worker_min[w] = r["min_execs"]
                per_worker_fatal[w] = r["fatal"]
                mutations[w] = r["mutations"]
                for case, edges, coverage in r["entries"]:
                    fresh = coverage - report.coverage
                    if fresh:
                        report.corpus.add(case, fresh, coverage)
                        for other in range(k):
                            if other != w:
                                pending_imports[other].append((case, frozenset(fresh), coverage))
                    report.coverage |= coverage
                report.coverage |= r["coverage"]
                for item in r["crashes"]:
                    if isinstance(item, tuple):
                        report.crashes.records[item[1]].count += 1
                    elif item.title in report.crashes:
                        report.crashes.records[item.title].count += 1
                    else:
                        # later hits arrive as separate count items, so start at one
                        report.crashes.records[item.title] = CrashRecord(
                            item.title, item.first_case, item.first_seed, item.first_exec, 1, item.repro, item.repro_trace
                        )
            report.timeline.append(TimelineRow(report.executions, len(report.coverage), len(report.crashes.records)))
            if report.executions == before:
                break  # deadline hit inside every worker
    finally:
        for c in conns:
            c.send(("stop",))
        for p in procs:
            p.join(timeout=10)
    report.minimize_executions = sum(per_worker_min)
    report.fatal = sum(per_worker_fatal)
    for m in mutations:
        for name, n in m.items():
            report.mutations[name] = report.mutations.get(name, 0) + n
    return report
