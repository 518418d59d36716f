"""Comparing campaigns: per-mode medians over seeds for edges and titles over time."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

from .manifest import ManifestError, RunManifest

METRICS = ("edges", "titles")
CI_LEVEL = 0.95


@dataclass
class CampaignRun:
    path: Path
    mode: str
    seed: int
    program_hash: str
    rows: list[tuple[int, int, int]]  # (execs, edges, titles), ascending execs
    titles: list[str]

    def value_at(self, execs: int, metric: str) -> int:
        """Step-function value of ``metric`` at ``execs`` (last row not after it)."""
        col = 1 if metric == "edges" else 2
        v = 0
        for r in self.rows:
            if r[0] > execs:
                break
            v = r[col]
        return v

    @property
    def final(self) -> dict:
        last = self.rows[-1] if self.rows else (0, 0, 0)
        return {"execs": last[0], "edges": last[1], "titles": last[2]}


def read_coverage_csv(text: str) -> list[tuple[int, int, int]]:
    rows = []
    for rec in csv.DictReader(io.StringIO(text)):
        rows.append((int(rec["execs"]), int(rec["edges"]), int(rec["titles"])))
    return sorted(rows)


def load_run(directory: Path) -> CampaignRun:
    directory = Path(directory)
    manifest = RunManifest.read(directory)
    if "fuzz" not in manifest.outputs:
        raise ManifestError(f"{directory}: manifest has no fuzz stage")
    manifest.verify(directory)
    report = json.loads((directory / "report.json").read_text(encoding="utf-8"))
    if report.get("program_hash") != manifest.program_hash:
        raise ManifestError(f"{directory}: report and manifest disagree on the program")
    rows = read_coverage_csv((directory / "coverage.csv").read_text(encoding="utf-8"))
    return CampaignRun(directory, report["mode"], int(report["seed"]), manifest.program_hash, rows, list(report["titles"]))


def median_ci(values, level: float = CI_LEVEL) -> tuple[float, float, float]:
    """Median with a distribution-free order-statistic interval.

    The interval is [x(k), x(n-k+1)] for the largest k whose two-sided
    binomial tail stays within ``1 - level``; with too few samples for that
    it widens to the full range.
    """
    xs = sorted(values)
    n = len(xs)
    if n == 0:
        raise ValueError("no values")
    med = statistics.median(xs)
    alpha = 1.0 - level
    k = 0
    tail = 0.0
    for j in range(n // 2 + 1):
        # P(Binomial(n, 1/2) <= j)
        tail += math.comb(n, j) / 2**n
        if 2 * tail > alpha:
            break
        k = j + 1
    k = max(k, 1)
    return med, float(xs[k - 1]), float(xs[n - k])


@dataclass
class Comparison:
    program_hash: str
    modes: dict[str, list[CampaignRun]]
    checkpoints: list[int]

    def series(self, metric: str) -> list[dict]:
        out = []
        for mode in self.modes:
            runs = self.modes[mode]
            for x in self.checkpoints:
                med, lo, hi = median_ci([r.value_at(x, metric) for r in runs])
                out.append({"mode": mode, "execs": x, "median": med, "ci_lo": lo, "ci_hi": hi, "n": len(runs)})
        return out

    def series_csv(self, metric: str) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["mode", "execs", "median", "ci_lo", "ci_hi", "n"])
        for r in self.series(metric):
            w.writerow([r["mode"], r["execs"], _num(r["median"]), _num(r["ci_lo"]), _num(r["ci_hi"]), r["n"]])
        return buf.getvalue()

    def summary(self) -> dict:
        modes = {}
        for mode, runs in self.modes.items():
            entry: dict = {"seeds": [r.seed for r in runs]}
            for metric in METRICS:
                med, lo, hi = median_ci([r.final[metric] for r in runs])
                entry[metric] = {"median": med, "ci_lo": lo, "ci_hi": hi, "per_seed": [r.final[metric] for r in runs]}
            hits: dict[str, int] = {}
            for r in runs:
                for t in r.titles:
                    hits[t] = hits.get(t, 0) + 1
            entry["title_hits"] = dict(sorted(hits.items()))
            modes[mode] = entry
        return {"program_hash": self.program_hash, "ci_level": CI_LEVEL, "modes": modes}

    def table(self) -> str:
        lines = [f"{'mode':<18} {'seeds':>5} {'edges (median [ci])':>22} {'titles (median [ci])':>22}"]
        for mode, e in self.summary()["modes"].items():
            cells = [f"{_num(e[m]['median'])} [{_num(e[m]['ci_lo'])}, {_num(e[m]['ci_hi'])}]" for m in METRICS]
            lines.append(f"{mode:<18} {len(e['seeds']):>5} {cells[0]:>22} {cells[1]:>22}")
        return "\n".join(lines) + "\n"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:.1f}"


def compare(dirs) -> Comparison:
    runs = [load_run(Path(d)) for d in dirs]
    if not runs:
        raise ManifestError("no campaign directories given")
    hashes = {r.program_hash for r in runs}
    if len(hashes) != 1:
        raise ManifestError("campaigns were run on different programs")
    modes: dict[str, list[CampaignRun]] = {}
    for r in sorted(runs, key=lambda r: (r.mode, r.seed, str(r.path))):
        modes.setdefault(r.mode, []).append(r)
    points = sorted({row[0] for r in runs for row in r.rows})
    return Comparison(hashes.pop(), modes, points)
