"""Run manifests: one ``manifest.json`` per output directory.

A manifest records the tool version, the program hash, each stage's
configuration and time, and a SHA-256 per output file. Stages writing into
the same directory extend one manifest; a different program is refused.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__

MANIFEST_NAME = "manifest.json"


class ManifestError(Exception):
    pass


def sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    program_hash: str
    version: str = __version__
    config: dict = field(default_factory=dict)  # stage -> config snapshot
    timestamps: dict = field(default_factory=dict)  # stage -> {"started", "finished"}
    outputs: dict = field(default_factory=dict)  # stage -> {relative path: sha256}

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "program_hash": self.program_hash,
            "config": self.config,
            "timestamps": self.timestamps,
            "outputs": self.outputs,
        }

    @classmethod
    def from_json(cls, d: dict) -> "RunManifest":
        try:
            return cls(d["program_hash"], d["version"], dict(d["config"]), dict(d["timestamps"]), dict(d["outputs"]))
        except (KeyError, TypeError) as e:
            raise ManifestError(f"malformed manifest: {e}") from None

    @classmethod
    def read(cls, directory: Path) -> "RunManifest":
        p = Path(directory) / MANIFEST_NAME
        if not p.is_file():
            raise ManifestError(f"{directory}: no {MANIFEST_NAME}")
        try:
            return cls.from_json(json.loads(p.read_text(encoding="utf-8")))
        except json.JSONDecodeError as e:
            raise ManifestError(f"{p}: {e}") from None

    def write(self, directory: Path) -> Path:
        p = Path(directory) / MANIFEST_NAME
        p.write_text(json.dumps(self.to_json(), indent=2) + "\n", encoding="utf-8")
        return p

    def verify(self, directory: Path) -> None:
        """Raise unless every recorded output exists with its recorded hash."""
        for stage, files in self.outputs.items():
            for rel, digest in files.items():
                p = Path(directory) / rel
                if not p.is_file():
                    raise ManifestError(f"{directory}: {stage} output {rel} is missing")
                if sha256_file(p) != digest:
                    raise ManifestError(f"{directory}: {stage} output {rel} does not match its hash")


def record_stage(directory: Path, program_hash: str, stage: str, config: dict, outputs, started: str) -> RunManifest:
    """Add (or replace) one stage in the directory's manifest."""
    directory = Path(directory)
    if (directory / MANIFEST_NAME).is_file():
        m = RunManifest.read(directory)
        if m.program_hash != program_hash:
            raise ManifestError(f"{directory} already holds outputs for a different program")
    else:
        m = RunManifest(program_hash)
    m.version = __version__
    m.config[stage] = config
    m.timestamps[stage] = {"started": started, "finished": _now()}
    root = directory.resolve()
    m.outputs[stage] = {Path(p).resolve().relative_to(root).as_posix(): sha256_file(p) for p in sorted(map(Path, outputs))}
    m.write(directory)
    return m


now = _now
