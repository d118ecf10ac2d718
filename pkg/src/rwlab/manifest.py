"""Run manifests and deterministic output writers.

Every file written by the CLI starts with a comment line
``# rwlab <version> manifest=<sha256>`` identifying the run that made it.
The hash covers the canonical JSON of the command, configuration, tool
version and arithmetic mode, so it is stable across platforms.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: dict = field(default_factory=dict)
    mode: str = "float"
    version: str = __version__

    def to_dict(self) -> dict:
        return {"command": self.command, "config": self.config, "mode": self.mode,
                "version": self.version}

    @property
    def digest(self) -> str:
        return hashlib.sha256(canonical_json(self.to_dict()).encode()).hexdigest()

    def to_json(self) -> str:
        return canonical_json({**self.to_dict(), "sha256": self.digest})

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        d = json.loads(text)
        digest = d.pop("sha256", None)
        m = cls(**d)
        if digest is not None and digest != m.digest:
            raise ValueError("manifest hash does not match its contents")
        return m

    @property
    def header(self) -> str:
        return f"# rwlab {self.version} manifest={self.digest}"


def write_csv(path: Path, header: list, rows, manifest: RunManifest):
    with open(path, "w", newline="") as fh:
        fh.write(manifest.header + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_jsonl(path: Path, records, manifest: RunManifest):
    with open(path, "w") as fh:
        fh.write(manifest.header + "\n")
        for rec in records:
            fh.write(canonical_json(rec) + "\n")


def write_manifest(path: Path, manifest: RunManifest):
    Path(path).write_text(manifest.to_json() + "\n")


def read_jsonl(path: Path) -> list:
    """Records of a JSONL file written by :func:`write_jsonl`, header skipped."""
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip() and not line.startswith("#")]
