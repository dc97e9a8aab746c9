"""Run manifests: what a command read, how it was configured, what it wrote."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    inputs: dict[str, str] = field(default_factory=dict)  # role -> path
    config: dict = field(default_factory=dict)
    seed: int | None = None
    outputs: list[Path] = field(default_factory=list)
    tool_version: str = __version__

    def to_json(self) -> dict:
        return {
            "command": self.command,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "config": self.config,
            "inputs": {role: {"path": str(p), "sha256": sha256_file(p)}
                       for role, p in sorted(self.inputs.items())},
            # Outputs are recorded relative to the manifest's directory.
            "outputs": [{"path": Path(p).name, "sha256": sha256_file(p)} for p in self.outputs],
        }

    def write(self, path) -> Path:
        path = Path(path)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def verify(manifest_path) -> list[str]:
    """Paths whose current digest differs from the manifest (empty when all match)."""
    manifest_path = Path(manifest_path)
    obj = json.loads(manifest_path.read_text(encoding="utf-8"))
    bad = []
    for entry in obj["inputs"].values():
        if not Path(entry["path"]).exists() or sha256_file(entry["path"]) != entry["sha256"]:
            bad.append(entry["path"])
    for entry in obj["outputs"]:
        p = manifest_path.parent / entry["path"]
        if not p.exists() or sha256_file(p) != entry["sha256"]:
            bad.append(str(p))
    return bad
