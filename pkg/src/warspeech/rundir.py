"""Run-directory bookkeeping for the pipeline commands.

Every stage writes its artifacts under one directory and records their
sha256 digests in run_manifest.json.  Before a downstream stage consumes
an artifact, the digest is rechecked, so out-of-band edits to an upstream
file fail loudly instead of silently skewing results.  The manifest holds
configs, seeds, and digests only; no timestamps, so rerunning a stage with
the same inputs rewrites identical bytes.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .corpus import file_digest
from .errors import PipelineError

ENV_RUN_DIR = "WARSPEECH_RUN_DIR"
DEFAULT_RUN_DIR = "warspeech_run"
MANIFEST_NAME = "run_manifest.json"


def resolve_run_dir(flag_value: str | None) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get(ENV_RUN_DIR)
    if env:
        return Path(env)
    return Path(DEFAULT_RUN_DIR)


class RunDir:
    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.path / MANIFEST_NAME

    def artifact(self, name: str) -> Path:
        return self.path / name

    def require(self, name: str, hint: str) -> Path:
        p = self.artifact(name)
        if not p.exists():
            raise PipelineError(f"missing {hint}: expected {p} (run the producing stage first)")
        return p

    def load_manifest(self) -> dict:
        if not self.manifest_path.exists():
            return {"stages": {}}
        try:
            return json.loads(self.manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise PipelineError(f"unreadable run manifest {self.manifest_path}: {exc}") from exc

    def save_manifest(self, data: dict) -> None:
        text = json.dumps(data, sort_keys=True, indent=2) + "\n"
        self.manifest_path.write_text(text, encoding="utf-8")

    def verify_inputs(self, names: list[str]) -> None:
        """Check each named artifact against the digest its producer recorded."""
        manifest = self.load_manifest()
        recorded: dict[str, tuple[str, str]] = {}
        for stage, entry in manifest.get("stages", {}).items():
            for name, digest in entry.get("outputs", {}).items():
                recorded[name] = (stage, digest)
        for name in names:
            if name not in recorded:
                continue  # not produced by a tracked stage; existence checked elsewhere
            stage, digest = recorded[name]
            p = self.artifact(name)
            if not p.exists():
                raise PipelineError(f"{name} (from stage {stage!r}) is missing from the run directory")
            actual = file_digest(p)
            if actual != digest:
                raise PipelineError(
                    f"{name} was modified after stage {stage!r} produced it "
                    f"(digest {actual[:12]}.. != recorded {digest[:12]}..)"
                )

    def record_stage(self, stage: str, config: dict, outputs: list[str], seed: int | None = None) -> None:
        manifest = self.load_manifest()
        entry = {
            "config": config,
            "outputs": {name: file_digest(self.artifact(name)) for name in outputs},
        }
        if seed is not None:
            entry["seed"] = seed
        manifest.setdefault("stages", {})[stage] = entry
        self.save_manifest(manifest)
