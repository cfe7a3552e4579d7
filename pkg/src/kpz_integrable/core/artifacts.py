import hashlib
import json
import logging
import platform
import time
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional

import jsonschema
import numpy as np
import pandas as pd
import scipy

from kpz_integrable.core.config import CSV_SIGNIFICANT_DIGITS, DEFAULT_SEED, schema_path

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
CSV_FLOAT_FORMAT = f"%.{CSV_SIGNIFICANT_DIGITS}g"


def library_versions() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
    }


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def load_trajectory_schema() -> Dict[str, Any]:
    with open(schema_path(), "r", encoding="utf-8") as f:
        return json.load(f)


def validate_trajectory(payload: Mapping[str, Any]) -> None:
    """Raises jsonschema.ValidationError when the payload does not match the shipped schema."""
    jsonschema.validate(instance=payload, schema=load_trajectory_schema())


class RunManifest:
    """Everything needed to reproduce a CLI run, plus where its output went."""

    def __init__(self, subcommand: str, parameters: Optional[Mapping[str, Any]] = None, seed: int = DEFAULT_SEED):
        self.subcommand = subcommand
        self.parameters: Dict[str, Any] = dict(parameters or {})
        self.seed = seed
        self.versions = library_versions()
        self.timings: Dict[str, float] = {}
        self.outputs: Dict[str, Dict[str, str]] = {}
        self.errors: List[Dict[str, Any]] = []

    def add_output(self, name: str, path: Path) -> None:
        self.outputs[name] = {"path": str(path), "sha256": file_sha256(path)}
        logger.info(f"Wrote {name} to {path}")

    def add_timing(self, label: str, seconds: float) -> None:
        self.timings[label] = round(seconds, 6)

    def add_error(self, where: str, error: str) -> None:
        self.errors.append({"where": where, "error": error})
        logger.warning(f"Run error [{where}]: {error}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "parameters": self.parameters,
            "seed": self.seed,
            "versions": self.versions,
            "timings": self.timings,
            "outputs": self.outputs,
            "errors": self.errors,
        }


class ArtifactWriter:
    """Writes a run's tables and JSON payloads under one directory.

    Payload files carry numbers only, so equal inputs give byte-identical
    files; the manifest (timings included) is written on exit.
    """

    def __init__(self, out_dir, manifest: RunManifest, manifest_name: str = MANIFEST_NAME):
        self.out_dir = Path(out_dir)
        self.manifest = manifest
        self.manifest_name = manifest_name
        self._started: Optional[float] = None

    def __enter__(self):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self._started = time.perf_counter()
        logger.debug(f"ArtifactWriter opened {self.out_dir.resolve()}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        if exc_type is not None:
            self.manifest.add_error(self.manifest.subcommand, f"{exc_type.__name__}: {exc_val}")
        if self._started is not None:
            self.manifest.add_timing("total_seconds", time.perf_counter() - self._started)
        self.write_manifest()

    @property
    def manifest_path(self) -> Path:
        return self.out_dir / self.manifest_name

    def write_table(self, name: str, table: pd.DataFrame) -> Path:
        path = self.out_dir / name
        table.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        self.manifest.add_output(name, path)
        return path

    def write_json(self, name: str, payload: Mapping[str, Any], trajectory: bool = False) -> Path:
        if trajectory:
            validate_trajectory(payload)
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        self.manifest.add_output(name, path)
        return path

    def write_manifest(self) -> Path:
        with open(self.manifest_path, "w", encoding="utf-8") as f:
            json.dump(self.manifest.to_dict(), f, indent=2, sort_keys=True, default=str)
            f.write("\n")
        return self.manifest_path
