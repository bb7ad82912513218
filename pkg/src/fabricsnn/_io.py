"""Small IO helpers: run manifests, atomic writes, duration parsing."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import time
from pathlib import Path
from typing import Mapping

from .errors import SchemaError

_DURATION_SUFFIXES = (
    ("ns", 1e-9), ("us", 1e-6), ("µs", 1e-6), ("ms", 1e-3), ("s", 1.0),
)


def parse_duration(text: str) -> float:
    """Parse '10ms', '1us', '2.5e-3s' or a bare number of seconds."""
    raw = text.strip()
    for suffix, scale in _DURATION_SUFFIXES:
        if raw.endswith(suffix):
            try:
                return float(raw[: -len(suffix)]) * scale
            except ValueError as exc:
                raise SchemaError(f"bad duration {text!r}") from exc
    try:
        return float(raw)
    except ValueError as exc:
        raise SchemaError(f"bad duration {text!r}") from exc


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def build_manifest(
    command: str,
    input_paths: Mapping[str, str | Path],
    seeds: Mapping[str, int] | None = None,
) -> dict:
    """Provenance block embedded in every emitted report.

    Identical inputs and seeds give identical report bodies; only the
    timestamp varies and comparisons must exclude it.
    """
    from . import __version__
    from ._kernels import BACKEND

    return {
        "command": command,
        "inputs": {name: sha256_file(path) for name, path in input_paths.items()},
        "seeds": dict(seeds or {}),
        "tool_version": __version__,
        "kernel_backend": BACKEND,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }


def atomic_write_text(path: str | Path, content: str) -> None:
    """Write via a temp file and rename, so failures leave no partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=False)


def worker_count(requested: int | None = None) -> int:
    """Resolve worker parallelism: argument, else FABRIC_SNN_THREADS, else 1.

    A value of 0 means auto (one worker per CPU).
    """
    if requested is None:
        raw = os.environ.get("FABRIC_SNN_THREADS", "").strip()
        if not raw:
            return 1
        try:
            requested = int(raw)
        except ValueError as exc:
            raise SchemaError(f"FABRIC_SNN_THREADS={raw!r} is not an integer") from exc
    if requested < 0:
        raise ValueError("worker count must be >= 0")
    if requested == 0:
        return os.cpu_count() or 1
    return requested
