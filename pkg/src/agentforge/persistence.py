"""Run-directory persistence: archive, manifest, and resumable checkpoints.

Everything is JSON written atomically (temp file + rename) with sorted keys,
so identical run state always serializes to identical bytes.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Optional

from .errors import ConfigDriftError, MigrationError, ParseError, StateError
from .records import Archive, archive_from_dict, archive_to_dict

ARCHIVE_FILENAME = "archive.json"
STATE_FILENAME = "state.json"
MANIFEST_FILENAME = "run.json"
LEDGER_FILENAME = "ledger.json"
STATE_VERSION = 1


def save_json_atomic(path: Path, payload: Any) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True, ensure_ascii=False)
            handle.write("\n")
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except FileNotFoundError:
            pass
        raise


def load_json(path: Path) -> Any:
    path = Path(path)
    if not path.exists():
        raise StateError(f"{path} does not exist")
    try:
        with path.open(encoding="utf-8") as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc


def save_archive(path: Path, archive: Archive) -> None:
    save_json_atomic(path, archive_to_dict(archive))


def load_archive(path: Path) -> Archive:
    payload = load_json(path)
    version = payload.get("version")
    if version != 1:
        raise MigrationError(f"archive schema version {version!r} is not supported (expected 1)")
    return archive_from_dict(payload)


def write_manifest(run_dir: Path, run_id: str, config_payload: dict[str, Any], config_hash: str) -> None:
    save_json_atomic(
        Path(run_dir) / MANIFEST_FILENAME,
        {"run_id": run_id, "config": config_payload, "config_hash": config_hash, "version": 1},
    )


def write_state(
    run_dir: Path,
    *,
    config_hash: str,
    next_iteration: int,
    archive: Archive,
    backend_state: Optional[dict[str, Any]],
    ledger_snapshot: dict[str, Any],
) -> None:
    save_json_atomic(
        Path(run_dir) / STATE_FILENAME,
        {
            "version": STATE_VERSION,
            "config_hash": config_hash,
            "next_iteration": next_iteration,
            "archive": archive_to_dict(archive),
            "backend": backend_state,
            "ledger": ledger_snapshot,
        },
    )


def load_state(run_dir: Path, config_hash: str) -> dict[str, Any]:
    state = load_json(Path(run_dir) / STATE_FILENAME)
    version = state.get("version")
    if version != STATE_VERSION:
        raise MigrationError(f"state schema version {version!r} is not supported")
    saved = state.get("config_hash")
    if saved != config_hash:
        raise ConfigDriftError(
            f"run was started with config hash {saved}, resume attempted with {config_hash}"
        )
    return state


def has_state(run_dir: Path) -> bool:
    return (Path(run_dir) / STATE_FILENAME).exists()
