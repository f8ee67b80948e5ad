"""Append-only NDJSON event log for a run directory.

Every externally visible step of a run (prompts, model calls, evaluations,
archive growth, checkpoints) lands here in arrival order, one JSON object per
line, so a run can be audited or replayed after the fact.
"""
from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any, Iterator, Optional

# Event types, in the vocabulary readers should key on.
RUN_STARTED = "run_started"
PROMPT_SENT = "prompt_sent"
RESPONSE_RECEIVED = "response_received"
FM_QUERY = "fm_query"
CANDIDATE_EVALUATED = "candidate_evaluated"
CANDIDATE_ABANDONED = "candidate_abandoned"
ARCHIVE_APPENDED = "archive_appended"
CHECKPOINT_WRITTEN = "checkpoint_written"
RUN_FINISHED = "run_finished"


class EventLog:
    """Thread-safe appender over a single events.jsonl file."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._seq = 0
        if self.path.exists():
            with self.path.open("r", encoding="utf-8") as fh:
                self._seq = sum(1 for line in fh if line.strip())

    def append(self, event_type: str, **payload: Any) -> dict[str, Any]:
        with self._lock:
            record = {"seq": self._seq, "event": event_type, **payload}
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
            self._seq += 1
        return record

    def __iter__(self) -> Iterator[dict[str, Any]]:
        if not self.path.exists():
            return iter(())
        with self.path.open("r", encoding="utf-8") as fh:
            lines = [json.loads(line) for line in fh if line.strip()]
        return iter(lines)


class NullEventLog:
    """Stand-in when no run directory exists: swallows events."""

    def append(self, event_type: str, **payload: Any) -> dict[str, Any]:
        return {"event": event_type, **payload}

    def __iter__(self) -> Iterator[dict[str, Any]]:
        return iter(())


def open_event_log(run_dir: Optional[Path]) -> Any:
    if run_dir is None:
        return NullEventLog()
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    return EventLog(run_dir / "events.jsonl")
