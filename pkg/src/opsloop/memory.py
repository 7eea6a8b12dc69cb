"""Three-layer memory: raw context (24 h TTL), task queue, compressed cache (7 d TTL).

All timestamps are logical simulator seconds. Expiry is driven explicitly by
`expire(now)`; retrievability is additionally gated by age at query time, so
an entry past its TTL is invisible even before the next purge. A flat mode
(used by the memory ablation) disables TTL gating and priority ordering.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import IO, Iterable

from .errors import (
    ClockRegressionError,
    ContractViolationError,
    DuplicateEntryError,
)
from .model import Task, TaskStatus

logger = logging.getLogger(__name__)

RAW_TTL_SECONDS = 24 * 3600.0
COMPRESSED_TTL_SECONDS = 7 * 24 * 3600.0


class ContextSource(str, Enum):
    PROBE = "Probe"
    EXECUTOR = "Executor"
    ENVIRONMENT = "Environment"


class Layer(str, Enum):
    RAW = "Raw"
    COMPRESSED = "Compressed"


@dataclass(frozen=True)
class RawContextEntry:
    entry_id: str
    created_at: float
    source: ContextSource
    text: str
    critical_tags: frozenset[str] = frozenset()
    ttl: float = RAW_TTL_SECONDS


@dataclass(frozen=True)
class CompressedContextEntry:
    entry_id: str
    created_at: float
    summary_text: str
    source_entry_ids: frozenset[str]
    preserved_tags: frozenset[str] = frozenset()
    ttl: float = COMPRESSED_TTL_SECONDS
    degraded: bool = False

    def __post_init__(self):
        if not self.source_entry_ids:
            raise ContractViolationError("compressed entry needs source entries")


@dataclass
class _QueueItem:
    task: Task
    seq: int


class MemoryStore:
    """Single-writer store backing all three layers.

    The engine routes every mutation through its loop, so no locking is done
    here; concurrent readers are safe because entries are immutable values.
    """

    def __init__(
        self,
        raw_ttl: float = RAW_TTL_SECONDS,
        compressed_ttl: float = COMPRESSED_TTL_SECONDS,
        flat: bool = False,
        persist_path: str | Path | None = None,
    ):
        self.raw_ttl = float(raw_ttl)
        self.compressed_ttl = float(compressed_ttl)
        self.flat = flat
        self._now = 0.0
        self._last_expire = 0.0
        self._raw: dict[str, RawContextEntry] = {}
        self._compressed: dict[str, CompressedContextEntry] = {}
        # Tags of every raw entry ever stored; survives purges so that
        # compressed entries can be validated after their sources expire.
        self._raw_tags_seen: dict[str, frozenset[str]] = {}
        self._queue: list[_QueueItem] = []
        self._known_tasks: set[str] = set()
        self._done_tasks: set[str] = set()
        self._seq = 0
        self.put_count = 0
        self.expired_count = 0
        self._persist: IO[str] | None = None
        if persist_path is not None:
            self._persist = open(persist_path, "a", encoding="utf-8")

    # -- clock ---------------------------------------------------------------

    @property
    def now(self) -> float:
        return self._now

    def advance(self, now: float) -> None:
        if now < self._now:
            raise ClockRegressionError(f"clock moved from {self._now} to {now}")
        self._now = now

    # -- raw layer -----------------------------------------------------------

    def put_raw(self, entry: RawContextEntry) -> str:
        if entry.entry_id in self._raw or entry.entry_id in self._raw_tags_seen:
            raise DuplicateEntryError(f"raw entry {entry.entry_id!r} already stored")
        self._now = max(self._now, entry.created_at)
        self._raw[entry.entry_id] = entry
        self._raw_tags_seen[entry.entry_id] = entry.critical_tags
        self.put_count += 1
        self._log_entry("raw", entry.entry_id, entry.created_at, entry.ttl,
                        entry.text, sorted(entry.critical_tags))
        return entry.entry_id

    def get_raw(self, entry_id: str) -> RawContextEntry | None:
        entry = self._raw.get(entry_id)
        if entry is None or not self._alive(entry.created_at, entry.ttl):
            return None
        return entry

    # -- compressed layer ----------------------------------------------------

    def put_compressed(self, entry: CompressedContextEntry) -> str:
        if entry.entry_id in self._compressed:
            raise DuplicateEntryError(
                f"compressed entry {entry.entry_id!r} already stored"
            )
        allowed: set[str] = set()
        for src in entry.source_entry_ids:
            allowed |= self._raw_tags_seen.get(src, frozenset())
        if not entry.preserved_tags <= allowed:
            extra = sorted(entry.preserved_tags - allowed)
            raise ContractViolationError(
                f"preserved tags {extra} not present in source entries"
            )
        self._now = max(self._now, entry.created_at)
        self._compressed[entry.entry_id] = entry
        self.put_count += 1
        self._log_entry("compressed", entry.entry_id, entry.created_at, entry.ttl,
                        entry.summary_text, sorted(entry.preserved_tags))
        return entry.entry_id

    def get_compressed(self, entry_id: str) -> CompressedContextEntry | None:
        entry = self._compressed.get(entry_id)
        if entry is None or not self._alive(entry.created_at, entry.ttl):
            return None
        return entry

    # -- expiry --------------------------------------------------------------

    def expire(self, now: float) -> int:
        """Purge everything past its TTL; returns the number removed."""
        if now < self._last_expire:
            raise ClockRegressionError(
                f"expire clock moved from {self._last_expire} to {now}"
            )
        self._last_expire = now
        self.advance(now)
        if self.flat:
            return 0
        purged = 0
        for store in (self._raw, self._compressed):
            dead = [
                eid for eid, e in store.items()
                if now - e.created_at >= e.ttl
            ]
            for eid in dead:
                del store[eid]
                purged += 1
        self.expired_count += purged
        return purged

    def _alive(self, created_at: float, ttl: float) -> bool:
        if self.flat:
            return True
        return self._now - created_at < ttl

    # -- retrieval -----------------------------------------------------------

    def query_context(
        self, keywords: Iterable[str], layer: Layer
    ) -> list[RawContextEntry] | list[CompressedContextEntry]:
        """Unexpired entries of a layer ranked by keyword-overlap count.

        Ties break by recency (newer first), then by insertion order among
        same-timestamp entries.
        """
        terms = [k.lower() for k in keywords]
        if not terms:
            raise ContractViolationError("query needs at least one keyword")
        scored = []
        entries = self._raw.values() if layer is Layer.RAW else self._compressed.values()
        for pos, entry in enumerate(entries):
            if not self._alive(entry.created_at, entry.ttl):
                continue
            text = (
                entry.text if isinstance(entry, RawContextEntry) else entry.summary_text
            )
            tokens = {t.lower() for t in text.split()}
            score = sum(1 for term in terms if term in tokens)
            if score > 0:
                scored.append((-score, -entry.created_at, pos, entry))
        scored.sort(key=lambda item: item[:3])
        return [entry for *_, entry in scored]

    # -- task queue ----------------------------------------------------------

    def enqueue_task(self, task: Task) -> None:
        missing = task.depends_on - self._known_tasks - self._done_tasks
        if missing:
            raise ContractViolationError(
                f"task {task.task_id!r} depends on unknown tasks {sorted(missing)}"
            )
        if task.task_id in self._known_tasks:
            raise DuplicateEntryError(f"task {task.task_id!r} already enqueued")
        self._queue.append(_QueueItem(task=task, seq=self._seq))
        self._seq += 1
        self._known_tasks.add(task.task_id)

    def dequeue_task(self) -> Task | None:
        """Highest-priority runnable task, FIFO among equals; None when empty."""
        best: _QueueItem | None = None
        for item in self._queue:
            if not item.task.depends_on <= self._done_tasks:
                continue
            if best is None:
                best = item
            elif not self.flat and item.task.priority > best.task.priority:
                best = item
        if best is None:
            return None
        self._queue.remove(best)
        return best.task

    def complete_task(self, task_id: str) -> None:
        self._done_tasks.add(task_id)

    def fail_task(self, task_id: str) -> None:
        # A failed task never satisfies dependents; nothing extra to track.
        logger.debug("task %s marked failed", task_id)

    def dequeue_specific(self, task_id: str) -> Task | None:
        """Remove and return one queued task by id, if runnable."""
        for item in self._queue:
            if item.task.task_id == task_id:
                if not item.task.depends_on <= self._done_tasks:
                    return None
                self._queue.remove(item)
                return item.task
        return None

    def runnable_tasks(self) -> list[Task]:
        """Pending tasks whose dependencies are all complete, queue order."""
        return [
            item.task
            for item in self._queue
            if item.task.depends_on <= self._done_tasks
        ]

    def pending_components(self) -> set[str]:
        """Components targeted by any still-queued task."""
        targeted: set[str] = set()
        for item in self._queue:
            targeted |= item.task.target_components
        return targeted

    def pending_count(self) -> int:
        return len(self._queue)

    def is_done(self, task_id: str) -> bool:
        return task_id in self._done_tasks

    # -- accounting ----------------------------------------------------------

    @property
    def live_count(self) -> int:
        return len(self._raw) + len(self._compressed)

    def live_raw_entries(self) -> list[RawContextEntry]:
        return [
            e for e in self._raw.values() if self._alive(e.created_at, e.ttl)
        ]

    def live_compressed_entries(self) -> list[CompressedContextEntry]:
        return [
            e for e in self._compressed.values() if self._alive(e.created_at, e.ttl)
        ]

    # -- persistence ---------------------------------------------------------

    def _log_entry(self, kind, entry_id, created_at, ttl, text, tags) -> None:
        if self._persist is None:
            return
        record = {
            "kind": kind,
            "id": entry_id,
            "created_at": created_at,
            "ttl": ttl,
            "text": text,
            "tags": tags,
        }
        self._persist.write(json.dumps(record, sort_keys=True) + "\n")
        self._persist.flush()

    def close(self) -> None:
        if self._persist is not None:
            self._persist.close()
            self._persist = None
