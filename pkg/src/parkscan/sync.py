"""Poll-detect-publish cycle over an object store.

Each unprocessed source image is fetched, run through the detector and
published as a result image plus a result text object; the processed marker is
persisted immediately afterwards. Re-running after a crash at any point is
safe: ids are content-addressed, puts are idempotent and detection is
deterministic, so each source ends up with exactly one result pair.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

from .store import ObjectKind, StoreUnavailableError


@dataclass
class SyncState:
    """Processed-id set, persisted as `<object_id>\\t<unix_seconds>` lines."""

    path: str | None = None
    processed_ids: set = field(default_factory=set)
    last_poll: float | None = None

    @classmethod
    def load(cls, path) -> "SyncState":
        path = os.fspath(path)
        ids = set()
        if os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.rstrip("\n")
                    if line:
                        ids.add(line.split("\t", 1)[0])
        return cls(path=path, processed_ids=ids)

    def mark(self, oid: str, now: float | None = None) -> None:
        if oid in self.processed_ids:
            return
        self.processed_ids.add(oid)
        if self.path is None:
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(f"{oid}\t{int(now if now is not None else time.time())}\n")
            fh.flush()
            os.fsync(fh.fileno())


@dataclass(frozen=True)
class SyncSummary:
    processed: tuple
    failed: tuple  # ((object_id, error message), ...)

    @property
    def ok(self) -> bool:
        return not self.failed


def sync_cycle(store, analyze, state: SyncState) -> SyncSummary:
    """One pass over unprocessed source images.

    ``analyze(StoredObject) -> (annotated_ppm_bytes, bit_string)``. Per-object
    failures are recorded and the cycle moves on; a transport-level store
    failure aborts the whole cycle (retryable) without touching state.
    """
    source_ids = store.list(ObjectKind.SOURCE_IMAGE)
    processed = []
    failed = []
    for oid in source_ids:
        if oid in state.processed_ids:
            continue
        try:
            obj = store.fetch(oid)
            annotated, bits = analyze(obj)
            store.put(ObjectKind.RESULT_IMAGE, f"{oid}.annotated.ppm", annotated)
            store.put(ObjectKind.RESULT_TEXT, f"{oid}.slots.txt", (bits + "\n").encode("ascii"))
            state.mark(oid)
            processed.append(oid)
        except StoreUnavailableError:
            raise
        except Exception as exc:  # noqa: BLE001 - per-object isolation is the contract
            failed.append((oid, f"{type(exc).__name__}: {exc}"))
    state.last_poll = time.time()
    return SyncSummary(tuple(processed), tuple(failed))


def poll_sync(store, analyze, state: SyncState, interval: float = 5.0, cycles: int | None = None):
    """Run sync cycles forever (or ``cycles`` times), sleeping in between.

    Store-down cycles are retried after the same interval.
    """
    done = 0
    while cycles is None or done < cycles:
        try:
            yield sync_cycle(store, analyze, state)
        except StoreUnavailableError as exc:
            yield SyncSummary((), (("<store>", f"unavailable: {exc}"),))
        done += 1
        if cycles is None or done < cycles:
            time.sleep(interval)
