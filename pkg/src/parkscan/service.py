"""Slot-state HTTP service: occupancy merged with reservations, single and
combined booking, navigation links and the latest annotated image.

All mutation funnels through one lock per lot; reservation events are appended
to a durable ledger before the call returns, and replaying that ledger from
empty always reproduces the live reserved flags.
"""

import base64
import json
import os
import tempfile
import threading
import time

from .config import LotConfig
from .store import ObjectKind

NAV_URL_TEMPLATE = "https://www.google.com/maps/dir/?api=1&destination={lat:.6f},{lon:.6f}"


class ServiceError(Exception):
    def __init__(self, code: str, message: str, status: int):
        super().__init__(message)
        self.code = code
        self.message = message
        self.status = status


def _err(code: str, message: str, status: int) -> ServiceError:
    return ServiceError(code, message, status)


def navigation_url(lat: float, lon: float) -> str:
    return NAV_URL_TEMPLATE.format(lat=lat, lon=lon)


def replay_reserved(events) -> dict[int, str]:
    """Fold a ledger event sequence into the reserved-by map."""
    reserved: dict[int, str] = {}
    for ev in events:
        if ev["action"] == "reserve":
            reserved[ev["slot"]] = ev["client"]
        elif ev["action"] == "release":
            reserved.pop(ev["slot"], None)
    return reserved


class LotService:
    """State machine for one lot, with file-backed persistence."""

    def __init__(self, config: LotConfig, data_dir=None):
        self.config = config
        self._lock = threading.Lock()
        self._occupancy = "0" * config.slot_count
        self._updated_at: float | None = None
        self._reserved: dict[int, str] = {}
        self._annotated: bytes | None = None
        self._dir = None
        if data_dir is not None:
            self._dir = os.path.join(os.fspath(data_dir), config.lot_id)
            os.makedirs(self._dir, exist_ok=True)
            self._restore()

    # -- persistence ------------------------------------------------------

    def _ledger_path(self):
        return os.path.join(self._dir, "ledger.jsonl")

    def _occupancy_path(self):
        return os.path.join(self._dir, "occupancy.json")

    def _annotated_path(self):
        return os.path.join(self._dir, "annotated.ppm")

    def _restore(self):
        if os.path.exists(self._occupancy_path()):
            with open(self._occupancy_path(), "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            if len(doc.get("bit_string", "")) == self.config.slot_count:
                self._occupancy = doc["bit_string"]
                self._updated_at = doc.get("updated_at")
        if os.path.exists(self._ledger_path()):
            events = []
            with open(self._ledger_path(), "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        events.append(json.loads(line))
            self._reserved = replay_reserved(events)
        if os.path.exists(self._annotated_path()):
            with open(self._annotated_path(), "rb") as fh:
                self._annotated = fh.read()

    def _append_event(self, action: str, slot: int, client: str, ts: float):
        if self._dir is None:
            return
        with open(self._ledger_path(), "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"ts": ts, "slot": slot, "action": action, "client": client}) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def _write_atomic(self, path: str, payload: bytes):
        fd, tmp = tempfile.mkstemp(dir=self._dir, prefix=".tmp-")
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    # -- operations ---------------------------------------------------------

    def check_lot(self, lot_id: str):
        if lot_id != self.config.lot_id:
            raise _err("unknown_lot", f"no such lot: {lot_id}", 404)

    def _check_slot(self, index: int):
        if not 0 <= index < self.config.slot_count:
            raise _err("unknown_slot", f"no such slot: {index}", 404)

    def ingest_report(self, bit_string: str, annotated: bytes | None = None,
                      now: float | None = None) -> None:
        """Update occupancy from a detector bit-string; reservations untouched."""
        if len(bit_string) != self.config.slot_count or set(bit_string) - {"0", "1"}:
            raise _err(
                "bad_bit_string",
                f"need {self.config.slot_count} chars of 0/1, got {bit_string!r}",
                400,
            )
        with self._lock:
            self._occupancy = bit_string
            self._updated_at = now if now is not None else time.time()
            if annotated is not None:
                self._annotated = annotated
            if self._dir is not None:
                doc = {"bit_string": self._occupancy, "updated_at": self._updated_at}
                self._write_atomic(self._occupancy_path(), json.dumps(doc).encode())
                if annotated is not None:
                    self._write_atomic(self._annotated_path(), annotated)

    def snapshot(self) -> list[dict]:
        with self._lock:
            occupancy = self._occupancy
            reserved = dict(self._reserved)
            updated_at = self._updated_at
        slots = []
        for i in range(self.config.slot_count):
            lat, lon = self.config.gps[i]
            slots.append(
                {
                    "index": i,
                    "occupancy": "occupied" if occupancy[i] == "1" else "vacant",
                    "reserved": i in reserved,
                    "reserved_by": reserved.get(i, ""),
                    "gps": {"lat": lat, "lon": lon},
                    "nav_url": navigation_url(lat, lon),
                    "updated_at": updated_at,
                }
            )
        return slots

    def reserve(self, index: int, client: str) -> dict:
        self._check_slot(index)
        if not client:
            raise _err("missing_client", "a client token is required", 400)
        with self._lock:
            if index in self._reserved:
                raise _err("already_reserved", f"slot {index} is already reserved", 409)
            if self._occupancy[index] == "1":
                raise _err("slot_occupied", f"slot {index} is occupied", 412)
            ts = time.time()
            self._append_event("reserve", index, client, ts)
            self._reserved[index] = client
        return {"slot": index, "reserved": True, "reserved_by": client}

    def reserve_all(self, client: str) -> list[int]:
        """Reserve every currently vacant, unreserved slot; returns indices."""
        if not client:
            raise _err("missing_client", "a client token is required", 400)
        taken = []
        with self._lock:
            for i in range(self.config.slot_count):
                if i in self._reserved or self._occupancy[i] == "1":
                    continue
                ts = time.time()
                self._append_event("reserve", i, client, ts)
                self._reserved[i] = client
                taken.append(i)
        return taken

    def release(self, index: int, client: str) -> dict:
        self._check_slot(index)
        with self._lock:
            holder = self._reserved.get(index)
            if holder is None:
                raise _err("not_reserved", f"slot {index} is not reserved", 409)
            if holder != client:
                raise _err("wrong_client", "reservation belongs to another client", 403)
            ts = time.time()
            self._append_event("release", index, client, ts)
            del self._reserved[index]
        return {"slot": index, "reserved": False}

    def navigation(self, index: int) -> dict:
        self._check_slot(index)
        lat, lon = self.config.gps[index]
        return {"lat": lat, "lon": lon, "url": navigation_url(lat, lon)}

    def annotated_image(self) -> bytes:
        with self._lock:
            if self._annotated is None:
                raise _err("no_image", "no annotated image ingested yet", 404)
            return self._annotated

    # test/inspection hooks
    @property
    def reserved_map(self) -> dict[int, str]:
        with self._lock:
            return dict(self._reserved)

    @property
    def occupancy(self) -> str:
        with self._lock:
            return self._occupancy


def ingest_from_store(service: LotService, store) -> bool:
    """Pull the newest detection result pair out of a store into the service.

    Returns True when something was ingested. The text object's name is
    `<source_id>.slots.txt`; its sibling image is `<source_id>.annotated.ppm`.
    """
    text_ids = store.list(ObjectKind.RESULT_TEXT)
    if not text_ids:
        return False
    latest = text_ids[-1]
    text_obj = store.fetch(latest)
    bits = text_obj.data.decode("ascii").strip()
    base = text_obj.name
    if base.endswith(".slots.txt"):
        base = base[: -len(".slots.txt")]
    annotated = None
    for oid in store.list(ObjectKind.RESULT_IMAGE):
        if oid.split("_", 1)[1] == f"{base}.annotated.ppm":
            annotated = store.fetch(oid).data
    service.ingest_report(bits, annotated)
    return True


def create_app(service: LotService, static_dir=None):
    from fastapi import FastAPI, Header, Request
    from fastapi.responses import JSONResponse, Response
    from pydantic import BaseModel

    app = FastAPI(title="parkscan slot service")

    @app.exception_handler(ServiceError)
    async def service_error_handler(_request: Request, exc: ServiceError):
        return JSONResponse({"code": exc.code, "message": exc.message}, status_code=exc.status)

    def client_token(authorization: str | None) -> str:
        if authorization and authorization.lower().startswith("bearer "):
            return authorization[7:].strip()
        return ""

    class IngestBody(BaseModel):
        bit_string: str
        annotated_b64: str | None = None

    @app.post("/lots/{lot_id}/ingest")
    def ingest(lot_id: str, body: IngestBody):
        service.check_lot(lot_id)
        annotated = base64.b64decode(body.annotated_b64) if body.annotated_b64 else None
        service.ingest_report(body.bit_string, annotated)
        return {"ok": True, "bit_string": body.bit_string}

    @app.get("/lots/{lot_id}/slots")
    def slots(lot_id: str):
        service.check_lot(lot_id)
        return {
            "lot_id": lot_id,
            "slot_count": service.config.slot_count,
            "slots": service.snapshot(),
        }

    @app.post("/lots/{lot_id}/slots/{index}/reserve")
    def reserve(lot_id: str, index: int, authorization: str | None = Header(default=None)):
        service.check_lot(lot_id)
        return service.reserve(index, client_token(authorization))

    @app.post("/lots/{lot_id}/reserve-all")
    def reserve_all(lot_id: str, authorization: str | None = Header(default=None)):
        service.check_lot(lot_id)
        return {"reserved_indices": service.reserve_all(client_token(authorization))}

    @app.delete("/lots/{lot_id}/slots/{index}/reserve")
    def release(lot_id: str, index: int, authorization: str | None = Header(default=None)):
        service.check_lot(lot_id)
        return service.release(index, client_token(authorization))

    @app.get("/lots/{lot_id}/slots/{index}/navigation")
    def navigation(lot_id: str, index: int):
        service.check_lot(lot_id)
        return service.navigation(index)

    @app.get("/lots/{lot_id}/annotated")
    def annotated(lot_id: str):
        service.check_lot(lot_id)
        return Response(
            content=service.annotated_image(),
            media_type="image/x-portable-pixmap",
        )

    if static_dir and os.path.isdir(static_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=os.fspath(static_dir), html=True), name="ui")

    return app
