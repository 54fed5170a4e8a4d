"""Pluggable object store for source images and detection results.

Object ids are a pure function of (name, payload): a 16-hex sha256 prefix
followed by the name, so identical uploads are idempotent and payloads are
verifiable on fetch. Three implementations: an in-memory fake, a local
directory store (source/ and results/ subdirs, id-named files) and a generic
HTTP client; a small FastAPI app can serve any store over the same wire shape.
"""

import hashlib
import os
import tempfile
from dataclasses import dataclass
from enum import Enum

import httpx


class ObjectKind(str, Enum):
    SOURCE_IMAGE = "source_image"
    RESULT_IMAGE = "result_image"
    RESULT_TEXT = "result_text"


class StoreError(Exception):
    retryable = False


class StoreUnavailableError(StoreError):
    retryable = True


class ObjectNotFoundError(StoreError):
    pass


class IntegrityError(StoreError):
    pass


class StorePermissionError(StoreError):
    pass


@dataclass(frozen=True)
class StoredObject:
    object_id: str
    kind: ObjectKind
    data: bytes
    created_at: float

    @property
    def name(self) -> str:
        return self.object_id.split("_", 1)[1]


def object_id(name: str, payload: bytes) -> str:
    digest = hashlib.sha256(payload).hexdigest()[:16]
    return f"{digest}_{name}"


def _check_put(name: str, payload: bytes) -> None:
    if not payload:
        raise ValueError("refusing to store an empty payload")
    if not name or "/" in name or "\\" in name:
        raise ValueError(f"bad object name: {name!r}")


def verify_payload(oid: str, payload: bytes) -> None:
    digest = hashlib.sha256(payload).hexdigest()[:16]
    if not oid.startswith(digest + "_"):
        raise IntegrityError(f"payload hash does not match id {oid}")


def _sniff_kind(payload: bytes) -> ObjectKind:
    # Result files share one directory; netpbm magic marks the images.
    if payload[:2] in (b"P2", b"P3", b"P5", b"P6"):
        return ObjectKind.RESULT_IMAGE
    return ObjectKind.RESULT_TEXT


class MemoryStore:
    """In-memory store for tests; preserves exact kinds and insertion times."""

    def __init__(self):
        self._objects: dict[str, tuple[ObjectKind, bytes, float]] = {}
        self._clock = 0.0

    def list(self, kind: ObjectKind) -> list[str]:
        rows = [
            (created, oid)
            for oid, (k, _, created) in self._objects.items()
            if k == kind
        ]
        return [oid for _, oid in sorted(rows)]

    def fetch(self, oid: str) -> StoredObject:
        if oid not in self._objects:
            raise ObjectNotFoundError(oid)
        kind, payload, created = self._objects[oid]
        verify_payload(oid, payload)
        return StoredObject(oid, kind, payload, created)

    def put(self, kind: ObjectKind, name: str, payload: bytes) -> str:
        _check_put(name, payload)
        oid = object_id(name, payload)
        if oid not in self._objects:
            self._clock += 1.0
            self._objects[oid] = (ObjectKind(kind), bytes(payload), self._clock)
        return oid

    # test hook
    def corrupt(self, oid: str) -> None:
        kind, payload, created = self._objects[oid]
        flipped = bytes([payload[0] ^ 0xFF]) + payload[1:]
        self._objects[oid] = (kind, flipped, created)


class LocalDirStore:
    """Directory-backed store: <root>/source and <root>/results."""

    def __init__(self, root):
        self.root = os.fspath(root)
        os.makedirs(os.path.join(self.root, "source"), exist_ok=True)
        os.makedirs(os.path.join(self.root, "results"), exist_ok=True)

    def _dir(self, kind: ObjectKind) -> str:
        sub = "source" if kind == ObjectKind.SOURCE_IMAGE else "results"
        return os.path.join(self.root, sub)

    def list(self, kind: ObjectKind) -> list[str]:
        kind = ObjectKind(kind)
        directory = self._dir(kind)
        try:
            names = os.listdir(directory)
        except OSError as exc:
            raise StoreUnavailableError(str(exc)) from exc
        rows = []
        for name in names:
            path = os.path.join(directory, name)
            if not os.path.isfile(path):
                continue
            if kind != ObjectKind.SOURCE_IMAGE:
                with open(path, "rb") as fh:
                    if _sniff_kind(fh.read(2)) != kind:
                        continue
            rows.append((os.path.getmtime(path), name))
        return [name for _, name in sorted(rows)]

    def _path_of(self, oid: str) -> str | None:
        for sub in ("source", "results"):
            path = os.path.join(self.root, sub, oid)
            if os.path.isfile(path):
                return path
        return None

    def fetch(self, oid: str) -> StoredObject:
        path = self._path_of(oid)
        if path is None:
            raise ObjectNotFoundError(oid)
        try:
            with open(path, "rb") as fh:
                payload = fh.read()
        except OSError as exc:
            raise StoreUnavailableError(str(exc)) from exc
        verify_payload(oid, payload)
        kind = (
            ObjectKind.SOURCE_IMAGE
            if os.path.basename(os.path.dirname(path)) == "source"
            else _sniff_kind(payload)
        )
        return StoredObject(oid, kind, payload, os.path.getmtime(path))

    def put(self, kind: ObjectKind, name: str, payload: bytes) -> str:
        _check_put(name, payload)
        kind = ObjectKind(kind)
        oid = object_id(name, payload)
        path = os.path.join(self._dir(kind), oid)
        if os.path.exists(path):
            return oid  # identical payload by construction of the id
        try:
            fd, tmp = tempfile.mkstemp(dir=self._dir(kind), prefix=".tmp-")
            with os.fdopen(fd, "wb") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise StoreUnavailableError(str(exc)) from exc
        return oid


class HttpStore:
    """Client for the generic HTTP object-store wire shape.

    GET /objects?kind=<kind>     -> JSON list of object ids
    GET /objects/<id>            -> payload bytes, x-object-kind header
    PUT /objects/<id>?kind=<kind> (raw body) -> JSON {"object_id": ...}

    An opaque bearer token can be attached; nothing else is negotiated.
    """

    def __init__(self, base_url: str, token: str | None = None, client: httpx.Client | None = None):
        headers = {"Authorization": f"Bearer {token}"} if token else {}
        self._client = client or httpx.Client(base_url=base_url, headers=headers)
        if client is not None and token:
            self._client.headers.update(headers)

    def _request(self, method: str, url: str, **kw) -> httpx.Response:
        try:
            return self._client.request(method, url, **kw)
        except httpx.HTTPError as exc:
            raise StoreUnavailableError(str(exc)) from exc

    def list(self, kind: ObjectKind) -> list[str]:
        resp = self._request("GET", "/objects", params={"kind": ObjectKind(kind).value})
        if resp.status_code != 200:
            raise StoreError(f"list failed: {resp.status_code}")
        return list(resp.json())

    def fetch(self, oid: str) -> StoredObject:
        resp = self._request("GET", f"/objects/{oid}")
        if resp.status_code == 404:
            raise ObjectNotFoundError(oid)
        if resp.status_code != 200:
            raise StoreError(f"fetch failed: {resp.status_code}")
        payload = resp.content
        verify_payload(oid, payload)
        kind = ObjectKind(resp.headers.get("x-object-kind", ObjectKind.SOURCE_IMAGE.value))
        created = float(resp.headers.get("x-created-at", "0"))
        return StoredObject(oid, kind, payload, created)

    def put(self, kind: ObjectKind, name: str, payload: bytes) -> str:
        _check_put(name, payload)
        oid = object_id(name, payload)
        resp = self._request(
            "PUT",
            f"/objects/{oid}",
            params={"kind": ObjectKind(kind).value},
            content=payload,
        )
        if resp.status_code == 403:
            raise StorePermissionError(resp.text)
        if resp.status_code == 400:
            raise IntegrityError(resp.text)
        if resp.status_code not in (200, 201):
            raise StoreError(f"put failed: {resp.status_code}")
        return oid


def store_app(store):
    """FastAPI app exposing any Store over the HttpStore wire shape."""
    from fastapi import FastAPI, Query, Request, Response
    from fastapi.responses import JSONResponse

    app = FastAPI(title="parkscan object store")

    @app.get("/objects")
    def list_objects(kind: str = Query(...)):
        return store.list(ObjectKind(kind))

    @app.get("/objects/{oid}")
    def fetch_object(oid: str):
        try:
            obj = store.fetch(oid)
        except ObjectNotFoundError:
            return JSONResponse({"code": "not_found", "message": oid}, status_code=404)
        return Response(
            content=obj.data,
            media_type="application/octet-stream",
            headers={"x-object-kind": obj.kind.value, "x-created-at": str(obj.created_at)},
        )

    @app.put("/objects/{oid}")
    async def put_object(oid: str, request: Request, kind: str = Query(...)):
        payload = await request.body()
        try:
            verify_payload(oid, payload)
            name = oid.split("_", 1)[1]
            stored = store.put(ObjectKind(kind), name, payload)
        except (IntegrityError, ValueError, IndexError) as exc:
            return JSONResponse({"code": "integrity", "message": str(exc)}, status_code=400)
        return {"object_id": stored}

    return app
