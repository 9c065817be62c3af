"""Deduplicated trace store with a canonical line-delimited interchange format.

Three-level hierarchy: Session ⊇ MonitoredCall ⊇ Snapshot.  Values are
interned as ObjectVersions: identity-bearing values (lists, maps) version
under one StoredObject as their content changes; primitives are content-only.
Payloads are shared by content hash, so equal content is stored once.

The whole store serializes to a deterministic JSONL stream; that stream is
also the on-disk format, so export/import and save/load are the same code
path and round-trip bit-exactly.
"""

from __future__ import annotations

import base64
import hashlib
import json
import os
from dataclasses import dataclass, field

from .lang.values import NativeHandle, TrkList, TrkMap, type_name

FORMAT_VERSION = 1

TABLE_ORDER = [
    "programs", "code_versions", "objects", "object_versions", "hook_blobs",
    "sessions", "calls", "snapshots", "events",
]


class StoreError(Exception):
    pass


@dataclass
class Blob:
    """Custom-serialized bytes standing in for a non-guest value."""
    data: bytes


@dataclass
class Skipped:
    """Sentinel stored in place of a value that could not be serialized."""
    reason: str


@dataclass
class Session:
    id: int
    label: str
    started_at: float
    program_hash: str
    parent_session: int | None = None
    parent_offset: int | None = None
    failed_at: int | None = None


@dataclass
class MonitoredCall:
    id: int
    session: int
    ordinal: int
    function: str
    code: int
    parent_call: int | None
    locals: dict[str, int]
    globals: dict[str, int]
    return_ref: int | None
    hook_meta: int | None


@dataclass
class Snapshot:
    id: int
    call: int
    ordinal: int
    line_no: int
    locals: dict[str, int]
    globals: dict[str, int]


@dataclass
class EventRecord:
    id: int
    call: int
    snapshot: int | None
    callable: str
    seq: int
    args: list[int]
    return_ref: int


@dataclass
class StoredObject:
    id: int
    first_seen: int | None  # call id, None when interned outside a call


@dataclass
class ObjectVersion:
    id: int
    object: int | None  # StoredObject id; None for identity-free values
    content_hash: str
    kind: str  # int float bool str nil list map blob skipped


@dataclass
class CodeVersion:
    id: int
    function_name: str
    source_text: str
    text_hash: str
    first_line: int
    line_map: list[int]  # statement line numbers, sorted


@dataclass
class HookBlob:
    id: int
    content_hash: str


@dataclass
class ProgramRecord:
    hash: str
    path: str
    source: str


def _hash_payload(kind: str, payload: bytes) -> str:
    return hashlib.sha256(kind.encode() + b"\x00" + payload).hexdigest()


def canonical_payload(kind: str, value) -> bytes:
    """Deterministic byte form: same value twice yields identical bytes."""
    if kind == "int":
        return str(value).encode()
    if kind == "float":
        return repr(value).encode()
    if kind == "bool":
        return b"true" if value else b"false"
    if kind == "nil":
        return b"nil"
    if kind == "str":
        return value.encode("utf-8")
    if kind == "list":
        return json.dumps(value, separators=(",", ":")).encode()
    if kind == "map":
        return json.dumps(sorted(value), separators=(",", ":")).encode()
    if kind == "blob":
        return value
    if kind == "skipped":
        return value.encode("utf-8")
    raise StoreError(f"unknown payload kind {kind!r}")


def program_hash(source: str) -> str:
    return hashlib.sha256(source.encode("utf-8")).hexdigest()


def code_text_hash(source_text: str) -> str:
    return hashlib.sha256(source_text.encode("utf-8")).hexdigest()


class InternContext:
    """Per-recording-session identity tracking; never shared across sessions."""

    def __init__(self) -> None:
        self.ident_to_object: dict[int, int] = {}
        self.object_latest: dict[int, int] = {}  # object id -> version id


class Store:
    def __init__(self, path: str | None = None):
        self.path = path
        self.sessions: dict[int, Session] = {}
        self.calls: dict[int, MonitoredCall] = {}
        self.snapshots: dict[int, Snapshot] = {}
        self.events: dict[int, EventRecord] = {}
        self.objects: dict[int, StoredObject] = {}
        self.object_versions: dict[int, ObjectVersion] = {}
        self.code_versions: dict[int, CodeVersion] = {}
        self.hook_blobs: dict[int, HookBlob] = {}
        self.programs: dict[str, ProgramRecord] = {}
        self.payloads: dict[str, bytes] = {}
        self._content_to_version: dict[str, int] = {}  # identity-free dedup
        self._code_by_key: dict[tuple[str, str], int] = {}
        self._blob_by_hash: dict[str, int] = {}
        self._next: dict[str, int] = {}
        self._commit_listeners: list = []

    # --- id allocation ---

    def _alloc(self, table: str) -> int:
        n = self._next.get(table, 0)
        self._next[table] = n + 1
        return n

    def add_commit_listener(self, fn) -> None:
        """fn(session_id, call_ordinal) called after each committed call."""
        self._commit_listeners.append(fn)

    def notify_commit(self, session_id: int, ordinal: int) -> None:
        for fn in self._commit_listeners:
            fn(session_id, ordinal)

    # --- programs & code ---

    def intern_program(self, source: str, path: str) -> str:
        h = program_hash(source)
        if h not in self.programs:
            self.programs[h] = ProgramRecord(hash=h, path=path, source=source)
        return h

    def intern_code(self, function_name: str, source_text: str,
                    first_line: int, line_map: list[int]) -> int:
        th = code_text_hash(source_text)
        key = (function_name, th)
        existing = self._code_by_key.get(key)
        if existing is not None:
            return existing
        cid = self._alloc("code_versions")
        self.code_versions[cid] = CodeVersion(
            id=cid, function_name=function_name, source_text=source_text,
            text_hash=th, first_line=first_line, line_map=sorted(line_map))
        self._code_by_key[key] = cid
        return cid

    # --- value interning ---

    def _store_version(self, kind: str, payload: bytes, object_id: int | None,
                       content_hash: str | None = None) -> int:
        h = content_hash if content_hash is not None else _hash_payload(kind, payload)
        if h not in self.payloads:
            self.payloads[h] = payload
        vid = self._alloc("object_versions")
        self.object_versions[vid] = ObjectVersion(
            id=vid, object=object_id, content_hash=h, kind=kind)
        return vid

    def _structural_hash(self, kind: str, canon_value) -> str:
        """Content hash of a list/map from its children's content hashes.

        Payloads reference children by VersionRef (needed to walk identity
        chains), but refs are allocation-dependent; hashing child content
        instead makes equal values hash equal across sessions and stores.
        """
        if kind == "list":
            doc = [self.object_versions[r].content_hash for r in canon_value]
        else:
            doc = sorted([k, self.object_versions[r].content_hash]
                         for k, r in canon_value)
        return _hash_payload(kind, json.dumps(doc, separators=(",", ":")).encode())

    def intern_value(self, ctx: InternContext, value, first_seen: int | None = None,
                     convert_native=None) -> int:
        """Intern a captured value; returns a VersionRef.

        ``convert_native`` maps a NativeHandle to Blob or Skipped; with none
        supplied every native handle is skipped.
        """
        if isinstance(value, NativeHandle):
            converted = convert_native(value) if convert_native else None
            if converted is None:
                converted = Skipped(f"unserializable native:{value.type_tag}")
            value = converted
        if isinstance(value, Skipped):
            return self._intern_flat("skipped", value.reason)
        if isinstance(value, Blob):
            return self._intern_flat("blob", value.data)
        if value is None:
            return self._intern_flat("nil", None)
        if isinstance(value, bool):
            return self._intern_flat("bool", value)
        if isinstance(value, int):
            return self._intern_flat("int", value)
        if isinstance(value, float):
            return self._intern_flat("float", value)
        if isinstance(value, str):
            return self._intern_flat("str", value)
        if isinstance(value, TrkList):
            refs = [self.intern_value(ctx, v, first_seen, convert_native)
                    for v in value.items]
            return self._intern_identity(ctx, value.ident, "list", refs, first_seen)
        if isinstance(value, TrkMap):
            pairs = [[k, self.intern_value(ctx, v, first_seen, convert_native)]
                     for k, v in value.entries.items()]
            return self._intern_identity(ctx, value.ident, "map", pairs, first_seen)
        raise StoreError(f"cannot intern {value!r}")

    def _intern_flat(self, kind: str, value) -> int:
        payload = canonical_payload(kind, value)
        h = _hash_payload(kind, payload)
        existing = self._content_to_version.get(h)
        if existing is not None:
            return existing
        vid = self._store_version(kind, payload, None)
        self._content_to_version[h] = vid
        return vid

    def _intern_identity(self, ctx: InternContext, ident: int, kind: str,
                         canon_value, first_seen: int | None) -> int:
        payload = canonical_payload(kind, canon_value)
        h = self._structural_hash(kind, canon_value)
        object_id = ctx.ident_to_object.get(ident)
        if object_id is not None:
            latest = ctx.object_latest[object_id]
            if self.object_versions[latest].content_hash == h:
                return latest
            vid = self._store_version(kind, payload, object_id, content_hash=h)
            ctx.object_latest[object_id] = vid
            return vid
        object_id = self._alloc("objects")
        self.objects[object_id] = StoredObject(id=object_id, first_seen=first_seen)
        ctx.ident_to_object[ident] = object_id
        vid = self._store_version(kind, payload, object_id, content_hash=h)
        ctx.object_latest[object_id] = vid
        return vid

    def intern_hook_blob(self, data: bytes) -> int:
        h = _hash_payload("blob", data)
        existing = self._blob_by_hash.get(h)
        if existing is not None:
            return existing
        if h not in self.payloads:
            self.payloads[h] = data
        bid = self._alloc("hook_blobs")
        self.hook_blobs[bid] = HookBlob(id=bid, content_hash=h)
        self._blob_by_hash[h] = bid
        return bid

    # --- row insertion (used by the recorder) ---

    def new_session(self, label: str, started_at: float, prog_hash: str,
                    parent_session: int | None = None,
                    parent_offset: int | None = None) -> int:
        sid = self._alloc("sessions")
        self.sessions[sid] = Session(id=sid, label=label, started_at=started_at,
                                     program_hash=prog_hash,
                                     parent_session=parent_session,
                                     parent_offset=parent_offset)
        return sid

    def add_call(self, session: int, ordinal: int, function: str, code: int,
                 parent_call: int | None, locals_: dict[str, int],
                 globals_: dict[str, int], return_ref: int | None,
                 hook_meta: int | None, call_id: int | None = None) -> int:
        cid = call_id if call_id is not None else self._alloc("calls")
        self.calls[cid] = MonitoredCall(
            id=cid, session=session, ordinal=ordinal, function=function,
            code=code, parent_call=parent_call, locals=locals_, globals=globals_,
            return_ref=return_ref, hook_meta=hook_meta)
        return cid

    def add_snapshot(self, call: int, ordinal: int, line_no: int,
                     locals_: dict[str, int], globals_: dict[str, int]) -> int:
        code = self.code_versions[self.calls[call].code]
        if line_no not in code.line_map:
            raise StoreError(
                f"snapshot line {line_no} not in code version {code.id} line map")
        sid = self._alloc("snapshots")
        self.snapshots[sid] = Snapshot(id=sid, call=call, ordinal=ordinal,
                                       line_no=line_no, locals=locals_, globals=globals_)
        return sid

    def add_event(self, call: int, snapshot: int | None, callable_: str, seq: int,
                  args: list[int], return_ref: int) -> int:
        eid = self._alloc("events")
        self.events[eid] = EventRecord(id=eid, call=call, snapshot=snapshot,
                                       callable=callable_, seq=seq, args=args,
                                       return_ref=return_ref)
        return eid

    # --- queries ---

    def get_sessions(self) -> list[Session]:
        return sorted(self.sessions.values(), key=lambda s: s.id)

    def get_calls(self, function_name: str | None = None,
                  session: int | None = None,
                  top_level_only: bool = False) -> list[MonitoredCall]:
        out = [c for c in self.calls.values()
               if (function_name is None or c.function == function_name)
               and (session is None or c.session == session)
               and (not top_level_only or c.parent_call is None)]
        return sorted(out, key=lambda c: (c.session, c.ordinal))

    def get_call(self, call_id: int) -> MonitoredCall:
        try:
            return self.calls[call_id]
        except KeyError:
            raise StoreError(f"unknown call id {call_id}") from None

    def get_snapshot(self, snapshot_id: int) -> Snapshot:
        try:
            return self.snapshots[snapshot_id]
        except KeyError:
            raise StoreError(f"unknown snapshot id {snapshot_id}") from None

    def get_trace(self, call_id: int) -> list[Snapshot]:
        self.get_call(call_id)
        return sorted((s for s in self.snapshots.values() if s.call == call_id),
                      key=lambda s: s.ordinal)

    def get_events_for_call(self, call_id: int) -> list[EventRecord]:
        return sorted((e for e in self.events.values() if e.call == call_id),
                      key=lambda e: e.seq)

    def get_events_for_snapshot(self, snapshot_id: int) -> list[EventRecord]:
        return sorted((e for e in self.events.values() if e.snapshot == snapshot_id),
                      key=lambda e: e.seq)

    def get_calling_context(self, call_id: int):
        call = self.get_call(call_id)
        code = self.code_versions[call.code]
        locals_ = {k: self.render(v) for k, v in call.locals.items()}
        globals_ = {k: self.render(v) for k, v in call.globals.items()}
        return locals_, globals_, code.source_text

    # --- materialization ---

    def render(self, ref: int):
        """VersionRef -> plain JSON-able value; skipped markers preserved."""
        ver = self.object_versions.get(ref)
        if ver is None:
            raise StoreError(f"unknown version ref {ref}")
        payload = self.payloads[ver.content_hash]
        kind = ver.kind
        if kind == "int":
            return int(payload)
        if kind == "float":
            return float(payload)
        if kind == "bool":
            return payload == b"true"
        if kind == "nil":
            return None
        if kind == "str":
            return payload.decode("utf-8")
        if kind == "list":
            return [self.render(r) for r in json.loads(payload)]
        if kind == "map":
            return {k: self.render(r) for k, r in json.loads(payload)}
        if kind == "blob":
            return {"__blob__": base64.b64encode(payload).decode("ascii")}
        if kind == "skipped":
            return {"__skipped__": payload.decode("utf-8")}
        raise StoreError(f"unknown kind {kind!r}")

    def materialize_guest(self, ref: int, interp):
        """VersionRef -> a fresh guest value inside ``interp``.

        Blob and skipped payloads have no guest form and come back as nil.
        """
        ver = self.object_versions.get(ref)
        if ver is None:
            raise StoreError(f"unknown version ref {ref}")
        payload = self.payloads[ver.content_hash]
        kind = ver.kind
        if kind == "list":
            return interp.new_list(
                [self.materialize_guest(r, interp) for r in json.loads(payload)])
        if kind == "map":
            return interp.new_map(
                {k: self.materialize_guest(r, interp) for k, r in json.loads(payload)})
        if kind in ("blob", "skipped"):
            return None
        return self.render(ref)

    def ref_hash(self, ref: int) -> str:
        ver = self.object_versions.get(ref)
        if ver is None:
            raise StoreError(f"unknown version ref {ref}")
        return ver.content_hash

    # --- state hashing (content-based; ids and timestamps excluded) ---

    def call_state_hash(self, call_id: int) -> str:
        call = self.get_call(call_id)
        code = self.code_versions[call.code]
        doc = {
            "function": call.function,
            "code": code.text_hash,
            "locals": {k: self.ref_hash(v) for k, v in call.locals.items()},
            "globals": {k: self.ref_hash(v) for k, v in call.globals.items()},
            "return": self.ref_hash(call.return_ref) if call.return_ref is not None else None,
            "hook": (self.hook_blobs[call.hook_meta].content_hash
                     if call.hook_meta is not None else None),
            "events": [
                [e.callable, e.seq, [self.ref_hash(a) for a in e.args],
                 self.ref_hash(e.return_ref)]
                for e in self.get_events_for_call(call_id)
            ],
            "snapshots": [
                [s.line_no,
                 {k: self.ref_hash(v) for k, v in s.locals.items()},
                 {k: self.ref_hash(v) for k, v in s.globals.items()}]
                for s in self.get_trace(call_id)
            ],
        }
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def session_state_hashes(self, session_id: int) -> list[str]:
        calls = self.get_calls(session=session_id)
        return [self.call_state_hash(c.id) for c in calls]

    # --- interchange stream ---

    def _records(self, session_filter: set[int] | None = None):
        for p in sorted(self.programs.values(), key=lambda p: p.hash):
            yield {"table": "programs", "hash": p.hash, "path": p.path,
                   "source": p.source}
        for c in sorted(self.code_versions.values(), key=lambda c: c.id):
            yield {"table": "code_versions", "id": c.id,
                   "function_name": c.function_name, "source_text": c.source_text,
                   "text_hash": c.text_hash, "first_line": c.first_line,
                   "line_map": c.line_map}
        for o in sorted(self.objects.values(), key=lambda o: o.id):
            yield {"table": "objects", "id": o.id, "first_seen": o.first_seen}
        for v in sorted(self.object_versions.values(), key=lambda v: v.id):
            rec = {"table": "object_versions", "id": v.id, "object": v.object,
                   "content_hash": v.content_hash, "kind": v.kind}
            payload = self.payloads[v.content_hash]
            if v.kind == "blob":
                rec["payload_b64"] = base64.b64encode(payload).decode("ascii")
            else:
                rec["payload_text"] = payload.decode("utf-8")
            yield rec
        for b in sorted(self.hook_blobs.values(), key=lambda b: b.id):
            yield {"table": "hook_blobs", "id": b.id, "content_hash": b.content_hash,
                   "payload_b64": base64.b64encode(
                       self.payloads[b.content_hash]).decode("ascii")}
        for s in sorted(self.sessions.values(), key=lambda s: s.id):
            if session_filter is not None and s.id not in session_filter:
                continue
            yield {"table": "sessions", "id": s.id, "label": s.label,
                   "started_at": s.started_at, "program_hash": s.program_hash,
                   "parent_session": s.parent_session,
                   "parent_offset": s.parent_offset, "failed_at": s.failed_at}
        for c in sorted(self.calls.values(), key=lambda c: c.id):
            if session_filter is not None and c.session not in session_filter:
                continue
            yield {"table": "calls", "id": c.id, "session": c.session,
                   "ordinal": c.ordinal, "function": c.function, "code": c.code,
                   "parent_call": c.parent_call, "locals": c.locals,
                   "globals": c.globals, "return_ref": c.return_ref,
                   "hook_meta": c.hook_meta}
        keep_calls = (None if session_filter is None else
                      {c.id for c in self.calls.values() if c.session in session_filter})
        for s in sorted(self.snapshots.values(), key=lambda s: s.id):
            if keep_calls is not None and s.call not in keep_calls:
                continue
            yield {"table": "snapshots", "id": s.id, "call": s.call,
                   "ordinal": s.ordinal, "line_no": s.line_no,
                   "locals": s.locals, "globals": s.globals}
        for e in sorted(self.events.values(), key=lambda e: e.id):
            if keep_calls is not None and e.call not in keep_calls:
                continue
            yield {"table": "events", "id": e.id, "call": e.call,
                   "snapshot": e.snapshot, "callable": e.callable, "seq": e.seq,
                   "args": e.args, "return_ref": e.return_ref}

    def export_stream(self, sessions: list[int] | None = None) -> str:
        session_filter = set(sessions) if sessions is not None else None
        records = list(self._records(session_filter))
        counts: dict[str, int] = {t: 0 for t in TABLE_ORDER}
        for r in records:
            counts[r["table"]] += 1
        prog_hashes = sorted(self.programs)
        manifest = {
            "format_version": FORMAT_VERSION,
            "program_hash": (prog_hashes[0] if len(prog_hashes) == 1 else
                             hashlib.sha256("".join(prog_hashes).encode()).hexdigest()
                             if prog_hashes else ""),
            "table_counts": counts,
        }
        lines = [json.dumps(manifest, sort_keys=True, separators=(",", ":"))]
        lines.extend(json.dumps(r, sort_keys=True, separators=(",", ":"))
                     for r in records)
        return "\n".join(lines) + "\n"

    def table_hashes(self) -> dict[str, str]:
        hashes: dict[str, hashlib._hashlib.HASH] = {}
        for r in self._records():
            h = hashes.setdefault(r["table"], hashlib.sha256())
            h.update(json.dumps(r, sort_keys=True, separators=(",", ":")).encode())
            h.update(b"\n")
        return {t: h.hexdigest() for t, h in sorted(hashes.items())}

    # --- persistence ---

    def save(self, path: str | None = None) -> None:
        target = path or self.path
        if target is None:
            raise StoreError("no path to save to")
        tmp = target + ".tmp"
        with open(tmp, "w", encoding="utf-8") as f:
            f.write(self.export_stream())
        os.replace(tmp, target)
        self.path = target


def import_stream(text: str, path: str | None = None) -> Store:
    store = Store(path)
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise StoreError("empty stream: missing manifest")
    try:
        manifest = json.loads(lines[0])
    except json.JSONDecodeError:
        raise StoreError("record 0: malformed manifest") from None
    if manifest.get("format_version") != FORMAT_VERSION:
        raise StoreError(
            f"format version mismatch: {manifest.get('format_version')}")
    for index, line in enumerate(lines[1:], start=1):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError:
            raise StoreError(f"record {index}: malformed JSON") from None
        table = rec.get("table")
        try:
            _load_record(store, rec, table)
        except StoreError:
            raise
        except Exception as exc:
            raise StoreError(f"record {index} ({table}): {exc}") from None
    _validate_refs(store)
    # rebuild lookaside indexes and id counters
    for vid, v in store.object_versions.items():
        if v.object is None:
            store._content_to_version.setdefault(v.content_hash, vid)
    for cid, c in store.code_versions.items():
        store._code_by_key[(c.function_name, c.text_hash)] = cid
    for bid, b in store.hook_blobs.items():
        store._blob_by_hash[b.content_hash] = bid
    for table, rows in [("sessions", store.sessions), ("calls", store.calls),
                        ("snapshots", store.snapshots), ("events", store.events),
                        ("objects", store.objects),
                        ("object_versions", store.object_versions),
                        ("code_versions", store.code_versions),
                        ("hook_blobs", store.hook_blobs)]:
        if rows:
            store._next[table] = max(rows) + 1
    return store


def _load_record(store: Store, rec: dict, table: str) -> None:
    if table == "programs":
        store.programs[rec["hash"]] = ProgramRecord(
            hash=rec["hash"], path=rec["path"], source=rec["source"])
    elif table == "code_versions":
        store.code_versions[rec["id"]] = CodeVersion(
            id=rec["id"], function_name=rec["function_name"],
            source_text=rec["source_text"], text_hash=rec["text_hash"],
            first_line=rec["first_line"], line_map=rec["line_map"])
    elif table == "objects":
        store.objects[rec["id"]] = StoredObject(
            id=rec["id"], first_seen=rec["first_seen"])
    elif table == "object_versions":
        if "payload_b64" in rec:
            payload = base64.b64decode(rec["payload_b64"])
        else:
            payload = rec["payload_text"].encode("utf-8")
        if rec["kind"] in ("list", "map"):
            canon = json.loads(payload)
            children = canon if rec["kind"] == "list" else [r for _, r in canon]
            for child in children:
                if child not in store.object_versions:
                    raise StoreError(
                        f"object version {rec['id']}: forward or dangling "
                        f"child ref {child}")
            h = store._structural_hash(rec["kind"], canon)
        else:
            h = _hash_payload(rec["kind"], payload)
        if h != rec["content_hash"]:
            raise StoreError(
                f"object version {rec['id']}: content hash mismatch")
        store.payloads[h] = payload
        store.object_versions[rec["id"]] = ObjectVersion(
            id=rec["id"], object=rec["object"], content_hash=h, kind=rec["kind"])
    elif table == "hook_blobs":
        payload = base64.b64decode(rec["payload_b64"])
        store.payloads[rec["content_hash"]] = payload
        store.hook_blobs[rec["id"]] = HookBlob(
            id=rec["id"], content_hash=rec["content_hash"])
    elif table == "sessions":
        store.sessions[rec["id"]] = Session(
            id=rec["id"], label=rec["label"], started_at=rec["started_at"],
            program_hash=rec["program_hash"],
            parent_session=rec["parent_session"],
            parent_offset=rec["parent_offset"], failed_at=rec["failed_at"])
    elif table == "calls":
        store.calls[rec["id"]] = MonitoredCall(
            id=rec["id"], session=rec["session"], ordinal=rec["ordinal"],
            function=rec["function"], code=rec["code"],
            parent_call=rec["parent_call"], locals=rec["locals"],
            globals=rec["globals"], return_ref=rec["return_ref"],
            hook_meta=rec["hook_meta"])
    elif table == "snapshots":
        store.snapshots[rec["id"]] = Snapshot(
            id=rec["id"], call=rec["call"], ordinal=rec["ordinal"],
            line_no=rec["line_no"], locals=rec["locals"], globals=rec["globals"])
    elif table == "events":
        store.events[rec["id"]] = EventRecord(
            id=rec["id"], call=rec["call"], snapshot=rec["snapshot"],
            callable=rec["callable"], seq=rec["seq"], args=rec["args"],
            return_ref=rec["return_ref"])
    else:
        raise StoreError(f"unknown table {table!r}")


def _validate_refs(store: Store) -> None:
    def check_ref(ref: int, where: str) -> None:
        if ref not in store.object_versions:
            raise StoreError(f"dangling version ref {ref} in {where}")

    for c in store.calls.values():
        if c.code not in store.code_versions:
            raise StoreError(f"dangling code version {c.code} in call {c.id}")
        for ref in list(c.locals.values()) + list(c.globals.values()):
            check_ref(ref, f"call {c.id}")
        if c.return_ref is not None:
            check_ref(c.return_ref, f"call {c.id}")
        if c.hook_meta is not None and c.hook_meta not in store.hook_blobs:
            raise StoreError(f"dangling hook blob {c.hook_meta} in call {c.id}")
    for s in store.snapshots.values():
        for ref in list(s.locals.values()) + list(s.globals.values()):
            check_ref(ref, f"snapshot {s.id}")
    for e in store.events.values():
        for ref in e.args:
            check_ref(ref, f"event {e.id}")
        check_ref(e.return_ref, f"event {e.id}")
    for v in store.object_versions.values():
        if v.content_hash not in store.payloads:
            raise StoreError(f"missing payload for version {v.id}")
        if v.object is not None and v.object not in store.objects:
            raise StoreError(f"dangling object {v.object} in version {v.id}")


def open_store(location: str | None = None) -> Store:
    """Open or create a store.

    ``None`` or ``":memory:"`` gives an in-memory store (persist later with
    ``save(path)``).  A path to an existing file loads it; a fresh path
    creates an empty store bound to that path.
    """
    if location is None or location == ":memory:":
        return Store(None)
    if os.path.exists(location):
        with open(location, encoding="utf-8") as f:
            text = f.read()
        try:
            return import_stream(text, path=location)
        except StoreError as exc:
            raise StoreError(f"corrupt store {location}: {exc}") from None
    parent = os.path.dirname(os.path.abspath(location))
    if not os.path.isdir(parent):
        raise StoreError(f"directory does not exist: {parent}")
    return Store(location)
