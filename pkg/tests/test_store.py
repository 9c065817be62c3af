"""Trace store: interning, identity versioning, dedup, interchange stream."""

import json

import pytest

from trkspace.lang.values import IdentityAllocator, NativeHandle, TrkList, TrkMap
from trkspace.store import (
    Blob,
    InternContext,
    Skipped,
    Store,
    StoreError,
    import_stream,
    open_store,
)


def _alloc():
    return IdentityAllocator()


class TestInterning:
    def test_flat_values_dedup_globally(self):
        store = Store()
        ctx = InternContext()
        r1 = store.intern_value(ctx, 42)
        r2 = store.intern_value(InternContext(), 42)
        assert r1 == r2
        assert len(store.payloads) == 1

    def test_same_string_thousand_times_one_payload(self):
        store = Store()
        ctx = InternContext()
        refs = {store.intern_value(ctx, "hello" * 10) for _ in range(1000)}
        assert len(refs) == 1
        assert len(store.payloads) == 1

    def test_intern_idempotent_for_unchanged_object(self):
        store = Store()
        ctx = InternContext()
        ids = _alloc()
        lst = TrkList([1, 2, 3], ids.next_id())
        r1 = store.intern_value(ctx, lst)
        r2 = store.intern_value(ctx, lst)
        assert r1 == r2
        assert len(store.objects) == 1
        assert len([v for v in store.object_versions.values()
                    if v.object is not None]) == 1

    def test_mutation_creates_new_version_same_object(self):
        store = Store()
        ctx = InternContext()
        ids = _alloc()
        lst = TrkList([1, 2, 3], ids.next_id())
        r1 = store.intern_value(ctx, lst)
        lst.items.append(4)
        r2 = store.intern_value(ctx, lst)
        assert r1 != r2
        v1, v2 = store.object_versions[r1], store.object_versions[r2]
        assert v1.object == v2.object
        assert v1.content_hash != v2.content_hash

    def test_two_equal_lists_distinct_objects_shared_payload(self):
        store = Store()
        ctx = InternContext()
        ids = _alloc()
        a = TrkList([1, 2], ids.next_id())
        b = TrkList([1, 2], ids.next_id())
        ra = store.intern_value(ctx, a)
        rb = store.intern_value(ctx, b)
        assert ra != rb
        va, vb = store.object_versions[ra], store.object_versions[rb]
        assert va.object != vb.object
        assert va.content_hash == vb.content_hash

    def test_equal_content_hashes_equal_across_sessions(self):
        store = Store()
        ids = _alloc()
        nested_1 = TrkList([TrkMap({"x": 1}, ids.next_id())], ids.next_id())
        nested_2 = TrkList([TrkMap({"x": 1}, ids.next_id())], ids.next_id())
        r1 = store.intern_value(InternContext(), nested_1)
        r2 = store.intern_value(InternContext(), nested_2)
        assert store.ref_hash(r1) == store.ref_hash(r2)

    def test_native_handle_without_serializer_skipped(self):
        store = Store()
        ref = store.intern_value(InternContext(),
                                 NativeHandle("socket", object(), 1))
        assert store.object_versions[ref].kind == "skipped"
        rendered = store.render(ref)
        assert "socket" in str(rendered)

    def test_native_handle_with_serializer_becomes_blob(self):
        store = Store()
        ref = store.intern_value(
            InternContext(), NativeHandle("buf", b"\x01\x02", 1),
            convert_native=lambda h: Blob(h.payload))
        ver = store.object_versions[ref]
        assert ver.kind == "blob"
        assert store.payloads[ver.content_hash] == b"\x01\x02"

    def test_skipped_marker_round_trips(self):
        store = Store()
        ref = store.intern_value(InternContext(), Skipped("no serializer"))
        assert store.object_versions[ref].kind == "skipped"

    def test_map_payload_key_order_independent(self):
        store = Store()
        ids = _alloc()
        m1 = TrkMap({"a": 1, "b": 2}, ids.next_id())
        m2 = TrkMap({"b": 2, "a": 1}, ids.next_id())
        r1 = store.intern_value(InternContext(), m1)
        r2 = store.intern_value(InternContext(), m2)
        assert store.ref_hash(r1) == store.ref_hash(r2)

    def test_bool_and_int_do_not_collide(self):
        store = Store()
        ctx = InternContext()
        rt = store.intern_value(ctx, True)
        r1 = store.intern_value(ctx, 1)
        assert store.ref_hash(rt) != store.ref_hash(r1)


class TestCodeVersions:
    def test_identical_text_dedups(self):
        store = Store()
        c1 = store.intern_code("f", "def f():\n    return 1", 1, [2])
        c2 = store.intern_code("f", "def f():\n    return 1", 1, [2])
        assert c1 == c2

    def test_different_text_new_version(self):
        store = Store()
        c1 = store.intern_code("f", "def f():\n    return 1", 1, [2])
        c2 = store.intern_code("f", "def f():\n    return 2", 1, [2])
        assert c1 != c2


class TestRows:
    def _session_with_call(self, store):
        ph = store.intern_program("def f():\n    return 1\nf()", "p.trk")
        sid = store.new_session("t", 0.0, ph)
        code = store.intern_code("f", "def f():\n    return 1", 1, [2])
        ret = store.intern_value(InternContext(), 1)
        cid = store.add_call(sid, 0, "f", code, None, {}, {}, ret, None)
        return sid, cid, code

    def test_snapshot_line_must_be_statement_boundary(self):
        store = Store()
        _, cid, _ = self._session_with_call(store)
        with pytest.raises(StoreError):
            store.add_snapshot(cid, 0, 99, {}, {})

    def test_get_calls_filters(self):
        store = Store()
        sid, cid, code = self._session_with_call(store)
        ret = store.intern_value(InternContext(), 2)
        child = store.add_call(sid, 1, "f", code, cid, {}, {}, ret, None)
        assert [c.id for c in store.get_calls(session=sid)] == [cid, child]
        assert [c.id for c in store.get_calls(session=sid,
                                              top_level_only=True)] == [cid]

    def test_unknown_ids_raise(self):
        store = Store()
        with pytest.raises(StoreError):
            store.get_call(123)
        with pytest.raises(StoreError):
            store.get_snapshot(123)
        with pytest.raises(StoreError):
            store.render(123)


class TestInterchange:
    def _populated(self):
        store = Store()
        sid, cid, code = TestRows()._session_with_call(store)
        ctx = InternContext()
        ids = _alloc()
        lst = store.intern_value(ctx, TrkList([1, "x"], ids.next_id()),
                                 first_seen=cid)
        store.add_event(cid, None, "ext", 0, [lst], lst)
        return store

    def test_round_trip_table_hashes_equal(self):
        store = self._populated()
        loaded = import_stream(store.export_stream())
        assert loaded.table_hashes() == store.table_hashes()

    def test_round_trip_stream_bit_exact(self):
        store = self._populated()
        stream = store.export_stream()
        assert import_stream(stream).export_stream() == stream

    def test_corrupted_payload_rejected_with_record_index(self):
        store = self._populated()
        lines = store.export_stream().rstrip("\n").split("\n")
        for i, line in enumerate(lines):
            rec = json.loads(line)
            if rec.get("table") == "object_versions" and rec["kind"] == "str":
                rec["payload_text"] = "tampered"
                lines[i] = json.dumps(rec)
                break
        with pytest.raises(StoreError, match="content hash mismatch"):
            import_stream("\n".join(lines) + "\n")

    def test_dangling_ref_rejected(self):
        store = self._populated()
        lines = store.export_stream().rstrip("\n").split("\n")
        for i, line in enumerate(lines):
            rec = json.loads(line)
            if rec.get("table") == "events":
                rec["return_ref"] = 99999
                lines[i] = json.dumps(rec)
        with pytest.raises(StoreError, match="dangling"):
            import_stream("\n".join(lines) + "\n")

    def test_malformed_json_record_reports_index(self):
        store = self._populated()
        lines = store.export_stream().rstrip("\n").split("\n")
        lines[2] = "{not json"
        with pytest.raises(StoreError, match="record 2"):
            import_stream("\n".join(lines) + "\n")

    def test_missing_manifest_rejected(self):
        with pytest.raises(StoreError):
            import_stream("")

    def test_format_version_checked(self):
        store = self._populated()
        lines = store.export_stream().rstrip("\n").split("\n")
        manifest = json.loads(lines[0])
        manifest["format_version"] = "bogus"
        lines[0] = json.dumps(manifest)
        with pytest.raises(StoreError, match="format version"):
            import_stream("\n".join(lines) + "\n")

    def test_imported_store_can_keep_interning(self):
        store = self._populated()
        loaded = import_stream(store.export_stream())
        ref = loaded.intern_value(InternContext(), "fresh")
        assert loaded.render(ref) == "fresh"


class TestOpenStore:
    def test_memory_fresh(self):
        store = open_store(None)
        assert store.sessions == {}

    def test_save_and_reopen(self, tmp_path):
        path = str(tmp_path / "trace.trkdb")
        store = open_store(path)
        TestRows()._session_with_call(store)
        store.save()
        again = open_store(path)
        assert again.table_hashes() == store.table_hashes()

    def test_missing_parent_dir_errors(self, tmp_path):
        with pytest.raises(StoreError):
            open_store(str(tmp_path / "nope" / "trace.trkdb"))
