"""View, compare and align operations over recorded states.

Code versions are mapped line-to-line with an exact-text LCS (deterministic,
earliest-match on ties); alignment pairs calls by ordinal offset from the
window starts and, at line granularity, pairs snapshots whose lines
correspond under the code mapping, by per-line occurrence ordinal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .store import CodeVersion, Store, StoreError


@dataclass
class LineMapping:
    pairs: list[tuple[int, int]]
    unmatched_a: set[int]
    unmatched_b: set[int]

    def a_to_b(self) -> dict[int, int]:
        return {a: b for a, b in self.pairs}


@dataclass
class VarChange:
    name: str
    hash_a: str
    hash_b: str


@dataclass
class StateDiff:
    added: list[str]
    removed: list[str]
    changed: list[VarChange]
    events: dict[str, tuple[int, int, int | None]]  # (count_a, count_b, first divergence seq)
    code_mapping: LineMapping
    code_changed_a: list[int]
    code_changed_b: list[int]
    hooks: str  # "equal" | "differs" | "absent"
    hook_hash_a: str | None = None
    hook_hash_b: str | None = None

    @property
    def empty(self) -> bool:
        return (not self.added and not self.removed and not self.changed
                and all(d is None for _, _, d in self.events.values())
                and not self.code_changed_a and not self.code_changed_b
                and self.hooks in ("equal", "absent"))

    def to_record(self) -> dict:
        return {
            "added": self.added,
            "removed": self.removed,
            "changed": [{"name": c.name, "hash_a": c.hash_a, "hash_b": c.hash_b}
                        for c in self.changed],
            "events": {k: {"count_a": a, "count_b": b, "first_divergence": d}
                       for k, (a, b, d) in self.events.items()},
            "code": {"pairs": [list(p) for p in self.code_mapping.pairs],
                     "unmatched_a": sorted(self.code_mapping.unmatched_a),
                     "unmatched_b": sorted(self.code_mapping.unmatched_b),
                     "changed_a": self.code_changed_a,
                     "changed_b": self.code_changed_b},
            "hooks": self.hooks,
        }

    def to_stream(self) -> str:
        return json.dumps(self.to_record(), sort_keys=True, separators=(",", ":"))


def lcs_pairs(lines_a: list[str], lines_b: list[str]) -> list[tuple[int, int]]:
    """Longest common subsequence over exact line texts, 1-based indices.

    Reconstructed front-to-back so equal-length alternatives resolve to the
    earliest possible matches.
    """
    n, m = len(lines_a), len(lines_b)
    # lcs[i][j] = LCS length of lines_a[i:], lines_b[j:]
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, nxt = lcs[i], lcs[i + 1]
        for j in range(m - 1, -1, -1):
            if lines_a[i] == lines_b[j]:
                row[j] = nxt[j + 1] + 1
            else:
                row[j] = max(nxt[j], row[j + 1])
    pairs: list[tuple[int, int]] = []
    i = j = 0
    while i < n and j < m:
        if lines_a[i] == lines_b[j] and lcs[i][j] == lcs[i + 1][j + 1] + 1:
            pairs.append((i + 1, j + 1))
            i += 1
            j += 1
        elif lcs[i + 1][j] >= lcs[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def map_lines(source_a: str, first_line_a: int,
              source_b: str, first_line_b: int) -> LineMapping:
    lines_a = source_a.split("\n")
    lines_b = source_b.split("\n")
    rel = lcs_pairs(lines_a, lines_b)
    pairs = [(a + first_line_a - 1, b + first_line_b - 1) for a, b in rel]
    matched_a = {a for a, _ in pairs}
    matched_b = {b for _, b in pairs}
    all_a = {first_line_a + i for i in range(len(lines_a))}
    all_b = {first_line_b + i for i in range(len(lines_b))}
    return LineMapping(pairs=pairs, unmatched_a=all_a - matched_a,
                       unmatched_b=all_b - matched_b)


def diff_code(a: CodeVersion, b: CodeVersion) -> LineMapping:
    if a.function_name != b.function_name:
        raise StoreError(
            f"cannot diff code of {a.function_name!r} against {b.function_name!r}")
    return map_lines(a.source_text, a.first_line, b.source_text, b.first_line)


# --- view ---

def view(store: Store, kind: str, state_id: int, facet: str):
    """Materialize one facet (V, E, C or hooks) of a call or snapshot."""
    if kind == "call":
        call = store.get_call(state_id)
        code = store.code_versions[call.code]
        if facet == "V":
            return {"locals": {k: store.render(v) for k, v in call.locals.items()},
                    "globals": {k: store.render(v) for k, v in call.globals.items()},
                    "return": (store.render(call.return_ref)
                               if call.return_ref is not None else None)}
        if facet == "E":
            return [_render_event(store, e) for e in store.get_events_for_call(state_id)]
        if facet == "C":
            return {"source": code.source_text, "function": code.function_name,
                    "first_line": code.first_line, "code_version": code.id}
        if facet == "hooks":
            if call.hook_meta is None:
                return None
            payload = store.payloads[store.hook_blobs[call.hook_meta].content_hash]
            return json.loads(payload)
    elif kind == "snapshot":
        snap = store.get_snapshot(state_id)
        call = store.get_call(snap.call)
        code = store.code_versions[call.code]
        if facet == "V":
            return {"locals": {k: store.render(v) for k, v in snap.locals.items()},
                    "globals": {k: store.render(v) for k, v in snap.globals.items()}}
        if facet == "E":
            return [_render_event(store, e)
                    for e in store.get_events_for_snapshot(state_id)]
        if facet == "C":
            return {"source": code.source_text, "function": code.function_name,
                    "first_line": code.first_line, "line_no": snap.line_no,
                    "code_version": code.id}
        if facet == "hooks":
            return None
    else:
        raise StoreError(f"unknown state kind {kind!r}")
    raise StoreError(f"unknown facet {facet!r}")


def _render_event(store: Store, e) -> dict:
    return {"callable": e.callable, "seq": e.seq,
            "args": [store.render(a) for a in e.args],
            "return": store.render(e.return_ref)}


# --- compare ---

def _visible_vars(store: Store, kind: str, state_id: int) -> dict[str, str]:
    """name -> content hash of the visible binding (locals shadow globals)."""
    if kind == "call":
        state = store.get_call(state_id)
    else:
        state = store.get_snapshot(state_id)
    merged: dict[str, str] = {}
    for name, ref in state.globals.items():
        merged[name] = store.ref_hash(ref)
    for name, ref in state.locals.items():
        merged[name] = store.ref_hash(ref)
    return merged


def _event_signature(store: Store, e) -> tuple:
    return (tuple(store.ref_hash(a) for a in e.args), store.ref_hash(e.return_ref))


def compare_states(store: Store, kind_a: str, a_id: int,
                   kind_b: str, b_id: int) -> StateDiff:
    if kind_a != kind_b:
        raise StoreError(f"granularity mismatch: {kind_a} vs {kind_b}")
    vars_a = _visible_vars(store, kind_a, a_id)
    vars_b = _visible_vars(store, kind_b, b_id)
    added = sorted(set(vars_b) - set(vars_a))
    removed = sorted(set(vars_a) - set(vars_b))
    changed = [VarChange(name, vars_a[name], vars_b[name])
               for name in sorted(set(vars_a) & set(vars_b))
               if vars_a[name] != vars_b[name]]

    if kind_a == "call":
        events_a = store.get_events_for_call(a_id)
        events_b = store.get_events_for_call(b_id)
        call_a, call_b = store.get_call(a_id), store.get_call(b_id)
    else:
        events_a = store.get_events_for_snapshot(a_id)
        events_b = store.get_events_for_snapshot(b_id)
        call_a = store.get_call(store.get_snapshot(a_id).call)
        call_b = store.get_call(store.get_snapshot(b_id).call)

    events: dict[str, tuple[int, int, int | None]] = {}
    names = sorted({e.callable for e in events_a} | {e.callable for e in events_b})
    for name in names:
        seq_a = [e for e in events_a if e.callable == name]
        seq_b = [e for e in events_b if e.callable == name]
        divergence = None
        for idx in range(max(len(seq_a), len(seq_b))):
            if idx >= len(seq_a) or idx >= len(seq_b):
                divergence = idx
                break
            if _event_signature(store, seq_a[idx]) != _event_signature(store, seq_b[idx]):
                divergence = idx
                break
        events[name] = (len(seq_a), len(seq_b), divergence)

    code_a = store.code_versions[call_a.code]
    code_b = store.code_versions[call_b.code]
    mapping = diff_code(code_a, code_b)

    if call_a.hook_meta is None and call_b.hook_meta is None:
        hooks, ha, hb = "absent", None, None
    else:
        ha = (store.hook_blobs[call_a.hook_meta].content_hash
              if call_a.hook_meta is not None else None)
        hb = (store.hook_blobs[call_b.hook_meta].content_hash
              if call_b.hook_meta is not None else None)
        hooks = "equal" if ha == hb else "differs"

    return StateDiff(added=added, removed=removed, changed=changed, events=events,
                     code_mapping=mapping,
                     code_changed_a=sorted(mapping.unmatched_a),
                     code_changed_b=sorted(mapping.unmatched_b),
                     hooks=hooks, hook_hash_a=ha, hook_hash_b=hb)


# --- align ---

@dataclass
class AlignedPair:
    a: int | None  # call id or None (gap)
    b: int | None
    snapshots: list[tuple[int | None, int | None]] = field(default_factory=list)


def _pair_snapshots(store: Store, call_a: int, call_b: int) -> list[tuple[int | None, int | None]]:
    snaps_a = store.get_trace(call_a)
    snaps_b = store.get_trace(call_b)
    if not snaps_a and not snaps_b:
        return []
    code_a = store.code_versions[store.get_call(call_a).code]
    code_b = store.code_versions[store.get_call(call_b).code]
    line_map = diff_code(code_a, code_b).a_to_b()

    by_line_b: dict[int, list] = {}
    for s in snaps_b:
        by_line_b.setdefault(s.line_no, []).append(s)
    occurrence: dict[int, int] = {}
    partner_of_b: dict[int, int] = {}
    pairs_for_a: dict[int, int | None] = {}
    for s in snaps_a:
        mapped = line_map.get(s.line_no)
        partner = None
        if mapped is not None:
            k = occurrence.get(s.line_no, 0)
            occurrence[s.line_no] = k + 1
            candidates = by_line_b.get(mapped, [])
            if k < len(candidates):
                partner = candidates[k]
        pairs_for_a[s.id] = partner.id if partner else None
        if partner is not None:
            partner_of_b[partner.id] = s.id

    out: list[tuple[int | None, int | None]] = []
    b_iter = iter(snaps_b)
    pending_b: list = []
    b_list = list(snaps_b)
    bi = 0
    for s in snaps_a:
        partner = pairs_for_a[s.id]
        if partner is not None:
            while bi < len(b_list) and b_list[bi].id != partner:
                if b_list[bi].id not in partner_of_b:
                    out.append((None, b_list[bi].id))
                bi += 1
            out.append((s.id, partner))
            bi += 1
        else:
            out.append((s.id, None))
    while bi < len(b_list):
        if b_list[bi].id not in partner_of_b:
            out.append((None, b_list[bi].id))
        bi += 1
    return out


def align(store: Store, session_a: int, session_b: int,
          window_a: tuple[int, int] | None = None,
          window_b: tuple[int, int] | None = None,
          with_snapshots: bool = True) -> list[AlignedPair]:
    """Pair calls of two session windows by ordinal offset from the starts."""
    def select(session: int, window):
        calls = store.get_calls(session=session, top_level_only=True)
        if window is None:
            return calls
        start, end = window
        return [c for c in calls if start <= c.ordinal <= end]

    calls_a = select(session_a, window_a)
    calls_b = select(session_b, window_b)
    out: list[AlignedPair] = []
    for i in range(max(len(calls_a), len(calls_b))):
        ca = calls_a[i] if i < len(calls_a) else None
        cb = calls_b[i] if i < len(calls_b) else None
        pair = AlignedPair(a=ca.id if ca else None, b=cb.id if cb else None)
        if with_snapshots and ca is not None and cb is not None:
            pair.snapshots = _pair_snapshots(store, ca.id, cb.id)
        out.append(pair)
    return out
