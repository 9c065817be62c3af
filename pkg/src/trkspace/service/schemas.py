"""Pydantic models for the HTTP API."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field


class SessionOut(BaseModel):
    id: int
    label: str
    started_at: float
    program_hash: str
    parent_session: int | None
    parent_offset: int | None
    failed_at: int | None


class CallOut(BaseModel):
    id: int
    session: int
    ordinal: int
    function: str
    code: int
    parent_call: int | None
    has_snapshots: bool
    event_count: int


class SnapshotOut(BaseModel):
    id: int
    call: int
    ordinal: int
    line_no: int


class EventOut(BaseModel):
    callable: str
    seq: int
    args: list[Any]
    return_value: Any


class CodeOut(BaseModel):
    id: int
    function_name: str
    source_text: str
    text_hash: str
    first_line: int
    line_map: list[int]


class AlignPairOut(BaseModel):
    a: int | None
    b: int | None
    snapshots: list[tuple[int | None, int | None]] = Field(default_factory=list)


class ReplayRequest(BaseModel):
    mode: Literal["session", "call", "snapshot"]
    target: int
    window: tuple[int, int] | None = None
    migrate: Literal["all", "only", "except"] = "all"
    migrate_names: list[str] = Field(default_factory=list)
    manual_globals: dict[str, Any] = Field(default_factory=dict)
    mocked: list[str] = Field(default_factory=list)
    code_override: dict[str, str] = Field(default_factory=dict)
    seed: int = 0
    label: str | None = None


class ReplayResponse(BaseModel):
    status: Literal["done", "failed"]
    session: int
    calls: int
    snapshots: int
    events: int
    error: str | None = None
    warnings: list[str] = Field(default_factory=list)
