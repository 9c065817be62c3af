/**
 * Typed client for the trkspace HTTP API.
 *
 * The fetch implementation is injectable so tests (and non-browser hosts)
 * can supply their own transport.
 */

export interface Session {
  id: number;
  label: string;
  started_at: number;
  program_hash: string;
  parent_session: number | null;
  parent_offset: number | null;
  failed_at: number | null;
}

export interface Call {
  id: number;
  session: number;
  ordinal: number;
  function: string;
  code: number;
  parent_call: number | null;
  has_snapshots: boolean;
  event_count: number;
}

export interface SnapshotRef {
  id: number;
  call: number;
  ordinal: number;
  line_no: number;
}

export type Facet = "V" | "E" | "C" | "hooks";

export interface StateView {
  kind: string;
  id: number;
  facet: Facet;
  value: unknown;
}

export interface VariablesView {
  locals: Record<string, unknown>;
  globals: Record<string, unknown>;
  return?: unknown;
}

export interface AlignPair {
  a: number | null;
  b: number | null;
  snapshots: Array<[number | null, number | null]>;
}

export interface StateDiff {
  added: string[];
  removed: string[];
  changed: Array<{ name: string; hash_a: string; hash_b: string }>;
  events: Record<
    string,
    { count_a: number; count_b: number; first_divergence: number | null }
  >;
  code: {
    pairs: Array<[number, number]>;
    unmatched_a: number[];
    unmatched_b: number[];
    changed_a: number[];
    changed_b: number[];
  };
  hooks: "equal" | "differs" | "absent";
}

export interface ReplayRequest {
  mode: "session" | "call" | "snapshot";
  target: number;
  window?: [number, number] | null;
  migrate?: "all" | "only" | "except";
  migrate_names?: string[];
  manual_globals?: Record<string, unknown>;
  mocked?: string[];
  code_override?: Record<string, string>;
  seed?: number;
  label?: string | null;
}

export interface ReplayResponse {
  status: "done" | "failed";
  session: number;
  calls: number;
  snapshots: number;
  events: number;
  error: string | null;
  warnings: string[];
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

export class TrkClient {
  private fetchImpl: FetchLike;

  constructor(
    public baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
    this.fetchImpl = fetchImpl ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const body = (await resp.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  sessions(): Promise<Session[]> {
    return this.request("/sessions");
  }

  session(id: number): Promise<Session> {
    return this.request(`/sessions/${id}`);
  }

  calls(
    sessionId: number,
    opts: { topLevel?: boolean; start?: number; end?: number } = {},
  ): Promise<Call[]> {
    const params = new URLSearchParams();
    if (opts.topLevel !== undefined) params.set("top_level", String(opts.topLevel));
    if (opts.start !== undefined) params.set("start", String(opts.start));
    if (opts.end !== undefined) params.set("end", String(opts.end));
    const query = params.toString();
    return this.request(`/sessions/${sessionId}/calls${query ? "?" + query : ""}`);
  }

  trace(callId: number): Promise<SnapshotRef[]> {
    return this.request(`/calls/${callId}/trace`);
  }

  state(kind: "call" | "snapshot", id: number, facet: Facet): Promise<StateView> {
    return this.request(`/state/${kind}/${id}?facet=${facet}`);
  }

  compare(kind: "call" | "snapshot", a: number, b: number): Promise<StateDiff> {
    return this.request(`/compare?kind=${kind}&a=${a}&b=${b}`);
  }

  align(
    sessionA: number,
    sessionB: number,
    windowA?: [number, number],
    windowB?: [number, number],
  ): Promise<AlignPair[]> {
    const params = new URLSearchParams({
      session_a: String(sessionA),
      session_b: String(sessionB),
    });
    if (windowA) {
      params.set("start_a", String(windowA[0]));
      params.set("end_a", String(windowA[1]));
    }
    if (windowB) {
      params.set("start_b", String(windowB[0]));
      params.set("end_b", String(windowB[1]));
    }
    return this.request(`/align?${params.toString()}`);
  }

  replay(req: ReplayRequest): Promise<ReplayResponse> {
    return this.request("/replay", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
  }
}
