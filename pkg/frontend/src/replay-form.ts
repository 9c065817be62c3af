/**
 * Replay form model: validates user input for the three replay modes and
 * assembles the request payload the service expects.
 */

import type { ReplayRequest } from "./api.js";

export interface ReplayFormState {
  mode: "session" | "call" | "snapshot";
  target: string;
  windowStart: string;
  windowEnd: string;
  migrate: "all" | "only" | "except";
  migrateNames: string;
  /** One `name=value` per line; values parse as JSON with string fallback. */
  manualGlobals: string;
  mocked: string;
  codeOverride: Record<string, string>;
  seed: string;
  label: string;
}

export const EMPTY_FORM: ReplayFormState = {
  mode: "session",
  target: "",
  windowStart: "",
  windowEnd: "",
  migrate: "all",
  migrateNames: "",
  manualGlobals: "",
  mocked: "",
  codeOverride: {},
  seed: "0",
  label: "",
};

export type FormResult =
  | { ok: true; request: ReplayRequest }
  | { ok: false; errors: string[] };

function splitNames(raw: string): string[] {
  return raw
    .split(/[,\s]+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

export function parseManualGlobals(raw: string): {
  values: Record<string, unknown>;
  errors: string[];
} {
  const values: Record<string, unknown> = {};
  const errors: string[] = [];
  for (const line of raw.split("\n")) {
    const trimmed = line.trim();
    if (!trimmed) continue;
    const eq = trimmed.indexOf("=");
    if (eq <= 0) {
      errors.push(`bad override "${trimmed}": use name=value`);
      continue;
    }
    const name = trimmed.slice(0, eq).trim();
    const rawValue = trimmed.slice(eq + 1).trim();
    try {
      values[name] = JSON.parse(rawValue);
    } catch {
      values[name] = rawValue;
    }
  }
  return { values, errors };
}

export function buildReplayRequest(form: ReplayFormState): FormResult {
  const errors: string[] = [];

  const target = Number(form.target);
  if (form.target.trim() === "" || !Number.isInteger(target) || target < 0) {
    errors.push("target must be a non-negative id");
  }

  let window: [number, number] | null = null;
  const hasStart = form.windowStart.trim() !== "";
  const hasEnd = form.windowEnd.trim() !== "";
  if (hasStart !== hasEnd) {
    errors.push("window needs both start and end");
  } else if (hasStart && hasEnd) {
    const start = Number(form.windowStart);
    const end = Number(form.windowEnd);
    if (!Number.isInteger(start) || !Number.isInteger(end)) {
      errors.push("window bounds must be integers");
    } else if (start > end) {
      errors.push("window start must not exceed its end");
    } else {
      window = [start, end];
    }
  }
  if (window && form.mode !== "session") {
    errors.push("a window only applies to session replay");
  }

  const migrateNames = splitNames(form.migrateNames);
  if (form.migrate === "all" && migrateNames.length > 0) {
    errors.push("migration mode 'all' takes no name list");
  }
  if (form.migrate !== "all" && migrateNames.length === 0) {
    errors.push(`migration mode '${form.migrate}' needs at least one name`);
  }

  const { values: manualGlobals, errors: globalErrors } = parseManualGlobals(
    form.manualGlobals,
  );
  errors.push(...globalErrors);

  const seed = Number(form.seed || "0");
  if (!Number.isInteger(seed)) errors.push("seed must be an integer");

  if (errors.length > 0) return { ok: false, errors };

  return {
    ok: true,
    request: {
      mode: form.mode,
      target,
      window,
      migrate: form.migrate,
      migrate_names: migrateNames,
      manual_globals: manualGlobals,
      mocked: splitNames(form.mocked),
      code_override: form.codeOverride,
      seed,
      label: form.label.trim() || null,
    },
  };
}
