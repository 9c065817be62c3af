/**
 * State panel model: flattens a variables facet into display rows and, when
 * a comparison diff is supplied, marks each row as unchanged / changed /
 * added / removed so the view can highlight divergence.
 */

import type { StateDiff, VariablesView } from "./api.js";

export type RowStatus = "unchanged" | "changed" | "added" | "removed";

export interface StateRow {
  name: string;
  scope: "local" | "global" | "return";
  value: string;
  status: RowStatus;
}

export function formatValue(value: unknown): string {
  if (value === null || value === undefined) return "nil";
  if (typeof value === "string") return JSON.stringify(value);
  if (typeof value === "number" || typeof value === "boolean") {
    return String(value);
  }
  return JSON.stringify(value);
}

function statusFor(name: string, diff: StateDiff | null): RowStatus {
  if (!diff) return "unchanged";
  if (diff.added.includes(name)) return "added";
  if (diff.removed.includes(name)) return "removed";
  if (diff.changed.some((c) => c.name === name)) return "changed";
  return "unchanged";
}

export function buildRows(
  view: VariablesView,
  diff: StateDiff | null = null,
): StateRow[] {
  const rows: StateRow[] = [];
  for (const [name, value] of Object.entries(view.globals).sort()) {
    rows.push({
      name,
      scope: "global",
      value: formatValue(value),
      status: statusFor(name, diff),
    });
  }
  for (const [name, value] of Object.entries(view.locals).sort()) {
    rows.push({
      name,
      scope: "local",
      value: formatValue(value),
      status: statusFor(name, diff),
    });
  }
  if ("return" in view && view.return !== undefined) {
    rows.push({
      name: "(return)",
      scope: "return",
      value: formatValue(view.return),
      status: "unchanged",
    });
  }
  // names the other side has but this one lacks still deserve a row
  if (diff) {
    const present = new Set(rows.map((r) => r.name));
    for (const name of [...diff.added, ...diff.removed]) {
      if (!present.has(name)) {
        rows.push({
          name,
          scope: "global",
          value: "—",
          status: statusFor(name, diff),
        });
      }
    }
  }
  return rows;
}

/** Source lines annotated with whether the comparison changed them. */
export interface CodeLine {
  line_no: number;
  text: string;
  changed: boolean;
}

export function annotateCode(
  source: string,
  firstLine: number,
  changedLines: number[],
): CodeLine[] {
  const changed = new Set(changedLines);
  return source.split("\n").map((text, index) => ({
    line_no: firstLine + index,
    text,
    changed: changed.has(firstLine + index),
  }));
}
