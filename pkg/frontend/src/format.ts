/** Pure presentation helpers, kept DOM-free so they unit-test cheaply. */

import type { ComponentDoc, ValueDoc } from "./api.js";

/** Display order for the component browser groups. */
export const KIND_ORDER = [
  "InterfaceObject",
  "InterfaceFile",
  "HelperObject",
  "Variable",
  "Function",
  "Constraint",
  "Objective",
  "Problem",
  "Solver",
  "Execution",
  "OutputObject",
  "OutputFile",
] as const;

export const KIND_LABELS: Record<string, string> = {
  InterfaceObject: "Interface Objects",
  InterfaceFile: "Interface Files",
  HelperObject: "Helper Objects",
  Variable: "Variables",
  Function: "Functions",
  Constraint: "Constraints",
  Objective: "Objectives",
  Problem: "Problems",
  Solver: "Solvers",
  Execution: "Executions",
  OutputObject: "Output Objects",
  OutputFile: "Output Files",
};

export function groupByKind(components: ComponentDoc[]): Map<string, ComponentDoc[]> {
  const groups = new Map<string, ComponentDoc[]>();
  for (const kind of KIND_ORDER) groups.set(kind, []);
  for (const component of components) {
    if (!groups.has(component.kind)) groups.set(component.kind, []);
    groups.get(component.kind)!.push(component);
  }
  for (const [kind, members] of groups) {
    if (members.length === 0) groups.delete(kind);
  }
  return groups;
}

export type WidgetKind = "number" | "vector" | "text" | "file";

/** Widget type for an input, inferred from the current value's shape. */
export function widgetFor(componentKind: string, doc: ValueDoc | undefined): WidgetKind {
  if (componentKind === "InterfaceFile") return "file";
  if (!doc) return "number"; // unset objects in optimization models are usually numeric
  switch (doc.kind) {
    case "vector":
      return "vector";
    case "text":
      return "text";
    case "file":
      return "file";
    default:
      return "number";
  }
}

/** Parse "1, 2.5 -3" into numbers; null when any token is not a number. */
export function parseVector(text: string): number[] | null {
  const tokens = text.split(/[\s,]+/).filter((t) => t.length > 0);
  if (tokens.length === 0) return null;
  const values = tokens.map(Number);
  return values.some(Number.isNaN) ? null : values;
}

/** The run button is disabled exactly while the latest execution is live. */
export function runDisabled(status: string): boolean {
  return status === "queued" || status === "running";
}

export function isTerminal(status: string): boolean {
  return status === "success" || status === "error";
}

/** Lines appended since the previous poll (full text when history rewrote). */
export function logDelta(previous: string, current: string): string {
  if (current.startsWith(previous)) return current.slice(previous.length);
  return current;
}

export function formatResult(value: unknown): string {
  if (value === null || value === undefined) return "";
  if (typeof value === "number") return formatNumber(value);
  if (Array.isArray(value)) return `[${value.map(formatResult).join(", ")}]`;
  if (typeof value === "object") {
    return Object.entries(value as Record<string, unknown>)
      .map(([key, inner]) => `${key}: ${formatResult(inner)}`)
      .join(", ");
  }
  return String(value);
}

function formatNumber(x: number): string {
  if (Number.isInteger(x)) return String(x);
  return x.toPrecision(6).replace(/\.?0+$/, "");
}

export function formatTimestamp(iso: string | null): string {
  if (!iso) return "";
  const date = new Date(iso);
  return Number.isNaN(date.valueOf()) ? iso : date.toLocaleString();
}

export function describeValue(doc: ValueDoc | undefined): string {
  if (!doc) return "(not set)";
  if (doc.kind === "file") return `file: ${doc.filename ?? "?"} (${doc.size ?? 0} bytes)`;
  if (doc.kind === "vector") return `[${(doc.value as number[]).join(", ")}]`;
  return String(doc.value);
}
