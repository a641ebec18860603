import { describe, expect, it } from "vitest";

import type { ComponentDoc } from "../src/api.js";
import {
  formatResult,
  groupByKind,
  logDelta,
  parseVector,
  runDisabled,
  widgetFor,
} from "../src/format.js";

function component(kind: string, name: string): ComponentDoc {
  return { kind, name, description: null, order: 0, span: { start: 0, end: 0 }, text: "" };
}

describe("groupByKind", () => {
  it("groups components and keeps kind order", () => {
    const groups = groupByKind([
      component("Constraint", "balance"),
      component("InterfaceObject", "feastol"),
      component("Constraint", "P_limits"),
    ]);
    expect([...groups.keys()]).toEqual(["InterfaceObject", "Constraint"]);
    expect(groups.get("Constraint")!.map((c) => c.name)).toEqual(["balance", "P_limits"]);
  });

  it("drops empty groups", () => {
    expect(groupByKind([]).size).toBe(0);
  });
});

describe("widgetFor", () => {
  it("uses a file widget for interface files regardless of value", () => {
    expect(widgetFor("InterfaceFile", undefined)).toBe("file");
    expect(widgetFor("InterfaceFile", { kind: "file", filename: "a" })).toBe("file");
  });

  it("infers from the current value shape", () => {
    expect(widgetFor("InterfaceObject", { kind: "scalar", value: 1 })).toBe("number");
    expect(widgetFor("InterfaceObject", { kind: "vector", value: [1, 2] })).toBe("vector");
    expect(widgetFor("InterfaceObject", { kind: "text", value: "x" })).toBe("text");
    expect(widgetFor("InterfaceObject", undefined)).toBe("number");
  });
});

describe("parseVector", () => {
  it("accepts commas and whitespace", () => {
    expect(parseVector("1, 2.5 -3")).toEqual([1, 2.5, -3]);
  });

  it("rejects junk", () => {
    expect(parseVector("1, banana")).toBeNull();
    expect(parseVector("   ")).toBeNull();
  });
});

describe("run button state", () => {
  it("is disabled exactly while queued or running", () => {
    expect(runDisabled("queued")).toBe(true);
    expect(runDisabled("running")).toBe(true);
    expect(runDisabled("created")).toBe(false);
    expect(runDisabled("success")).toBe(false);
    expect(runDisabled("error")).toBe(false);
  });
});

describe("logDelta", () => {
  it("returns only the appended suffix", () => {
    expect(logDelta("a\nb", "a\nb\nc")).toBe("\nc");
    expect(logDelta("", "hello")).toBe("hello");
  });

  it("returns the whole text when history changed", () => {
    expect(logDelta("old", "new text")).toBe("new text");
  });
});

describe("formatResult", () => {
  it("renders numbers, vectors, and maps", () => {
    expect(formatResult(12)).toBe("12");
    expect(formatResult([100, 50, 550])).toBe("[100, 50, 550]");
    expect(formatResult({ status: "optimal", iterations: 2 })).toBe(
      "status: optimal, iterations: 2",
    );
    expect(formatResult(0.30000000000000004)).toBe("0.3");
  });
});
