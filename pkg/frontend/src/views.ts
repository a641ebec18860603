/** DOM builders for each view. No fetching here; app.ts wires data in. */

import type { ComponentDoc, ModelRecord, ModelSummary, ValueDoc } from "./api.js";
import {
  KIND_LABELS,
  describeValue,
  formatResult,
  formatTimestamp,
  groupByKind,
  parseVector,
  runDisabled,
  widgetFor,
} from "./format.js";

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  for (const child of children) node.append(child);
  return node;
}

export function loginView(onSubmit: (token: string) => void): HTMLElement {
  const input = el("input", {
    type: "password",
    placeholder: "API token",
    class: "token-input",
    "data-testid": "token-input",
  });
  const button = el("button", { "data-testid": "login-button" }, ["Sign in"]);
  button.addEventListener("click", () => {
    if (input.value.trim()) onSubmit(input.value.trim());
  });
  return el("div", { class: "login" }, [
    el("h1", {}, ["ModelHub"]),
    el("p", {}, ["Paste an API token to browse your models."]),
    input,
    button,
  ]);
}

export function modelsView(models: ModelSummary[], onOpen: (id: string) => void): HTMLElement {
  const section = el("section", { class: "models" }, [el("h1", {}, ["Models"])]);
  if (models.length === 0) {
    section.append(el("p", { class: "empty", "data-testid": "empty-models" }, [
      "No models yet. Upload one with the client library or CLI.",
    ]));
    return section;
  }
  const header = el("tr", {}, [
    el("th", {}, ["Name"]),
    el("th", {}, ["Kernel"]),
    el("th", {}, ["Latest status"]),
    el("th", {}, ["Created"]),
  ]);
  const body = el("tbody", {});
  for (const model of models) {
    const row = el("tr", { class: "model-row", "data-model-id": model.id }, [
      el("td", {}, [model.name]),
      el("td", {}, [model.kernel_tag]),
      el("td", { class: `status-${model.latest_status}` }, [model.latest_status]),
      el("td", {}, [formatTimestamp(model.created_at)]),
    ]);
    row.addEventListener("click", () => onOpen(model.id));
    body.append(row);
  }
  section.append(el("table", { class: "models-table" }, [el("thead", {}, [header]), body]));
  return section;
}

export function componentBrowser(
  components: ComponentDoc[],
  selected: string | null,
  onSelect: (name: string) => void,
): HTMLElement {
  const tree = el("div", { class: "component-tree" });
  for (const [kind, members] of groupByKind(components)) {
    const list = el("ul", {});
    for (const component of members) {
      const item = el(
        "li",
        {
          class: component.name === selected ? "component selected" : "component",
          "data-component": component.name,
        },
        [component.name],
      );
      item.addEventListener("click", () => onSelect(component.name));
      list.append(item);
    }
    tree.append(
      el("div", { class: "component-group", "data-kind": kind }, [
        el("h3", {}, [KIND_LABELS[kind] ?? kind]),
        list,
      ]),
    );
  }

  const detail = el("div", { class: "component-detail", "data-testid": "component-detail" });
  const chosen = components.find((c) => c.name === selected);
  if (chosen) {
    detail.append(
      el("h3", {}, [chosen.name]),
      el("p", { class: "description" }, [chosen.description ?? "(no description)"]),
      el("pre", { class: "span-text" }, [chosen.text]),
    );
  } else {
    detail.append(el("p", {}, ["Select a component to inspect it."]));
  }
  return el("div", { class: "component-browser" }, [tree, detail]);
}

export interface EditorCallbacks {
  saveObject: (name: string, value: unknown) => void;
  saveFile: (name: string, file: File) => void;
}

export function inputEditor(
  record: ModelRecord,
  inputs: { name: string; kind: string; description: string | null }[],
  callbacks: EditorCallbacks,
): HTMLElement {
  const section = el("section", { class: "inputs" }, [el("h2", {}, ["Inputs"])]);
  if (inputs.length === 0) {
    section.append(el("p", {}, ["This model declares no inputs."]));
    return section;
  }
  for (const input of inputs) {
    const doc: ValueDoc | undefined = record.interface_values[input.name];
    const widget = widgetFor(input.kind, doc);
    const row = el("div", { class: "input-row", "data-input": input.name }, [
      el("label", {}, [`${input.name} `]),
      el("span", { class: "current" }, [describeValue(doc)]),
    ]);
    if (widget === "file") {
      const file = el("input", { type: "file", "data-testid": `file-${input.name}` });
      const save = el("button", {}, ["Upload"]);
      save.addEventListener("click", () => {
        const chosen = (file as HTMLInputElement).files?.[0];
        if (chosen) callbacks.saveFile(input.name, chosen);
      });
      row.append(file, save);
    } else {
      const field = el("input", {
        type: "text",
        value: doc && doc.kind !== "file" ? String(doc.value ?? "") : "",
        "data-testid": `input-${input.name}`,
      });
      const save = el("button", { "data-testid": `save-${input.name}` }, ["Save"]);
      const problem = el("span", { class: "field-error" });
      save.addEventListener("click", () => {
        problem.textContent = "";
        const raw = (field as HTMLInputElement).value.trim();
        if (widget === "number") {
          const parsed = Number(raw);
          if (raw === "" || Number.isNaN(parsed)) {
            problem.textContent = "not a number";
            return;
          }
          callbacks.saveObject(input.name, parsed);
        } else if (widget === "vector") {
          const parsed = parseVector(raw);
          if (!parsed) {
            problem.textContent = "expected numbers separated by commas or spaces";
            return;
          }
          callbacks.saveObject(input.name, parsed);
        } else {
          callbacks.saveObject(input.name, raw);
        }
      });
      row.append(field, save, problem);
    }
    section.append(row);
  }
  return section;
}

export function runControls(
  latestStatus: string,
  onRun: () => void,
): { root: HTMLElement; banner: HTMLElement; button: HTMLButtonElement } {
  const button = el("button", { class: "run-button", "data-testid": "run-button" }, [
    "Run model",
  ]) as HTMLButtonElement;
  button.disabled = runDisabled(latestStatus);
  button.addEventListener("click", onRun);
  const banner = el("div", { class: "banner", "data-testid": "run-banner" });
  return { root: el("div", { class: "run-controls" }, [button, banner]), banner, button };
}

export function executionView(
  status: string,
  log: string,
  results: Record<string, unknown> | null,
): HTMLElement {
  const section = el("section", { class: "execution", "data-testid": "execution-view" }, [
    el("h2", {}, ["Latest execution"]),
    el("p", {}, ["Status: ", el("strong", { "data-testid": "execution-status" }, [status])]),
    el("pre", { class: "log", "data-testid": "execution-log" }, [log]),
  ]);
  if (results) {
    const body = el("tbody", {});
    for (const [name, value] of Object.entries(results)) {
      body.append(
        el("tr", { "data-result": name }, [
          el("td", {}, [name]),
          el("td", {}, [formatResult(value)]),
        ]),
      );
    }
    section.append(
      el("h3", {}, ["Results"]),
      el("table", { class: "results-table", "data-testid": "results-table" }, [body]),
    );
  }
  return section;
}
