/**
 * Application shell: hash routing, authentication, and execution polling.
 *
 * Every rendered view is reconstructed from the REST API alone, so a page
 * reload at any moment rebuilds the same screen. The execution view polls
 * status and log once per second while a run is live.
 */

import { Api, ApiError } from "./api.js";
import type { ComponentDoc, ModelRecord, RecipeDoc } from "./api.js";
import { isTerminal, logDelta, runDisabled } from "./format.js";
import {
  componentBrowser,
  el,
  executionView,
  inputEditor,
  loginView,
  modelsView,
  runControls,
} from "./views.js";

export interface AppConfig {
  api_base_url: string;
  poll_ms?: number;
}

const TOKEN_KEY = "modelhub_token";

export class App {
  api: Api | null = null;
  renderedHash: string | null = null;
  private renderSeq = 0;
  private pollTimer: ReturnType<typeof setInterval> | null = null;
  private pollMs: number;
  private lastLog = "";
  selectedComponent: string | null = null;

  constructor(
    private root: HTMLElement,
    private config: AppConfig,
  ) {
    this.pollMs = config.poll_ms ?? 1000;
  }

  async start(): Promise<void> {
    const token = window.sessionStorage.getItem(TOKEN_KEY);
    if (!token) {
      this.renderLogin();
      return;
    }
    this.api = new Api(this.config.api_base_url, token);
    await this.renderRoute();
  }

  async navigate(hash: string): Promise<void> {
    window.location.hash = hash;
    await this.renderRoute();
  }

  stopPolling(): void {
    if (this.pollTimer !== null) {
      clearInterval(this.pollTimer);
      this.pollTimer = null;
    }
  }

  private renderLogin(): void {
    this.stopPolling();
    this.root.replaceChildren(
      loginView(async (token) => {
        window.sessionStorage.setItem(TOKEN_KEY, token);
        this.api = new Api(this.config.api_base_url, token);
        await this.renderRoute();
      }),
    );
  }

  private handleAuthFailure(error: unknown): boolean {
    if (error instanceof ApiError && error.code === 401) {
      window.sessionStorage.removeItem(TOKEN_KEY);
      this.renderLogin();
      return true;
    }
    return false;
  }

  async renderRoute(): Promise<void> {
    if (!this.api) {
      this.renderLogin();
      return;
    }
    this.stopPolling();
    const hash = window.location.hash || "#/models";
    this.renderedHash = hash;
    const seq = ++this.renderSeq;
    const detail = hash.match(/^#\/models\/([^/]+)$/);
    try {
      if (detail) {
        await this.renderModelDetail(detail[1]!, seq);
      } else {
        await this.renderModels(seq);
      }
    } catch (error) {
      if (!this.handleAuthFailure(error)) {
        this.root.replaceChildren(
          el("p", { class: "fatal", "data-testid": "fatal-error" }, [String(error)]),
        );
      }
    }
  }

  /** True when a newer render started while this one awaited data. */
  private superseded(seq: number): boolean {
    return seq !== this.renderSeq;
  }

  private async renderModels(seq: number): Promise<void> {
    const models = await this.api!.listModels();
    if (this.superseded(seq)) return;
    this.root.replaceChildren(
      modelsView(models, (id) => {
        void this.navigate(`#/models/${id}`);
      }),
    );
  }

  private async renderModelDetail(modelId: string, seq: number): Promise<void> {
    const api = this.api!;
    const [record, componentsDoc, recipe, status] = await Promise.all([
      api.getModel(modelId),
      api.components(modelId),
      api.recipe(modelId).catch(() => null), // invalid models have no recipe
      api.status(modelId),
    ]);
    if (this.superseded(seq)) return;

    const page = el("div", { class: "model-page" });
    page.append(
      el("header", {}, [
        el("a", { href: "#/models", class: "back" }, ["← models"]),
        el("h1", {}, [record.name]),
        el("p", { class: "meta" }, [`kernel ${record.kernel_tag} · status ${status.status}`]),
      ]),
    );

    page.append(
      el("section", { class: "components" }, [
        el("h2", {}, ["Components"]),
        componentBrowser(componentsDoc.components, this.selectedComponent, (name) => {
          this.selectedComponent = name;
          void this.renderRoute();
        }),
      ]),
    );

    page.append(this.buildInputs(record, recipe, componentsDoc.components));

    const controls = runControls(status.status, async () => {
      controls.button.disabled = true;
      controls.banner.textContent = "";
      controls.banner.className = "banner";
      try {
        await api.run(modelId);
        await this.renderRoute();
      } catch (error) {
        if (this.handleAuthFailure(error)) return;
        controls.button.disabled = false;
        if (error instanceof ApiError && error.code === 409) {
          const missing = Array.isArray(error.detail) ? `: ${error.detail.join(", ")}` : "";
          controls.banner.textContent = `Missing inputs${missing}`;
          controls.banner.className = "banner inline-error";
        } else if (error instanceof ApiError && error.code === 503) {
          controls.banner.textContent =
            "No compute kernel is attached for this model's kernel tag.";
          controls.banner.className = "banner no-worker";
        } else {
          controls.banner.textContent = String(error);
          controls.banner.className = "banner inline-error";
        }
      }
    });
    page.append(el("section", { class: "run" }, [el("h2", {}, ["Run"]), controls.root]));

    const executionHost = el("div", { class: "execution-host" });
    page.append(executionHost);
    this.root.replaceChildren(page);

    if (status.execution_id) {
      await this.showExecution(status.execution_id, executionHost, controls.button);
    }
  }

  private buildInputs(
    record: ModelRecord,
    recipe: RecipeDoc | null,
    components: ComponentDoc[],
  ): HTMLElement {
    const api = this.api!;
    const inputs =
      recipe?.inputs ??
      components
        .filter((c) => c.kind === "InterfaceObject" || c.kind === "InterfaceFile")
        .map((c) => ({ name: c.name, kind: c.kind, description: c.description }));
    return inputEditor(record, inputs, {
      saveObject: async (name, value) => {
        try {
          await api.setInterfaceObject(record.id, name, value);
          await this.renderRoute();
        } catch (error) {
          if (!this.handleAuthFailure(error)) this.flashError(name, error);
        }
      },
      saveFile: async (name, file) => {
        try {
          await api.setInterfaceFile(record.id, name, file);
          await this.renderRoute();
        } catch (error) {
          if (!this.handleAuthFailure(error)) this.flashError(name, error);
        }
      },
    });
  }

  private flashError(inputName: string, error: unknown): void {
    const row = this.root.querySelector(`[data-input="${inputName}"] .field-error`);
    if (row) row.textContent = String(error);
  }

  private async showExecution(
    executionId: string,
    host: HTMLElement,
    runButton: HTMLButtonElement,
  ): Promise<void> {
    const api = this.api!;
    this.lastLog = "";
    host.replaceChildren(executionView("queued", "", null));
    const statusNode = host.querySelector('[data-testid="execution-status"]')!;
    const logNode = host.querySelector('[data-testid="execution-log"]')!;

    const refresh = async () => {
      const record = await api.execution(executionId);
      const logDoc = await api.executionLog(executionId);
      runButton.disabled = runDisabled(record.status);
      statusNode.textContent = record.status;
      const delta = logDelta(this.lastLog, logDoc.log);
      if (delta === logDoc.log && this.lastLog !== "") {
        logNode.textContent = logDoc.log; // history rewrote; replace wholesale
      } else {
        logNode.append(delta);
      }
      this.lastLog = logDoc.log;
      if (record.status === "success" && !host.querySelector('[data-testid="results-table"]')) {
        const results = (await api.executionResults(executionId)).results;
        const rendered = executionView(record.status, logDoc.log, results);
        const table = rendered.querySelector('[data-testid="results-table"]');
        const heading = rendered.querySelector("h3");
        if (heading && table) host.firstElementChild!.append(heading, table);
      }
      if (isTerminal(record.status)) this.stopPolling();
      return record.status;
    };

    const status = await refresh();
    if (!isTerminal(status)) {
      this.pollTimer = setInterval(() => {
        void refresh().catch(() => this.stopPolling());
      }, this.pollMs);
    }
  }
}

export async function boot(root: HTMLElement, config?: AppConfig): Promise<App> {
  let resolved = config;
  if (!resolved) {
    const response = await fetch("./config.json");
    resolved = (await response.json()) as AppConfig;
  }
  const app = new App(root, resolved);
  window.addEventListener("hashchange", () => {
    const current = window.location.hash || "#/models";
    if (current !== app.renderedHash) void app.renderRoute();
  });
  await app.start();
  return app;
}
