/**
 * Typed client for the ModelHub REST API.
 *
 * Every request goes to one of the documented /api endpoints with the
 * `Authorization: Token <hex>` header; the UI holds no other channel to the
 * server. Server errors carry {"error": {code, message, detail?}} and are
 * rethrown as ApiError.
 */

export interface ValueDoc {
  kind: "scalar" | "vector" | "text" | "file";
  value?: number | number[] | string;
  filename?: string;
  sha256?: string;
  size?: number;
}

export interface ModelSummary {
  id: string;
  name: string;
  kernel_tag: string;
  created_at: string;
  latest_status: string;
}

export interface ComponentDoc {
  kind: string;
  name: string;
  description: string | null;
  order: number;
  span: { start: number; end: number };
  text: string;
}

export interface ModelRecord extends ModelSummary {
  manifest: { name: string; description: string | null; components: unknown[] };
  diagnostics: { severity: string; message: string }[];
  interface_values: Record<string, ValueDoc>;
}

export interface RecipeDoc {
  inputs: { name: string; kind: string; description: string | null }[];
  outputs: { name: string; kind: string; description: string | null }[];
  solve_chain: string[];
}

export interface ExecutionRecord {
  id: string;
  model_id: string;
  status: string;
  created_at: string;
  started_at: string | null;
  ended_at: string | null;
}

export interface StatusDoc {
  status: string;
  execution_id: string | null;
}

export interface ResultsDoc {
  execution_id: string;
  status: string;
  results: Record<string, unknown>;
}

export class ApiError extends Error {
  constructor(
    public code: number,
    message: string,
    public detail?: unknown,
  ) {
    super(message);
  }
}

export class Api {
  constructor(
    private baseUrl: string,
    private token: string,
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { Authorization: `Token ${this.token}` };
    let payload: BodyInit | undefined;
    if (body instanceof FormData) {
      payload = body; // fetch sets the multipart boundary itself
    } else if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      payload = JSON.stringify(body);
    }
    const response = await fetch(this.baseUrl + path, { method, headers, body: payload });
    if (!response.ok) {
      let message = response.statusText;
      let detail: unknown;
      try {
        const doc = (await response.json()) as { error?: { message?: string; detail?: unknown } };
        message = doc.error?.message ?? message;
        detail = doc.error?.detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, message, detail);
    }
    if (response.status === 204) return undefined as T;
    return (await response.json()) as T;
  }

  listModels(): Promise<ModelSummary[]> {
    return this.request("GET", "/api/models/");
  }

  getModel(id: string): Promise<ModelRecord> {
    return this.request("GET", `/api/models/${id}/`);
  }

  components(id: string): Promise<{ components: ComponentDoc[] }> {
    return this.request("GET", `/api/models/${id}/components/`);
  }

  recipe(id: string): Promise<RecipeDoc> {
    return this.request("GET", `/api/models/${id}/recipe/`);
  }

  setInterfaceObject(id: string, name: string, value: unknown): Promise<ModelRecord> {
    return this.request("PUT", `/api/models/${id}/interface/objects/${encodeURIComponent(name)}/`, {
      value,
    });
  }

  setInterfaceFile(id: string, name: string, file: File): Promise<ModelRecord> {
    const form = new FormData();
    form.append("file", file, file.name);
    return this.request("PUT", `/api/models/${id}/interface/files/${encodeURIComponent(name)}/`, form);
  }

  run(id: string): Promise<ExecutionRecord> {
    return this.request("POST", `/api/models/${id}/run/`);
  }

  status(id: string): Promise<StatusDoc> {
    return this.request("GET", `/api/models/${id}/status/`);
  }

  execution(executionId: string): Promise<ExecutionRecord> {
    return this.request("GET", `/api/executions/${executionId}/`);
  }

  executionLog(executionId: string): Promise<{ execution_id: string; log: string }> {
    return this.request("GET", `/api/executions/${executionId}/log/`);
  }

  executionResults(executionId: string): Promise<ResultsDoc> {
    return this.request("GET", `/api/executions/${executionId}/results/`);
  }
}
