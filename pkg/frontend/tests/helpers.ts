/** Shared test utilities: backend process control and raw REST seeding. */

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface Backend {
  url: string;
  userToken: string;
  workerToken: string;
  proc: ChildProcess;
  stop: () => void;
}

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const server = createServer();
    server.listen(0, "127.0.0.1", () => {
      const address = server.address();
      if (address && typeof address === "object") {
        const port = address.port;
        server.close(() => resolve(port));
      } else {
        reject(new Error("no port"));
      }
    });
  });
}

export async function startBackend(): Promise<Backend> {
  const dataDir = mkdtempSync(join(tmpdir(), "modelhub-ui-test-"));
  const userToken = execFileSync(
    "python3",
    ["-m", "modelhub.cli", "token", "create", "ui-tester", "--data-dir", dataDir],
    { encoding: "utf-8" },
  ).trim();
  const workerToken = execFileSync(
    "python3",
    ["-m", "modelhub.cli", "token", "create", "bench", "--worker", "--data-dir", dataDir],
    { encoding: "utf-8" },
  ).trim();
  const port = await freePort();
  const proc = spawn(
    "python3",
    [
      "-m", "modelhub.cli", "serve",
      "--port", String(port),
      "--data-dir", dataDir,
      "--embedded-worker", "on",
      "--log-level", "warning",
    ],
    { stdio: "ignore" },
  );
  const url = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20000;
  for (;;) {
    try {
      const response = await fetch(`${url}/api/models/`, {
        headers: { Authorization: `Token ${userToken}` },
      });
      if (response.status === 200) break;
    } catch {
      /* not up yet */
    }
    if (Date.now() > deadline) {
      proc.kill("SIGKILL");
      throw new Error("backend did not start");
    }
    await sleep(50);
  }
  return { url, userToken, workerToken, proc, stop: () => proc.kill("SIGTERM") };
}

/** Hand-rolled multipart body so seeding works under any fetch/FormData mix. */
export function multipartBody(
  fields: Record<string, string>,
  file: { field: string; filename: string; data: Uint8Array | string },
): { body: Uint8Array; contentType: string } {
  const boundary = `----modelhub${Math.random().toString(16).slice(2)}`;
  const encoder = new TextEncoder();
  const chunks: Uint8Array[] = [];
  for (const [name, value] of Object.entries(fields)) {
    chunks.push(
      encoder.encode(
        `--${boundary}\r\nContent-Disposition: form-data; name="${name}"\r\n\r\n${value}\r\n`,
      ),
    );
  }
  const data = typeof file.data === "string" ? encoder.encode(file.data) : file.data;
  chunks.push(
    encoder.encode(
      `--${boundary}\r\nContent-Disposition: form-data; name="${file.field}"; ` +
        `filename="${file.filename}"\r\nContent-Type: application/octet-stream\r\n\r\n`,
    ),
    data,
    encoder.encode(`\r\n--${boundary}--\r\n`),
  );
  const total = chunks.reduce((acc, c) => acc + c.length, 0);
  const body = new Uint8Array(total);
  let offset = 0;
  for (const chunk of chunks) {
    body.set(chunk, offset);
    offset += chunk.length;
  }
  return { body, contentType: `multipart/form-data; boundary=${boundary}` };
}

export async function seedModel(
  backend: Backend,
  name: string,
  source: string,
  kernelTag = "native-lp",
): Promise<string> {
  const { body, contentType } = multipartBody(
    { name, kernel_tag: kernelTag },
    { field: "file", filename: "model.mhl", data: source },
  );
  const response = await fetch(`${backend.url}/api/models/`, {
    method: "POST",
    headers: { Authorization: `Token ${backend.userToken}`, "Content-Type": contentType },
    body,
  });
  if (response.status !== 201) throw new Error(`upload failed: ${await response.text()}`);
  const record = (await response.json()) as { id: string };
  return record.id;
}

export async function seedInterfaceFile(
  backend: Backend,
  modelId: string,
  name: string,
  filename: string,
  contents: string,
): Promise<void> {
  const { body, contentType } = multipartBody(
    {},
    { field: "file", filename, data: contents },
  );
  const response = await fetch(
    `${backend.url}/api/models/${modelId}/interface/files/${name}/`,
    {
      method: "PUT",
      headers: { Authorization: `Token ${backend.userToken}`, "Content-Type": contentType },
      body,
    },
  );
  if (response.status !== 200) throw new Error(`file upload failed: ${await response.text()}`);
}

export async function seedInterfaceObject(
  backend: Backend,
  modelId: string,
  name: string,
  value: unknown,
): Promise<void> {
  const response = await fetch(
    `${backend.url}/api/models/${modelId}/interface/objects/${name}/`,
    {
      method: "PUT",
      headers: {
        Authorization: `Token ${backend.userToken}`,
        "Content-Type": "application/json",
      },
      body: JSON.stringify({ value }),
    },
  );
  if (response.status !== 200) throw new Error(`object set failed: ${await response.text()}`);
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export async function waitFor<T>(
  probe: () => T | null | undefined | false,
  timeoutMs = 15000,
  label = "condition",
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${label}`);
    await sleep(25);
  }
}
