/**
 * Thin client for the editing service. All traffic goes through the
 * /api/v1/* endpoints; `fetchFn` is injectable for tests.
 */

import { EditRequest, EditRequestSchema, EditResult } from "./schema";

export interface HealthResponse {
  version: string;
  model_loaded: boolean;
}

export class ServiceError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown
  ) {
    super(`service returned ${status}`);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = fetch
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let resp: Response;
    try {
      resp = await this.fetchFn(`${this.baseUrl}/api/v1/${path}`, init);
    } catch (e) {
      throw new ServiceError(0, `network failure: ${e}`);
    }
    const body = await resp.json();
    if (!resp.ok) throw new ServiceError(resp.status, body.detail ?? body);
    return body as T;
  }

  health(): Promise<HealthResponse> {
    return this.request<HealthResponse>("health");
  }

  config(): Promise<Record<string, unknown>> {
    return this.request("config");
  }

  async edit(req: EditRequest): Promise<EditResult> {
    // validate locally so malformed payloads never reach the wire
    const payload = EditRequestSchema.parse(req);
    return this.request<EditResult>("edit", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }
}
