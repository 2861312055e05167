import type {
  BatchSummary,
  ErrorEnvelope,
  LabelValue,
  ModelJudgmentPayload,
  ProgressPayload,
  QueuePage,
  ReportPayload,
  TaskPayload,
} from "./types.js";

export interface RequestLogEntry {
  method: string;
  path: string;
  status: number;
  startedAt: number;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly detail: unknown = null,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

/** Thin typed wrapper over the annotation API; every call is appended to
 * `log` so tests (and debugging humans) can audit request ordering. */
export class ApiClient {
  readonly log: RequestLogEntry[] = [];

  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = globalThis.fetch,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const startedAt = Date.now();
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
      },
      body: body !== undefined ? JSON.stringify(body) : undefined,
    });
    this.log.push({ method, path, status: response.status, startedAt });
    if (!response.ok) {
      let envelope: ErrorEnvelope = {
        code: "http_error",
        message: response.statusText,
        detail: null,
      };
      try {
        envelope = (await response.json()) as ErrorEnvelope;
      } catch {
        // non-JSON error body; keep the fallback envelope
      }
      throw new ApiError(response.status, envelope.code, envelope.message, envelope.detail);
    }
    return (await response.json()) as T;
  }

  listBatches(): Promise<{ items: BatchSummary[] }> {
    return this.request("GET", "/batches");
  }

  nextTask(batchId: string): Promise<{ task: TaskPayload | null }> {
    return this.request("GET", `/batches/${batchId}/next-task`);
  }

  submitJudgment(
    taskId: string,
    values: Record<string, LabelValue>,
  ): Promise<{ task: TaskPayload; warnings: string[] }> {
    return this.request("POST", `/tasks/${taskId}/judgment`, { values });
  }

  reveal(taskId: string): Promise<{ judgments: ModelJudgmentPayload[] }> {
    return this.request("POST", `/tasks/${taskId}/reveal`);
  }

  flag(taskId: string, note: string): Promise<{ task: TaskPayload }> {
    return this.request("POST", `/tasks/${taskId}/flag`, { note });
  }

  adjudicationQueue(batchId: string, cursor?: string, pageSize?: number): Promise<QueuePage> {
    const params = new URLSearchParams();
    if (cursor) params.set("cursor", cursor);
    if (pageSize) params.set("page_size", String(pageSize));
    const query = params.toString();
    return this.request("GET", `/batches/${batchId}/adjudication-queue${query ? `?${query}` : ""}`);
  }

  adjudicate(
    taskId: string,
    decision?: Record<string, LabelValue>,
    note = "",
  ): Promise<{ task: TaskPayload }> {
    return this.request("POST", `/tasks/${taskId}/adjudicate`, {
      decision: decision ?? null,
      note,
    });
  }

  progress(batchId: string): Promise<ProgressPayload> {
    return this.request("GET", `/batches/${batchId}/progress`);
  }

  kappaReport(batchId?: string, layerA = "original", layerB = "final"): Promise<ReportPayload> {
    const params = new URLSearchParams({ layer_a: layerA, layer_b: layerB });
    if (batchId) params.set("batch_id", batchId);
    return this.request("GET", `/reports/kappa?${params.toString()}`);
  }

  beginQc(batchId: string): Promise<{ batch_id: string; state: string }> {
    return this.request("POST", `/batches/${batchId}/qc`);
  }

  audit(batchId: string, fraction: number, targeted: boolean, seed: number): Promise<{ selected: string[] }> {
    return this.request("POST", `/batches/${batchId}/audit`, { fraction, targeted, seed });
  }

  finalize(batchId: string): Promise<{ batch_id: string; finalized_count: number }> {
    return this.request("POST", `/batches/${batchId}/finalize`);
  }
}
