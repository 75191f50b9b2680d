/** Thin fetch client for the review service, with bounded retries on
 * network-level failures. HTTP error statuses are surfaced as ApiError and
 * never retried (a 422 will not become a 200 by asking again). */

import type {
  AgreementReport,
  JudgmentBody,
  JudgmentEcho,
  NextItemResponse,
  ProgressReport,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number | null,
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

const sleep = (ms: number) => new Promise((resolve) => setTimeout(resolve, ms));

export class ReviewApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
    private readonly retries: number = 2,
    private readonly backoffMs: number = 250,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let lastError: unknown = null;
    for (let attempt = 0; attempt <= this.retries; attempt++) {
      let response: Response;
      try {
        response = await this.fetchFn(this.baseUrl + path, init);
      } catch (error) {
        lastError = error;
        if (attempt < this.retries) await sleep(this.backoffMs * (attempt + 1));
        continue;
      }
      if (!response.ok) {
        let detail = "";
        try {
          const body = (await response.json()) as { error?: string };
          detail = body.error ?? "";
        } catch {
          // non-JSON error body; status alone will have to do
        }
        throw new ApiError(detail || `HTTP ${response.status}`, response.status);
      }
      return (await response.json()) as T;
    }
    throw new ApiError(`network failure after ${this.retries + 1} attempts: ${lastError}`, null);
  }

  nextItem(annotator: string): Promise<NextItemResponse> {
    return this.request<NextItemResponse>(
      `/api/items?annotator=${encodeURIComponent(annotator)}`,
    );
  }

  submitJudgment(recordId: string, body: JudgmentBody): Promise<JudgmentEcho> {
    return this.request<JudgmentEcho>(`/api/items/${recordId}/judgment`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  agreement(): Promise<AgreementReport> {
    return this.request<AgreementReport>("/api/agreement");
  }

  progress(): Promise<ProgressReport> {
    return this.request<ProgressReport>("/api/progress");
  }
}
