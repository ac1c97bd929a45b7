/** Thin typed client for the collage-forge REST API. The UI never computes
 * scores, heights, or clusters itself; everything renders server documents. */

import type {
  CollectionDto,
  JobDto,
  PresentationDto,
  SceneDto,
  SceneOp,
  SessionRequest,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public kind: string,
    message: string,
    public detail: Record<string, unknown> = {},
  ) {
    super(message);
  }
}

export type OpsResult =
  | { ok: true; revision: number; scene: SceneDto }
  | { ok: false; conflict: true; currentRevision: number };

async function parseError(response: Response): Promise<ApiError> {
  let kind = "HttpError";
  let message = `${response.status}`;
  let detail: Record<string, unknown> = {};
  try {
    const body = (await response.json()) as { error?: Record<string, unknown> };
    if (body.error) {
      kind = String(body.error.type ?? kind);
      message = String(body.error.message ?? message);
      detail = body.error;
    }
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, kind, message, detail);
}

export class ApiClient {
  constructor(
    public baseUrl: string,
    private fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  private post<T>(path: string, body: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  registerCollection(path: string): Promise<{ collection_id: string }> {
    return this.post("/collections", { path });
  }

  getCollection(collectionId: string): Promise<CollectionDto> {
    return this.request(`/collections/${collectionId}`);
  }

  prepare(collectionId: string, seed?: number): Promise<{ job_id: string }> {
    return this.post(`/collections/${collectionId}/prepare`, {
      backend: "mock",
      ...(seed === undefined ? {} : { seed }),
    });
  }

  getJob(jobId: string): Promise<JobDto> {
    return this.request(`/jobs/${jobId}`);
  }

  async waitForJob(jobId: string, pollMs = 250, timeoutMs = 180_000): Promise<JobDto> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.getJob(jobId);
      if (job.state === "done" || job.state === "failed") return job;
      if (Date.now() > deadline) throw new ApiError(408, "Timeout", `job ${jobId} timed out`);
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }

  createSession(request: SessionRequest): Promise<{ session_id: string; job_id: string }> {
    return this.post("/sessions", request);
  }

  getPresentation(sessionId: string): Promise<PresentationDto> {
    return this.request(`/sessions/${sessionId}/presentation`);
  }

  getScene(sessionId: string): Promise<SceneDto> {
    return this.request(`/sessions/${sessionId}/scene`);
  }

  async postOps(sessionId: string, baseRevision: number, ops: SceneOp[]): Promise<OpsResult> {
    try {
      const body = await this.post<{ revision: number; scene: SceneDto }>(
        `/sessions/${sessionId}/scene/ops`,
        { base_revision: baseRevision, ops },
      );
      return { ok: true, revision: body.revision, scene: body.scene };
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        return {
          ok: false,
          conflict: true,
          currentRevision: Number(error.detail.current_revision ?? -1),
        };
      }
      throw error;
    }
  }

  exportSession(sessionId: string): Promise<{ bundle_dir: string; archive_url: string }> {
    return this.post(`/sessions/${sessionId}/export`, {});
  }

  healthz(): Promise<{ status: string; libraries: Record<string, unknown> }> {
    return this.request("/healthz");
  }

  cutoutUrl(sessionId: string, elementId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/elements/${elementId}/cutout`;
  }

  imageUrl(collectionId: string, imageId: string): string {
    return `${this.baseUrl}/collections/${collectionId}/images/${imageId}`;
  }

  archiveUrl(sessionId: string): string {
    return `${this.baseUrl}/sessions/${sessionId}/export.zip`;
  }
}
