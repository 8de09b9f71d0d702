/** Typed client for the inference service's HTTP API. */

export interface ServerConfig {
  image_size: number;
  size_multiple: number;
  queue_depth: number;
  refine_available: boolean;
}

export interface InpaintResponse {
  result: string; // base64 PNG
  refined_sketch?: string;
  timing_ms: Record<string, number>;
  model_versions: Record<string, string>;
  scale: number;
  image_size: number;
}

export interface ApiError {
  code: string;
  message: string;
  field?: string;
}

export class ServerError extends Error {
  constructor(
    public status: number,
    public body: ApiError,
  ) {
    super(body.message);
  }
}

type FetchLike = typeof fetch;

export class ApiClient {
  constructor(
    private baseUrl = "",
    private fetchImpl: FetchLike = fetch,
  ) {}

  private async parseError(resp: Response): Promise<never> {
    let body: ApiError;
    try {
      body = (await resp.json()) as ApiError;
    } catch {
      body = { code: "unknown", message: `HTTP ${resp.status}` };
    }
    throw new ServerError(resp.status, body);
  }

  async health(): Promise<{ status: string; model_versions: Record<string, string> }> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/health`);
    if (!resp.ok) return this.parseError(resp);
    return resp.json();
  }

  async config(): Promise<ServerConfig> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/config`);
    if (!resp.ok) return this.parseError(resp);
    return resp.json();
  }

  async inpaint(
    imagePng: Uint8Array,
    maskPng: Uint8Array,
    sketchPng: Uint8Array,
    refine: boolean,
  ): Promise<InpaintResponse> {
    const form = new FormData();
    form.append("image", new Blob([imagePng as BlobPart], { type: "image/png" }), "image.png");
    form.append("mask", new Blob([maskPng as BlobPart], { type: "image/png" }), "mask.png");
    form.append("sketch", new Blob([sketchPng as BlobPart], { type: "image/png" }), "sketch.png");
    form.append("refine", String(refine));
    form.append("return_refined_sketch", String(refine));
    const resp = await this.fetchImpl(`${this.baseUrl}/api/inpaint`, {
      method: "POST",
      body: form,
    });
    if (!resp.ok) return this.parseError(resp);
    return resp.json();
  }
}

/**
 * Retry an API call while the server reports 503 (checkpoints loading),
 * with exponential backoff. Other errors propagate immediately.
 */
export async function withLoadingRetry<T>(
  call: () => Promise<T>,
  options: {
    retries?: number;
    baseDelayMs?: number;
    onRetry?: (attempt: number, delayMs: number) => void;
    sleep?: (ms: number) => Promise<void>;
  } = {},
): Promise<T> {
  const retries = options.retries ?? 5;
  const baseDelay = options.baseDelayMs ?? 500;
  const sleep = options.sleep ?? ((ms) => new Promise((r) => setTimeout(r, ms)));
  for (let attempt = 0; ; attempt++) {
    try {
      return await call();
    } catch (err) {
      if (!(err instanceof ServerError) || err.status !== 503 || attempt >= retries) {
        throw err;
      }
      const delay = baseDelay * 2 ** attempt;
      options.onRetry?.(attempt + 1, delay);
      await sleep(delay);
    }
  }
}
