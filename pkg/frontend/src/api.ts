/** Transport abstraction over the synthesis API (mockable in tests). */

import type {
  GalleryEntry,
  HealthStatus,
  PokeRequest,
  PokeResponse,
} from "./types.js";

export interface Transport {
  health(): Promise<HealthStatus>;
  gallery(): Promise<GalleryEntry[]>;
  poke(request: PokeRequest): Promise<PokeResponse>;
}

export class ApiRequestError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
  }
}

export class FetchTransport implements Transport {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(this.baseUrl + path, init);
    if (!response.ok) {
      let code = "http_error";
      let message = response.statusText;
      try {
        const body = await response.json();
        code = body?.error?.code ?? code;
        message = body?.error?.message ?? message;
      } catch {
        // non-JSON error body; keep defaults
      }
      throw new ApiRequestError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  health(): Promise<HealthStatus> {
    return this.request("/api/health");
  }

  gallery(): Promise<GalleryEntry[]> {
    return this.request("/api/gallery");
  }

  poke(request: PokeRequest): Promise<PokeResponse> {
    return this.request("/api/poke", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
  }
}
