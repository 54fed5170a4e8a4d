import type { SlotsResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly lotId: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly baseUrl = "",
  ) {}

  private url(path: string): string {
    return `${this.baseUrl}/lots/${encodeURIComponent(this.lotId)}${path}`;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.url(path), {
      ...init,
      headers: {
        Authorization: `Bearer ${this.token}`,
        ...(init?.headers ?? {}),
      },
    });
    const body = await resp.json().catch(() => ({}));
    if (!resp.ok) {
      throw new ApiError(body.code ?? "error", body.message ?? resp.statusText, resp.status);
    }
    return body as T;
  }

  fetchSlots(): Promise<SlotsResponse> {
    return this.request<SlotsResponse>("/slots");
  }

  reserve(index: number): Promise<{ slot: number; reserved: boolean }> {
    return this.request(`/slots/${index}/reserve`, { method: "POST" });
  }

  reserveAll(): Promise<{ reserved_indices: number[] }> {
    return this.request("/reserve-all", { method: "POST" });
  }

  release(index: number): Promise<{ slot: number; reserved: boolean }> {
    return this.request(`/slots/${index}/reserve`, { method: "DELETE" });
  }

  navigation(index: number): Promise<{ lat: number; lon: number; url: string }> {
    return this.request(`/slots/${index}/navigation`);
  }

  /** Cache-busted URL of the latest annotated image. */
  annotatedUrl(): string {
    return `${this.url("/annotated")}?t=${Date.now()}`;
  }
}
