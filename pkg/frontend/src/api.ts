/** Typed client for the inference service JSON API. */

export interface CatalogEntry {
  id: number;
  name: string;
}

export interface CatalogResponse {
  symptoms: CatalogEntry[];
  diseases: CatalogEntry[];
}

export type Algorithm = "gvamp" | "uls" | "admm" | "scan";
export type AbsenceMode = "assume-absent" | "treat-missing";

export interface InferRequest {
  present: number[];
  absent: number[];
  algorithm: Algorithm;
  top_k: number;
  absence_mode: AbsenceMode;
}

export interface RankingRow {
  disease_id: number;
  disease_name: string;
  score: number;
}

export interface Diagnostics {
  iterations: number;
  converged: boolean;
  algorithm: string;
}

export interface InferResponse {
  ranking: RankingRow[];
  diagnostics: Diagnostics;
  request_echo: InferRequest;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(`API error ${status}: ${detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async getCatalog(): Promise<CatalogResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/api/catalog`);
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as CatalogResponse;
  }

  async postInfer(req: InferRequest): Promise<InferResponse> {
    const res = await this.fetchFn(`${this.baseUrl}/api/infer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(req),
    });
    if (!res.ok) throw new ApiError(res.status, await res.text());
    return (await res.json()) as InferResponse;
  }
}
