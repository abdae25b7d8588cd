/**
 * Typed client for the annotation service JSON API.
 *
 * Every failure is normalized into an ApiError with a kind the UI can act
 * on; revision conflicts carry the current server state so the conflict
 * dialog can show it next to the local draft.
 */

export interface LO {
  code: string;
  name: string;
  item: string;
  action: string;
  provided: string;
  outcome: string;
  category: string;
  chapter: string;
}

export interface QuestionSummary {
  id: string;
  chapter: string;
  source: string;
  dataset: string;
  label_count: number;
  labeled: boolean;
  revision: number;
}

export interface QuestionRecord {
  id: string;
  chapter: string;
  source: string;
  dataset: string;
  text: string;
  ground_truth: string[];
  notes: string;
}

export interface AnnotationState {
  selected: string[];
  notes: string;
  revision: number;
  modified: string;
}

export interface QuestionBundle {
  question: QuestionRecord;
  state: AnnotationState;
  subset: LO[];
}

export interface LOSearchFilters {
  chapter?: string;
  category?: string;
  action?: string;
}

export type ApiErrorKind = "not_found" | "conflict" | "bad_request" | "network";

export class ApiError extends Error {
  readonly kind: ApiErrorKind;
  readonly serverState?: AnnotationState;

  constructor(kind: ApiErrorKind, message: string, serverState?: AnnotationState) {
    super(message);
    this.name = "ApiError";
    this.kind = kind;
    this.serverState = serverState;
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let payload: Record<string, unknown> = {};
  try {
    payload = (await response.json()) as Record<string, unknown>;
  } catch {
    // non-JSON error body; fall through to status-based mapping
  }
  const message = typeof payload.message === "string" ? payload.message : `HTTP ${response.status}`;
  if (response.status === 409) {
    return new ApiError("conflict", message, payload.state as AnnotationState);
  }
  if (response.status === 404) {
    return new ApiError("not_found", message);
  }
  return new ApiError("bad_request", message);
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (error) {
      throw new ApiError("network", `service unreachable: ${String(error)}`);
    }
    if (!response.ok) {
      throw await parseError(response);
    }
    return response;
  }

  private async requestJson<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.request(path, init);
    return (await response.json()) as T;
  }

  async listQuestions(filters?: { chapter?: string; labeled?: boolean }): Promise<QuestionSummary[]> {
    const params = new URLSearchParams();
    if (filters?.chapter) params.set("chapter", filters.chapter);
    if (filters?.labeled !== undefined) params.set("labeled", String(filters.labeled));
    const suffix = params.size ? `?${params}` : "";
    const payload = await this.requestJson<{ questions: QuestionSummary[] }>(
      `/api/questions${suffix}`,
    );
    return payload.questions;
  }

  async getQuestion(id: string): Promise<QuestionBundle> {
    return this.requestJson<QuestionBundle>(`/api/questions/${encodeURIComponent(id)}`);
  }

  async searchLOs(query: string, filters?: LOSearchFilters): Promise<LO[]> {
    const params = new URLSearchParams({ query });
    if (filters?.chapter) params.set("chapter", filters.chapter);
    if (filters?.category) params.set("category", filters.category);
    if (filters?.action) params.set("action", filters.action);
    const payload = await this.requestJson<{ results: LO[] }>(`/api/los?${params}`);
    return payload.results;
  }

  async putLabels(id: string, codes: string[], expectedRevision: number): Promise<AnnotationState> {
    const payload = await this.requestJson<{ state: AnnotationState }>(
      `/api/questions/${encodeURIComponent(id)}/labels`,
      {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ codes, expected_revision: expectedRevision }),
      },
    );
    return payload.state;
  }

  async putNotes(id: string, text: string, expectedRevision: number): Promise<AnnotationState> {
    const payload = await this.requestJson<{ state: AnnotationState }>(
      `/api/questions/${encodeURIComponent(id)}/notes`,
      {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ text, expected_revision: expectedRevision }),
      },
    );
    return payload.state;
  }

  async exportGroundTruth(): Promise<string> {
    const response = await this.request(`/api/export`);
    return response.text();
  }
}
