/** Typed client for the study service JSON API. */

export interface SessionInfo {
  session_id: string;
  item_count: number;
  cursor: number;
}

export interface QuestionWire {
  id: string;
  text: string;
}

export interface NextItem {
  done: boolean;
  index: number;
  total: number;
  item_id?: string;
  blinded_label?: string;
  explanation?: string;
  questions?: QuestionWire[];
  rating_dimensions?: string[];
  rating_levels?: string[];
  choices?: string[];
}

export interface SubmitResult {
  accepted: boolean;
  duplicate: boolean;
  complete: boolean;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number | null = null) {
    super(message);
    this.name = 'ApiError';
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.baseUrl + path, init);
    } catch (err) {
      throw new ApiError(`network failure: ${String(err)}`);
    }
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        detail = JSON.parse(body).detail ?? body;
      } catch {
        /* plain-text error body */
      }
      throw new ApiError(`${detail}`, response.status);
    }
    return JSON.parse(body) as T;
  }

  openSession(studyId: string, evaluatorId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(`/api/studies/${encodeURIComponent(studyId)}/sessions`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ evaluator_id: evaluatorId }),
    });
  }

  nextItem(sessionId: string): Promise<NextItem> {
    return this.request<NextItem>(`/api/sessions/${encodeURIComponent(sessionId)}/next`);
  }

  submitAnswers(
    sessionId: string,
    itemId: string,
    choices: Record<string, string>,
    ratings: Record<string, string>,
  ): Promise<SubmitResult> {
    const path =
      `/api/sessions/${encodeURIComponent(sessionId)}/items/` +
      `${encodeURIComponent(itemId)}/answers`;
    return this.request<SubmitResult>(path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ choices, ratings }),
    });
  }
}
