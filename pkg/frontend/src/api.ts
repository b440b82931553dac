/** Typed client for the scoring service HTTP API. */

export interface SlotCandidate {
  slot: string;
  text: string;
}

export interface SlotScore {
  slot: string;
  score: number;
}

export interface Progress {
  scored_items: number;
  total_items: number;
}

export interface NextItem {
  done: boolean;
  progress: Progress;
  item_id?: string | null;
  split?: string | null;
  plot_url?: string | null;
  candidates: SlotCandidate[];
  scored: SlotScore[];
}

export interface ScoreRequest {
  item_id: string;
  rater_id: string;
  slot: string;
  score: number;
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, init);
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  next(raterId: string): Promise<NextItem> {
    const query = new URLSearchParams({ rater: raterId });
    return request<NextItem>(`${this.baseUrl}/api/next?${query}`);
  }

  score(body: ScoreRequest): Promise<{ status: string }> {
    return request(`${this.baseUrl}/api/score`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  plotUrl(item: NextItem): string {
    return `${this.baseUrl}${item.plot_url ?? ""}`;
  }
}
