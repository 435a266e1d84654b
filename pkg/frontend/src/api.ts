import type { CreateSessionBody, ObjectPayload, SessionPayload } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let message = `${resp.status}`;
  try {
    const body = await resp.json();
    if (Array.isArray(body.detail) && body.detail.length > 0) {
      message = body.detail.map((d: { msg?: string }) => d.msg ?? "").join("; ");
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, message);
}

export class Api {
  constructor(private baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!resp.ok) {
      throw await parseError(resp);
    }
    return (await resp.json()) as T;
  }

  createSession(body: CreateSessionBody): Promise<SessionPayload> {
    return this.request("/sessions", { method: "POST", body: JSON.stringify(body) });
  }

  feedback(sessionId: string, chosenId: number): Promise<SessionPayload> {
    return this.request(`/sessions/${sessionId}/feedback`, {
      method: "POST",
      body: JSON.stringify({ chosen_id: chosenId }),
    });
  }

  stop(sessionId: string): Promise<SessionPayload> {
    return this.request(`/sessions/${sessionId}/stop`, { method: "POST" });
  }

  getObject(id: number): Promise<ObjectPayload> {
    return this.request(`/objects/${id}`);
  }
}
