// Typed client for the dmnchat JSON API. Every displayed value in the
// UI originates from one of these responses; nothing is derived locally.

export interface DecisionInfo {
  intent: string;
  display: string;
  required_inputs: string[];
}

export interface AgentSummary {
  agent_id: string;
  name: string;
  seed: number;
  created_at: string;
  decisions: DecisionInfo[];
  entities: number;
  intents: number;
}

export interface BotResponse {
  text: string;
  suggestions: string[];
  help: string | null;
  done: boolean;
  decision_value: string | null;
}

export interface OpenedSession {
  session_id: string;
  agent_id: string;
  response: BotResponse;
}

export interface TurnReply {
  session_id: string;
  status: string;
  response: BotResponse;
}

export interface TranscriptLine {
  role: "user" | "bot";
  text: string;
}

export interface SessionContext {
  id: string;
  status: string;
  active_decision: string | null;
  collected: Record<string, unknown>;
  summary: string;
  transcript: TranscriptLine[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base = "",
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, {
        method,
        headers: body === undefined
          ? undefined
          : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new ApiError(0, "network", String(err));
    }
    if (!response.ok) {
      let code = "http_error";
      let message = `${response.status} ${response.statusText}`;
      try {
        const payload = await response.json();
        if (payload && typeof payload.code === "string") {
          code = payload.code;
          message = payload.message ?? message;
        }
      } catch {
        // non-JSON error body; keep the status line
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  listAgents(): Promise<{ agents: AgentSummary[] }> {
    return this.request("GET", "/agents");
  }

  openSession(agentId: string): Promise<OpenedSession> {
    return this.request(
      "POST",
      `/agents/${encodeURIComponent(agentId)}/sessions`,
    );
  }

  sendMessage(sessionId: string, text: string): Promise<TurnReply> {
    return this.request(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/messages`,
      { text },
    );
  }

  getContext(sessionId: string): Promise<SessionContext> {
    return this.request(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/context`,
    );
  }

  closeSession(sessionId: string): Promise<{ ok: boolean }> {
    return this.request(
      "DELETE",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }
}
