// Conversation state machine. The store owns every rule the UI must
// respect: one request in flight per session, chips mirror exactly the
// last response's suggestions, a closed session takes no more input,
// and decision values are copied verbatim from the service.

import {
  AgentSummary,
  ApiClient,
  ApiError,
  BotResponse,
  SessionContext,
} from "./api.js";

export interface Message {
  role: "user" | "bot";
  text: string;
  isHelp: boolean;
}

export interface RetryableError {
  message: string;
  /** the user text whose delivery failed, if resending it makes sense */
  retryText: string | null;
}

export interface ChatState {
  agents: AgentSummary[];
  agent: AgentSummary | null;
  sessionId: string | null;
  messages: Message[];
  suggestions: string[];
  busy: boolean;
  closed: boolean;
  status: string;
  decisionValue: string | null;
  error: RetryableError | null;
  context: SessionContext | null;
  contextOpen: boolean;
}

type Listener = (state: ChatState) => void;

export class ChatStore {
  private state: ChatState = {
    agents: [],
    agent: null,
    sessionId: null,
    messages: [],
    suggestions: [],
    busy: false,
    closed: false,
    status: "open",
    decisionValue: null,
    error: null,
    context: null,
    contextOpen: false,
  };
  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  getState(): ChatState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    listener(this.state);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private patch(changes: Partial<ChatState>): void {
    this.state = { ...this.state, ...changes };
    for (const listener of this.listeners) listener(this.state);
  }

  private absorb(response: BotResponse, status?: string): void {
    const messages = this.state.messages.concat({
      role: "bot",
      text: response.text,
      isHelp: response.help !== null,
    });
    this.patch({
      messages,
      suggestions: response.suggestions ?? [],
      decisionValue: response.decision_value,
      status: status ?? this.state.status,
      closed: status === "cancelled" ? true : this.state.closed,
    });
  }

  async loadAgents(): Promise<void> {
    this.patch({ busy: true, error: null });
    try {
      const { agents } = await this.api.listAgents();
      this.patch({ agents, busy: false });
    } catch (err) {
      this.fail(err, null);
    }
  }

  async start(agentId: string): Promise<void> {
    if (this.state.busy) return;
    const agent =
      this.state.agents.find((a) => a.agent_id === agentId) ?? null;
    this.patch({
      busy: true,
      error: null,
      agent,
      sessionId: null,
      messages: [],
      suggestions: [],
      closed: false,
      status: "open",
      decisionValue: null,
      context: null,
    });
    try {
      const opened = await this.api.openSession(agentId);
      this.patch({ sessionId: opened.session_id, busy: false });
      this.absorb(opened.response);
    } catch (err) {
      this.fail(err, null);
    }
  }

  /** Send user text; chips call this with their label verbatim. */
  async send(text: string): Promise<void> {
    const trimmed = text.trim();
    if (!trimmed || this.state.busy || this.state.closed) return;
    if (!this.state.sessionId) return;
    this.patch({
      busy: true,
      error: null,
      messages: this.state.messages.concat({
        role: "user",
        text: trimmed,
        isHelp: false,
      }),
    });
    try {
      const reply = await this.api.sendMessage(this.state.sessionId, trimmed);
      this.patch({ busy: false });
      this.absorb(reply.response, reply.status);
      if (this.state.contextOpen) await this.refreshContext();
    } catch (err) {
      this.fail(err, trimmed);
    }
  }

  /** The per-question help bubble: plain message, uniform ingestion. */
  help(): Promise<void> {
    return this.send("help");
  }

  async cancel(): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId || this.state.closed) return;
    this.patch({ busy: true, error: null });
    try {
      await this.api.closeSession(sessionId);
      this.patch({
        busy: false,
        closed: true,
        status: "cancelled",
        suggestions: [],
      });
    } catch (err) {
      this.fail(err, null);
    }
  }

  async toggleContext(): Promise<void> {
    const open = !this.state.contextOpen;
    this.patch({ contextOpen: open });
    if (open) await this.refreshContext();
  }

  async refreshContext(): Promise<void> {
    const { sessionId } = this.state;
    if (!sessionId) return;
    try {
      const context = await this.api.getContext(sessionId);
      this.patch({ context });
    } catch {
      // the panel shows stale data rather than killing the conversation
    }
  }

  async retry(): Promise<void> {
    const failed = this.state.error;
    if (!failed) return;
    this.patch({ error: null });
    if (failed.retryText !== null) {
      // the user bubble is already in the transcript; resend directly
      const { sessionId } = this.state;
      if (!sessionId || this.state.busy || this.state.closed) return;
      this.patch({ busy: true });
      try {
        const reply = await this.api.sendMessage(sessionId, failed.retryText);
        this.patch({ busy: false });
        this.absorb(reply.response, reply.status);
      } catch (err) {
        this.fail(err, failed.retryText);
      }
    } else if (this.state.sessionId === null) {
      await this.loadAgents();
    }
  }

  private fail(err: unknown, retryText: string | null): void {
    if (err instanceof ApiError && err.code === "session_closed") {
      this.patch({
        busy: false,
        closed: true,
        status: "cancelled",
        suggestions: [],
        error: { message: "This session is closed.", retryText: null },
      });
      return;
    }
    const retryable =
      err instanceof ApiError && (err.status === 0 || err.status >= 500);
    this.patch({
      busy: false,
      error: {
        message: err instanceof Error ? err.message : String(err),
        retryText: retryable ? retryText : null,
      },
    });
  }
}
