import { describe, expect, it } from "vitest";
import {
  AgentSummary,
  ApiClient,
  ApiError,
  BotResponse,
  OpenedSession,
  TurnReply,
} from "../src/api.js";
import { ChatStore } from "../src/state.js";

function bot(overrides: Partial<BotResponse> = {}): BotResponse {
  return {
    text: "What is the Age value?",
    suggestions: [],
    help: null,
    done: false,
    decision_value: null,
    ...overrides,
  };
}

const AGENT: AgentSummary = {
  agent_id: "abc123",
  name: "Membership",
  seed: 42,
  created_at: "1970-01-01T00:00:00Z",
  decisions: [],
  entities: 2,
  intents: 12,
};

type Stub = Partial<{
  listAgents: () => Promise<{ agents: AgentSummary[] }>;
  openSession: (agentId: string) => Promise<OpenedSession>;
  sendMessage: (sessionId: string, text: string) => Promise<TurnReply>;
  getContext: (sessionId: string) => Promise<unknown>;
  closeSession: (sessionId: string) => Promise<{ ok: boolean }>;
}>;

function storeWith(stub: Stub): ChatStore {
  const api = {
    listAgents: () => Promise.resolve({ agents: [AGENT] }),
    openSession: (agentId: string) =>
      Promise.resolve({
        session_id: "sess-1",
        agent_id: agentId,
        response: bot({ text: "Hello! I can help you decide: Membership." }),
      }),
    sendMessage: () => {
      throw new Error("unexpected sendMessage");
    },
    getContext: () => {
      throw new Error("unexpected getContext");
    },
    closeSession: () => Promise.resolve({ ok: true }),
    ...stub,
  };
  return new ChatStore(api as unknown as ApiClient);
}

async function started(stub: Stub = {}): Promise<ChatStore> {
  const store = storeWith(stub);
  await store.loadAgents();
  await store.start("abc123");
  return store;
}

function reply(response: BotResponse, status = "open"): Promise<TurnReply> {
  return Promise.resolve({ session_id: "sess-1", status, response });
}

describe("ChatStore", () => {
  it("loads agents and opens a session with the greeting absorbed", async () => {
    const store = await started();
    const state = store.getState();
    expect(state.agents).toEqual([AGENT]);
    expect(state.agent).toEqual(AGENT);
    expect(state.sessionId).toBe("sess-1");
    expect(state.messages).toEqual([
      {
        role: "bot",
        text: "Hello! I can help you decide: Membership.",
        isHelp: false,
      },
    ]);
    expect(state.busy).toBe(false);
    expect(state.closed).toBe(false);
  });

  it("mirrors exactly the last response's suggestions, including none", async () => {
    const answers = [
      bot({ text: "Is the person hired?", suggestions: ["yes", "no"] }),
      bot({ text: "What is the Age value?" }),
    ];
    const store = await started({
      sendMessage: () => reply(answers.shift() as BotResponse),
    });
    await store.send("membership");
    expect(store.getState().suggestions).toEqual(["yes", "no"]);
    await store.send("hired is yes");
    expect(store.getState().suggestions).toEqual([]);
  });

  it("pushes the user bubble before the reply arrives", async () => {
    let seenDuringFlight: string[] = [];
    const store = await started({
      sendMessage: () => {
        seenDuringFlight = store.getState().messages.map((m) => m.text);
        return reply(bot());
      },
    });
    await store.send("  membership  ");
    expect(seenDuringFlight.at(-1)).toBe("membership");
    const texts = store.getState().messages.map((m) => m.text);
    expect(texts.at(-2)).toBe("membership");
    expect(texts.at(-1)).toBe("What is the Age value?");
  });

  it("allows only one request in flight per session", async () => {
    let calls = 0;
    let release: (r: TurnReply) => void = () => {};
    const store = await started({
      sendMessage: () => {
        calls += 1;
        return new Promise<TurnReply>((resolve) => {
          release = resolve;
        });
      },
    });
    const first = store.send("membership");
    await store.send("40");
    expect(calls).toBe(1);
    expect(
      store.getState().messages.filter((m) => m.role === "user"),
    ).toHaveLength(1);
    release({ session_id: "sess-1", status: "open", response: bot() });
    await first;
    expect(store.getState().busy).toBe(false);
  });

  it("ignores empty input", async () => {
    const store = await started();
    await store.send("   ");
    expect(store.getState().messages.filter((m) => m.role === "user")).toEqual(
      [],
    );
  });

  it("cancel closes the session and blocks further sends", async () => {
    let closed = 0;
    const store = await started({
      closeSession: () => {
        closed += 1;
        return Promise.resolve({ ok: true });
      },
    });
    await store.cancel();
    const state = store.getState();
    expect(closed).toBe(1);
    expect(state.closed).toBe(true);
    expect(state.status).toBe("cancelled");
    expect(state.suggestions).toEqual([]);
    await store.send("membership");
    expect(store.getState().messages.filter((m) => m.role === "user")).toEqual(
      [],
    );
  });

  it("treats a session_closed rejection as a closed session", async () => {
    const store = await started({
      sendMessage: () =>
        Promise.reject(new ApiError(409, "session_closed", "over")),
    });
    await store.send("membership");
    const state = store.getState();
    expect(state.closed).toBe(true);
    expect(state.error).toEqual({
      message: "This session is closed.",
      retryText: null,
    });
  });

  it("keeps the failed text for retry after a network error", async () => {
    let attempts = 0;
    const store = await started({
      sendMessage: (_s, text) => {
        attempts += 1;
        if (attempts === 1) {
          return Promise.reject(new ApiError(0, "network", "fetch failed"));
        }
        expect(text).toBe("age 60");
        return reply(bot({ text: "Is the person hired?" }));
      },
    });
    await store.send("age 60");
    expect(store.getState().error).toEqual({
      message: "fetch failed",
      retryText: "age 60",
    });
    await store.retry();
    const state = store.getState();
    expect(attempts).toBe(2);
    expect(state.error).toBeNull();
    // the original bubble is reused; retry adds no duplicate
    expect(
      state.messages.filter((m) => m.role === "user" && m.text === "age 60"),
    ).toHaveLength(1);
    expect(state.messages.at(-1)?.text).toBe("Is the person hired?");
  });

  it("marks client errors as not retryable", async () => {
    const store = await started({
      sendMessage: () =>
        Promise.reject(new ApiError(422, "unknown_input", "unknown input")),
    });
    await store.send("zzz is 4");
    expect(store.getState().error).toEqual({
      message: "unknown input",
      retryText: null,
    });
  });

  it("copies the decision value verbatim from the service", async () => {
    const store = await started({
      sendMessage: () =>
        reply(
          bot({
            text: "The result is: conditionally accepted",
            done: true,
            decision_value: "conditionally accepted",
          }),
          "decided",
        ),
    });
    expect(store.getState().decisionValue).toBeNull();
    await store.send("minimum");
    const state = store.getState();
    expect(state.decisionValue).toBe("conditionally accepted");
    expect(state.status).toBe("decided");
    expect(state.closed).toBe(false);
  });

  it("flags help replies so the UI can style them", async () => {
    const sent: string[] = [];
    const store = await started({
      sendMessage: (_s, text) => {
        sent.push(text);
        return reply(
          bot({
            text: "Hired is a yes/no question. Answer yes or no.",
            help: "Hired is a yes/no question. Answer yes or no.",
            suggestions: ["yes", "no"],
          }),
        );
      },
    });
    await store.help();
    expect(sent).toEqual(["help"]);
    const last = store.getState().messages.at(-1);
    expect(last?.isHelp).toBe(true);
    expect(last?.text).toBe("Hired is a yes/no question. Answer yes or no.");
  });

  it("keeps stale context when the context fetch fails", async () => {
    let fail = false;
    const context = {
      id: "sess-1",
      status: "open",
      active_decision: "membership",
      collected: { age: 40 },
      summary: "Deciding: Membership. You told me: Age = 40.",
      transcript: [],
    };
    const store = await started({
      getContext: () =>
        fail ? Promise.reject(new ApiError(0, "network", "down")) : Promise.resolve(context),
    });
    await store.toggleContext();
    expect(store.getState().context).toEqual(context);
    fail = true;
    await store.refreshContext();
    expect(store.getState().context).toEqual(context);
  });
});
