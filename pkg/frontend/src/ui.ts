// DOM layer: renders ChatState snapshots into the static shell and
// forwards user gestures to the store. Rendering is a full rebuild of
// each dynamic region; the lists involved stay small.

import { ChatState, ChatStore } from "./state.js";

interface Regions {
  picker: HTMLSelectElement;
  messages: HTMLElement;
  chips: HTMLElement;
  input: HTMLInputElement;
  send: HTMLButtonElement;
  helpButton: HTMLButtonElement;
  cancel: HTMLButtonElement;
  contextToggle: HTMLButtonElement;
  contextPanel: HTMLElement;
  banner: HTMLElement;
}

function grab(root: Document): Regions {
  const byId = <T extends HTMLElement>(id: string): T => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing element #${id}`);
    return el as T;
  };
  return {
    picker: byId<HTMLSelectElement>("agent-picker"),
    messages: byId("messages"),
    chips: byId("chips"),
    input: byId<HTMLInputElement>("user-input"),
    send: byId<HTMLButtonElement>("send-button"),
    helpButton: byId<HTMLButtonElement>("help-button"),
    cancel: byId<HTMLButtonElement>("cancel-button"),
    contextToggle: byId<HTMLButtonElement>("context-toggle"),
    contextPanel: byId("context-panel"),
    banner: byId("banner"),
  };
}

export function mount(root: Document, store: ChatStore): void {
  const ui = grab(root);

  ui.picker.addEventListener("change", () => {
    if (ui.picker.value) void store.start(ui.picker.value);
  });
  const submit = () => {
    const text = ui.input.value;
    ui.input.value = "";
    void store.send(text);
  };
  ui.send.addEventListener("click", submit);
  ui.input.addEventListener("keydown", (event) => {
    if ((event as KeyboardEvent).key === "Enter") submit();
  });
  ui.helpButton.addEventListener("click", () => void store.help());
  ui.cancel.addEventListener("click", () => void store.cancel());
  ui.contextToggle.addEventListener("click", () => void store.toggleContext());

  store.subscribe((state) => render(root, ui, store, state));
}

function render(
  root: Document,
  ui: Regions,
  store: ChatStore,
  state: ChatState,
): void {
  renderPicker(root, ui, state);
  renderMessages(root, ui, state);
  renderChips(root, ui, store, state);
  renderBanner(root, ui, store, state);
  renderContext(root, ui, state);

  const inputLocked =
    state.busy || state.closed || state.sessionId === null;
  ui.input.disabled = inputLocked;
  ui.send.disabled = inputLocked;
  ui.helpButton.disabled = inputLocked;
  ui.cancel.disabled = state.sessionId === null || state.closed;
  ui.contextToggle.disabled = state.sessionId === null;
}

function renderPicker(root: Document, ui: Regions, state: ChatState): void {
  const current = ui.picker.value;
  ui.picker.textContent = "";
  const placeholder = root.createElement("option");
  placeholder.value = "";
  placeholder.textContent = state.agents.length
    ? "Pick an agent…"
    : "No agents available";
  ui.picker.appendChild(placeholder);
  for (const agent of state.agents) {
    const option = root.createElement("option");
    option.value = agent.agent_id;
    option.textContent = `${agent.name} (${agent.agent_id.slice(0, 6)})`;
    ui.picker.appendChild(option);
  }
  ui.picker.value = state.agent ? state.agent.agent_id : current;
}

function renderMessages(root: Document, ui: Regions, state: ChatState): void {
  ui.messages.textContent = "";
  for (const message of state.messages) {
    const bubble = root.createElement("div");
    bubble.className = `bubble ${message.role}${message.isHelp ? " help" : ""}`;
    bubble.textContent = message.text;
    ui.messages.appendChild(bubble);
  }
  if (state.busy) {
    const typing = root.createElement("div");
    typing.className = "bubble bot typing";
    typing.textContent = "…";
    ui.messages.appendChild(typing);
  }
  ui.messages.scrollTop = ui.messages.scrollHeight;
}

function renderChips(
  root: Document,
  ui: Regions,
  store: ChatStore,
  state: ChatState,
): void {
  ui.chips.textContent = "";
  if (state.closed || state.busy) return;
  for (const suggestion of state.suggestions) {
    const chip = root.createElement("button");
    chip.className = "chip";
    chip.type = "button";
    chip.textContent = suggestion;
    // a chip is a canned utterance: clicking sends its text verbatim
    chip.addEventListener("click", () => void store.send(suggestion));
    ui.chips.appendChild(chip);
  }
}

function renderBanner(
  root: Document,
  ui: Regions,
  store: ChatStore,
  state: ChatState,
): void {
  ui.banner.textContent = "";
  ui.banner.className = "";
  if (state.error) {
    ui.banner.className = "banner error";
    const text = root.createElement("span");
    text.textContent = state.error.message;
    ui.banner.appendChild(text);
    if (state.error.retryText !== null || state.sessionId === null) {
      const retry = root.createElement("button");
      retry.id = "retry-button";
      retry.textContent = "Retry";
      retry.addEventListener("click", () => void store.retry());
      ui.banner.appendChild(retry);
    }
    return;
  }
  if (state.decisionValue !== null) {
    ui.banner.className = "banner result";
    ui.banner.textContent = `The result is: ${state.decisionValue}`;
    return;
  }
  if (state.closed) {
    ui.banner.className = "banner closed";
    ui.banner.textContent = "Session ended.";
  }
}

function renderContext(root: Document, ui: Regions, state: ChatState): void {
  ui.contextPanel.hidden = !state.contextOpen;
  if (!state.contextOpen) return;
  ui.contextPanel.textContent = "";
  const heading = root.createElement("h2");
  heading.textContent = "What I know so far";
  ui.contextPanel.appendChild(heading);
  if (!state.context) {
    const empty = root.createElement("p");
    empty.textContent = "Nothing collected yet.";
    ui.contextPanel.appendChild(empty);
    return;
  }
  const summary = root.createElement("p");
  summary.id = "context-summary";
  summary.textContent = state.context.summary;
  ui.contextPanel.appendChild(summary);
  const list = root.createElement("dl");
  for (const [name, value] of Object.entries(state.context.collected)) {
    const dt = root.createElement("dt");
    dt.textContent = name;
    const dd = root.createElement("dd");
    dd.textContent = String(value);
    list.appendChild(dt);
    list.appendChild(dd);
  }
  ui.contextPanel.appendChild(list);
}
