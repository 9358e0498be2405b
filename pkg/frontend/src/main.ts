import { ApiClient } from "./api.js";
import { ChatStore } from "./state.js";
import { mount } from "./ui.js";

const api = new ApiClient("");
const store = new ChatStore(api);
mount(document, store);
void store.loadAgents();
