import { ApiClient } from "./api.js";
import { RaterSession } from "./session.js";
import { render } from "./ui.js";

function boot(): void {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  const session = new RaterSession(new ApiClient(""));
  session.onChange(() => render(root, session));
  render(root, session);
}

document.addEventListener("DOMContentLoaded", boot);
