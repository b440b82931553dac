/** DOM rendering for the annotation flow; state lives in RaterSession. */

import { RaterSession, VALID_SCORES } from "./session.js";

const SCORE_HINTS: Record<number, string> = {
  0: "not correct",
  1: "partially correct",
  2: "matches the series",
};

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, session: RaterSession): void {
  root.replaceChildren();
  switch (session.phase) {
    case "idle":
      root.appendChild(renderRaterForm(session));
      break;
    case "loading":
    case "submitting":
      root.appendChild(el("p", "status", "Working..."));
      break;
    case "error":
      root.appendChild(renderErrorBanner(session));
      break;
    case "done":
      root.appendChild(renderDone(session));
      break;
    case "scoring":
      root.appendChild(renderItem(session));
      break;
  }
}

function renderRaterForm(session: RaterSession): HTMLElement {
  const form = el("form", "rater-form");
  const label = el("label", undefined, "Rater id:");
  const input = el("input");
  input.name = "rater";
  input.required = true;
  label.appendChild(input);
  const button = el("button", undefined, "Start scoring");
  button.type = "submit";
  form.append(label, button);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (input.value.trim()) void session.start(input.value);
  });
  return form;
}

function renderErrorBanner(session: RaterSession): HTMLElement {
  const banner = el("div", "error-banner");
  banner.append(
    el("p", undefined, session.errorMessage || "Something went wrong."),
    el("p", "hint", "Your selected scores are kept and will be resent."),
  );
  const button = el("button", undefined, "Retry");
  button.addEventListener("click", () => void session.retry());
  banner.appendChild(button);
  return banner;
}

function renderDone(session: RaterSession): HTMLElement {
  const panel = el("div", "done-panel");
  panel.append(
    el("h2", undefined, "All items scored"),
    el("p", "progress", `${session.progressLabel} - 100%`),
    el("p", undefined, "Thank you! You can close this page."),
  );
  return panel;
}

function renderItem(session: RaterSession): HTMLElement {
  const item = session.item!;
  const panel = el("div", "item-panel");
  if (session.conflictMessage) {
    panel.appendChild(el("p", "conflict", session.conflictMessage));
  }
  panel.appendChild(el("p", "progress", session.progressLabel));

  const plot = el("img", "plot");
  plot.src = item.plot_url ?? "";
  plot.alt = "time series line plot";
  panel.appendChild(plot);

  panel.appendChild(
    el("p", "instructions",
      "Score each candidate description of the plotted series: " +
      "2 matches, 1 partially correct, 0 not correct."),
  );

  for (const candidate of item.candidates) {
    const card = el("fieldset", "candidate");
    card.appendChild(el("legend", undefined, `Candidate ${candidate.slot}`));
    card.appendChild(el("p", "text", candidate.text));
    const choices = el("div", "choices");
    for (const score of VALID_SCORES) {
      const label = el("label", "choice");
      const radio = el("input");
      radio.type = "radio";
      radio.name = `score-${candidate.slot}`;
      radio.value = String(score);
      radio.checked = session.selections.get(candidate.slot) === score;
      radio.addEventListener("change", () => session.select(candidate.slot, score));
      label.append(radio, document.createTextNode(` ${score} (${SCORE_HINTS[score]})`));
      choices.appendChild(label);
    }
    card.appendChild(choices);
    panel.appendChild(card);
  }

  const submit = el("button", "submit", "Submit scores");
  submit.disabled = !session.canSubmit;
  submit.addEventListener("click", () => void session.submit());
  panel.appendChild(submit);
  if (session.errorMessage) {
    panel.appendChild(el("p", "inline-error", session.errorMessage));
  }
  return panel;
}
