/** Scripted browser session against the real scoring service.
 *
 * Spawns `python -m trendforge.cli eval serve` on a seeded 3-item, 3-candidate
 * evaluation set, drives the UI through the DOM for three raters, checks that
 * no model identity ever appears in the DOM, and verifies the summary
 * endpoint reports the exact normalized scores implied by the script.
 */

import { ChildProcess, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { RaterSession } from "../src/session.js";
import { render } from "../src/ui.js";

const MODELS = ["model-x", "model-y", "model-z"];
const RATERS = ["expert-1", "expert-2", "expert-3"];

function evalSetJson() {
  const window = (seed: number, split: string) => ({
    values: Array.from({ length: 30 }, (_, i) => i * (seed + 1)),
    corpus: "toy",
    series_id: `s${seed}`,
    start_index: 0,
    granularity: "daily",
    split,
    seed,
  });
  const item = (index: number, split: string) => ({
    item_id: `item-${String(index).padStart(4, "0")}`,
    split,
    window: window(index, split),
    candidates: MODELS.map((model, k) => ({
      model_id: model,
      text: `candidate ${k} reading of window ${index}`,
    })),
  });
  return {
    seed: 4242,
    items: [item(0, "test"), item(1, "test"), item(2, "holdout")],
  };
}

async function until(check: () => boolean, timeoutMs = 10_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (check()) return;
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
  throw new Error("condition never became true");
}

let proc: ChildProcess;
let baseUrl: string;

beforeAll(async () => {
  const dir = mkdtempSync(join(tmpdir(), "trendforge-ui-"));
  const evalsetPath = join(dir, "evalset.json");
  writeFileSync(evalsetPath, JSON.stringify(evalSetJson()));
  const port = 21000 + Math.floor(Math.random() * 20000);
  baseUrl = `http://127.0.0.1:${port}`;
  proc = spawn(
    "python3",
    [
      "-m", "trendforge.cli", "eval", "serve",
      "--evalset", evalsetPath,
      "--store", join(dir, "scores.jsonl"),
      "--port", String(port),
    ],
    { stdio: "ignore" },
  );
  const deadline = Date.now() + 45_000;
  for (;;) {
    try {
      const response = await fetch(`${baseUrl}/api/health`);
      if (response.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("scoring service never came up");
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
});

afterAll(() => {
  proc?.kill("SIGKILL");
});

function assertBlind(root: HTMLElement): void {
  const html = root.innerHTML;
  expect(html).not.toContain("model_id");
  for (const model of MODELS) {
    expect(html).not.toContain(model);
  }
}

describe("scripted rater sessions", () => {
  it("three raters complete all items through the DOM, blind throughout", async () => {
    for (const rater of RATERS) {
      const root = document.createElement("main");
      document.body.replaceChildren(root);
      const session = new RaterSession(new ApiClient(baseUrl));
      session.onChange(() => render(root, session));
      render(root, session);
      assertBlind(root);

      // rater-id form
      const input = root.querySelector("input")!;
      input.value = rater;
      root.querySelector("form")!.dispatchEvent(new Event("submit", { cancelable: true }));
      await until(() => session.phase === "scoring");

      let guard = 0;
      while (session.phase !== "done" && guard < 10) {
        guard += 1;
        assertBlind(root);
        const itemIndex = Number(session.item!.item_id!.slice(-1));
        const fieldsets = root.querySelectorAll("fieldset.candidate");
        expect(fieldsets).toHaveLength(3);
        // forced choice: submit stays disabled until every slot has a score
        const submit = root.querySelector<HTMLButtonElement>("button.submit")!;
        expect(submit.disabled).toBe(true);
        for (const candidate of session.item!.candidates) {
          const score = 2 - itemIndex; // item0 -> 2, item1 -> 1, item2 -> 0
          const radio = root.querySelector<HTMLInputElement>(
            `input[name="score-${candidate.slot}"][value="${score}"]`,
          )!;
          radio.click();
        }
        assertBlind(root);
        const enabled = root.querySelector<HTMLButtonElement>("button.submit")!;
        expect(enabled.disabled).toBe(false);
        const before = session.item!.item_id;
        enabled.click();
        await until(
          () => session.phase === "done" || (session.phase === "scoring" && session.item?.item_id !== before),
        );
      }
      expect(session.phase).toBe("done");
      assertBlind(root);
      expect(root.textContent).toContain("All items scored");
      expect(root.textContent).toContain("100%");
    }

    // every rater gave 2s on item0, 1s on item1 (both test) and 0s on the
    // holdout item, so each model scores (2+1)*3 / (2*3*2) = 0.75 on test
    // and 0 / (2*3*1) = 0 on holdout
    const summary = (await (await fetch(`${baseUrl}/api/summary`)).json()) as {
      complete: boolean;
      results: Array<{ model_id: string; split: string; score: number }>;
    };
    expect(summary.complete).toBe(true);
    const byKey = new Map(
      summary.results.map((r) => [`${r.model_id}/${r.split}`, r.score]),
    );
    for (const model of MODELS) {
      expect(byKey.get(`${model}/test`)).toBe(0.75);
      expect(byKey.get(`${model}/holdout`)).toBe(0);
    }
  });

  it("plot endpoint serves the PNG referenced by the DOM", async () => {
    const response = await fetch(`${baseUrl}/api/item/item-0000/plot`);
    expect(response.status).toBe(200);
    expect(response.headers.get("content-type")).toBe("image/png");
    const bytes = new Uint8Array(await response.arrayBuffer());
    expect(Array.from(bytes.slice(0, 4))).toEqual([0x89, 0x50, 0x4e, 0x47]);
  });
});
