/** DOM bootstrap: hash routing, keyboard shortcuts, progress polling. */

import { ApiError, ReviewApi } from "./api.js";
import { QueueController } from "./controller.js";
import {
  renderBanner,
  renderCompare,
  renderProgress,
  renderQueue,
  renderSearchResults,
} from "./render.js";
import type { IxpSummary } from "./types.js";

declare global {
  interface Window {
    IXPKIT_API_BASE?: string;
  }
}

const POLL_INTERVAL_MS = 2000;

const api = new ReviewApi(window.IXPKIT_API_BASE ?? "");
const reviewer =
  localStorage.getItem("ixpkit-reviewer") ??
  (() => {
    const name = window.prompt("Reviewer name?", "curator") || "curator";
    localStorage.setItem("ixpkit-reviewer", name);
    return name;
  })();
const controller = new QueueController(api, reviewer);

const app = document.getElementById("app")!;
const banner = document.getElementById("banner")!;
const progressBox = document.getElementById("progress")!;

let manualLeft: IxpSummary | null = null;
let manualRight: IxpSummary | null = null;

function showError(err: unknown): void {
  const message =
    err instanceof ApiError
      ? `${err.message}${err.status === 0 ? " — retrying may help" : ""}`
      : String(err);
  banner.innerHTML = renderBanner(message) +
    '<button id="retry">retry</button>';
  document.getElementById("retry")?.addEventListener("click", () => {
    banner.innerHTML = "";
    void refresh();
  });
}

function currentRoute(): string {
  return window.location.hash || "#/queue";
}

async function refresh(): Promise<void> {
  const route = currentRoute();
  try {
    if (route.startsWith("#/manual")) {
      renderManualScreen();
      return;
    }
    await controller.load();
    if (route.startsWith("#/compare")) {
      renderCompareScreen();
    } else {
      renderQueueScreen();
    }
  } catch (err) {
    showError(err);
  }
}

function renderQueueScreen(): void {
  app.innerHTML = `
    <div class="filters">
      <input id="filter-pair" placeholder="pair (euro-ix|peeringdb)" />
      <input id="filter-step" placeholder="step (1-6)" type="number" min="1" max="6" />
      <input id="filter-continent" placeholder="continent" />
      <button id="apply-filters">filter</button>
      <a href="#/manual">manual match</a>
    </div>
    ${renderQueue(controller.entries, controller.index)}
  `;
  document.getElementById("apply-filters")?.addEventListener("click", () => {
    const pair = (document.getElementById("filter-pair") as HTMLInputElement).value;
    const step = (document.getElementById("filter-step") as HTMLInputElement).value;
    const continent = (
      document.getElementById("filter-continent") as HTMLInputElement
    ).value;
    void controller
      .load({
        ...(pair ? { pair } : {}),
        ...(step ? { step: Number(step) } : {}),
        ...(continent ? { continent } : {}),
      })
      .then(renderQueueScreen)
      .catch(showError);
  });
  for (const row of app.querySelectorAll<HTMLElement>(".queue-row")) {
    row.addEventListener("click", () => {
      const id = row.dataset.candidate!;
      controller.select(id);
      window.location.hash = `#/compare/${id}`;
    });
  }
}

function renderCompareScreen(): void {
  const entry = controller.current();
  if (entry === null) {
    window.location.hash = "#/queue";
    return;
  }
  app.innerHTML = renderCompare(entry) + '<p><a href="#/queue">back to queue</a></p>';
  for (const button of app.querySelectorAll<HTMLButtonElement>("[data-action]")) {
    button.addEventListener("click", () => {
      void handleAction(button.dataset.action!);
    });
  }
}

function renderManualScreen(): void {
  app.innerHTML = `
    <div class="manual">
      <h2>Manual match (step 6)</h2>
      <div class="manual-sides">
        <div>
          <input id="search-left" placeholder="search left (e.g. stavanger)" />
          <div id="results-left"></div>
          <p id="picked-left">left: ${manualLeft ? manualLeft.names[0] : "—"}</p>
        </div>
        <div>
          <input id="search-right" placeholder="search right" />
          <div id="results-right"></div>
          <p id="picked-right">right: ${manualRight ? manualRight.names[0] : "—"}</p>
        </div>
      </div>
      <button id="create-manual">create candidate</button>
      <p><a href="#/queue">back to queue</a></p>
    </div>
  `;
  for (const side of ["left", "right"] as const) {
    const input = document.getElementById(`search-${side}`) as HTMLInputElement;
    input.addEventListener("change", () => {
      void api
        .searchIxps(input.value)
        .then(({ items }) => {
          const box = document.getElementById(`results-${side}`)!;
          box.innerHTML = renderSearchResults(items, side);
          for (const hit of box.querySelectorAll<HTMLElement>(".search-hit")) {
            hit.addEventListener("click", () => {
              const picked = items.find(
                (i) => i.canonical_id === hit.dataset.ixp,
              )!;
              if (side === "left") manualLeft = picked;
              else manualRight = picked;
              renderManualScreen();
            });
          }
        })
        .catch(showError);
    });
  }
  document.getElementById("create-manual")?.addEventListener("click", () => {
    if (!manualLeft || !manualRight) {
      showError(new Error("pick one IXP per side first"));
      return;
    }
    void controller
      .createManual(manualLeft.canonical_id, manualRight.canonical_id)
      .then(() => {
        manualLeft = manualRight = null;
        window.location.hash = "#/queue";
        return refresh();
      })
      .catch(showError);
  });
}

async function handleAction(action: string): Promise<void> {
  try {
    if (action === "accept") await controller.decide("accept");
    else if (action === "reject") await controller.decide("reject");
    else if (action === "skip") controller.skip();
    await refreshProgressPanel();
    if (currentRoute().startsWith("#/compare")) renderCompareScreen();
    else renderQueueScreen();
  } catch (err) {
    // decision failure keeps the queue position: nothing was reloaded
    showError(err);
  }
}

async function refreshProgressPanel(): Promise<void> {
  try {
    await controller.refreshProgress();
    if (controller.progress) progressBox.innerHTML = renderProgress(controller.progress);
  } catch {
    // transient polling failure: keep the last rendered panel
  }
}

document.addEventListener("keydown", (event) => {
  if (event.target instanceof HTMLInputElement) return;
  if (event.key === "a") void handleAction("accept");
  else if (event.key === "r") void handleAction("reject");
  else if (event.key === "s") void handleAction("skip");
});

window.addEventListener("hashchange", () => void refresh());
window.setInterval(() => void refreshProgressPanel(), POLL_INTERVAL_MS);

void refresh().then(refreshProgressPanel);
