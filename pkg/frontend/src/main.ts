import { StudyApi } from "./api.js";
import { bindChoiceButtons, bindImageRetry, StudyApp } from "./app.js";
import type { View } from "./app.js";
import { PendingVotes, webStorageStore } from "./queue.js";
import { bindPanZoom, SyncedPanels } from "./viewer.js";

function el<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) throw new Error(`missing element #${id}`);
  return found as T;
}

function subjectId(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("subject");
  if (fromQuery) {
    localStorage.setItem("phdeval-subject", fromQuery);
    return fromQuery;
  }
  const stored = localStorage.getItem("phdeval-subject");
  if (stored) return stored;
  const entered = window.prompt("Subject id:") || `anon-${Date.now()}`;
  localStorage.setItem("phdeval-subject", entered);
  return entered;
}

export function buildView(): View {
  return {
    gtImg: el<HTMLImageElement>("gt-img"),
    aImg: el<HTMLImageElement>("a-img"),
    bImg: el<HTMLImageElement>("b-img"),
    progress: el("progress"),
    status: el("status"),
    buttons: {
      A: el<HTMLButtonElement>("choose-a"),
      B: el<HTMLButtonElement>("choose-b"),
      difficult: el<HTMLButtonElement>("choose-difficult"),
    },
    retryButton: el<HTMLButtonElement>("retry"),
    panels: el("panels"),
    completion: el("completion"),
  };
}

export function wire(api: StudyApi, subject: string): StudyApp {
  const view = buildView();
  const sync = new SyncedPanels([el("gt-pane"), el("a-pane"), el("b-pane")]);
  for (const id of ["gt", "a", "b"]) {
    bindPanZoom(el(`${id}-panel`), sync);
    bindImageRetry(el<HTMLImageElement>(`${id}-img`), el(`${id}-retry`));
  }
  const app = new StudyApp(api, subject, view, new PendingVotes(webStorageStore(localStorage)), sync);
  bindChoiceButtons(app, view);
  document.addEventListener("keydown", (ev) => app.handleKey(ev.key));
  return app;
}

if (typeof document !== "undefined" && document.getElementById("panels")) {
  void wire(new StudyApi(""), subjectId()).start();
}
