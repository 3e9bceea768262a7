// Session state machine: fetch a group, collect exactly one choice, submit,
// advance.  Inputs are disabled the moment a choice is made and stay disabled
// until the next group is on screen, so a group can never be answered twice
// from this tab; the server's 409 covers every other path.

import { isDone, StudyApi } from "./api.js";
import type { Choice, GroupPayload, NextPayload, Vote } from "./api.js";
import { PendingVotes } from "./queue.js";
import { SyncedPanels } from "./viewer.js";

export interface View {
  gtImg: HTMLImageElement;
  aImg: HTMLImageElement;
  bImg: HTMLImageElement;
  progress: HTMLElement;
  status: HTMLElement;
  buttons: Record<Choice, HTMLButtonElement>;
  retryButton: HTMLButtonElement;
  panels: HTMLElement;
  completion: HTMLElement;
}

export type AppPhase = "loading" | "choosing" | "submitting" | "offline" | "done";

export class StudyApp {
  phase: AppPhase = "loading";
  current: GroupPayload | null = null;

  constructor(
    private readonly api: StudyApi,
    private readonly subjectId: string,
    private readonly view: View,
    private readonly queue: PendingVotes,
    private readonly sync: SyncedPanels,
  ) {}

  async start(): Promise<void> {
    await this.flushQueue();
    await this.loadNext();
  }

  async loadNext(): Promise<void> {
    this.phase = "loading";
    this.setButtonsEnabled(false);
    this.setStatus("loading…");
    let payload: NextPayload;
    try {
      payload = await this.api.next(this.subjectId);
    } catch {
      this.enterOffline();
      return;
    }
    if (isDone(payload)) {
      this.renderDone(payload.answered, payload.total);
      return;
    }
    this.renderGroup(payload);
  }

  renderGroup(payload: GroupPayload): void {
    this.current = payload;
    this.phase = "choosing";
    this.view.completion.hidden = true;
    this.view.panels.hidden = false;
    this.view.gtImg.src = this.api.url(payload.gt_url);
    this.view.aImg.src = this.api.url(payload.a_url);
    this.view.bImg.src = this.api.url(payload.b_url);
    this.sync.reset();
    this.view.progress.textContent = `${payload.answered} / ${payload.total}`;
    this.setStatus(payload.batch ? `batch ${payload.batch}` : "");
    this.setButtonsEnabled(true);
  }

  renderDone(answered: number, total: number): void {
    this.current = null;
    this.phase = "done";
    this.view.panels.hidden = true;
    this.view.completion.hidden = false;
    this.view.completion.textContent = `All groups answered — thank you! (${answered} / ${total})`;
    this.view.progress.textContent = `${answered} / ${total}`;
    this.setButtonsEnabled(false);
    this.setStatus("");
  }

  /** Submit the subject's choice for the group on screen. */
  async choose(choice: Choice): Promise<void> {
    if (this.phase !== "choosing" || this.current === null) return;
    const vote: Vote = {
      group_id: this.current.group_id,
      subject_id: this.subjectId,
      choice,
    };
    this.phase = "submitting";
    this.setButtonsEnabled(false);
    this.setStatus("submitting…");
    try {
      await this.api.vote(vote);
      // "recorded" advances; "duplicate" means the server already has this
      // group from us, so resynchronize to whatever it says is next
      await this.loadNext();
    } catch {
      this.queue.enqueue(vote);
      this.enterOffline();
    }
  }

  handleKey(key: string): void {
    const mapping: Record<string, Choice> = { "1": "A", "2": "B", "3": "difficult" };
    const choice = mapping[key];
    if (choice) void this.choose(choice);
  }

  /** Retry affordance: deliver queued votes, then resync to the server. */
  async retry(): Promise<void> {
    await this.flushQueue();
    await this.loadNext();
  }

  private async flushQueue(): Promise<void> {
    if (this.queue.size > 0) {
      await this.queue.flush((vote) => this.api.vote(vote));
    }
  }

  private enterOffline(): void {
    this.phase = "offline";
    this.setButtonsEnabled(false);
    const queued = this.queue.size;
    this.setStatus(queued > 0 ? `offline — ${queued} vote(s) queued, will retry` : "offline — will retry");
    this.view.retryButton.hidden = false;
  }

  private setButtonsEnabled(enabled: boolean): void {
    for (const button of Object.values(this.view.buttons)) {
      button.disabled = !enabled;
    }
    if (enabled) this.view.retryButton.hidden = true;
  }

  private setStatus(text: string): void {
    this.view.status.textContent = text;
  }
}

/** Wire the three choice buttons and the retry button to the app. */
export function bindChoiceButtons(app: StudyApp, view: View): void {
  view.buttons.A.addEventListener("click", () => void app.choose("A"));
  view.buttons.B.addEventListener("click", () => void app.choose("B"));
  view.buttons.difficult.addEventListener("click", () => void app.choose("difficult"));
  view.retryButton.addEventListener("click", () => void app.retry());
}

/** Per-image failure overlay: a broken image shows a retry link that re-requests it. */
export function bindImageRetry(img: HTMLImageElement, note: HTMLElement): void {
  img.addEventListener("error", () => {
    if (!img.src) return;
    note.hidden = false;
  });
  img.addEventListener("load", () => {
    note.hidden = true;
  });
  note.addEventListener("click", () => {
    const src = img.src;
    img.src = "";
    img.src = src;
  });
}
