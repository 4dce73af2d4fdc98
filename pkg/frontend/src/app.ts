// Playground controller: wires the panels to the session service.
// One request in flight per session; input is disabled until the response
// lands (mirrors the service's 409 policy).

import { ServiceError, SessionClient, type StepRecord } from "./api.js";
import {
  renderAnswerBanner,
  renderEntityTree,
  renderPalette,
  renderParseError,
  renderRules,
  renderTimeline,
  renderTranscriptEntry,
  escapeHtml,
} from "./views.js";

type Elements = {
  transcript: HTMLElement;
  tree: HTMLElement;
  rules: HTMLElement;
  palette: HTMLElement;
  timeline: HTMLElement;
  banner: HTMLElement;
  status: HTMLElement;
  input: HTMLInputElement;
  whatifCommands: HTMLInputElement;
  whatifQuery: HTMLInputElement;
};

export class Playground {
  private busy = false;
  private step = 0;
  private records: StepRecord[] = [];

  constructor(
    private readonly client: SessionClient,
    private readonly el: Elements,
  ) {}

  async start(libs: string[]): Promise<void> {
    const created = await this.client.create(libs);
    this.step = created.step;
    this.el.status.textContent =
      `session ${created.session_id.slice(0, 8)} · libs: ${created.libs.join(", ")} · emulator v${created.emulator_version}`;
    await this.refreshPanels();
  }

  private setBusy(value: boolean): void {
    this.busy = value;
    this.el.input.disabled = value;
    for (const btn of this.el.palette.querySelectorAll("button")) {
      (btn as HTMLButtonElement).disabled = value;
    }
  }

  private async guarded<T>(work: () => Promise<T>): Promise<T | undefined> {
    if (this.busy) return undefined;
    this.setBusy(true);
    try {
      return await work();
    } finally {
      this.setBusy(false);
    }
  }

  async submit(text: string): Promise<void> {
    await this.guarded(async () => {
      this.el.banner.innerHTML = "";
      try {
        const body = await this.client.submit(text);
        this.step = body.step;
        this.records.push(body.record);
        this.el.transcript.insertAdjacentHTML("beforeend", renderTranscriptEntry(body.record));
        this.el.transcript.scrollTop = this.el.transcript.scrollHeight;
        await this.refreshPanels();
      } catch (err) {
        if (err instanceof ServiceError && err.status === 422) {
          this.el.banner.innerHTML = renderParseError(text, err.span, err.message);
          return;
        }
        throw err;
      }
    });
  }

  /** Palette click: identical to typing the action's label. A stale palette
   * (the session advanced since the fetch) drops the click with a notice. */
  async act(label: string, fetchedAtStep: number): Promise<void> {
    if (fetchedAtStep !== this.step) {
      this.el.banner.innerHTML =
        `<div class="banner banner-stale">palette was stale; refreshed — click again</div>`;
      await this.guarded(() => this.refreshPalette());
      return;
    }
    await this.submit(label);
  }

  async whatif(commandsText: string, query: string): Promise<void> {
    await this.guarded(async () => {
      const commands = commandsText
        .split(";")
        .map((c) => c.trim())
        .filter((c) => c.length > 0);
      try {
        const body = await this.client.whatif(commands, query);
        this.el.banner.innerHTML = renderAnswerBanner(body.answer, body.applied);
      } catch (err) {
        if (err instanceof ServiceError) {
          this.el.banner.innerHTML =
            `<div class="banner banner-error">${escapeHtml(err.message)}</div>`;
          return;
        }
        throw err;
      }
    });
  }

  async exportTranscript(): Promise<string> {
    const body = await this.client.transcript();
    return body.lines.join("\n") + "\n";
  }

  private async refreshPalette(): Promise<void> {
    const aff = await this.client.affordances();
    this.el.palette.innerHTML = renderPalette(aff.actions, aff.step);
    for (const btn of this.el.palette.querySelectorAll("button.affordance")) {
      btn.addEventListener("click", () => {
        const b = btn as HTMLButtonElement;
        void this.act(b.dataset.label ?? "", Number(b.dataset.step));
      });
    }
  }

  private async refreshPanels(): Promise<void> {
    const [state, rules] = await Promise.all([this.client.state(), this.client.rules()]);
    this.el.tree.innerHTML = renderEntityTree(state.state);
    this.el.rules.innerHTML = renderRules(rules.rules);
    this.el.timeline.innerHTML = renderTimeline(this.records);
    await this.refreshPalette();
  }
}
