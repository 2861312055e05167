import { ApiClient, ApiError } from "./client.js";
import { AdjudicationForm, AdjudicationQueue } from "./adjudicateFlow.js";
import { AnnotateSession } from "./taskView.js";
import { DashboardData, formatKappa, loadDashboard } from "./dashboard.js";

export type ViewName = "annotate" | "queue" | "dashboard";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Keyboard-driven console: digit keys toggle labels, Enter submits, `n`
 * advances. Every render is a pure projection of the current API-derived
 * state, so reloading reproduces the same view for the same task state. */
export class ConsoleApp {
  readonly session: AnnotateSession;
  readonly queue: AdjudicationQueue;
  readonly forms = new Map<string, AdjudicationForm>();
  dashboard: DashboardData | null = null;
  view: ViewName = "annotate";
  banner = "";
  done = false;

  private chain: Promise<void> = Promise.resolve();
  private readonly doc: Document;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    readonly batchId: string,
  ) {
    this.doc = root.ownerDocument;
    this.session = new AnnotateSession(client, batchId);
    this.queue = new AdjudicationQueue(client, batchId);
    this.doc.addEventListener("keydown", (event) => this.onKey(event as KeyboardEvent));
  }

  /** Resolves when all queued async UI actions have completed. */
  settle(): Promise<void> {
    return this.chain;
  }

  private enqueue(action: () => Promise<void>): Promise<void> {
    this.chain = this.chain.then(async () => {
      try {
        this.banner = "";
        await action();
      } catch (error) {
        this.banner =
          error instanceof ApiError
            ? `${error.status} ${error.code}: ${error.message}`
            : String(error);
      }
      this.render();
    });
    return this.chain;
  }

  start(view: ViewName): Promise<void> {
    this.view = view;
    if (view === "annotate") {
      return this.enqueue(async () => {
        const task = await this.session.loadNext();
        this.done = task === null;
      });
    }
    if (view === "queue") {
      return this.enqueue(async () => {
        await this.queue.loadAll();
        this.forms.clear();
        for (const item of this.queue.items) {
          this.forms.set(item.task_id, new AdjudicationForm(item));
        }
      });
    }
    return this.enqueue(async () => {
      this.dashboard = await loadDashboard(this.client, this.batchId);
    });
  }

  // -- annotate actions ----------------------------------------------

  toggleLabel(label: string): Promise<void> {
    return this.enqueue(async () => {
      this.session.current?.toggle(label);
    });
  }

  submit(): Promise<void> {
    return this.enqueue(async () => {
      const task = this.session.current;
      if (!task) return;
      if (!task.canSubmit()) {
        if (task.phase === "judging") {
          this.banner = `set all labels first: ${task.unsetLabels().join(", ")}`;
          return;
        }
        return;
      }
      await task.submit();
    });
  }

  flagCurrent(note: string): Promise<void> {
    return this.enqueue(async () => {
      await this.session.current?.flag(note);
    });
  }

  next(): Promise<void> {
    return this.enqueue(async () => {
      if (this.session.current && this.session.current.phase !== "judging") {
        this.session.markDone();
      }
      const task = await this.session.loadNext();
      this.done = task === null;
    });
  }

  // -- adjudication actions ------------------------------------------

  retain(taskId: string): Promise<void> {
    return this.enqueue(async () => {
      const form = this.forms.get(taskId);
      if (!form) throw new Error(`no queue item ${taskId}`);
      form.mode = "retain";
      await form.submit(this.client);
    });
  }

  submitOverride(taskId: string): Promise<void> {
    return this.enqueue(async () => {
      const form = this.forms.get(taskId);
      if (!form) throw new Error(`no queue item ${taskId}`);
      await form.submit(this.client);
    });
  }

  // -- keyboard -------------------------------------------------------

  private onKey(event: KeyboardEvent): void {
    if (this.view !== "annotate") return;
    const target = event.target as HTMLElement | null;
    if (target && target.tagName === "INPUT") return;
    const task = this.session.current;
    if (!task) return;
    if (event.key >= "1" && event.key <= "9") {
      const index = Number(event.key) - 1;
      const label = task.task.labels[index];
      if (label) void this.toggleLabel(label);
    } else if (event.key === "Enter") {
      void this.submit();
    } else if (event.key === "n") {
      void this.next();
    }
  }

  // -- rendering ------------------------------------------------------

  render(): void {
    this.root.textContent = "";
    if (this.banner) {
      this.root.appendChild(el(this.doc, "div", { id: "banner", class: "banner" }, this.banner));
    }
    if (this.view === "annotate") this.renderAnnotate();
    else if (this.view === "queue") this.renderQueue();
    else this.renderDashboard();
  }

  private renderAnnotate(): void {
    const doc = this.doc;
    const task = this.session.current;
    if (!task) {
      this.root.appendChild(
        el(doc, "div", { id: "all-done" }, this.done ? "No pending tasks." : "Loading..."),
      );
      return;
    }
    const container = el(doc, "div", { id: "task", "data-task-id": task.taskId });
    container.appendChild(el(doc, "div", { id: "task-lang" }, task.task.language));
    container.appendChild(el(doc, "div", { id: "task-text" }, task.task.text));

    const toggles = el(doc, "div", { id: "toggles" });
    task.task.labels.forEach((label, index) => {
      const value = task.toggles.get(label);
      const button = el(
        doc,
        "button",
        {
          class: "label-toggle",
          "data-label": label,
          "data-value": value === null ? "unset" : String(value),
        },
        `[${index + 1}] ${label}: ${value === null ? "unset" : value}`,
      );
      button.addEventListener("click", () => void this.toggleLabel(label));
      toggles.appendChild(button);
    });
    container.appendChild(toggles);

    const submit = el(doc, "button", { id: "submit-btn" }, "Submit judgment");
    submit.disabled = !task.canSubmit();
    submit.addEventListener("click", () => void this.submit());
    container.appendChild(submit);

    if (task.warnings.length > 0) {
      const warnings = el(doc, "ul", { id: "warnings", class: "warnings" });
      for (const warning of task.warnings) {
        warnings.appendChild(el(doc, "li", { class: "warning-badge" }, warning));
      }
      container.appendChild(warnings);
    }

    // The reveal control exists pre-submit but is disabled; the model
    // panel itself is only in the DOM after the judgment succeeded.
    const revealButton = el(doc, "button", { id: "reveal-btn" }, "Model output");
    revealButton.disabled = !task.canReveal();
    container.appendChild(revealButton);

    if (task.phase !== "judging" && task.modelJudgments.length > 0) {
      const panel = el(doc, "div", { id: "reveal-panel" });
      for (const judgment of task.modelJudgments) {
        const entry = el(doc, "div", { class: "model-judgment", "data-label": judgment.label_id });
        entry.appendChild(
          el(doc, "span", { class: "model-score" }, `${judgment.label_id}: ${judgment.score}`),
        );
        const details = el(doc, "details", { class: "model-rationale" });
        details.appendChild(el(doc, "summary", {}, "rationale"));
        details.appendChild(el(doc, "p", {}, judgment.rationale));
        entry.appendChild(details); // collapsed by default: reduce anchoring
        panel.appendChild(entry);
      }
      container.appendChild(panel);

      const flagNote = el(doc, "input", { id: "flag-note", placeholder: "flag note" });
      const flagButton = el(doc, "button", { id: "flag-btn" }, "Flag [f]");
      flagButton.addEventListener("click", () => {
        const note = (flagNote as HTMLInputElement).value;
        if (note.trim()) void this.flagCurrent(note);
      });
      container.appendChild(flagNote);
      container.appendChild(flagButton);

      const nextButton = el(doc, "button", { id: "next-btn" }, "Next [n]");
      nextButton.addEventListener("click", () => void this.next());
      container.appendChild(nextButton);
    }
    this.root.appendChild(container);
  }

  private renderQueue(): void {
    const doc = this.doc;
    const list = el(doc, "div", { id: "queue" });
    list.appendChild(
      el(doc, "div", { id: "queue-total" }, `${this.queue.items.length} of ${this.queue.total} awaiting adjudication`),
    );
    for (const item of this.queue.items) {
      const form = this.forms.get(item.task_id);
      if (!form) continue;
      const card = el(doc, "div", {
        class: "queue-item",
        "data-task-id": item.task_id,
        "data-submitted": String(form.submitted),
      });
      card.appendChild(el(doc, "div", { class: "queue-text" }, item.text));
      const diff = el(doc, "table", { class: "diff" });
      for (const label of item.labels) {
        const row = el(doc, "tr", {
          "data-label": label,
          "data-disagrees": String(item.disagreeing_labels.includes(label)),
        });
        row.appendChild(el(doc, "td", {}, label));
        row.appendChild(el(doc, "td", { class: "human" }, String(item.human_values?.[label] ?? "-")));
        row.appendChild(el(doc, "td", { class: "model" }, String(item.model_values[label] ?? "-")));
        diff.appendChild(row);
      }
      card.appendChild(diff);
      for (const judgment of item.model_judgments) {
        const details = el(doc, "details", { class: "model-rationale" });
        details.appendChild(el(doc, "summary", {}, `${judgment.label_id} rationale`));
        details.appendChild(el(doc, "p", {}, judgment.rationale));
        card.appendChild(details);
      }
      for (const flag of item.flags) {
        card.appendChild(el(doc, "div", { class: "flag-note" }, `${flag.annotator}: ${flag.note}`));
      }

      const retain = el(doc, "button", { class: "retain-btn" }, "Retain annotator labels");
      retain.disabled = form.submitted;
      retain.addEventListener("click", () => void this.retain(item.task_id));
      card.appendChild(retain);

      const note = el(doc, "input", { class: "override-note", placeholder: "override note (required)" });
      (note as HTMLInputElement).value = form.note;
      note.addEventListener("input", () => {
        form.note = (note as HTMLInputElement).value;
        this.render();
      });
      card.appendChild(note);
      for (const label of item.labels) {
        const flip = el(
          doc,
          "button",
          { class: "override-toggle", "data-label": label },
          `override ${label} -> ${form.overrides.get(label) === 1 ? 0 : 1}`,
        );
        flip.addEventListener("click", () => {
          const next = form.overrides.get(label) === 1 ? 0 : 1;
          form.setOverride(label, next as 0 | 1);
          this.render();
        });
        card.appendChild(flip);
      }
      const overrideSubmit = el(doc, "button", { class: "override-submit" }, "Submit override");
      overrideSubmit.disabled = form.mode !== "override" || !form.canSubmit();
      overrideSubmit.addEventListener("click", () => void this.submitOverride(item.task_id));
      card.appendChild(overrideSubmit);

      list.appendChild(card);
    }
    this.root.appendChild(list);
  }

  private renderDashboard(): void {
    const doc = this.doc;
    const data = this.dashboard;
    const panel = el(doc, "div", { id: "dashboard" });
    if (!data) {
      panel.appendChild(el(doc, "div", {}, "Loading..."));
      this.root.appendChild(panel);
      return;
    }
    const counts = el(doc, "ul", { id: "progress-counts" });
    for (const [state, count] of Object.entries(data.progress.task_states)) {
      counts.appendChild(el(doc, "li", { "data-state": state }, `${state}: ${count}`));
    }
    panel.appendChild(counts);

    const table = el(doc, "table", { id: "kappa-table" });
    const header = el(doc, "tr", {});
    header.appendChild(el(doc, "th", {}, "language"));
    for (const label of data.labels) header.appendChild(el(doc, "th", {}, label));
    table.appendChild(header);
    for (const language of [...data.languages, "all"]) {
      const row = el(doc, "tr", { "data-language": language });
      row.appendChild(el(doc, "td", {}, language === "all" ? "Total" : language));
      for (const label of data.labels) {
        const cell = data.kappa.find((c) => c.language === language && c.label === label);
        row.appendChild(
          el(
            doc,
            "td",
            { "data-label": label, "data-raw": cell && cell.value !== null ? String(cell.value) : "n/a" },
            formatKappa(cell ? cell.value : null),
          ),
        );
      }
      table.appendChild(row);
    }
    panel.appendChild(table);
    this.root.appendChild(panel);
  }
}

export function mountConsole(
  root: HTMLElement,
  client: ApiClient,
  batchId: string,
  view: ViewName = "annotate",
): ConsoleApp {
  const app = new ConsoleApp(root, client, batchId);
  app.render();
  void app.start(view);
  return app;
}
