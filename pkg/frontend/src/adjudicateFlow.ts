import type { ApiClient } from "./client.js";
import type { LabelValue, QueueItemPayload, QueuePage } from "./types.js";

export type AdjudicationMode = "retain" | "override";

/** Form state for one queue item. Retain is the one-click default;
 * overrides are unsubmittable until a note is provided. */
export class AdjudicationForm {
  mode: AdjudicationMode = "retain";
  note = "";
  overrides: Map<string, LabelValue>;
  submitted = false;

  constructor(readonly item: QueueItemPayload) {
    this.overrides = new Map(
      Object.entries(item.human_values ?? {}) as [string, LabelValue][],
    );
  }

  setOverride(label: string, value: LabelValue): void {
    this.mode = "override";
    this.overrides.set(label, value);
  }

  canSubmit(): boolean {
    if (this.submitted) return false;
    if (this.mode === "retain") return true;
    return this.note.trim().length > 0;
  }

  async submit(client: ApiClient): Promise<void> {
    if (!this.canSubmit()) {
      throw new Error("override adjudications require a note");
    }
    if (this.mode === "retain") {
      await client.adjudicate(this.item.task_id);
    } else {
      await client.adjudicate(this.item.task_id, Object.fromEntries(this.overrides) as Record<string, LabelValue>, this.note);
    }
    this.submitted = true;
  }
}

/** Cursor-paginated adjudication queue with human-vs-model diffs. */
export class AdjudicationQueue {
  items: QueueItemPayload[] = [];
  total = 0;
  nextCursor: string | null = null;

  constructor(
    private readonly client: ApiClient,
    readonly batchId: string,
  ) {}

  async load(cursor?: string): Promise<QueuePage> {
    const page = await this.client.adjudicationQueue(this.batchId, cursor);
    this.items = cursor ? [...this.items, ...page.items] : page.items;
    this.total = page.total;
    this.nextCursor = page.next_cursor;
    return page;
  }

  async loadAll(): Promise<void> {
    await this.load();
    while (this.nextCursor) {
      await this.load(this.nextCursor);
    }
  }

  form(taskId: string): AdjudicationForm {
    const item = this.items.find((i) => i.task_id === taskId);
    if (!item) throw new Error(`task ${taskId} is not in the queue`);
    return new AdjudicationForm(item);
  }
}
