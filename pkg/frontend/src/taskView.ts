import type { ApiClient } from "./client.js";
import type { LabelValue, ModelJudgmentPayload, TaskPayload } from "./types.js";

export type Phase = "judging" | "revealed" | "done";

/** Per-task state machine.
 *
 * The anchoring-mitigation invariant lives here: while the phase is
 * "judging" there is no model data in this object and no way to request
 * it; the reveal call only becomes reachable after the judgment POST has
 * succeeded.
 */
export class TaskView {
  phase: Phase = "judging";
  readonly toggles: Map<string, LabelValue | null>;
  warnings: string[] = [];
  modelJudgments: ModelJudgmentPayload[] = [];
  flagNotes: string[] = [];

  constructor(
    readonly task: TaskPayload,
    private readonly client: ApiClient,
  ) {
    this.toggles = new Map(task.labels.map((label) => [label, null]));
  }

  get taskId(): string {
    return this.task.task_id;
  }

  toggle(label: string): void {
    if (this.phase !== "judging") return; // judgments are immutable once submitted
    const current = this.toggles.get(label);
    this.toggles.set(label, current === 1 ? 0 : 1);
  }

  unsetLabels(): string[] {
    return [...this.toggles.entries()].filter(([, v]) => v === null).map(([l]) => l);
  }

  canSubmit(): boolean {
    return this.phase === "judging" && this.unsetLabels().length === 0;
  }

  /** True only once the human judgment is recorded server-side. */
  canReveal(): boolean {
    return this.phase === "revealed";
  }

  values(): Record<string, LabelValue> {
    const out: Record<string, LabelValue> = {};
    for (const [label, value] of this.toggles) {
      if (value === null) throw new Error(`label ${label} is unset`);
      out[label] = value;
    }
    return out;
  }

  /** Submit the judgment; only after success is the model panel loaded. */
  async submit(): Promise<void> {
    if (!this.canSubmit()) {
      throw new Error(`cannot submit: unset labels [${this.unsetLabels().join(", ")}]`);
    }
    const response = await this.client.submitJudgment(this.taskId, this.values());
    this.warnings = response.warnings;
    this.phase = "revealed";
    await this.loadModelJudgments();
  }

  async loadModelJudgments(): Promise<void> {
    if (this.phase === "judging") {
      throw new Error("model output is unreachable before the judgment is submitted");
    }
    const response = await this.client.reveal(this.taskId);
    this.modelJudgments = response.judgments;
  }

  async flag(note: string): Promise<void> {
    if (this.phase === "judging") {
      throw new Error("flagging requires a submitted judgment");
    }
    const response = await this.client.flag(this.taskId, note);
    this.flagNotes = response.task.flags.map((f) => f.note);
  }

  finish(): void {
    this.phase = "done";
  }
}

/** Sequential next-task loop for one annotator over one batch. */
export class AnnotateSession {
  current: TaskView | null = null;
  completed = 0;

  constructor(
    private readonly client: ApiClient,
    readonly batchId: string,
  ) {}

  async loadNext(): Promise<TaskView | null> {
    if (this.current && this.current.phase !== "done") {
      this.current.finish();
    }
    const response = await this.client.nextTask(this.batchId);
    if (response.task === null) {
      this.current = null;
      return null;
    }
    this.current = new TaskView(response.task, this.client);
    return this.current;
  }

  markDone(): void {
    if (this.current) {
      this.current.finish();
      this.completed += 1;
    }
  }
}
