export type LabelValue = 0 | 1;

export interface TaskPayload {
  task_id: string;
  batch_id: string;
  instance_id: string;
  text: string;
  language: string;
  labels: string[];
  state: string;
  human_values: Record<string, LabelValue> | null;
  warnings: string[];
  flags: { annotator: string; note: string; timestamp: string }[];
  revealed: boolean;
  audited: boolean;
  adjudication: {
    adjudicator: string;
    decision: Record<string, LabelValue> | null;
    note: string;
    timestamp: string;
  } | null;
  final_values: Record<string, LabelValue> | null;
}

export interface ModelJudgmentPayload {
  label_id: string;
  score: LabelValue;
  rationale: string;
  model_id: string;
  prompt_version: string;
}

export interface QueueItemPayload extends TaskPayload {
  model_values: Record<string, LabelValue>;
  model_judgments: ModelJudgmentPayload[];
  disagreeing_labels: string[];
}

export interface QueuePage {
  items: QueueItemPayload[];
  next_cursor: string | null;
  total: number;
}

export interface BatchSummary {
  batch_id: string;
  labels: string[];
  state: string;
  task_count: number;
  pending: number;
}

export interface ProgressPayload {
  batch_id: string;
  state: string;
  task_states: Record<string, number>;
  positive_counts: Record<string, number>;
  queue_size: number;
}

export interface ReportRow {
  language: string;
  label: string;
  metric: string;
  value: number | null;
  defined: boolean;
}

export interface ReportPayload {
  metadata: Record<string, string>;
  rows: ReportRow[];
}

export interface ErrorEnvelope {
  code: string;
  message: string;
  detail: unknown;
}
