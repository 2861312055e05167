import type { ApiClient } from "./client.js";
import type { ProgressPayload, ReportRow } from "./types.js";

export interface KappaCell {
  language: string;
  label: string;
  value: number | null;
}

export interface DashboardData {
  progress: ProgressPayload;
  kappa: KappaCell[];
  labels: string[];
  languages: string[];
}

/** Format agreement values the same way the CLI table does: two decimals,
 * half-up (away from zero), "n/a" when undefined. */
export function formatKappa(value: number | null): string {
  if (value === null) return "n/a";
  const sign = value < 0 ? -1 : 1;
  const rounded = (sign * Math.round(Math.abs(value) * 100)) / 100;
  return rounded.toFixed(2);
}

export async function loadDashboard(client: ApiClient, batchId: string): Promise<DashboardData> {
  const progress = await client.progress(batchId);
  const report = await client.kappaReport(batchId);
  const kappaRows = report.rows.filter((r: ReportRow) => r.metric === "kappa");
  const labels: string[] = [];
  const languages: string[] = [];
  for (const row of kappaRows) {
    if (!labels.includes(row.label)) labels.push(row.label);
    if (row.language !== "all" && !languages.includes(row.language)) {
      languages.push(row.language);
    }
  }
  return {
    progress,
    kappa: kappaRows.map((r) => ({ language: r.language, label: r.label, value: r.value })),
    labels,
    languages,
  };
}

export function pooledKappa(data: DashboardData, label: string): number | null {
  const cell = data.kappa.find((c) => c.language === "all" && c.label === label);
  return cell ? cell.value : null;
}
