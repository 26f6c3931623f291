/** Metrics panel rows: verbatim values from the service payload. */

import type { MetricsPayload } from "./api.js";

export interface MetricRow {
  key: string;
  label: string;
  value: number;
  text: string;
}

const LABELS: Record<string, string> = {
  goal_pos_err: "goal position (m)",
  goal_orient_err: "goal orientation (rad)",
  goal_height_err: "goal height (m)",
  collision_ratio: "collision ratio",
  foot_skate_ratio: "foot skate ratio",
  penetration_value: "penetration (m)",
  penetration_ratio: "penetration ratio",
};

/**
 * The UI never recomputes metrics: every row's `value` is the exact number
 * from the payload, and `text` is only a display formatting of it.
 */
export function metricRows(payload: MetricsPayload): MetricRow[] {
  const rows: MetricRow[] = [];
  for (const key of Object.keys(payload)) {
    const value = payload[key];
    if (typeof value !== "number") continue;
    rows.push({
      key,
      label: LABELS[key] ?? key,
      value,
      text: value.toFixed(4),
    });
  }
  return rows;
}
