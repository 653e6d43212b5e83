import type { HistoryPoint, OrdinalEntry, SessionView } from "./types.js";

/** Dimensions whose grid index differs between the two actions. */
export function changedDimensions(
  current: number[],
  previous: number[],
): number[] {
  const changed: number[] = [];
  for (let i = 0; i < current.length; i++) {
    if (current[i] !== previous[i]) changed.push(i);
  }
  return changed;
}

export const ORDINAL_LABELS: Record<1 | 2 | 3, string> = {
  1: "very bad",
  2: "neutral",
  3: "very good",
};

/** Marker legend for the history chart; "none" covers iterations without an
 * ordinal label. */
export const ORDINAL_COLORS: Record<1 | 2 | 3 | 0, string> = {
  1: "#d62728", // very bad
  2: "#7f7f7f", // neutral
  3: "#2ca02c", // very good
  0: "#c7c7c7", // none
};

export function formatValue(v: number): string {
  if (v === 0) return "0";
  const abs = Math.abs(v);
  if (abs >= 1000 || abs < 0.01) return v.toExponential(2);
  return v.toPrecision(4);
}

export interface ChartPoint {
  x: number;
  y: number;
  iteration: number;
  mu: number;
  color: string;
}

export interface ChartLayout {
  width: number;
  height: number;
  points: ChartPoint[];
  polyline: string;
}

/** Lay out the believed-best-utility series for an SVG line chart.
 *
 * Marker i takes the color of the i-th ordinal label (feedback arrives once
 * per iteration, in order); iterations without one use the "none" color.
 */
export function historyChartLayout(
  history: HistoryPoint[],
  ordinals: OrdinalEntry[],
  width = 560,
  height = 160,
  pad = 10,
): ChartLayout {
  const mus = history.map((h) => h.best_mu);
  const lo = Math.min(...mus);
  const hi = Math.max(...mus);
  const span = hi - lo || 1;
  const xStep =
    history.length > 1 ? (width - 2 * pad) / (history.length - 1) : 0;
  const points = history.map((h, i) => {
    const label = ordinals[i]?.label ?? 0;
    return {
      x: pad + i * xStep,
      y: height - pad - ((h.best_mu - lo) / span) * (height - 2 * pad),
      iteration: h.iteration,
      mu: h.best_mu,
      color: ORDINAL_COLORS[label],
    };
  });
  const polyline = points.map((p) => `${p.x},${p.y}`).join(" ");
  return { width, height, points, polyline };
}

/** True when the preference buttons must be greyed out: there is nothing to
 * compare against on the very first action, and nothing at all once the
 * budget is spent. */
export function preferencesDisabled(view: SessionView): boolean {
  return view.completed || view.previous_action === null;
}
