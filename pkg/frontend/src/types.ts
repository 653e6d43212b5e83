/** Shapes returned by the session service. The UI renders these verbatim. */

export interface ActionView {
  id: number;
  indices: number[];
  values: number[];
}

export interface EpisodeMetrics {
  tracking_rms: number;
  torque_chatter: number;
  saturation_frac: number;
  vdot_violation: number;
  failed: boolean;
}

export interface HistoryPoint {
  iteration: number;
  best_id: number;
  best_mu: number;
}

export interface OrdinalEntry {
  action_id: number;
  label: 1 | 2 | 3;
}

export interface SessionView {
  iteration: number;
  budget: number;
  completed: boolean;
  dimension_names: string[];
  current_action: ActionView;
  previous_action: ActionView | null;
  believed_best: ActionView | null;
  latest_metrics: EpisodeMetrics | null;
  history: HistoryPoint[];
  ordinals: OrdinalEntry[];
}

export interface FeedbackBody {
  preference: "new" | "old" | null;
  ordinal: 1 | 2 | 3 | null;
  skip: boolean;
  iteration: number;
}
