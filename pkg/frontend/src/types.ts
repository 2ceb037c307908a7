/** Wire shapes served by the monitor gateway, mirrored field for field
 * (snake_case keys, angles in degrees, timestamps in microseconds). */

export const STATUSES = ["NORMAL", "WARNING", "EMERGENCY", "DATA_UNAVAILABLE"] as const;
export type Status = (typeof STATUSES)[number];

export interface Thresholds {
  warning_model: number;
  emergency_model: number;
  delta_com: number;
  warning_ope: number;
  emergency_ope: number;
}

export interface BoundaryEntry {
  angle_deg: number;
  source: string;
}

export interface Transition {
  from: Status;
  to: Status;
}

/** One message off /api/stream: the initial snapshot or a live tick. */
export interface StreamMessage {
  type: "snapshot" | "tick";
  timestamp_us: number;
  area_angle_deg: number | null;
  status: Status;
  transitions: Transition[];
  thresholds: Thresholds;
  boundary: Record<string, BoundaryEntry>;
}

/** Response body of POST /api/whatif. */
export interface WhatIfResult {
  total_mw: number;
  shed_mw: { bus: string; mw: number }[];
  predicted_delta_deg: number;
  theta_before_deg: number;
  theta_after_deg: number;
}

export interface TracePoint {
  t_us: number;
  angle_deg: number;
}

export interface AlarmEntry {
  at_us: number;
  from: Status;
  to: Status;
  ack: boolean;
}

export interface WhatIfPanel {
  total_mw: number;
  result: WhatIfResult | null;
  error: string | null;
}

export interface ConsoleState {
  connection: "CONNECTED" | "RECONNECTING";
  /** Bounded ring of recent angle samples; timestamps strictly monotone. */
  trace: TracePoint[];
  trace_window_us: number;
  status: Status | null;
  thresholds: Thresholds | null;
  boundary: Record<string, BoundaryEntry>;
  /** Append-only; acknowledgment flips ack in place, never removes. */
  alarm_log: AlarmEntry[];
  malformed: number;
  whatif: WhatIfPanel;
}
