/** Pure state core of the operator console.
 *
 * Every network callback funnels into these reducers; none of them mutate
 * their inputs, so replaying a recorded event log always reproduces the same
 * ConsoleState.  Malformed stream events never throw — they are dropped and
 * counted so a flaky gateway shows up as a number, not a blank screen.
 */
import {
  AlarmEntry,
  BoundaryEntry,
  ConsoleState,
  Status,
  STATUSES,
  StreamMessage,
  Thresholds,
  Transition,
} from "./types.js";

const TEN_MINUTES_US = 600 * 1_000_000;

export function initialState(traceWindowUs: number = TEN_MINUTES_US): ConsoleState {
  return {
    connection: "RECONNECTING",
    trace: [],
    trace_window_us: traceWindowUs,
    status: null,
    thresholds: null,
    boundary: {},
    alarm_log: [],
    malformed: 0,
    whatif: { total_mw: 0, result: null, error: null },
  };
}

function isStatus(x: unknown): x is Status {
  return typeof x === "string" && (STATUSES as readonly string[]).includes(x);
}

function isFiniteNumber(x: unknown): x is number {
  return typeof x === "number" && Number.isFinite(x);
}

function isThresholds(x: unknown): x is Thresholds {
  if (typeof x !== "object" || x === null) return false;
  const t = x as Record<string, unknown>;
  return ["warning_model", "emergency_model", "delta_com", "warning_ope",
          "emergency_ope"].every((k) => isFiniteNumber(t[k]));
}

function isTransition(x: unknown): x is Transition {
  if (typeof x !== "object" || x === null) return false;
  const t = x as Record<string, unknown>;
  return isStatus(t.from) && isStatus(t.to);
}

function isBoundary(x: unknown): x is Record<string, BoundaryEntry> {
  if (typeof x !== "object" || x === null) return false;
  return Object.values(x).every(
    (v) =>
      typeof v === "object" && v !== null &&
      isFiniteNumber((v as Record<string, unknown>).angle_deg) &&
      typeof (v as Record<string, unknown>).source === "string",
  );
}

export function parseStreamMessage(raw: unknown): StreamMessage | null {
  if (typeof raw !== "object" || raw === null) return null;
  const m = raw as Record<string, unknown>;
  if (m.type !== "snapshot" && m.type !== "tick") return null;
  if (!isFiniteNumber(m.timestamp_us)) return null;
  if (m.area_angle_deg !== null && !isFiniteNumber(m.area_angle_deg)) return null;
  if (!isStatus(m.status)) return null;
  if (!Array.isArray(m.transitions) || !m.transitions.every(isTransition)) return null;
  if (!isThresholds(m.thresholds)) return null;
  if (!isBoundary(m.boundary)) return null;
  return m as unknown as StreamMessage;
}

/** Fold one raw /api/stream payload into the state. */
export function applyStreamEvent(state: ConsoleState, raw: unknown): ConsoleState {
  const msg = parseStreamMessage(raw);
  if (msg === null) {
    return { ...state, malformed: state.malformed + 1 };
  }

  // trace: strictly monotone timestamps, bounded look-back window
  let trace = state.trace;
  const last = trace.length > 0 ? trace[trace.length - 1]!.t_us : -Infinity;
  if (msg.area_angle_deg !== null && msg.timestamp_us > last) {
    const cutoff = msg.timestamp_us - state.trace_window_us;
    trace = trace.filter((p) => p.t_us > cutoff);
    trace = [...trace, { t_us: msg.timestamp_us, angle_deg: msg.area_angle_deg }];
  }

  // alarm log: server-reported transitions, else synthesize one when the
  // status jumped across a gap (missed frames during a reconnect)
  let transitions = msg.transitions;
  if (transitions.length === 0 && state.status !== null && state.status !== msg.status) {
    transitions = [{ from: state.status, to: msg.status }];
  }
  const alarm_log: AlarmEntry[] =
    transitions.length === 0
      ? state.alarm_log
      : [
          ...state.alarm_log,
          ...transitions.map((t) => ({
            at_us: msg.timestamp_us,
            from: t.from,
            to: t.to,
            ack: false,
          })),
        ];

  return {
    ...state,
    trace,
    status: msg.status,
    thresholds: msg.thresholds,
    boundary: msg.boundary,
    alarm_log,
  };
}

/** Acknowledge one alarm entry; local-only, never talks to the server. */
export function ackAlarm(state: ConsoleState, index: number): ConsoleState {
  const entry = state.alarm_log[index];
  if (entry === undefined || entry.ack) return state;
  const alarm_log = state.alarm_log.map((e, i) =>
    i === index ? { ...e, ack: true } : e,
  );
  return { ...state, alarm_log };
}

export function connectionChanged(state: ConsoleState, up: boolean): ConsoleState {
  const connection = up ? "CONNECTED" : "RECONNECTING";
  if (state.connection === connection) return state;
  return { ...state, connection };
}

/** Replayable action wrapper: lets a recorded session (stream payloads,
 * connection flaps, operator acks) be folded back deterministically. */
export type ConsoleAction =
  | { kind: "stream"; payload: unknown }
  | { kind: "connection"; up: boolean }
  | { kind: "ack"; index: number };

export function applyAction(state: ConsoleState, action: ConsoleAction): ConsoleState {
  switch (action.kind) {
    case "stream":
      return applyStreamEvent(state, action.payload);
    case "connection":
      return connectionChanged(state, action.up);
    case "ack":
      return ackAlarm(state, action.index);
  }
}

export function replay(actions: readonly ConsoleAction[], traceWindowUs?: number): ConsoleState {
  return actions.reduce(applyAction, initialState(traceWindowUs));
}
