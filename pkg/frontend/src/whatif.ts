/** What-if mitigation panel: request validation, response folding, and the
 * row model the table renders from.  The panel round-trips through
 * POST /api/whatif; a server or schema error is surfaced inline and leaves
 * the rest of the console state untouched. */
import { ConsoleState, Thresholds, WhatIfResult } from "./types.js";

export function validateTotalMw(input: string | number): number | null {
  const mw = typeof input === "number" ? input : Number(input.trim() || NaN);
  if (!Number.isFinite(mw) || mw < 0) return null;
  return mw;
}

function isResult(x: unknown): x is WhatIfResult {
  if (typeof x !== "object" || x === null) return false;
  const r = x as Record<string, unknown>;
  const nums = ["total_mw", "predicted_delta_deg", "theta_before_deg",
                "theta_after_deg"];
  if (!nums.every((k) => typeof r[k] === "number" && Number.isFinite(r[k] as number)))
    return false;
  if (!Array.isArray(r.shed_mw)) return false;
  return r.shed_mw.every(
    (row) =>
      typeof row === "object" && row !== null &&
      typeof (row as Record<string, unknown>).bus === "string" &&
      typeof (row as Record<string, unknown>).mw === "number",
  );
}

export function setWhatIfInput(state: ConsoleState, totalMw: number): ConsoleState {
  return { ...state, whatif: { ...state.whatif, total_mw: totalMw } };
}

export function applyWhatIfResult(state: ConsoleState, raw: unknown): ConsoleState {
  if (!isResult(raw)) {
    return {
      ...state,
      whatif: { ...state.whatif, error: "malformed what-if response" },
    };
  }
  return { ...state, whatif: { ...state.whatif, result: raw, error: null } };
}

export function applyWhatIfError(state: ConsoleState, message: string): ConsoleState {
  return { ...state, whatif: { ...state.whatif, error: message } };
}

export interface WhatIfRow {
  bus: string;
  mw: string; // one decimal, the resolution operators dispatch in
}

export interface WhatIfView {
  rows: WhatIfRow[];
  total_mw: string;
  theta_before: string;
  theta_after: string;
  predicted_delta: string;
  /** Styling hook: how theta_after stands against the working thresholds. */
  verdict: "clears emergency" | "clears warning" | "still above emergency" | "within limits";
}

export function renderWhatIf(result: WhatIfResult, thresholds: Thresholds): WhatIfView {
  const after = result.theta_after_deg;
  const before = result.theta_before_deg;
  let verdict: WhatIfView["verdict"];
  if (after > thresholds.emergency_ope) {
    verdict = "still above emergency";
  } else if (before > thresholds.emergency_ope) {
    verdict = "clears emergency";
  } else if (before > thresholds.warning_ope && after <= thresholds.warning_ope) {
    verdict = "clears warning";
  } else {
    verdict = "within limits";
  }
  return {
    rows: result.shed_mw.map((r) => ({ bus: r.bus, mw: r.mw.toFixed(1) })),
    total_mw: result.shed_mw.reduce((acc, r) => acc + r.mw, 0).toFixed(1),
    theta_before: before.toFixed(2),
    theta_after: after.toFixed(2),
    predicted_delta: result.predicted_delta_deg.toFixed(2),
    verdict,
  };
}
