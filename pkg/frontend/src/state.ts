/** Tri-state symptom toggles and the pure mapping from UI state to a request. */

import type { Algorithm, InferRequest } from "./api.js";

export type TriState = "present" | "absent" | "unknown";

export interface ToggleState {
  readonly states: ReadonlyMap<number, TriState>;
  readonly algorithm: Algorithm;
  readonly topK: number;
}

export function initialState(symptomIds: number[], algorithm: Algorithm = "gvamp", topK = 5): ToggleState {
  const states = new Map<number, TriState>();
  for (const id of symptomIds) states.set(id, "unknown");
  return { states, algorithm, topK };
}

export function setSymptom(state: ToggleState, id: number, tri: TriState): ToggleState {
  if (!state.states.has(id)) throw new Error(`unknown symptom id ${id}`);
  const states = new Map(state.states);
  states.set(id, tri);
  return { ...state, states };
}

/** unknown -> present -> absent -> unknown */
export function cycleSymptom(state: ToggleState, id: number): ToggleState {
  const order: TriState[] = ["unknown", "present", "absent"];
  const current = state.states.get(id);
  if (current === undefined) throw new Error(`unknown symptom id ${id}`);
  return setSymptom(state, id, order[(order.indexOf(current) + 1) % order.length]);
}

export function setAlgorithm(state: ToggleState, algorithm: Algorithm): ToggleState {
  return { ...state, algorithm };
}

export function setTopK(state: ToggleState, topK: number): ToggleState {
  return { ...state, topK };
}

/**
 * Pure function of the toggle state: unknown symptoms stay unreported and the
 * request asks the engine to treat them as missing.
 */
export function buildInferRequest(state: ToggleState): InferRequest {
  const present: number[] = [];
  const absent: number[] = [];
  for (const [id, tri] of state.states) {
    if (tri === "present") present.push(id);
    else if (tri === "absent") absent.push(id);
  }
  present.sort((a, b) => a - b);
  absent.sort((a, b) => a - b);
  return {
    present,
    absent,
    algorithm: state.algorithm,
    top_k: state.topK,
    absence_mode: "treat-missing",
  };
}
