import { Decision, MapData } from "./types.js";

export type Phase =
  | "idle"
  | "capturing"
  | "awaiting_response"
  | "localized"
  | "rejected"
  | "error";

export interface ViewState {
  phase: Phase;
  /** Last accepted region; sent as prev_region on the next request.
   *  Only an accepted decision may change it. */
  lastRegion: string | null;
  mapData: MapData | null;
  decision: Decision | null;
  errorMessage: string | null;
}

export type UiEvent =
  | { type: "MAP_LOADED"; map: MapData }
  | { type: "CAPTURE_STARTED" }
  | { type: "CAPTURE_CANCELLED" }
  | { type: "PHOTO_SUBMITTED" }
  | { type: "DECISION_RECEIVED"; decision: Decision }
  | { type: "REQUEST_FAILED"; message: string }
  | { type: "DISMISSED" };

export function initialState(): ViewState {
  return {
    phase: "idle",
    lastRegion: null,
    mapData: null,
    decision: null,
    errorMessage: null,
  };
}

/** At most one in-flight request: submission is only legal outside
 *  awaiting_response. */
export function canSubmit(state: ViewState): boolean {
  return state.phase !== "awaiting_response";
}

export function reduce(state: ViewState, event: UiEvent): ViewState {
  switch (event.type) {
    case "MAP_LOADED":
      return { ...state, mapData: event.map };
    case "CAPTURE_STARTED":
      return canSubmit(state) ? { ...state, phase: "capturing" } : state;
    case "CAPTURE_CANCELLED":
      return state.phase === "capturing" ? { ...state, phase: "idle" } : state;
    case "PHOTO_SUBMITTED":
      if (!canSubmit(state)) return state;
      return { ...state, phase: "awaiting_response", errorMessage: null };
    case "DECISION_RECEIVED": {
      const d = event.decision;
      if (d.status === "accepted") {
        return {
          ...state,
          phase: "localized",
          decision: d,
          // the one and only place lastRegion may change
          lastRegion: d.region_id ?? state.lastRegion,
        };
      }
      return { ...state, phase: "rejected", decision: d };
    }
    case "REQUEST_FAILED":
      return { ...state, phase: "error", errorMessage: event.message };
    case "DISMISSED":
      return { ...state, phase: "idle", errorMessage: null };
  }
}
