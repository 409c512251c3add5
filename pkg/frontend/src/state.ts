import type { ClusterSummary, Decision, ReviewStatus, Stats } from "./types.js";

export type Phase = "loading" | "ready" | "empty" | "done" | "error";

export interface RetryInfo {
  clusterId: string;
  decision: Decision;
  message: string;
}

/**
 * Pure state for the review queue. The UI renders from this and every
 * transition below returns a fresh state, so the flow is unit-testable
 * without a DOM. Counters always come from the service (the POST response or
 * a stats refetch); the reducer never invents counts.
 */
export interface QueueState {
  phase: Phase;
  filter: ReviewStatus | null; // null = all
  items: ClusterSummary[];
  position: number; // within items bounds whenever phase is "ready"
  stats: Stats | null;
  banner: string | null; // connection-level failure, with retry affordance
  toast: string | null; // per-action failure
  retry: RetryInfo | null; // last failed verdict, kept so it is not lost
}

export function initialState(filter: ReviewStatus | null = "pending"): QueueState {
  return {
    phase: "loading",
    filter,
    items: [],
    position: 0,
    stats: null,
    banner: null,
    toast: null,
    retry: null,
  };
}

function phaseFor(items: ClusterSummary[], stats: Stats | null): Phase {
  if (items.length > 0) return "ready";
  if (!stats || stats.total === 0) return "empty";
  return "done"; // nothing left under this filter but the manifest has clusters
}

export function queueLoaded(state: QueueState, items: ClusterSummary[], stats: Stats): QueueState {
  return {
    ...state,
    phase: phaseFor(items, stats),
    items,
    position: 0,
    stats,
    banner: null,
    toast: null,
  };
}

export function loadFailed(state: QueueState, message: string): QueueState {
  return { ...state, phase: "error", banner: message };
}

export function current(state: QueueState): ClusterSummary | null {
  if (state.phase !== "ready") return null;
  return state.items[state.position] ?? null;
}

/** Move to the next cluster, wrapping; position stays in bounds. */
export function skip(state: QueueState): QueueState {
  if (state.phase !== "ready" || state.items.length === 0) return state;
  return { ...state, position: (state.position + 1) % state.items.length, toast: null };
}

/**
 * A verdict the service confirmed. Counters adopt the service's response.
 * Under the pending filter the cluster leaves the queue and the position
 * lands on the next pending cluster; when none remain the run is done.
 */
export function verdictRecorded(
  state: QueueState,
  clusterId: string,
  decision: Decision,
  counts: Stats,
): QueueState {
  const updated = state.items.map((item) =>
    item.cluster_id === clusterId ? { ...item, review: decision } : item,
  );
  let items = updated;
  let position = state.position;
  if (state.filter === "pending") {
    items = updated.filter((item) => item.cluster_id !== clusterId);
    if (position >= items.length) position = 0;
  } else {
    position = items.length ? (position + 1) % items.length : 0;
  }
  return {
    ...state,
    phase: phaseFor(items, counts),
    items,
    position,
    stats: counts,
    toast: null,
    retry: null,
  };
}

/** A verdict the service rejected or never received; kept for retry. */
export function verdictFailed(
  state: QueueState,
  clusterId: string,
  decision: Decision,
  message: string,
): QueueState {
  return {
    ...state,
    toast: message,
    retry: { clusterId, decision, message },
  };
}

export function clearToast(state: QueueState): QueueState {
  return { ...state, toast: null, retry: null };
}

/** Color code for the label badge: warm for pedestrians, green for the rest. */
export function labelColor(label: string): string {
  return label === "pedestrian" ? "#e05252" : "#3fa660";
}

export function progressText(stats: Stats | null): string {
  if (!stats) return "";
  return `${stats.pending} pending / ${stats.accepted} accepted / ${stats.rejected} rejected of ${stats.total}`;
}
