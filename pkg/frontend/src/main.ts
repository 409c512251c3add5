import { ApiError, ReviewApi } from "./api.js";
import { actionForKey, shortcutHelp } from "./shortcuts.js";
import {
  QueueState,
  clearToast,
  current,
  initialState,
  labelColor,
  loadFailed,
  progressText,
  queueLoaded,
  skip,
  verdictFailed,
  verdictRecorded,
} from "./state.js";
import type { Decision, ReviewStatus } from "./types.js";
import { ClusterViewer } from "./viewer.js";

const api = new ReviewApi("");
let state: QueueState = initialState("pending");
let viewer: ClusterViewer | null = null;

const el = (id: string) => document.getElementById(id) as HTMLElement;

function setHidden(id: string, hidden: boolean): void {
  el(id).classList.toggle("hidden", hidden);
}

async function loadQueue(): Promise<void> {
  state = { ...state, phase: "loading" };
  render();
  try {
    const { items, stats } = await api.fetchQueue(state.filter);
    state = queueLoaded(state, items, stats);
  } catch (err) {
    state = loadFailed(state, `cannot reach the review service: ${(err as Error).message}`);
  }
  render();
  await showCurrent();
}

async function showCurrent(): Promise<void> {
  const item = current(state);
  if (!item || !viewer) return;
  try {
    const record = await api.getCluster(item.cluster_id);
    const drawn = viewer.showCluster(record.points, record.label);
    el("point-count").textContent =
      drawn < record.points.length
        ? `${record.num_points} pts (showing ${drawn})`
        : `${record.num_points} pts`;
    const box = record.source_box;
    el("box-info").textContent = box
      ? `box ${box.class} [${box.x_min.toFixed(0)}, ${box.y_min.toFixed(0)}] – [${box.x_max.toFixed(0)}, ${box.y_max.toFixed(0)}]`
      : "";
  } catch (err) {
    state = verdictFailed(state, item.cluster_id, "rejected", "");
    state = { ...state, retry: null, toast: `cannot load cluster: ${(err as Error).message}` };
    render();
  }
}

async function submit(decision: Decision): Promise<void> {
  const item = current(state);
  if (!item) return;
  try {
    const counts = await api.postVerdict(item.cluster_id, decision, "reviewer");
    state = verdictRecorded(state, item.cluster_id, decision, counts);
    // Reconcile the optimistic counters against the service.
    try {
      const stats = await api.stats();
      state = { ...state, stats };
    } catch {
      // POST response counts remain authoritative enough
    }
  } catch (err) {
    const message =
      err instanceof ApiError && err.status !== null
        ? `verdict rejected (${err.status}): ${err.message}`
        : `verdict not delivered: ${(err as Error).message}`;
    state = verdictFailed(state, item.cluster_id, decision, message);
  }
  render();
  await showCurrent();
}

async function retryFailedVerdict(): Promise<void> {
  const retry = state.retry;
  if (!retry) return;
  state = clearToast(state);
  const item = current(state);
  if (item && item.cluster_id === retry.clusterId) {
    await submit(retry.decision);
  }
}

function render(): void {
  setHidden("banner", state.banner === null);
  if (state.banner) el("banner-text").textContent = state.banner;
  setHidden("toast", state.toast === null);
  if (state.toast) el("toast-text").textContent = state.toast;

  el("progress").textContent = progressText(state.stats);
  setHidden("screen-loading", state.phase !== "loading");
  setHidden("screen-empty", state.phase !== "empty");
  setHidden("screen-done", state.phase !== "done");
  setHidden("screen-review", state.phase !== "ready");

  const item = current(state);
  if (item) {
    el("cluster-id").textContent = item.cluster_id;
    el("cluster-meta").textContent = `${item.scene_id} / ${item.frame_id} · ${item.source}`;
    const badge = el("label-badge");
    badge.textContent = item.label;
    badge.style.backgroundColor = labelColor(item.label);
    el("queue-pos").textContent = `${state.position + 1} / ${state.items.length}`;
  }
}

function bind(): void {
  viewer = new ClusterViewer(document.getElementById("view") as HTMLCanvasElement);
  el("btn-accept").addEventListener("click", () => void submit("accepted"));
  el("btn-reject").addEventListener("click", () => void submit("rejected"));
  el("btn-skip").addEventListener("click", () => {
    state = skip(state);
    render();
    void showCurrent();
  });
  el("btn-retry-load").addEventListener("click", () => void loadQueue());
  el("btn-retry-verdict").addEventListener("click", () => void retryFailedVerdict());
  (el("filter") as HTMLSelectElement).addEventListener("change", (ev) => {
    const value = (ev.target as HTMLSelectElement).value;
    state = initialState(value === "all" ? null : (value as ReviewStatus));
    void loadQueue();
  });
  el("shortcut-help").textContent = shortcutHelp();
  document.addEventListener("keydown", (ev) => {
    if (ev.target instanceof HTMLInputElement || ev.target instanceof HTMLSelectElement) return;
    const action = actionForKey(ev.key);
    if (!action) return;
    ev.preventDefault();
    if (action === "accept") void submit("accepted");
    else if (action === "reject") void submit("rejected");
    else if (action === "retry") void retryFailedVerdict();
    else {
      state = skip(state);
      render();
      void showCurrent();
    }
  });
}

bind();
void loadQueue();
