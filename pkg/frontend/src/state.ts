/** Labeling session state, kept framework-free so it is unit-testable.
 *
 * The exported landmark document contains exactly the fields the server
 * validates ({assignments, deleted_edges, version}); nothing UI-internal
 * leaks into it, so a hand-written file and an exported one are
 * interchangeable.
 */

import type { GraphDoc, LandmarkDoc } from "./types.js";

/** Canonical picking order; fault-tolerant takeoffs may stay unassigned. */
export const CANONICAL_LABELS = [
  "M1-M2_L",
  "M1-M2_R",
  "A1-A2_L",
  "A1-A2_R",
  "ICA-MCA-ACA_L",
  "ICA-MCA-ACA_R",
  "Pcomm-ICA_L",
  "Pcomm-ICA_R",
  "ICA_Root_L",
  "ICA_Root_R",
  "P1-P2-Pcomm_L",
  "P1-P2-Pcomm_R",
  "PCA-BA",
  "BA-VA",
  "VA_Root_L",
  "VA_Root_R",
] as const;

export type CanonicalLabel = (typeof CANONICAL_LABELS)[number];

export const OPTIONAL_LABELS: ReadonlySet<string> = new Set(["Pcomm-ICA_L", "Pcomm-ICA_R"]);

export interface ViewState {
  graph: GraphDoc | null;
  assignments: Map<string, number>;
  pendingDeletes: Set<number>;
  dirty: boolean;
  banner: string | null;
}

export function createState(): ViewState {
  return { graph: null, assignments: new Map(), pendingDeletes: new Set(), dirty: false, banner: null };
}

export function loadGraph(state: ViewState, doc: GraphDoc): void {
  if (!doc || !Array.isArray(doc.nodes) || !Array.isArray(doc.traces)) {
    state.banner = "malformed graph document";
    state.graph = null;
    return;
  }
  state.graph = doc;
  state.assignments.clear();
  state.pendingDeletes.clear();
  state.dirty = false;
  state.banner = null;
}

export function loadLandmarks(state: ViewState, doc: LandmarkDoc): void {
  state.assignments = new Map(Object.entries(doc.assignments ?? {}));
  state.pendingDeletes = new Set(doc.deleted_edges ?? []);
  state.dirty = false;
}

export function nodeExists(state: ViewState, nodeId: number): boolean {
  return !!state.graph && state.graph.nodes.some((n) => n.id === nodeId);
}

/** Assign a label; the previous holder of the label and any label on the
 * target node are both cleared (one node per label, one label per node). */
export function assignLabel(state: ViewState, nodeId: number, label: string): void {
  if (!(CANONICAL_LABELS as readonly string[]).includes(label)) {
    state.banner = `unknown label '${label}'; canonical labels: ${CANONICAL_LABELS.join(", ")}`;
    return;
  }
  if (!nodeExists(state, nodeId)) {
    state.banner = `node ${nodeId} does not exist`;
    return;
  }
  for (const [other, nid] of state.assignments) {
    if (nid === nodeId && other !== label) state.assignments.delete(other);
  }
  state.assignments.set(label, nodeId);
  state.dirty = true;
  state.banner = null;
}

export function clearLabel(state: ViewState, label: string): void {
  if (state.assignments.delete(label)) state.dirty = true;
}

export function missingMandatory(state: ViewState): string[] {
  return CANONICAL_LABELS.filter((l) => !OPTIONAL_LABELS.has(l) && !state.assignments.has(l));
}

export function checklist(state: ViewState): { label: string; nodeId: number | null; optional: boolean }[] {
  return CANONICAL_LABELS.map((label) => ({
    label,
    nodeId: state.assignments.get(label) ?? null,
    optional: OPTIONAL_LABELS.has(label),
  }));
}

/** Next unassigned label in the guided wizard order (free-click still works). */
export function nextWizardLabel(state: ViewState): string | null {
  for (const label of CANONICAL_LABELS) {
    if (!state.assignments.has(label)) return label;
  }
  return null;
}

/** Queue a trace deletion; ghosted in the scene, undoable until submit. */
export function queueDelete(state: ViewState, traceId: number): void {
  if (!state.graph || !state.graph.traces.some((t) => t.id === traceId)) {
    state.banner = `trace ${traceId} does not exist`;
    return;
  }
  if (!state.pendingDeletes.has(traceId)) {
    state.pendingDeletes.add(traceId); // double-delete is idempotent
    state.dirty = true;
  }
}

export function undoDelete(state: ViewState, traceId: number): void {
  if (state.pendingDeletes.delete(traceId)) state.dirty = true;
}

/** Warn when an assignment references a node orphaned by queued deletions. */
export function orphanedAssignments(state: ViewState): string[] {
  if (!state.graph) return [];
  const alive = new Set<number>();
  for (const t of state.graph.traces) {
    if (state.pendingDeletes.has(t.id)) continue;
    alive.add(t.start);
    alive.add(t.end);
  }
  const out: string[] = [];
  for (const [label, nid] of state.assignments) {
    if (!alive.has(nid)) out.push(label);
  }
  return out.sort();
}

/** The exact document sent to PUT /v1/labels — nothing else leaks. */
export function exportLandmarks(state: ViewState): LandmarkDoc {
  const assignments: Record<string, number> = {};
  for (const label of CANONICAL_LABELS) {
    const nid = state.assignments.get(label);
    if (nid !== undefined) assignments[label] = nid;
  }
  return {
    assignments,
    deleted_edges: [...state.pendingDeletes].sort((a, b) => a - b),
    version: 1,
  };
}

/** Map a server rejection onto the banner; the caller re-renders. */
export function applyServerError(state: ViewState, status: number, body: { detail?: string; missing?: string[] }): void {
  if (status === 409 && body.missing) {
    state.banner = `cannot finalize: missing mandatory landmarks: ${body.missing.join(", ")}`;
  } else if (status === 422) {
    state.banner = `rejected: ${body.detail ?? "invalid payload"}`;
  } else {
    state.banner = `server error ${status}: ${body.detail ?? ""}`;
  }
}

export function markSubmitted(state: ViewState): void {
  state.dirty = false;
  state.banner = null;
}
