/** Browser entry point: loads the graph and guide, renders the scene, and
 * wires the labeling sidebar (wizard order, free-click override), edge
 * deletion with undo, submit and finalize. */

import * as THREE from "three";
import { ApiError, Client } from "./api.js";
import {
  assignLabel,
  checklist,
  clearLabel,
  createState,
  exportLandmarks,
  loadGraph,
  loadLandmarks,
  markSubmitted,
  missingMandatory,
  nextWizardLabel,
  orphanedAssignments,
  queueDelete,
  undoDelete,
  applyServerError,
} from "./state.js";
import { addMipPlanes, buildScene, setMipOpacity, setMipVisible, startLoop, syncSceneWithState } from "./render.js";
import type { FinalizeResponse } from "./types.js";

const client = new Client("");
const state = createState();

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderBanner(): void {
  const banner = el<HTMLDivElement>("banner");
  const orphans = orphanedAssignments(state);
  const warn = orphans.length ? ` (warning: assignments on deletion-orphaned nodes: ${orphans.join(", ")})` : "";
  banner.textContent = (state.banner ?? "") + warn;
  banner.style.display = state.banner || warn ? "block" : "none";
}

function renderChecklist(): void {
  const list = el<HTMLUListElement>("checklist");
  list.innerHTML = "";
  const wizard = nextWizardLabel(state);
  for (const item of checklist(state)) {
    const li = document.createElement("li");
    li.className = item.nodeId !== null ? "done" : item.label === wizard ? "next" : "";
    const tag = item.optional ? " (optional)" : "";
    li.textContent = `${item.label}${tag}: ${item.nodeId !== null ? `node ${item.nodeId}` : "—"}`;
    li.onclick = () => {
      if (item.nodeId !== null) {
        clearLabel(state, item.label);
        refresh();
      } else {
        pendingLabel = item.label;
        renderStatus(`click a node to assign ${item.label}`);
      }
    };
    list.appendChild(li);
  }
  const missing = missingMandatory(state);
  el<HTMLButtonElement>("finalize").disabled = missing.length > 0 || state.dirty;
  el<HTMLSpanElement>("unsaved").style.display = state.dirty ? "inline" : "none";
}

function renderStatus(text: string): void {
  el<HTMLSpanElement>("status").textContent = text;
}

let pendingLabel: string | null = null;
let handles: ReturnType<typeof buildScene> | null = null;

function refresh(): void {
  renderChecklist();
  renderBanner();
  if (handles) syncSceneWithState(handles, state);
}

function showReport(report: FinalizeResponse): void {
  const table = el<HTMLTableElement>("report");
  table.innerHTML = "";
  if (!report.rows.length) return;
  const cols = Object.keys(report.rows[0]);
  const head = table.insertRow();
  for (const c of cols) {
    const th = document.createElement("th");
    th.textContent = c;
    head.appendChild(th);
  }
  for (const row of report.rows) {
    const tr = table.insertRow();
    for (const c of cols) {
      const v = row[c];
      tr.insertCell().textContent = v === null ? "" : typeof v === "number" ? v.toPrecision(5) : String(v);
    }
  }
  el<HTMLDivElement>("report-wrap").style.display = "block";
}

async function submit(): Promise<void> {
  try {
    const doc = exportLandmarks(state);
    await client.putLabels(doc);
    markSubmitted(state);
    renderStatus("labels saved");
  } catch (err) {
    if (err instanceof ApiError) applyServerError(state, err.status, err.body);
    else state.banner = `submit failed: ${err}`;
  }
  refresh();
}

async function finalize(): Promise<void> {
  try {
    const report = await client.finalize();
    renderStatus(`feature report written to ${report.features_csv}`);
    showReport(report);
  } catch (err) {
    if (err instanceof ApiError) applyServerError(state, err.status, err.body);
    else state.banner = `finalize failed: ${err}`;
  }
  refresh();
}

async function boot(): Promise<void> {
  const graph = await client.getGraph();
  loadGraph(state, graph);
  if (state.banner) {
    refresh();
    return; // malformed graph: banner only, no partial render
  }
  try {
    loadLandmarks(state, await client.getLabels());
  } catch {
    // no stored labels yet
  }
  const container = el<HTMLDivElement>("scene");
  handles = buildScene(container, graph, state);
  try {
    const guide = await client.getGuide();
    addMipPlanes(handles, guide, graph.spacing);
    for (const axis of ["x", "y", "z"] as const) {
      const box = el<HTMLInputElement>(`mip-${axis}`);
      box.onchange = () => handles && setMipVisible(handles, axis, box.checked);
    }
    el<HTMLInputElement>("mip-opacity").oninput = (ev) => {
      if (handles) setMipOpacity(handles, Number((ev.target as HTMLInputElement).value) / 100);
    };
  } catch {
    renderStatus("no guide artifact; rendering graph only");
  }

  const ray = new THREE.Raycaster();
  const mouse = new THREE.Vector2();
  handles.renderer.domElement.addEventListener("click", (ev) => {
    if (!handles) return;
    const rect = handles.renderer.domElement.getBoundingClientRect();
    mouse.x = ((ev.clientX - rect.left) / rect.width) * 2 - 1;
    mouse.y = -((ev.clientY - rect.top) / rect.height) * 2 + 1;
    ray.setFromCamera(mouse, handles.camera);
    const hits = ray.intersectObjects(handles.pickables, false);
    if (!hits.length) return;
    const nodeId = hits[0].object.userData.nodeId as number;
    const label = pendingLabel ?? nextWizardLabel(state);
    if (label === null) {
      renderStatus("all labels assigned; click a checklist row to reassign");
      return;
    }
    assignLabel(state, nodeId, label);
    pendingLabel = null;
    renderStatus(`${label} -> node ${nodeId}`);
    refresh();
  });

  el<HTMLButtonElement>("delete-edge").onclick = () => {
    const id = Number(el<HTMLInputElement>("edge-id").value);
    if (Number.isFinite(id)) queueDelete(state, id);
    refresh();
  };
  el<HTMLButtonElement>("undo-edge").onclick = () => {
    const id = Number(el<HTMLInputElement>("edge-id").value);
    undoDelete(state, id);
    refresh();
  };
  el<HTMLButtonElement>("submit").onclick = () => void submit();
  el<HTMLButtonElement>("finalize").onclick = () => void finalize();

  refresh();
  startLoop(handles);
}

void boot().catch((err) => {
  const banner = document.getElementById("banner");
  if (banner) {
    banner.textContent = `failed to load graph: ${err}`;
    (banner as HTMLDivElement).style.display = "block";
  }
});
