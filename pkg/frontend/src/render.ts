/** three.js scene for the vessel-fused graph with MIP guide planes.
 *
 * Node markers by kind (endpoint / junction / hub center), traces as
 * polylines thickened by their median radius, pending deletions ghosted.
 * Large phantoms decimate trace interiors to hold an interactive frame rate.
 */

import * as THREE from "three";
import { OrbitControls } from "three/examples/jsm/controls/OrbitControls.js";
import type { GraphDoc, GuideDoc, TraceDoc } from "./types.js";
import type { ViewState } from "./state.js";

const KIND_COLORS: Record<string, number> = {
  endpoint: 0xd62728, // red markers for terminal nodes
  junction: 0xff9a3d,
  hub_center: 0x1f77b4, // blue hubs
};
const TRACE_COLOR = 0x2ca02c;
const GHOST_COLOR = 0x9aa0a6;
const DECIMATE_ABOVE = 2000; // traces; keep every k-th interior point beyond this

export interface SceneHandles {
  scene: THREE.Scene;
  camera: THREE.PerspectiveCamera;
  renderer: THREE.WebGLRenderer;
  controls: OrbitControls;
  nodeMeshes: Map<number, THREE.Object3D>;
  traceLines: Map<number, THREE.Line>;
  mipPlanes: Map<string, THREE.Mesh>;
  pickables: THREE.Object3D[];
}

function tracePoints(trace: TraceDoc, spacing: [number, number, number], step: number): THREE.Vector3[] {
  const pts: THREE.Vector3[] = [];
  const n = trace.points.length;
  for (let i = 0; i < n; i++) {
    if (step > 1 && i !== 0 && i !== n - 1 && i % step !== 0) continue;
    const [x, y, z] = trace.points[i];
    pts.push(new THREE.Vector3(x * spacing[0], y * spacing[1], z * spacing[2]));
  }
  return pts;
}

export function buildScene(container: HTMLElement, graph: GraphDoc, state: ViewState): SceneHandles {
  const scene = new THREE.Scene();
  scene.background = new THREE.Color(0x101418);
  const camera = new THREE.PerspectiveCamera(50, container.clientWidth / container.clientHeight, 0.1, 5000);
  const renderer = new THREE.WebGLRenderer({ antialias: true });
  renderer.setSize(container.clientWidth, container.clientHeight);
  container.appendChild(renderer.domElement);
  const controls = new OrbitControls(camera, renderer.domElement);

  scene.add(new THREE.AmbientLight(0xffffff, 0.7));
  const sun = new THREE.DirectionalLight(0xffffff, 1.2);
  sun.position.set(1, 1, 2);
  scene.add(sun);

  const spacing = graph.spacing;
  const bbox = new THREE.Box3();
  const nodeMeshes = new Map<number, THREE.Object3D>();
  const pickables: THREE.Object3D[] = [];
  const nodeGeo = new THREE.SphereGeometry(1, 12, 10);
  for (const node of graph.nodes) {
    const mat = new THREE.MeshLambertMaterial({ color: KIND_COLORS[node.kind] ?? 0xffffff });
    const mesh = new THREE.Mesh(nodeGeo, mat);
    mesh.position.set(node.xyz[0] * spacing[0], node.xyz[1] * spacing[1], node.xyz[2] * spacing[2]);
    const scale = node.kind === "endpoint" ? 1.1 : 1.6;
    mesh.scale.setScalar(scale);
    mesh.userData = { nodeId: node.id, kind: node.kind };
    scene.add(mesh);
    nodeMeshes.set(node.id, mesh);
    pickables.push(mesh);
    bbox.expandByPoint(mesh.position);
  }

  const step = graph.traces.length > DECIMATE_ABOVE ? 4 : 1;
  const traceLines = new Map<number, THREE.Line>();
  for (const trace of graph.traces) {
    const pts = tracePoints(trace, spacing, step);
    const geo = new THREE.BufferGeometry().setFromPoints(pts);
    const radii = trace.points.map((p) => p[3]);
    const median = radii.slice().sort((a, b) => a - b)[Math.floor(radii.length / 2)] ?? 1;
    const mat = new THREE.LineBasicMaterial({
      color: TRACE_COLOR,
      linewidth: Math.max(1, Math.round(median * 2)),
      transparent: true,
      opacity: 0.95,
    });
    const line = new THREE.Line(geo, mat);
    line.userData = { traceId: trace.id };
    scene.add(line);
    traceLines.set(trace.id, line);
    for (const p of pts) bbox.expandByPoint(p);
  }

  const center = bbox.getCenter(new THREE.Vector3());
  const size = bbox.getSize(new THREE.Vector3()).length() || 100;
  camera.position.copy(center).add(new THREE.Vector3(size * 0.6, -size * 0.9, size * 0.5));
  camera.lookAt(center);
  controls.target.copy(center);
  controls.update();

  return { scene, camera, renderer, controls, nodeMeshes, traceLines, mipPlanes: new Map(), pickables };
}

/** Guide projections as textured planes orthogonal to their axis. */
export function addMipPlanes(handles: SceneHandles, guide: GuideDoc, spacing: [number, number, number]): void {
  const loader = new THREE.TextureLoader();
  const dims = guide.dims;
  for (const view of guide.views) {
    const tex = loader.load(`data:image/png;base64,${view.png_base64}`);
    tex.colorSpace = THREE.SRGBColorSpace;
    const mat = new THREE.MeshBasicMaterial({
      map: tex,
      transparent: true,
      opacity: 0.35,
      side: THREE.DoubleSide,
      depthWrite: false,
    });
    let w: number, h: number;
    const axes: Record<string, [number, number]> = { x: [1, 2], y: [0, 2], z: [0, 1] };
    const [ua, va] = axes[view.axis];
    w = dims[ua] * spacing[ua];
    h = dims[va] * spacing[va];
    const geo = new THREE.PlaneGeometry(w, h);
    const mesh = new THREE.Mesh(geo, mat);
    const cx = (dims[0] * spacing[0]) / 2;
    const cy = (dims[1] * spacing[1]) / 2;
    const cz = (dims[2] * spacing[2]) / 2;
    if (view.axis === "x") {
      mesh.rotation.y = Math.PI / 2;
      mesh.rotation.z = Math.PI / 2;
      mesh.position.set(0, cy, cz);
    } else if (view.axis === "y") {
      mesh.rotation.x = Math.PI / 2;
      mesh.rotation.z = Math.PI / 2;
      mesh.position.set(cx, 0, cz);
    } else {
      mesh.position.set(cx, cy, 0);
    }
    handles.scene.add(mesh);
    handles.mipPlanes.set(view.axis, mesh);
  }
}

export function setMipVisible(handles: SceneHandles, axis: string, visible: boolean): void {
  const mesh = handles.mipPlanes.get(axis);
  if (mesh) mesh.visible = visible;
}

export function setMipOpacity(handles: SceneHandles, opacity: number): void {
  for (const mesh of handles.mipPlanes.values()) {
    (mesh.material as THREE.MeshBasicMaterial).opacity = opacity;
  }
}

/** Reflect assignment highlights and ghosted deletions into the scene. */
export function syncSceneWithState(handles: SceneHandles, state: ViewState): void {
  const assigned = new Set(state.assignments.values());
  for (const [nodeId, obj] of handles.nodeMeshes) {
    const mesh = obj as THREE.Mesh;
    const mat = mesh.material as THREE.MeshLambertMaterial;
    mat.emissive = new THREE.Color(assigned.has(nodeId) ? 0xffff00 : 0x000000);
    mat.emissiveIntensity = assigned.has(nodeId) ? 0.6 : 0.0;
  }
  for (const [traceId, line] of handles.traceLines) {
    const mat = line.material as THREE.LineBasicMaterial;
    const ghosted = state.pendingDeletes.has(traceId);
    mat.color.setHex(ghosted ? GHOST_COLOR : TRACE_COLOR);
    mat.opacity = ghosted ? 0.25 : 0.95;
  }
}

export function startLoop(handles: SceneHandles): void {
  const tick = () => {
    requestAnimationFrame(tick);
    handles.controls.update();
    handles.renderer.render(handles.scene, handles.camera);
  };
  tick();
}
