/** Wire formats of the labeling service (all under /v1). */

export interface GraphNodeDoc {
  id: number;
  xyz: [number, number, number];
  kind: "endpoint" | "junction" | "hub_center";
  extra?: [number, number, number][];
}

export interface TraceDoc {
  id: number;
  start: number;
  end: number;
  /** [x, y, z, radius_mm] per point, voxel coordinates. */
  points: [number, number, number, number][];
  closed?: boolean;
}

export interface GraphDoc {
  nodes: GraphNodeDoc[];
  traces: TraceDoc[];
  spacing: [number, number, number];
  dims?: [number, number, number];
}

export interface GuideView {
  axis: "x" | "y" | "z";
  width: number;
  height: number;
  png_base64: string;
  nodes: { id: number; u: number; v: number }[];
}

export interface GuideDoc {
  views: GuideView[];
  dims: [number, number, number];
}

export interface LandmarkDoc {
  assignments: Record<string, number>;
  deleted_edges: number[];
  version: number;
}

export interface FeatureRowDoc {
  artery: string;
  present: boolean;
  [feature: string]: string | number | boolean | null;
}

export interface FinalizeResponse {
  rows: FeatureRowDoc[];
  features_csv: string;
}
