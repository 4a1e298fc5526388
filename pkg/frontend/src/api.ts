/** Thin client for the /v1 labeling API. */

import type { FinalizeResponse, GraphDoc, GuideDoc, LandmarkDoc } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public body: { detail?: string; missing?: string[] },
  ) {
    super(body.detail ?? `HTTP ${status}`);
  }
}

async function parse<T>(resp: Response): Promise<T> {
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) throw new ApiError(resp.status, body as { detail?: string });
  return body as T;
}

export class Client {
  constructor(private base: string = "") {}

  getGraph(): Promise<GraphDoc> {
    return fetch(`${this.base}/v1/graph`).then((r) => parse<GraphDoc>(r));
  }

  getGuide(): Promise<GuideDoc> {
    return fetch(`${this.base}/v1/guide`).then((r) => parse<GuideDoc>(r));
  }

  getLabels(): Promise<LandmarkDoc> {
    return fetch(`${this.base}/v1/labels`).then((r) => parse<LandmarkDoc>(r));
  }

  putLabels(doc: LandmarkDoc): Promise<LandmarkDoc> {
    return fetch(`${this.base}/v1/labels`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(doc),
    }).then((r) => parse<LandmarkDoc>(r));
  }

  deleteEdge(traceId: number): Promise<LandmarkDoc> {
    return fetch(`${this.base}/v1/edges/delete`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ trace_id: traceId }),
    }).then((r) => parse<LandmarkDoc>(r));
  }

  finalize(): Promise<FinalizeResponse> {
    return fetch(`${this.base}/v1/finalize`, { method: "POST" }).then((r) => parse<FinalizeResponse>(r));
  }
}
