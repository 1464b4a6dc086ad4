/**
 * Editor session state: the loaded image, the region polygon, the edit
 * parameters, and an append-only history of (request, result) pairs so
 * any past configuration can be re-run with one click.
 */

import { EditRequest, EditRequestSchema, EditResult } from "./schema";

export const CFG_MIN = 1;
export const CFG_MAX = 9;

export interface HistoryEntry {
  readonly request: EditRequest;
  readonly result: EditResult;
}

export class EditorSession {
  private image: string | null = null;
  private polygon: number[][] | null = null;
  private _text = "";
  private _cfgScale = 3;
  private _steps = 20;
  private _seed = 0;
  private readonly _history: HistoryEntry[] = [];
  private pending = false;

  loadImage(pngBase64: string): void {
    if (!pngBase64) throw new Error("empty image");
    this.image = pngBase64;
  }

  setPolygon(points: number[][]): void {
    if (points.length < 3) throw new Error("a region needs at least 3 vertices");
    this.polygon = points.map((p) => [...p]);
  }

  set text(value: string) {
    this._text = value;
  }

  get text(): string {
    return this._text;
  }

  /** Guidance-scale slider; values outside [1, 9] clamp to the bounds. */
  set cfgScale(value: number) {
    this._cfgScale = Math.min(CFG_MAX, Math.max(CFG_MIN, value));
  }

  get cfgScale(): number {
    return this._cfgScale;
  }

  set steps(value: number) {
    if (!Number.isInteger(value) || value < 1 || value > 200) {
      throw new Error("steps must be an integer in [1, 200]");
    }
    this._steps = value;
  }

  get steps(): number {
    return this._steps;
  }

  set seed(value: number) {
    if (!Number.isInteger(value)) throw new Error("seed must be an integer");
    this._seed = value;
  }

  get seed(): number {
    return this._seed;
  }

  get isPending(): boolean {
    return this.pending;
  }

  /** Read-only view; entries are never removed or mutated. */
  get history(): readonly HistoryEntry[] {
    return this._history;
  }

  /** Build and validate the request for the current controls. */
  buildRequest(): EditRequest {
    if (this.image === null) throw new Error("load an image first");
    if (this.polygon === null) throw new Error("draw a region first");
    if (this._text.trim().length === 0) throw new Error("enter the target text");
    return EditRequestSchema.parse({
      image: this.image,
      polygon: this.polygon,
      text: this._text,
      cfg_scale: this._cfgScale,
      steps: this._steps,
      seed: this._seed,
    });
  }

  /**
   * Submit the current controls through `send` (the API client's edit
   * call). Only one request may be in flight at a time.
   */
  async submit(send: (req: EditRequest) => Promise<EditResult>): Promise<EditResult> {
    if (this.pending) throw new Error("an edit is already in flight");
    const request = this.buildRequest();
    this.pending = true;
    try {
      const result = await send(request);
      this._history.push({ request, result });
      return result;
    } finally {
      this.pending = false;
    }
  }

  /** Re-run a past entry's exact request; appends a new history entry. */
  async rerun(
    index: number,
    send: (req: EditRequest) => Promise<EditResult>
  ): Promise<EditResult> {
    const entry = this._history[index];
    if (entry === undefined) throw new Error(`no history entry ${index}`);
    if (this.pending) throw new Error("an edit is already in flight");
    this.pending = true;
    try {
      const result = await send(entry.request);
      this._history.push({ request: entry.request, result });
      return result;
    } finally {
      this.pending = false;
    }
  }
}
