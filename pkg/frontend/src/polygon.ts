/**
 * Polygon selection tool: click to add a vertex, drag to move one,
 * double-click (close()) to finish. Closing needs at least 3 vertices.
 *
 * The tool is pure state so the canvas layer stays a thin renderer and
 * the logic is testable without a DOM.
 */

export type Point = [number, number];

export class PolygonTool {
  private vertices: Point[] = [];
  private closed = false;
  private dragging: number | null = null;

  /** Vertices in insertion order; a defensive copy. */
  get points(): Point[] {
    return this.vertices.map(([x, y]) => [x, y]);
  }

  get isClosed(): boolean {
    return this.closed;
  }

  addVertex(x: number, y: number): void {
    if (this.closed) {
      throw new Error("polygon already closed; reset() to start over");
    }
    this.vertices.push([x, y]);
  }

  /** Finish the polygon. Returns an inline message when blocked. */
  close(): { ok: true } | { ok: false; message: string } {
    if (this.vertices.length < 3) {
      return { ok: false, message: "a region needs at least 3 vertices" };
    }
    this.closed = true;
    return { ok: true };
  }

  /** Index of the vertex within `radius` of (x, y), or null. */
  hitTest(x: number, y: number, radius = 6): number | null {
    for (let i = 0; i < this.vertices.length; i++) {
      const [vx, vy] = this.vertices[i];
      if (Math.hypot(vx - x, vy - y) <= radius) return i;
    }
    return null;
  }

  beginDrag(index: number): void {
    if (index < 0 || index >= this.vertices.length) {
      throw new Error(`no vertex at index ${index}`);
    }
    this.dragging = index;
  }

  dragTo(x: number, y: number): void {
    if (this.dragging === null) throw new Error("no drag in progress");
    this.vertices[this.dragging] = [x, y];
  }

  endDrag(): void {
    this.dragging = null;
  }

  reset(): void {
    this.vertices = [];
    this.closed = false;
    this.dragging = null;
  }

  /** Wire format for the edit request: [[x, y], ...]. */
  serialize(): number[][] {
    if (!this.closed) throw new Error("close the polygon before serializing");
    return this.vertices.map(([x, y]) => [x, y]);
  }
}
