/**
 * Side-by-side comparison of two history entries: which parameters
 * differ and how, so a guidance-scale sweep reads at a glance.
 */

import { HistoryEntry } from "./session";

export interface FieldDiff {
  field: string;
  a: unknown;
  b: unknown;
}

const COMPARED_FIELDS = ["text", "cfg_scale", "steps", "seed", "polygon", "mask", "image"] as const;

export function compareEntries(a: HistoryEntry, b: HistoryEntry): FieldDiff[] {
  const diffs: FieldDiff[] = [];
  for (const field of COMPARED_FIELDS) {
    const va = (a.request as Record<string, unknown>)[field];
    const vb = (b.request as Record<string, unknown>)[field];
    if (JSON.stringify(va) !== JSON.stringify(vb)) {
      diffs.push({ field, a: va, b: vb });
    }
  }
  return diffs;
}

/** "cfg_scale 1 → 3" style labels for the comparison header. */
export function formatDiff(diffs: FieldDiff[]): string[] {
  return diffs.map((d) => `${d.field} ${JSON.stringify(d.a)} → ${JSON.stringify(d.b)}`);
}
