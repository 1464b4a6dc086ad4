/**
 * Client-side mirror of the service's edit request schema.
 *
 * Every payload the UI sends is validated against this before the
 * request leaves the browser, so the service's 422 responses are
 * reserved for things only it can know (decoding failures, model state).
 */

import { z } from "zod";

export const PointSchema = z.tuple([z.number().finite(), z.number().finite()]);

export const EditRequestSchema = z
  .object({
    image: z.string().min(1),
    polygon: z.array(z.array(z.number().finite()).length(2)).min(3).optional(),
    mask: z.string().min(1).optional(),
    text: z.string().trim().min(1).max(20),
    cfg_scale: z.number().min(0).max(15).default(3.0),
    steps: z.number().int().min(1).max(200).default(20),
    seed: z.number().int().default(0),
  })
  .refine((r) => (r.polygon === undefined) !== (r.mask === undefined), {
    message: "provide exactly one of 'polygon' and 'mask'",
  });

export type EditRequest = z.infer<typeof EditRequestSchema>;

export interface EditResult {
  image: string;
  timings: Record<string, number>;
  seed: number;
  warnings: string[];
}
