export { EditRequestSchema, PointSchema } from "./schema";
export type { EditRequest, EditResult } from "./schema";
export { PolygonTool } from "./polygon";
export type { Point } from "./polygon";
export { EditorSession, CFG_MIN, CFG_MAX } from "./session";
export type { HistoryEntry } from "./session";
export { ApiClient, ServiceError } from "./client";
export type { HealthResponse } from "./client";
export { compareEntries, formatDiff } from "./compare";
export type { FieldDiff } from "./compare";
