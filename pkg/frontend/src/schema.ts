/** Versioned input schemas for the files emitted by the polguard CLI. */

import { readFileSync } from "node:fs";
import Papa from "papaparse";
import { z } from "zod";

export const SCHEMA_VERSION = 1;

export class SchemaError extends Error {}

function checkVersion(found: unknown, source: string): void {
  const version = Number(found);
  if (version !== SCHEMA_VERSION) {
    throw new SchemaError(
      `${source}: unsupported schema_version ${String(found)} (expected ${SCHEMA_VERSION})`,
    );
  }
}

function parseCsv(path: string): { header: string[]; rows: Record<string, string>[] } {
  const text = readFileSync(path, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`${path}: ${parsed.errors[0].message} (row ${parsed.errors[0].row})`);
  }
  return { header: parsed.meta.fields ?? [], rows: parsed.data };
}

function requireColumns(header: string[], required: string[], path: string): void {
  const missing = required.filter((c) => !header.includes(c));
  if (missing.length > 0) {
    throw new SchemaError(`${path}: missing columns: ${missing.join(", ")}`);
  }
}

export interface SweepRow {
  parameter: string;
  value: number;
  alertRate: number;
  alertSe: number;
  siftedRate: number;
  siftedSe: number;
  qber: number;
  qberSe: number;
  eAlertPj: number | null;
  eSecurePj: number | null;
}

const SWEEP_COLUMNS = [
  "schema_version", "parameter", "value",
  "alert_rate", "alert_se", "sifted_rate", "sifted_se", "qber", "qber_se",
];

export function readSweepCsv(path: string): SweepRow[] {
  const { header, rows } = parseCsv(path);
  requireColumns(header, SWEEP_COLUMNS, path);
  if (rows.length > 0) checkVersion(rows[0]["schema_version"], path);
  const optional = (row: Record<string, string>, key: string): number | null => {
    const raw = row[key];
    if (raw === undefined || raw === "") return null;
    const v = Number(raw);
    return Number.isFinite(v) ? v : null;
  };
  return rows.map((row) => ({
    parameter: row["parameter"],
    value: Number(row["value"]),
    alertRate: Number(row["alert_rate"]),
    alertSe: Number(row["alert_se"]),
    siftedRate: Number(row["sifted_rate"]),
    siftedSe: Number(row["sifted_se"]),
    qber: Number(row["qber"]),
    qberSe: Number(row["qber_se"]),
    eAlertPj: optional(row, "e_alert_pj"),
    eSecurePj: optional(row, "e_secure_pj"),
  }));
}

export interface ThresholdTable {
  gated: { powers: number[]; eNever: number[]; eAlways: number[] };
  ungated: { powers: number[]; eNever: number[]; eAlways: number[] };
}

const THRESHOLD_COLUMNS = ["I_mW", "E_never_pJ", "E_always_pJ", "gated"];

export function readThresholdCsv(path: string): ThresholdTable {
  const { header, rows } = parseCsv(path);
  requireColumns(header, THRESHOLD_COLUMNS, path);
  const table: ThresholdTable = {
    gated: { powers: [], eNever: [], eAlways: [] },
    ungated: { powers: [], eNever: [], eAlways: [] },
  };
  for (const row of rows) {
    const flag = row["gated"].trim().toLowerCase();
    const variant = ["true", "1", "yes"].includes(flag) ? "gated" : "ungated";
    table[variant].powers.push(Number(row["I_mW"]));
    table[variant].eNever.push(Number(row["E_never_pJ"]));
    table[variant].eAlways.push(Number(row["E_always_pJ"]));
  }
  return table;
}

/** Clamped piecewise-linear interpolation on a threshold table. */
export function interp(x: number, xs: number[], ys: number[]): number {
  if (xs.length === 0) return NaN;
  if (x <= xs[0]) return ys[0];
  if (x >= xs[xs.length - 1]) return ys[ys.length - 1];
  let j = 0;
  while (j < xs.length - 2 && xs[j + 1] <= x) j++;
  const slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
  return slope * (x - xs[j]) + ys[j];
}

const auditPointSchema = z.object({
  alert: z.string(),
  secure: z.string(),
  blinding_power_mw: z.number(),
  power_alert_mw: z.number(),
  power_secure_mw: z.number(),
  e_never_alert_pj: z.number(),
  e_never_secure_pj: z.number(),
  ratio: z.number(),
  violates: z.boolean(),
  camouflage: z.object({ x_max: z.number(), y_min: z.number() }),
});

const auditSchema = z.object({
  schema_version: z.number(),
  secure: z.boolean(),
  blinding_powers_mw: z.array(z.number()),
  variants: z.record(
    z.object({ secure: z.boolean(), points: z.array(auditPointSchema) }),
  ),
});

export type AuditDoc = z.infer<typeof auditSchema>;
export type AuditPoint = z.infer<typeof auditPointSchema>;

export function readAuditJson(path: string): AuditDoc {
  const raw: unknown = JSON.parse(readFileSync(path, "utf-8"));
  if (typeof raw === "object" && raw !== null && "schema_version" in raw) {
    checkVersion((raw as { schema_version: unknown }).schema_version, path);
  }
  const result = auditSchema.safeParse(raw);
  if (!result.success) {
    const issue = result.error.issues[0];
    throw new SchemaError(`${path}: ${issue.path.join(".") || "<root>"}: ${issue.message}`);
  }
  return result.data;
}
