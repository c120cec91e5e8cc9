#!/usr/bin/env node
/** Chart renderer for polguard CLI outputs.
 *
 *   polguard-charts visibility --sweep a.csv b.csv [--thresholds t.csv] --out v.svg
 *   polguard-charts camouflage --audit verdict.json [--variant gated] --out c.svg
 *   polguard-charts thresholds --alert a1.csv --secure b1.csv --out t.svg
 *   polguard-charts rates --sweep sweep.csv --out r.svg
 */

import { writeFileSync } from "node:fs";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { renderCamouflage } from "./charts/camouflage.js";
import { renderRates } from "./charts/rates.js";
import { renderThresholds } from "./charts/thresholds.js";
import { renderVisibility } from "./charts/visibility.js";
import { SchemaError } from "./schema.js";

function write(out: string, svg: string): void {
  writeFileSync(out, svg);
  process.stdout.write(`wrote ${out}\n`);
}

export async function main(argv: string[]): Promise<number> {
  try {
    await yargs(argv)
      .scriptName("polguard-charts")
      .command(
        "visibility",
        "energy-vs-HWP2 sweep curves with sinusoid fits",
        (y) =>
          y
            .option("sweep", { type: "string", array: true, demandOption: true })
            .option("thresholds", { type: "string" })
            .option("split", { type: "number", default: 0.25 })
            .option("powers", { type: "number", array: true })
            .option("gate", { choices: ["gated", "ungated"] as const, default: "gated" as const })
            .option("out", { type: "string", demandOption: true }),
        (args) =>
          write(
            args.out,
            renderVisibility({
              sweeps: args.sweep,
              thresholds: args.thresholds,
              splitFactor: args.split,
              powers: args.powers,
              gateVariant: args.gate,
            }),
          ),
      )
      .command(
        "camouflage",
        "threshold intersections over the operational-ratio plane",
        (y) =>
          y
            .option("audit", { type: "string", demandOption: true })
            .option("variant", { type: "string" })
            .option("out", { type: "string", demandOption: true }),
        (args) =>
          write(args.out, renderCamouflage({ audit: args.audit, variant: args.variant })),
      )
      .command(
        "thresholds",
        "E_never versus blinding power for an alert/secure detector pair",
        (y) =>
          y
            .option("alert", { type: "string", demandOption: true })
            .option("secure", { type: "string", demandOption: true })
            .option("powers", { type: "number", array: true })
            .option("out", { type: "string", demandOption: true }),
        (args) =>
          write(
            args.out,
            renderThresholds({ alert: args.alert, secure: args.secure, powers: args.powers }),
          ),
      )
      .command(
        "rates",
        "alert/sifted/QBER curves from a sweep CSV",
        (y) =>
          y
            .option("sweep", { type: "string", demandOption: true })
            .option("out", { type: "string", demandOption: true }),
        (args) => write(args.out, renderRates({ sweep: args.sweep })),
      )
      .demandCommand(1)
      .strict()
      .fail((msg, err) => {
        throw err ?? new Error(msg);
      })
      .parseAsync();
    return 0;
  } catch (err) {
    const message = err instanceof Error ? err.message : String(err);
    process.stderr.write(`error: ${message}\n`);
    return err instanceof SchemaError ? 2 : 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
