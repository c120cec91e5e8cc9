/** Visibility-sweep chart: trigger energies versus the HWP2 angle, one
 * sinusoid-fitted curve per sweep file, with optional horizontal detector
 * threshold levels E_never(I_B x split). */

import { basename } from "node:path";
import { fitFixedPeriodSinusoid, SinusoidFit } from "../fit.js";
import { interp, readSweepCsv, readThresholdCsv } from "../schema.js";
import { extent, linearScale, pad } from "../scale.js";
import { Chart, fmt, PALETTE } from "../svg.js";

export interface VisibilitySpec {
  sweeps: string[];
  thresholds?: string;
  splitFactor?: number;
  powers?: number[];
  gateVariant?: "gated" | "ungated";
  width?: number;
  height?: number;
}

export interface VisibilityCurve {
  label: string;
  theta: number[]; // radians
  energy: number[]; // pJ
  fit: SinusoidFit | null;
}

export function loadVisibilityCurves(paths: string[]): VisibilityCurve[] {
  return paths.map((path) => {
    const rows = readSweepCsv(path).filter((r) => r.eAlertPj !== null);
    const theta = rows.map((r) => r.value);
    const energy = rows.map((r) => r.eAlertPj as number);
    return {
      label: basename(path).replace(/\.csv$/, ""),
      theta,
      energy,
      fit: theta.length >= 3 ? fitFixedPeriodSinusoid(theta, energy) : null,
    };
  });
}

export function renderVisibility(spec: VisibilitySpec): string {
  const curves = loadVisibilityCurves(spec.sweeps);
  const chart = new Chart(spec.width ?? 760, spec.height ?? 500, { right: 200 });
  chart.title("Trigger energy at the alert detector vs HWP2 angle");

  const allEnergy = curves.flatMap((c) => c.energy);
  const levels: Array<{ power: number; energy: number }> = [];
  if (spec.thresholds) {
    const table = readThresholdCsv(spec.thresholds)[spec.gateVariant ?? "gated"];
    const split = spec.splitFactor ?? 0.25;
    for (const power of spec.powers ?? [0.72, 0.78, 0.86, 1.02, 1.09, 1.27, 1.51, 1.78, 2.02, 2.26, 2.5]) {
      levels.push({ power, energy: interp(power * split, table.powers, table.eNever) });
    }
    allEnergy.push(...levels.map((l) => l.energy));
  }
  if (curves.every((c) => c.theta.length === 0)) {
    const x = linearScale([0, 180], [chart.plotLeft, chart.plotRight]);
    const y = linearScale([0, 1], [chart.plotBottom, chart.plotTop]);
    chart.axes(x, y, "HWP2 angle (deg)", "pulse energy (pJ)");
    chart.warning("no sweep data: input files contained no rows");
    return chart.render();
  }

  const x = linearScale([0, 180], [chart.plotLeft, chart.plotRight]);
  const y = linearScale(pad([0, extent(allEnergy)[1]]), [chart.plotBottom, chart.plotTop]);
  chart.axes(x, y, "HWP2 angle (deg)", "pulse energy (pJ)");

  for (const level of levels) {
    chart.polyline(
      [
        [chart.plotLeft, y(level.energy)],
        [chart.plotRight, y(level.energy)],
      ],
      "#999",
      { "stroke-dasharray": "6 3", "stroke-width": 1 },
    );
  }

  const legend: Array<{ label: string; color: string }> = [];
  curves.forEach((curve, i) => {
    const color = PALETTE[i % PALETTE.length];
    const pts = curve.theta.map(
      (t, j) => [x((t * 180) / Math.PI), y(curve.energy[j])] as [number, number],
    );
    chart.circles(pts, color, 2.5);
    let label = curve.label;
    if (curve.fit) {
      const dense: Array<[number, number]> = [];
      for (let d = 0; d <= 180; d += 1) {
        const t = (d * Math.PI) / 180;
        const v =
          curve.fit.offset +
          curve.fit.amplitude * Math.cos(4 * t - curve.fit.phase);
        dense.push([x(d), y(v)]);
      }
      chart.polyline(dense, color);
      label += ` (V=${fmt(Number(curve.fit.visibility.toFixed(3)))})`;
    }
    legend.push({ label, color });
  });
  if (levels.length > 0) {
    legend.push({ label: "E_never levels", color: "#999" });
  }
  chart.legend(legend, chart.plotRight + 10, chart.plotTop + 12);
  return chart.render();
}
