/** Threshold chart: never-click energies of the alert and secure detectors
 * versus total blinding power, at their received splits (alert I_B/4,
 * secure I_B/8), for gated and ungated operation. */

import { interp, readThresholdCsv } from "../schema.js";
import { extent, linearScale, pad } from "../scale.js";
import { Chart, PALETTE } from "../svg.js";

export interface ThresholdsSpec {
  alert: string;
  secure: string;
  powers?: number[];
  width?: number;
  height?: number;
}

const DEFAULT_POWERS = [0.72, 0.78, 0.86, 1.02, 1.09, 1.27, 1.51, 1.78, 2.02, 2.26, 2.5];

export function renderThresholds(spec: ThresholdsSpec): string {
  const alert = readThresholdCsv(spec.alert);
  const secure = readThresholdCsv(spec.secure);
  const powers = spec.powers ?? DEFAULT_POWERS;
  const chart = new Chart(spec.width ?? 720, spec.height ?? 480, { right: 230 });
  chart.title("Never-click thresholds vs total blinding power");

  const series: Array<{ label: string; color: string; dash?: string; ys: number[] }> = [];
  const push = (
    label: string,
    color: string,
    table: { powers: number[]; eNever: number[] },
    split: number,
    dash?: string,
  ): void => {
    if (table.powers.length === 0) return;
    series.push({
      label,
      color,
      dash,
      ys: powers.map((p) => interp(p * split, table.powers, table.eNever)),
    });
  };
  push("alert E_never(I_B/4), gated", PALETTE[1], alert.gated, 0.25);
  push("alert E_never(I_B/4), ungated", PALETTE[1], alert.ungated, 0.25, "6 3");
  push("secure E_never(I_B/8), gated", PALETTE[0], secure.gated, 0.125);
  push("secure E_never(I_B/8), ungated", PALETTE[0], secure.ungated, 0.125, "6 3");

  if (series.length === 0 || powers.length === 0) {
    const x = linearScale([0, 1], [chart.plotLeft, chart.plotRight]);
    const y = linearScale([0, 1], [chart.plotBottom, chart.plotTop]);
    chart.axes(x, y, "blinding power I_B (mW)", "E_never (pJ)");
    chart.warning("no threshold data");
    return chart.render();
  }

  const x = linearScale(pad(extent(powers)), [chart.plotLeft, chart.plotRight]);
  const yHi = extent(series.flatMap((s) => s.ys))[1];
  const y = linearScale(pad([0, yHi]), [chart.plotBottom, chart.plotTop]);
  chart.axes(x, y, "blinding power I_B (mW)", "E_never (pJ)");

  for (const s of series) {
    const pts = powers.map((p, i) => [x(p), y(s.ys[i])] as [number, number]);
    chart.polyline(pts, s.color, s.dash ? { "stroke-dasharray": s.dash } : {});
    chart.circles(pts, s.color, 2.5);
  }
  chart.legend(
    series.map((s) => ({ label: s.label, color: s.color })),
    chart.plotRight + 10,
    chart.plotTop + 12,
  );
  return chart.render();
}
