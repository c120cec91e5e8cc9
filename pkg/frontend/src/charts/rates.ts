/** Rate-sweep chart: alert rate, sifted rate and QBER against the swept
 * parameter, with one-standard-error bars from the Monte Carlo run. */

import { readSweepCsv, SweepRow } from "../schema.js";
import { extent, linearScale, pad } from "../scale.js";
import { Chart, PALETTE } from "../svg.js";

export interface RatesSpec {
  sweep: string;
  width?: number;
  height?: number;
}

export function renderRates(spec: RatesSpec): string {
  const rows = readSweepCsv(spec.sweep);
  const chart = new Chart(spec.width ?? 720, spec.height ?? 480, { right: 170 });
  const parameter = rows.length > 0 ? rows[0].parameter : "parameter";
  chart.title(`Rates vs ${parameter}`);

  if (rows.length === 0) {
    const x = linearScale([0, 1], [chart.plotLeft, chart.plotRight]);
    const y = linearScale([0, 1], [chart.plotBottom, chart.plotTop]);
    chart.axes(x, y, parameter, "rate per round");
    chart.warning("no sweep data: input file contained no rows");
    return chart.render();
  }

  const series: Array<{
    label: string;
    color: string;
    value: (r: SweepRow) => number;
    se: (r: SweepRow) => number;
  }> = [
    { label: "alert rate", color: PALETTE[1], value: (r) => r.alertRate, se: (r) => r.alertSe },
    { label: "sifted rate", color: PALETTE[0], value: (r) => r.siftedRate, se: (r) => r.siftedSe },
    { label: "QBER", color: PALETTE[2], value: (r) => r.qber, se: (r) => r.qberSe },
  ];

  const xs = rows.map((r) => r.value);
  const tops = series.flatMap((s) => rows.map((r) => s.value(r) + s.se(r)));
  const x = linearScale(pad(extent(xs)), [chart.plotLeft, chart.plotRight]);
  const y = linearScale(pad([0, extent(tops)[1]]), [chart.plotBottom, chart.plotTop]);
  chart.axes(x, y, parameter, "rate");

  for (const s of series) {
    const pts = rows.map((r) => [x(r.value), y(s.value(r))] as [number, number]);
    chart.polyline(pts, s.color);
    chart.circles(pts, s.color, 2.5);
    rows.forEach((r) => {
      const se = s.se(r);
      if (se > 0) {
        chart.element("line", {
          x1: x(r.value), y1: y(s.value(r) - se),
          x2: x(r.value), y2: y(s.value(r) + se),
          stroke: s.color, "stroke-width": 1,
        });
      }
    });
  }
  chart.legend(
    series.map((s) => ({ label: s.label, color: s.color })),
    chart.plotRight + 10,
    chart.plotTop + 12,
  );
  return chart.render();
}
