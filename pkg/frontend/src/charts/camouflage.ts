/** Camouflage-region chart: threshold intersection points over the
 * (alert energy, secure energy) plane, each with its camouflage quadrant,
 * the dashed 1:2 operational-ratio line, and the unsafe half-plane below it.
 * An intersection overlapping the line (ratio <= 1/2) marks a traceless
 * detector-control opportunity. */

import { AuditDoc, readAuditJson } from "../schema.js";
import { extent, linearScale, pad } from "../scale.js";
import { Chart, fmt } from "../svg.js";

export interface CamouflageSpec {
  audit: string;
  variant?: string;
  width?: number;
  height?: number;
}

export function renderCamouflage(spec: CamouflageSpec): string {
  const doc: AuditDoc = readAuditJson(spec.audit);
  const variant = spec.variant ?? Object.keys(doc.variants).sort()[0];
  const entry = doc.variants[variant];
  if (!entry) {
    throw new Error(
      `variant ${variant!} not present in audit (have: ${Object.keys(doc.variants).join(", ")})`,
    );
  }
  const chart = new Chart(spec.width ?? 640, spec.height ?? 560, { right: 36 });
  chart.title(`Camouflage regions (${variant}) — ${entry.secure ? "secure" : "INSECURE"}`);

  const points = entry.points;
  if (points.length === 0) {
    const x = linearScale([0, 1], [chart.plotLeft, chart.plotRight]);
    const y = linearScale([0, 1], [chart.plotBottom, chart.plotTop]);
    chart.axes(x, y, "max energy at alert detector (pJ)", "max energy at secure detector (pJ)");
    chart.warning("no intersection points in audit file");
    return chart.render();
  }

  const xs = points.map((p) => p.e_never_alert_pj);
  const ys = points.map((p) => p.e_never_secure_pj);
  const xHi = pad([0, extent(xs)[1]], 0.15)[1];
  const yHi = pad([0, extent(ys)[1]], 0.15)[1];
  const x = linearScale([0, xHi], [chart.plotLeft, chart.plotRight]);
  const y = linearScale([0, yHi], [chart.plotBottom, chart.plotTop]);

  // unsafe half-plane below the operational-ratio line y = x/2
  const xEnd = Math.min(xHi, 2 * yHi);
  chart.raw(
    `<polygon points="${fmt(x(0))},${fmt(y(0))} ${fmt(x(xEnd))},${fmt(y(xEnd / 2))} ` +
      `${fmt(x(xHi))},${fmt(y(xHi / 2))} ${fmt(x(xHi))},${fmt(y(0))}" ` +
      `fill="#f5d97e" fill-opacity="0.55" stroke="none"/>`,
  );

  // camouflage quadrants {E_alert < x0, E_secure > y0}
  for (const p of points) {
    const color = p.violates ? "#d62728" : "#bbbbbb";
    chart.raw(
      `<rect x="${fmt(x(0))}" y="${fmt(y(yHi))}" width="${fmt(x(p.camouflage.x_max) - x(0))}" ` +
        `height="${fmt(y(p.camouflage.y_min) - y(yHi))}" fill="${color}" ` +
        `fill-opacity="0.08" stroke="none"/>`,
    );
  }

  chart.axes(x, y,
    "max energy at alert detector (pJ)",
    "max energy at secure detector (pJ)");

  // operational-ratio line
  chart.polyline(
    [
      [x(0), y(0)],
      [x(xEnd), y(xEnd / 2)],
    ],
    "#333",
    { "stroke-dasharray": "8 4", "stroke-width": 1.5 },
  );
  chart.element(
    "text",
    { x: x(xEnd * 0.82), y: y(xEnd * 0.41) - 6, "font-size": 11,
      "font-family": "sans-serif" },
    "operational ratio 1:2",
  );

  for (const p of points) {
    const px = x(p.e_never_alert_pj);
    const py = y(p.e_never_secure_pj);
    if (p.violates) {
      chart.element("circle", { cx: px, cy: py, r: 4, fill: "#d62728" });
    } else {
      chart.raw(
        `<path d="M ${fmt(px - 4)} ${fmt(py)} H ${fmt(px + 4)} M ${fmt(px)} ${fmt(py - 4)} V ${fmt(py + 4)}" ` +
          `stroke="#1f77b4" stroke-width="1.6" fill="none"/>`,
      );
    }
  }
  const nViol = points.filter((p) => p.violates).length;
  chart.element(
    "text",
    { x: chart.plotLeft + 10, y: chart.plotTop + 18, "font-size": 12,
      "font-family": "sans-serif" },
    `${points.length} intersection points, ${nViol} overlapping the unsafe area`,
  );
  return chart.render();
}
