import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { renderCamouflage } from "../src/charts/camouflage.js";
import { renderRates } from "../src/charts/rates.js";
import { renderThresholds } from "../src/charts/thresholds.js";
import { loadVisibilityCurves, renderVisibility } from "../src/charts/visibility.js";

const DATA = join(__dirname, "..", "testdata");

const SWEEPS = ["p100", "p078", "p063", "p053", "p050"].map((p) =>
  join(DATA, `visibility_${p}.csv`),
);
// exact source purities behind the five sample sweeps
const PURITIES: Record<string, number> = {
  visibility_p100: 1.0,
  visibility_p078: 0.7796009920766253,
  visibility_p063: 0.625,
  visibility_p053: 0.5309233299890341,
  visibility_p050: 0.5,
};

describe("visibility chart", () => {
  it("renders five fitted curves with threshold levels", () => {
    const svg = renderVisibility({
      sweeps: SWEEPS,
      thresholds: join(DATA, "thresholds_alert.csv"),
    });
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("polyline");
    expect(svg.match(/V=/g)?.length).toBe(5);
    expect(svg).toContain("E_never levels");
  });

  it("fitted visibilities follow sqrt(2P-1) within the fit interval", () => {
    for (const curve of loadVisibilityCurves(SWEEPS)) {
      const purity = PURITIES[curve.label];
      expect(purity).toBeDefined();
      const expected = Math.sqrt(2 * purity - 1);
      expect(curve.fit).not.toBeNull();
      const tolerance = Math.max(3 * curve.fit!.visibilitySigma, 1e-6);
      expect(Math.abs(curve.fit!.visibility - expected)).toBeLessThanOrEqual(tolerance);
    }
  });

  it("is deterministic", () => {
    const a = renderVisibility({ sweeps: SWEEPS });
    const b = renderVisibility({ sweeps: SWEEPS });
    expect(a).toBe(b);
  });

  it("renders an empty-axes warning for empty input", () => {
    const dir = mkdtempSync(join(tmpdir(), "polguard-charts-"));
    const empty = join(dir, "empty.csv");
    writeFileSync(
      empty,
      "schema_version,parameter,value,alert_rate,alert_se,sifted_rate,sifted_se,qber,qber_se\n",
    );
    const svg = renderVisibility({ sweeps: [empty] });
    expect(svg).toContain("no sweep data");
    expect(svg).toContain("<rect");
  });
});

describe("camouflage chart", () => {
  it("marks the correct assignment secure", () => {
    const svg = renderCamouflage({ audit: join(DATA, "audit_correct.json") });
    expect(svg).toContain("secure");
    expect(svg).toContain("operational ratio 1:2");
    expect(svg).toContain("0 overlapping the unsafe area");
  });

  it("marks the swapped assignment insecure with violations", () => {
    const svg = renderCamouflage({
      audit: join(DATA, "audit_swapped.json"),
      variant: "gated",
    });
    expect(svg).toContain("INSECURE");
    expect(svg).not.toContain(" 0 overlapping");
  });

  it("is deterministic", () => {
    const spec = { audit: join(DATA, "audit_correct.json") };
    expect(renderCamouflage(spec)).toBe(renderCamouflage(spec));
  });

  it("rejects an unknown variant", () => {
    expect(() =>
      renderCamouflage({ audit: join(DATA, "audit_correct.json"), variant: "nope" }),
    ).toThrow(/variant/);
  });
});

describe("thresholds chart", () => {
  it("renders four series", () => {
    const svg = renderThresholds({
      alert: join(DATA, "thresholds_alert.csv"),
      secure: join(DATA, "thresholds_secure.csv"),
    });
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("alert E_never(I_B/4), gated");
    expect(svg).toContain("secure E_never(I_B/8), ungated");
  });

  it("is deterministic", () => {
    const spec = {
      alert: join(DATA, "thresholds_alert.csv"),
      secure: join(DATA, "thresholds_secure.csv"),
    };
    expect(renderThresholds(spec)).toBe(renderThresholds(spec));
  });
});

describe("rates chart", () => {
  it("renders three series with error bars", () => {
    const svg = renderRates({ sweep: join(DATA, "rates_switch_sweep.csv") });
    expect(svg).toContain("alert rate");
    expect(svg).toContain("QBER");
    expect(svg).toContain("switch_rate");
  });

  it("is deterministic", () => {
    const spec = { sweep: join(DATA, "rates_switch_sweep.csv") };
    expect(renderRates(spec)).toBe(renderRates(spec));
  });
});

describe("svg well-formedness", () => {
  it("all chart kinds are structurally balanced", () => {
    const svgs = [
      renderVisibility({ sweeps: SWEEPS }),
      renderCamouflage({ audit: join(DATA, "audit_correct.json") }),
      renderThresholds({
        alert: join(DATA, "thresholds_alert.csv"),
        secure: join(DATA, "thresholds_secure.csv"),
      }),
      renderRates({ sweep: join(DATA, "rates_switch_sweep.csv") }),
    ];
    for (const svg of svgs) {
      // structural sanity without a DOM: balanced root, no stray ampersands
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
      expect(svg).not.toMatch(/&(?!amp;|lt;|gt;|quot;|#)/);
      const opens = (svg.match(/<text[ >]/g) ?? []).length;
      const closes = (svg.match(/<\/text>/g) ?? []).length;
      expect(opens).toBe(closes);
    }
  });
});
