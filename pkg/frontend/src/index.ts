export { fitFixedPeriodSinusoid } from "./fit.js";
export type { SinusoidFit } from "./fit.js";
export {
  readAuditJson,
  readSweepCsv,
  readThresholdCsv,
  interp,
  SchemaError,
  SCHEMA_VERSION,
} from "./schema.js";
export { renderVisibility, loadVisibilityCurves } from "./charts/visibility.js";
export { renderCamouflage } from "./charts/camouflage.js";
export { renderThresholds } from "./charts/thresholds.js";
export { renderRates } from "./charts/rates.js";
