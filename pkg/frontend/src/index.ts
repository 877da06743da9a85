export { parseCsv, SchemaError } from "./csv.js";
export { loadCombined, loadIpgHist, loadPerCurve } from "./schema.js";
export {
  assertKind,
  boxStats,
  renderIpgHist,
  renderOffsetBars,
  renderPerCurve,
  renderSweepBox,
} from "./figures.js";
export { main, parseArgs, render } from "./cli.js";
