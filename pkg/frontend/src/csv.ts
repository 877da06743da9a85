// Minimal CSV handling for the simulator's delimited outputs (no quoting,
// comma separated, one header line).

export class SchemaError extends Error {}

export interface Table {
  header: string[];
  rows: string[][];
}

export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) {
    return { header: [], rows: [] };
  }
  const header = lines[0].split(",");
  const rows = lines.slice(1).map((l) => l.split(","));
  return { header, rows };
}

export function columnIndex(table: Table, name: string, file: string): number {
  const idx = table.header.indexOf(name);
  if (idx < 0) {
    throw new SchemaError(
      `${file}: missing required column '${name}' (found: ${table.header.join(", ")})`,
    );
  }
  return idx;
}

export function asNumber(raw: string, column: string, file: string): number {
  if (raw === "inf") return Infinity;
  const v = Number(raw);
  if (raw.trim() === "" || Number.isNaN(v)) {
    throw new SchemaError(`${file}: column '${column}' has non-numeric value '${raw}'`);
  }
  return v;
}

/** Empty cell means "absent", e.g. the PER of a bin with no attempts. */
export function asOptionalNumber(raw: string, column: string, file: string): number | null {
  if (raw.trim() === "") return null;
  return asNumber(raw, column, file);
}
