// Dashboard geometry shared with the recognizer: 3 x 4 chart grid on
// top, legend band, shoebox strip along the bottom. All in normalized
// [0,1]^2 with (0,0) the top-left corner.

export const ROWS = 3;
export const COLS = 4;
export const CHARTS_V_MAX = 0.78;
export const LEGEND_V_MAX = 0.86;
export const SHOEBOX_V_MIN = 0.86;

export const ATTRIBUTES = ["electricity", "emission", "water"] as const;
export const GRANULARITIES = [
  "distribution",
  "yearly",
  "monthly",
  "weekly",
] as const;

export function chartKey(row: number, col: number): string {
  return `${ATTRIBUTES[row]}:${GRANULARITIES[col]}`;
}

export interface Cell {
  row: number;
  col: number;
}

export function cellOf(chart: string): Cell | null {
  const [attribute, granularity] = chart.split(":");
  const row = ATTRIBUTES.indexOf(attribute as (typeof ATTRIBUTES)[number]);
  const col = GRANULARITIES.indexOf(
    granularity as (typeof GRANULARITIES)[number],
  );
  if (row < 0 || col < 0) return null;
  return { row, col };
}

/** Normalized rectangle of one chart cell. */
export function cellRect(cell: Cell): {
  u: number;
  v: number;
  w: number;
  h: number;
} {
  return {
    u: cell.col / COLS,
    v: (cell.row * CHARTS_V_MAX) / ROWS,
    w: 1 / COLS,
    h: CHARTS_V_MAX / ROWS,
  };
}

export function gridCells(): Cell[] {
  const cells: Cell[] = [];
  for (let row = 0; row < ROWS; row++)
    for (let col = 0; col < COLS; col++) cells.push({ row, col });
  return cells;
}
