/**
 * The nine span categories in fixed schema order. Digit keys 1-9 map to
 * this order, and every category gets its own highlight color.
 */

export const CATEGORIES = [
  "BODY",
  "DETAILS",
  "SEC",
  "FAMILY",
  "FACILITY",
  "RELTIME",
  "LIFESTYLE",
  "PHI_REF",
  "OTHER",
] as const;

export type CategoryName = (typeof CATEGORIES)[number];

export const CATEGORY_COLORS: Record<CategoryName, string> = {
  BODY: "#e6794a",
  DETAILS: "#c25cd6",
  SEC: "#d64560",
  FAMILY: "#3f8fd6",
  FACILITY: "#36a173",
  RELTIME: "#b59a2e",
  LIFESTYLE: "#5a67d8",
  PHI_REF: "#d63b3b",
  OTHER: "#718096",
};

export function isCategory(value: string): value is CategoryName {
  return (CATEGORIES as readonly string[]).includes(value);
}

/** Category bound to a digit key, 1-based ("1" -> BODY ... "9" -> OTHER). */
export function categoryForDigit(digit: string): CategoryName | null {
  const index = Number.parseInt(digit, 10) - 1;
  if (Number.isNaN(index) || index < 0 || index >= CATEGORIES.length) {
    return null;
  }
  return CATEGORIES[index];
}
