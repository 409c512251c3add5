/** Display budget: above this many points the viewer draws a strided subset. */
export const DISPLAY_POINT_BUDGET = 50_000;

/**
 * Evenly strided subset for rendering. The underlying record is never
 * modified; callers keep the full point list.
 */
export function decimateForDisplay(points: number[][], budget: number = DISPLAY_POINT_BUDGET): number[][] {
  if (points.length <= budget) return points;
  const stride = points.length / budget;
  const out: number[][] = new Array(budget);
  for (let i = 0; i < budget; i++) {
    out[i] = points[Math.floor(i * stride)];
  }
  return out;
}
