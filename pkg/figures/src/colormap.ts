/** Fixed diverging colormap for signed phase-space densities. */

const ANCHORS: Array<[number, [number, number, number]]> = [
  [0.0, [33, 60, 135]],
  [0.25, [120, 165, 215]],
  [0.5, [245, 245, 240]],
  [0.75, [225, 130, 90]],
  [1.0, [150, 20, 40]],
];

export function diverging(value: number): string {
  const t = Math.min(1, Math.max(0, value));
  for (let i = 1; i < ANCHORS.length; i++) {
    const [t1, c1] = ANCHORS[i];
    const [t0, c0] = ANCHORS[i - 1];
    if (t <= t1) {
      const u = (t - t0) / (t1 - t0);
      const rgb = c0.map((a, k) => Math.round(a + u * (c1[k] - a)));
      return `rgb(${rgb[0]},${rgb[1]},${rgb[2]})`;
    }
  }
  const last = ANCHORS[ANCHORS.length - 1][1];
  return `rgb(${last[0]},${last[1]},${last[2]})`;
}
