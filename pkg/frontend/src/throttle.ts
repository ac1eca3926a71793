/** Rate limiter for pointer reports; at most one accept per interval. */

export interface Throttle {
  /** True if the call is within budget; advances the limiter if so. */
  ready(): boolean;
}

export function makeThrottle(
  maxHz: number,
  now: () => number = () => performance.now(),
): Throttle {
  if (!(maxHz > 0)) {
    throw new Error(`throttle rate must be positive, got ${maxHz}`);
  }
  const interval = 1000 / maxHz;
  let last = -Infinity;
  return {
    ready(): boolean {
      const t = now();
      if (t - last < interval) {
        return false;
      }
      last = t;
      return true;
    },
  };
}
