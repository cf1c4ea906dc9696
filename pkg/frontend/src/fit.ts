/** Least squares on (log eps, log value) — the rate annotation. */

export interface LineFit {
  slope: number;
  intercept: number;
  rSquared: number;
}

export function leastSquares(x: number[], y: number[]): LineFit {
  if (x.length !== y.length || x.length < 2) {
    throw new Error("need matching x/y with at least 2 points");
  }
  const n = x.length;
  const mx = x.reduce((a, b) => a + b, 0) / n;
  const my = y.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  let syy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (x[i] - mx) ** 2;
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) ** 2;
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ssRes = 0;
  for (let i = 0; i < n; i++) {
    ssRes += (y[i] - (slope * x[i] + intercept)) ** 2;
  }
  const rSquared = syy > 0 ? 1 - ssRes / syy : 1;
  return { slope, intercept, rSquared };
}

export function logLogFit(eps: number[], values: number[]): LineFit {
  for (const v of [...eps, ...values]) {
    if (!(v > 0)) throw new Error("log-log fit needs positive data");
  }
  return leastSquares(eps.map(Math.log), values.map(Math.log));
}
