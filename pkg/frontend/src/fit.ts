/** Fixed-period sinusoid least squares for the visibility sweeps.
 *
 * The model is y = C + A cos(4t) + B sin(4t): the 90-degree period in the
 * half-wave-plate angle is fixed by the sweep geometry, so the fit is linear
 * in (C, A, B) and solved through the normal equations.
 */

export interface SinusoidFit {
  offset: number;
  amplitude: number;
  phase: number;
  visibility: number;
  visibilitySigma: number;
  rSquared: number;
}

function solve3(m: number[][], b: number[]): number[] {
  // Gaussian elimination with partial pivoting on a 3x3 system
  const a = m.map((row, i) => [...row, b[i]]);
  for (let col = 0; col < 3; col++) {
    let pivot = col;
    for (let r = col + 1; r < 3; r++) {
      if (Math.abs(a[r][col]) > Math.abs(a[pivot][col])) pivot = r;
    }
    [a[col], a[pivot]] = [a[pivot], a[col]];
    if (a[col][col] === 0) throw new Error("singular design matrix");
    for (let r = 0; r < 3; r++) {
      if (r === col) continue;
      const f = a[r][col] / a[col][col];
      for (let c = col; c < 4; c++) a[r][c] -= f * a[col][c];
    }
  }
  return [a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]];
}

export function fitFixedPeriodSinusoid(thetaRad: number[], values: number[]): SinusoidFit {
  const n = thetaRad.length;
  if (n < 3 || n !== values.length) {
    throw new Error("need at least three matching (theta, value) samples");
  }
  const design = thetaRad.map((t) => [1, Math.cos(4 * t), Math.sin(4 * t)]);
  const mtm = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  const mty = [0, 0, 0];
  for (let i = 0; i < n; i++) {
    for (let r = 0; r < 3; r++) {
      mty[r] += design[i][r] * values[i];
      for (let c = 0; c < 3; c++) mtm[r][c] += design[i][r] * design[i][c];
    }
  }
  const [c0, a, b] = solve3(mtm, mty);
  let ssRes = 0;
  let ssTot = 0;
  const mean = values.reduce((s, v) => s + v, 0) / n;
  for (let i = 0; i < n; i++) {
    const pred = c0 + a * design[i][1] + b * design[i][2];
    ssRes += (values[i] - pred) ** 2;
    ssTot += (values[i] - mean) ** 2;
  }
  const amplitude = Math.hypot(a, b);
  const visibility = c0 > 0 ? amplitude / c0 : 0;
  // 1-sigma via the diagonal of sigma^2 (M^T M)^-1, with the amplitude and
  // offset contributions propagated independently (conservative)
  const dof = Math.max(n - 3, 1);
  const sigma2 = ssRes / dof;
  const varDiag = invDiag3(mtm).map((v) => v * sigma2);
  const varAmp =
    amplitude > 0
      ? ((a / amplitude) ** 2) * varDiag[1] + ((b / amplitude) ** 2) * varDiag[2]
      : varDiag[1];
  const visibilitySigma =
    c0 > 0
      ? Math.sqrt(Math.max(varAmp, 0)) / c0 +
        Math.abs(visibility) * Math.sqrt(Math.max(varDiag[0], 0)) / c0
      : Infinity;
  return {
    offset: c0,
    amplitude,
    phase: Math.atan2(b, a),
    visibility,
    visibilitySigma,
    rSquared: ssTot > 0 ? 1 - ssRes / ssTot : 1,
  };
}

function invDiag3(m: number[][]): number[] {
  const det =
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
    m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
    m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (det === 0) throw new Error("singular design matrix");
  const cof = (r: number, c: number): number => {
    const rows = [0, 1, 2].filter((i) => i !== r);
    const cols = [0, 1, 2].filter((i) => i !== c);
    const minor =
      m[rows[0]][cols[0]] * m[rows[1]][cols[1]] -
      m[rows[0]][cols[1]] * m[rows[1]][cols[0]];
    return ((r + c) % 2 === 0 ? 1 : -1) * minor;
  };
  return [cof(0, 0) / det, cof(1, 1) / det, cof(2, 2) / det];
}
