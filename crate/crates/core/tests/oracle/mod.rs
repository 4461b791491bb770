//! Reference implementations used only by tests.
//!
//! The cubic spline here is assembled as one dense linear system over all
//! piece coefficients and solved by Gaussian elimination, sharing no code
//! with the library's tridiagonal solver.

#![allow(dead_code)]

/// Piecewise cubic `a + b t + c t^2 + d t^3`, `t = x - knots[k]`.
pub struct DenseSpline {
    knots: Vec<f64>,
    coeffs: Vec<[f64; 4]>,
}

impl DenseSpline {
    pub fn not_a_knot(knots: &[f64], values: &[f64]) -> Self {
        let n = knots.len();
        assert!(n >= 2 && n == values.len());
        let coeffs = match n {
            2 => {
                let slope = (values[1] - values[0]) / (knots[1] - knots[0]);
                vec![[values[0], slope, 0.0, 0.0]]
            }
            3 => parabola(knots, values),
            _ => dense_pieces(knots, values),
        };
        Self {
            knots: knots.to_vec(),
            coeffs,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let last = self.coeffs.len() - 1;
        let k = (1..=last).rev().find(|&k| x >= self.knots[k]).unwrap_or(0);
        let t = x - self.knots[k];
        let [a, b, c, d] = self.coeffs[k];
        a + t * (b + t * (c + t * d))
    }
}

fn parabola(x: &[f64], y: &[f64]) -> Vec<[f64; 4]> {
    let s01 = (y[1] - y[0]) / (x[1] - x[0]);
    let s12 = (y[2] - y[1]) / (x[2] - x[1]);
    let c = (s12 - s01) / (x[2] - x[0]);
    let b = s01 - c * (x[1] - x[0]);
    let b1 = b + 2.0 * c * (x[1] - x[0]);
    vec![[y[0], b, c, 0.0], [y[1], b1, c, 0.0]]
}

fn dense_pieces(x: &[f64], y: &[f64]) -> Vec<[f64; 4]> {
    let pieces = x.len() - 1;
    let size = 4 * pieces;
    let mut a = vec![vec![0.0; size]; size];
    let mut rhs = vec![0.0; size];
    let mut row = 0;
    let col = |k: usize, p: usize| 4 * k + p;
    for k in 0..pieces {
        let h = x[k + 1] - x[k];
        a[row][col(k, 0)] = 1.0;
        rhs[row] = y[k];
        row += 1;
        for p in 0..4 {
            a[row][col(k, p)] = h.powi(p as i32);
        }
        rhs[row] = y[k + 1];
        row += 1;
    }
    for k in 0..pieces - 1 {
        let h = x[k + 1] - x[k];
        a[row][col(k, 1)] = 1.0;
        a[row][col(k, 2)] = 2.0 * h;
        a[row][col(k, 3)] = 3.0 * h * h;
        a[row][col(k + 1, 1)] = -1.0;
        row += 1;
        a[row][col(k, 2)] = 2.0;
        a[row][col(k, 3)] = 6.0 * h;
        a[row][col(k + 1, 2)] = -2.0;
        row += 1;
    }
    a[row][col(0, 3)] = 1.0;
    a[row][col(1, 3)] = -1.0;
    row += 1;
    a[row][col(pieces - 2, 3)] = 1.0;
    a[row][col(pieces - 1, 3)] = -1.0;
    row += 1;
    assert_eq!(row, size);
    let sol = gauss(a, rhs);
    sol.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect()
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))
            .unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

/// Evenly spaced samples from `lo` to at most `hi`.
pub fn axis(lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
    let n = ((hi - lo) / pitch + 1e-9).floor() as usize + 1;
    (0..n).map(|i| lo + i as f64 * pitch).collect()
}

/// Tensor-product surface through `values[r][c]` (rows along y) evaluated on
/// every `(xs[i], ys[j])`; the result is indexed `[j][i]`.
pub fn surface_on_grid(
    x_nodes: &[f64],
    y_nodes: &[f64],
    values: &[Vec<f64>],
    xs: &[f64],
    ys: &[f64],
) -> Vec<Vec<f64>> {
    let along_x: Vec<Vec<f64>> = values
        .iter()
        .map(|row| {
            let s = DenseSpline::not_a_knot(x_nodes, row);
            xs.iter().map(|&x| s.eval(x)).collect()
        })
        .collect();
    let mut out = vec![vec![0.0; xs.len()]; ys.len()];
    for i in 0..xs.len() {
        let column: Vec<f64> = along_x.iter().map(|r| r[i]).collect();
        let s = DenseSpline::not_a_knot(y_nodes, &column);
        for (j, &y) in ys.iter().enumerate() {
            out[j][i] = s.eval(y);
        }
    }
    out
}

/// Brute-force thresholded centroid over the node hull sampled at `pitch`.
/// Returns `(x, y, selected count)`.
pub fn centroid(
    x_nodes: &[f64],
    y_nodes: &[f64],
    values: &[Vec<f64>],
    pitch: f64,
    eta: f64,
) -> Option<(f64, f64, usize)> {
    let xs = axis(x_nodes[0], *x_nodes.last().unwrap(), pitch);
    let ys = axis(y_nodes[0], *y_nodes.last().unwrap(), pitch);
    let grid = surface_on_grid(x_nodes, y_nodes, values, &xs, &ys);
    let max = grid.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = eta * max;
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (j, row) in grid.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            if v > threshold {
                sx += xs[i];
                sy += ys[j];
                n += 1;
            }
        }
    }
    (n > 0).then(|| (sx / n as f64, sy / n as f64, n))
}
