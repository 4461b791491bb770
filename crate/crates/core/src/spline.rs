//! C² cubic splines with not-a-knot end conditions, in one and two
//! dimensions.
//!
//! With two knots the spline is the straight line through them, with three it
//! is the interpolating parabola. From four knots on, the first and last
//! interior knots carry a continuous third derivative.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("need at least 2 knots, got {0}")]
    TooFewKnots(usize),
    #[error("knots must be finite and strictly increasing")]
    BadKnots,
    #[error("got {values} values for {knots} knots")]
    LengthMismatch { knots: usize, values: usize },
}

/// Interpolating cubic spline stored in Hermite form (value and slope at
/// every knot).
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicSpline {
    pub fn not_a_knot(knots: &[f64], values: &[f64]) -> Result<Self, SplineError> {
        check_knots(knots)?;
        if values.len() != knots.len() {
            return Err(SplineError::LengthMismatch {
                knots: knots.len(),
                values: values.len(),
            });
        }
        Ok(Self {
            knots: knots.to_vec(),
            values: values.to_vec(),
            slopes: not_a_knot_slopes(knots, values),
        })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Value at `x`; outside the knot range the end pieces are extended.
    pub fn eval(&self, x: f64) -> f64 {
        let k = segment(&self.knots, x);
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        hermite(
            t,
            h,
            self.values[k],
            self.values[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
        )
    }
}

/// Weights `w[p][j]` such that the spline through `values` evaluates to
/// `sum_j w[p][j] * values[j]` at `points[p]`.
pub fn basis_weights(knots: &[f64], points: &[f64]) -> Result<Vec<Vec<f64>>, SplineError> {
    check_knots(knots)?;
    let n = knots.len();
    let mut unit = vec![0.0; n];
    let columns: Vec<CubicSpline> = (0..n)
        .map(|j| {
            unit.iter_mut().for_each(|u| *u = 0.0);
            unit[j] = 1.0;
            CubicSpline::not_a_knot(knots, &unit)
        })
        .collect::<Result<_, _>>()?;
    Ok(points
        .iter()
        .map(|&x| columns.iter().map(|s| s.eval(x)).collect())
        .collect())
}

/// Tensor-product spline over a rectilinear grid. `values[r][c]` is the
/// sample at `(x_knots[c], y_knots[r])`.
#[derive(Debug, Clone, PartialEq)]
pub struct BicubicSpline {
    x_knots: Vec<f64>,
    y_knots: Vec<f64>,
    rows: Vec<CubicSpline>,
}

impl BicubicSpline {
    pub fn not_a_knot(
        x_knots: &[f64],
        y_knots: &[f64],
        values: &[Vec<f64>],
    ) -> Result<Self, SplineError> {
        check_knots(y_knots)?;
        if values.len() != y_knots.len() {
            return Err(SplineError::LengthMismatch {
                knots: y_knots.len(),
                values: values.len(),
            });
        }
        let rows = values
            .iter()
            .map(|row| CubicSpline::not_a_knot(x_knots, row))
            .collect::<Result<_, _>>()?;
        Ok(Self {
            x_knots: x_knots.to_vec(),
            y_knots: y_knots.to_vec(),
            rows,
        })
    }

    pub fn x_knots(&self) -> &[f64] {
        &self.x_knots
    }

    pub fn y_knots(&self) -> &[f64] {
        &self.y_knots
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let column: Vec<f64> = self.rows.iter().map(|s| s.eval(x)).collect();
        CubicSpline::not_a_knot(&self.y_knots, &column)
            .expect("row count matches y knots")
            .eval(y)
    }
}

fn check_knots(knots: &[f64]) -> Result<(), SplineError> {
    if knots.len() < 2 {
        return Err(SplineError::TooFewKnots(knots.len()));
    }
    if knots.iter().all(|k| k.is_finite()) && knots.windows(2).all(|w| w[0] < w[1]) {
        Ok(())
    } else {
        Err(SplineError::BadKnots)
    }
}

fn segment(knots: &[f64], x: f64) -> usize {
    let last = knots.len() - 2;
    knots.partition_point(|&k| k <= x).saturating_sub(1).min(last)
}

fn hermite(t: f64, h: f64, y0: f64, y1: f64, s0: f64, s1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * y0 + h * (h10 * s0 + h11 * s1) + h01 * y1
}

fn not_a_knot_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let slope: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / dx[i]).collect();
    match n {
        2 => vec![slope[0]; 2],
        3 => {
            // parabola through the three points
            let curvature = (slope[1] - slope[0]) / (x[2] - x[0]);
            x.iter()
                .map(|&xi| slope[0] + curvature * (2.0 * xi - x[0] - x[1]))
                .collect()
        }
        _ => {
            let mut sub = vec![0.0; n];
            let mut diag = vec![0.0; n];
            let mut sup = vec![0.0; n];
            let mut rhs = vec![0.0; n];

            let d = x[2] - x[0];
            diag[0] = dx[1];
            sup[0] = d;
            rhs[0] = ((dx[0] + 2.0 * d) * dx[1] * slope[0] + dx[0] * dx[0] * slope[1]) / d;

            for i in 1..n - 1 {
                sub[i] = dx[i];
                diag[i] = 2.0 * (dx[i - 1] + dx[i]);
                sup[i] = dx[i - 1];
                rhs[i] = 3.0 * (dx[i] * slope[i - 1] + dx[i - 1] * slope[i]);
            }

            let d = x[n - 1] - x[n - 3];
            sub[n - 1] = d;
            diag[n - 1] = dx[n - 3];
            rhs[n - 1] = (dx[n - 2] * dx[n - 2] * slope[n - 3]
                + (2.0 * d + dx[n - 2]) * dx[n - 3] * slope[n - 2])
                / d;

            solve_tridiagonal(&sub, &mut diag, &sup, &mut rhs);
            rhs
        }
    }
}

/// Thomas algorithm; the solution overwrites `rhs`.
fn solve_tridiagonal(sub: &[f64], diag: &mut [f64], sup: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    for i in 1..n {
        let w = sub[i] / diag[i - 1];
        diag[i] -= w * sup[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    rhs[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        rhs[i] = (rhs[i] - sup[i] * rhs[i + 1]) / diag[i];
    }
}
