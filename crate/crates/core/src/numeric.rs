//! Small numerical utilities shared by the monitor, Crocco and tail-fit
//! modules: finite-difference weights on arbitrary grids, monotone cubic
//! interpolation, and ordinary least squares.

/// Fornberg weights for the `m`-th derivative at `x0` on the stencil `xs`.
///
/// Exact for polynomials up to degree `xs.len() - 1`, so a 5-point stencil
/// gives a 4th-order first derivative on arbitrary (even non-uniform) grids.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    assert!(m < n, "derivative order must be below stencil size");
    let mut c = vec![vec![0.0_f64; m + 1]; n];
    let mut c1 = 1.0_f64;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// First derivative of sampled data on an arbitrary strictly monotone grid,
/// 5-point stencils: centered in the interior, one-sided at the boundaries.
pub fn derivative_5pt(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    assert!(n >= 5, "need at least 5 samples for the 5-point stencil");
    let mut out = vec![0.0; n];
    for i in 0..n {
        let lo = if i < 2 {
            0
        } else if i + 2 >= n {
            n - 5
        } else {
            i - 2
        };
        let stencil = &xs[lo..lo + 5];
        let w = fornberg_weights(xs[i], stencil, 1);
        out[i] = w.iter().zip(&ys[lo..lo + 5]).map(|(wi, yi)| wi * yi).sum();
    }
    out
}

/// Monotone cubic (Fritsch-Carlson) interpolant on a strictly increasing grid.
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    ds: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: &[f64], ys: &[f64]) -> Self {
        let n = xs.len();
        assert_eq!(n, ys.len());
        assert!(n >= 2);
        let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / h[i]).collect();
        let mut ds = vec![0.0; n];
        if n == 2 {
            ds[0] = delta[0];
            ds[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    ds[i] = 0.0;
                } else {
                    // Weighted harmonic mean keeps the interpolant monotone.
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    ds[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            ds[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
            ds[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Pchip { xs: xs.to_vec(), ys: ys.to_vec(), ds }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let i = match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.xs[i + 1] - self.xs[i];
        let s = (x - self.xs[i]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.ys[i] + h10 * h * self.ds[i] + h01 * self.ys[i + 1] + h11 * h * self.ds[i + 1]
    }
}

fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

/// Ordinary least-squares line through (x, y).
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest |y_i - (intercept + slope x_i)|.
    pub max_abs_residual: f64,
}

pub fn ols_line(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - xm) * (x - xm);
        sxy += (x - xm) * (y - ym);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let max_abs_residual = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    LineFit { slope, intercept, max_abs_residual }
}

/// OLS line with trailing-point peeling: while any kept point deviates from
/// the fitted line by more than `tail_tol`, drop the rightmost point and
/// refit (down to `min_points`). Decaying tails contaminated by the
/// neighbouring-shot mode deviate rightward-first, so peeling from the
/// right removes exactly the contaminated range; the global residual test
/// keeps a skewed interim line from stalling the peel.
pub fn ols_line_peeled(xs: &[f64], ys: &[f64], tail_tol: f64, min_points: usize) -> (LineFit, usize) {
    let mut end = xs.len();
    loop {
        let fit = ols_line(&xs[..end], &ys[..end]);
        if end <= min_points || fit.max_abs_residual <= tail_tol {
            return (fit, end);
        }
        end -= 1;
    }
}
