//! Trapezoid quadrature on uniform grids over `[0, 1]`.

/// `steps + 1` uniformly spaced nodes on `[0, 1]`.
pub fn unit_grid(steps: usize) -> Vec<f64> {
    let steps = steps.max(1);
    (0..=steps).map(|k| k as f64 / steps as f64).collect()
}

/// Trapezoid weights for a uniform grid with `steps` cells on `[0, 1]`.
pub fn trapezoid_weights(steps: usize) -> Vec<f64> {
    let h = 1.0 / steps as f64;
    let mut w = vec![h; steps + 1];
    w[0] = 0.5 * h;
    w[steps] = 0.5 * h;
    w
}

/// Trapezoid rule for samples on a (not necessarily uniform) grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

/// Running trapezoid integral, `out[k] = ∫_{grid[0]}^{grid[k]}`.
pub fn cumulative_trapezoid(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for (t, v) in grid.windows(2).zip(values.windows(2)) {
        acc += 0.5 * (t[1] - t[0]) * (v[0] + v[1]);
        out.push(acc);
    }
    out
}

/// Integral from `grid[0]` to `tau` of the piecewise-linear interpolant of `values`.
///
/// Agrees with [`cumulative_trapezoid`] at the nodes.
pub fn partial_trapezoid(grid: &[f64], values: &[f64], tau: f64) -> f64 {
    let mut acc = 0.0;
    for (t, v) in grid.windows(2).zip(values.windows(2)) {
        if tau >= t[1] {
            acc += 0.5 * (t[1] - t[0]) * (v[0] + v[1]);
        } else {
            if tau > t[0] {
                let dt = tau - t[0];
                let slope = (v[1] - v[0]) / (t[1] - t[0]);
                acc += v[0] * dt + 0.5 * slope * dt * dt;
            }
            break;
        }
    }
    acc
}

/// Linear interpolation of nodal `values` at `tau`, clamped to the grid.
pub fn interpolate(grid: &[f64], values: &[f64], tau: f64) -> f64 {
    let n = grid.len();
    if tau <= grid[0] {
        return values[0];
    }
    if tau >= grid[n - 1] {
        return values[n - 1];
    }
    let k = grid.partition_point(|&t| t <= tau).saturating_sub(1);
    let k = k.min(n - 2);
    let frac = (tau - grid[k]) / (grid[k + 1] - grid[k]);
    values[k] + frac * (values[k + 1] - values[k])
}

/// Second-order finite-difference derivative on a grid (one-sided second order at the ends).
pub fn gradient(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        2 => {
            let d = (values[1] - values[0]) / (grid[1] - grid[0]);
            vec![d, d]
        }
        _ => {
            let mut out = vec![0.0; n];
            for k in 1..n - 1 {
                let hm = grid[k] - grid[k - 1];
                let hp = grid[k + 1] - grid[k];
                out[k] = (hm * hm * (values[k + 1] - values[k])
                    + hp * hp * (values[k] - values[k - 1]))
                    / (hm * hp * (hm + hp));
            }
            let h0 = grid[1] - grid[0];
            let h1 = grid[2] - grid[1];
            out[0] = (h0 + h1) / (h0 * h1) * (values[1] - values[0])
                - h0 / (h1 * (h0 + h1)) * (values[2] - values[0]);
            let a = grid[n - 2] - grid[n - 3];
            let b = grid[n - 1] - grid[n - 2];
            out[n - 1] = (a + b) / (a * b) * (values[n - 1] - values[n - 2])
                - b / (a * (a + b)) * (values[n - 1] - values[n - 3]);
            out
        }
    }
}
