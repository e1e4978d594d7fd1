//! Finite-difference stencils and interpolation on uniform grids.
//!
//! All derivative estimates use 4th-order central differences; validity
//! windows shrink by two samples per differentiation so that no stencil
//! ever reaches past the data (no extrapolation).

use nalgebra::DVector;

/// Inclusive index window `[lo, hi]` on which a sampled quantity is valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

impl Window {
    pub fn full(n: usize) -> Self {
        assert!(n > 0);
        Window { lo: 0, hi: n - 1 }
    }

    /// Shrinks the window by `by` on both sides (stencil margin).
    pub fn shrink(self, by: usize) -> Self {
        assert!(self.hi >= self.lo + 2 * by, "window too small for stencil");
        Window {
            lo: self.lo + by,
            hi: self.hi - by,
        }
    }

    pub fn contains(self, k: usize) -> bool {
        k >= self.lo && k <= self.hi
    }

    pub fn len(self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }

    pub fn intersect(self, other: Window) -> Window {
        Window {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

/// 4th-order central first derivative of a scalar series at index `k`.
///
/// Caller guarantees `k` is at least 2 away from both ends.
#[inline]
pub fn d1_scalar_at(v: &[f64], h: f64, k: usize) -> f64 {
    (-v[k + 2] + 8.0 * v[k + 1] - 8.0 * v[k - 1] + v[k - 2]) / (12.0 * h)
}

/// Differentiates a scalar series on `win`; result valid on `win.shrink(2)`.
///
/// Entries outside the returned window are left as 0 and must not be read.
pub fn d1_scalar(v: &[f64], h: f64, win: Window) -> (Vec<f64>, Window) {
    let out_win = win.shrink(2);
    let mut out = vec![0.0; v.len()];
    for k in out_win.iter() {
        out[k] = d1_scalar_at(v, h, k);
    }
    (out, out_win)
}

/// Strided variant of [`d1_scalar`]: the 4th-order stencil is applied with
/// spacing `stride * h`, trading resolution for noise robustness when
/// differentiating already-differentiated sample data. The window shrinks
/// by `2 * stride`.
pub fn d1_scalar_strided(v: &[f64], h: f64, win: Window, stride: usize) -> (Vec<f64>, Window) {
    assert!(stride >= 1);
    let out_win = win.shrink(2 * stride);
    let hh = h * stride as f64;
    let mut out = vec![0.0; v.len()];
    for k in out_win.iter() {
        out[k] = (-v[k + 2 * stride] + 8.0 * v[k + stride] - 8.0 * v[k - stride]
            + v[k - 2 * stride])
            / (12.0 * hh);
    }
    (out, out_win)
}

/// 4th-order central first derivative of a vector series at index `k`.
#[inline]
pub fn d1_vector_at(v: &[DVector<f64>], h: f64, k: usize) -> DVector<f64> {
    let mut out = &v[k - 2] - &v[k + 2];
    out += &v[k + 1] * 8.0;
    out -= &v[k - 1] * 8.0;
    out / (12.0 * h)
}

/// Differentiates a vector series on `win`; result valid on `win.shrink(2)`.
pub fn d1_vector(v: &[DVector<f64>], h: f64, win: Window) -> (Vec<DVector<f64>>, Window) {
    let out_win = win.shrink(2);
    let dim = v[win.lo].len();
    let mut out = vec![DVector::zeros(dim); v.len()];
    for k in out_win.iter() {
        out[k] = d1_vector_at(v, h, k);
    }
    (out, out_win)
}

/// Checks that a grid is uniform within `rel_tol` of its mean step and
/// returns that step.
pub fn uniform_step(grid: &[f64], rel_tol: f64) -> Option<f64> {
    if grid.len() < 2 {
        return None;
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if h <= 0.0 {
        return None;
    }
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - h).abs() > rel_tol * h.abs().max(1e-300) {
            return None;
        }
    }
    Some(h)
}

/// Step size for first derivatives of smooth functions: eps^(1/3) scaled
/// by the coordinate magnitude.
#[inline]
pub fn fd_step(x: f64) -> f64 {
    const CBRT_EPS: f64 = 6.055454452393343e-6; // (f64::EPSILON)^(1/3)
    CBRT_EPS * x.abs().max(1.0)
}

/// Cubic Lagrange interpolation of a sampled scalar series at parameter `t`.
///
/// `grid` must be strictly increasing; `t` inside its range. Uses the four
/// nearest samples (O(h^4) for smooth data).
pub fn interp_cubic(grid: &[f64], values: &[f64], t: f64) -> f64 {
    let n = grid.len();
    assert!(n >= 4);
    // First index with grid[i] >= t, clamped so the 4-point stencil fits.
    let i = grid.partition_point(|&g| g < t);
    let i0 = i.saturating_sub(2).min(n - 4);
    let (x, y) = (&grid[i0..i0 + 4], &values[i0..i0 + 4]);
    let mut acc = 0.0;
    for j in 0..4 {
        let mut l = y[j];
        for m in 0..4 {
            if m != j {
                l *= (t - x[m]) / (x[j] - x[m]);
            }
        }
        acc += l;
    }
    acc
}

/// Cubic Hermite interpolation on a uniform table `(xs, ys, dys)`.
pub fn interp_hermite(xs: &[f64], ys: &[f64], dys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    assert!(n >= 2);
    let i = xs.partition_point(|&g| g < x).clamp(1, n - 1) - 1;
    let h = xs[i + 1] - xs[i];
    let t = ((x - xs[i]) / h).clamp(0.0, 1.0);
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    h00 * ys[i] + h10 * h * dys[i] + h01 * ys[i + 1] + h11 * h * dys[i + 1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn d1_matches_cosine() {
        let n = 101;
        let h = 0.01;
        let v: Vec<f64> = (0..n).map(|k| (k as f64 * h).sin()).collect();
        let (d, win) = d1_scalar(&v, h, Window::full(n));
        assert_eq!(win, Window { lo: 2, hi: n - 3 });
        for k in win.iter() {
            assert_abs_diff_eq!(d[k], (k as f64 * h).cos(), epsilon = 1e-9);
        }
    }

    #[test]
    fn window_shrinks_per_pass() {
        let n = 20;
        let v = vec![1.0; n];
        let (d1, w1) = d1_scalar(&v, 0.1, Window::full(n));
        let (_, w2) = d1_scalar(&d1, 0.1, w1);
        assert_eq!(w2, Window { lo: 4, hi: 15 });
    }

    #[test]
    fn cubic_interp_exact_on_cubics() {
        let grid: Vec<f64> = (0..10).map(|k| k as f64 * 0.5).collect();
        let f = |x: f64| 2.0 * x * x * x - x * x + 3.0;
        let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
        for &t in &[0.1, 1.23, 3.99, 4.4] {
            assert_abs_diff_eq!(interp_cubic(&grid, &vals, t), f(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn hermite_interp_smooth() {
        let xs: Vec<f64> = (0..120).map(|k| k as f64 * 0.04).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| x.sin()).collect();
        let dys: Vec<f64> = xs.iter().map(|&x| x.cos()).collect();
        for &x in &[0.05, 1.234, 4.71] {
            assert_abs_diff_eq!(interp_hermite(&xs, &ys, &dys, x), x.sin(), epsilon = 1e-7);
        }
    }

    #[test]
    fn uniform_step_detects_nonuniform() {
        assert!(uniform_step(&[0.0, 0.1, 0.2, 0.3], 1e-9).is_some());
        assert!(uniform_step(&[0.0, 0.1, 0.25, 0.3], 1e-9).is_none());
    }
}
